#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>

#include "support.hpp"
#include "wisdomnet/data.hpp"

using namespace wisdomnet;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

// Tent-filter form of bilinear sampling: every source pixel weighted by
// max(0, 1 - |distance|) from the clamped sample point.
double tent_sample(const RawImage& img, std::size_t c, double sy, double sx) {
  sy = std::clamp(sy, 0.0, static_cast<double>(img.height - 1));
  sx = std::clamp(sx, 0.0, static_cast<double>(img.width - 1));
  double acc = 0.0;
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) {
      const double w = std::max(0.0, 1.0 - std::abs(sy - static_cast<double>(y))) *
                       std::max(0.0, 1.0 - std::abs(sx - static_cast<double>(x)));
      acc += w * img.pixels[(y * img.width + x) * img.channels + (img.channels == 1 ? 0 : c)];
    }
  return acc;
}

double mean_brightness(const Tensor<float>& t) {
  return std::accumulate(t.data().begin(), t.data().end(), 0.0) / static_cast<double>(t.size());
}

Dataset corpus(std::map<ClassTag, std::size_t> counts, std::size_t side, std::uint64_t seed,
               double noise = 0.0) {
  SyntheticSpec spec;
  spec.counts = std::move(counts);
  spec.input_side = side;
  spec.noise = noise;
  return generate_synthetic_corpus(spec, seed);
}

}  // namespace

TEST_CASE("one_hot follows the label convention") {
  CHECK(one_hot(0) == std::array<float, 2>{1.0f, 0.0f});
  CHECK(one_hot(1) == std::array<float, 2>{0.0f, 1.0f});
  CHECK_THROWS_AS(one_hot(2), Error);
  CHECK_THROWS_AS(one_hot(-1), Error);
}

TEST_CASE("class tags round-trip through text") {
  for (ClassTag t : {ClassTag::Covid, ClassTag::Healthy, ClassTag::Bacterial, ClassTag::Viral,
                     ClassTag::Ards, ClassTag::NonArds})
    CHECK(parse_class_tag(to_string(t)) == t);
  CHECK_THROWS_AS(parse_class_tag("flu"), Error);
}

TEST_CASE("ascii and binary graymaps decode to unit range") {
  const RawImage a = decode_pnm(bytes_of("P2\n# comment\n3 2\n4\n0 1 2\n3 4 0\n"));
  CHECK(a.width == 3);
  CHECK(a.height == 2);
  CHECK(a.channels == 1);
  CHECK(a.pixels == std::vector<float>{0.0f, 0.25f, 0.5f, 0.75f, 1.0f, 0.0f});

  std::string p5 = "P5 2 1 255\n";
  p5 += static_cast<char>(0);
  p5 += static_cast<char>(255);
  CHECK(decode_pnm(bytes_of(p5)).pixels == std::vector<float>{0.0f, 1.0f});

  std::string wide = "P5\n1 1\n65535\n";
  wide += static_cast<char>(0x80);
  wide += static_cast<char>(0x00);
  CHECK(decode_pnm(bytes_of(wide)).pixels[0] == doctest::Approx(32768.0 / 65535.0));
}

TEST_CASE("pixmaps and bitmaps decode") {
  std::string p6 = "P6 1 1 255\n";
  p6 += std::string{static_cast<char>(255), static_cast<char>(0), static_cast<char>(51)};
  const RawImage rgb = decode_pnm(bytes_of(p6));
  CHECK(rgb.channels == 3);
  CHECK(rgb.pixels[0] == 1.0f);
  CHECK(rgb.pixels[1] == 0.0f);
  CHECK(rgb.pixels[2] == doctest::Approx(0.2));

  CHECK(decode_pnm(bytes_of("P3 1 1 10 10 5 0")).pixels == std::vector<float>{1.0f, 0.5f, 0.0f});
  // In bitmaps 1 is black.
  CHECK(decode_pnm(bytes_of("P1 3 1 1 0 1")).pixels == std::vector<float>{0.0f, 1.0f, 0.0f});
  std::string p4 = "P4 3 1\n";
  p4 += static_cast<char>(0b01000000);
  CHECK(decode_pnm(bytes_of(p4)).pixels == std::vector<float>{1.0f, 0.0f, 1.0f});
}

TEST_CASE("malformed anymaps are rejected") {
  CHECK(code_of([] { decode_pnm(bytes_of("P7 1 1 255\n")); }) == ErrorCode::Format);
  CHECK(code_of([] { decode_pnm(bytes_of("P5 2 2 255\nab")); }) == ErrorCode::Format);
  CHECK(code_of([] { decode_pnm(bytes_of("P2 2 1 255 1")); }) == ErrorCode::Format);
  CHECK(code_of([] { decode_pnm(bytes_of("P2 1 1 10 11")); }) == ErrorCode::Format);
  CHECK(code_of([] { decode_pnm(bytes_of("P2 0 1 10")); }) == ErrorCode::Format);
}

TEST_CASE("png files decode through libpng") {
  const unsigned char png[] = {
      0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52,
      0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02, 0x08, 0x02, 0x00, 0x00, 0x00, 0xfd, 0xd4, 0x9a,
      0x73, 0x00, 0x00, 0x00, 0x16, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0xf8, 0xcf, 0xc0, 0xc0,
      0xf0, 0x9f, 0x81, 0x91, 0x81, 0xe1, 0xff, 0xff, 0xff, 0x0c, 0x00, 0x1e, 0xf6, 0x04, 0xfd, 0x09,
      0xed, 0x34, 0x3e, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};
  wntest::TempDir dir("wn_png");
  const auto path = dir.path / "rgb.png";
  std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(png), sizeof png);
  const RawImage img = decode_image(path);
  CHECK(img.width == 2);
  CHECK(img.height == 2);
  CHECK(img.channels == 3);
  CHECK(img.pixels == std::vector<float>{1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 1});

  std::ofstream(dir.path / "bad.png", std::ios::binary).write(reinterpret_cast<const char*>(png), 20);
  CHECK(code_of([&] { decode_image(dir.path / "bad.png"); }) == ErrorCode::Format);
  CHECK(code_of([&] { decode_image(dir.path / "missing.png"); }) == ErrorCode::Io);
}

TEST_CASE("bilinear resize matches the tent-filter oracle") {
  Rng rng(2);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto [w, h, c, side] : std::vector<std::array<std::size_t, 4>>{
           {5, 7, 1, 4}, {9, 9, 3, 16}, {16, 16, 3, 16}, {3, 2, 3, 8}, {40, 33, 1, 12}}) {
    RawImage img;
    img.width = w;
    img.height = h;
    img.channels = c;
    img.pixels.resize(w * h * c);
    for (float& v : img.pixels) v = u(rng);
    const Tensor<float> out = resize_bilinear(img, side);
    REQUIRE(out.shape() == Shape{side, side, 3});
    for (std::size_t y = 0; y < side; ++y)
      for (std::size_t x = 0; x < side; ++x)
        for (std::size_t ch = 0; ch < 3; ++ch) {
          const double sy = (y + 0.5) * static_cast<double>(h) / side - 0.5;
          const double sx = (x + 0.5) * static_cast<double>(w) / side - 0.5;
          CHECK(out.at(y, x, ch) == doctest::Approx(tent_sample(img, ch, sy, sx)).epsilon(1e-5));
        }
  }
}

TEST_CASE("same-size resize is the identity and halving averages blocks") {
  RawImage img;
  img.width = img.height = 4;
  img.channels = 1;
  img.pixels.resize(16);
  std::iota(img.pixels.begin(), img.pixels.end(), 0.0f);
  for (float& v : img.pixels) v /= 15.0f;
  const Tensor<float> same = resize_bilinear(img, 4);
  for (std::size_t i = 0; i < 16; ++i) CHECK(same.at(i / 4, i % 4, 2) == img.pixels[i]);
  const Tensor<float> half = resize_bilinear(img, 2);
  CHECK(half.at(0, 0, 0) == doctest::Approx((0 + 1 + 4 + 5) / 60.0));
  CHECK(half.at(1, 1, 1) == doctest::Approx((10 + 11 + 14 + 15) / 60.0));
}

TEST_CASE("negative composition uses the 40/30/30 mix") {
  CHECK(negative_class_counts(10) == std::array<std::size_t, 3>{4, 3, 3});
  CHECK(negative_class_counts(0) == std::array<std::size_t, 3>{0, 0, 0});
  const auto c7 = negative_class_counts(7);
  CHECK(c7[0] + c7[1] + c7[2] == 7);

  const Dataset pool = corpus({{ClassTag::Healthy, 6}, {ClassTag::Bacterial, 5}, {ClassTag::Viral, 5}}, 8, 1);
  std::vector<Sample> h, b, v;
  for (const Sample& s : pool.samples)
    (s.tag == ClassTag::Healthy ? h : s.tag == ClassTag::Bacterial ? b : v).push_back(s);
  Rng r1(5), r2(5);
  const auto mixed = compose_negative_class(h, b, v, 10, r1);
  const auto again = compose_negative_class(h, b, v, 10, r2);
  REQUIRE(mixed.size() == 10);
  std::map<ClassTag, std::size_t> counts;
  for (std::size_t i = 0; i < mixed.size(); ++i) {
    ++counts[mixed[i].tag];
    CHECK(mixed[i].label_index() == kLabelNegative);
    CHECK(mixed[i].source_id == again[i].source_id);
  }
  CHECK(counts[ClassTag::Healthy] == 4);
  CHECK(counts[ClassTag::Bacterial] == 3);
  CHECK(counts[ClassTag::Viral] == 3);
  Rng r3(5);
  CHECK(compose_negative_class(h, b, v, 0, r3).empty());
  Rng r4(5);
  CHECK_THROWS_AS(compose_negative_class(h, b, v, 20, r4), Error);
}

TEST_CASE("stratified split preserves class balance") {
  const Dataset ds = corpus({{ClassTag::Covid, 5}, {ClassTag::Healthy, 5}}, 8, 2);
  const auto [train, test] = split_dataset(ds, 0.5, 11);
  CHECK(train.size() == 5);
  CHECK(test.size() == 5);
  const auto tc = train.class_counts();
  CHECK(tc.at(ClassTag::Covid) + tc.at(ClassTag::Healthy) == 5);
  CHECK(std::abs(static_cast<long>(tc.at(ClassTag::Covid)) - 2.5) <= 0.5);

  std::vector<std::string> ids;
  for (const Sample& s : train.samples) ids.push_back(s.source_id);
  for (const Sample& s : test.samples) ids.push_back(s.source_id);
  std::sort(ids.begin(), ids.end());
  std::vector<std::string> all;
  for (const Sample& s : ds.samples) all.push_back(s.source_id);
  std::sort(all.begin(), all.end());
  CHECK(ids == all);

  const auto [train2, test2] = split_dataset(ds, 0.5, 11);
  for (std::size_t i = 0; i < train.size(); ++i)
    CHECK(train.samples[i].source_id == train2.samples[i].source_id);
  CHECK_THROWS_AS(split_dataset(ds, 1.0, 1), Error);
  CHECK_THROWS_AS(split_dataset(ds, 0.0, 1), Error);
}

TEST_CASE("every tabulated train fraction yields a valid split") {
  const Dataset ds = corpus({{ClassTag::Covid, 12}, {ClassTag::Healthy, 8}, {ClassTag::Bacterial, 6},
                             {ClassTag::Viral, 6}, {ClassTag::Ards, 8}},
                            8, 3);
  for (double f : {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8}) {
    CAPTURE(f);
    const auto [train, test] = split_dataset(ds, f, 4);
    CHECK(train.size() == static_cast<std::size_t>(std::llround(f * 40)));
    CHECK(train.size() + test.size() == ds.size());
    CHECK(train.split.train_fraction == f);
    for (const auto& [tag, n] : ds.class_counts()) {
      const std::size_t got = train.class_counts().count(tag) ? train.class_counts().at(tag) : 0;
      CHECK(got >= static_cast<std::size_t>(std::floor(f * n + 1e-9)));
      CHECK(got <= static_cast<std::size_t>(std::ceil(f * n - 1e-9)));
    }
    CHECK(!covid_task(test).empty());
  }
}

TEST_CASE("task views relabel samples") {
  const Dataset ds = corpus({{ClassTag::Covid, 2}, {ClassTag::Ards, 2}, {ClassTag::Viral, 2}}, 8, 5);
  const Dataset covid = covid_task(ds);
  CHECK(covid.size() == 6);
  for (const Sample& s : covid.samples)
    CHECK(s.label_index() == (s.tag == ClassTag::Viral ? kLabelNegative : kLabelPositive));
  const Dataset ards = ards_task(ds);
  CHECK(ards.size() == 4);
  for (const Sample& s : ards.samples) {
    CHECK((s.tag == ClassTag::Ards || s.tag == ClassTag::NonArds));
    CHECK(s.label_index() == (s.tag == ClassTag::Ards ? kLabelArds : kLabelNonArds));
  }
}

TEST_CASE("noise-free synthetic classes separate by mean brightness") {
  const Dataset ds = corpus({{ClassTag::Covid, 15}, {ClassTag::Healthy, 10}, {ClassTag::Bacterial, 10},
                             {ClassTag::Viral, 10}, {ClassTag::Ards, 10}},
                            32, 6);
  const Dataset task = covid_task(ds);
  // Threshold oracle: a cut exists iff the dimmest positive beats the brightest negative.
  double dimmest_positive = 1e9, brightest_negative = -1e9;
  for (const Sample& s : task.samples) {
    const double m = mean_brightness(s.image);
    if (s.label_index() == kLabelPositive)
      dimmest_positive = std::min(dimmest_positive, m);
    else
      brightest_negative = std::max(brightest_negative, m);
  }
  CHECK(dimmest_positive > brightest_negative);

  std::map<ClassTag, double> mean;
  for (const Sample& s : ds.samples) mean[s.tag] += mean_brightness(s.image);
  CHECK(mean[ClassTag::Healthy] / 10 < mean[ClassTag::Covid] / 15);
  CHECK(mean[ClassTag::Covid] / 15 < mean[ClassTag::Ards] / 10);
}

TEST_CASE("synthetic corpus is deterministic and honours counts") {
  const std::map<ClassTag, std::size_t> counts{{ClassTag::Covid, 3}, {ClassTag::Healthy, 2}};
  for (double noise : {0.0, 0.6}) {
    const Dataset a = corpus(counts, 16, 9, noise);
    const Dataset b = corpus(counts, 16, 9, noise);
    REQUIRE(a.size() == 5);
    CHECK(a.class_counts() == counts);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a.samples[i].image == b.samples[i].image);
      for (float v : a.samples[i].image.data()) REQUIRE((v >= 0.0f && v <= 1.0f));
    }
  }
  CHECK(!(corpus(counts, 16, 9, 0.6).samples[0].image == corpus(counts, 16, 10, 0.6).samples[0].image));
}

TEST_CASE("corpus directories round-trip through the manifest") {
  const Dataset ds = corpus({{ClassTag::Covid, 3}, {ClassTag::Healthy, 2}, {ClassTag::Ards, 1}}, 16, 7);
  const auto [train, test] = split_dataset(ds, 0.5, 1);
  wntest::TempDir dir("wn_corpus");
  write_corpus(train, test, dir.path);
  const auto records = read_manifest(dir.path / "manifest.tsv");
  CHECK(records.size() == ds.size());

  const Dataset back_train = load_manifest_dataset(dir.path / "manifest.tsv", 16, "train");
  const Dataset back_all = load_manifest_dataset(dir.path / "manifest.tsv", 16);
  CHECK(back_train.size() == train.size());
  CHECK(back_all.size() == ds.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    CHECK(back_train.samples[i].tag == train.samples[i].tag);
    CHECK(back_train.samples[i].label == train.samples[i].label);
    // 8-bit storage quantises each pixel by at most half a level.
    for (std::size_t p = 0; p < train.samples[i].image.size(); ++p)
      REQUIRE(std::abs(back_train.samples[i].image[p] - train.samples[i].image[p]) <= 0.5 / 255 + 1e-6);
  }
  CHECK(load_manifest_dataset(dir.path / "manifest.tsv", 16, "test").size() == test.size());
  CHECK(code_of([&] { read_manifest(dir.path / "nope.tsv"); }) == ErrorCode::Io);

  std::ofstream(dir.path / "broken.tsv") << "#path\tlabel\tclass_tag\tsplit\nimg.pgm\t7\tcovid\ttrain\n";
  CHECK(code_of([&] { read_manifest(dir.path / "broken.tsv"); }) == ErrorCode::Format);
}
