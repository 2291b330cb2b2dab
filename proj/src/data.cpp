#include "wisdomnet/data.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "wisdomnet/member_network.hpp"

namespace wisdomnet {

std::string_view to_string(ClassTag tag) {
  switch (tag) {
    case ClassTag::Covid: return "covid";
    case ClassTag::Healthy: return "healthy";
    case ClassTag::Bacterial: return "bacterial";
    case ClassTag::Viral: return "viral";
    case ClassTag::Ards: return "ards";
    case ClassTag::NonArds: return "non_ards";
  }
  return "unknown";
}

ClassTag parse_class_tag(std::string_view text) {
  for (ClassTag t : {ClassTag::Covid, ClassTag::Healthy, ClassTag::Bacterial, ClassTag::Viral,
                     ClassTag::Ards, ClassTag::NonArds})
    if (to_string(t) == text) return t;
  fail(ErrorCode::InvalidArgument, "unknown class tag '" + std::string(text) + "'");
}

std::array<float, 2> one_hot(int label) {
  require(label == 0 || label == 1, ErrorCode::InvalidArgument,
          "label must be 0 or 1, got " + std::to_string(label));
  return label == 0 ? std::array<float, 2>{1.0f, 0.0f} : std::array<float, 2>{0.0f, 1.0f};
}

std::map<ClassTag, std::size_t> Dataset::class_counts() const {
  std::map<ClassTag, std::size_t> counts;
  for (const Sample& s : samples) ++counts[s.tag];
  return counts;
}

// ---------------------------------------------------------------------------
// Decoding

namespace {

class PnmHeader {
 public:
  PnmHeader(std::span<const std::uint8_t> bytes, const std::string& origin)
      : bytes_(bytes), origin_(origin) {}

  std::size_t number() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
      fail(ErrorCode::Format, origin_ + ": malformed portable anymap header");
    std::size_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (1u << 24)) fail(ErrorCode::Format, origin_ + ": header value too large");
    }
    return v;
  }

  std::uint8_t bit_char() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) fail(ErrorCode::Format, origin_ + ": truncated bitmap data");
    return bytes_[pos_++];
  }

  // Exactly one whitespace byte separates the header from binary data.
  void end_header() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      fail(ErrorCode::Format, origin_ + ": missing separator before raster data");
    ++pos_;
  }

  std::span<const std::uint8_t> rest() const { return bytes_.subspan(pos_); }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
  const std::string& origin_;
};

}  // namespace

RawImage decode_pnm(std::span<const std::uint8_t> bytes, const std::string& origin) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] < '1' || bytes[1] > '6')
    fail(ErrorCode::Format, origin + ": not a portable anymap");
  const int kind = bytes[1] - '0';
  PnmHeader h(bytes, origin);
  RawImage img;
  img.width = h.number();
  img.height = h.number();
  if (img.width == 0 || img.height == 0) fail(ErrorCode::Format, origin + ": zero image extent");
  const bool bitmap = kind == 1 || kind == 4;
  const std::size_t maxval = bitmap ? 1 : h.number();
  if (maxval == 0 || maxval > 65535) fail(ErrorCode::Format, origin + ": invalid maxval");
  img.channels = (kind == 3 || kind == 6) ? 3 : 1;
  const std::size_t n = img.width * img.height * img.channels;
  img.pixels.resize(n);
  const float scale = 1.0f / static_cast<float>(maxval);

  if (kind == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t c = h.bit_char();
      if (c != '0' && c != '1') fail(ErrorCode::Format, origin + ": invalid bitmap digit");
      img.pixels[i] = c == '1' ? 0.0f : 1.0f;  // 1 is black
    }
  } else if (kind == 2 || kind == 3) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t v = h.number();
      if (v > maxval) fail(ErrorCode::Format, origin + ": sample exceeds maxval");
      img.pixels[i] = static_cast<float>(v) * scale;
    }
  } else if (kind == 4) {
    h.end_header();
    const std::size_t row_bytes = (img.width + 7) / 8;
    auto data = h.rest();
    if (data.size() < row_bytes * img.height)
      fail(ErrorCode::Format, origin + ": truncated bitmap data");
    for (std::size_t y = 0; y < img.height; ++y)
      for (std::size_t x = 0; x < img.width; ++x) {
        const bool black = (data[y * row_bytes + x / 8] >> (7 - x % 8)) & 1;
        img.pixels[y * img.width + x] = black ? 0.0f : 1.0f;
      }
  } else {
    h.end_header();
    const std::size_t width = maxval > 255 ? 2 : 1;
    auto data = h.rest();
    if (data.size() < n * width) fail(ErrorCode::Format, origin + ": truncated raster data");
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t v = width == 2 ? (std::size_t{data[2 * i]} << 8) | data[2 * i + 1] : data[i];
      if (v > maxval) fail(ErrorCode::Format, origin + ": sample exceeds maxval");
      img.pixels[i] = static_cast<float>(v) * scale;
    }
  }
  return img;
}

RawImage decode_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str()))
    fail(ErrorCode::Format, path.string() + ": " + png.message);
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    fail(ErrorCode::Format, path.string() + ": " + msg);
  }
  RawImage img;
  img.width = png.width;
  img.height = png.height;
  img.channels = color ? 3 : 1;
  img.pixels.resize(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) img.pixels[i] = static_cast<float>(buf[i]) / 255.0f;
  return img;
}

RawImage decode_image(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_file_bytes(path);
  } catch (const Error&) {
    fail(ErrorCode::Io, path.string() + ": unreadable image file");
  }
  static constexpr std::uint8_t kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(kPngSig, kPngSig + 8, bytes.begin())) return decode_png(path);
  return decode_pnm(bytes, path.string());
}

Tensor<float> resize_bilinear(const RawImage& image, std::size_t target_side) {
  require(target_side > 0, ErrorCode::InvalidArgument, "target side must be positive");
  require(image.channels == 1 || image.channels == 3, ErrorCode::InvalidArgument,
          "image must have 1 or 3 channels");
  require(image.pixels.size() == image.width * image.height * image.channels,
          ErrorCode::DimensionMismatch, "raw image buffer size mismatch");
  const std::size_t H = image.height, W = image.width, C = image.channels;
  Tensor<float> out({target_side, target_side, 3});
  const double sy_scale = static_cast<double>(H) / static_cast<double>(target_side);
  const double sx_scale = static_cast<double>(W) / static_cast<double>(target_side);
  auto coord = [](std::size_t o, double scale, std::size_t extent, std::size_t& i0,
                  std::size_t& i1) {
    double s = (static_cast<double>(o) + 0.5) * scale - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(extent - 1));
    i0 = static_cast<std::size_t>(std::floor(s));
    i1 = std::min(i0 + 1, extent - 1);
    return s - static_cast<double>(i0);
  };
  for (std::size_t oy = 0; oy < target_side; ++oy) {
    std::size_t y0, y1;
    const double wy = coord(oy, sy_scale, H, y0, y1);
    for (std::size_t ox = 0; ox < target_side; ++ox) {
      std::size_t x0, x1;
      const double wx = coord(ox, sx_scale, W, x0, x1);
      for (std::size_t c = 0; c < 3; ++c) {
        const std::size_t sc = C == 1 ? 0 : c;
        auto px = [&](std::size_t y, std::size_t x) {
          return static_cast<double>(image.pixels[(y * W + x) * C + sc]);
        };
        const double top = px(y0, x0) * (1 - wx) + px(y0, x1) * wx;
        const double bot = px(y1, x0) * (1 - wx) + px(y1, x1) * wx;
        out.at(oy, ox, c) = static_cast<float>(std::clamp(top * (1 - wy) + bot * wy, 0.0, 1.0));
      }
    }
  }
  return out;
}

Tensor<float> load_image(const std::filesystem::path& path, std::size_t target_side) {
  return resize_bilinear(decode_image(path), target_side);
}

void write_pgm(const std::filesystem::path& path, const Tensor<float>& image) {
  require(image.rank() == 3, ErrorCode::DimensionMismatch, "write_pgm expects H x W x C");
  const std::size_t H = image.extent(0), W = image.extent(1);
  std::string out = "P5\n" + std::to_string(W) + " " + std::to_string(H) + "\n255\n";
  out.reserve(out.size() + H * W);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      const float v = std::clamp(image.at(y, x, 0), 0.0f, 1.0f);
      out.push_back(static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0f))));
    }
  write_file_atomic(path, out);
}

// ---------------------------------------------------------------------------
// Composition and splits

namespace {

/// Largest-remainder apportionment; ties go to the earlier bucket.
template <std::size_t N>
std::array<std::size_t, N> apportion(const std::array<double, N>& shares, std::size_t total) {
  std::array<std::size_t, N> out{};
  std::array<double, N> rem{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < N; ++i) {
    const double exact = shares[i] * static_cast<double>(total);
    out[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[i] = exact - static_cast<double>(out[i]);
    assigned += out[i];
  }
  std::array<std::size_t, N> order{};
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rem[a] > rem[b] + 1e-12; });
  for (std::size_t i = 0; assigned < total && i < N; ++i, ++assigned) ++out[order[i]];
  return out;
}

}  // namespace

std::array<std::size_t, 3> negative_class_counts(std::size_t total) {
  return apportion<3>({0.4, 0.3, 0.3}, total);
}

std::vector<Sample> compose_negative_class(const std::vector<Sample>& healthy,
                                           const std::vector<Sample>& bacterial,
                                           const std::vector<Sample>& viral, std::size_t total,
                                           Rng& rng) {
  const auto counts = negative_class_counts(total);
  const std::array<const std::vector<Sample>*, 3> sources = {&healthy, &bacterial, &viral};
  const std::array<const char*, 3> names = {"healthy", "bacterial", "viral"};
  std::vector<Sample> out;
  out.reserve(total);
  for (std::size_t s = 0; s < 3; ++s) {
    require(sources[s]->size() >= counts[s], ErrorCode::InvalidArgument,
            std::string("compose_negative_class: need ") + std::to_string(counts[s]) + " " +
                names[s] + " samples, have " + std::to_string(sources[s]->size()));
    std::vector<std::size_t> idx(sources[s]->size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < counts[s]; ++i) {
      Sample copy = (*sources[s])[idx[i]];
      copy.label = one_hot(kLabelNegative);
      out.push_back(std::move(copy));
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double train_fraction,
                                          std::uint64_t seed) {
  require(train_fraction > 0.0 && train_fraction < 1.0, ErrorCode::InvalidArgument,
          "train fraction must lie strictly between 0 and 1");
  std::map<ClassTag, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < dataset.size(); ++i) groups[dataset.samples[i].tag].push_back(i);

  const std::size_t n = dataset.size();
  const std::size_t target = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  struct Quota {
    ClassTag tag;
    std::size_t take;
    double remainder;
  };
  std::vector<Quota> quotas;
  std::size_t assigned = 0;
  for (const auto& [tag, members] : groups) {
    const double exact = train_fraction * static_cast<double>(members.size());
    const auto take = static_cast<std::size_t>(std::floor(exact + 1e-9));
    quotas.push_back({tag, take, exact - static_cast<double>(take)});
    assigned += take;
  }
  std::vector<std::size_t> order(quotas.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return quotas[a].remainder > quotas[b].remainder + 1e-12;
  });
  for (std::size_t i = 0; assigned < target && i < order.size(); ++i) {
    Quota& q = quotas[order[i]];
    if (q.take < groups[q.tag].size()) {
      ++q.take;
      ++assigned;
    }
  }

  std::vector<bool> in_train(n, false);
  for (const Quota& q : quotas) {
    std::vector<std::size_t> idx = groups[q.tag];
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(q.tag) + 1));
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < q.take; ++i) in_train[idx[i]] = true;
  }

  Dataset train, test;
  for (std::size_t i = 0; i < n; ++i)
    (in_train[i] ? train : test).samples.push_back(dataset.samples[i]);
  train.split = test.split = {train_fraction, 1.0 - train_fraction};
  return {std::move(train), std::move(test)};
}

Dataset covid_task(const Dataset& dataset) {
  Dataset out;
  out.split = dataset.split;
  for (const Sample& s : dataset.samples) {
    if (s.tag == ClassTag::NonArds) continue;
    Sample copy = s;
    const bool positive = s.tag == ClassTag::Covid || s.tag == ClassTag::Ards;
    copy.label = one_hot(positive ? kLabelPositive : kLabelNegative);
    out.samples.push_back(std::move(copy));
  }
  return out;
}

Dataset ards_task(const Dataset& dataset) {
  Dataset out;
  out.split = dataset.split;
  for (const Sample& s : dataset.samples) {
    if (s.tag != ClassTag::Covid && s.tag != ClassTag::Ards && s.tag != ClassTag::NonArds) continue;
    Sample copy = s;
    const bool ards = s.tag == ClassTag::Ards;
    copy.tag = ards ? ClassTag::Ards : ClassTag::NonArds;
    copy.label = one_hot(ards ? kLabelArds : kLabelNonArds);
    out.samples.push_back(std::move(copy));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpus

namespace {

constexpr std::size_t kGrid = 8;
constexpr float kBody = 0.45f;
constexpr float kLung = 0.15f;

bool is_lung_cell(std::size_t row, std::size_t col) {
  return row >= 1 && row + 1 < kGrid && (col == 1 || col == 2 || col == 5 || col == 6);
}

std::vector<std::pair<std::size_t, std::size_t>> lung_cells() {
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t r = 0; r < kGrid; ++r)
    for (std::size_t c = 0; c < kGrid; ++c)
      if (is_lung_cell(r, c)) cells.emplace_back(r, c);
  return cells;
}

struct Patch {
  std::size_t row, col;
  float value;
};

struct ClassLook {
  double fraction;  // of lung cells carrying a patch
  float value;
};

ClassLook look_for(ClassTag tag) {
  switch (tag) {
    case ClassTag::Covid:
    case ClassTag::NonArds: return {0.25, 0.85f};
    case ClassTag::Ards: return {0.5, 0.9f};
    case ClassTag::Viral: return {4.0 / 24.0, 0.35f};
    case ClassTag::Bacterial: return {3.0 / 24.0, 0.55f};
    case ClassTag::Healthy: return {0.0, 0.0f};
  }
  return {0.0, 0.0f};
}

Tensor<float> render(std::size_t side, const std::vector<Patch>& patches, double noise,
                     float exposure, Rng& rng) {
  std::array<std::array<float, kGrid>, kGrid> cell{};
  for (std::size_t r = 0; r < kGrid; ++r)
    for (std::size_t c = 0; c < kGrid; ++c) cell[r][c] = is_lung_cell(r, c) ? kLung : kBody;
  for (const Patch& p : patches) cell[p.row][p.col] = p.value;

  Tensor<float> img({side, side, 3});
  std::normal_distribution<double> pixel(0.0, 0.25 * noise);
  for (std::size_t y = 0; y < side; ++y) {
    const std::size_t r = y * kGrid / side;
    for (std::size_t x = 0; x < side; ++x) {
      const std::size_t c = x * kGrid / side;
      double v = cell[r][c] + exposure;
      if (noise > 0.0) v += pixel(rng);
      const float f = static_cast<float>(std::clamp(v, 0.0, 1.0));
      img.at(y, x, 0) = img.at(y, x, 1) = img.at(y, x, 2) = f;
    }
  }
  return img;
}

}  // namespace

Dataset generate_synthetic_corpus(const SyntheticSpec& spec, std::uint64_t seed) {
  require(spec.input_side >= 8, ErrorCode::InvalidArgument, "synthetic input_side must be >= 8");
  require(spec.noise >= 0.0, ErrorCode::InvalidArgument, "noise must be non-negative");
  const auto cells = lung_cells();
  const double n_cells = static_cast<double>(cells.size());
  Dataset ds;
  for (const auto& [tag, count] : spec.counts) {
    for (std::size_t i = 0; i < count; ++i) {
      Rng rng(derive_seed(seed, (static_cast<std::uint64_t>(tag) << 32) | i));
      const ClassLook look = look_for(tag);
      std::vector<Patch> patches;
      std::normal_distribution<double> jitter(0.0, 1.0);

      if (tag == ClassTag::Bacterial) {
        // Lobar consolidation: a vertical run of cells in the lower part of one lung.
        const std::array<std::size_t, 4> cols = {1, 2, 5, 6};
        std::uniform_int_distribution<std::size_t> pick(0, cols.size() - 1);
        const std::size_t col = cols[pick(rng)];
        const auto run = static_cast<std::size_t>(std::lround(look.fraction * n_cells));
        for (std::size_t k = 0; k < run; ++k)
          patches.push_back({kGrid - 2 - k, col, look.value});
      } else {
        double frac = look.fraction;
        if (spec.noise > 0.0 && frac > 0.0) frac += 0.25 * spec.noise * jitter(rng) * frac;
        auto n = static_cast<std::ptrdiff_t>(std::lround(std::clamp(frac, 0.0, 1.0) * n_cells));
        std::vector<std::size_t> idx(cells.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        float value = look.value;
        if (spec.noise > 0.0) value = static_cast<float>(value + 0.1 * spec.noise * jitter(rng));
        for (std::ptrdiff_t k = 0; k < n; ++k)
          patches.push_back({cells[idx[k]].first, cells[idx[k]].second, value});
      }
      // Noise also plants confounding bright patches in clear lungs.
      if (spec.noise > 0.0 && tag != ClassTag::Covid && tag != ClassTag::Ards &&
          tag != ClassTag::NonArds) {
        const auto extra = static_cast<std::size_t>(
            std::lround(std::abs(jitter(rng)) * spec.noise * 0.15 * n_cells));
        std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
        for (std::size_t k = 0; k < extra; ++k) {
          const auto& cell = cells[pick(rng)];
          patches.push_back({cell.first, cell.second, 0.85f});
        }
      }
      const float exposure =
          spec.noise > 0.0 ? static_cast<float>(0.05 * spec.noise * jitter(rng)) : 0.0f;

      Sample s;
      s.image = render(spec.input_side, patches, spec.noise, exposure, rng);
      s.tag = tag;
      const bool positive = tag == ClassTag::Covid || tag == ClassTag::Ards;
      if (tag == ClassTag::NonArds)
        s.label = one_hot(kLabelNonArds);
      else
        s.label = one_hot(positive ? kLabelPositive : kLabelNegative);
      s.source_id = "synthetic-" + std::string(to_string(tag)) + "-" + std::to_string(i);
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Manifest

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open manifest " + path.string());
  std::vector<ManifestRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() == 3) fields.emplace_back();
    if (fields.size() != 4)
      fail(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) +
                                  ": expected path, label, class_tag, split");
    ManifestRecord r;
    r.path = fields[0];
    if (fields[1] != "0" && fields[1] != "1")
      fail(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) + ": label must be 0 or 1");
    r.label = fields[1][0] - '0';
    try {
      r.tag = parse_class_tag(fields[2]);
    } catch (const Error& e) {
      fail(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
    r.split = fields[3];
    out.push_back(std::move(r));
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRecord>& records) {
  std::string out = "#path\tlabel\tclass_tag\tsplit\n";
  for (const ManifestRecord& r : records)
    out += r.path + "\t" + std::to_string(r.label) + "\t" + std::string(to_string(r.tag)) + "\t" +
           r.split + "\n";
  write_file_atomic(path, out);
}

Dataset load_manifest_dataset(const std::filesystem::path& manifest, std::size_t input_side,
                              std::optional<std::string> split) {
  const auto records = read_manifest(manifest);
  const auto base = manifest.parent_path();
  Dataset ds;
  for (const ManifestRecord& r : records) {
    if (split && r.split != *split) continue;
    std::filesystem::path p = r.path;
    if (p.is_relative()) p = base / p;
    Sample s;
    s.image = load_image(p, input_side);
    s.label = one_hot(r.label);
    s.tag = r.tag;
    s.source_id = r.path;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

void write_corpus(const Dataset& train, const Dataset& test, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  std::vector<ManifestRecord> records;
  std::size_t index = 0;
  for (const auto* part : {&train, &test}) {
    const std::string split = part == &train ? "train" : "test";
    for (const Sample& s : part->samples) {
      char name[64];
      std::snprintf(name, sizeof name, "images/%05zu_%s.pgm", index++,
                    std::string(to_string(s.tag)).c_str());
      write_pgm(dir / name, s.image);
      records.push_back({name, s.label_index(), s.tag, split});
    }
  }
  write_manifest(dir / "manifest.tsv", records);
}

}  // namespace wisdomnet
