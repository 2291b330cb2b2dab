#include <doctest.h>

#include <fstream>
#include <numeric>

#include "support.hpp"
#include "wisdomnet/ensemble.hpp"

using namespace wisdomnet;
using wntest::fixed_output;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

EnsembleLayer layer_of(LayerRole role, std::initializer_list<double> p1s) {
  std::vector<MemberNetwork> nets;
  std::uint64_t seed = 0;
  for (double p : p1s) nets.push_back(fixed_output(seed++, p));
  return EnsembleLayer(role, std::move(nets));
}

const Tensor<float> kImage({8, 8, 3}, 0.5f);

}  // namespace

TEST_CASE("aggregate_mean matches a direct summation") {
  Rng rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ProbabilityPair> outs(1 + trial % 9);
    for (auto& p : outs) {
      p.p_class1 = u(rng);
      p.p_class0 = 1.0 - p.p_class1;
    }
    double s0 = 0.0, s1 = 0.0;
    for (const auto& p : outs) s0 += p.p_class0, s1 += p.p_class1;
    const ProbabilityPair m = aggregate_mean(outs);
    CHECK(std::abs(m.p_class0 - s0 / outs.size()) <= 1e-12);
    CHECK(std::abs(m.p_class1 - s1 / outs.size()) <= 1e-12);
    CHECK(m.valid());

    auto shuffled = outs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    CHECK(std::abs(aggregate_mean(shuffled).p_class1 - m.p_class1) <= 1e-12);
    auto doubled = outs;
    doubled.insert(doubled.end(), outs.begin(), outs.end());
    CHECK(std::abs(aggregate_mean(doubled).p_class1 - m.p_class1) <= 1e-12);
  }
  CHECK_THROWS_AS(aggregate_mean(std::vector<ProbabilityPair>{}), Error);
  CHECK_THROWS_AS(aggregate_mean(std::vector<ProbabilityPair>{{0.3, 0.3}}), Error);
}

TEST_CASE("covid decision rule") {
  const DecisionPolicy policy;
  CHECK(decide_covid({0.358, 0.642}, policy) == Decision::Positive);
  CHECK(decide_covid({0.30, 0.70}, policy) == Decision::Negative);
  CHECK(decide_covid({0.05, 0.95}, policy) == Decision::Negative);
  CHECK(decide_covid({0.60, 0.40}, policy) == Decision::Positive);
  DecisionPolicy strict;
  strict.strict = true;
  CHECK(decide_covid({0.30, 0.70}, strict) == Decision::Positive);
  CHECK(decide_covid({0.29, 0.71}, strict) == Decision::Negative);

  DecisionPolicy bad;
  bad.negative_threshold = 0.4;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.negative_threshold = 1.1;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK_NOTHROW(policy.validate());
  CHECK(parse_decision(to_string(Decision::Negative)) == Decision::Negative);
  CHECK(parse_layer_role(to_string(LayerRole::Ards)) == LayerRole::Ards);
}

TEST_CASE("layer prediction averages members in order") {
  const EnsembleLayer layer = layer_of(LayerRole::Covid, {0.6, 0.8, 0.9});
  const LayerPrediction p = layer.predict(kImage, 2);
  REQUIRE(p.members.size() == 3);
  CHECK(p.members[0].p_class1 == doctest::Approx(0.6).epsilon(1e-6));
  CHECK(p.members[2].p_class1 == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(p.aggregated.p_class1 == doctest::Approx(2.3 / 3).epsilon(1e-6));
  CHECK(layer.evaluations() == 3);
  CHECK(layer.lambda() == 3);
  CHECK_THROWS_AS(EnsembleLayer(LayerRole::Covid, std::vector<MemberNetwork>{}), Error);
  std::vector<MemberNetwork> mixed;
  mixed.push_back(fixed_output(0, 0.5, 8));
  mixed.push_back(fixed_output(1, 0.5, 16));
  CHECK(code_of([&] { EnsembleLayer(LayerRole::Covid, std::move(mixed)); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("cascade runs the ARDS layer only for positive subjects") {
  const EnsembleLayer ards = layer_of(LayerRole::Ards, {0.2, 0.4});
  const DecisionPolicy policy;

  const EnsembleLayer negative = layer_of(LayerRole::Covid, {0.9, 0.8});
  const DecisionReport n = cascade_predict(negative, ards, policy, kImage, "n");
  CHECK(n.decision == Decision::Negative);
  CHECK(!n.ards_probability);
  CHECK(!n.ards_dispersion);
  CHECK(n.ards_members.empty());
  CHECK(ards.evaluations() == 0);
  CHECK(negative.evaluations() == 2);

  const EnsembleLayer positive = layer_of(LayerRole::Covid, {0.5, 0.6});
  const DecisionReport p = cascade_predict(positive, ards, policy, kImage, "p");
  CHECK(p.decision == Decision::Positive);
  REQUIRE(p.ards_probability);
  CHECK(*p.ards_probability == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(p.ards_members.size() == 2);
  CHECK(ards.evaluations() == 2);
  CHECK(p.covid_dispersion.count == 2);
  CHECK(p.subject_id == "p");

  const EnsembleLayer wide(LayerRole::Ards, {fixed_output(0, 0.5, 16)});
  CHECK(code_of([&] { cascade_predict(positive, wide, policy, kImage, "x"); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("ensemble directories round-trip bitwise") {
  std::vector<MemberNetwork> nets;
  for (std::uint64_t s = 0; s < 3; ++s) nets.emplace_back(s, 8);
  const EnsembleLayer layer(LayerRole::Ards, nets);
  wntest::TempDir dir("wn_ensemble");
  save_ensemble(layer, dir.path / "layer");
  const EnsembleLayer back = load_ensemble(dir.path / "layer");
  CHECK(back.role() == LayerRole::Ards);
  REQUIRE(back.lambda() == 3);
  Rng rng(3);
  for (int t = 0; t < 5; ++t) {
    const Tensor<float> img = wntest::random_tensor<float>({8, 8, 3}, rng, 0.0, 1.0);
    const LayerPrediction a = layer.predict(img), b = back.predict(img);
    CHECK(a.aggregated == b.aggregated);
    for (std::size_t i = 0; i < 3; ++i) CHECK(a.members[i] == b.members[i]);
  }

  const WisdomNet net{layer_of(LayerRole::Covid, {0.1, 0.2}), layer_of(LayerRole::Ards, {0.3})};
  save_wisdomnet(net, dir.path / "model");
  const WisdomNet nb = load_wisdomnet(dir.path / "model");
  CHECK(nb.covid.lambda() == 2);
  CHECK(nb.ards.lambda() == 1);
  CHECK(code_of([&] { load_wisdomnet(dir.path / "layer"); }) == ErrorCode::Io);
}

TEST_CASE("damaged ensemble directories fail with structured errors") {
  wntest::TempDir dir("wn_ensemble_bad");
  const EnsembleLayer layer = layer_of(LayerRole::Covid, {0.2, 0.4, 0.6});
  auto fresh = [&](const std::string& name) {
    save_ensemble(layer, dir.path / name);
    return dir.path / name;
  };

  const auto missing = fresh("missing");
  std::filesystem::remove(missing / "member_001.wsnw");
  CHECK(code_of([&] { load_ensemble(missing); }) == ErrorCode::Io);

  const auto flipped = fresh("flipped");
  {
    std::fstream f(flipped / "member_002.wsnw", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-1, std::ios::end);
    f.put('\x7f');
  }
  CHECK(code_of([&] { load_ensemble(flipped); }) == ErrorCode::Checksum);

  const auto lambda = fresh("lambda");
  {
    std::ifstream in(lambda / "manifest.txt");
    std::string text((std::istreambuf_iterator<char>(in)), {});
    text.replace(text.find("lambda 3"), 8, "lambda 4");
    std::ofstream(lambda / "manifest.txt") << text;
  }
  CHECK(code_of([&] { load_ensemble(lambda); }) == ErrorCode::Format);

  const auto header = fresh("header");
  std::ofstream(header / "manifest.txt") << "something else\n";
  CHECK(code_of([&] { load_ensemble(header); }) == ErrorCode::Format);
  CHECK(code_of([&] { load_ensemble(dir.path / "absent"); }) == ErrorCode::Io);
}

TEST_CASE("train_layer returns lambda members and is reproducible") {
  SyntheticSpec spec;
  spec.counts = {{ClassTag::Covid, 6}, {ClassTag::Healthy, 6}};
  spec.input_side = 8;
  const Dataset task = covid_task(generate_synthetic_corpus(spec, 4));
  TrainConfig cfg;
  cfg.pool_size = 4;
  cfg.selected_count = 2;
  cfg.epochs_min = 1;
  cfg.epochs_max = 2;
  cfg.seed = 8;
  cfg.threads = 1;
  const EnsembleLayer a = train_layer(task, cfg, LayerRole::Covid);
  const EnsembleLayer b = train_layer(task, cfg, LayerRole::Covid);
  REQUIRE(a.lambda() == 2);
  CHECK(a.role() == LayerRole::Covid);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(a.members()[i].seed() == b.members()[i].seed());
    CHECK(a.predict(kImage).members[i] == b.predict(kImage).members[i]);
  }
  CHECK_THROWS_AS(train_layer(Dataset{}, cfg, LayerRole::Covid), Error);
}
