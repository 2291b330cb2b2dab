#include "wisdomnet/ensemble.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "wisdomnet/parallel.hpp"

namespace wisdomnet {

std::string_view to_string(LayerRole role) { return role == LayerRole::Covid ? "covid" : "ards"; }

LayerRole parse_layer_role(std::string_view text) {
  if (text == "covid") return LayerRole::Covid;
  if (text == "ards") return LayerRole::Ards;
  fail(ErrorCode::Format, "unknown layer role '" + std::string(text) + "'");
}

std::string_view to_string(Decision d) { return d == Decision::Positive ? "positive" : "negative"; }

Decision parse_decision(std::string_view text) {
  if (text == "positive") return Decision::Positive;
  if (text == "negative") return Decision::Negative;
  fail(ErrorCode::Format, "unknown decision '" + std::string(text) + "'");
}

void DecisionPolicy::validate() const {
  require(negative_threshold >= 0.5 && negative_threshold <= 1.0, ErrorCode::InvalidArgument,
          "negative_threshold must lie in [0.5, 1]");
  require(positive_threshold >= 0.0 && positive_threshold <= 1.0, ErrorCode::InvalidArgument,
          "positive_threshold must lie in [0, 1]");
}

ProbabilityPair aggregate_mean(std::span<const ProbabilityPair> outputs) {
  require(!outputs.empty(), ErrorCode::InvalidArgument, "aggregate_mean: no member outputs");
  double s0 = 0.0, s1 = 0.0;
  for (const ProbabilityPair& p : outputs) {
    require(p.valid(), ErrorCode::InvalidArgument, "aggregate_mean: invalid probability pair");
    s0 += p.p_class0;
    s1 += p.p_class1;
  }
  const double n = static_cast<double>(outputs.size());
  return {s0 / n, s1 / n};
}

Decision decide_covid(const ProbabilityPair& aggregated, const DecisionPolicy& policy) {
  const double p_negative = aggregated.p_class1;
  const bool negative = policy.strict ? p_negative > policy.negative_threshold
                                      : p_negative >= policy.negative_threshold;
  return negative ? Decision::Negative : Decision::Positive;
}

// ---------------------------------------------------------------------------

EnsembleLayer::EnsembleLayer(LayerRole role, std::vector<MemberNetwork> members)
    : role_(role), members_(std::move(members)) {
  require(!members_.empty(), ErrorCode::InvalidArgument, "ensemble layer needs at least one member");
  const std::size_t side = members_.front().input_side();
  for (const MemberNetwork& m : members_)
    require(m.input_side() == side, ErrorCode::DimensionMismatch,
            "ensemble members disagree on input_side");
}

EnsembleLayer::EnsembleLayer(const EnsembleLayer& other)
    : role_(other.role_), members_(other.members_), evaluations_(other.evaluations_.load()) {}

EnsembleLayer::EnsembleLayer(EnsembleLayer&& other) noexcept
    : role_(other.role_), members_(std::move(other.members_)), evaluations_(other.evaluations_.load()) {}

EnsembleLayer& EnsembleLayer::operator=(EnsembleLayer other) noexcept {
  role_ = other.role_;
  members_ = std::move(other.members_);
  evaluations_.store(other.evaluations_.load());
  return *this;
}

std::size_t EnsembleLayer::input_side() const {
  require(!members_.empty(), ErrorCode::InvalidArgument, "empty ensemble layer");
  return members_.front().input_side();
}

LayerPrediction EnsembleLayer::predict(const Tensor<float>& image, std::size_t threads) const {
  require(!members_.empty(), ErrorCode::InvalidArgument, "empty ensemble layer");
  LayerPrediction out;
  out.members.resize(members_.size());
  parallel_for(members_.size(), threads, [&](std::size_t i) {
    out.members[i] = members_[i].forward(image);
    evaluations_.fetch_add(1);
  });
  out.aggregated = aggregate_mean(out.members);
  return out;
}

DecisionReport cascade_predict(const EnsembleLayer& covid, const EnsembleLayer& ards,
                               const DecisionPolicy& policy, const Tensor<float>& image,
                               std::string subject_id, double high_variance_threshold,
                               std::size_t threads) {
  policy.validate();
  require(covid.input_side() == ards.input_side(), ErrorCode::DimensionMismatch,
          "cascade: COVID layer input_side " + std::to_string(covid.input_side()) +
              " differs from ARDS layer " + std::to_string(ards.input_side()));
  DecisionReport r;
  r.subject_id = std::move(subject_id);
  LayerPrediction c = covid.predict(image, threads);
  r.covid = c.aggregated;
  r.covid_members = std::move(c.members);
  r.covid_dispersion = diagnose(r.covid_members, high_variance_threshold);
  r.decision = decide_covid(r.covid, policy);
  if (r.decision == Decision::Positive) {
    LayerPrediction a = ards.predict(image, threads);
    r.ards = a.aggregated;
    r.ards_probability = a.aggregated.p_class1;
    r.ards_members = std::move(a.members);
    r.ards_dispersion = diagnose(r.ards_members, high_variance_threshold);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr const char* kManifestName = "manifest.txt";
constexpr const char* kManifestHeader = "wisdomnet-ensemble 1";

std::uint32_t crc_of(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), bytes.data(), static_cast<uInt>(bytes.size())));
}

std::string hex32(std::uint32_t v) {
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", v);
  return buf;
}

}  // namespace

void save_ensemble(const EnsembleLayer& layer, const std::filesystem::path& dir) {
  require(layer.lambda() >= 1, ErrorCode::InvalidArgument, "cannot save an empty ensemble");
  std::filesystem::create_directories(dir);
  std::ostringstream manifest;
  manifest << kManifestHeader << "\n"
           << "role " << to_string(layer.role()) << "\n"
           << "lambda " << layer.lambda() << "\n"
           << "input_side " << layer.input_side() << "\n"
           << "architecture " << MemberNetwork::architecture_fingerprint() << "\n";
  for (std::size_t i = 0; i < layer.lambda(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "member_%03zu.wsnw", i);
    const auto bytes = serialize_weights(layer.members()[i]);
    write_file_atomic(dir / name, bytes);
    manifest << "member " << name << " " << hex32(crc_of(bytes)) << "\n";
  }
  write_file_atomic(dir / kManifestName, manifest.str());
}

EnsembleLayer load_ensemble(const std::filesystem::path& dir) {
  const auto manifest_path = dir / kManifestName;
  std::ifstream in(manifest_path);
  if (!in) fail(ErrorCode::Io, "missing ensemble manifest " + manifest_path.string());
  const std::string where = manifest_path.string();
  std::string line;
  if (!std::getline(in, line) || line != kManifestHeader)
    fail(ErrorCode::Format, where + ": not an ensemble manifest");

  std::optional<LayerRole> role;
  std::optional<std::size_t> lambda, side;
  std::vector<std::pair<std::string, std::string>> members;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    auto parse_count = [&](const char* what) {
      long long v = -1;
      if (!(ls >> v) || v <= 0) fail(ErrorCode::Format, where + ": invalid " + what);
      return static_cast<std::size_t>(v);
    };
    if (key == "role") {
      std::string v;
      ls >> v;
      role = parse_layer_role(v);
    } else if (key == "lambda") {
      lambda = parse_count("lambda");
    } else if (key == "input_side") {
      side = parse_count("input_side");
    } else if (key == "architecture") {
      std::string v;
      ls >> v;
      if (v != MemberNetwork::architecture_fingerprint())
        fail(ErrorCode::Format, where + ": architecture fingerprint mismatch");
    } else if (key == "member") {
      std::string name, crc;
      if (!(ls >> name >> crc) || crc.size() != 8)
        fail(ErrorCode::Format, where + ": malformed member line");
      if (name.find('/') != std::string::npos || name.find("..") != std::string::npos)
        fail(ErrorCode::Format, where + ": member file must be a plain file name");
      members.emplace_back(name, crc);
    } else {
      fail(ErrorCode::Format, where + ": unknown manifest key '" + key + "'");
    }
  }
  if (!role || !lambda || !side) fail(ErrorCode::Format, where + ": incomplete manifest");
  if (members.size() != *lambda)
    fail(ErrorCode::Format, where + ": lambda " + std::to_string(*lambda) + " but " +
                                std::to_string(members.size()) + " member files listed");

  std::vector<MemberNetwork> nets;
  nets.reserve(members.size());
  for (const auto& [name, crc] : members) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path))
      fail(ErrorCode::Io, "missing member file " + path.string());
    const auto bytes = read_file_bytes(path);
    if (hex32(crc_of(bytes)) != crc)
      fail(ErrorCode::Checksum, "checksum mismatch for member file " + path.string());
    MemberNetwork net = deserialize_weights(bytes, path.string());
    if (net.input_side() != *side)
      fail(ErrorCode::Format, path.string() + ": input_side disagrees with manifest");
    nets.push_back(std::move(net));
  }
  return EnsembleLayer(*role, std::move(nets));
}

void save_wisdomnet(const WisdomNet& net, const std::filesystem::path& dir) {
  save_ensemble(net.covid, dir / "covid");
  save_ensemble(net.ards, dir / "ards");
}

WisdomNet load_wisdomnet(const std::filesystem::path& dir) {
  WisdomNet net{load_ensemble(dir / "covid"), load_ensemble(dir / "ards")};
  require(net.covid.role() == LayerRole::Covid && net.ards.role() == LayerRole::Ards,
          ErrorCode::Format, dir.string() + ": layer roles do not match their directories");
  require(net.covid.input_side() == net.ards.input_side(), ErrorCode::Format,
          dir.string() + ": layers disagree on input_side");
  return net;
}

// ---------------------------------------------------------------------------
// Training

EnsembleLayer train_layer(const Dataset& task, const TrainConfig& config, LayerRole role) {
  config.validate();
  require(!task.empty(), ErrorCode::InvalidArgument,
          std::string("no training data for the ") + std::string(to_string(role)) + " layer");
  Dataset fit = task, validation = task;
  if (config.validation_fraction > 0.0) {
    auto [a, b] = split_dataset(task, 1.0 - config.validation_fraction,
                                derive_seed(config.seed, 0x76616cULL));
    if (!a.empty() && !b.empty()) {
      fit = std::move(a);
      validation = std::move(b);
    }
  }
  std::vector<PoolMember> pool = train_candidate_pool(fit, config);
  std::vector<MemberNetwork> nets;
  nets.reserve(pool.size());
  for (PoolMember& m : pool) nets.push_back(std::move(m.net));
  const auto chosen = select_members(nets, validation, config.selected_count, config.selection,
                                     derive_seed(config.seed, 0x73656cULL), config.threads);
  std::vector<MemberNetwork> members;
  for (std::size_t i : chosen) members.push_back(std::move(nets[i]));
  return EnsembleLayer(role, std::move(members));
}

WisdomNet train_wisdomnet(const Dataset& dataset, const TrainConfig& covid_config,
                          const TrainConfig& ards_config) {
  return {train_layer(covid_task(dataset), covid_config, LayerRole::Covid),
          train_layer(ards_task(dataset), ards_config, LayerRole::Ards)};
}

}  // namespace wisdomnet
