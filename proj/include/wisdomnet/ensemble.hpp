#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wisdomnet/data.hpp"
#include "wisdomnet/diagnostics.hpp"
#include "wisdomnet/member_network.hpp"
#include "wisdomnet/trainer.hpp"

namespace wisdomnet {

enum class LayerRole { Covid, Ards };
std::string_view to_string(LayerRole role);
LayerRole parse_layer_role(std::string_view text);

enum class Decision { Positive, Negative };
std::string_view to_string(Decision d);
Decision parse_decision(std::string_view text);

struct DecisionPolicy {
  double negative_threshold = 0.70;
  double positive_threshold = 0.50;  // reported only; Positive is the complement of Negative
  bool strict = false;                // true: Negative needs p_negative > threshold

  void validate() const;
};

/// Elementwise arithmetic mean of the member outputs.
ProbabilityPair aggregate_mean(std::span<const ProbabilityPair> outputs);

/// Negative iff p_negative (index 1) reaches the negative threshold.
Decision decide_covid(const ProbabilityPair& aggregated, const DecisionPolicy& policy);

struct LayerPrediction {
  ProbabilityPair aggregated;
  std::vector<ProbabilityPair> members;  // in member order
};

class EnsembleLayer {
 public:
  EnsembleLayer() = default;
  EnsembleLayer(LayerRole role, std::vector<MemberNetwork> members);
  EnsembleLayer(const EnsembleLayer& other);
  EnsembleLayer(EnsembleLayer&& other) noexcept;
  EnsembleLayer& operator=(EnsembleLayer other) noexcept;

  LayerRole role() const noexcept { return role_; }
  std::size_t lambda() const noexcept { return members_.size(); }
  std::size_t input_side() const;
  const std::vector<MemberNetwork>& members() const noexcept { return members_; }

  /// Member forward passes performed since construction or the last reset.
  std::uint64_t evaluations() const noexcept { return evaluations_.load(); }
  void reset_evaluations() noexcept { evaluations_.store(0); }

  LayerPrediction predict(const Tensor<float>& image, std::size_t threads = 1) const;

 private:
  LayerRole role_ = LayerRole::Covid;
  std::vector<MemberNetwork> members_;
  mutable std::atomic<std::uint64_t> evaluations_{0};
};

struct DecisionReport {
  std::string subject_id;
  ProbabilityPair covid;  // [P_positive, P_negative]
  Decision decision = Decision::Positive;
  std::optional<double> ards_probability;
  std::optional<ProbabilityPair> ards;  // [P_non_ards, P_ards]
  std::vector<ProbabilityPair> covid_members;
  std::vector<ProbabilityPair> ards_members;
  DispersionStats covid_dispersion;
  std::optional<DispersionStats> ards_dispersion;
};

/// COVID layer always runs; the ARDS layer runs only for Positive decisions.
DecisionReport cascade_predict(const EnsembleLayer& covid, const EnsembleLayer& ards,
                               const DecisionPolicy& policy, const Tensor<float>& image,
                               std::string subject_id,
                               double high_variance_threshold = kDefaultHighVarianceThreshold,
                               std::size_t threads = 1);

/// Ensemble directory: manifest.txt plus one weight file per member.
void save_ensemble(const EnsembleLayer& layer, const std::filesystem::path& dir);
EnsembleLayer load_ensemble(const std::filesystem::path& dir);

struct WisdomNet {
  EnsembleLayer covid;
  EnsembleLayer ards;
};

void save_wisdomnet(const WisdomNet& net, const std::filesystem::path& dir);
WisdomNet load_wisdomnet(const std::filesystem::path& dir);

/// Pool training, validation hold-out and selection for one layer. `task`
/// must already carry the layer's labels.
EnsembleLayer train_layer(const Dataset& task, const TrainConfig& config, LayerRole role);

/// Trains both layers from a tagged dataset (see covid_task / ards_task).
WisdomNet train_wisdomnet(const Dataset& dataset, const TrainConfig& covid_config,
                          const TrainConfig& ards_config);

}  // namespace wisdomnet
