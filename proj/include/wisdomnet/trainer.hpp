#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "wisdomnet/data.hpp"
#include "wisdomnet/member_network.hpp"
#include "wisdomnet/rng.hpp"

namespace wisdomnet {

enum class SelectionCriterion { TopKValidation, RandomSample };

std::string_view to_string(SelectionCriterion c);
SelectionCriterion parse_selection(std::string_view text);

struct AugmentConfig {
  bool enabled = true;
  double flip_probability = 0.5;
  double max_rotation_deg = 10.0;
  double max_translation = 0.05;  // fraction of the side
};

struct TrainConfig {
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int epochs_min = 4;
  int epochs_max = 10;
  std::size_t batch_size = 8;
  std::size_t pool_size = 200;
  std::size_t selected_count = 80;
  std::uint64_t seed = 0;
  AugmentConfig augment;
  SelectionCriterion selection = SelectionCriterion::TopKValidation;
  // Held out of each layer's training data for member selection; 0 selects
  // on the training data itself.
  double validation_fraction = 0.2;
  std::size_t threads = 0;  // 0 = hardware concurrency

  static TrainConfig covid_defaults() { return {}; }
  static TrainConfig ards_defaults() {
    TrainConfig c;
    c.epochs_min = 10;
    c.epochs_max = 15;
    return c;
  }

  void validate() const;
};

/// Per-buffer Adam moments plus the shared step counter.
template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  std::uint64_t t = 0;
};

/// One bias-corrected Adam update applied in place to every buffer.
template <typename T>
void adam_step(std::span<const std::span<T>> params, std::span<const std::span<const T>> grads,
               AdamState<T>& state, const TrainConfig& config) {
  require(params.size() == grads.size(), ErrorCode::DimensionMismatch,
          "adam_step: parameter/gradient count mismatch");
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.size(), T{0});
      state.v.emplace_back(p.size(), T{0});
    }
  }
  require(state.m.size() == params.size(), ErrorCode::DimensionMismatch,
          "adam_step: state does not mirror parameters");
  for (std::size_t b = 0; b < params.size(); ++b) {
    require(params[b].size() == grads[b].size() && state.m[b].size() == params[b].size(),
            ErrorCode::DimensionMismatch, "adam_step: buffer " + std::to_string(b) + " size mismatch");
    for (T g : grads[b])
      require(std::isfinite(g), ErrorCode::Divergence,
              "adam_step: non-finite gradient in buffer " + std::to_string(b));
  }
  ++state.t;
  const T b1 = static_cast<T>(config.adam_beta1), b2 = static_cast<T>(config.adam_beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(config.adam_beta1, static_cast<double>(state.t)));
  const T c2 = static_cast<T>(1.0 - std::pow(config.adam_beta2, static_cast<double>(state.t)));
  const T lr = static_cast<T>(config.learning_rate), eps = static_cast<T>(config.adam_eps);
  for (std::size_t b = 0; b < params.size(); ++b) {
    T* p = params[b].data();
    const T* g = grads[b].data();
    T* m = state.m[b].data();
    T* v = state.v[b].data();
    const std::size_t n = params[b].size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (T{1} - b1) * g[i];
      v[i] = b2 * v[i] + (T{1} - b2) * g[i] * g[i];
      const T mhat = m[i] / c1;
      const T vhat = v[i] / c2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

/// Concrete augmentation draw; the identity draw leaves the image untouched.
struct AugmentParams {
  bool flip = false;
  double rotation_deg = 0.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;
};

AugmentParams draw_augment(const AugmentConfig& config, std::size_t side, Rng& rng);
/// Horizontal flip, rotation about the centre, translation; bilinear sampling
/// with zero fill outside the source.
Tensor<float> apply_augment(const Tensor<float>& image, const AugmentParams& params);
Tensor<float> augment(const Tensor<float>& image, const AugmentConfig& config, Rng& rng);

struct TrainResult {
  std::vector<double> loss_history;  // one mean batch loss per optimizer step
  int epochs = 0;
};

/// Mini-batch Adam on the mean batch cross-entropy. The shuffle/augment
/// stream is seeded from (config.seed, net.seed()).
TrainResult train_member(MemberNetwork& net, const Dataset& dataset, int epochs,
                         const TrainConfig& config,
                         const std::function<void(int epochs_done)>& on_epoch = {});

/// Mean cross-entropy of the network over a dataset (no augmentation).
double dataset_loss(const MemberNetwork& net, const Dataset& dataset);
/// Fraction of samples whose argmax class matches the label.
double member_accuracy(const MemberNetwork& net, const Dataset& dataset);

struct PoolMember {
  MemberNetwork net;
  int epochs = 0;
  std::vector<double> loss_history;
};

std::uint64_t pool_member_seed(std::uint64_t master_seed, std::size_t index);
std::vector<int> draw_pool_epochs(const TrainConfig& config);

/// Trains pool_size members from distinct seeds; members train in parallel
/// and are returned in index order.
std::vector<PoolMember> train_candidate_pool(const Dataset& dataset, const TrainConfig& config);

/// Indices of the k chosen members in pool order. Top-k ranks by validation
/// accuracy with ties broken by ascending seed.
std::vector<std::size_t> select_members(const std::vector<MemberNetwork>& pool,
                                        const Dataset& validation, std::size_t k,
                                        SelectionCriterion criterion, std::uint64_t seed,
                                        std::size_t threads = 0);

}  // namespace wisdomnet
