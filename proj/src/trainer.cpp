#include "wisdomnet/trainer.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>

#include "wisdomnet/parallel.hpp"

namespace wisdomnet {

std::string_view to_string(SelectionCriterion c) {
  return c == SelectionCriterion::TopKValidation ? "top_k" : "random";
}

SelectionCriterion parse_selection(std::string_view text) {
  if (text == "top_k") return SelectionCriterion::TopKValidation;
  if (text == "random") return SelectionCriterion::RandomSample;
  fail(ErrorCode::InvalidArgument, "unknown selection criterion '" + std::string(text) + "'");
}

void TrainConfig::validate() const {
  require(learning_rate > 0.0, ErrorCode::InvalidArgument, "learning_rate must be positive");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
          ErrorCode::InvalidArgument, "adam betas must lie in [0, 1)");
  require(adam_eps > 0.0, ErrorCode::InvalidArgument, "adam_eps must be positive");
  require(epochs_min >= 0 && epochs_min <= epochs_max, ErrorCode::InvalidArgument,
          "epochs_min must be non-negative and <= epochs_max");
  require(batch_size >= 1, ErrorCode::InvalidArgument, "batch_size must be positive");
  require(selected_count >= 1 && selected_count <= pool_size, ErrorCode::InvalidArgument,
          "selected_count must lie in [1, pool_size]");
  require(validation_fraction >= 0.0 && validation_fraction < 1.0, ErrorCode::InvalidArgument,
          "validation_fraction must lie in [0, 1)");
  require(augment.flip_probability >= 0.0 && augment.flip_probability <= 1.0 &&
              augment.max_rotation_deg >= 0.0 && augment.max_translation >= 0.0,
          ErrorCode::InvalidArgument, "invalid augmentation settings");
}

// ---------------------------------------------------------------------------
// Augmentation

AugmentParams draw_augment(const AugmentConfig& config, std::size_t side, Rng& rng) {
  AugmentParams p;
  if (!config.enabled) return p;
  std::bernoulli_distribution flip(config.flip_probability);
  std::uniform_real_distribution<double> rot(-config.max_rotation_deg, config.max_rotation_deg);
  const double max_shift = config.max_translation * static_cast<double>(side);
  std::uniform_real_distribution<double> shift(-max_shift, max_shift);
  p.flip = flip(rng);
  p.rotation_deg = rot(rng);
  p.shift_x = shift(rng);
  p.shift_y = shift(rng);
  return p;
}

Tensor<float> apply_augment(const Tensor<float>& image, const AugmentParams& params) {
  require(image.rank() == 3, ErrorCode::DimensionMismatch, "augment expects H x W x C");
  const std::size_t H = image.extent(0), W = image.extent(1), C = image.extent(2);
  const double theta = params.rotation_deg * std::numbers::pi / 180.0;
  const double cs = std::cos(theta), sn = std::sin(theta);
  const double cx = static_cast<double>(W) / 2.0, cy = static_cast<double>(H) / 2.0;
  Tensor<float> out(image.shape());
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      // Inverse map from output pixel centre to source coordinates.
      const double du = static_cast<double>(x) + 0.5 - params.shift_x - cx;
      const double dv = static_cast<double>(y) + 0.5 - params.shift_y - cy;
      double sx = cx + cs * du + sn * dv;
      const double sy = cy - sn * du + cs * dv;
      if (params.flip) sx = static_cast<double>(W) - sx;
      const double fx = sx - 0.5, fy = sy - 0.5;
      const double x0 = std::floor(fx), y0 = std::floor(fy);
      const double wx = fx - x0, wy = fy - y0;
      for (std::size_t c = 0; c < C; ++c) {
        auto px = [&](double yy, double xx) -> double {
          if (yy < 0 || xx < 0 || yy >= static_cast<double>(H) || xx >= static_cast<double>(W))
            return 0.0;
          return image.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx), c);
        };
        double v = px(y0, x0) * (1 - wx) * (1 - wy);
        if (wx != 0.0) v += px(y0, x0 + 1) * wx * (1 - wy);
        if (wy != 0.0) v += px(y0 + 1, x0) * (1 - wx) * wy;
        if (wx != 0.0 && wy != 0.0) v += px(y0 + 1, x0 + 1) * wx * wy;
        out.at(y, x, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

Tensor<float> augment(const Tensor<float>& image, const AugmentConfig& config, Rng& rng) {
  require(image.rank() == 3, ErrorCode::DimensionMismatch, "augment expects H x W x C");
  return apply_augment(image, draw_augment(config, image.extent(0), rng));
}

// ---------------------------------------------------------------------------
// Training

namespace {

Tensor<float> label_row(const Sample& s) { return Tensor<float>({1, 2}, {s.label[0], s.label[1]}); }

}  // namespace

TrainResult train_member(MemberNetwork& net, const Dataset& dataset, int epochs,
                         const TrainConfig& config, const std::function<void(int)>& on_epoch) {
  config.validate();
  require(epochs >= 0, ErrorCode::InvalidArgument, "epochs must be non-negative");
  require(!dataset.empty(), ErrorCode::InvalidArgument, "train_member: empty dataset");
  for (const Sample& s : dataset.samples)
    require(s.label[0] + s.label[1] == 1.0f && (s.label[0] == 0.0f || s.label[0] == 1.0f),
            ErrorCode::InvalidArgument, "train_member: labels must be one-hot");

  TrainResult result;
  result.epochs = epochs;
  if (epochs == 0) return result;

  Rng rng(derive_seed(config.seed, net.seed()));
  AdamState<float> state;
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batches = (dataset.size() + config.batch_size - 1) / config.batch_size;
  result.loss_history.reserve(static_cast<std::size_t>(epochs) * batches);

  auto params = net.parameters();
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * config.batch_size;
      const std::size_t end = std::min(begin + config.batch_size, dataset.size());
      const float scale = 1.0f / static_cast<float>(end - begin);
      double batch_loss = 0.0;
      try {
        net.zero_grad();
        for (std::size_t i = begin; i < end; ++i) {
          const Sample& s = dataset.samples[order[i]];
          const Tensor<float> image =
              config.augment.enabled ? augment(s.image, config.augment, rng) : s.image;
          const auto trace = net.forward_trace(image);
          const Tensor<float> labels = label_row(s);
          const Tensor<float> probs = trace.probs.reshaped({1, 2});
          batch_loss += cross_entropy_loss(labels, probs);
          Tensor<float> g = cross_entropy_backward(labels, probs).reshaped({2});
          for (float& v : g.data()) v *= scale;
          net.backward(trace, g);
        }
        batch_loss /= static_cast<double>(end - begin);
        require(std::isfinite(batch_loss), ErrorCode::Divergence, "loss is not finite");
        std::vector<std::span<float>> values;
        std::vector<std::span<const float>> grads;
        for (Tensor<float>* p : params) {
          values.push_back(p->data());
          grads.push_back(std::as_const(*p).grad());
        }
        adam_step<float>(values, grads, state, config);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::NonFinite && err.code() != ErrorCode::Divergence) throw;
        fail(ErrorCode::Divergence, "training diverged at epoch " + std::to_string(e) +
                                        ", batch " + std::to_string(b) + ": " + err.what());
      }
      result.loss_history.push_back(batch_loss);
    }
    if (on_epoch) on_epoch(e + 1);
  }
  for (Tensor<float>* p : params) p->drop_grad();
  return result;
}

double dataset_loss(const MemberNetwork& net, const Dataset& dataset) {
  require(!dataset.empty(), ErrorCode::InvalidArgument, "dataset_loss: empty dataset");
  double total = 0.0;
  for (const Sample& s : dataset.samples) {
    const auto trace = net.forward_trace(s.image);
    total += cross_entropy_loss(label_row(s), trace.probs.reshaped({1, 2}));
  }
  return total / static_cast<double>(dataset.size());
}

double member_accuracy(const MemberNetwork& net, const Dataset& dataset) {
  require(!dataset.empty(), ErrorCode::InvalidArgument, "member_accuracy: empty dataset");
  std::size_t correct = 0;
  for (const Sample& s : dataset.samples) {
    const ProbabilityPair p = net.forward(s.image);
    const int predicted = p.p_class1 > p.p_class0 ? 1 : 0;
    correct += predicted == s.label_index();
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

std::uint64_t pool_member_seed(std::uint64_t master_seed, std::size_t index) {
  return mix_seed(master_seed) + index;
}

std::vector<int> draw_pool_epochs(const TrainConfig& config) {
  Rng rng(derive_seed(config.seed, 0x65706f6368ULL));
  std::uniform_int_distribution<int> dist(config.epochs_min, config.epochs_max);
  std::vector<int> epochs(config.pool_size);
  for (int& e : epochs) e = dist(rng);
  return epochs;
}

std::vector<PoolMember> train_candidate_pool(const Dataset& dataset, const TrainConfig& config) {
  config.validate();
  require(!dataset.empty(), ErrorCode::InvalidArgument, "train_candidate_pool: empty dataset");
  const std::size_t side = dataset.samples.front().image.extent(0);
  const std::vector<int> epochs = draw_pool_epochs(config);
  std::vector<PoolMember> pool(config.pool_size);
  parallel_for(config.pool_size, config.threads, [&](std::size_t i) {
    PoolMember m;
    m.net = MemberNetwork(pool_member_seed(config.seed, i), side);
    m.epochs = epochs[i];
    m.loss_history = train_member(m.net, dataset, epochs[i], config).loss_history;
    pool[i] = std::move(m);
  });
  return pool;
}

std::vector<std::size_t> select_members(const std::vector<MemberNetwork>& pool,
                                        const Dataset& validation, std::size_t k,
                                        SelectionCriterion criterion, std::uint64_t seed,
                                        std::size_t threads) {
  require(k >= 1 && k <= pool.size(), ErrorCode::InvalidArgument,
          "select_members: k=" + std::to_string(k) + " outside [1, " +
              std::to_string(pool.size()) + "]");
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (criterion == SelectionCriterion::TopKValidation) {
    require(!validation.empty(), ErrorCode::InvalidArgument,
            "select_members: top-k selection needs a non-empty validation set");
    std::vector<double> acc(pool.size());
    parallel_for(pool.size(), threads,
                 [&](std::size_t i) { acc[i] = member_accuracy(pool[i], validation); });
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (acc[a] != acc[b]) return acc[a] > acc[b];
      return pool[a].seed() < pool[b].seed();
    });
  } else {
    Rng rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace wisdomnet
