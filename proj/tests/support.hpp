#pragma once
// Independent oracles shared by the unit and acceptance tests: a naive
// convolution, central finite differences and a few random generators.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>

#include "wisdomnet/member_network.hpp"
#include "wisdomnet/ops.hpp"
#include "wisdomnet/rng.hpp"
#include "wisdomnet/tensor.hpp"

namespace wntest {

using wisdomnet::ConvParams;
using wisdomnet::Rng;
using wisdomnet::Shape;
using wisdomnet::Tensor;

template <typename T>
Tensor<T> random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor<T> t(shape);
  for (T& v : t.data()) v = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
ConvParams<T> random_conv(std::size_t k, std::size_t cin, std::size_t filters, Rng& rng) {
  ConvParams<T> p(k, cin, filters);
  p.kernels = random_tensor<T>(p.kernels.shape(), rng);
  p.bias = random_tensor<T>(p.bias.shape(), rng);
  return p;
}

// Direct six-loop evaluation with explicit zero padding.
template <typename T>
Tensor<T> naive_conv(const Tensor<T>& in, const ConvParams<T>& p) {
  const long H = static_cast<long>(in.extent(0)), W = static_cast<long>(in.extent(1));
  const long C = static_cast<long>(in.extent(2));
  const long k = static_cast<long>(p.kernels.extent(0)), F = static_cast<long>(p.kernels.extent(3));
  const long pad = k / 2;
  Tensor<T> out({in.extent(0), in.extent(1), p.kernels.extent(3)});
  for (long y = 0; y < H; ++y)
    for (long x = 0; x < W; ++x)
      for (long f = 0; f < F; ++f) {
        double acc = static_cast<double>(p.bias[f]);
        for (long dy = 0; dy < k; ++dy)
          for (long dx = 0; dx < k; ++dx)
            for (long c = 0; c < C; ++c) {
              const long iy = y + dy - pad, ix = x + dx - pad;
              if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
              const double kv = static_cast<double>(
                  p.kernels[((dy * k + dx) * C + c) * F + f]);
              acc += kv * static_cast<double>(in[(iy * W + ix) * C + c]);
            }
        out[(y * W + x) * F + f] = static_cast<T>(acc);
      }
  return out;
}

inline double relative_error(double analytic, double numeric, double floor = 1e-8) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
  double max_relative = 0.0;
  std::size_t checked = 0;

  void add(double analytic, double numeric) {
    max_relative = std::max(max_relative, relative_error(analytic, numeric));
    ++checked;
  }
  void merge(const GradCheck& o) {
    max_relative = std::max(max_relative, o.max_relative);
    checked += o.checked;
  }
};

// Central difference of `loss` with respect to element i of `x`.
inline double central_difference(Tensor<double>& x, std::size_t i, double h,
                                 const std::function<double()>& loss) {
  const double saved = x[i];
  x[i] = saved + h;
  const double up = loss();
  x[i] = saved - h;
  const double down = loss();
  x[i] = saved;
  return (up - down) / (2.0 * h);
}

inline double weighted_sum(const Tensor<double>& out, const Tensor<double>& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * w[i];
  return s;
}

inline void compare(GradCheck& check, Tensor<double>& x, const Tensor<double>& analytic, double h,
                    const std::function<double()>& loss,
                    const std::function<bool(std::size_t)>& skip = {}) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (skip && skip(i)) continue;
    check.add(analytic[i], central_difference(x, i, h, loss));
  }
}

// Each check draws a random problem from `seed`, takes the scalar loss
// sum(w * op(x)) for random w, and compares every analytic partial.

inline GradCheck check_conv(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t ks[] = {1, 3, 5, 7};
  const std::size_t k = ks[seed % 4];
  const std::size_t H = 4 + rng() % 4, W = 4 + rng() % 4, C = 1 + rng() % 3, F = 1 + rng() % 4;
  Tensor<double> x = random_tensor<double>({H, W, C}, rng);
  ConvParams<double> p = random_conv<double>(k, C, F, rng);
  const Tensor<double> w = random_tensor<double>({H, W, F}, rng);
  const auto g = wisdomnet::conv2d_backward(x, p, w);
  auto loss = [&] { return weighted_sum(wisdomnet::conv2d_forward(x, p), w); };
  GradCheck c;
  const double h = 1e-3;
  compare(c, x, g.input, h, loss);
  compare(c, p.kernels, g.kernels, h, loss);
  compare(c, p.bias, g.bias, h, loss);
  return c;
}

inline GradCheck check_maxpool(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t H = 4 + rng() % 5, W = 4 + rng() % 5, C = 1 + rng() % 3;
  Tensor<double> x = random_tensor<double>({H, W, C}, rng);
  const auto fwd = wisdomnet::maxpool2d_forward(x, 2);
  const Tensor<double> w = random_tensor<double>(fwd.output.shape(), rng);
  const Tensor<double> g = wisdomnet::maxpool2d_backward(fwd.argmax, w);
  const double h = 1e-6;
  // Skip windows whose two largest values are within reach of the step.
  auto near_tie = [&](std::size_t i) {
    const std::size_t c = i % C, xx = (i / C) % W, yy = i / (C * W);
    const std::size_t oy = yy / 2, ox = xx / 2;
    if (oy * 2 + 2 > H || ox * 2 + 2 > W) return false;  // floored away
    double a = -1e300, b = -1e300;
    for (std::size_t dy = 0; dy < 2; ++dy)
      for (std::size_t dx = 0; dx < 2; ++dx) {
        const double v = x.at(oy * 2 + dy, ox * 2 + dx, c);
        if (v > a) {
          b = a;
          a = v;
        } else if (v > b) {
          b = v;
        }
      }
    return a - b < 100 * h;
  };
  GradCheck c;
  compare(c, x, g, h, [&] { return weighted_sum(wisdomnet::maxpool2d_forward(x, 2).output, w); },
          near_tie);
  return c;
}

inline GradCheck check_dense(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n_in = 1 + rng() % 12, n_out = 1 + rng() % 6;
  Tensor<double> x = random_tensor<double>({n_in}, rng);
  Tensor<double> W = random_tensor<double>({n_in, n_out}, rng);
  Tensor<double> b = random_tensor<double>({n_out}, rng);
  const Tensor<double> w = random_tensor<double>({n_out}, rng);
  const auto g = wisdomnet::dense_backward(x, W, w);
  auto loss = [&] { return weighted_sum(wisdomnet::dense_forward(x, W, b), w); };
  GradCheck c;
  const double h = 1e-3;
  compare(c, x, g.input, h, loss);
  compare(c, W, g.weights, h, loss);
  compare(c, b, g.bias, h, loss);
  return c;
}

inline GradCheck check_relu(std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> x = random_tensor<double>({3 + rng() % 5, 3 + rng() % 5, 1 + rng() % 3}, rng);
  const Tensor<double> w = random_tensor<double>(x.shape(), rng);
  const Tensor<double> g = wisdomnet::relu_backward(x, w);
  const double h = 1e-6;
  GradCheck c;
  compare(c, x, g, h, [&] { return weighted_sum(wisdomnet::relu(x), w); },
          [&](std::size_t i) { return std::abs(x[i]) < 100 * h; });
  return c;
}

inline GradCheck check_softmax(std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> x = random_tensor<double>({2 + rng() % 4}, rng, -3.0, 3.0);
  const Tensor<double> w = random_tensor<double>(x.shape(), rng);
  const Tensor<double> g = wisdomnet::softmax_backward(wisdomnet::softmax(x), w);
  GradCheck c;
  compare(c, x, g, 1e-5, [&] { return weighted_sum(wisdomnet::softmax(x), w); });
  return c;
}

inline GradCheck check_loss(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = 1 + rng() % 8;
  std::uniform_real_distribution<double> prob(0.05, 0.95);
  Tensor<double> labels({n, 2});
  Tensor<double> pred({n, 2});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = rng() % 2;
    labels[2 * i + y] = 1.0;
    pred[2 * i + 1] = prob(rng);
    pred[2 * i] = 1.0 - pred[2 * i + 1];
  }
  const Tensor<double> g = wisdomnet::cross_entropy_backward(labels, pred);
  GradCheck c;
  compare(c, pred, g, 1e-6, [&] { return wisdomnet::cross_entropy_loss(labels, pred); });
  return c;
}

// Softmax followed by the loss, differentiated with respect to the logits.
inline GradCheck check_softmax_loss(std::uint64_t seed) {
  Rng rng(seed);
  Tensor<double> logits = random_tensor<double>({2}, rng, -3.0, 3.0);
  Tensor<double> labels({1, 2});
  labels[rng() % 2] = 1.0;
  auto loss = [&] {
    return wisdomnet::cross_entropy_loss(labels, wisdomnet::softmax(logits).reshaped({1, 2}));
  };
  const Tensor<double> probs = wisdomnet::softmax(logits);
  const Tensor<double> up =
      wisdomnet::cross_entropy_backward(labels, probs.reshaped({1, 2})).reshaped({2});
  const Tensor<double> g = wisdomnet::softmax_backward(probs, up);
  GradCheck c;
  compare(c, logits, g, 1e-5, loss);
  return c;
}

// Image-independent member whose output is [1 - p1, p1]: all weights zero,
// final bias set to the logit of p1.
inline wisdomnet::MemberNetwork fixed_output(std::uint64_t seed, double p1, std::size_t side = 8) {
  wisdomnet::MemberNetwork n = wisdomnet::MemberNetwork::empty(seed, side);
  (*n.parameters()[11])[1] = static_cast<float>(std::log(p1 / (1.0 - p1)));
  return n;
}

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& name) {
    path = std::filesystem::temp_directory_path() /
           (name + "_" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace wntest
