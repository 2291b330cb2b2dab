#pragma once

// Forward and reverse-mode primitives for the member network: same-padded
// stride-1 convolution, non-overlapping max pooling, dense, ReLU, softmax and
// binary cross-entropy. All functions are pure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "wisdomnet/tensor.hpp"

namespace wisdomnet {

/// Kernels are laid out k x k x C_in x C_out, bias has C_out entries.
template <typename T>
struct ConvParams {
  Tensor<T> kernels;
  Tensor<T> bias;

  ConvParams() = default;
  ConvParams(std::size_t kernel_size, std::size_t in_channels, std::size_t filters)
      : kernels({kernel_size, kernel_size, in_channels, filters}), bias({filters}) {
    require(kernel_size % 2 == 1, ErrorCode::InvalidArgument, "convolution kernel size must be odd");
  }

  std::size_t kernel_size() const { return kernels.extent(0); }
  std::size_t in_channels() const { return kernels.extent(2); }
  std::size_t filters() const { return kernels.extent(3); }
};

template <typename T>
struct ConvGrads {
  Tensor<T> input;  // empty when not requested
  Tensor<T> kernels;
  Tensor<T> bias;
};

template <typename T>
struct DenseGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

/// Flat input offsets of the winning cell for every pooled output.
struct ArgmaxMap {
  Shape input_shape;
  Shape output_shape;
  std::vector<std::size_t> index;
};

template <typename T>
struct PoolResult {
  Tensor<T> output;
  ArgmaxMap argmax;
};

namespace detail {

inline void require_hwc(const Shape& s, const char* op) {
  require(s.size() == 3, ErrorCode::DimensionMismatch,
          std::string(op) + " expects an H x W x C tensor, got " + shape_string(s));
}

template <typename T>
inline T dot(const T* a, const T* b, std::size_t n) {
  T s{0};
#pragma omp simd reduction(+ : s)
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

template <typename T>
inline void axpy(T alpha, const T* x, T* y, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace detail

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const ConvParams<T>& params) {
  detail::require_hwc(input.shape(), "conv2d_forward");
  const std::size_t H = input.extent(0), W = input.extent(1), C = input.extent(2);
  const std::size_t k = params.kernel_size(), F = params.filters();
  require(C == params.in_channels(), ErrorCode::DimensionMismatch,
          "conv2d_forward: input has " + std::to_string(C) + " channels, kernel expects " +
              std::to_string(params.in_channels()));
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);

  Tensor<T> out({H, W, F});
  const T* in = input.raw();
  const T* K = params.kernels.raw();
  const T* b = params.bias.raw();
  T* o = out.raw();
  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      T* op = o + (y * W + x) * F;
      std::copy(b, b + F, op);
      for (std::size_t dy = 0; dy < k; ++dy) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + dy) - pad;
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
        for (std::size_t dx = 0; dx < k; ++dx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + dx) - pad;
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
          const T* ip = in + (static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix)) * C;
          const T* kp = K + (dy * k + dx) * C * F;
          for (std::size_t c = 0; c < C; ++c) detail::axpy(ip[c], kp + c * F, op, F);
        }
      }
    }
  }
  require_finite(out, "conv2d_forward");
  return out;
}

/// Gradients of a same-padded convolution. `with_input_grad=false` skips the
/// input gradient (first layer of a network).
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const ConvParams<T>& params,
                             const Tensor<T>& upstream, bool with_input_grad = true) {
  detail::require_hwc(input.shape(), "conv2d_backward");
  const std::size_t H = input.extent(0), W = input.extent(1), C = input.extent(2);
  const std::size_t k = params.kernel_size(), F = params.filters();
  require(C == params.in_channels(), ErrorCode::DimensionMismatch,
          "conv2d_backward: channel mismatch");
  require(upstream.shape() == Shape({H, W, F}), ErrorCode::DimensionMismatch,
          "conv2d_backward: upstream gradient " + shape_string(upstream.shape()) +
              " does not match output " + shape_string({H, W, F}));
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(k / 2);

  ConvGrads<T> g;
  g.kernels = Tensor<T>(params.kernels.shape());
  g.bias = Tensor<T>({F});
  if (with_input_grad) g.input = Tensor<T>(input.shape());

  const T* in = input.raw();
  const T* K = params.kernels.raw();
  const T* up = upstream.raw();
  T* gK = g.kernels.raw();
  T* gb = g.bias.raw();
  T* gin = with_input_grad ? g.input.raw() : nullptr;

  for (std::size_t y = 0; y < H; ++y) {
    for (std::size_t x = 0; x < W; ++x) {
      const T* gp = up + (y * W + x) * F;
      detail::axpy(T{1}, gp, gb, F);
      for (std::size_t dy = 0; dy < k; ++dy) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + dy) - pad;
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
        for (std::size_t dx = 0; dx < k; ++dx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(x + dx) - pad;
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(W)) continue;
          const std::size_t in_off =
              (static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix)) * C;
          const std::size_t k_off = (dy * k + dx) * C * F;
          for (std::size_t c = 0; c < C; ++c) {
            detail::axpy(in[in_off + c], gp, gK + k_off + c * F, F);
            if (gin) gin[in_off + c] += detail::dot(K + k_off + c * F, gp, F);
          }
        }
      }
    }
  }
  return g;
}

/// Non-overlapping max pooling with stride equal to the window; odd extents
/// are floored. Ties resolve to the first cell in row-major window order.
template <typename T>
PoolResult<T> maxpool2d_forward(const Tensor<T>& input, std::size_t k = 2) {
  detail::require_hwc(input.shape(), "maxpool2d_forward");
  const std::size_t H = input.extent(0), W = input.extent(1), C = input.extent(2);
  require(k >= 1, ErrorCode::InvalidArgument, "maxpool2d_forward: window must be positive");
  require(H >= k && W >= k, ErrorCode::DimensionMismatch,
          "maxpool2d_forward: input " + shape_string(input.shape()) + " smaller than window " +
              std::to_string(k));
  const std::size_t OH = H / k, OW = W / k;
  PoolResult<T> r;
  r.output = Tensor<T>({OH, OW, C});
  r.argmax.input_shape = input.shape();
  r.argmax.output_shape = r.output.shape();
  r.argmax.index.resize(r.output.size());
  for (std::size_t oy = 0; oy < OH; ++oy)
    for (std::size_t ox = 0; ox < OW; ++ox)
      for (std::size_t c = 0; c < C; ++c) {
        std::size_t best = ((oy * k) * W + ox * k) * C + c;
        T best_v = input[best];
        for (std::size_t dy = 0; dy < k; ++dy)
          for (std::size_t dx = 0; dx < k; ++dx) {
            const std::size_t idx = ((oy * k + dy) * W + ox * k + dx) * C + c;
            if (input[idx] > best_v) {
              best_v = input[idx];
              best = idx;
            }
          }
        const std::size_t o = (oy * OW + ox) * C + c;
        r.output[o] = best_v;
        r.argmax.index[o] = best;
      }
  require_finite(r.output, "maxpool2d_forward");
  return r;
}

template <typename T>
Tensor<T> maxpool2d_backward(const ArgmaxMap& argmax, const Tensor<T>& upstream) {
  require(upstream.shape() == argmax.output_shape && argmax.index.size() == upstream.size(),
          ErrorCode::DimensionMismatch,
          "maxpool2d_backward: upstream gradient " + shape_string(upstream.shape()) +
              " does not match pooled shape " + shape_string(argmax.output_shape));
  Tensor<T> g(argmax.input_shape);
  for (std::size_t i = 0; i < upstream.size(); ++i) g[argmax.index[i]] += upstream[i];
  return g;
}

/// Affine map over the flattened input; weights are n_in x n_out.
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
  require(weights.rank() == 2, ErrorCode::DimensionMismatch, "dense weights must be n_in x n_out");
  const std::size_t n_in = weights.extent(0), n_out = weights.extent(1);
  require(input.size() == n_in, ErrorCode::DimensionMismatch,
          "dense_forward: input length " + std::to_string(input.size()) + " != " +
              std::to_string(n_in));
  require(bias.size() == n_out, ErrorCode::DimensionMismatch, "dense_forward: bias length mismatch");
  Tensor<T> out({n_out});
  std::copy(bias.raw(), bias.raw() + n_out, out.raw());
  const T* w = weights.raw();
  for (std::size_t i = 0; i < n_in; ++i) {
    const T v = input[i];
    if (v != T{0}) detail::axpy(v, w + i * n_out, out.raw(), n_out);
  }
  require_finite(out, "dense_forward");
  return out;
}

template <typename T>
DenseGrads<T> dense_backward(const Tensor<T>& input, const Tensor<T>& weights,
                             const Tensor<T>& upstream, bool with_input_grad = true) {
  require(weights.rank() == 2, ErrorCode::DimensionMismatch, "dense weights must be n_in x n_out");
  const std::size_t n_in = weights.extent(0), n_out = weights.extent(1);
  require(input.size() == n_in && upstream.size() == n_out, ErrorCode::DimensionMismatch,
          "dense_backward: shape mismatch");
  DenseGrads<T> g;
  g.weights = Tensor<T>(weights.shape());
  g.bias = Tensor<T>({n_out}, std::vector<T>(upstream.data().begin(), upstream.data().end()));
  if (with_input_grad) g.input = Tensor<T>(input.shape());
  const T* w = weights.raw();
  const T* up = upstream.raw();
  T* gw = g.weights.raw();
  for (std::size_t i = 0; i < n_in; ++i) {
    const T v = input[i];
    if (v != T{0}) detail::axpy(v, up, gw + i * n_out, n_out);
    if (with_input_grad) g.input[i] = detail::dot(w + i * n_out, up, n_out);
  }
  return g;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& input) {
  Tensor<T> out = input;
  out.drop_grad();
  for (T& v : out.data()) v = v > T{0} ? v : T{0};
  require_finite(out, "relu");
  return out;
}

/// Passes the gradient where the forward input was strictly positive.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& upstream) {
  require(input.shape() == upstream.shape(), ErrorCode::DimensionMismatch,
          "relu_backward: shape mismatch");
  Tensor<T> g(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) g[i] = input[i] > T{0} ? upstream[i] : T{0};
  return g;
}

template <typename T>
Tensor<T> softmax(const Tensor<T>& input) {
  require(input.all_finite(), ErrorCode::NonFinite, "softmax: non-finite input");
  Tensor<T> out(input.shape());
  const T mx = *std::max_element(input.data().begin(), input.data().end());
  T sum{0};
  for (std::size_t i = 0; i < input.size(); ++i) {
    out[i] = std::exp(input[i] - mx);
    sum += out[i];
  }
  for (T& v : out.data()) v /= sum;
  return out;
}

/// Jacobian-vector product given the softmax output.
template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& output, const Tensor<T>& upstream) {
  require(output.shape() == upstream.shape(), ErrorCode::DimensionMismatch,
          "softmax_backward: shape mismatch");
  T s{0};
  for (std::size_t i = 0; i < output.size(); ++i) s += output[i] * upstream[i];
  Tensor<T> g(output.shape());
  for (std::size_t i = 0; i < output.size(); ++i) g[i] = output[i] * (upstream[i] - s);
  return g;
}

inline constexpr double kLogClamp = 1e-7;
inline constexpr double kRowSumTolerance = 1e-4;

namespace detail {

template <typename T>
void check_loss_inputs(const Tensor<T>& labels, const Tensor<T>& predicted) {
  require(labels.rank() == 2 && labels.extent(1) == 2 && predicted.shape() == labels.shape(),
          ErrorCode::DimensionMismatch,
          "cross_entropy_loss expects matching N x 2 labels and predictions, got " +
              shape_string(labels.shape()) + " and " + shape_string(predicted.shape()));
  for (std::size_t i = 0; i < predicted.extent(0); ++i) {
    const double row = static_cast<double>(predicted[2 * i]) + static_cast<double>(predicted[2 * i + 1]);
    require(std::abs(row - 1.0) <= kRowSumTolerance, ErrorCode::InvalidArgument,
            "cross_entropy_loss: prediction row " + std::to_string(i) + " sums to " +
                std::to_string(row));
  }
}

}  // namespace detail

/// Mean binary cross-entropy over the rows, evaluated on column 1 (the y=1
/// class). Probabilities are clamped to [1e-7, 1 - 1e-7] before the log.
template <typename T>
T cross_entropy_loss(const Tensor<T>& labels, const Tensor<T>& predicted) {
  detail::check_loss_inputs(labels, predicted);
  const std::size_t rows = labels.extent(0);
  const T lo = static_cast<T>(kLogClamp), hi = static_cast<T>(1.0 - kLogClamp);
  T total{0};
  for (std::size_t i = 0; i < rows; ++i) {
    const T y = labels[2 * i + 1];
    const T p = std::clamp(predicted[2 * i + 1], lo, hi);
    total += y * std::log(p) + (T{1} - y) * std::log(T{1} - p);
  }
  return -total / static_cast<T>(rows);
}

/// Gradient of cross_entropy_loss with respect to the prediction matrix.
/// Column 0 carries no gradient; the clamp has zero slope outside its range.
template <typename T>
Tensor<T> cross_entropy_backward(const Tensor<T>& labels, const Tensor<T>& predicted) {
  detail::check_loss_inputs(labels, predicted);
  const std::size_t rows = labels.extent(0);
  const T lo = static_cast<T>(kLogClamp), hi = static_cast<T>(1.0 - kLogClamp);
  Tensor<T> g(predicted.shape());
  for (std::size_t i = 0; i < rows; ++i) {
    const T y = labels[2 * i + 1];
    const T raw = predicted[2 * i + 1];
    if (raw < lo || raw > hi) continue;
    g[2 * i + 1] = -(y / raw - (T{1} - y) / (T{1} - raw)) / static_cast<T>(rows);
  }
  return g;
}

}  // namespace wisdomnet
