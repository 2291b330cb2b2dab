#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wisdomnet/ops.hpp"
#include "wisdomnet/rng.hpp"
#include "wisdomnet/tensor.hpp"

namespace wisdomnet {

/// Two-class output. For the COVID layer index 0 is positive and index 1 is
/// negative; for the ARDS layer index 0 is non-ARDS and index 1 is ARDS.
struct ProbabilityPair {
  double p_class0 = 0.5;
  double p_class1 = 0.5;

  double operator[](std::size_t i) const { return i == 0 ? p_class0 : p_class1; }
  bool valid(double tol = 1e-6) const {
    return p_class0 >= 0.0 && p_class0 <= 1.0 && p_class1 >= 0.0 && p_class1 <= 1.0 &&
           std::abs(p_class0 + p_class1 - 1.0) <= tol;
  }
  friend bool operator==(const ProbabilityPair&, const ProbabilityPair&) = default;
};

/// The fixed member topology:
///   Conv7x64 -> ReLU -> Max2 -> Conv3x64 -> ReLU -> Max2 -> Conv3x64 -> ReLU
///   -> Flatten -> Dense64 -> ReLU -> Dense32 -> ReLU -> Dense2 -> softmax
template <typename T>
class BasicMemberNetwork {
 public:
  static constexpr std::size_t kChannels = 3;
  static constexpr std::size_t kFilters = 64;
  static constexpr std::size_t kFirstKernel = 7;
  static constexpr std::size_t kKernel = 3;
  static constexpr std::size_t kPool = 2;
  static constexpr std::size_t kHidden1 = 64;
  static constexpr std::size_t kHidden2 = 32;
  static constexpr std::size_t kOutputs = 2;
  static constexpr std::size_t kDefaultInputSide = 256;
  static constexpr std::size_t kParameterBuffers = 12;

  struct Trace {
    Tensor<T> image;
    Tensor<T> conv1, conv2, conv3;  // pre-activation
    PoolResult<T> pool1, pool2;
    Tensor<T> flat;
    Tensor<T> dense1, dense1_act, dense2, dense2_act;
    Tensor<T> logits, probs;
  };

  BasicMemberNetwork() = default;

  /// He-initialised weights (variance 2 / fan_in), zero biases.
  BasicMemberNetwork(std::uint64_t seed, std::size_t input_side = kDefaultInputSide)
      : seed_(seed), input_side_(input_side) {
    validate_side(input_side);
    allocate();
    Rng rng(derive_seed(seed, 0x6d656d626572ULL));
    for (Tensor<T>* p : weight_buffers()) {
      const std::size_t fan_in = p->rank() == 4 ? p->extent(0) * p->extent(1) * p->extent(2)
                                                : p->extent(0);
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
      for (T& w : p->data()) w = static_cast<T>(dist(rng));
    }
  }

  static void validate_side(std::size_t side) {
    require(side >= 8 && side % 4 == 0, ErrorCode::InvalidArgument,
            "input_side must be a multiple of 4 and at least 8, got " + std::to_string(side));
  }

  static std::size_t flatten_length_for(std::size_t side) {
    return (side / 4) * (side / 4) * kFilters;
  }

  static std::string architecture_fingerprint() {
    return "conv7x64>relu>max2>conv3x64>relu>max2>conv3x64>relu>flatten>dense64>relu>dense32>"
           "relu>dense2>softmax";
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t input_side() const noexcept { return input_side_; }
  std::size_t flatten_length() const { return flatten_length_for(input_side_); }

  /// Ordered parameter buffers: conv1 k/b, conv2 k/b, conv3 k/b, dense1 W/b,
  /// dense2 W/b, dense3 W/b.
  std::vector<Tensor<T>*> parameters() {
    return {&conv1_.kernels, &conv1_.bias, &conv2_.kernels, &conv2_.bias, &conv3_.kernels,
            &conv3_.bias,    &w1_,         &b1_,           &w2_,          &b2_,
            &w3_,            &b3_};
  }
  std::vector<const Tensor<T>*> parameters() const {
    return {&conv1_.kernels, &conv1_.bias, &conv2_.kernels, &conv2_.bias, &conv3_.kernels,
            &conv3_.bias,    &w1_,         &b1_,           &w2_,          &b2_,
            &w3_,            &b3_};
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const Tensor<T>* p : parameters()) n += p->size();
    return n;
  }

  std::vector<Shape> parameter_shapes() const {
    std::vector<Shape> shapes;
    for (const Tensor<T>* p : parameters()) shapes.push_back(p->shape());
    return shapes;
  }

  void zero_grad() {
    for (Tensor<T>* p : parameters()) {
      p->ensure_grad();
      p->zero_grad();
    }
  }

  void check_image(const Tensor<T>& image) const {
    require(image.shape() == Shape({input_side_, input_side_, kChannels}),
            ErrorCode::DimensionMismatch,
            "image shape " + shape_string(image.shape()) + " does not match network input " +
                shape_string({input_side_, input_side_, kChannels}));
    for (const T& v : image.data())
      require(v >= T{0} && v <= T{1}, ErrorCode::InvalidArgument,
              "image values must lie in [0, 1]");
  }

  Trace forward_trace(const Tensor<T>& image) const {
    check_image(image);
    Trace t;
    t.image = image;
    t.conv1 = conv2d_forward(image, conv1_);
    t.pool1 = maxpool2d_forward(relu(t.conv1), kPool);
    t.conv2 = conv2d_forward(t.pool1.output, conv2_);
    t.pool2 = maxpool2d_forward(relu(t.conv2), kPool);
    t.conv3 = conv2d_forward(t.pool2.output, conv3_);
    t.flat = relu(t.conv3).reshaped({flatten_length()});
    t.dense1 = dense_forward(t.flat, w1_, b1_);
    t.dense1_act = relu(t.dense1);
    t.dense2 = dense_forward(t.dense1_act, w2_, b2_);
    t.dense2_act = relu(t.dense2);
    t.logits = dense_forward(t.dense2_act, w3_, b3_);
    t.probs = softmax(t.logits);
    return t;
  }

  ProbabilityPair forward(const Tensor<T>& image) const {
    const Trace t = forward_trace(image);
    return {static_cast<double>(t.probs[0]), static_cast<double>(t.probs[1])};
  }

  /// Accumulates parameter gradients for d(loss)/d(probs) into every
  /// parameter's gradient buffer.
  void backward(const Trace& t, const Tensor<T>& grad_probs) {
    for (Tensor<T>* p : parameters()) p->ensure_grad();
    Tensor<T> g = softmax_backward(t.probs, grad_probs);

    DenseGrads<T> d3 = dense_backward(t.dense2_act, w3_, g);
    accumulate(w3_, d3.weights);
    accumulate(b3_, d3.bias);
    g = relu_backward(t.dense2, d3.input);

    DenseGrads<T> d2 = dense_backward(t.dense1_act, w2_, g);
    accumulate(w2_, d2.weights);
    accumulate(b2_, d2.bias);
    g = relu_backward(t.dense1, d2.input);

    DenseGrads<T> d1 = dense_backward(t.flat, w1_, g);
    accumulate(w1_, d1.weights);
    accumulate(b1_, d1.bias);
    g = relu_backward(t.conv3, d1.input.reshaped(t.conv3.shape()));

    ConvGrads<T> c3 = conv2d_backward(t.pool2.output, conv3_, g);
    accumulate(conv3_.kernels, c3.kernels);
    accumulate(conv3_.bias, c3.bias);
    g = relu_backward(t.conv2, maxpool2d_backward(t.pool2.argmax, c3.input));

    ConvGrads<T> c2 = conv2d_backward(t.pool1.output, conv2_, g);
    accumulate(conv2_.kernels, c2.kernels);
    accumulate(conv2_.bias, c2.bias);
    g = relu_backward(t.conv1, maxpool2d_backward(t.pool1.argmax, c2.input));

    ConvGrads<T> c1 = conv2d_backward(t.image, conv1_, g, /*with_input_grad=*/false);
    accumulate(conv1_.kernels, c1.kernels);
    accumulate(conv1_.bias, c1.bias);
  }

  template <typename U>
  BasicMemberNetwork<U> cast() const {
    BasicMemberNetwork<U> out = BasicMemberNetwork<U>::empty(seed_, input_side_);
    auto dst = out.parameters();
    auto src = parameters();
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i] = src[i]->template cast<U>();
    return out;
  }

  /// Zero-initialised network with allocated parameters.
  static BasicMemberNetwork empty(std::uint64_t seed, std::size_t input_side) {
    validate_side(input_side);
    BasicMemberNetwork n;
    n.seed_ = seed;
    n.input_side_ = input_side;
    n.allocate();
    return n;
  }

 private:
  void allocate() {
    conv1_ = ConvParams<T>(kFirstKernel, kChannels, kFilters);
    conv2_ = ConvParams<T>(kKernel, kFilters, kFilters);
    conv3_ = ConvParams<T>(kKernel, kFilters, kFilters);
    w1_ = Tensor<T>({flatten_length(), kHidden1});
    b1_ = Tensor<T>({kHidden1});
    w2_ = Tensor<T>({kHidden1, kHidden2});
    b2_ = Tensor<T>({kHidden2});
    w3_ = Tensor<T>({kHidden2, kOutputs});
    b3_ = Tensor<T>({kOutputs});
  }

  std::vector<Tensor<T>*> weight_buffers() {
    return {&conv1_.kernels, &conv2_.kernels, &conv3_.kernels, &w1_, &w2_, &w3_};
  }

  static void accumulate(Tensor<T>& param, const Tensor<T>& grad) {
    std::span<T> g = param.grad();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += grad[i];
  }

  std::uint64_t seed_ = 0;
  std::size_t input_side_ = 0;
  ConvParams<T> conv1_, conv2_, conv3_;
  Tensor<T> w1_, b1_, w2_, b2_, w3_, b3_;
};

using MemberNetwork = BasicMemberNetwork<float>;

inline constexpr std::uint32_t kWeightFormatVersion = 1;

/// Weight file layout (little-endian):
///   "WSNW" | u32 version | u32 input_side | u64 seed | u32 buffer count |
///   per buffer: u64 element count, count x f32
std::vector<std::uint8_t> serialize_weights(const MemberNetwork& net);
MemberNetwork deserialize_weights(std::span<const std::uint8_t> bytes,
                                  const std::string& origin = "<memory>");
void save_weights(const MemberNetwork& net, const std::filesystem::path& path);
MemberNetwork load_weights(const std::filesystem::path& path);

/// Writes `bytes` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

}  // namespace wisdomnet
