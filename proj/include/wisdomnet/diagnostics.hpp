#pragma once

#include <array>
#include <span>

#include "wisdomnet/member_network.hpp"

namespace wisdomnet {

inline constexpr double kDefaultHighVarianceThreshold = 0.15;

struct ClassDispersion {
  double mean = 0.0;
  double stddev = 0.0;  // unbiased sample standard deviation
  double normal_mu = 0.0;
  double normal_sigma = 0.0;
};

/// Spread of the member probabilities for one subject, per class index.
struct DispersionStats {
  std::size_t count = 0;
  std::array<ClassDispersion, 2> classes{};
  bool high_variance = false;
};

/// Method-of-moments normal fit over member outputs. With a single member the
/// standard deviation is reported as 0.
DispersionStats diagnose(std::span<const ProbabilityPair> member_probs,
                         double high_variance_threshold = kDefaultHighVarianceThreshold);

}  // namespace wisdomnet
