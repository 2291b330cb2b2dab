#include "wisdomnet/diagnostics.hpp"

#include <cmath>

namespace wisdomnet {

DispersionStats diagnose(std::span<const ProbabilityPair> member_probs,
                         double high_variance_threshold) {
  require(!member_probs.empty(), ErrorCode::InvalidArgument, "diagnose: no member probabilities");
  require(high_variance_threshold >= 0.0, ErrorCode::InvalidArgument,
          "diagnose: threshold must be non-negative");
  DispersionStats stats;
  stats.count = member_probs.size();
  const double n = static_cast<double>(member_probs.size());
  for (std::size_t c = 0; c < 2; ++c) {
    double sum = 0.0;
    for (const ProbabilityPair& p : member_probs) sum += p[c];
    const double mean = sum / n;
    double ss = 0.0;
    bool identical = true;
    for (const ProbabilityPair& p : member_probs) {
      ss += (p[c] - mean) * (p[c] - mean);
      identical = identical && p[c] == member_probs[0][c];
    }
    // Rounding in the mean would otherwise leave a tiny spread for equal values.
    const double sd = member_probs.size() > 1 && !identical ? std::sqrt(ss / (n - 1.0)) : 0.0;
    stats.classes[c] = {mean, sd, mean, sd};
    if (sd > high_variance_threshold) stats.high_variance = true;
  }
  return stats;
}

}  // namespace wisdomnet
