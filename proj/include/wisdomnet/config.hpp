#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "wisdomnet/diagnostics.hpp"
#include "wisdomnet/ensemble.hpp"
#include "wisdomnet/trainer.hpp"

namespace wisdomnet {

/// Everything a pipeline run needs: per-layer training settings, the decision
/// policy and report settings.
///
/// Plain-text form, one `key = value` per line, `#` starts a comment. Training
/// keys without a prefix apply to both layers; `covid.` / `ards.` prefixed keys
/// apply to one layer and win over unprefixed ones regardless of order.
struct WisdomConfig {
  TrainConfig covid = TrainConfig::covid_defaults();
  TrainConfig ards = TrainConfig::ards_defaults();
  DecisionPolicy policy;
  double high_variance_threshold = kDefaultHighVarianceThreshold;
  std::size_t input_side = 256;

  void set(std::string_view key, std::string_view value);
  void validate() const;
};

WisdomConfig parse_config(std::string_view text, const std::string& origin = "<config>");
WisdomConfig load_config(const std::filesystem::path& path);

}  // namespace wisdomnet
