#include "wisdomnet/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

namespace wisdomnet {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const std::string s(v);
  std::size_t used = 0;
  try {
    out = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty())
    fail(ErrorCode::InvalidArgument, "config key '" + std::string(key) + "': not a number: '" + s + "'");
  return out;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view v) {
  Int out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    fail(ErrorCode::InvalidArgument,
         "config key '" + std::string(key) + "': not an integer: '" + std::string(v) + "'");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorCode::InvalidArgument,
       "config key '" + std::string(key) + "': not a boolean: '" + std::string(v) + "'");
}

/// Returns false if `key` is not a training key.
bool set_train_key(TrainConfig& c, std::string_view key, std::string_view v) {
  if (key == "learning_rate") c.learning_rate = to_double(key, v);
  else if (key == "adam_beta1") c.adam_beta1 = to_double(key, v);
  else if (key == "adam_beta2") c.adam_beta2 = to_double(key, v);
  else if (key == "adam_eps") c.adam_eps = to_double(key, v);
  else if (key == "epochs_min") c.epochs_min = to_int<int>(key, v);
  else if (key == "epochs_max") c.epochs_max = to_int<int>(key, v);
  else if (key == "batch_size") c.batch_size = to_int<std::size_t>(key, v);
  else if (key == "pool_size") c.pool_size = to_int<std::size_t>(key, v);
  else if (key == "selected_count" || key == "lambda") c.selected_count = to_int<std::size_t>(key, v);
  else if (key == "seed") c.seed = to_int<std::uint64_t>(key, v);
  else if (key == "augment") c.augment.enabled = to_bool(key, v);
  else if (key == "augment_flip_probability") c.augment.flip_probability = to_double(key, v);
  else if (key == "augment_max_rotation_deg") c.augment.max_rotation_deg = to_double(key, v);
  else if (key == "augment_max_translation") c.augment.max_translation = to_double(key, v);
  else if (key == "selection") c.selection = parse_selection(v);
  else if (key == "validation_fraction") c.validation_fraction = to_double(key, v);
  else if (key == "threads") c.threads = to_int<std::size_t>(key, v);
  else return false;
  return true;
}

}  // namespace

void WisdomConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key.starts_with("covid.")) {
    if (!set_train_key(covid, key.substr(6), value))
      fail(ErrorCode::InvalidArgument, "unknown config key '" + std::string(key) + "'");
    return;
  }
  if (key.starts_with("ards.")) {
    if (!set_train_key(ards, key.substr(5), value))
      fail(ErrorCode::InvalidArgument, "unknown config key '" + std::string(key) + "'");
    return;
  }
  if (key == "negative_threshold") policy.negative_threshold = to_double(key, value);
  else if (key == "positive_threshold") policy.positive_threshold = to_double(key, value);
  else if (key == "strict_boundary") policy.strict = to_bool(key, value);
  else if (key == "high_variance_threshold") high_variance_threshold = to_double(key, value);
  else if (key == "input_side") input_side = to_int<std::size_t>(key, value);
  else if (set_train_key(covid, key, value)) set_train_key(ards, key, value);
  else fail(ErrorCode::InvalidArgument, "unknown config key '" + std::string(key) + "'");
}

void WisdomConfig::validate() const {
  covid.validate();
  ards.validate();
  policy.validate();
  MemberNetwork::validate_side(input_side);
  require(high_variance_threshold >= 0.0, ErrorCode::InvalidArgument,
          "high_variance_threshold must be non-negative");
}

WisdomConfig parse_config(std::string_view text, const std::string& origin) {
  struct Entry {
    std::string key, value;
    std::size_t line;
  };
  std::vector<Entry> plain, prefixed;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view sv = line;
    if (const auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
    sv = trim(sv);
    if (sv.empty()) continue;
    const auto eq = sv.find('=');
    if (eq == std::string_view::npos)
      fail(ErrorCode::InvalidArgument,
           origin + ":" + std::to_string(line_no) + ": expected 'key = value'");
    Entry e{std::string(trim(sv.substr(0, eq))), std::string(trim(sv.substr(eq + 1))), line_no};
    (e.key.find('.') != std::string::npos ? prefixed : plain).push_back(std::move(e));
  }
  WisdomConfig cfg;
  for (const auto* group : {&plain, &prefixed})
    for (const Entry& e : *group) {
      try {
        cfg.set(e.key, e.value);
      } catch (const Error& err) {
        fail(err.code(), origin + ":" + std::to_string(e.line) + ": " + err.what());
      }
    }
  return cfg;
}

WisdomConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

}  // namespace wisdomnet
