#include "wisdomnet/report.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>

namespace wisdomnet {

using nlohmann::json;

namespace {

json pairs_json(const std::vector<ProbabilityPair>& pairs) {
  json arr = json::array();
  for (const ProbabilityPair& p : pairs) arr.push_back({p.p_class0, p.p_class1});
  return arr;
}

std::vector<ProbabilityPair> pairs_from(const json& arr) {
  std::vector<ProbabilityPair> out;
  for (const json& p : arr) out.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return out;
}

json dispersion_json(const DispersionStats& s) {
  json j;
  j["count"] = s.count;
  for (std::size_t c = 0; c < 2; ++c) {
    j["mean"].push_back(s.classes[c].mean);
    j["std"].push_back(s.classes[c].stddev);
    j["normal_mu"].push_back(s.classes[c].normal_mu);
    j["normal_sigma"].push_back(s.classes[c].normal_sigma);
  }
  j["high_variance"] = s.high_variance;
  return j;
}

DispersionStats dispersion_from(const json& j) {
  DispersionStats s;
  s.count = j.at("count").get<std::size_t>();
  for (std::size_t c = 0; c < 2; ++c)
    s.classes[c] = {j.at("mean").at(c).get<double>(), j.at("std").at(c).get<double>(),
                    j.at("normal_mu").at(c).get<double>(), j.at("normal_sigma").at(c).get<double>()};
  s.high_variance = j.at("high_variance").get<bool>();
  return s;
}

}  // namespace

std::string report_to_json_line(const DecisionReport& r) {
  json j;
  j["subject_id"] = r.subject_id;
  j["covid"] = {{"p_positive", r.covid.p_class0}, {"p_negative", r.covid.p_class1}};
  j["decision"] = std::string(to_string(r.decision));
  if (r.ards_probability) {
    j["ards_probability"] = *r.ards_probability;
    j["ards"] = {{"p_non_ards", r.ards->p_class0}, {"p_ards", r.ards->p_class1}};
  }
  j["covid_members"] = pairs_json(r.covid_members);
  if (r.ards_probability) j["ards_members"] = pairs_json(r.ards_members);
  j["covid_dispersion"] = dispersion_json(r.covid_dispersion);
  if (r.ards_dispersion) j["ards_dispersion"] = dispersion_json(*r.ards_dispersion);
  return j.dump();
}

DecisionReport parse_report_line(std::string_view line) {
  try {
    const json j = json::parse(line);
    DecisionReport r;
    r.subject_id = j.at("subject_id").get<std::string>();
    r.covid = {j.at("covid").at("p_positive").get<double>(),
               j.at("covid").at("p_negative").get<double>()};
    r.decision = parse_decision(j.at("decision").get<std::string>());
    if (j.contains("ards_probability")) {
      r.ards_probability = j["ards_probability"].get<double>();
      r.ards = ProbabilityPair{j.at("ards").at("p_non_ards").get<double>(),
                               j.at("ards").at("p_ards").get<double>()};
      r.ards_members = pairs_from(j.at("ards_members"));
    }
    r.covid_members = pairs_from(j.at("covid_members"));
    r.covid_dispersion = dispersion_from(j.at("covid_dispersion"));
    if (j.contains("ards_dispersion")) r.ards_dispersion = dispersion_from(j["ards_dispersion"]);
    if ((r.decision == Decision::Negative) == r.ards_probability.has_value())
      fail(ErrorCode::Format, "report: ARDS fields must be present exactly for positive decisions");
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, std::string("malformed report record: ") + e.what());
  }
}

std::vector<DecisionReport> read_reports(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open reports file " + path.string());
  std::vector<DecisionReport> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(parse_report_line(line));
  return out;
}

std::string dispersion_to_json(const DispersionStats& stats) { return dispersion_json(stats).dump(); }

std::string plot_data(std::span<const DecisionReport> reports) {
  std::string out;
  char buf[64];
  auto block = [&](const DecisionReport& r, const char* layer, const char* column,
                   const std::vector<ProbabilityPair>& members, std::size_t cls) {
    out += "# subject " + r.subject_id + " layer " + layer + " decision " +
           std::string(to_string(r.decision)) + "\n# member_index\t" + column + "\n";
    for (std::size_t i = 0; i < members.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%zu\t%.17g\n", i, members[i][cls]);
      out += buf;
    }
    out += "\n\n";
  };
  for (const DecisionReport& r : reports) {
    block(r, "covid", "p_negative", r.covid_members, 1);
    if (r.ards_probability) block(r, "ards", "p_ards", r.ards_members, 1);
  }
  return out;
}

void emit_reports(std::span<const DecisionReport> reports, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::string lines;
  for (const DecisionReport& r : reports) lines += report_to_json_line(r) + "\n";
  write_file_atomic(dir / kReportsFile, lines);
  write_file_atomic(dir / kPlotDataFile, plot_data(reports));
}

}  // namespace wisdomnet
