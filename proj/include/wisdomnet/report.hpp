#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wisdomnet/ensemble.hpp"

namespace wisdomnet {

/// One JSON object per line. ARDS fields are omitted for Negative subjects.
std::string report_to_json_line(const DecisionReport& report);
DecisionReport parse_report_line(std::string_view line);
std::vector<DecisionReport> read_reports(const std::filesystem::path& path);

std::string dispersion_to_json(const DispersionStats& stats);

/// Gnuplot-style blocks, one per subject and layer: a comment header then
/// `member_index probability` rows (P_negative for COVID, P_ards for ARDS).
std::string plot_data(std::span<const DecisionReport> reports);

inline constexpr const char* kReportsFile = "reports.jsonl";
inline constexpr const char* kPlotDataFile = "plot_data.tsv";

/// Writes reports.jsonl and plot_data.tsv into `dir`.
void emit_reports(std::span<const DecisionReport> reports, const std::filesystem::path& dir);

}  // namespace wisdomnet
