#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "spritecheck/experiment.hpp"

namespace spritecheck {

enum class ReportFormat { json, csv, html };
std::string to_string(ReportFormat format);
ReportFormat report_format_from_string(const std::string& name);

inline constexpr const char* kReportFormatTag = "spritecheck-report";
inline constexpr int kReportVersion = 1;

nlohmann::json report_to_json(const EvaluationTable& table);
EvaluationTable report_from_json(const nlohmann::json& j);

// One row per (bug, approach, metric) cell. The `repetition` column holds the
// number of repetitions the cell aggregates.
std::string report_csv(const EvaluationTable& table);
// Self-contained page: detection heatmap, accuracy row, effect sizes and
// boxplot summaries of the score distributions.
std::string report_html(const EvaluationTable& table);

// Writes the report and returns `path`. Throws on an unwritable path.
std::filesystem::path emit_report(const EvaluationTable& table, ReportFormat format, const std::filesystem::path& path);
EvaluationTable load_report(const std::filesystem::path& path);

}  // namespace spritecheck
