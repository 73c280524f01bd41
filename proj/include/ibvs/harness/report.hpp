#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ibvs/harness/runner.hpp"

namespace ibvs::harness {

enum class ReportFormat { kCsv, kJson };
ReportFormat report_format_from_string(std::string_view name);

/// One row per iteration: iteration, r..., f..., f*..., |f* - f|,
/// jacobian_residual, prediction_error, reinitialized, time.
std::string trajectory_csv(const ServoResult& result);
/// Per-task statistics, one row per task.
std::string summary_csv(const std::vector<RunReport>& reports);
/// One row per repeat and task.
std::string repeats_csv(const std::vector<RunReport>& reports);
std::string report_json(const std::vector<RunReport>& reports);

/// Writes the reports under `dir` (created if missing). CSV: summary.csv,
/// repeats.csv and trajectories/*.csv; JSON: report.json. Output depends only
/// on the reports, so equal inputs give byte-identical files.
void emit_report(const std::vector<RunReport>& reports, ReportFormat format,
                 const std::filesystem::path& dir);

}  // namespace ibvs::harness
