#include "ibvs/harness/report.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ibvs/errors.hpp"

namespace ibvs::harness {

namespace {

constexpr const char* kReference =
    "# errors are measured against simulator ground truth; height is positive above the plane";

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string opt(const std::optional<double>& v) { return v ? num(*v) : ""; }

std::string csv_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string stat_cells(const Statistic& s) {
  if (s.count == 0) return ",";
  return num(s.mean) + "," + num(s.std);
}

std::string file_label(const RunReport& r) { return r.label.empty() ? "run" : r.label; }

std::string safe(std::string s) {
  for (char& c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
          c == '=')) {
      c = '_';
    }
  }
  return s;
}

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? number_or_null(*v) : nlohmann::json(nullptr);
}

nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number_or_null(v[i]));
  return out;
}

nlohmann::json stat_json(const Statistic& s) {
  if (s.count == 0) return {{"count", 0}, {"mean", nullptr}, {"std", nullptr}};
  return {{"count", s.count}, {"mean", number_or_null(s.mean)}, {"std", number_or_null(s.std)}};
}

nlohmann::json trajectory_json(const ServoResult& result) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : result.trajectory) {
    rows.push_back({{"iteration", s.iteration},
                    {"r", vector_json(s.coordinates)},
                    {"f", vector_json(s.features)},
                    {"f_goal", vector_json(s.goal)},
                    {"feature_error", number_or_null(s.feature_error)},
                    {"jacobian_residual", number_or_null(s.jacobian_residual)},
                    {"prediction_error", number_or_null(s.prediction_error)},
                    {"reinitialized", s.reinitialized},
                    {"time", number_or_null(s.time)}});
  }
  return rows;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw ScenarioError(fmt::format("cannot write '{}'", path.string()));
  file << text;
}

}  // namespace

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "csv") return ReportFormat::kCsv;
  if (name == "json") return ReportFormat::kJson;
  throw ScenarioError(fmt::format("unknown report format '{}' (csv, json)", name));
}

std::string trajectory_csv(const ServoResult& result) {
  std::string out = "iteration";
  if (!result.trajectory.empty()) {
    const auto& first = result.trajectory.front();
    for (Eigen::Index i = 0; i < first.coordinates.size(); ++i) out += fmt::format(",r{}", i);
    for (Eigen::Index i = 0; i < first.features.size(); ++i) out += fmt::format(",f{}", i);
    for (Eigen::Index i = 0; i < first.goal.size(); ++i) out += fmt::format(",f_goal{}", i);
  }
  out += ",feature_error,jacobian_residual,prediction_error,reinitialized,time\n";
  for (const auto& s : result.trajectory) {
    out += std::to_string(s.iteration);
    for (Eigen::Index i = 0; i < s.coordinates.size(); ++i) out += "," + num(s.coordinates[i]);
    for (Eigen::Index i = 0; i < s.features.size(); ++i) out += "," + num(s.features[i]);
    for (Eigen::Index i = 0; i < s.goal.size(); ++i) out += "," + num(s.goal[i]);
    out += fmt::format(",{},{},{},{},{}\n", num(s.feature_error), num(s.jacobian_residual),
                       num(s.prediction_error), s.reinitialized ? 1 : 0, num(s.time));
  }
  return out;
}

std::string summary_csv(const std::vector<RunReport>& reports) {
  std::string out = std::string(kReference) + "\n";
  out +=
      "label,task,type,repeats,converged,failure_rate,iterations_mean,iterations_std,"
      "position_error_mean_m,position_error_std_m,orientation_error_mean_deg,"
      "orientation_error_std_deg,height_mean_m,height_std_m,condition_number_mean,"
      "condition_number_std\n";
  for (const auto& r : reports) {
    for (const auto& s : r.summary) {
      const double failure =
          s.repeats > 0 ? static_cast<double>(s.repeats - s.converged) / s.repeats : 0.0;
      out += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\n", csv_quote(file_label(r)),
                         csv_quote(s.task), to_string(s.type), s.repeats, s.converged, num(failure),
                         stat_cells(s.iterations), stat_cells(s.position_error_m),
                         stat_cells(s.orientation_error_deg), stat_cells(s.height_m),
                         stat_cells(s.condition_number));
    }
  }
  return out;
}

std::string repeats_csv(const std::vector<RunReport>& reports) {
  std::string out = std::string(kReference) + "\n";
  out +=
      "label,repeat,seed,task,type,status,iterations,final_feature_error,reinitializations,"
      "condition_number,position_error_m,orientation_error_deg,height_m,stored_coordinates,"
      "abort_reason\n";
  for (const auto& r : reports) {
    for (const auto& rep : r.repeats) {
      for (const auto& t : rep.tasks) {
        std::string coords;
        for (Eigen::Index i = 0; i < t.stored_coordinates.size(); ++i) {
          coords += (i ? " " : "") + num(t.stored_coordinates[i]);
        }
        out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_quote(file_label(r)),
                           rep.repeat, rep.seed, csv_quote(t.task), to_string(t.type), t.status,
                           t.iterations, num(t.final_feature_error), t.reinitializations,
                           opt(t.condition_number), opt(t.position_error_m),
                           opt(t.orientation_error_deg), opt(t.height_m), csv_quote(coords),
                           csv_quote(t.abort_reason));
      }
    }
  }
  return out;
}

std::string report_json(const std::vector<RunReport>& reports) {
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : r.parameters) params[k] = v;
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& s : r.summary) {
      summary.push_back({{"task", s.task},
                         {"type", to_string(s.type)},
                         {"repeats", s.repeats},
                         {"converged", s.converged},
                         {"iterations", stat_json(s.iterations)},
                         {"position_error_m", stat_json(s.position_error_m)},
                         {"orientation_error_deg", stat_json(s.orientation_error_deg)},
                         {"height_m", stat_json(s.height_m)},
                         {"condition_number", stat_json(s.condition_number)}});
    }
    nlohmann::json repeats = nlohmann::json::array();
    for (const auto& rep : r.repeats) {
      nlohmann::json tasks = nlohmann::json::array();
      for (const auto& t : rep.tasks) {
        nlohmann::json segments = nlohmann::json::array();
        for (const auto& seg : t.segments) {
          nlohmann::json conds = nlohmann::json::array();
          for (double c : seg.result.condition_numbers) conds.push_back(number_or_null(c));
          segments.push_back({{"name", seg.name},
                              {"status", to_string(seg.result.status)},
                              {"iterations", seg.result.iterations},
                              {"reinitializations", seg.result.reinitializations},
                              {"condition_numbers", conds},
                              {"trajectory", trajectory_json(seg.result)}});
        }
        tasks.push_back({{"task", t.task},
                         {"type", to_string(t.type)},
                         {"status", t.status},
                         {"abort_reason", t.abort_reason},
                         {"iterations", t.iterations},
                         {"final_feature_error", number_or_null(t.final_feature_error)},
                         {"reinitializations", t.reinitializations},
                         {"condition_number", optional_json(t.condition_number)},
                         {"position_error_m", optional_json(t.position_error_m)},
                         {"orientation_error_deg", optional_json(t.orientation_error_deg)},
                         {"height_m", optional_json(t.height_m)},
                         {"stored_coordinates", vector_json(t.stored_coordinates)},
                         {"segments", segments}});
      }
      repeats.push_back({{"repeat", rep.repeat},
                         {"seed", rep.seed},
                         {"converged", rep.converged()},
                         {"tasks", tasks}});
    }
    runs.push_back({{"scenario", r.scenario},
                    {"label", r.label},
                    {"parameters", params},
                    {"failure_rate", r.failure_rate()},
                    {"summary", summary},
                    {"repeats", repeats}});
  }
  const nlohmann::json doc = {{"reference", "simulator ground truth; height positive above the plane"},
                              {"runs", runs}};
  return doc.dump(2) + "\n";
}

void emit_report(const std::vector<RunReport>& reports, ReportFormat format,
                 const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  if (format == ReportFormat::kJson) {
    write_file(dir / "report.json", report_json(reports));
    return;
  }
  write_file(dir / "summary.csv", summary_csv(reports));
  write_file(dir / "repeats.csv", repeats_csv(reports));
  const std::filesystem::path traj = dir / "trajectories";
  std::filesystem::create_directories(traj);
  for (const auto& r : reports) {
    for (const auto& rep : r.repeats) {
      for (std::size_t t = 0; t < rep.tasks.size(); ++t) {
        for (const auto& seg : rep.tasks[t].segments) {
          const std::string name =
              rep.tasks[t].segments.size() == 1
                  ? fmt::format("{}_rep{}_task{}_{}.csv", file_label(r), rep.repeat, t,
                                rep.tasks[t].task)
                  : fmt::format("{}_rep{}_task{}_{}_{}.csv", file_label(r), rep.repeat, t,
                                rep.tasks[t].task, seg.name);
          write_file(traj / safe(name), trajectory_csv(seg.result));
        }
      }
    }
  }
}

}  // namespace ibvs::harness
