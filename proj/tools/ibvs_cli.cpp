// Scenario runner: ibvs run|sweep|exp1|exp2 --scenario <file> [options]
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ibvs/errors.hpp"
#include "ibvs/harness/report.hpp"
#include "ibvs/harness/runner.hpp"
#include "ibvs/harness/scenario.hpp"

namespace {

using namespace ibvs::harness;

struct Options {
  std::string scenario;
  std::optional<int> repeats;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string format = "csv";
  std::vector<double> angles;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--scenario", o.scenario, "Scenario file (YAML)")->required();
  cmd->add_option("--repeats", o.repeats, "Repeats per run (default: scenario value, 10)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Base seed; repeat i uses seed + i");
  cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
  cmd->add_option("--format", o.format, "Report format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

void print_summary(const std::vector<RunReport>& reports) {
  for (const auto& r : reports) {
    for (const auto& s : r.summary) {
      std::string line = fmt::format("{:<24} {:<18} {}/{} converged", r.label.empty() ? r.scenario : r.label,
                                     s.task, s.converged, s.repeats);
      if (s.position_error_m.count) {
        line += fmt::format("  pos {:.3g} m (sd {:.2g})", s.position_error_m.mean,
                            s.position_error_m.std);
      }
      if (s.orientation_error_deg.count) {
        line += fmt::format("  ori {:.3g} deg (sd {:.2g})", s.orientation_error_deg.mean,
                            s.orientation_error_deg.std);
      }
      if (s.height_m.count) {
        line += fmt::format("  height {:.3g} m (sd {:.2g})", s.height_m.mean, s.height_m.std);
      }
      if (s.condition_number.count) line += fmt::format("  cond {:.3g}", s.condition_number.mean);
      std::cout << line << "\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibration-free visual servoing simulator"};
  app.require_subcommand(1);
  Options o;
  CLI::App* run = app.add_subcommand("run", "Run the scenario's tasks");
  CLI::App* sweep = app.add_subcommand("sweep", "Run every point of the scenario's sweep grid");
  CLI::App* exp1 = app.add_subcommand("exp1", "Calibration sequence: cone, blade, tray surface");
  CLI::App* exp2 = app.add_subcommand("exp2", "Screw alignment, optionally over camera angles");
  for (CLI::App* cmd : {run, sweep, exp1, exp2}) add_common(cmd, o);
  exp2->add_option("--angles", o.angles, "Camera separations in degrees")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  try {
    Scenario scenario = load_scenario(o.scenario);
    if (o.seed) scenario.seed = *o.seed;
    const int repeats = o.repeats.value_or(scenario.repeats);
    const auto started = std::chrono::steady_clock::now();

    std::vector<RunReport> reports;
    if (run->parsed()) {
      reports.push_back(run_scenario(scenario, repeats));
    } else if (sweep->parsed()) {
      reports = run_sweep(scenario, repeats);
    } else if (exp1->parsed()) {
      reports.push_back(run_exp1_sequence(scenario, repeats));
    } else {
      std::vector<double> angles = o.angles;
      if (angles.empty() && scenario.sweep) angles = scenario.sweep->camera_angle_deg;
      if (scenario.tasks.empty()) scenario.tasks = exp2_tasks(scenario.scene);
      if (angles.empty()) {
        reports.push_back(run_scenario(scenario, repeats));
      } else {
        reports = sweep_camera_angle(scenario, angles, repeats);
      }
    }

    const std::filesystem::path out(o.out);
    std::filesystem::create_directories(out);
    std::ofstream(out / "scenario.yaml", std::ios::binary) << echo_scenario(scenario);
    emit_report(reports, report_format_from_string(o.format), out);
    print_summary(reports);

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::cerr << fmt::format("finished in {:.2f} s; reports in {}\n", seconds, out.string());

    bool ok = true;
    for (const auto& r : reports) ok = ok && r.all_converged();
    return ok ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
