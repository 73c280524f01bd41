#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ibvs/harness/scenario.hpp"
#include "ibvs/servo.hpp"

namespace ibvs::harness {

/// One servo loop inside a task (pose tasks run several).
struct Segment {
  std::string name;
  ServoResult result;
};

struct TaskOutcome {
  std::string task;
  TaskType type = TaskType::kPosition;
  /// "converged", "max_iterations", "aborted" or "skipped".
  std::string status = "skipped";
  bool converged = false;
  std::string abort_reason;
  int iterations = 0;
  double final_feature_error = 0.0;
  int reinitializations = 0;
  /// Condition number of the first finite-difference Jacobian.
  std::optional<double> condition_number;
  /// Robot coordinates when the task ended.
  Eigen::VectorXd stored_coordinates;
  // Ground-truth errors.
  std::optional<double> position_error_m;
  std::optional<double> orientation_error_deg;
  /// Signed tip height above the plane (positive = above).
  std::optional<double> height_m;
  std::vector<Segment> segments;
};

struct RepeatReport {
  int repeat = 0;
  std::uint64_t seed = 0;
  std::vector<TaskOutcome> tasks;
  bool converged() const;
};

struct Statistic {
  int count = 0;
  double mean = 0.0;
  /// Sample standard deviation; 0 for fewer than two values.
  double std = 0.0;
};
Statistic summarize(const std::vector<double>& values);

struct TaskSummary {
  std::string task;
  TaskType type = TaskType::kPosition;
  int repeats = 0;
  int converged = 0;
  Statistic iterations;
  Statistic position_error_m;
  Statistic orientation_error_deg;
  Statistic height_m;
  Statistic condition_number;
};

struct RunReport {
  std::string scenario;
  /// Grid point label for sweeps, empty otherwise.
  std::string label;
  std::vector<std::pair<std::string, double>> parameters;
  std::vector<RepeatReport> repeats;
  std::vector<TaskSummary> summary;

  bool all_converged() const;
  /// Fraction of repeats in which some task did not converge.
  double failure_rate() const;
  const TaskSummary* find(std::string_view task) const;
};

/// Runs every task in order on a fresh plant per repeat, seeded with
/// seed + repeat. A task that does not converge ends its repeat; the
/// remaining tasks are reported as skipped.
RunReport run_scenario(const Scenario& scenario, int repeats);

/// Canonical calibration sequence: point servo to the cone vertex, point servo
/// to the blade centre, shadow servo. Scenario tasks override the defaults
/// when they are given in this form.
RunReport run_exp1_sequence(const Scenario& scenario, int repeats);
std::vector<TaskSpec> exp1_tasks(const Scene& scene);

/// Screw alignment: pose servo (tip to the shank point, shaft onto the screw axis).
std::vector<TaskSpec> exp2_tasks(const Scene& scene);

/// Camera 1 placed at `angle_deg` from camera 0 by rotating camera 0 about the
/// vertical axis through the workspace centre.
Scene place_second_camera(const Scene& scene, const Eigen::Vector3d& center, double angle_deg);

/// One report per angle, in the given order. Angles must lie in (0, 180).
std::vector<RunReport> sweep_camera_angle(const Scenario& base, const std::vector<double>& angles,
                                          int repeats);

/// One report per grid point of scenario.sweep (row-major over angle, gain,
/// noise, distortion).
std::vector<RunReport> run_sweep(const Scenario& scenario, int repeats);

}  // namespace ibvs::harness
