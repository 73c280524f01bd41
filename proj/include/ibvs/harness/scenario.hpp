#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ibvs/harness/plant.hpp"
#include "ibvs/jacobian.hpp"
#include "ibvs/servo.hpp"
#include "ibvs/world.hpp"

namespace ibvs::harness {

enum class TaskType { kPosition, kOrientation, kShadow, kPose };
std::string_view to_string(TaskType type);

struct TaskSpec {
  std::string name;
  TaskType type = TaskType::kPosition;
  /// The servo task; for kPose this is the position half.
  ServoTask servo;
  /// kPose only.
  ServoTask orientation;
  int max_rounds = 10;
};

/// Parameter grid; every non-empty axis is swept, the product forms the grid.
struct SweepGrid {
  std::vector<double> camera_angle_deg;
  std::vector<double> gain;
  std::vector<double> noise_sigma;
  std::vector<double> distortion_k1;

  bool empty() const;
};

struct Scenario {
  std::string name = "scenario";
  Scene scene;
  std::vector<TaskSpec> tasks;
  std::vector<ScheduledDisturbance> disturbances;
  std::uint64_t seed = 1;
  int repeats = 10;
  std::optional<SweepGrid> sweep;
  EstimatorConfig estimator;
  double frame_period = 1.0 / 30.0;
  /// Pivot for camera-angle sweeps.
  Eigen::Vector3d workspace_center = Eigen::Vector3d::Zero();

  /// Throws ScenarioError on semantic problems (unknown entities, fewer than
  /// two cameras, bad indices, empty sweep axes).
  void validate() const;
};

/// Parses a YAML scenario. Errors carry file, line and column.
Scenario load_scenario(const std::filesystem::path& path);
Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");

/// The scenario with every default filled in, as YAML.
std::string echo_scenario(const Scenario& scenario);

}  // namespace ibvs::harness
