#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ibvs/features.hpp"
#include "ibvs/jacobian.hpp"
#include "ibvs/robot.hpp"

namespace ibvs {

/// The controller's only access to the world: robot encoders, motion commands
/// and camera measurements. Implementations must not leak geometry.
class ServoPlant {
 public:
  virtual ~ServoPlant() = default;

  virtual RobotModelKind model() const = 0;
  virtual Eigen::VectorXd coordinates() const = 0;
  /// Moves the robot to absolute coordinates. May throw JointLimitError.
  virtual void move_to(const Eigen::VectorXd& r) = 0;
  virtual Observation observe() = 0;
  /// Called once at the top of every control iteration of a servo loop.
  virtual void begin_iteration(int /*iteration*/) {}
  /// Plant clock in seconds; used only for logging.
  virtual double elapsed_seconds() const { return 0.0; }
};

/// When the Jacobian is re-estimated by finite differences. Thresholds come
/// from EstimatorConfig.
struct ReinitPolicy {
  bool on_start = true;
  bool on_residual = true;
  bool on_age = false;
};

struct ServoTask {
  FeatureSpec features;
  /// Robot coordinates driven by this servo (indices into r).
  std::vector<std::size_t> coordinates;
  double gain = 0.3;
  /// Euclidean norm of f* - f for point/shadow features, largest |E| for orientation.
  double feature_tolerance = 1.0;
  int max_iterations = 500;
  /// Per active coordinate; a single entry applies to all.
  Eigen::VectorXd step_limit = Eigen::VectorXd::Constant(1, 0.01);
  ReinitPolicy reinit;

  /// Throws ShapeError when gain, tolerance, limits or coordinates are invalid.
  void validate() const;
  double step_limit_for(std::size_t active_index) const;
};

/// Default tasks for the three feature families.
ServoTask make_position_task(std::string goal_point, RobotModelKind kind);
ServoTask make_orientation_task(std::vector<AxisPair> axes, RobotModelKind kind);
ServoTask make_shadow_task(std::size_t side_camera, RobotModelKind kind);

enum class ServoStatus { kConverged, kMaxIterations, kAborted };
std::string_view to_string(ServoStatus status);

struct TrajectorySample {
  int iteration = 0;
  Eigen::VectorXd coordinates;  // full robot state r
  Eigen::VectorXd features;     // f
  Eigen::VectorXd goal;         // f*
  double feature_error = 0.0;
  double jacobian_residual = 0.0;
  double prediction_error = 0.0;
  bool reinitialized = false;
  double time = 0.0;
};

struct ServoResult {
  bool converged = false;
  ServoStatus status = ServoStatus::kMaxIterations;
  std::string abort_reason;
  /// Control steps taken.
  int iterations = 0;
  double final_feature_error = 0.0;
  std::vector<TrajectorySample> trajectory;
  int reinitializations = 0;
  int stationary_kicks = 0;
  /// Condition number of each finite-difference estimate.
  std::vector<double> condition_numbers;
  std::optional<ImageJacobian> initial_jacobian;
  std::optional<ImageJacobian> final_jacobian;
  /// Shadow servo: the stored vertical coordinate at contact.
  std::optional<double> stored_coordinate;
};

/// Largest |E| for orientation features, Euclidean norm otherwise.
double feature_error(FeatureKind kind, const Eigen::VectorXd& goal, const Eigen::VectorXd& now);

/// dr = K J^+ (f* - f), scaled as a whole so no component exceeds its step limit.
/// Throws RankDeficientError (via pseudo_inverse) and ShapeError on mismatch.
Eigen::VectorXd control_step(const ImageJacobian& jacobian, const FeatureVector& now,
                             const FeatureVector& goal, const ServoTask& task,
                             const EstimatorConfig& config);

/// Generic resolved-rate loop: observe, step, command, update J from the
/// realized (dr, df). Aborts (recording the trajectory) on lost features,
/// joint-limit violations or a rank-deficient Jacobian after re-initialization.
ServoResult run_servo(ServoPlant& plant, const ServoTask& task, const EstimatorConfig& config,
                      const ImageJacobian* warm_start = nullptr);

ServoResult run_position_servo(ServoPlant& plant, const ServoTask& task,
                               const EstimatorConfig& config);
/// Goal is the zero energy vector. Breaks the anti-parallel saddle with one kick.
ServoResult run_orientation_servo(ServoPlant& plant, const ServoTask& task,
                                  const EstimatorConfig& config);
/// Drives only the vertical coordinate on the tip-shadow distance.
ServoResult run_shadow_servo(ServoPlant& plant, const ServoTask& task,
                             const EstimatorConfig& config);

struct PoseServoTask {
  ServoTask position;
  ServoTask orientation;
  int max_rounds = 10;
};

struct PoseServoResult {
  bool converged = false;
  std::string abort_reason;
  int rounds = 0;
  std::vector<ServoResult> position_rounds;
  std::vector<ServoResult> orientation_rounds;
  /// Position error measured after the last orientation round.
  double final_position_error = 0.0;
  double final_orientation_error = 0.0;
};

/// Alternates position and orientation rounds (position first) until, at the
/// end of a round, both feature errors are within tolerance. A round whose
/// orientation servo needed no step ends the loop on the position servo's last
/// measurement; otherwise a fresh observation decides.
PoseServoResult run_pose_servo(ServoPlant& plant, const PoseServoTask& task,
                               const EstimatorConfig& config);

}  // namespace ibvs
