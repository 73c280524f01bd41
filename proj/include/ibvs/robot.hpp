#pragma once

#include <cstddef>
#include <string_view>

#include <Eigen/Core>

#include "ibvs/rigid_transform.hpp"

namespace ibvs {

enum class RobotModelKind {
  kCartesian3,  // r = (x, y, z)
  kArm5,        // r = (x, y, z, pan, tilt)
};

std::size_t coordinate_count(RobotModelKind kind);
/// True for radian-valued coordinates (arm5 pan/tilt).
bool is_angular_coordinate(RobotModelKind kind, std::size_t index);
std::string_view to_string(RobotModelKind kind);
RobotModelKind robot_model_from_string(std::string_view name);

struct JointLimits {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static JointLimits defaults(RobotModelKind kind);
  Eigen::VectorXd range() const { return upper - lower; }
};

/// Robot coordinates r together with the model that interprets them.
struct RobotState {
  RobotModelKind kind = RobotModelKind::kCartesian3;
  Eigen::VectorXd coordinates = Eigen::VectorXd::Zero(3);
  JointLimits limits = JointLimits::defaults(RobotModelKind::kCartesian3);

  static RobotState make(RobotModelKind kind, const Eigen::VectorXd& coordinates);

  std::size_t size() const { return static_cast<std::size_t>(coordinates.size()); }
  /// Throws JointLimitError for the first offending coordinate and ShapeError
  /// on dimension mismatch.
  void validate() const;
};

/// cartesian3: pure translation by r. arm5: translation by r[0..2], rotation
/// Rz(pan) * Ry(tilt), i.e. pan about world Z then tilt about the panned Y axis.
RigidTransform forward_tool_pose(const RobotState& state);

/// d(T(r) * p)/dr for a tool-frame point p, 3 x m.
Eigen::Matrix<double, 3, Eigen::Dynamic> tool_point_jacobian(const RobotState& state,
                                                            const Eigen::Vector3d& local_point);
/// d(R(r) * v)/dr for a tool-frame direction v, 3 x m.
Eigen::Matrix<double, 3, Eigen::Dynamic> tool_direction_jacobian(
    const RobotState& state, const Eigen::Vector3d& local_direction);

}  // namespace ibvs
