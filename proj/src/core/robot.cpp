#include "ibvs/robot.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "ibvs/errors.hpp"

namespace ibvs {

namespace {

Eigen::Matrix3d rot_z(double a) {
  Eigen::Matrix3d r;
  r << std::cos(a), -std::sin(a), 0.0, std::sin(a), std::cos(a), 0.0, 0.0, 0.0, 1.0;
  return r;
}
Eigen::Matrix3d rot_y(double a) {
  Eigen::Matrix3d r;
  r << std::cos(a), 0.0, std::sin(a), 0.0, 1.0, 0.0, -std::sin(a), 0.0, std::cos(a);
  return r;
}
Eigen::Matrix3d d_rot_z(double a) {
  Eigen::Matrix3d r;
  r << -std::sin(a), -std::cos(a), 0.0, std::cos(a), -std::sin(a), 0.0, 0.0, 0.0, 0.0;
  return r;
}
Eigen::Matrix3d d_rot_y(double a) {
  Eigen::Matrix3d r;
  r << -std::sin(a), 0.0, std::cos(a), 0.0, 0.0, 0.0, -std::cos(a), 0.0, -std::sin(a);
  return r;
}

}  // namespace

std::size_t coordinate_count(RobotModelKind kind) {
  return kind == RobotModelKind::kArm5 ? 5 : 3;
}

bool is_angular_coordinate(RobotModelKind kind, std::size_t index) {
  return kind == RobotModelKind::kArm5 && index >= 3;
}

std::string_view to_string(RobotModelKind kind) {
  return kind == RobotModelKind::kArm5 ? "arm5" : "cartesian3";
}

RobotModelKind robot_model_from_string(std::string_view name) {
  if (name == "cartesian3") return RobotModelKind::kCartesian3;
  if (name == "arm5") return RobotModelKind::kArm5;
  throw UnknownEntityError("robot model '" + std::string(name) + "'");
}

JointLimits JointLimits::defaults(RobotModelKind kind) {
  JointLimits limits;
  if (kind == RobotModelKind::kArm5) {
    limits.lower.resize(5);
    limits.upper.resize(5);
    limits.lower << -1.5, -1.5, -1.5, -std::numbers::pi, -std::numbers::pi;
    limits.upper << 1.5, 1.5, 1.5, std::numbers::pi, std::numbers::pi;
  } else {
    limits.lower = Eigen::Vector3d::Constant(-1.0);
    limits.upper = Eigen::Vector3d::Constant(1.0);
  }
  return limits;
}

RobotState RobotState::make(RobotModelKind kind, const Eigen::VectorXd& coordinates) {
  RobotState state;
  state.kind = kind;
  state.coordinates = coordinates;
  state.limits = JointLimits::defaults(kind);
  state.validate();
  return state;
}

void RobotState::validate() const {
  const auto m = static_cast<Eigen::Index>(coordinate_count(kind));
  if (coordinates.size() != m || limits.lower.size() != m || limits.upper.size() != m) {
    throw ShapeError("robot coordinates/limits do not match the model dimension");
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const double v = coordinates[i];
    const auto idx = static_cast<std::size_t>(i);
    bool ok = std::isfinite(v) && v >= limits.lower[i] && v <= limits.upper[i];
    if (is_angular_coordinate(kind, idx)) {
      ok = ok && v > -std::numbers::pi && v <= std::numbers::pi;
    }
    if (!ok) throw JointLimitError(idx, v, limits.lower[i], limits.upper[i]);
  }
}

RigidTransform forward_tool_pose(const RobotState& state) {
  state.validate();
  const Eigen::Vector3d t = state.coordinates.head<3>();
  if (state.kind == RobotModelKind::kCartesian3) return RigidTransform::from_translation(t);
  const double pan = state.coordinates[3];
  const double tilt = state.coordinates[4];
  return {rot_z(pan) * rot_y(tilt), t};
}

Eigen::Matrix<double, 3, Eigen::Dynamic> tool_point_jacobian(
    const RobotState& state, const Eigen::Vector3d& local_point) {
  Eigen::Matrix<double, 3, Eigen::Dynamic> jac =
      tool_direction_jacobian(state, local_point);
  jac.leftCols<3>() = Eigen::Matrix3d::Identity();
  return jac;
}

Eigen::Matrix<double, 3, Eigen::Dynamic> tool_direction_jacobian(
    const RobotState& state, const Eigen::Vector3d& local_direction) {
  state.validate();
  const auto m = static_cast<Eigen::Index>(state.size());
  Eigen::Matrix<double, 3, Eigen::Dynamic> jac = Eigen::MatrixXd::Zero(3, m);
  if (state.kind == RobotModelKind::kArm5) {
    const double pan = state.coordinates[3];
    const double tilt = state.coordinates[4];
    jac.col(3) = d_rot_z(pan) * rot_y(tilt) * local_direction;
    jac.col(4) = rot_z(pan) * d_rot_y(tilt) * local_direction;
  }
  return jac;
}

}  // namespace ibvs
