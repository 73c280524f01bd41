#include <cmath>

#include "ibvs/errors.hpp"
#include "ibvs/world.hpp"
#include "world_internal.hpp"

namespace ibvs {

namespace {

using Matrix3X = Eigen::Matrix<double, 3, Eigen::Dynamic>;

Eigen::MatrixXd point_jacobian(const Scene& scene, const PointFeatureSpec& spec) {
  const auto local = detail::tool_point_local(scene, spec.tool_point);
  if (!local) throw UnknownEntityError(spec.tool_point);
  const RigidTransform tool = forward_tool_pose(scene.robot);
  const Eigen::Vector3d p = tool.apply(*local);
  const Matrix3X dp = tool_point_jacobian(scene.robot, *local);

  const auto n = static_cast<Eigen::Index>(scene.cameras.size());
  Eigen::MatrixXd jac(2 * n, dp.cols());
  for (Eigen::Index c = 0; c < n; ++c) {
    jac.middleRows<2>(2 * c) = projection_jacobian(scene.cameras[c], p) * dp;
  }
  return jac;
}

Eigen::MatrixXd orientation_jacobian(const Scene& scene, const OrientationFeatureSpec& spec) {
  const RigidTransform tool = forward_tool_pose(scene.robot);
  const Observation noiseless = observe(scene, nullptr);
  const std::size_t axes = spec.axes.size();
  const auto m = static_cast<Eigen::Index>(scene.robot.size());
  Eigen::MatrixXd jac(static_cast<Eigen::Index>(axes * scene.cameras.size()), m);

  Eigen::Index row = 0;
  for (std::size_t c = 0; c < scene.cameras.size(); ++c) {
    const CameraModel& cam = scene.cameras[c];
    for (std::size_t a = 0; a < axes; ++a) {
      const auto dir = detail::tool_direction(scene, spec.axes[a].tool_direction);
      if (!dir) throw UnknownEntityError(spec.axes[a].tool_direction);
      const Eigen::Vector3d b = tool.apply(dir->base);
      const Eigen::Vector3d e = b + kDirectionSegment * tool.apply_direction(dir->direction);
      const Matrix3X db = tool_point_jacobian(scene.robot, dir->base);
      const Matrix3X dv = tool_direction_jacobian(scene.robot, dir->direction);

      const auto pb = project(cam, b);
      const auto pe = project(cam, e);
      if (!pb || !pe) throw DegenerateProjectionError("tool direction behind camera");
      const Eigen::Vector2d d = *pe - *pb;
      if (d.norm() < kMinImageVectorNorm) {
        throw DegenerateProjectionError("tool direction along the optical axis");
      }
      const Eigen::MatrixXd dd = projection_jacobian(cam, e) * (db + kDirectionSegment * dv) -
                                 projection_jacobian(cam, b) * db;
      const Eigen::RowVectorXd dtheta = (d.x() * dd.row(1) - d.y() * dd.row(0)) / d.squaredNorm();

      const double theta = std::atan2(d.y(), d.x());
      double goal = 0.0;
      if (spec.fixed_goal_angles.empty()) {
        goal = image_angle(noiseless[c].direction(spec.axes[a].target_direction)).radians();
      } else {
        goal = spec.fixed_goal_angles.at(c).at(a);
      }
      // d/dtheta [cos(goal - theta) - 1] = sin(goal - theta)
      jac.row(row++) = std::sin(goal - theta) * dtheta;
    }
  }
  return jac;
}

Eigen::MatrixXd shadow_jacobian(const Scene& scene, const ShadowFeatureSpec& spec) {
  if (spec.camera >= scene.cameras.size()) throw UnknownEntityError("shadow camera");
  const auto local = detail::tool_point_local(scene, spec.tool_point);
  if (!local) throw UnknownEntityError(spec.tool_point);
  const CameraModel& cam = scene.cameras[spec.camera];
  const Eigen::Vector3d tip = forward_tool_pose(scene.robot).apply(*local);
  const Eigen::Vector3d shadow = shadow_point(tip, scene.plane, scene.light_direction);
  const Eigen::Vector3d& l = scene.light_direction;
  const Eigen::Vector3d& n = scene.plane.normal;
  const Eigen::Matrix3d d_shadow_d_tip =
      Eigen::Matrix3d::Identity() - l * n.transpose() / n.dot(l);

  const auto p_tip = project(cam, tip);
  const auto p_shadow = project(cam, shadow);
  if (!p_tip || !p_shadow) throw DegenerateProjectionError("shadow feature behind camera");
  const Eigen::Vector2d delta = *p_tip - *p_shadow;
  const double dist = delta.norm();
  if (dist <= 0.0) throw DegenerateGeometryError("shadow distance is not differentiable at 0");

  const Eigen::Matrix<double, 2, 3> d_delta =
      projection_jacobian(cam, tip) - projection_jacobian(cam, shadow) * d_shadow_d_tip;
  return (delta.transpose() / dist) * d_delta * tool_point_jacobian(scene.robot, *local);
}

}  // namespace

Eigen::MatrixXd analytic_feature_jacobian(const Scene& scene, const FeatureSpec& spec) {
  return std::visit(
      [&](const auto& s) -> Eigen::MatrixXd {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PointFeatureSpec>) {
          return point_jacobian(scene, s);
        } else if constexpr (std::is_same_v<T, OrientationFeatureSpec>) {
          return orientation_jacobian(scene, s);
        } else {
          return shadow_jacobian(scene, s);
        }
      },
      spec);
}

}  // namespace ibvs
