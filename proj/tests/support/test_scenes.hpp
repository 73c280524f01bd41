#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Core>

#include "ibvs/world.hpp"

namespace ibvs::testing {

inline double deg(double d) { return d * std::numbers::pi / 180.0; }

/// Camera on a circle of `distance` about `center`, at azimuth/elevation in degrees.
inline CameraModel orbit_camera(const Eigen::Vector3d& center, double azimuth_deg,
                                double elevation_deg, double distance, double focal = 900.0,
                                double k1 = 0.0) {
  const double az = deg(azimuth_deg);
  const double el = deg(elevation_deg);
  const Eigen::Vector3d eye =
      center + distance * Eigen::Vector3d(std::cos(el) * std::cos(az),
                                          std::cos(el) * std::sin(az), std::sin(el));
  CameraModel cam;
  cam.pose = RigidTransform::look_at(eye, center, Eigen::Vector3d::UnitZ());
  cam.focal = {focal, focal};
  cam.principal_point = {640.0, 480.0};
  cam.image_size = {1280.0, 960.0};
  cam.radial_distortion = k1;
  return cam;
}

/// Desk-scale analogue of the dissector calibration: Cartesian robot, overhead
/// and side cameras 90 degrees apart, tray plane z = 0.
inline Scene dissector_scene() {
  Scene s;
  s.robot = RobotState::make(RobotModelKind::kCartesian3, Eigen::Vector3d(0.03, 0.04, 0.10));
  s.tool.tip = Eigen::Vector3d::Zero();
  s.tool.shaft_marker = {0.0, 0.0, 0.05};
  s.targets["cone_vertex"] = {0.0, 0.0, 0.08};
  s.targets["blade_center"] = {0.06, -0.03, 0.06};
  s.plane = Plane{Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ()};
  s.light_direction = -Eigen::Vector3d::UnitZ();
  CameraModel overhead;
  overhead.pose = RigidTransform::look_at({0.0, 0.0, 0.65}, {0.0, 0.0, 0.05},
                                          Eigen::Vector3d::UnitY());
  overhead.focal = {900.0, 900.0};
  CameraModel side;
  side.pose = RigidTransform::look_at({0.0, -0.6, 0.05}, {0.0, 0.0, 0.05},
                                      Eigen::Vector3d::UnitZ());
  side.focal = {900.0, 900.0};
  s.cameras = {overhead, side};
  return s;
}

/// Desk-scale screw alignment: 5-coordinate arm with a 15 cm screwdriver, screw
/// axis 40 degrees from vertical, two cameras at 30 degree elevation.
inline Scene screw_scene(double separation_deg = 90.0) {
  Scene s;
  s.tool.tip = {0.0, 0.0, -0.15};
  s.tool.shaft = -Eigen::Vector3d::UnitZ();
  s.tool.shaft_marker = {0.0, 0.0, -0.10};
  const double tilt = deg(40.0);
  const Eigen::Vector3d axis(-std::sin(tilt), 0.0, -std::cos(tilt));
  s.targets[kScrewShank] = {0.0, 0.0, 0.0};
  s.targets[kScrewHead] = -0.03 * axis;
  s.plane = Plane{Eigen::Vector3d::Zero(), Eigen::Vector3d::UnitZ()};
  const Eigen::Vector3d center(0.0, 0.0, 0.05);
  s.cameras = {orbit_camera(center, -135.0, 30.0, 0.8),
               orbit_camera(center, -135.0 + separation_deg, 30.0, 0.8)};
  // Start: shaft 30 degrees off the screw axis, tip ~5 cm from the shank point.
  Eigen::VectorXd r(5);
  r << 0.0, 0.0, 0.0, deg(30.0), deg(15.0);
  s.robot = RobotState::make(RobotModelKind::kArm5, r);
  const Eigen::Vector3d tip_offset = forward_tool_pose(s.robot).apply(s.tool.tip);
  r.head<3>() = Eigen::Vector3d(0.03, -0.03, 0.03) - tip_offset;
  s.robot = RobotState::make(RobotModelKind::kArm5, r);
  return s;
}

/// Random arm5 scene with 2-3 cameras looking at the workspace, optionally distorted.
inline Scene random_scene(std::mt19937_64& rng, bool distortion = true) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Scene s;
  s.tool.tip = {0.02 * u(rng), 0.02 * u(rng), -0.15 + 0.03 * u(rng)};
  s.tool.shaft = Eigen::Vector3d(0.2 * u(rng), 0.2 * u(rng), -1.0).normalized();
  s.tool.shaft_marker = s.tool.tip - 0.05 * s.tool.shaft;
  const Eigen::Vector3d a0 = Eigen::Vector3d(1.0, 0.3 * u(rng), 0.3 * u(rng)).normalized();
  s.tool.axes = {a0, s.tool.shaft.cross(a0).normalized()};
  s.targets["cone_vertex"] = {0.05 * u(rng), 0.05 * u(rng), 0.05 + 0.03 * u(rng)};
  s.targets[kScrewShank] = {0.05 * u(rng), 0.05 * u(rng), 0.0};
  s.targets[kScrewHead] = s.targets[kScrewShank] + Eigen::Vector3d(0.01, 0.01 * u(rng), 0.03);
  s.target_frame.origin = s.targets["cone_vertex"];
  s.light_direction = Eigen::Vector3d(0.3 * u(rng), 0.3 * u(rng), -1.0).normalized();

  Eigen::VectorXd r(5);
  r << 0.05 * u(rng), 0.05 * u(rng), 0.25 + 0.05 * u(rng), 2.5 * u(rng), 0.2 + 0.8 * std::abs(u(rng));
  s.robot = RobotState::make(RobotModelKind::kArm5, r);

  const int cameras = 2 + static_cast<int>(std::abs(u(rng)) > 0.5);
  const double az0 = 180.0 * u(rng);
  for (int c = 0; c < cameras; ++c) {
    s.cameras.push_back(orbit_camera({0.0, 0.0, 0.08}, az0 + 70.0 * c + 20.0 * u(rng),
                                     35.0 + 15.0 * u(rng), 0.7 + 0.2 * u(rng),
                                     900.0 + 200.0 * u(rng),
                                     distortion ? 0.15 * u(rng) : 0.0));
  }
  return s;
}

}  // namespace ibvs::testing
