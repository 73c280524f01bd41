#pragma once

#include <optional>
#include <random>

#include <Eigen/Core>

#include "ibvs/rigid_transform.hpp"

namespace ibvs {

/// Points with camera-frame depth at or below this value are behind the camera.
inline constexpr double kMinDepth = 1e-6;

/// Pinhole camera with a single radial distortion term. Only the simulator
/// sees these parameters; the controller treats the camera as an unknown map.
struct CameraModel {
  RigidTransform pose;  // world -> camera
  Eigen::Vector2d focal{800.0, 800.0};
  Eigen::Vector2d principal_point{640.0, 480.0};
  double radial_distortion = 0.0;  // k1
  double pixel_noise_sigma = 0.0;
  Eigen::Vector2d image_size{1280.0, 960.0};

  /// Throws DegenerateGeometryError on non-positive focal/image size or negative noise.
  void validate() const;
  Eigen::Vector3d center() const { return pose.inverse().translation(); }
  Eigen::Vector3d optical_axis() const { return pose.rotation().row(2).transpose(); }
};

/// Noiseless projection; nullopt when the point is at or behind the camera plane.
std::optional<Eigen::Vector2d> project(const CameraModel& camera, const Eigen::Vector3d& point);

/// d(pixel)/d(world point), 2x3. Requires the point to be in front of the camera.
Eigen::Matrix<double, 2, 3> projection_jacobian(const CameraModel& camera,
                                               const Eigen::Vector3d& point);

/// One draw of the camera's i.i.d. pixel noise (zero when sigma is 0).
Eigen::Vector2d sample_pixel_noise(const CameraModel& camera, std::mt19937_64& rng);

}  // namespace ibvs
