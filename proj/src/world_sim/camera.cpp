#include "ibvs/camera.hpp"

#include <cmath>

#include "ibvs/errors.hpp"

namespace ibvs {

void CameraModel::validate() const {
  if (!(focal.x() > 0.0 && focal.y() > 0.0)) {
    throw DegenerateGeometryError("camera focal lengths must be positive");
  }
  if (!(image_size.x() > 0.0 && image_size.y() > 0.0)) {
    throw DegenerateGeometryError("camera image size must be positive");
  }
  if (!(pixel_noise_sigma >= 0.0)) {
    throw DegenerateGeometryError("pixel noise sigma must be non-negative");
  }
  if (!std::isfinite(radial_distortion)) {
    throw DegenerateGeometryError("radial distortion must be finite");
  }
}

std::optional<Eigen::Vector2d> project(const CameraModel& camera,
                                       const Eigen::Vector3d& point) {
  const Eigen::Vector3d pc = camera.pose.apply(point);
  if (!(pc.z() > kMinDepth)) return std::nullopt;
  const double x = pc.x() / pc.z();
  const double y = pc.y() / pc.z();
  const double radial = 1.0 + camera.radial_distortion * (x * x + y * y);
  return Eigen::Vector2d(camera.focal.x() * x * radial + camera.principal_point.x(),
                         camera.focal.y() * y * radial + camera.principal_point.y());
}

Eigen::Matrix<double, 2, 3> projection_jacobian(const CameraModel& camera,
                                               const Eigen::Vector3d& point) {
  const Eigen::Vector3d pc = camera.pose.apply(point);
  if (!(pc.z() > kMinDepth)) throw DegenerateProjectionError("point behind camera plane");
  const double z = pc.z();
  const double x = pc.x() / z;
  const double y = pc.y() / z;
  const double k1 = camera.radial_distortion;
  const double radial = 1.0 + k1 * (x * x + y * y);

  // pixel <- distorted normalized coordinates <- normalized <- camera frame <- world
  Eigen::Matrix2d d_pixel_d_norm;
  d_pixel_d_norm << camera.focal.x() * (radial + 2.0 * k1 * x * x),
      camera.focal.x() * 2.0 * k1 * x * y, camera.focal.y() * 2.0 * k1 * x * y,
      camera.focal.y() * (radial + 2.0 * k1 * y * y);
  Eigen::Matrix<double, 2, 3> d_norm_d_cam;
  d_norm_d_cam << 1.0 / z, 0.0, -x / z, 0.0, 1.0 / z, -y / z;
  return d_pixel_d_norm * d_norm_d_cam * camera.pose.rotation();
}

Eigen::Vector2d sample_pixel_noise(const CameraModel& camera, std::mt19937_64& rng) {
  if (camera.pixel_noise_sigma <= 0.0) return Eigen::Vector2d::Zero();
  std::normal_distribution<double> normal(0.0, camera.pixel_noise_sigma);
  const double du = normal(rng);
  const double dv = normal(rng);
  return {du, dv};
}

}  // namespace ibvs
