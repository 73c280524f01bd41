#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ibvs {

/// Proper rigid motion x -> R x + t. Used only on the ground-truth side.
class RigidTransform {
 public:
  RigidTransform() = default;
  /// Throws DegenerateGeometryError if `rotation` is not a proper rotation.
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Eigen::Vector3d& t);
  /// Rotation by `angle` radians about `axis` (normalized internally).
  static RigidTransform from_axis_angle(const Eigen::Vector3d& axis, double angle);
  /// Camera pose (world -> camera) with the optical axis (+Z) through `target`
  /// and image-down (+Y) roughly opposite to `up`.
  static RigidTransform look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                                const Eigen::Vector3d& up);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }

  Eigen::Vector3d apply(const Eigen::Vector3d& point) const {
    return rotation_ * point + translation_;
  }
  Eigen::Vector3d apply_direction(const Eigen::Vector3d& v) const { return rotation_ * v; }

  RigidTransform inverse() const;
  /// (a * b).apply(x) == a.apply(b.apply(x))
  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

  /// max |R^T R - I| entry
  double orthonormality_error() const;
  bool is_identity(double tol = 1e-12) const;

 private:
  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

}  // namespace ibvs
