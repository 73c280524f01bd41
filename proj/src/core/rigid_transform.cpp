#include "ibvs/rigid_transform.hpp"

#include <cmath>

#include "ibvs/errors.hpp"

namespace ibvs {

namespace {
constexpr double kRotationTolerance = 1e-9;
}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation,
                               const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw DegenerateGeometryError("rigid transform has non-finite entries");
  }
  if (orthonormality_error() > kRotationTolerance ||
      std::abs(rotation.determinant() - 1.0) > kRotationTolerance) {
    throw DegenerateGeometryError("rotation matrix is not a proper rotation");
  }
}

RigidTransform RigidTransform::from_translation(const Eigen::Vector3d& t) {
  return {Eigen::Matrix3d::Identity(), t};
}

RigidTransform RigidTransform::from_axis_angle(const Eigen::Vector3d& axis, double angle) {
  if (axis.norm() < 1e-12) throw DegenerateGeometryError("zero rotation axis");
  return {Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(),
          Eigen::Vector3d::Zero()};
}

RigidTransform RigidTransform::look_at(const Eigen::Vector3d& eye,
                                       const Eigen::Vector3d& target,
                                       const Eigen::Vector3d& up) {
  const Eigen::Vector3d z = target - eye;
  if (z.norm() < 1e-12) throw DegenerateGeometryError("look_at: eye equals target");
  const Eigen::Vector3d zc = z.normalized();
  Eigen::Vector3d xc = zc.cross(up);
  if (xc.norm() < 1e-9) throw DegenerateGeometryError("look_at: up parallel to view");
  xc.normalize();
  const Eigen::Vector3d yc = zc.cross(xc);
  // Rows are the camera axes expressed in world coordinates.
  Eigen::Matrix3d r;
  r.row(0) = xc.transpose();
  r.row(1) = yc.transpose();
  r.row(2) = zc.transpose();
  return {r, -r * eye};
}

RigidTransform RigidTransform::inverse() const {
  const Eigen::Matrix3d rt = rotation_.transpose();
  RigidTransform out;
  out.rotation_ = rt;
  out.translation_ = -rt * translation_;
  return out;
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation_ = a.rotation_ * b.rotation_;
  out.translation_ = a.rotation_ * b.translation_ + a.translation_;
  return out;
}

double RigidTransform::orthonormality_error() const {
  return (rotation_.transpose() * rotation_ - Eigen::Matrix3d::Identity())
      .cwiseAbs()
      .maxCoeff();
}

bool RigidTransform::is_identity(double tol) const {
  return (rotation_ - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() <= tol &&
         translation_.cwiseAbs().maxCoeff() <= tol;
}

}  // namespace ibvs
