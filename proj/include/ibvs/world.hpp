#pragma once

#include <array>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ibvs/camera.hpp"
#include "ibvs/features.hpp"
#include "ibvs/rigid_transform.hpp"
#include "ibvs/robot.hpp"

namespace ibvs {

/// Tool geometry in tool-frame coordinates.
struct ToolGeometry {
  Eigen::Vector3d tip = Eigen::Vector3d::Zero();
  /// Unit vector along the shaft, pointing from the marker towards the tip.
  Eigen::Vector3d shaft = -Eigen::Vector3d::UnitZ();
  Eigen::Vector3d shaft_marker{0.0, 0.0, 0.05};
  std::array<Eigen::Vector3d, 2> axes{Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY()};
};

struct Plane {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();

  /// Signed distance, positive on the normal side.
  double signed_distance(const Eigen::Vector3d& p) const { return normal.dot(p - point); }
};

struct TargetFrame {
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  std::array<Eigen::Vector3d, 2> axes{Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY()};
};

/// Ground truth. The controller never reads this directly; it only receives
/// `observe` output through a plant.
struct Scene {
  RobotState robot;
  ToolGeometry tool;
  std::map<std::string, Eigen::Vector3d, std::less<>> targets;
  TargetFrame target_frame;
  Plane plane;
  Eigen::Vector3d light_direction = -Eigen::Vector3d::UnitZ();
  std::vector<CameraModel> cameras;
  /// Length (m) of the detected point pair a generic axis direction is
  /// measured from; sets the angular noise of noisy direction observations.
  double direction_baseline = 0.05;

  /// Throws on non-unit vectors, invalid cameras or out-of-limit robot state.
  void validate() const;
};

// Names used in observations.
inline constexpr const char* kToolTip = "tool_tip";
inline constexpr const char* kShaftMarker = "shaft_marker";
inline constexpr const char* kShadow = "shadow";
inline constexpr const char* kToolShaft = "tool_shaft";
inline constexpr const char* kScrewAxis = "screw_axis";
inline constexpr const char* kScrewHead = "screw_head";
inline constexpr const char* kScrewShank = "screw_shank_point";

/// Length of the 3D segment used to measure projected directions.
inline constexpr double kDirectionSegment = 1e-3;

/// Intersection of the ray tip + t * light (t >= 0) with the plane. Throws
/// DegenerateGeometryError when the ray is parallel to or points away from it.
Eigen::Vector3d shadow_point(const Eigen::Vector3d& tip, const Plane& plane,
                             const Eigen::Vector3d& light_direction);

/// Simulated detector. Noise is drawn from `rng` when given (independently per
/// pixel component); pass nullptr for the noiseless oracle. Throws
/// BehindCameraError naming the offending feature. The shadow is omitted when
/// it does not exist; unprojectable directions are reported as zero vectors.
Observation observe(const Scene& scene, std::mt19937_64* rng = nullptr);

struct Disturbance {
  /// "camera<i>" (0-based), a target name, "target_frame", "plane" or "workspace".
  std::string entity;
  RigidTransform transform;
};

/// Cameras, targets, the target frame and the plane rotate about their own
/// centre (world-aligned axes) and then translate; "workspace" applies the
/// transform about the world origin to every target, the target frame and the plane.
Scene perturb(Scene scene, const Disturbance& disturbance);

/// Noiseless f for the spec at the scene's current robot state.
Eigen::VectorXd feature_values(const Scene& scene, const FeatureSpec& spec);

/// Exact df/dr (k x m) of the noiseless features by the chain rule through
/// kinematics, distortion and projection.
Eigen::MatrixXd analytic_feature_jacobian(const Scene& scene, const FeatureSpec& spec);

// Ground-truth queries used by oracles and reports.
Eigen::Vector3d tool_point_world(const Scene& scene, std::string_view name);
Eigen::Vector3d tool_shaft_world(const Scene& scene);
/// World direction of an observed direction feature. Throws UnknownEntityError.
Eigen::Vector3d direction_world(const Scene& scene, std::string_view name);
/// Angle in degrees between two 3D directions.
double angle_between_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

}  // namespace ibvs
