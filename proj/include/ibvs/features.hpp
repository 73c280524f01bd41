#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace ibvs {

/// What a (simulated or real) detector reports for one camera image: named
/// point features in pixels and named unit image-plane directions.
struct CameraMeasurement {
  std::map<std::string, Eigen::Vector2d, std::less<>> points;
  std::map<std::string, Eigen::Vector2d, std::less<>> directions;

  /// Throws UnknownEntityError when the feature was not detected.
  const Eigen::Vector2d& point(std::string_view name) const;
  const Eigen::Vector2d& direction(std::string_view name) const;
};

/// One measurement per camera, in camera order.
using Observation = std::vector<CameraMeasurement>;

enum class FeatureKind { kPosition, kOrientation, kShadowDistance };

std::string_view to_string(FeatureKind kind);

struct FeatureVector {
  Eigen::VectorXd values;
  FeatureKind kind = FeatureKind::kPosition;
  std::size_t camera_count = 0;

  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

/// Direction of a projected vector in the image, in (-pi, pi], counter-clockwise
/// positive, zero along +u.
class ImageAngle {
 public:
  ImageAngle() = default;
  /// Wraps any finite angle into (-pi, pi].
  explicit ImageAngle(double radians);

  double radians() const { return theta_; }

 private:
  double theta_ = 0.0;
};

/// Vectors shorter than this (pixels) have no usable image angle.
inline constexpr double kMinImageVectorNorm = 1e-9;

/// Eq. 7 layout (u1, v1, ..., un, vn). Throws InsufficientViewsError for n < 2.
FeatureVector stack_point_features(std::span<const Eigen::Vector2d> pixels);

/// atan2(v.y, v.x); throws DegenerateProjectionError when |v| < kMinImageVectorNorm.
ImageAngle image_angle(const Eigen::Vector2d& v);

/// cos(goal - now) - 1, in [-2, 0] and continuous across the wrap.
double energy(ImageAngle goal, ImageAngle now);

struct AnglePair {
  ImageAngle goal;
  ImageAngle current;
};

/// Energies stacked camera-major, axis-minor. `per_camera[i]` holds one pair per
/// tracked axis; every camera must track exactly `axes` (1 or 2) axes.
FeatureVector orientation_feature_vector(std::span<const std::vector<AnglePair>> per_camera,
                                         std::size_t axes);

/// Euclidean pixel distance between the tool tip and its shadow.
FeatureVector shadow_distance_feature(const Eigen::Vector2d& tip_px,
                                      const Eigen::Vector2d& shadow_px);

// ---------------------------------------------------------------------------
// Feature selection: which named measurements form f and f*.

/// Tool point tracked in every camera; the goal is either a named target that is
/// re-detected each frame or fixed pixels (one per camera).
struct PointFeatureSpec {
  std::string tool_point = "tool_tip";
  std::string goal_point;
  std::vector<Eigen::Vector2d> fixed_goal;
};

struct AxisPair {
  std::string tool_direction;
  std::string target_direction;
};

/// Tracked axes; goal angles come from the target directions unless
/// `fixed_goal_angles[camera][axis]` is given.
struct OrientationFeatureSpec {
  std::vector<AxisPair> axes;
  std::vector<std::vector<double>> fixed_goal_angles;
};

struct ShadowFeatureSpec {
  std::size_t camera = 1;
  std::string tool_point = "tool_tip";
  std::string shadow_point = "shadow";
};

using FeatureSpec = std::variant<PointFeatureSpec, OrientationFeatureSpec, ShadowFeatureSpec>;

FeatureKind feature_kind(const FeatureSpec& spec);

struct FeatureSample {
  FeatureVector current;
  FeatureVector goal;
};

/// Builds (f, f*) from one observation. Missing features raise
/// UnknownEntityError, except a missing shadow which raises
/// DegenerateGeometryError (no valid ray-plane intersection).
FeatureSample extract_features(const Observation& observation, const FeatureSpec& spec);

}  // namespace ibvs
