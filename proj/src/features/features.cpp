#include "ibvs/features.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "ibvs/errors.hpp"

namespace ibvs {

namespace {

template <typename Map>
const Eigen::Vector2d& lookup(const Map& map, std::string_view name, std::string_view what) {
  const auto it = map.find(name);
  if (it == map.end()) throw UnknownEntityError(fmt::format("{} '{}'", what, name));
  return it->second;
}

FeatureSample point_features(const Observation& obs, const PointFeatureSpec& spec) {
  std::vector<Eigen::Vector2d> tool;
  std::vector<Eigen::Vector2d> goal;
  tool.reserve(obs.size());
  for (const auto& cam : obs) tool.push_back(cam.point(spec.tool_point));
  if (!spec.fixed_goal.empty()) {
    if (spec.fixed_goal.size() != obs.size()) {
      throw ShapeError("fixed goal pixels must give one pixel per camera");
    }
    goal = spec.fixed_goal;
  } else {
    for (const auto& cam : obs) goal.push_back(cam.point(spec.goal_point));
  }
  return {stack_point_features(tool), stack_point_features(goal)};
}

FeatureSample orientation_features(const Observation& obs,
                                   const OrientationFeatureSpec& spec) {
  const std::size_t axes = spec.axes.size();
  if (!spec.fixed_goal_angles.empty() && spec.fixed_goal_angles.size() != obs.size()) {
    throw ShapeError("fixed goal angles must be given for every camera");
  }
  std::vector<std::vector<AnglePair>> pairs(obs.size());
  for (std::size_t c = 0; c < obs.size(); ++c) {
    for (std::size_t a = 0; a < axes; ++a) {
      AnglePair pair;
      pair.current = image_angle(obs[c].direction(spec.axes[a].tool_direction));
      if (spec.fixed_goal_angles.empty()) {
        pair.goal = image_angle(obs[c].direction(spec.axes[a].target_direction));
      } else {
        if (spec.fixed_goal_angles[c].size() != axes) {
          throw ShapeError("fixed goal angles must be given for every axis");
        }
        pair.goal = ImageAngle(spec.fixed_goal_angles[c][a]);
      }
      pairs[c].push_back(pair);
    }
  }
  FeatureVector current = orientation_feature_vector(pairs, axes);
  FeatureVector goal = current;
  goal.values.setZero();
  return {std::move(current), std::move(goal)};
}

FeatureSample shadow_features(const Observation& obs, const ShadowFeatureSpec& spec) {
  if (spec.camera >= obs.size()) {
    throw UnknownEntityError(fmt::format("camera{}", spec.camera));
  }
  const CameraMeasurement& cam = obs[spec.camera];
  if (cam.points.find(spec.shadow_point) == cam.points.end()) {
    throw DegenerateGeometryError("shadow is not observable: no ray-plane intersection");
  }
  FeatureVector current =
      shadow_distance_feature(cam.point(spec.tool_point), cam.point(spec.shadow_point));
  FeatureVector goal = current;
  goal.values.setZero();
  return {std::move(current), std::move(goal)};
}

}  // namespace

const Eigen::Vector2d& CameraMeasurement::point(std::string_view name) const {
  return lookup(points, name, "point feature");
}

const Eigen::Vector2d& CameraMeasurement::direction(std::string_view name) const {
  return lookup(directions, name, "direction feature");
}

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kPosition:
      return "position";
    case FeatureKind::kOrientation:
      return "orientation";
    case FeatureKind::kShadowDistance:
      return "shadow_distance";
  }
  return "unknown";
}

ImageAngle::ImageAngle(double radians) {
  double wrapped = std::remainder(radians, 2.0 * std::numbers::pi);
  if (wrapped <= -std::numbers::pi) wrapped += 2.0 * std::numbers::pi;
  theta_ = wrapped;
}

FeatureVector stack_point_features(std::span<const Eigen::Vector2d> pixels) {
  if (pixels.size() < 2) {
    throw InsufficientViewsError(
        fmt::format("point features need at least 2 views, got {}", pixels.size()));
  }
  FeatureVector f;
  f.kind = FeatureKind::kPosition;
  f.camera_count = pixels.size();
  f.values.resize(static_cast<Eigen::Index>(2 * pixels.size()));
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    f.values.segment<2>(static_cast<Eigen::Index>(2 * i)) = pixels[i];
  }
  return f;
}

ImageAngle image_angle(const Eigen::Vector2d& v) {
  if (!(v.norm() >= kMinImageVectorNorm)) {
    throw DegenerateProjectionError(
        "image vector too short: the 3D vector points along the optical axis");
  }
  return ImageAngle(std::atan2(v.y(), v.x()));
}

double energy(ImageAngle goal, ImageAngle now) {
  return std::cos(goal.radians() - now.radians()) - 1.0;
}

FeatureVector orientation_feature_vector(std::span<const std::vector<AnglePair>> per_camera,
                                         std::size_t axes) {
  if (axes != 1 && axes != 2) throw ShapeError("orientation features track 1 or 2 axes");
  if (per_camera.size() < 2) {
    throw InsufficientViewsError(fmt::format(
        "orientation features need at least 2 views, got {}", per_camera.size()));
  }
  FeatureVector f;
  f.kind = FeatureKind::kOrientation;
  f.camera_count = per_camera.size();
  f.values.resize(static_cast<Eigen::Index>(axes * per_camera.size()));
  Eigen::Index row = 0;
  for (const auto& pairs : per_camera) {
    if (pairs.size() != axes) throw ShapeError("every camera must track the same axes");
    for (const AnglePair& p : pairs) f.values[row++] = energy(p.goal, p.current);
  }
  return f;
}

FeatureVector shadow_distance_feature(const Eigen::Vector2d& tip_px,
                                      const Eigen::Vector2d& shadow_px) {
  FeatureVector f;
  f.kind = FeatureKind::kShadowDistance;
  f.camera_count = 1;
  f.values.resize(1);
  f.values[0] = (tip_px - shadow_px).norm();
  return f;
}

FeatureKind feature_kind(const FeatureSpec& spec) {
  switch (spec.index()) {
    case 0:
      return FeatureKind::kPosition;
    case 1:
      return FeatureKind::kOrientation;
    default:
      return FeatureKind::kShadowDistance;
  }
}

FeatureSample extract_features(const Observation& observation, const FeatureSpec& spec) {
  return std::visit(
      [&](const auto& s) -> FeatureSample {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, PointFeatureSpec>) {
          return point_features(observation, s);
        } else if constexpr (std::is_same_v<T, OrientationFeatureSpec>) {
          return orientation_features(observation, s);
        } else {
          return shadow_features(observation, s);
        }
      },
      spec);
}

}  // namespace ibvs
