#include "ibvs/world.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "ibvs/errors.hpp"
#include "world_internal.hpp"

namespace ibvs {

namespace {

constexpr double kUnitTolerance = 1e-10;

void require_unit(const Eigen::Vector3d& v, std::string_view what) {
  if (!(std::abs(v.norm() - 1.0) < kUnitTolerance)) {
    throw DegenerateGeometryError(fmt::format("{} must be a unit vector", what));
  }
}

Eigen::Vector2d project_or_throw(const Scene& scene, std::size_t camera,
                                 const Eigen::Vector3d& p, std::string_view name) {
  const auto px = project(scene.cameras[camera], p);
  if (!px) throw BehindCameraError(std::string(name), camera);
  return *px;
}

}  // namespace

namespace detail {

std::vector<DirectionSource> direction_sources(const Scene& scene) {
  const RigidTransform tool = forward_tool_pose(scene.robot);
  std::vector<DirectionSource> out;
  const double shaft_baseline = (scene.tool.shaft_marker - scene.tool.tip).norm();
  out.push_back({kToolShaft, tool.apply(scene.tool.tip), tool.apply_direction(scene.tool.shaft),
                 shaft_baseline > 0.0 ? shaft_baseline : scene.direction_baseline});
  for (std::size_t i = 0; i < 2; ++i) {
    out.push_back({fmt::format("tool_axis_{}", i), tool.apply(scene.tool.tip),
                   tool.apply_direction(scene.tool.axes[i]), scene.direction_baseline});
    out.push_back({fmt::format("target_axis_{}", i), scene.target_frame.origin,
                   scene.target_frame.axes[i], scene.direction_baseline});
  }
  const auto head = scene.targets.find(kScrewHead);
  const auto shank = scene.targets.find(kScrewShank);
  if (head != scene.targets.end() && shank != scene.targets.end()) {
    const Eigen::Vector3d axis = shank->second - head->second;
    if (axis.norm() > 0.0) {
      out.push_back({kScrewAxis, shank->second, axis.normalized(), axis.norm()});
    }
  }
  return out;
}

std::optional<ToolDirection> tool_direction(const Scene& scene, std::string_view name) {
  if (name == kToolShaft) return ToolDirection{scene.tool.tip, scene.tool.shaft};
  if (name == "tool_axis_0") return ToolDirection{scene.tool.tip, scene.tool.axes[0]};
  if (name == "tool_axis_1") return ToolDirection{scene.tool.tip, scene.tool.axes[1]};
  return std::nullopt;
}

std::optional<Eigen::Vector3d> tool_point_local(const Scene& scene, std::string_view name) {
  if (name == kToolTip) return scene.tool.tip;
  if (name == kShaftMarker) return scene.tool.shaft_marker;
  return std::nullopt;
}

}  // namespace detail

void Scene::validate() const {
  robot.validate();
  require_unit(tool.shaft, "tool shaft vector");
  require_unit(tool.axes[0], "tool basis vector 0");
  require_unit(tool.axes[1], "tool basis vector 1");
  require_unit(target_frame.axes[0], "target basis vector 0");
  require_unit(target_frame.axes[1], "target basis vector 1");
  require_unit(plane.normal, "plane normal");
  require_unit(light_direction, "light direction");
  if (!(direction_baseline > 0.0)) {
    throw DegenerateGeometryError("direction baseline must be positive");
  }
  for (const auto& cam : cameras) cam.validate();
}

Eigen::Vector3d shadow_point(const Eigen::Vector3d& tip, const Plane& plane,
                             const Eigen::Vector3d& light_direction) {
  const double denom = light_direction.dot(plane.normal);
  if (!(std::abs(denom) > 1e-9)) {
    throw DegenerateGeometryError("light direction is parallel to the plane");
  }
  const double t = plane.normal.dot(plane.point - tip) / denom;
  if (t < 0.0) throw DegenerateGeometryError("plane lies behind the light ray");
  Eigen::Vector3d s = tip + t * light_direction;
  // Remove the rounding residue so the point lies on the plane to machine precision.
  s -= plane.signed_distance(s) * plane.normal;
  return s;
}

Observation observe(const Scene& scene, std::mt19937_64* rng) {
  const RigidTransform tool = forward_tool_pose(scene.robot);

  std::map<std::string, Eigen::Vector3d, std::less<>> points = scene.targets;
  points[kToolTip] = tool.apply(scene.tool.tip);
  points[kShaftMarker] = tool.apply(scene.tool.shaft_marker);
  try {
    points[kShadow] = shadow_point(points[kToolTip], scene.plane, scene.light_direction);
  } catch (const DegenerateGeometryError&) {
    // no shadow on the plane
  }
  const std::vector<detail::DirectionSource> directions = detail::direction_sources(scene);

  Observation obs(scene.cameras.size());
  for (std::size_t c = 0; c < scene.cameras.size(); ++c) {
    const CameraModel& cam = scene.cameras[c];
    for (const auto& [name, p] : points) {
      Eigen::Vector2d px = project_or_throw(scene, c, p, name);
      if (rng) px += sample_pixel_noise(cam, *rng);
      obs[c].points.emplace(name, px);
    }
    for (const auto& d : directions) {
      const Eigen::Vector2d base = project_or_throw(scene, c, d.base, d.name);
      const Eigen::Vector2d seg =
          project_or_throw(scene, c, d.base + kDirectionSegment * d.direction, d.name) - base;
      Eigen::Vector2d unit = Eigen::Vector2d::Zero();
      if (seg.norm() >= kMinImageVectorNorm) unit = seg.normalized();
      if (rng && cam.pixel_noise_sigma > 0.0) {
        // Two detected points `baseline` apart along the direction.
        const auto far = project(cam, d.base + d.baseline * d.direction);
        const double length = far ? (*far - base).norm() : 0.0;
        const Eigen::Vector2d noisy =
            length * unit + sample_pixel_noise(cam, *rng) - sample_pixel_noise(cam, *rng);
        unit = noisy.norm() >= kMinImageVectorNorm ? Eigen::Vector2d(noisy.normalized())
                                                   : Eigen::Vector2d::Zero();
      }
      obs[c].directions.emplace(d.name, unit);
    }
  }
  return obs;
}

Scene perturb(Scene scene, const Disturbance& disturbance) {
  const RigidTransform& d = disturbance.transform;
  const std::string& entity = disturbance.entity;

  if (entity.rfind("camera", 0) == 0) {
    std::size_t index = 0;
    const std::string digits = entity.substr(6);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
      throw UnknownEntityError(entity);
    }
    index = std::stoul(digits);
    if (index >= scene.cameras.size()) throw UnknownEntityError(entity);
    CameraModel& cam = scene.cameras[index];
    const RigidTransform world_from_camera = cam.pose.inverse();
    const RigidTransform moved(d.rotation() * world_from_camera.rotation(),
                               world_from_camera.translation() + d.translation());
    cam.pose = moved.inverse();
    return scene;
  }
  if (entity == "workspace") {
    for (auto& [name, p] : scene.targets) p = d.apply(p);
    scene.target_frame.origin = d.apply(scene.target_frame.origin);
    for (auto& a : scene.target_frame.axes) a = d.apply_direction(a);
    scene.plane.point = d.apply(scene.plane.point);
    scene.plane.normal = d.apply_direction(scene.plane.normal);
    return scene;
  }
  if (entity == "target_frame") {
    scene.target_frame.origin += d.translation();
    for (auto& a : scene.target_frame.axes) a = d.apply_direction(a);
    return scene;
  }
  if (entity == "plane") {
    scene.plane.point += d.translation();
    scene.plane.normal = d.apply_direction(scene.plane.normal);
    return scene;
  }
  const auto it = scene.targets.find(entity);
  if (it == scene.targets.end()) throw UnknownEntityError(entity);
  it->second += d.translation();
  return scene;
}

Eigen::VectorXd feature_values(const Scene& scene, const FeatureSpec& spec) {
  return extract_features(observe(scene, nullptr), spec).current.values;
}

Eigen::Vector3d tool_point_world(const Scene& scene, std::string_view name) {
  const auto local = detail::tool_point_local(scene, name);
  if (!local) throw UnknownEntityError(std::string(name));
  return forward_tool_pose(scene.robot).apply(*local);
}

Eigen::Vector3d tool_shaft_world(const Scene& scene) {
  return forward_tool_pose(scene.robot).apply_direction(scene.tool.shaft);
}

Eigen::Vector3d direction_world(const Scene& scene, std::string_view name) {
  for (const auto& source : detail::direction_sources(scene)) {
    if (source.name == name) return source.direction;
  }
  throw UnknownEntityError(std::string(name));
}

double angle_between_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  // atan2 form stays accurate for nearly parallel vectors.
  return std::atan2(a.cross(b).norm(), a.dot(b)) * 180.0 / std::numbers::pi;
}

}  // namespace ibvs
