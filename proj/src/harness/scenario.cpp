#include "ibvs/harness/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "ibvs/errors.hpp"

namespace ibvs::harness {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& message) const {
    const YAML::Mark mark = node.Mark();
    if (mark.is_null()) throw ScenarioError(fmt::format("{}: {}", source_, message));
    throw ScenarioError(
        fmt::format("{}:{}:{}: {}", source_, mark.line + 1, mark.column + 1, message));
  }

  void expect_map(const YAML::Node& node, const std::string& what) const {
    if (!node.IsMap()) fail(node, fmt::format("'{}' must be a mapping", what));
  }

  void allow_keys(const YAML::Node& node, const std::string& what,
                  std::initializer_list<std::string_view> keys) const {
    expect_map(node, what);
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
        fail(kv.first, fmt::format("unknown field '{}' in '{}'", key, what));
      }
    }
  }

  double number(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, fmt::format("'{}' must be a number", what));
    try {
      return node.as<double>();
    } catch (const YAML::Exception&) {
      fail(node, fmt::format("'{}' must be a number, got '{}'", what, node.Scalar()));
    }
  }

  long long integer(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, fmt::format("'{}' must be an integer", what));
    try {
      return node.as<long long>();
    } catch (const YAML::Exception&) {
      fail(node, fmt::format("'{}' must be an integer, got '{}'", what, node.Scalar()));
    }
  }

  bool boolean(const YAML::Node& node, const std::string& what) const {
    try {
      return node.as<bool>();
    } catch (const YAML::Exception&) {
      fail(node, fmt::format("'{}' must be true or false", what));
    }
  }

  std::string text(const YAML::Node& node, const std::string& what) const {
    if (!node.IsScalar()) fail(node, fmt::format("'{}' must be a string", what));
    return node.Scalar();
  }

  std::vector<double> numbers(const YAML::Node& node, const std::string& what) const {
    if (node.IsScalar()) return {number(node, what)};
    if (!node.IsSequence()) fail(node, fmt::format("'{}' must be a list of numbers", what));
    std::vector<double> out;
    for (const auto& item : node) out.push_back(number(item, what));
    return out;
  }

  Eigen::VectorXd vector(const YAML::Node& node, const std::string& what, int size = -1) const {
    if (!node.IsSequence()) fail(node, fmt::format("'{}' must be a list of numbers", what));
    if (size >= 0 && static_cast<int>(node.size()) != size) {
      fail(node, fmt::format("'{}' needs {} entries, got {}", what, size, node.size()));
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(node.size()));
    for (std::size_t i = 0; i < node.size(); ++i) {
      out[static_cast<Eigen::Index>(i)] = number(node[i], what);
    }
    return out;
  }

  Eigen::Vector3d vec3(const YAML::Node& node, const std::string& what) const {
    return vector(node, what, 3);
  }
  Eigen::Vector2d vec2(const YAML::Node& node, const std::string& what) const {
    return vector(node, what, 2);
  }

  Eigen::Vector3d unit(const YAML::Node& node, const std::string& what) const {
    const Eigen::Vector3d v = vec3(node, what);
    if (!(v.norm() > 0.0)) fail(node, fmt::format("'{}' must be non-zero", what));
    return v.normalized();
  }

  const std::string& source() const { return source_; }

 private:
  std::string source_;
};

// Reads optional 'rotation' and 'translation' fields of `node`.
RigidTransform read_transform(const Reader& in, const YAML::Node& node, const std::string& what) {
  RigidTransform rotation;
  if (node["rotation"]) {
    const YAML::Node r = node["rotation"];
    in.allow_keys(r, what + ".rotation", {"axis", "angle_deg"});
    if (!r["axis"] || !r["angle_deg"]) in.fail(r, "rotation needs 'axis' and 'angle_deg'");
    rotation = RigidTransform::from_axis_angle(in.unit(r["axis"], "axis"),
                                               in.number(r["angle_deg"], "angle_deg") * kDeg);
  }
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  if (node["translation"]) t = in.vec3(node["translation"], "translation");
  return RigidTransform::from_translation(t) * rotation;
}

CameraModel read_camera(const Reader& in, const YAML::Node& node, const std::string& what,
                        double default_sigma, const Eigen::Vector3d& workspace_center) {
  in.allow_keys(node, what,
                {"look_at", "orbit", "focal", "principal_point", "image_size", "distortion",
                 "noise_sigma"});
  CameraModel cam;
  cam.focal = {900.0, 900.0};
  if (node["look_at"] && node["orbit"]) in.fail(node, "give either 'look_at' or 'orbit', not both");
  if (node["look_at"]) {
    const YAML::Node l = node["look_at"];
    in.allow_keys(l, what + ".look_at", {"eye", "target", "up"});
    if (!l["eye"] || !l["target"]) in.fail(l, "look_at needs 'eye' and 'target'");
    const Eigen::Vector3d up = l["up"] ? in.vec3(l["up"], "up") : Eigen::Vector3d::UnitZ();
    try {
      cam.pose = RigidTransform::look_at(in.vec3(l["eye"], "eye"), in.vec3(l["target"], "target"),
                                         up);
    } catch (const Error& e) {
      in.fail(l, e.what());
    }
  } else if (node["orbit"]) {
    const YAML::Node o = node["orbit"];
    in.allow_keys(o, what + ".orbit", {"center", "azimuth_deg", "elevation_deg", "distance"});
    if (!o["azimuth_deg"] || !o["elevation_deg"] || !o["distance"]) {
      in.fail(o, "orbit needs 'azimuth_deg', 'elevation_deg' and 'distance'");
    }
    const Eigen::Vector3d center = o["center"] ? in.vec3(o["center"], "center") : workspace_center;
    const double az = in.number(o["azimuth_deg"], "azimuth_deg") * kDeg;
    const double el = in.number(o["elevation_deg"], "elevation_deg") * kDeg;
    const double dist = in.number(o["distance"], "distance");
    if (!(dist > 0.0)) in.fail(o["distance"], "orbit distance must be positive");
    const Eigen::Vector3d eye =
        center + dist * Eigen::Vector3d(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az),
                                        std::sin(el));
    try {
      cam.pose = RigidTransform::look_at(eye, center, Eigen::Vector3d::UnitZ());
    } catch (const Error& e) {
      in.fail(o, e.what());
    }
  } else {
    in.fail(node, "camera needs 'look_at' or 'orbit'");
  }
  if (node["focal"]) {
    const YAML::Node f = node["focal"];
    cam.focal = f.IsScalar() ? Eigen::Vector2d::Constant(in.number(f, "focal"))
                             : in.vec2(f, "focal");
  }
  if (node["principal_point"]) {
    cam.principal_point = in.vec2(node["principal_point"], "principal_point");
  }
  if (node["image_size"]) cam.image_size = in.vec2(node["image_size"], "image_size");
  if (node["distortion"]) cam.radial_distortion = in.number(node["distortion"], "distortion");
  cam.pixel_noise_sigma =
      node["noise_sigma"] ? in.number(node["noise_sigma"], "noise_sigma") : default_sigma;
  try {
    cam.validate();
  } catch (const Error& e) {
    in.fail(node, e.what());
  }
  return cam;
}

RobotState read_robot(const Reader& in, const YAML::Node& node) {
  in.allow_keys(node, "robot", {"model", "coordinates", "lower", "upper"});
  if (!node["model"] || !node["coordinates"]) in.fail(node, "robot needs 'model' and 'coordinates'");
  RobotModelKind kind;
  try {
    kind = robot_model_from_string(in.text(node["model"], "model"));
  } catch (const Error& e) {
    in.fail(node["model"], e.what());
  }
  const int m = static_cast<int>(coordinate_count(kind));
  RobotState state;
  state.kind = kind;
  state.coordinates = in.vector(node["coordinates"], "coordinates", m);
  state.limits = JointLimits::defaults(kind);
  if (node["lower"]) state.limits.lower = in.vector(node["lower"], "lower", m);
  if (node["upper"]) state.limits.upper = in.vector(node["upper"], "upper", m);
  try {
    state.validate();
  } catch (const Error& e) {
    in.fail(node, e.what());
  }
  return state;
}

void read_servo_fields(const Reader& in, const YAML::Node& node, ServoTask& task) {
  if (node["coordinates"]) {
    task.coordinates.clear();
    for (const auto& c : node["coordinates"]) {
      const long long v = in.integer(c, "coordinates");
      if (v < 0) in.fail(c, "coordinate indices must be non-negative");
      task.coordinates.push_back(static_cast<std::size_t>(v));
    }
  }
  if (node["gain"]) task.gain = in.number(node["gain"], "gain");
  if (node["tolerance"]) task.feature_tolerance = in.number(node["tolerance"], "tolerance");
  if (node["max_iterations"]) {
    task.max_iterations = static_cast<int>(in.integer(node["max_iterations"], "max_iterations"));
  }
  if (node["step_limit"]) {
    const auto v = in.numbers(node["step_limit"], "step_limit");
    task.step_limit = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  if (node["reinit"]) {
    const YAML::Node r = node["reinit"];
    in.allow_keys(r, "reinit", {"on_start", "on_residual", "on_age"});
    if (r["on_start"]) task.reinit.on_start = in.boolean(r["on_start"], "on_start");
    if (r["on_residual"]) task.reinit.on_residual = in.boolean(r["on_residual"], "on_residual");
    if (r["on_age"]) task.reinit.on_age = in.boolean(r["on_age"], "on_age");
  }
  try {
    task.validate();
  } catch (const Error& e) {
    in.fail(node, e.what());
  }
}

std::vector<std::string_view> with_servo_keys(std::initializer_list<std::string_view> extra) {
  std::vector<std::string_view> keys = {"coordinates", "gain",       "tolerance",
                                        "max_iterations", "step_limit", "reinit"};
  keys.insert(keys.end(), extra);
  return keys;
}

void allow(const Reader& in, const YAML::Node& node, const std::string& what,
           const std::vector<std::string_view>& keys) {
  in.expect_map(node, what);
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      in.fail(kv.first, fmt::format("unknown field '{}' in '{}'", key, what));
    }
  }
}

ServoTask read_position(const Reader& in, const YAML::Node& node, RobotModelKind kind,
                        const std::string& what, std::initializer_list<std::string_view> extra) {
  std::vector<std::string_view> keys = with_servo_keys({"goal", "tool_point", "goal_pixels"});
  keys.insert(keys.end(), extra);
  allow(in, node, what, keys);
  ServoTask task = make_position_task("", kind);
  PointFeatureSpec spec;
  if (node["tool_point"]) spec.tool_point = in.text(node["tool_point"], "tool_point");
  if (node["goal"]) spec.goal_point = in.text(node["goal"], "goal");
  if (node["goal_pixels"]) {
    std::vector<Eigen::Vector2d> px;
    for (const auto& p : node["goal_pixels"]) px.push_back(in.vec2(p, "goal_pixels"));
    spec.fixed_goal = px;
  }
  if (spec.goal_point.empty() && spec.fixed_goal.empty()) {
    in.fail(node, "position task needs 'goal' or 'goal_pixels'");
  }
  task.features = spec;
  read_servo_fields(in, node, task);
  return task;
}

ServoTask read_orientation(const Reader& in, const YAML::Node& node, RobotModelKind kind,
                           const std::string& what, std::initializer_list<std::string_view> extra) {
  std::vector<std::string_view> keys = with_servo_keys({"axes"});
  keys.insert(keys.end(), extra);
  allow(in, node, what, keys);
  if (!node["axes"] || !node["axes"].IsSequence() || node["axes"].size() == 0) {
    in.fail(node, "orientation task needs a non-empty 'axes' list");
  }
  std::vector<AxisPair> axes;
  for (const auto& a : node["axes"]) {
    in.allow_keys(a, "axes", {"tool", "target"});
    if (!a["tool"] || !a["target"]) in.fail(a, "axis pair needs 'tool' and 'target'");
    axes.push_back({in.text(a["tool"], "tool"), in.text(a["target"], "target")});
  }
  if (axes.size() > 2) in.fail(node["axes"], "at most two axis pairs are supported");
  ServoTask task;
  try {
    task = make_orientation_task(axes, kind);
  } catch (const Error& e) {
    in.fail(node, e.what());
  }
  read_servo_fields(in, node, task);
  return task;
}

TaskSpec read_task(const Reader& in, const YAML::Node& node, RobotModelKind kind,
                   std::size_t index) {
  const std::string what = fmt::format("tasks[{}]", index);
  in.expect_map(node, what);
  if (!node["type"]) in.fail(node, "task needs a 'type'");
  TaskSpec spec;
  spec.name = node["name"] ? in.text(node["name"], "name") : fmt::format("task{}", index);
  const std::string type = in.text(node["type"], "type");
  if (type == "position") {
    spec.type = TaskType::kPosition;
    spec.servo = read_position(in, node, kind, what, {"name", "type"});
  } else if (type == "orientation") {
    spec.type = TaskType::kOrientation;
    spec.servo = read_orientation(in, node, kind, what, {"name", "type"});
  } else if (type == "shadow") {
    spec.type = TaskType::kShadow;
    allow(in, node, what, with_servo_keys({"name", "type", "camera", "tool_point"}));
    const long long cam = node["camera"] ? in.integer(node["camera"], "camera") : 1;
    if (cam < 0) in.fail(node["camera"], "camera index must be non-negative");
    spec.servo = make_shadow_task(static_cast<std::size_t>(cam), kind);
    auto& shadow = std::get<ShadowFeatureSpec>(spec.servo.features);
    if (node["tool_point"]) shadow.tool_point = in.text(node["tool_point"], "tool_point");
    read_servo_fields(in, node, spec.servo);
  } else if (type == "pose") {
    spec.type = TaskType::kPose;
    in.allow_keys(node, what, {"name", "type", "position", "orientation", "max_rounds"});
    if (!node["position"] || !node["orientation"]) {
      in.fail(node, "pose task needs 'position' and 'orientation'");
    }
    spec.servo = read_position(in, node["position"], kind, what + ".position", {});
    spec.orientation = read_orientation(in, node["orientation"], kind, what + ".orientation", {});
    if (node["max_rounds"]) {
      spec.max_rounds = static_cast<int>(in.integer(node["max_rounds"], "max_rounds"));
      if (spec.max_rounds < 1) in.fail(node["max_rounds"], "max_rounds must be at least 1");
    }
  } else {
    in.fail(node["type"], fmt::format("unknown task type '{}' (position, orientation, shadow, pose)",
                                      type));
  }
  return spec;
}

void read_estimator(const Reader& in, const YAML::Node& node, EstimatorConfig& c) {
  in.allow_keys(node, "estimator",
                {"fd_step_position", "fd_step_angle", "lm_damping", "lm_max_iterations",
                 "update_regularization", "relative_regularization", "svd_cutoff",
                 "reinit_residual_threshold", "max_age", "min_update_step"});
  const auto num = [&](const char* key, double& out) {
    if (node[key]) out = in.number(node[key], key);
  };
  num("fd_step_position", c.fd_step_position);
  num("fd_step_angle", c.fd_step_angle);
  num("lm_damping", c.lm_damping);
  num("update_regularization", c.update_regularization);
  num("relative_regularization", c.relative_regularization);
  num("svd_cutoff", c.svd_cutoff);
  num("reinit_residual_threshold", c.reinit_residual_threshold);
  num("min_update_step", c.min_update_step);
  if (node["lm_max_iterations"]) {
    c.lm_max_iterations = static_cast<int>(in.integer(node["lm_max_iterations"], "lm_max_iterations"));
  }
  if (node["max_age"]) c.max_age = static_cast<int>(in.integer(node["max_age"], "max_age"));
  try {
    c.validate();
  } catch (const Error& e) {
    in.fail(node, e.what());
  }
}

Scenario read_scenario(const Reader& in, const YAML::Node& root) {
  in.allow_keys(root, "scenario",
                {"name", "seed", "repeats", "frame_period", "noise_sigma", "workspace_center",
                 "direction_baseline", "robot", "tool", "targets", "target_frame", "plane",
                 "light_direction", "cameras", "estimator", "tasks", "disturbances", "sweep"});
  Scenario s;
  if (root["name"]) s.name = in.text(root["name"], "name");
  if (root["seed"]) {
    const long long seed = in.integer(root["seed"], "seed");
    if (seed < 0) in.fail(root["seed"], "seed must be non-negative");
    s.seed = static_cast<std::uint64_t>(seed);
  }
  if (root["repeats"]) {
    s.repeats = static_cast<int>(in.integer(root["repeats"], "repeats"));
    if (s.repeats < 1) in.fail(root["repeats"], "repeats must be at least 1");
  }
  if (root["frame_period"]) {
    s.frame_period = in.number(root["frame_period"], "frame_period");
    if (!(s.frame_period > 0.0)) in.fail(root["frame_period"], "frame_period must be positive");
  }
  const double sigma = root["noise_sigma"] ? in.number(root["noise_sigma"], "noise_sigma") : 0.0;
  if (root["workspace_center"]) {
    s.workspace_center = in.vec3(root["workspace_center"], "workspace_center");
  }

  Scene& scene = s.scene;
  if (!root["robot"]) in.fail(root, "scenario needs a 'robot'");
  scene.robot = read_robot(in, root["robot"]);
  if (root["direction_baseline"]) {
    scene.direction_baseline = in.number(root["direction_baseline"], "direction_baseline");
  }
  if (root["tool"]) {
    const YAML::Node t = root["tool"];
    in.allow_keys(t, "tool", {"tip", "shaft", "shaft_marker", "axes"});
    if (t["tip"]) scene.tool.tip = in.vec3(t["tip"], "tip");
    if (t["shaft"]) scene.tool.shaft = in.unit(t["shaft"], "shaft");
    if (t["shaft_marker"]) scene.tool.shaft_marker = in.vec3(t["shaft_marker"], "shaft_marker");
    if (t["axes"]) {
      if (!t["axes"].IsSequence() || t["axes"].size() != 2) in.fail(t["axes"], "tool needs two axes");
      scene.tool.axes = {in.unit(t["axes"][0], "axes"), in.unit(t["axes"][1], "axes")};
    }
  }
  if (root["targets"]) {
    in.expect_map(root["targets"], "targets");
    for (const auto& kv : root["targets"]) {
      scene.targets[kv.first.as<std::string>()] = in.vec3(kv.second, kv.first.as<std::string>());
    }
  }
  if (root["target_frame"]) {
    const YAML::Node f = root["target_frame"];
    in.allow_keys(f, "target_frame", {"origin", "axes"});
    if (f["origin"]) scene.target_frame.origin = in.vec3(f["origin"], "origin");
    if (f["axes"]) {
      if (!f["axes"].IsSequence() || f["axes"].size() != 2) {
        in.fail(f["axes"], "target frame needs two axes");
      }
      scene.target_frame.axes = {in.unit(f["axes"][0], "axes"), in.unit(f["axes"][1], "axes")};
    }
  }
  if (root["plane"]) {
    const YAML::Node p = root["plane"];
    in.allow_keys(p, "plane", {"point", "normal"});
    if (p["point"]) scene.plane.point = in.vec3(p["point"], "point");
    if (p["normal"]) scene.plane.normal = in.unit(p["normal"], "normal");
  }
  if (root["light_direction"]) {
    scene.light_direction = in.unit(root["light_direction"], "light_direction");
  }
  if (!root["cameras"] || !root["cameras"].IsSequence()) {
    in.fail(root, "scenario needs a 'cameras' list");
  }
  for (std::size_t i = 0; i < root["cameras"].size(); ++i) {
    scene.cameras.push_back(read_camera(in, root["cameras"][i], fmt::format("cameras[{}]", i),
                                        sigma, s.workspace_center));
  }
  try {
    scene.validate();
  } catch (const Error& e) {
    in.fail(root, e.what());
  }

  if (root["estimator"]) read_estimator(in, root["estimator"], s.estimator);

  if (root["tasks"]) {
    if (!root["tasks"].IsSequence()) in.fail(root["tasks"], "'tasks' must be a list");
    for (std::size_t i = 0; i < root["tasks"].size(); ++i) {
      s.tasks.push_back(read_task(in, root["tasks"][i], scene.robot.kind, i));
    }
  }

  if (root["disturbances"]) {
    const YAML::Node list = root["disturbances"];
    if (!list.IsSequence()) in.fail(list, "'disturbances' must be a list");
    for (const auto& d : list) {
      in.allow_keys(d, "disturbances", {"task", "iteration", "entity", "rotation", "translation"});
      if (!d["iteration"] || !d["entity"]) in.fail(d, "disturbance needs 'iteration' and 'entity'");
      ScheduledDisturbance sd;
      if (d["task"]) {
        const YAML::Node t = d["task"];
        const std::string name = in.text(t, "task");
        const auto it = std::find_if(s.tasks.begin(), s.tasks.end(),
                                     [&](const TaskSpec& spec) { return spec.name == name; });
        if (it != s.tasks.end()) {
          sd.task = static_cast<std::size_t>(it - s.tasks.begin());
        } else {
          const long long index = in.integer(t, "task");
          if (index < 0) in.fail(t, "task index must be non-negative");
          sd.task = static_cast<std::size_t>(index);
        }
      }
      const long long iteration = in.integer(d["iteration"], "iteration");
      if (iteration < 0) in.fail(d["iteration"], "iteration must be non-negative");
      sd.iteration = static_cast<int>(iteration);
      sd.disturbance.entity = in.text(d["entity"], "entity");
      sd.disturbance.transform = read_transform(in, d, "disturbance");
      s.disturbances.push_back(sd);
    }
  }

  if (root["sweep"]) {
    const YAML::Node g = root["sweep"];
    in.allow_keys(g, "sweep", {"camera_angle_deg", "gain", "noise_sigma", "distortion"});
    SweepGrid grid;
    const auto axis = [&](const char* key, std::vector<double>& out) {
      if (!g[key]) return;
      out = in.numbers(g[key], key);
      if (out.empty()) in.fail(g[key], fmt::format("sweep axis '{}' is empty", key));
    };
    axis("camera_angle_deg", grid.camera_angle_deg);
    axis("gain", grid.gain);
    axis("noise_sigma", grid.noise_sigma);
    axis("distortion", grid.distortion_k1);
    if (grid.empty()) in.fail(g, "sweep grid has no axes");
    s.sweep = grid;
  }

  try {
    s.validate();
  } catch (const ScenarioError& e) {
    throw ScenarioError(fmt::format("{}: {}", in.source(), e.what()));
  }
  return s;
}

void check_point(const Scenario& s, const std::string& name, const std::string& where) {
  if (name == kToolTip || name == kShaftMarker || name == kShadow) return;
  if (!s.scene.targets.contains(name)) {
    throw ScenarioError(fmt::format("{}: unknown point '{}'", where, name));
  }
}

void check_direction(const Scenario& s, const std::string& name, const std::string& where) {
  try {
    direction_world(s.scene, name);
  } catch (const UnknownEntityError&) {
    throw ScenarioError(fmt::format("{}: unknown direction '{}'", where, name));
  }
}

void check_servo(const Scenario& s, const ServoTask& task, const std::string& where) {
  const std::size_t m = coordinate_count(s.scene.robot.kind);
  for (std::size_t c : task.coordinates) {
    if (c >= m) {
      throw ScenarioError(fmt::format("{}: coordinate {} does not exist on a {} robot", where, c,
                                      to_string(s.scene.robot.kind)));
    }
  }
  if (const auto* p = std::get_if<PointFeatureSpec>(&task.features)) {
    check_point(s, p->tool_point, where);
    if (!p->fixed_goal.empty()) {
      if (p->fixed_goal.size() != s.scene.cameras.size()) {
        throw ScenarioError(fmt::format("{}: need one goal pixel per camera", where));
      }
    } else {
      check_point(s, p->goal_point, where);
    }
    if (2 * s.scene.cameras.size() < task.coordinates.size()) {
      throw ScenarioError(fmt::format("{}: fewer features than driven coordinates", where));
    }
  } else if (const auto* o = std::get_if<OrientationFeatureSpec>(&task.features)) {
    for (const auto& a : o->axes) {
      check_direction(s, a.tool_direction, where);
      check_direction(s, a.target_direction, where);
    }
  } else if (const auto* sh = std::get_if<ShadowFeatureSpec>(&task.features)) {
    if (sh->camera >= s.scene.cameras.size()) {
      throw ScenarioError(fmt::format("{}: shadow camera {} does not exist", where, sh->camera));
    }
    check_point(s, sh->tool_point, where);
  }
}

void emit_servo(YAML::Emitter& out, const ServoTask& task) {
  out << YAML::Key << "coordinates" << YAML::Value << YAML::Flow << task.coordinates;
  out << YAML::Key << "gain" << YAML::Value << task.gain;
  out << YAML::Key << "tolerance" << YAML::Value << task.feature_tolerance;
  out << YAML::Key << "max_iterations" << YAML::Value << task.max_iterations;
  out << YAML::Key << "step_limit" << YAML::Value << YAML::Flow
      << std::vector<double>(task.step_limit.data(), task.step_limit.data() + task.step_limit.size());
  out << YAML::Key << "reinit" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key
      << "on_start" << YAML::Value << task.reinit.on_start << YAML::Key << "on_residual"
      << YAML::Value << task.reinit.on_residual << YAML::Key << "on_age" << YAML::Value
      << task.reinit.on_age << YAML::EndMap;
}

void emit_features(YAML::Emitter& out, const ServoTask& task) {
  if (const auto* p = std::get_if<PointFeatureSpec>(&task.features)) {
    out << YAML::Key << "tool_point" << YAML::Value << p->tool_point;
    if (!p->fixed_goal.empty()) {
      out << YAML::Key << "goal_pixels" << YAML::Value << YAML::BeginSeq;
      for (const auto& px : p->fixed_goal) {
        out << YAML::Flow << std::vector<double>{px.x(), px.y()};
      }
      out << YAML::EndSeq;
    } else {
      out << YAML::Key << "goal" << YAML::Value << p->goal_point;
    }
  } else if (const auto* o = std::get_if<OrientationFeatureSpec>(&task.features)) {
    out << YAML::Key << "axes" << YAML::Value << YAML::BeginSeq;
    for (const auto& a : o->axes) {
      out << YAML::Flow << YAML::BeginMap << YAML::Key << "tool" << YAML::Value
          << a.tool_direction << YAML::Key << "target" << YAML::Value << a.target_direction
          << YAML::EndMap;
    }
    out << YAML::EndSeq;
  } else if (const auto* s = std::get_if<ShadowFeatureSpec>(&task.features)) {
    out << YAML::Key << "camera" << YAML::Value << s->camera;
    out << YAML::Key << "tool_point" << YAML::Value << s->tool_point;
  }
}

std::vector<double> as_list(const Eigen::VectorXd& v) {
  std::vector<double> out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i] + 0.0);  // drops -0
  return out;
}

}  // namespace

std::string_view to_string(TaskType type) {
  switch (type) {
    case TaskType::kPosition:
      return "position";
    case TaskType::kOrientation:
      return "orientation";
    case TaskType::kShadow:
      return "shadow";
    case TaskType::kPose:
      return "pose";
  }
  return "unknown";
}

bool SweepGrid::empty() const {
  return camera_angle_deg.empty() && gain.empty() && noise_sigma.empty() &&
         distortion_k1.empty();
}

void Scenario::validate() const {
  if (repeats < 1) throw ScenarioError("repeats must be at least 1");
  const bool multiview = std::any_of(tasks.begin(), tasks.end(), [](const TaskSpec& t) {
    return t.type != TaskType::kShadow;
  });
  if ((multiview || tasks.empty()) && scene.cameras.size() < 2) {
    throw ScenarioError(fmt::format("multi-view tasks need at least two cameras, got {}",
                                    scene.cameras.size()));
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::string where = fmt::format("task '{}'", tasks[i].name);
    check_servo(*this, tasks[i].servo, where);
    if (tasks[i].type == TaskType::kPose) check_servo(*this, tasks[i].orientation, where);
  }
  for (const auto& d : disturbances) {
    if (d.iteration < 0) throw ScenarioError("disturbance iteration must be non-negative");
    if (!tasks.empty() && d.task >= tasks.size()) {
      throw ScenarioError(fmt::format("disturbance refers to task {} of {}", d.task, tasks.size()));
    }
    try {
      perturb(scene, d.disturbance);
    } catch (const UnknownEntityError&) {
      throw ScenarioError(fmt::format("disturbance names unknown entity '{}'", d.disturbance.entity));
    }
  }
  if (sweep) {
    if (sweep->empty()) throw ScenarioError("sweep grid has no axes");
    for (double a : sweep->camera_angle_deg) {
      if (!(a > 0.0 && a < 180.0)) {
        throw ScenarioError(fmt::format("sweep camera angle {} is outside (0, 180)", a));
      }
    }
    if (!sweep->camera_angle_deg.empty() && scene.cameras.size() < 2) {
      throw ScenarioError("camera-angle sweep needs two cameras");
    }
  }
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ScenarioError(
        fmt::format("{}:{}:{}: {}", source, e.mark.line + 1, e.mark.column + 1, e.msg));
  }
  if (!root.IsMap()) throw ScenarioError(fmt::format("{}: top level must be a mapping", source));
  return read_scenario(Reader(source), root);
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream file(path);
  if (!file) throw ScenarioError(fmt::format("cannot open scenario file '{}'", path.string()));
  std::stringstream buffer;
  buffer << file.rdbuf();
  return parse_scenario(buffer.str(), path.string());
}

std::string echo_scenario(const Scenario& s) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << s.name;
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "repeats" << YAML::Value << s.repeats;
  out << YAML::Key << "frame_period" << YAML::Value << s.frame_period;
  out << YAML::Key << "workspace_center" << YAML::Value << YAML::Flow
      << as_list(s.workspace_center);
  out << YAML::Key << "direction_baseline" << YAML::Value << s.scene.direction_baseline;

  const RobotState& robot = s.scene.robot;
  out << YAML::Key << "robot" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "model" << YAML::Value << std::string(to_string(robot.kind));
  out << YAML::Key << "coordinates" << YAML::Value << YAML::Flow << as_list(robot.coordinates);
  out << YAML::Key << "lower" << YAML::Value << YAML::Flow << as_list(robot.limits.lower);
  out << YAML::Key << "upper" << YAML::Value << YAML::Flow << as_list(robot.limits.upper);
  out << YAML::EndMap;

  const ToolGeometry& tool = s.scene.tool;
  out << YAML::Key << "tool" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "tip" << YAML::Value << YAML::Flow << as_list(tool.tip);
  out << YAML::Key << "shaft" << YAML::Value << YAML::Flow << as_list(tool.shaft);
  out << YAML::Key << "shaft_marker" << YAML::Value << YAML::Flow << as_list(tool.shaft_marker);
  out << YAML::Key << "axes" << YAML::Value << YAML::BeginSeq << YAML::Flow
      << as_list(tool.axes[0]) << YAML::Flow << as_list(tool.axes[1]) << YAML::EndSeq;
  out << YAML::EndMap;

  out << YAML::Key << "targets" << YAML::Value << YAML::BeginMap;
  for (const auto& [name, p] : s.scene.targets) {
    out << YAML::Key << name << YAML::Value << YAML::Flow << as_list(p);
  }
  out << YAML::EndMap;
  out << YAML::Key << "target_frame" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "origin" << YAML::Value << YAML::Flow << as_list(s.scene.target_frame.origin);
  out << YAML::Key << "axes" << YAML::Value << YAML::BeginSeq << YAML::Flow
      << as_list(s.scene.target_frame.axes[0]) << YAML::Flow
      << as_list(s.scene.target_frame.axes[1]) << YAML::EndSeq;
  out << YAML::EndMap;
  out << YAML::Key << "plane" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "point" << YAML::Value << YAML::Flow << as_list(s.scene.plane.point);
  out << YAML::Key << "normal" << YAML::Value << YAML::Flow << as_list(s.scene.plane.normal);
  out << YAML::EndMap;
  out << YAML::Key << "light_direction" << YAML::Value << YAML::Flow
      << as_list(s.scene.light_direction);

  out << YAML::Key << "cameras" << YAML::Value << YAML::BeginSeq;
  for (const auto& cam : s.scene.cameras) {
    const Eigen::Vector3d eye = cam.center();
    const Eigen::Vector3d ahead = eye + cam.optical_axis();
    const Eigen::Vector3d up = -cam.pose.rotation().row(1).transpose();
    out << YAML::BeginMap;
    out << YAML::Key << "look_at" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "eye" << YAML::Value << YAML::Flow << as_list(eye);
    out << YAML::Key << "target" << YAML::Value << YAML::Flow << as_list(ahead);
    out << YAML::Key << "up" << YAML::Value << YAML::Flow << as_list(up);
    out << YAML::EndMap;
    out << YAML::Key << "focal" << YAML::Value << YAML::Flow << as_list(cam.focal);
    out << YAML::Key << "principal_point" << YAML::Value << YAML::Flow
        << as_list(cam.principal_point);
    out << YAML::Key << "image_size" << YAML::Value << YAML::Flow << as_list(cam.image_size);
    out << YAML::Key << "distortion" << YAML::Value << cam.radial_distortion;
    out << YAML::Key << "noise_sigma" << YAML::Value << cam.pixel_noise_sigma;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  const EstimatorConfig& e = s.estimator;
  out << YAML::Key << "estimator" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "fd_step_position" << YAML::Value << e.fd_step_position;
  out << YAML::Key << "fd_step_angle" << YAML::Value << e.fd_step_angle;
  out << YAML::Key << "lm_damping" << YAML::Value << e.lm_damping;
  out << YAML::Key << "lm_max_iterations" << YAML::Value << e.lm_max_iterations;
  out << YAML::Key << "update_regularization" << YAML::Value << e.update_regularization;
  out << YAML::Key << "relative_regularization" << YAML::Value << e.relative_regularization;
  out << YAML::Key << "svd_cutoff" << YAML::Value << e.svd_cutoff;
  out << YAML::Key << "reinit_residual_threshold" << YAML::Value << e.reinit_residual_threshold;
  out << YAML::Key << "max_age" << YAML::Value << e.max_age;
  out << YAML::Key << "min_update_step" << YAML::Value << e.min_update_step;
  out << YAML::EndMap;

  out << YAML::Key << "tasks" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : s.tasks) {
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << t.name;
    out << YAML::Key << "type" << YAML::Value << std::string(to_string(t.type));
    if (t.type == TaskType::kPose) {
      out << YAML::Key << "max_rounds" << YAML::Value << t.max_rounds;
      out << YAML::Key << "position" << YAML::Value << YAML::BeginMap;
      emit_features(out, t.servo);
      emit_servo(out, t.servo);
      out << YAML::EndMap;
      out << YAML::Key << "orientation" << YAML::Value << YAML::BeginMap;
      emit_features(out, t.orientation);
      emit_servo(out, t.orientation);
      out << YAML::EndMap;
    } else {
      emit_features(out, t.servo);
      emit_servo(out, t.servo);
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  out << YAML::Key << "disturbances" << YAML::Value << YAML::BeginSeq;
  for (const auto& d : s.disturbances) {
    const Eigen::AngleAxisd aa(d.disturbance.transform.rotation());
    out << YAML::BeginMap;
    out << YAML::Key << "task" << YAML::Value << d.task;
    out << YAML::Key << "iteration" << YAML::Value << d.iteration;
    out << YAML::Key << "entity" << YAML::Value << d.disturbance.entity;
    out << YAML::Key << "rotation" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key
        << "axis" << YAML::Value << YAML::Flow << as_list(aa.axis()) << YAML::Key << "angle_deg"
        << YAML::Value << aa.angle() / kDeg << YAML::EndMap;
    out << YAML::Key << "translation" << YAML::Value << YAML::Flow
        << as_list(d.disturbance.transform.translation());
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  if (s.sweep) {
    out << YAML::Key << "sweep" << YAML::Value << YAML::BeginMap;
    const auto axis = [&](const char* key, const std::vector<double>& v) {
      if (!v.empty()) out << YAML::Key << key << YAML::Value << YAML::Flow << v;
    };
    axis("camera_angle_deg", s.sweep->camera_angle_deg);
    axis("gain", s.sweep->gain);
    axis("noise_sigma", s.sweep->noise_sigma);
    axis("distortion", s.sweep->distortion_k1);
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace ibvs::harness
