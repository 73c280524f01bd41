#include "ibvs/harness/runner.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <variant>

#include <fmt/format.h>

#include "ibvs/errors.hpp"

namespace ibvs::harness {

namespace {

std::optional<double> position_oracle(const Scene& scene, const FeatureSpec& features) {
  const auto* spec = std::get_if<PointFeatureSpec>(&features);
  if (!spec || !spec->fixed_goal.empty()) return std::nullopt;
  const auto goal = scene.targets.find(spec->goal_point);
  if (goal == scene.targets.end()) return std::nullopt;
  return (tool_point_world(scene, spec->tool_point) - goal->second).norm();
}

std::optional<double> orientation_oracle(const Scene& scene, const FeatureSpec& features) {
  const auto* spec = std::get_if<OrientationFeatureSpec>(&features);
  if (!spec || spec->axes.empty()) return std::nullopt;
  double worst = 0.0;
  for (const auto& pair : spec->axes) {
    worst = std::max(worst, angle_between_deg(direction_world(scene, pair.tool_direction),
                                              direction_world(scene, pair.target_direction)));
  }
  return worst;
}

std::optional<double> height_oracle(const Scene& scene, const FeatureSpec& features) {
  const auto* spec = std::get_if<ShadowFeatureSpec>(&features);
  if (!spec) return std::nullopt;
  return scene.plane.signed_distance(tool_point_world(scene, spec->tool_point));
}

void take_first_condition(TaskOutcome& out, const ServoResult& r) {
  if (!out.condition_number && !r.condition_numbers.empty()) {
    out.condition_number = r.condition_numbers.front();
  }
}

TaskOutcome run_task(SimulatedPlant& plant, const TaskSpec& spec, const EstimatorConfig& config) {
  TaskOutcome out;
  out.task = spec.name;
  out.type = spec.type;

  if (spec.type == TaskType::kPose) {
    const PoseServoResult pose =
        run_pose_servo(plant, PoseServoTask{spec.servo, spec.orientation, spec.max_rounds}, config);
    for (std::size_t i = 0; i < pose.position_rounds.size(); ++i) {
      out.segments.push_back({fmt::format("round{}_position", i + 1), pose.position_rounds[i]});
      if (i < pose.orientation_rounds.size()) {
        out.segments.push_back(
            {fmt::format("round{}_orientation", i + 1), pose.orientation_rounds[i]});
      }
    }
    out.converged = pose.converged;
    out.abort_reason = pose.abort_reason;
    out.status = pose.converged                ? "converged"
                 : !pose.abort_reason.empty() ? "aborted"
                                               : "max_iterations";
    out.final_feature_error = pose.final_position_error;
  } else {
    ServoResult r;
    switch (spec.type) {
      case TaskType::kPosition:
        r = run_position_servo(plant, spec.servo, config);
        break;
      case TaskType::kOrientation:
        r = run_orientation_servo(plant, spec.servo, config);
        break;
      default:
        r = run_shadow_servo(plant, spec.servo, config);
        break;
    }
    out.converged = r.converged;
    out.status = std::string(to_string(r.status));
    out.abort_reason = r.abort_reason;
    out.final_feature_error = r.final_feature_error;
    out.segments.push_back({spec.name, std::move(r)});
  }

  for (const auto& seg : out.segments) {
    out.iterations += seg.result.iterations;
    out.reinitializations += seg.result.reinitializations;
    take_first_condition(out, seg.result);
  }

  const Scene& truth = plant.scene();
  out.stored_coordinates = truth.robot.coordinates;
  out.position_error_m = position_oracle(truth, spec.servo.features);
  out.orientation_error_deg =
      orientation_oracle(truth, spec.type == TaskType::kPose ? spec.orientation.features
                                                             : spec.servo.features);
  out.height_m = height_oracle(truth, spec.servo.features);
  return out;
}

TaskSummary summarize_task(const std::vector<RepeatReport>& repeats, std::size_t index) {
  TaskSummary s;
  std::vector<double> iterations, pos, ori, height, cond;
  for (const auto& rep : repeats) {
    const TaskOutcome& t = rep.tasks[index];
    s.task = t.task;
    s.type = t.type;
    ++s.repeats;
    if (t.condition_number) cond.push_back(*t.condition_number);
    if (!t.converged) continue;
    ++s.converged;
    iterations.push_back(t.iterations);
    if (t.position_error_m) pos.push_back(*t.position_error_m);
    if (t.orientation_error_deg) ori.push_back(*t.orientation_error_deg);
    if (t.height_m) height.push_back(*t.height_m);
  }
  s.iterations = summarize(iterations);
  s.position_error_m = summarize(pos);
  s.orientation_error_deg = summarize(ori);
  s.height_m = summarize(height);
  s.condition_number = summarize(cond);
  return s;
}

std::string format_parameter(double v) { return fmt::format("{}", v); }

}  // namespace

bool RepeatReport::converged() const {
  return std::all_of(tasks.begin(), tasks.end(), [](const TaskOutcome& t) { return t.converged; });
}

Statistic summarize(const std::vector<double>& values) {
  Statistic s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (s.count - 1));
  }
  return s;
}

bool RunReport::all_converged() const {
  return std::all_of(repeats.begin(), repeats.end(),
                     [](const RepeatReport& r) { return r.converged(); });
}

double RunReport::failure_rate() const {
  if (repeats.empty()) return 0.0;
  const auto failed = std::count_if(repeats.begin(), repeats.end(),
                                    [](const RepeatReport& r) { return !r.converged(); });
  return static_cast<double>(failed) / static_cast<double>(repeats.size());
}

const TaskSummary* RunReport::find(std::string_view task) const {
  for (const auto& s : summary) {
    if (s.task == task) return &s;
  }
  return nullptr;
}

RunReport run_scenario(const Scenario& scenario, int repeats) {
  scenario.validate();
  if (repeats < 1) throw ScenarioError("repeats must be at least 1");
  RunReport report;
  report.scenario = scenario.name;
  for (int rep = 0; rep < repeats; ++rep) {
    RepeatReport out;
    out.repeat = rep;
    out.seed = scenario.seed + static_cast<std::uint64_t>(rep);
    SimulatedPlant plant(scenario.scene, out.seed, scenario.frame_period);
    plant.set_schedule(scenario.disturbances);
    bool failed = false;
    for (std::size_t t = 0; t < scenario.tasks.size(); ++t) {
      const TaskSpec& spec = scenario.tasks[t];
      if (failed) {
        TaskOutcome skipped;
        skipped.task = spec.name;
        skipped.type = spec.type;
        out.tasks.push_back(std::move(skipped));
        continue;
      }
      plant.set_active_task(t);
      out.tasks.push_back(run_task(plant, spec, scenario.estimator));
      failed = !out.tasks.back().converged;
    }
    report.repeats.push_back(std::move(out));
  }
  for (std::size_t t = 0; t < scenario.tasks.size(); ++t) {
    report.summary.push_back(summarize_task(report.repeats, t));
  }
  return report;
}

std::vector<TaskSpec> exp1_tasks(const Scene& scene) {
  std::vector<TaskSpec> tasks(3);
  tasks[0].name = "cone_vertex";
  tasks[0].servo = make_position_task("cone_vertex", scene.robot.kind);
  tasks[1].name = "blade_center";
  tasks[1].servo = make_position_task("blade_center", scene.robot.kind);
  tasks[2].name = "tray_surface";
  tasks[2].type = TaskType::kShadow;
  tasks[2].servo = make_shadow_task(1, scene.robot.kind);
  return tasks;
}

RunReport run_exp1_sequence(const Scenario& scenario, int repeats) {
  for (const char* name : {"cone_vertex", "blade_center"}) {
    if (!scenario.scene.targets.contains(name)) {
      throw ScenarioError(fmt::format("calibration sequence needs target '{}'", name));
    }
  }
  Scenario s = scenario;
  const bool custom = s.tasks.size() == 3 && s.tasks[0].type == TaskType::kPosition &&
                      s.tasks[1].type == TaskType::kPosition &&
                      s.tasks[2].type == TaskType::kShadow;
  if (!custom) {
    s.tasks = exp1_tasks(s.scene);
    s.disturbances.clear();
  }
  return run_scenario(s, repeats);
}

std::vector<TaskSpec> exp2_tasks(const Scene& scene) {
  TaskSpec pose;
  pose.name = "screw_alignment";
  pose.type = TaskType::kPose;
  pose.servo = make_position_task(kScrewShank, scene.robot.kind);
  pose.orientation = make_orientation_task({{kToolShaft, kScrewAxis}}, scene.robot.kind);
  return {pose};
}

Scene place_second_camera(const Scene& scene, const Eigen::Vector3d& center, double angle_deg) {
  if (scene.cameras.size() < 2) throw ScenarioError("camera sweep needs two cameras");
  if (!(angle_deg > 0.0 && angle_deg < 180.0)) {
    throw ScenarioError(fmt::format("camera angle {} is outside (0, 180)", angle_deg));
  }
  // Rotating the camera by R about the pivot equals viewing the world rotated by R^-1.
  const RigidTransform about_center =
      RigidTransform::from_translation(center) *
      RigidTransform::from_axis_angle(Eigen::Vector3d::UnitZ(), angle_deg * std::numbers::pi / 180.0) *
      RigidTransform::from_translation(-center);
  Scene out = scene;
  out.cameras[1].pose = scene.cameras[0].pose * about_center.inverse();
  return out;
}

std::vector<RunReport> sweep_camera_angle(const Scenario& base, const std::vector<double>& angles,
                                          int repeats) {
  if (angles.empty()) throw ScenarioError("camera sweep needs at least one angle");
  std::vector<RunReport> out;
  for (double angle : angles) {
    Scenario s = base;
    if (s.tasks.empty()) s.tasks = exp2_tasks(s.scene);
    s.sweep.reset();
    s.scene = place_second_camera(s.scene, s.workspace_center, angle);
    RunReport r = run_scenario(s, repeats);
    r.label = "angle=" + format_parameter(angle);
    r.parameters = {{"camera_angle_deg", angle}};
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RunReport> run_sweep(const Scenario& scenario, int repeats) {
  if (!scenario.sweep || scenario.sweep->empty()) {
    throw ScenarioError("scenario has no sweep grid");
  }
  const SweepGrid& grid = *scenario.sweep;
  const auto axis = [](const std::vector<double>& v) {
    return v.empty() ? std::vector<std::optional<double>>{std::nullopt}
                     : std::vector<std::optional<double>>(v.begin(), v.end());
  };
  std::vector<RunReport> out;
  for (const auto angle : axis(grid.camera_angle_deg)) {
    for (const auto gain : axis(grid.gain)) {
      for (const auto sigma : axis(grid.noise_sigma)) {
        for (const auto k1 : axis(grid.distortion_k1)) {
          Scenario s = scenario;
          s.sweep.reset();
          std::vector<std::pair<std::string, double>> params;
          if (angle) {
            s.scene = place_second_camera(s.scene, s.workspace_center, *angle);
            params.emplace_back("camera_angle_deg", *angle);
          }
          if (gain) {
            for (auto& t : s.tasks) {
              t.servo.gain = *gain;
              t.orientation.gain = *gain;
            }
            params.emplace_back("gain", *gain);
          }
          if (sigma) {
            for (auto& c : s.scene.cameras) c.pixel_noise_sigma = *sigma;
            params.emplace_back("noise_sigma", *sigma);
          }
          if (k1) {
            for (auto& c : s.scene.cameras) c.radial_distortion = *k1;
            params.emplace_back("distortion_k1", *k1);
          }
          RunReport r = run_scenario(s, repeats);
          std::string label;
          for (const auto& [key, value] : params) {
            label += fmt::format("{}{}={}", label.empty() ? "" : "_", key, format_parameter(value));
          }
          r.label = label;
          r.parameters = std::move(params);
          out.push_back(std::move(r));
        }
      }
    }
  }
  return out;
}

}  // namespace ibvs::harness
