#include <doctest.h>

#include <cmath>
#include <random>

#include "ibvs/errors.hpp"
#include "ibvs/harness/plant.hpp"
#include "ibvs/servo.hpp"
#include "test_scenes.hpp"

using namespace ibvs;
using harness::SimulatedPlant;
using testing::deg;

namespace {

FeatureVector points(Eigen::VectorXd v) { return {std::move(v), FeatureKind::kPosition, 2}; }

ImageJacobian jacobian_of(Eigen::MatrixXd m) {
  ImageJacobian j;
  j.matrix = std::move(m);
  return j;
}

// Screw scene with the flange placed so that the tip sits on the shank point
// when the shaft is parallel (sign = 1) or anti-parallel (sign = -1) to the axis.
Scene aligned_tip_scene(double pan_deg, double tilt_deg, double sign = 1.0) {
  Scene s = testing::screw_scene();
  const double t = deg(40.0);
  Eigen::VectorXd r(5);
  r << sign * 0.15 * std::sin(t), 0.0, sign * 0.15 * std::cos(t), deg(pan_deg), deg(tilt_deg);
  s.robot = RobotState::make(RobotModelKind::kArm5, r);
  return s;
}

ServoTask shaft_task() {
  return make_orientation_task({{kToolShaft, kScrewAxis}}, RobotModelKind::kArm5);
}

}  // namespace

TEST_CASE("control_step: resolved rate with whole-vector clipping") {
  ServoTask task = make_position_task("goal", RobotModelKind::kCartesian3);
  task.coordinates = {0, 1};
  task.gain = 0.5;
  task.step_limit = Eigen::VectorXd::Constant(1, 10.0);
  const EstimatorConfig config;
  Eigen::MatrixXd m(2, 2);
  m << 2.0, 0.0, 0.0, 4.0;
  const auto j = jacobian_of(m);

  const Eigen::VectorXd dr = control_step(j, points(Eigen::Vector2d(0, 0)),
                                          points(Eigen::Vector2d(2, 4)), task, config);
  CHECK(dr[0] == doctest::Approx(0.5));
  CHECK(dr[1] == doctest::Approx(0.5));

  task.step_limit = Eigen::Vector2d(0.01, 0.1);
  const Eigen::VectorXd clipped = control_step(j, points(Eigen::Vector2d(0, 0)),
                                               points(Eigen::Vector2d(2, 4)), task, config);
  CHECK(clipped[0] == doctest::Approx(0.01));
  CHECK(clipped[1] == doctest::Approx(0.01));

  CHECK_THROWS_AS(control_step(j, points(Eigen::Vector3d(0, 0, 0)),
                               points(Eigen::Vector3d(1, 1, 1)), task, config),
                  ShapeError);
}

TEST_CASE("control_step: identity Jacobian") {
  ServoTask task = make_position_task("goal", RobotModelKind::kCartesian3);
  task.coordinates = {0, 1};
  task.gain = 0.5;
  task.step_limit = Eigen::VectorXd::Constant(1, 10.0);
  const EstimatorConfig config;
  const auto j = jacobian_of(Eigen::MatrixXd::Identity(2, 2));
  const FeatureVector now = points(Eigen::Vector2d(1, 1));

  CHECK(control_step(j, now, now, task, config).norm() == 0.0);
  const Eigen::VectorXd dr = control_step(j, now, points(Eigen::Vector2d(5, -1)), task, config);
  CHECK(dr[0] == doctest::Approx(2.0));
  CHECK(dr[1] == doctest::Approx(-1.0));
  task.step_limit = Eigen::VectorXd::Constant(1, 0.5);
  const Eigen::VectorXd c = control_step(j, now, points(Eigen::Vector2d(5, -1)), task, config);
  CHECK(c[0] == doctest::Approx(0.5));
  CHECK(c[1] == doctest::Approx(-0.25));
}

TEST_CASE("control_step: linear in the feature error below the step limits") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  ServoTask task = make_position_task("goal", RobotModelKind::kCartesian3);
  task.step_limit = Eigen::VectorXd::Constant(1, 1e12);
  const EstimatorConfig config;
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd m(4, 3);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 100.0 * n(rng);
    Eigen::VectorXd e(4);
    for (Eigen::Index i = 0; i < 4; ++i) e[i] = n(rng);
    const double s = std::exp(3.0 * n(rng));
    const auto j = jacobian_of(m);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
    const Eigen::VectorXd a = control_step(j, points(zero), points(e), task, config);
    const Eigen::VectorXd b = control_step(j, points(zero), points(s * e), task, config);
    CHECK((b - s * a).norm() <= 1e-10 * (s * a).norm());
  }
}

TEST_CASE("control_step: clipping keeps the direction and respects every limit") {
  std::mt19937_64 rng(22);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> lim(1e-4, 1e-1);
  ServoTask task = make_position_task("goal", RobotModelKind::kCartesian3);
  const EstimatorConfig config;
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd m(4, 3);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 100.0 * n(rng);
    Eigen::VectorXd e(4);
    for (Eigen::Index i = 0; i < 4; ++i) e[i] = 50.0 * n(rng);
    task.step_limit = Eigen::Vector3d(lim(rng), lim(rng), lim(rng));
    const auto j = jacobian_of(m);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
    const Eigen::VectorXd dr = control_step(j, points(zero), points(e), task, config);
    task.step_limit = Eigen::VectorXd::Constant(1, 1e12);
    const Eigen::VectorXd free = control_step(j, points(zero), points(e), task, config);
    task.step_limit = Eigen::Vector3d(lim(rng), lim(rng), lim(rng));
    CHECK(std::abs(dr.normalized().dot(free.normalized()) - 1.0) < 1e-12);
    CHECK(dr.norm() <= free.norm() * (1.0 + 1e-12));
  }
}

TEST_CASE("feature_error: norm for points, largest |E| for orientation") {
  CHECK(feature_error(FeatureKind::kPosition, Eigen::Vector2d(3, 4), Eigen::Vector2d(0, 0)) ==
        doctest::Approx(5.0));
  CHECK(feature_error(FeatureKind::kOrientation, Eigen::Vector2d(0, 0),
                      Eigen::Vector2d(-0.1, -0.3)) == doctest::Approx(0.3));
}

TEST_CASE("task validation") {
  ServoTask task = make_position_task("cone_vertex", RobotModelKind::kCartesian3);
  CHECK_NOTHROW(task.validate());
  task.gain = 0.0;
  CHECK_THROWS_AS(task.validate(), ShapeError);
  task.gain = 0.3;
  task.step_limit = Eigen::Vector2d(0.1, 0.1);
  CHECK_THROWS_AS(task.validate(), ShapeError);
  task.step_limit = Eigen::VectorXd::Constant(1, -1.0);
  CHECK_THROWS_AS(task.validate(), ShapeError);
  CHECK_THROWS_AS(make_orientation_task({{kToolShaft, kScrewAxis}}, RobotModelKind::kCartesian3),
                  ShapeError);
}

TEST_CASE("position servo reaches the cone vertex") {
  const Scene scene = testing::dissector_scene();
  SimulatedPlant plant(scene, 1);
  const ServoTask task = [] {
    ServoTask t = make_position_task("cone_vertex", RobotModelKind::kCartesian3);
    t.feature_tolerance = 0.1;
    return t;
  }();
  const ServoResult res = run_position_servo(plant, task, EstimatorConfig{});
  REQUIRE(res.converged);
  CHECK(res.status == ServoStatus::kConverged);
  CHECK(res.iterations <= 200);
  CHECK(res.final_feature_error <= task.feature_tolerance);
  const double err =
      (tool_point_world(plant.scene(), kToolTip) - scene.targets.at("cone_vertex")).norm();
  CHECK(err < 1e-4);
  REQUIRE(res.initial_jacobian);
  REQUIRE(res.final_jacobian);
  CHECK(res.trajectory.size() == static_cast<std::size_t>(res.iterations) + 1);
  CHECK(res.reinitializations >= 1);
}

TEST_CASE("position servo with the exact Jacobian makes monotone progress") {
  const Scene scene = testing::dissector_scene();
  ServoTask task = make_position_task("cone_vertex", RobotModelKind::kCartesian3);
  task.feature_tolerance = 0.05;
  task.reinit.on_start = false;
  task.reinit.on_residual = false;
  const ImageJacobian exact = jacobian_of(analytic_feature_jacobian(scene, task.features));
  SimulatedPlant plant(scene, 1);
  const ServoResult res = run_servo(plant, task, EstimatorConfig{}, &exact);
  REQUIRE(res.converged);
  CHECK(res.reinitializations == 0);
  for (std::size_t i = 1; i < res.trajectory.size(); ++i) {
    CHECK(res.trajectory[i].feature_error < res.trajectory[i - 1].feature_error);
  }
}

TEST_CASE("a goal at the current tip pixels converges without moving") {
  const Scene scene = testing::dissector_scene();
  const Observation obs = observe(scene);
  ServoTask task = make_position_task("", RobotModelKind::kCartesian3);
  PointFeatureSpec spec;
  spec.fixed_goal = {obs[0].point(kToolTip), obs[1].point(kToolTip)};
  task.features = spec;
  SimulatedPlant plant(scene, 1);
  const ServoResult res = run_position_servo(plant, task, EstimatorConfig{});
  CHECK(res.converged);
  CHECK(res.iterations == 0);
  CHECK(res.final_feature_error == 0.0);
  CHECK(plant.coordinates() == scene.robot.coordinates);
}

TEST_CASE("narrow camera separation inflates the position Jacobian's condition number") {
  std::vector<double> cond;
  for (double separation : {90.0, 30.0, 5.0}) {
    SimulatedPlant plant(testing::screw_scene(separation), 1);
    const ServoResult res = run_position_servo(
        plant, make_position_task(kScrewShank, RobotModelKind::kArm5), EstimatorConfig{});
    CHECK(res.converged);
    cond.push_back(res.condition_numbers.at(0));
  }
  CHECK(cond[1] > 2.0 * cond[0]);
  CHECK(cond[2] > 10.0 * cond[0]);
}

TEST_CASE("servo stops at max_iterations") {
  SimulatedPlant plant(testing::dissector_scene(), 1);
  ServoTask task = make_position_task("cone_vertex", RobotModelKind::kCartesian3);
  task.max_iterations = 2;
  const ServoResult res = run_position_servo(plant, task, EstimatorConfig{});
  CHECK_FALSE(res.converged);
  CHECK(res.status == ServoStatus::kMaxIterations);
  CHECK(res.iterations == 2);
}

TEST_CASE("orientation servo aligns the shaft from 30 degrees off") {
  const Scene scene = aligned_tip_scene(47.48801487920418, 40.0);
  REQUIRE(angle_between_deg(tool_shaft_world(scene), direction_world(scene, kScrewAxis)) ==
          doctest::Approx(30.0).epsilon(1e-9));
  SimulatedPlant plant(scene, 1);
  const ServoResult res = run_orientation_servo(plant, shaft_task(), EstimatorConfig{});
  REQUIRE(res.converged);
  CHECK(res.stationary_kicks == 0);
  CHECK(angle_between_deg(tool_shaft_world(plant.scene()),
                          direction_world(plant.scene(), kScrewAxis)) < 0.5);
}

TEST_CASE("an aligned tool converges immediately") {
  SimulatedPlant plant(aligned_tip_scene(0.0, 40.0), 1);
  const ServoResult res = run_orientation_servo(plant, shaft_task(), EstimatorConfig{});
  CHECK(res.converged);
  CHECK(res.iterations == 0);
  CHECK(res.trajectory.at(0).features.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("orientation servo leaves the anti-parallel saddle with one kick") {
  const Scene scene = aligned_tip_scene(0.0, 40.0 - 180.0, -1.0);
  REQUIRE(angle_between_deg(tool_shaft_world(scene), direction_world(scene, kScrewAxis)) ==
          doctest::Approx(180.0));
  SimulatedPlant plant(scene, 1);
  ServoTask task = shaft_task();
  task.max_iterations = 1000;
  const ServoResult res = run_orientation_servo(plant, task, EstimatorConfig{});
  CHECK(res.stationary_kicks == 1);
  CHECK(res.converged);
  CHECK(angle_between_deg(tool_shaft_world(plant.scene()),
                          direction_world(plant.scene(), kScrewAxis)) < 0.5);
}

TEST_CASE("shadow servo lowers the tip onto the tray") {
  Scene scene = testing::dissector_scene();
  scene.robot = RobotState::make(RobotModelKind::kCartesian3, Eigen::Vector3d(0.02, 0.01, 0.01));
  SimulatedPlant plant(scene, 1);
  ServoTask task = make_shadow_task(1, RobotModelKind::kCartesian3);
  task.feature_tolerance = 0.05;
  const ServoResult res = run_shadow_servo(plant, task, EstimatorConfig{});
  REQUIRE(res.converged);
  REQUIRE(res.stored_coordinate);
  const double height = plant.scene().plane.signed_distance(tool_point_world(plant.scene(), kToolTip));
  CHECK(std::abs(height) < 1e-4);
  CHECK(*res.stored_coordinate == doctest::Approx(plant.coordinates()[2]));
  for (std::size_t i = 1; i < res.trajectory.size(); ++i) {
    CHECK(res.trajectory[i].coordinates[2] <= res.trajectory[i - 1].coordinates[2]);
  }
}

TEST_CASE("shadow servo aborts when the light grazes the plane") {
  Scene scene = testing::dissector_scene();
  scene.light_direction = Eigen::Vector3d::UnitX();
  SimulatedPlant plant(scene, 1);
  const ServoResult res =
      run_shadow_servo(plant, make_shadow_task(1, RobotModelKind::kCartesian3), EstimatorConfig{});
  CHECK_FALSE(res.converged);
  CHECK(res.status == ServoStatus::kAborted);
  CHECK_FALSE(res.abort_reason.empty());
}

TEST_CASE("servo aborts on a joint-limit violation") {
  Scene scene = testing::dissector_scene();
  scene.robot.limits.upper = Eigen::Vector3d(0.031, 0.041, 0.101);
  scene.robot.limits.lower = Eigen::Vector3d(0.029, 0.039, 0.099);
  SimulatedPlant plant(scene, 1);
  const ServoResult res = run_position_servo(
      plant, make_position_task("cone_vertex", RobotModelKind::kCartesian3), EstimatorConfig{});
  CHECK(res.status == ServoStatus::kAborted);
}

TEST_CASE("pose servo aligns the screwdriver") {
  const Scene scene = testing::screw_scene();
  SimulatedPlant plant(scene, 1);
  PoseServoTask task;
  task.position = make_position_task(kScrewShank, RobotModelKind::kArm5);
  task.orientation = shaft_task();
  const PoseServoResult res = run_pose_servo(plant, task, EstimatorConfig{});
  REQUIRE(res.converged);
  CHECK(res.rounds >= 1);
  CHECK(res.final_position_error <= task.position.feature_tolerance);
  CHECK(res.final_orientation_error <= task.orientation.feature_tolerance);
  const Scene& truth = plant.scene();
  CHECK((tool_point_world(truth, kToolTip) - truth.targets.at(kScrewShank)).norm() < 1e-3);
  CHECK(angle_between_deg(tool_shaft_world(truth), direction_world(truth, kScrewAxis)) < 1.0);
}

TEST_CASE("property: converged implies the final error is within tolerance") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> off(-0.06, 0.06);
  std::uniform_real_distribution<double> tol(0.05, 2.0);
  std::uniform_real_distribution<double> gain(0.1, 1.0);
  int converged = 0;
  for (int trial = 0; trial < 40; ++trial) {
    Scene scene = testing::dissector_scene();
    scene.robot = RobotState::make(RobotModelKind::kCartesian3,
                                   Eigen::Vector3d(off(rng), off(rng), 0.08 + std::abs(off(rng))));
    for (auto& cam : scene.cameras) cam.pixel_noise_sigma = 0.5;
    SimulatedPlant plant(scene, static_cast<std::uint64_t>(trial));
    ServoTask task = make_position_task("cone_vertex", RobotModelKind::kCartesian3);
    task.feature_tolerance = tol(rng);
    task.gain = gain(rng);
    task.max_iterations = 300;
    const ServoResult res = run_position_servo(plant, task, EstimatorConfig{});
    if (res.converged) {
      ++converged;
      CHECK(res.final_feature_error <= task.feature_tolerance);
      CHECK(res.trajectory.back().feature_error <= task.feature_tolerance);
    } else {
      CHECK(res.status != ServoStatus::kConverged);
    }
  }
  CHECK(converged > 0);
}
