#include "ibvs/harness/plant.hpp"

#include <utility>

#include "ibvs/errors.hpp"

namespace ibvs::harness {

SimulatedPlant::SimulatedPlant(Scene scene, std::uint64_t seed, double frame_period)
    : scene_(std::move(scene)), rng_(seed), frame_period_(frame_period) {
  scene_.validate();
  for (const auto& cam : scene_.cameras) noisy_ = noisy_ || cam.pixel_noise_sigma > 0.0;
}

RobotModelKind SimulatedPlant::model() const { return scene_.robot.kind; }

Eigen::VectorXd SimulatedPlant::coordinates() const { return scene_.robot.coordinates; }

void SimulatedPlant::move_to(const Eigen::VectorXd& r) {
  if (r.size() != scene_.robot.coordinates.size()) {
    throw ShapeError("move_to: wrong number of coordinates");
  }
  RobotState next = scene_.robot;
  next.coordinates = r;
  next.validate();
  scene_.robot = std::move(next);
}

Observation SimulatedPlant::observe() {
  ++frames_;
  return ibvs::observe(scene_, noisy_ ? &rng_ : nullptr);
}

void SimulatedPlant::begin_iteration(int iteration) {
  for (std::size_t i = 0; i < schedule_.size(); ++i) {
    const auto& d = schedule_[i];
    if (fired_[i] || d.task != active_task_ || d.iteration != iteration) continue;
    scene_ = perturb(std::move(scene_), d.disturbance);
    fired_[i] = true;
  }
}

double SimulatedPlant::elapsed_seconds() const {
  return static_cast<double>(frames_) * frame_period_;
}

void SimulatedPlant::set_schedule(std::vector<ScheduledDisturbance> schedule) {
  schedule_ = std::move(schedule);
  fired_.assign(schedule_.size(), false);
}

void SimulatedPlant::set_active_task(std::size_t task) { active_task_ = task; }

}  // namespace ibvs::harness
