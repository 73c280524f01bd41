#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "ibvs/servo.hpp"
#include "ibvs/world.hpp"

namespace ibvs::harness {

struct ScheduledDisturbance {
  /// Index of the task (in scenario order) during which the disturbance fires.
  std::size_t task = 0;
  /// Control iteration of that task at whose start it is applied.
  int iteration = 0;
  Disturbance disturbance;
};

/// Servo plant backed by the simulated world. Owns the ground-truth scene,
/// the noise stream and a frame clock; applies scheduled disturbances.
class SimulatedPlant : public ServoPlant {
 public:
  SimulatedPlant(Scene scene, std::uint64_t seed, double frame_period = 1.0 / 30.0);

  RobotModelKind model() const override;
  Eigen::VectorXd coordinates() const override;
  void move_to(const Eigen::VectorXd& r) override;
  Observation observe() override;
  void begin_iteration(int iteration) override;
  double elapsed_seconds() const override;

  void set_schedule(std::vector<ScheduledDisturbance> schedule);
  /// Selects the task whose disturbances are armed.
  void set_active_task(std::size_t task);

  /// Ground truth, for oracles only.
  const Scene& scene() const { return scene_; }
  long frames() const { return frames_; }

 private:
  Scene scene_;
  std::mt19937_64 rng_;
  bool noisy_ = false;
  double frame_period_;
  long frames_ = 0;
  std::size_t active_task_ = 0;
  std::vector<ScheduledDisturbance> schedule_;
  std::vector<bool> fired_;
};

}  // namespace ibvs::harness
