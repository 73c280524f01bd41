#include "ibvs/servo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ibvs/errors.hpp"

namespace ibvs {

namespace {

constexpr double kAntiParallelMargin = 1e-6;
// Central differences leave an O(h^2) residue at the saddle; a generic pose
// has gradients of order one.
constexpr double kStationaryGradient = 1e-2;
constexpr double kSaddleKick = 0.1;  // rad

Eigen::VectorXd gather(const Eigen::VectorXd& r, const std::vector<std::size_t>& idx) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out[static_cast<Eigen::Index>(i)] = r[static_cast<Eigen::Index>(idx[i])];
  }
  return out;
}

Eigen::VectorXd scatter(Eigen::VectorXd r, const std::vector<std::size_t>& idx,
                        const Eigen::VectorXd& active) {
  for (std::size_t i = 0; i < idx.size(); ++i) {
    r[static_cast<Eigen::Index>(idx[i])] = active[static_cast<Eigen::Index>(i)];
  }
  return r;
}

bool at_anti_parallel_saddle(const FeatureVector& now, const ImageJacobian& jac) {
  if (now.kind != FeatureKind::kOrientation) return false;
  if ((now.values.array() > -2.0 + kAntiParallelMargin).any()) return false;
  return jac.matrix.rowwise().norm().maxCoeff() < kStationaryGradient;
}

class ServoLoop {
 public:
  ServoLoop(ServoPlant& plant, const ServoTask& task, const EstimatorConfig& config)
      : plant_(plant), task_(task), config_(config) {}

  ServoResult run(const ImageJacobian* warm_start) {
    task_.validate();
    config_.validate();
    const FeatureKind kind = feature_kind(task_.features);
    if (warm_start) jacobian_ = *warm_start;

    Eigen::VectorXd r = plant_.coordinates();
    std::optional<Eigen::VectorXd> prev_r;
    std::optional<Eigen::VectorXd> prev_f;
    bool kicked = false;

    for (int it = 0;; ++it) {
      plant_.begin_iteration(it);
      FeatureSample sample;
      try {
        sample = extract_features(plant_.observe(), task_.features);
      } catch (const Error& e) {
        return abort(fmt::format("feature lost: {}", e.what()));
      }
      const Eigen::VectorXd& f = sample.current.values;
      bool reinitialized = false;

      if (prev_f && jacobian_) {
        const Eigen::VectorXd dr = gather(r, task_.coordinates) - gather(*prev_r, task_.coordinates);
        const Eigen::VectorXd df = f - *prev_f;
        if (df.size() != jacobian_->rows()) return abort("feature dimension changed");
        const double prediction = (jacobian_->matrix * dr - df).norm();
        const bool residual_trigger =
            task_.reinit.on_residual && prediction > config_.reinit_residual_threshold;
        if (residual_trigger) {
          if (!initialize(r)) return result_;
          jacobian_->prediction_error = prediction;
          reinitialized = true;
        } else {
          jacobian_ = update(*jacobian_, dr, df, config_);
          if (task_.reinit.on_age && config_.max_age > 0 && jacobian_->age >= config_.max_age) {
            if (!initialize(r)) return result_;
            reinitialized = true;
          }
        }
      }

      const double err = feature_error(kind, sample.goal.values, f);
      TrajectorySample rec;
      rec.iteration = it;
      rec.coordinates = r;
      rec.features = f;
      rec.goal = sample.goal.values;
      rec.feature_error = err;
      if (jacobian_) {
        rec.jacobian_residual = jacobian_->last_residual;
        rec.prediction_error = jacobian_->prediction_error;
      }
      rec.reinitialized = reinitialized;
      rec.time = plant_.elapsed_seconds();
      result_.trajectory.push_back(std::move(rec));
      result_.final_feature_error = err;
      result_.iterations = it;

      if (err <= task_.feature_tolerance) {
        result_.converged = true;
        result_.status = ServoStatus::kConverged;
        break;
      }
      if (it >= task_.max_iterations) {
        result_.status = ServoStatus::kMaxIterations;
        break;
      }

      if (!jacobian_) {
        if (!initialize(r)) return result_;
      }

      Eigen::VectorXd step;
      if (at_anti_parallel_saddle(sample.current, *jacobian_)) {
        if (kicked) return abort("stationary-gradient: anti-parallel start persists");
        kicked = true;
        ++result_.stationary_kicks;
        step = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(task_.coordinates.size()));
        step[0] = kSaddleKick;
        jacobian_.reset();  // the estimate at the saddle carries no information
      } else {
        try {
          step = control_step(*jacobian_, sample.current, sample.goal, task_, config_);
        } catch (const RankDeficientError&) {
          if (!initialize(r)) return result_;
          try {
            step = control_step(*jacobian_, sample.current, sample.goal, task_, config_);
          } catch (const RankDeficientError& e) {
            return abort(fmt::format("step failed after re-initialization: {}", e.what()));
          }
        }
      }

      const Eigen::VectorXd target =
          scatter(r, task_.coordinates, gather(r, task_.coordinates) + step);
      try {
        plant_.move_to(target);
      } catch (const Error& e) {
        return abort(fmt::format("command rejected: {}", e.what()));
      }
      prev_r = r;
      prev_f = f;
      r = plant_.coordinates();
      if (!jacobian_) prev_f.reset();
    }
    result_.final_jacobian = jacobian_;
    return result_;
  }

 private:
  // Finite-difference probing around r; the robot is returned to r afterwards.
  bool initialize(const Eigen::VectorXd& r) {
    const FeatureProbe probe = [&](const Eigen::VectorXd& active) {
      plant_.move_to(scatter(r, task_.coordinates, active));
      return extract_features(plant_.observe(), task_.features).current.values;
    };
    const Eigen::VectorXd steps =
        finite_difference_steps(config_, plant_.model(), task_.coordinates);
    try {
      jacobian_ = init_finite_difference(probe, gather(r, task_.coordinates), steps);
      plant_.move_to(r);
    } catch (const Error& e) {
      try {
        plant_.move_to(r);
      } catch (const Error&) {
      }
      abort(e.what());
      return false;
    }
    ++result_.reinitializations;
    if (!result_.initial_jacobian) result_.initial_jacobian = jacobian_;
    try {
      result_.condition_numbers.push_back(
          condition_number(jacobian_->matrix, config_.svd_cutoff));
    } catch (const RankDeficientError&) {
      result_.condition_numbers.push_back(std::numeric_limits<double>::infinity());
    }
    return true;
  }

  ServoResult abort(std::string reason) {
    result_.converged = false;
    result_.status = ServoStatus::kAborted;
    result_.abort_reason = std::move(reason);
    result_.final_jacobian = jacobian_;
    return result_;
  }

  ServoPlant& plant_;
  const ServoTask& task_;
  const EstimatorConfig& config_;
  std::optional<ImageJacobian> jacobian_;
  ServoResult result_;
};

}  // namespace

void ServoTask::validate() const {
  if (!(gain > 0.0 && gain <= 1.0)) throw ShapeError("gain must lie in (0, 1]");
  if (!(feature_tolerance > 0.0)) throw ShapeError("feature tolerance must be positive");
  if (max_iterations < 0) throw ShapeError("max_iterations must be non-negative");
  if (coordinates.empty()) throw ShapeError("servo task drives no coordinates");
  if (step_limit.size() != 1 &&
      step_limit.size() != static_cast<Eigen::Index>(coordinates.size())) {
    throw ShapeError("step_limit needs one entry or one per coordinate");
  }
  if (!(step_limit.array() > 0.0).all()) throw ShapeError("step limits must be positive");
}

double ServoTask::step_limit_for(std::size_t active_index) const {
  return step_limit.size() == 1 ? step_limit[0]
                                : step_limit[static_cast<Eigen::Index>(active_index)];
}

ServoTask make_position_task(std::string goal_point, RobotModelKind /*kind*/) {
  ServoTask task;
  PointFeatureSpec spec;
  spec.goal_point = std::move(goal_point);
  task.features = spec;
  task.coordinates = {0, 1, 2};
  task.feature_tolerance = 1.0;
  task.step_limit = Eigen::VectorXd::Constant(1, 0.01);
  return task;
}

ServoTask make_orientation_task(std::vector<AxisPair> axes, RobotModelKind kind) {
  if (kind != RobotModelKind::kArm5) {
    throw ShapeError("orientation servo needs a robot with angular coordinates");
  }
  ServoTask task;
  OrientationFeatureSpec spec;
  spec.axes = std::move(axes);
  task.features = spec;
  task.coordinates = {3, 4};
  task.feature_tolerance = 1e-5;
  task.step_limit = Eigen::VectorXd::Constant(1, 0.1);
  return task;
}

ServoTask make_shadow_task(std::size_t side_camera, RobotModelKind /*kind*/) {
  ServoTask task;
  ShadowFeatureSpec spec;
  spec.camera = side_camera;
  task.features = spec;
  task.coordinates = {2};
  task.feature_tolerance = 1.0;
  task.step_limit = Eigen::VectorXd::Constant(1, 0.005);
  return task;
}

std::string_view to_string(ServoStatus status) {
  switch (status) {
    case ServoStatus::kConverged:
      return "converged";
    case ServoStatus::kMaxIterations:
      return "max_iterations";
    case ServoStatus::kAborted:
      return "aborted";
  }
  return "unknown";
}

double feature_error(FeatureKind kind, const Eigen::VectorXd& goal, const Eigen::VectorXd& now) {
  if (goal.size() != now.size()) throw ShapeError("goal and feature sizes differ");
  if (goal.size() == 0) return 0.0;
  if (kind == FeatureKind::kOrientation) return (goal - now).lpNorm<Eigen::Infinity>();
  return (goal - now).norm();
}

Eigen::VectorXd control_step(const ImageJacobian& jacobian, const FeatureVector& now,
                             const FeatureVector& goal, const ServoTask& task,
                             const EstimatorConfig& config) {
  if (now.kind != goal.kind) throw ShapeError("feature kind differs from the goal kind");
  if (now.values.size() != goal.values.size() || jacobian.rows() != now.values.size()) {
    throw ShapeError("Jacobian rows must match the feature vector");
  }
  if (jacobian.cols() != static_cast<Eigen::Index>(task.coordinates.size())) {
    throw ShapeError("Jacobian columns must match the driven coordinates");
  }
  Eigen::VectorXd step =
      task.gain * pseudo_inverse(jacobian.matrix, config) * (goal.values - now.values);
  double scale = 1.0;
  for (Eigen::Index i = 0; i < step.size(); ++i) {
    const double limit = task.step_limit_for(static_cast<std::size_t>(i));
    if (std::abs(step[i]) > limit) scale = std::min(scale, limit / std::abs(step[i]));
  }
  return scale * step;
}

ServoResult run_servo(ServoPlant& plant, const ServoTask& task, const EstimatorConfig& config,
                      const ImageJacobian* warm_start) {
  // Without a warm start the first control step initializes by finite differences.
  return ServoLoop(plant, task, config).run(task.reinit.on_start ? nullptr : warm_start);
}

ServoResult run_position_servo(ServoPlant& plant, const ServoTask& task,
                               const EstimatorConfig& config) {
  if (feature_kind(task.features) != FeatureKind::kPosition) {
    throw ShapeError("position servo needs point features");
  }
  return run_servo(plant, task, config);
}

ServoResult run_orientation_servo(ServoPlant& plant, const ServoTask& task,
                                  const EstimatorConfig& config) {
  if (feature_kind(task.features) != FeatureKind::kOrientation) {
    throw ShapeError("orientation servo needs orientation features");
  }
  return run_servo(plant, task, config);
}

ServoResult run_shadow_servo(ServoPlant& plant, const ServoTask& task,
                             const EstimatorConfig& config) {
  if (feature_kind(task.features) != FeatureKind::kShadowDistance) {
    throw ShapeError("shadow servo needs the shadow-distance feature");
  }
  if (task.coordinates.size() != 1) throw ShapeError("shadow servo drives one coordinate");
  ServoResult result = run_servo(plant, task, config);
  if (result.converged) {
    result.stored_coordinate =
        plant.coordinates()[static_cast<Eigen::Index>(task.coordinates.front())];
  }
  return result;
}

PoseServoResult run_pose_servo(ServoPlant& plant, const PoseServoTask& task,
                               const EstimatorConfig& config) {
  PoseServoResult out;
  const FeatureKind position_kind = feature_kind(task.position.features);
  const FeatureKind orientation_kind = feature_kind(task.orientation.features);
  for (out.rounds = 1; out.rounds <= task.max_rounds; ++out.rounds) {
    out.position_rounds.push_back(run_position_servo(plant, task.position, config));
    if (out.position_rounds.back().status == ServoStatus::kAborted) {
      out.abort_reason = "position: " + out.position_rounds.back().abort_reason;
      return out;
    }
    out.orientation_rounds.push_back(run_orientation_servo(plant, task.orientation, config));
    if (out.orientation_rounds.back().status == ServoStatus::kAborted) {
      out.abort_reason = "orientation: " + out.orientation_rounds.back().abort_reason;
      return out;
    }
    const ServoResult& pos_round = out.position_rounds.back();
    const ServoResult& ori_round = out.orientation_rounds.back();
    if (pos_round.converged && ori_round.converged && ori_round.iterations == 0) {
      // The orientation round did not move the robot, so the position servo's
      // final measurement still describes it.
      out.final_position_error = pos_round.final_feature_error;
      out.final_orientation_error = ori_round.final_feature_error;
      out.converged = true;
      return out;
    }
    try {
      const Observation obs = plant.observe();
      const FeatureSample pos = extract_features(obs, task.position.features);
      const FeatureSample ori = extract_features(obs, task.orientation.features);
      out.final_position_error = feature_error(position_kind, pos.goal.values, pos.current.values);
      out.final_orientation_error =
          feature_error(orientation_kind, ori.goal.values, ori.current.values);
    } catch (const Error& e) {
      out.abort_reason = fmt::format("feature lost: {}", e.what());
      return out;
    }
    if (out.final_position_error <= task.position.feature_tolerance &&
        out.final_orientation_error <= task.orientation.feature_tolerance) {
      out.converged = true;
      return out;
    }
  }
  out.rounds = task.max_rounds;
  return out;
}

}  // namespace ibvs
