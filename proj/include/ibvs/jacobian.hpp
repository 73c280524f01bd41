#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include <Eigen/Core>

#include "ibvs/robot.hpp"

namespace ibvs {

enum class JacobianProvenance { kFiniteDifference, kUpdated };

/// Estimated image Jacobian df/dr (k x m).
struct ImageJacobian {
  Eigen::MatrixXd matrix;
  /// |J dr - df| after the last update (0 right after initialization).
  double last_residual = 0.0;
  /// |J_prev dr - df|: how badly the previous estimate predicted the last motion.
  double prediction_error = 0.0;
  /// Updates since the last finite-difference initialization.
  int age = 0;
  /// Set when the last update's solver did not converge.
  bool stale = false;
  JacobianProvenance provenance = JacobianProvenance::kFiniteDifference;

  Eigen::Index rows() const { return matrix.rows(); }
  Eigen::Index cols() const { return matrix.cols(); }
};

struct EstimatorConfig {
  /// Finite-difference steps; metres for positions, radians for angles. Each
  /// should move the image by several pixels so probing stays above pixel noise.
  double fd_step_position = 2e-3;
  double fd_step_angle = 2e-2;
  /// Initial LM damping, relative to the largest diagonal of the normal matrix.
  double lm_damping = 1e-3;
  int lm_max_iterations = 200;
  /// Absolute weight mu on |J - J_prev|_F^2. Steps much shorter than sqrt(mu)
  /// barely change J, which keeps noise-dominated moves from corrupting it.
  double update_regularization = 1e-6;
  /// Additional weight proportional to |dr|^2; the total is
  /// mu = update_regularization + relative_regularization * |dr|^2.
  double relative_regularization = 1e-3;
  /// Singular values below svd_cutoff * sigma_max are treated as zero.
  double svd_cutoff = 1e-6;
  /// Re-initialize when the prediction error exceeds this (feature units).
  double reinit_residual_threshold = 5.0;
  /// Re-initialize after this many updates (0 disables).
  int max_age = 0;
  /// Steps with |dr| at or below this carry no information and are skipped.
  double min_update_step = 1e-9;

  /// Throws ShapeError on invalid settings.
  void validate() const;
};

/// Per-coordinate finite-difference steps for the selected coordinates.
Eigen::VectorXd finite_difference_steps(const EstimatorConfig& config, RobotModelKind kind,
                                        std::span<const std::size_t> coordinates);

/// One observation per call: features seen with the robot at the given coordinates.
using FeatureProbe = std::function<Eigen::VectorXd(const Eigen::VectorXd& r)>;

/// Central differences, column j = (f(r + h_j e_j) - f(r - h_j e_j)) / 2 h_j, using
/// exactly 2m probe calls (+h before -h, coordinate order). Probe exceptions are
/// rethrown as InitializationFailedError naming the coordinate. Returning the
/// robot to r0 is the caller's job.
ImageJacobian init_finite_difference(const FeatureProbe& probe, const Eigen::VectorXd& r0,
                                     const Eigen::VectorXd& steps);

/// Regularized secant update: argmin_J |J dr - df|^2 + mu |J - J_prev|_F^2,
/// solved by Levenberg-Marquardt started at J_prev. Steps shorter than
/// config.min_update_step return J_prev unchanged.
ImageJacobian update(const ImageJacobian& previous, const Eigen::VectorXd& dr,
                     const Eigen::VectorXd& df, const EstimatorConfig& config);

/// Closed form of the same objective, J_prev + (df - J_prev dr) dr^T / (mu + |dr|^2).
Eigen::MatrixXd regularized_update_closed_form(const Eigen::MatrixXd& previous,
                                               const Eigen::VectorXd& dr,
                                               const Eigen::VectorXd& df, double mu);

/// Effective mu used by `update` for this step.
double effective_regularization(const EstimatorConfig& config, const Eigen::VectorXd& dr);

/// |J dr - df|^2 + mu |J - J_prev|_F^2
double update_objective(const Eigen::MatrixXd& candidate, const Eigen::MatrixXd& previous,
                        const Eigen::VectorXd& dr, const Eigen::VectorXd& df, double mu);

/// SVD Moore-Penrose inverse (m x k) with relative cutoff. Throws ShapeError when
/// k < m and RankDeficientError when nothing survives the cutoff.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& jacobian, const EstimatorConfig& config);

/// sigma_max / sigma_min, or +inf when any singular value falls below the cutoff.
/// Throws RankDeficientError for the zero matrix.
double condition_number(const Eigen::MatrixXd& jacobian, double svd_cutoff = 1e-6);

}  // namespace ibvs
