#pragma once

#include <functional>

#include <Eigen/Core>

namespace ibvs {

struct LevenbergMarquardtOptions {
  /// Initial damping relative to the largest diagonal entry of J^T J.
  double initial_damping = 1e-3;
  int max_iterations = 200;
  /// Stop when |step| <= step_tolerance * (|x| + step_tolerance).
  double step_tolerance = 1e-15;
  /// Stop when |J^T r|_inf falls below this.
  double gradient_tolerance = 1e-300;
};

struct LevenbergMarquardtResult {
  Eigen::VectorXd x;
  double cost = 0.0;  // 0.5 * |r(x)|^2
  int iterations = 0;
  bool converged = false;
};

/// Fills residual r(x) and its Jacobian dr/dx. The solver resizes nothing;
/// the callback owns the output shapes.
using ResidualFunction =
    std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& residual,
                        Eigen::MatrixXd& jacobian)>;

/// Dense Levenberg-Marquardt with isotropic damping (J^T J + lambda I) and
/// Nielsen's damping schedule. Steps that raise the cost are rejected, except by
/// rounding once the predicted decrease is below what the cost can resolve. On
/// hitting max_iterations the last accepted iterate is returned with converged = false.
LevenbergMarquardtResult levenberg_marquardt(const ResidualFunction& residual,
                                             Eigen::VectorXd x0,
                                             const LevenbergMarquardtOptions& options = {});

}  // namespace ibvs
