#include "ibvs/levenberg_marquardt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

namespace ibvs {

LevenbergMarquardtResult levenberg_marquardt(const ResidualFunction& residual,
                                             Eigen::VectorXd x0,
                                             const LevenbergMarquardtOptions& options) {
  LevenbergMarquardtResult result;
  result.x = std::move(x0);

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  residual(result.x, r, jac);
  result.cost = 0.5 * r.squaredNorm();

  Eigen::MatrixXd normal = jac.transpose() * jac;
  Eigen::VectorXd gradient = jac.transpose() * r;
  const auto n = result.x.size();
  double lambda = options.initial_damping * std::max(normal.diagonal().maxCoeff(), 1e-300);
  double nu = 2.0;

  Eigen::VectorXd r_trial;
  Eigen::MatrixXd jac_trial;
  for (result.iterations = 0; result.iterations < options.max_iterations;
       ++result.iterations) {
    if (gradient.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      result.converged = true;
      break;
    }
    const Eigen::MatrixXd damped = normal + lambda * Eigen::MatrixXd::Identity(n, n);
    const Eigen::VectorXd step = damped.ldlt().solve(-gradient);
    if (!step.allFinite()) break;
    if (step.norm() <= options.step_tolerance * (result.x.norm() + options.step_tolerance)) {
      result.converged = true;
      break;
    }

    const Eigen::VectorXd x_trial = result.x + step;
    residual(x_trial, r_trial, jac_trial);
    const double cost_trial = 0.5 * r_trial.squaredNorm();
    const double predicted = 0.5 * step.dot(lambda * step - gradient);
    const double rho = predicted > 0.0 ? (result.cost - cost_trial) / predicted : -1.0;

    // Below cost resolution rho is rounding noise; a step that does not raise
    // the cost beyond rounding counts as a success and the step test ends the loop.
    const double resolution = 8.0 * std::numeric_limits<double>::epsilon() * result.cost;
    const bool unresolved = predicted >= 0.0 && predicted <= resolution &&
                            cost_trial <= result.cost + resolution;

    if (unresolved || (rho > 0.0 && cost_trial <= result.cost)) {
      result.x = x_trial;
      result.cost = cost_trial;
      std::swap(r, r_trial);
      std::swap(jac, jac_trial);
      normal = jac.transpose() * jac;
      gradient = jac.transpose() * r;
      lambda *= unresolved ? 1.0 / 3.0 : std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
      nu = 2.0;
    } else {
      // No decrease at this damping: either the model is poor or the iterate
      // is already optimal to rounding. Tiny steps are caught above.
      lambda *= nu;
      nu *= 2.0;
      if (!std::isfinite(lambda)) break;
    }
  }
  return result;
}

}  // namespace ibvs
