#include "ibvs/jacobian.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SVD>
#include <fmt/format.h>

#include "ibvs/errors.hpp"
#include "ibvs/levenberg_marquardt.hpp"

namespace ibvs {

namespace {

// vec(J) is row-major: entries of row i occupy [i*m, (i+1)*m).
Eigen::VectorXd flatten(const Eigen::MatrixXd& j) {
  Eigen::VectorXd x(j.size());
  for (Eigen::Index i = 0; i < j.rows(); ++i) x.segment(i * j.cols(), j.cols()) = j.row(i);
  return x;
}

Eigen::MatrixXd unflatten(const Eigen::VectorXd& x, Eigen::Index rows, Eigen::Index cols) {
  Eigen::MatrixXd j(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) j.row(i) = x.segment(i * cols, cols).transpose();
  return j;
}

}  // namespace

void EstimatorConfig::validate() const {
  const bool ok = fd_step_position > 0.0 && fd_step_angle > 0.0 && lm_damping > 0.0 &&
                  lm_max_iterations > 0 && update_regularization >= 0.0 &&
                  relative_regularization >= 0.0 && svd_cutoff > 0.0 && svd_cutoff < 1.0 &&
                  reinit_residual_threshold > 0.0 && max_age >= 0 && min_update_step >= 0.0;
  if (!ok) throw ShapeError("invalid estimator configuration");
}

Eigen::VectorXd finite_difference_steps(const EstimatorConfig& config, RobotModelKind kind,
                                        std::span<const std::size_t> coordinates) {
  Eigen::VectorXd steps(static_cast<Eigen::Index>(coordinates.size()));
  for (std::size_t i = 0; i < coordinates.size(); ++i) {
    steps[static_cast<Eigen::Index>(i)] = is_angular_coordinate(kind, coordinates[i])
                                              ? config.fd_step_angle
                                              : config.fd_step_position;
  }
  return steps;
}

ImageJacobian init_finite_difference(const FeatureProbe& probe, const Eigen::VectorXd& r0,
                                     const Eigen::VectorXd& steps) {
  if (steps.size() != r0.size()) throw ShapeError("one finite-difference step per coordinate");
  ImageJacobian out;
  for (Eigen::Index j = 0; j < r0.size(); ++j) {
    const auto coordinate = static_cast<std::size_t>(j);
    if (!(steps[j] > 0.0)) throw InitializationFailedError(coordinate, "non-positive step");
    Eigen::VectorXd plus = r0;
    Eigen::VectorXd minus = r0;
    plus[j] += steps[j];
    minus[j] -= steps[j];
    Eigen::VectorXd f_plus;
    Eigen::VectorXd f_minus;
    try {
      f_plus = probe(plus);
      f_minus = probe(minus);
    } catch (const std::exception& e) {
      throw InitializationFailedError(coordinate, e.what());
    }
    if (f_plus.size() != f_minus.size() || (j > 0 && f_plus.size() != out.matrix.rows())) {
      throw InitializationFailedError(coordinate, "feature count changed while probing");
    }
    if (j == 0) out.matrix.resize(f_plus.size(), r0.size());
    out.matrix.col(j) = (f_plus - f_minus) / (2.0 * steps[j]);
  }
  if (!out.matrix.allFinite()) {
    throw InitializationFailedError(0, "non-finite finite-difference Jacobian");
  }
  return out;
}

double effective_regularization(const EstimatorConfig& config, const Eigen::VectorXd& dr) {
  return config.update_regularization + config.relative_regularization * dr.squaredNorm();
}

double update_objective(const Eigen::MatrixXd& candidate, const Eigen::MatrixXd& previous,
                        const Eigen::VectorXd& dr, const Eigen::VectorXd& df, double mu) {
  return (candidate * dr - df).squaredNorm() + mu * (candidate - previous).squaredNorm();
}

Eigen::MatrixXd regularized_update_closed_form(const Eigen::MatrixXd& previous,
                                               const Eigen::VectorXd& dr,
                                               const Eigen::VectorXd& df, double mu) {
  return previous + (df - previous * dr) * dr.transpose() / (mu + dr.squaredNorm());
}

ImageJacobian update(const ImageJacobian& previous, const Eigen::VectorXd& dr,
                     const Eigen::VectorXd& df, const EstimatorConfig& config) {
  const Eigen::Index k = previous.rows();
  const Eigen::Index m = previous.cols();
  if (dr.size() != m || df.size() != k) {
    throw ShapeError(fmt::format("update: J is {}x{}, dr has {} and df has {} entries", k, m,
                                 dr.size(), df.size()));
  }
  if (!(dr.norm() > config.min_update_step)) return previous;

  const double mu = effective_regularization(config, dr);
  const double sqrt_mu = std::sqrt(mu);
  const Eigen::MatrixXd& j_prev = previous.matrix;
  const Eigen::VectorXd x_prev = flatten(j_prev);
  const Eigen::Index params = k * m;
  const Eigen::Index residuals = mu > 0.0 ? k + params : k;

  // Residuals: [J dr - df ; sqrt(mu) vec(J - J_prev)]. The problem is linear, so
  // the residual Jacobian is constant.
  Eigen::MatrixXd residual_jacobian = Eigen::MatrixXd::Zero(residuals, params);
  for (Eigen::Index i = 0; i < k; ++i) residual_jacobian.block(i, i * m, 1, m) = dr.transpose();
  if (mu > 0.0) {
    residual_jacobian.bottomRows(params) =
        sqrt_mu * Eigen::MatrixXd::Identity(params, params);
  }

  const ResidualFunction residual = [&](const Eigen::VectorXd& x, Eigen::VectorXd& r,
                                        Eigen::MatrixXd& jac) {
    r.resize(residuals);
    r.head(k) = unflatten(x, k, m) * dr - df;
    if (mu > 0.0) r.tail(params) = sqrt_mu * (x - x_prev);
    jac = residual_jacobian;
  };

  LevenbergMarquardtOptions options;
  options.initial_damping = config.lm_damping;
  options.max_iterations = config.lm_max_iterations;
  const LevenbergMarquardtResult solved = levenberg_marquardt(residual, x_prev, options);

  ImageJacobian out;
  out.matrix = unflatten(solved.x, k, m);
  out.prediction_error = (j_prev * dr - df).norm();
  out.last_residual = (out.matrix * dr - df).norm();
  out.age = previous.age + 1;
  out.stale = !solved.converged;
  out.provenance = JacobianProvenance::kUpdated;
  return out;
}

Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& jacobian, const EstimatorConfig& config) {
  if (jacobian.rows() < jacobian.cols()) {
    throw ShapeError(fmt::format("pseudo-inverse needs k >= m, got {}x{}", jacobian.rows(),
                                 jacobian.cols()));
  }
  if (!jacobian.allFinite()) throw RankDeficientError("Jacobian has non-finite entries");
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacobian,
                                              Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sigma = svd.singularValues();
  if (sigma.size() == 0 || !(sigma[0] > 0.0)) {
    throw RankDeficientError("all singular values are below the cutoff");
  }
  const double threshold = config.svd_cutoff * sigma[0];
  Eigen::VectorXd inverted = Eigen::VectorXd::Zero(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma[i] >= threshold) inverted[i] = 1.0 / sigma[i];
  }
  return svd.matrixV() * inverted.asDiagonal() * svd.matrixU().transpose();
}

double condition_number(const Eigen::MatrixXd& jacobian, double svd_cutoff) {
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(jacobian);
  const Eigen::VectorXd& sigma = svd.singularValues();
  if (sigma.size() == 0 || !(sigma[0] > 0.0)) {
    throw RankDeficientError("condition number of a zero matrix");
  }
  const double smallest = sigma[sigma.size() - 1];
  if (smallest < svd_cutoff * sigma[0]) return std::numeric_limits<double>::infinity();
  return sigma[0] / smallest;
}

}  // namespace ibvs
