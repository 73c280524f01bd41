#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "ibvs/errors.hpp"
#include "ibvs/jacobian.hpp"
#include "ibvs/levenberg_marquardt.hpp"

using namespace ibvs;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                              double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

}  // namespace

TEST_CASE("finite differences of a linear probe are exact") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index k = 2 + trial % 5;
    const Eigen::Index m = 1 + trial % 4;
    const Eigen::MatrixXd a = random_matrix(rng, k, m, 100.0);
    const Eigen::VectorXd b = random_matrix(rng, k, 1, 100.0);
    int calls = 0;
    const FeatureProbe probe = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
      ++calls;
      return a * r + b;
    };
    const Eigen::VectorXd r0 = random_matrix(rng, m, 1, 0.1);
    const ImageJacobian j = init_finite_difference(probe, r0, Eigen::VectorXd::Constant(m, 1e-3));
    CHECK(calls == 2 * m);
    CHECK((j.matrix - a).norm() <= 1e-8 * a.norm());
    CHECK(j.provenance == JacobianProvenance::kFiniteDifference);
    CHECK(j.age == 0);
  }
}

TEST_CASE("finite differences probe +h before -h in coordinate order") {
  std::vector<Eigen::VectorXd> seen;
  const FeatureProbe probe = [&](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    seen.push_back(r);
    return Eigen::Vector2d(r.sum(), 0.0);
  };
  init_finite_difference(probe, Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d(0.5, 0.25));
  REQUIRE(seen.size() == 4);
  CHECK(seen[0] == Eigen::Vector2d(1.5, 2.0));
  CHECK(seen[1] == Eigen::Vector2d(0.5, 2.0));
  CHECK(seen[2] == Eigen::Vector2d(1.0, 2.25));
  CHECK(seen[3] == Eigen::Vector2d(1.0, 1.75));
}

TEST_CASE("a probe that loses the feature fails initialization at that coordinate") {
  const FeatureProbe probe = [](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    if (r[2] < 0.0) throw BehindCameraError("tool_tip", 1);
    return r;
  };
  try {
    init_finite_difference(probe, Eigen::Vector3d(0.1, 0.1, 0.0), Eigen::Vector3d::Constant(1e-3));
    FAIL("expected InitializationFailedError");
  } catch (const InitializationFailedError& e) {
    CHECK(e.coordinate() == 2);
  }
}

TEST_CASE("central-difference error is second order") {
  // Cubic probe: error of the central quotient is h^2 f'''/6 exactly.
  const FeatureProbe probe = [](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    Eigen::VectorXd f(2);
    f << std::pow(r[0], 3) + r[1], r[0] * r[1] * r[1] + 2.0 * std::pow(r[1], 3);
    return f;
  };
  const Eigen::Vector2d r0(0.4, -0.7);
  Eigen::Matrix2d exact;
  exact << 3.0 * r0[0] * r0[0], 1.0, r0[1] * r0[1], 2.0 * r0[0] * r0[1] + 6.0 * r0[1] * r0[1];
  for (double h : {1e-2, 4e-3, 1e-3}) {
    const double e1 = (init_finite_difference(probe, r0, Eigen::Vector2d::Constant(h)).matrix -
                       exact).norm();
    const double e2 = (init_finite_difference(probe, r0, Eigen::Vector2d::Constant(h / 2)).matrix -
                       exact).norm();
    CHECK(e2 / e1 == doctest::Approx(0.25).epsilon(0.02));
  }
}

TEST_CASE("update matches the closed-form minimizer") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index k = 1 + trial % 6;
    const Eigen::Index m = 1 + (trial / 6) % 5;
    ImageJacobian prev;
    prev.matrix = random_matrix(rng, k, m, 1000.0);
    const Eigen::VectorXd dr = random_matrix(rng, m, 1, std::pow(10.0, -4.0 + 3.0 * u(rng)));
    const Eigen::VectorXd df = random_matrix(rng, k, 1, 10.0);
    EstimatorConfig config;
    config.update_regularization = trial % 3 == 0 ? 0.0 : std::pow(10.0, -8.0 + 6.0 * u(rng));
    config.relative_regularization = trial % 2 == 0 ? 0.0 : 1e-3;
    const double mu = effective_regularization(config, dr);

    const ImageJacobian next = update(prev, dr, df, config);
    const Eigen::MatrixXd oracle = regularized_update_closed_form(prev.matrix, dr, df, mu);
    CHECK((next.matrix - oracle).norm() <= 1e-8 * std::max(1.0, oracle.norm()));
    CHECK(update_objective(next.matrix, prev.matrix, dr, df, mu) <=
          update_objective(prev.matrix, prev.matrix, dr, df, mu) * (1.0 + 1e-12));
    CHECK(next.prediction_error == doctest::Approx((prev.matrix * dr - df).norm()));
    CHECK(next.age == 1);
    CHECK(next.provenance == JacobianProvenance::kUpdated);
  }
}

TEST_CASE("without regularization the update is the minimal secant correction") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index k = 2 + trial % 4;
    const Eigen::Index m = 1 + trial % 3;
    ImageJacobian prev;
    prev.matrix = random_matrix(rng, k, m, 50.0);
    const Eigen::VectorXd dr = random_matrix(rng, m, 1, 0.01);
    const Eigen::VectorXd df = random_matrix(rng, k, 1, 1.0);
    EstimatorConfig config;
    config.update_regularization = 0.0;
    config.relative_regularization = 0.0;
    const ImageJacobian next = update(prev, dr, df, config);
    // Secant condition holds and the change is rank one along dr.
    CHECK((next.matrix * dr - df).norm() <= 1e-9 * std::max(1.0, df.norm()));
    const Eigen::MatrixXd delta = next.matrix - prev.matrix;
    const Eigen::MatrixXd along = delta * dr * dr.transpose() / dr.squaredNorm();
    CHECK((delta - along).norm() <= 1e-9 * std::max(1.0, delta.norm()));
  }
}

TEST_CASE("single-coordinate moves replace only that column") {
  ImageJacobian prev;
  prev.matrix = Eigen::Matrix<double, 3, 2>({{1, 2}, {3, 4}, {5, 6}});
  EstimatorConfig config;
  config.update_regularization = 0.0;
  config.relative_regularization = 0.0;
  const Eigen::Vector2d dr(0.5, 0.0);
  const Eigen::Vector3d df(7, 8, 9);
  const ImageJacobian next = update(prev, dr, df, config);
  CHECK((next.matrix.col(0) - df / 0.5).norm() < 1e-9);
  CHECK(next.matrix.col(1) == prev.matrix.col(1));
}

TEST_CASE("update edge cases") {
  ImageJacobian prev;
  prev.matrix = Eigen::Matrix2d::Identity();
  const EstimatorConfig config;
  SUBCASE("zero step leaves J unchanged") {
    const ImageJacobian next = update(prev, Eigen::Vector2d::Zero(), Eigen::Vector2d(1, 1), config);
    CHECK(next.matrix == prev.matrix);
    CHECK(next.age == 0);
  }
  SUBCASE("consistent observations do not change J") {
    const Eigen::Vector2d dr(0.01, -0.02);
    const ImageJacobian next = update(prev, dr, prev.matrix * dr, config);
    CHECK((next.matrix - prev.matrix).norm() < 1e-12);
    CHECK(next.prediction_error < 1e-15);
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(update(prev, Eigen::Vector3d(1, 1, 1), Eigen::Vector2d(1, 1), config),
                    ShapeError);
  }
}

TEST_CASE("levenberg_marquardt on a nonlinear least-squares problem") {
  // Rosenbrock as residuals: (1 - x, 10 (y - x^2)).
  const ResidualFunction f = [](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
    r.resize(2);
    r << 1.0 - x[0], 10.0 * (x[1] - x[0] * x[0]);
    j.resize(2, 2);
    j << -1.0, 0.0, -20.0 * x[0], 10.0;
  };
  const LevenbergMarquardtResult out = levenberg_marquardt(f, Eigen::Vector2d(-1.2, 1.0), {});
  CHECK(out.converged);
  CHECK((out.x - Eigen::Vector2d(1.0, 1.0)).norm() < 1e-8);
}

TEST_CASE("pseudo_inverse") {
  const EstimatorConfig config;
  SUBCASE("diagonal example") {
    Eigen::MatrixXd j(3, 2);
    j << 2, 0, 0, 4, 0, 0;
    Eigen::MatrixXd expected(2, 3);
    expected << 0.5, 0, 0, 0, 0.25, 0;
    CHECK((pseudo_inverse(j, config) - expected).norm() < 1e-15);
  }
  SUBCASE("Moore-Penrose identities on random tall matrices") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 300; ++trial) {
      const Eigen::Index m = 1 + trial % 5;
      const Eigen::Index k = m + trial % 4;
      const Eigen::MatrixXd j = random_matrix(rng, k, m, 100.0);
      const Eigen::MatrixXd p = pseudo_inverse(j, config);
      CHECK(p.rows() == m);
      CHECK(p.cols() == k);
      const double scale = j.norm();
      CHECK((j * p * j - j).norm() <= 1e-9 * scale);
      CHECK((p * j * p - p).norm() <= 1e-9 * p.norm());
      CHECK(((j * p).transpose() - j * p).norm() <= 1e-9);
      CHECK(((p * j).transpose() - p * j).norm() <= 1e-9);
    }
  }
  SUBCASE("small singular values are cut") {
    Eigen::MatrixXd j(2, 2);
    j << 1, 0, 0, 1e-9;
    const Eigen::MatrixXd p = pseudo_inverse(j, config);
    CHECK(p(0, 0) == doctest::Approx(1.0));
    CHECK(p(1, 1) == 0.0);
    CHECK(condition_number(j) == std::numeric_limits<double>::infinity());
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(pseudo_inverse(Eigen::MatrixXd::Zero(3, 2), config), RankDeficientError);
    CHECK_THROWS_AS(pseudo_inverse(Eigen::MatrixXd::Ones(1, 2), config), ShapeError);
    CHECK_THROWS_AS(condition_number(Eigen::MatrixXd::Zero(3, 2)), RankDeficientError);
  }
}

TEST_CASE("condition_number") {
  Eigen::MatrixXd j(3, 2);
  j << 2, 0, 0, 4, 0, 0;
  CHECK(condition_number(j) == doctest::Approx(2.0));
  CHECK(condition_number(Eigen::Matrix2d::Identity() * 7.0) == doctest::Approx(1.0));
}

TEST_CASE("estimator configuration validation") {
  EstimatorConfig config;
  CHECK_NOTHROW(config.validate());
  config.svd_cutoff = 0.0;
  CHECK_THROWS_AS(config.validate(), ShapeError);
  config = {};
  config.fd_step_position = -1.0;
  CHECK_THROWS_AS(config.validate(), ShapeError);

  const std::vector<std::size_t> coords = {0, 3, 4};
  const Eigen::VectorXd steps = finite_difference_steps(EstimatorConfig{}, RobotModelKind::kArm5, coords);
  CHECK(steps == Eigen::Vector3d(2e-3, 2e-2, 2e-2));
}
