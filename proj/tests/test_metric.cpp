#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "solmplan/metric.hpp"
#include "solmplan/rng.hpp"

using namespace solmplan;

namespace {

ObservationSet make_obs(const Eigen::MatrixX3d& A, const Eigen::VectorXd& b) {
  ObservationSet obs;
  obs.A = A;
  obs.b = b;
  obs.m = static_cast<int>(A.rows());
  return obs;
}

ObservationSet random_obs(Rng& rng, int m) {
  Eigen::MatrixX3d A(m, 3);
  Eigen::VectorXd b(m);
  for (int i = 0; i < m; ++i) {
    for (int d = 0; d < 3; ++d) A(i, d) = rng.normal();
    b[i] = rng.normal();
  }
  return make_obs(A, b);
}

// dense m x m eigendecomposition of Phi = xi^2 A A' + b b'
Eigen::VectorXd dense_phi_eigs(const Eigen::MatrixX3d& A, const Eigen::VectorXd& b, double xi) {
  const Eigen::MatrixXd phi =
      xi * xi * A * A.transpose() + b * b.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(phi);
  return eig.eigenvalues().reverse();
}

}  // namespace

TEST_CASE("hand-checkable least-squares core") {
  Eigen::MatrixX3d A(4, 3);
  A << 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0;
  Eigen::VectorXd b(4);
  b << 0, 0, 0, 1;
  const LeastSquaresCore core = least_squares_core(make_obs(A, b));
  CHECK(core.dx_star.norm() == doctest::Approx(0.0));
  CHECK((core.r + b).norm() == doctest::Approx(0.0));
  CHECK(core.sigma1 == doctest::Approx(1.0));
  CHECK(core.xi == doctest::Approx(1.0));
  CHECK_FALSE(core.degenerate);
}

TEST_CASE("zero rhs gives zero solution and xi") {
  Rng rng(1);
  ObservationSet obs = random_obs(rng, 20);
  obs.b.setZero();
  const LeastSquaresCore core = least_squares_core(obs);
  CHECK(core.dx_star.norm() < 1e-12);
  CHECK(core.r.norm() < 1e-12);
  CHECK(core.xi == doctest::Approx(0.0));
}

TEST_CASE("zero column flags degeneracy") {
  Rng rng(2);
  ObservationSet obs = random_obs(rng, 20);
  obs.A.col(2).setZero();
  const LeastSquaresCore core = least_squares_core(obs);
  CHECK(core.degenerate);
  const MetricResult res = evaluate(obs, {});
  CHECK(res.degenerate);
  CHECK(std::isinf(res.q));
}

TEST_CASE("m < 3 is rejected") {
  Rng rng(3);
  CHECK_THROWS(least_squares_core(random_obs(rng, 2)));
  CHECK_THROWS(phi_top_eigs(Eigen::MatrixX3d::Zero(3, 3), Eigen::VectorXd::Zero(3), 1.0));
}

TEST_CASE("identity system has a flat Phi spectrum") {
  Eigen::MatrixX3d A(4, 3);
  A << 1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0;
  Eigen::VectorXd b(4);
  b << 0, 0, 0, 1;
  const Eigen::Vector4d lambda = phi_top_eigs(A, b, 1.0);
  for (int i = 0; i < 4; ++i) CHECK(lambda[i] == doctest::Approx(1.0));
}

TEST_CASE("zero system has zero spectrum") {
  Eigen::MatrixX3d A = Eigen::MatrixX3d::Random(10, 3);
  const Eigen::Vector4d lambda = phi_top_eigs(A, Eigen::VectorXd::Zero(10), 0.0);
  for (int i = 0; i < 4; ++i) CHECK(lambda[i] == doctest::Approx(0.0));
}

TEST_CASE("Gram eigenvalues match the dense eigendecomposition") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 4 + static_cast<int>(rng.uniform_index(197));
    const ObservationSet obs = random_obs(rng, m);
    const LeastSquaresCore core = least_squares_core(obs);
    const Eigen::Vector4d fast = phi_top_eigs(obs.A, obs.b, core.xi);
    const Eigen::VectorXd dense = dense_phi_eigs(obs.A, obs.b, core.xi);
    const double scale = std::max(1.0, dense[0]);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(fast[i] - dense[i]) / scale < 1e-9);
    // remaining eigenvalues are analytically zero
    for (int i = 4; i < m; ++i) CHECK(std::abs(dense[i]) / scale < 1e-9);
  }
}

TEST_CASE("closed-form q_min") {
  Eigen::MatrixX3d A(4, 3);
  A << 2, 0, 0, 0, 2, 0, 0, 0, 2, 0, 0, 0;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(4);
  MetricConfig cfg;
  cfg.strategy = Strategy::kMin;
  const MetricResult res = evaluate(make_obs(A, b), cfg);
  CHECK(res.sigma1 == doctest::Approx(2.0));
  CHECK(res.q == doctest::Approx(std::sqrt(0.5) / 2.0));  // ~0.353553
}

TEST_CASE("all strategies coincide when b = 0 and xi = 0") {
  Rng rng(6);
  ObservationSet obs = random_obs(rng, 30);
  obs.b.setZero();
  for (Strategy s : {Strategy::kMin, Strategy::kN, Strategy::kMax}) {
    MetricConfig cfg;
    cfg.strategy = s;
    const MetricResult res = evaluate(obs, cfg);
    CHECK(res.q == doctest::Approx(std::sqrt(cfg.w2) / res.sigma1));
  }
}

TEST_CASE("q_min <= q(alpha) <= q_max for random perturbation directions") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 5 + static_cast<int>(rng.uniform_index(20));
    const ObservationSet obs = random_obs(rng, m);
    const LeastSquaresCore core = least_squares_core(obs);
    if (core.degenerate) continue;
    const Eigen::MatrixXd phi = core.xi * core.xi * obs.A * obs.A.transpose() +
                                obs.b * obs.b.transpose();
    MetricConfig cfg;
    cfg.strategy = Strategy::kMin;
    const double q_min = evaluate(obs, cfg).q;
    cfg.strategy = Strategy::kMax;
    const double q_max = evaluate(obs, cfg).q;
    for (int rep = 0; rep < 50; ++rep) {
      Eigen::MatrixXd alpha(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) alpha(i, j) = rng.normal();
      alpha /= alpha.norm();
      // q(alpha) per the quadratic form: rows of alpha are the dk_j blocks
      double quad = 0.0;
      for (int j = 0; j < m; ++j) quad += alpha.row(j) * phi * alpha.row(j).transpose();
      const double q_alpha = std::sqrt(cfg.w1 * quad + cfg.w2) / core.sigma1;
      CHECK(q_alpha >= q_min - 1e-12);
      CHECK(q_alpha <= q_max + 1e-12);
    }
  }
}

TEST_CASE("q is never below sqrt(w2)/sigma1") {
  Rng rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const ObservationSet obs = random_obs(rng, 12);
    for (Strategy s : {Strategy::kMin, Strategy::kN, Strategy::kMax}) {
      MetricConfig cfg;
      cfg.strategy = s;
      const MetricResult res = evaluate(obs, cfg);
      if (res.degenerate) continue;
      CHECK(res.q >= std::sqrt(cfg.w2) / res.sigma1 - 1e-12);
      // lambda_top sorted descending, non-negative
      for (int i = 0; i < 3; ++i) CHECK(res.lambda_top[i] >= res.lambda_top[i + 1] - 1e-12);
      CHECK(res.lambda_top[3] >= 0.0);
    }
  }
}

TEST_CASE("directional bound sensitivity reproduces the polar curve") {
  const Eigen::Vector2d W(1.0, 8.0);
  CHECK(directional_bound_sensitivity(W, {1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(directional_bound_sensitivity(W, {0.0, 1.0}) == doctest::Approx(std::sqrt(8.0)));
  const double c = std::cos(kPi / 4), s = std::sin(kPi / 4);
  CHECK(directional_bound_sensitivity(W, {c, s}) == doctest::Approx(std::sqrt(4.5)));
  CHECK_THROWS(directional_bound_sensitivity(W, {2.0, 0.0}));
  CHECK_THROWS(directional_bound_sensitivity({-1.0, 1.0}, {1.0, 0.0}));
}

TEST_CASE("perturbation bound holds and its slope dominates the solution slope") {
  Rng rng(9);
  int checked = 0;
  for (int sys = 0; sys < 10; ++sys) {
    const int m = 8 + static_cast<int>(rng.uniform_index(40));
    const ObservationSet obs = random_obs(rng, m);
    const LeastSquaresCore core = least_squares_core(obs);
    if (core.degenerate) continue;

    for (int rep = 0; rep < 100; ++rep) {
      Eigen::MatrixXd alpha(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) alpha(i, j) = rng.normal();
      alpha /= alpha.norm();
      Eigen::VectorXd beta(m);
      for (int i = 0; i < m; ++i) beta[i] = rng.normal();
      beta.normalize();
      const double rk = 1e-3 * rng.uniform();
      const double rt = 1e-3 * rng.uniform();

      const Eigen::MatrixXd dK = rk * alpha;
      const Eigen::MatrixXd dA = dK * obs.A;
      const Eigen::VectorXd db = dK * obs.b + rt * beta;

      const Eigen::MatrixX3d A_hat = obs.A + dA;
      const Eigen::VectorXd b_hat = obs.b - db;
      const Eigen::Vector3d x_hat =
          (A_hat.transpose() * A_hat).ldlt().solve(A_hat.transpose() * b_hat);

      const double nA2 = dA.jacobiSvd().singularValues()[0];
      REQUIRE(nA2 < core.sigma1);
      const double bound = (core.xi * dA.norm() + db.norm()) / (core.sigma1 - nA2);
      CHECK((x_hat - core.dx_star).norm() <= bound);
      ++checked;
    }
  }
  CHECK(checked >= 800);
}

TEST_CASE("appendix derivative formulas match finite differences") {
  Rng rng(10);
  const int m = 25;
  const ObservationSet obs = random_obs(rng, m);
  Eigen::MatrixXd alpha(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) alpha(i, j) = rng.normal();
  alpha /= alpha.norm();
  Eigen::VectorXd beta(m);
  for (int i = 0; i < m; ++i) beta[i] = rng.normal();
  beta.normalize();

  double expect_dA = 0.0, expect_db = 0.0;
  for (int j = 0; j < m; ++j) {
    expect_dA += alpha.row(j) * obs.A * obs.A.transpose() * alpha.row(j).transpose();
    expect_db += alpha.row(j) * obs.b * obs.b.transpose() * alpha.row(j).transpose();
  }
  expect_dA = std::sqrt(expect_dA);
  expect_db = std::sqrt(expect_db);

  const double r0 = 1e-6, h = 1e-7;
  const double fd_dA = oracles::central_diff(
      [&](double rk) { return (rk * alpha * obs.A).norm(); }, r0, h);
  const double fd_db_rk = oracles::central_diff(
      [&](double rk) { return (rk * alpha * obs.b).norm(); }, r0, h);
  const double fd_db_rt = oracles::central_diff(
      [&](double rt) { return (rt * beta).norm(); }, r0, h);
  CHECK(fd_dA == doctest::Approx(expect_dA).epsilon(1e-5));
  CHECK(fd_db_rk == doctest::Approx(expect_db).epsilon(1e-5));
  CHECK(fd_db_rt == doctest::Approx(1.0).epsilon(1e-5));
}

TEST_CASE("solution displacement slope never exceeds the bound slope") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 6 + static_cast<int>(rng.uniform_index(30));
    const ObservationSet obs = random_obs(rng, m);
    const LeastSquaresCore core = least_squares_core(obs);
    if (core.degenerate) continue;

    Eigen::MatrixXd alpha(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) alpha(i, j) = rng.normal();
    alpha /= alpha.norm();
    Eigen::VectorXd beta(m);
    for (int i = 0; i < m; ++i) beta[i] = rng.normal();
    beta.normalize();
    const double gk = rng.uniform(), gt = rng.uniform();

    const double s = 1e-6;
    const Eigen::MatrixXd dK = s * gk * alpha;
    const Eigen::MatrixXd dA = dK * obs.A;
    const Eigen::VectorXd db = dK * obs.b + s * gt * beta;
    const Eigen::MatrixX3d A_hat = obs.A + dA;
    const Eigen::VectorXd b_hat = obs.b - db;
    const Eigen::Vector3d x_hat =
        (A_hat.transpose() * A_hat).ldlt().solve(A_hat.transpose() * b_hat);
    const double nA2 = dA.jacobiSvd().singularValues()[0];
    const double slope_sol = (x_hat - core.dx_star).norm() / s;
    const double slope_bound =
        ((core.xi * dA.norm() + db.norm()) / (core.sigma1 - nA2)) / s;
    CHECK(slope_sol <= slope_bound + 1e-4);
  }
}
