#include <doctest.h>

#include <cmath>
#include <random>

#include "ergodic_hw/stability.hpp"

using namespace ergodic_hw;

namespace {

void check_solves(const Eigen::MatrixXd& R, const Eigen::MatrixXd& Q) {
  const Eigen::MatrixXd lhs = Q * R + R.transpose() * Q;
  const Eigen::MatrixXd two = 2.0 * Eigen::MatrixXd::Identity(R.rows(), R.cols());
  CHECK((lhs - two).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((Q - Q.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

DiffusionModel two_class() {
  std::vector<ClassParams> c{{0.5, 1, 1, 0, 0}, {1.0, 2, 1, 0, 0}};
  return build_limit_model(c);
}

}  // namespace

TEST_CASE("lyapunov matrix examples") {
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
  auto Q = lyapunov_matrix(I);
  CHECK((Q - I).cwiseAbs().maxCoeff() < 1e-14);

  Eigen::MatrixXd D(2, 2);
  D << 1, 0, 0, 2;
  Q = lyapunov_matrix(D);
  CHECK(Q(0, 0) == doctest::Approx(1.0));
  CHECK(Q(1, 1) == doctest::Approx(0.5));
  CHECK(std::abs(Q(0, 1)) < 1e-14);

  Eigen::MatrixXd T(2, 2);
  T << 2, -1, 0, 1;
  Q = lyapunov_matrix(T);
  CHECK(Q(0, 0) == doctest::Approx(0.5));
  CHECK(Q(0, 1) == doctest::Approx(1.0 / 6.0));
  CHECK(Q(1, 1) == doctest::Approx(7.0 / 6.0));
  check_solves(T, Q);

  Eigen::MatrixXd bad(2, 2);
  bad << -1, 0, 0, 1;
  CHECK_THROWS_AS(lyapunov_matrix(bad), ConfigError);
}

TEST_CASE("certificate of the two-class instance") {
  auto m = two_class();
  auto cert = build_certificate(m, RunningCost(1, {1, 3}));
  CHECK(cert.kappa0 > 0.0);
  CHECK(cert.delta > 0.0);
  CHECK(std::isfinite(cert.delta));
  CHECK(cert.c0 > 0.0);
  CHECK(cert.c1 > 0.0);
  // QR + R'Q - kappa0 I is positive semidefinite
  Eigen::MatrixXd R = Eigen::VectorXd::Map(m.mu.data(), 2).asDiagonal();
  Eigen::MatrixXd S = cert.Q * R + R.transpose() * cert.Q -
                      cert.kappa0 * Eigen::MatrixXd::Identity(2, 2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  CHECK(es.eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("identity rates give kappa0 = 2") {
  std::vector<ClassParams> c{{0.5, 1, 1, 0, 0}, {0.5, 1, 1, 0, 0}};
  auto cert = build_certificate(build_limit_model(c), RunningCost(1, {1, 1}));
  CHECK(cert.kappa0 == doctest::Approx(2.0));
  CHECK(cert.delta > 0.0);
}

TEST_CASE("cone is scale invariant") {
  auto cert = build_certificate(two_class(), RunningCost(1, {1, 3}));
  std::mt19937_64 g(47);
  std::uniform_real_distribution<double> u(-5, 5), t(0.01, 100);
  for (int k = 0; k < 1000; ++k) {
    Vec x{u(g), u(g)};
    const double s = t(g);
    Vec y{s * x[0], s * x[1]};
    CHECK(in_cone(cert, x) == in_cone(cert, y));
  }
}

TEST_CASE("generator of x^2 in one dimension") {
  std::vector<ClassParams> c{{1, 1, 1, 0, 0}};
  auto m = build_limit_model(c);
  auto cert = build_certificate(m, RunningCost(2, {1}));
  const double q = cert.Q(0, 0);
  for (double x : {-3.0, -0.5, 0.7, 4.0}) {
    Vec p{x};
    const auto b = drift(m, p, SimplexControl::vertex(1, 0));
    CHECK(lyapunov_value(cert, p) == doctest::Approx(q * x * x));
    CHECK(lyapunov_generator(cert, m, p, SimplexControl::vertex(1, 0)) ==
          doctest::Approx(q * (2 * x * b[0] + 2 * 1.0)));
  }
  auto rep = check_drift_inequality(cert, m, 2000, cert.R0, 3);
  CHECK(rep.violations == 0);
}

TEST_CASE("drift inequality holds on samples") {
  auto m = two_class();
  for (double mm : {1.0, 2.0}) {
    auto cert = build_certificate(m, RunningCost(mm, {1, 3}));
    auto rep = check_drift_inequality(cert, m, 5000, cert.R0, 5);
    CHECK(rep.points == 5000);
    CHECK(rep.violations == 0);
  }
}
