#include "ergodic_hw/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "ergodic_hw/stats.hpp"

namespace ergodic_hw {

namespace {

void check_m_matrix(const Eigen::MatrixXd& R) {
  const Eigen::Index d = R.rows();
  if (R.cols() != d || d == 0) throw ConfigError("R must be square");
  double s = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!(R(i, i) > 0.0)) throw ConfigError("R must have a positive diagonal");
    s = std::max(s, R(i, i));
    for (Eigen::Index j = 0; j < d; ++j)
      if (i != j && R(i, j) > 0.0)
        throw ConfigError("R has a positive off-diagonal entry (not an M-matrix)");
  }
  const Eigen::MatrixXd N = s * Eigen::MatrixXd::Identity(d, d) - R;
  const double spectral = N.eigenvalues().cwiseAbs().maxCoeff();
  if (!(s - spectral > 0.0)) throw ConfigError("R is a singular M-matrix");
}

double sphere_norm(std::span<const double> x) {
  double n2 = 0.0;
  for (double v : x) n2 += v * v;
  return std::sqrt(n2);
}

// Direction samples on the unit sphere.
std::vector<Vec> sphere_directions(std::size_t d, std::size_t count, std::uint64_t seed) {
  std::vector<Vec> out;
  if (d == 1) return {{1.0}, {-1.0}};
  if (d == 2) {
    for (std::size_t k = 0; k < count; ++k) {
      const double a = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
      out.push_back({std::cos(a), std::sin(a)});
    }
    return out;
  }
  auto rng = make_stream(seed, 0, StreamRole::kSampling);
  std::normal_distribution<double> normal;
  for (std::size_t k = 0; k < count; ++k) {
    Vec v(d);
    for (double& c : v) c = normal(rng);
    const double n = sphere_norm(v);
    for (double& c : v) c /= n;
    out.push_back(std::move(v));
  }
  return out;
}

struct Homogeneous {
  double leading;  // degree m part, maximized over u
  double first;    // degree m-1 (ell term)
  double second;   // degree m-2 (diffusion term)
};

// L^u V(t theta) = t^m leading + t^(m-1) first + t^(m-2) second.
Homogeneous decompose(const StabilityCertificate& cert, const DiffusionModel& model,
                      const Vec& theta) {
  const auto d = static_cast<Eigen::Index>(model.d);
  const double m = cert.m;
  Eigen::Map<const Eigen::VectorXd> x(theta.data(), d);
  const Eigen::VectorXd Qx = cert.Q * x;
  const double s2 = x.dot(Qx);
  const double g = m * std::pow(s2, m / 2.0 - 1.0);
  const Eigen::VectorXd grad = g * Qx;
  Homogeneous h{};
  const double mass = queue_mass(theta);
  h.leading = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < d; ++j) {
    double val = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double u = i == j ? 1.0 : 0.0;
      const double b = -model.mu[i] * (x[i] - mass * u) - mass * model.gamma[i] * u;
      val += b * grad[i];
    }
    h.leading = std::max(h.leading, val);
  }
  Eigen::Map<const Eigen::VectorXd> ell(model.ell.data(), d);
  h.first = ell.dot(grad);
  const double g2 = m * (m - 2.0) * std::pow(s2, m / 2.0 - 2.0);
  for (Eigen::Index i = 0; i < d; ++i)
    h.second += 0.5 * model.variance(i) * (g * cert.Q(i, i) + g2 * Qx[i] * Qx[i]);
  return h;
}

}  // namespace

Eigen::MatrixXd lyapunov_matrix(const Eigen::MatrixXd& R) {
  check_m_matrix(R);
  const Eigen::Index d = R.rows();
  // Unknowns Q(i,j), i <= j.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> slots;
  Eigen::MatrixXi slot(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) {
      slot(i, j) = slot(j, i) = static_cast<int>(slots.size());
      slots.emplace_back(i, j);
    }
  const auto n = static_cast<Eigen::Index>(slots.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (Eigen::Index row = 0; row < n; ++row) {
    const auto [i, j] = slots[static_cast<std::size_t>(row)];
    // (QR)_ij + (R'Q)_ij = sum_k Q_ik R_kj + R_ki Q_kj
    for (Eigen::Index k = 0; k < d; ++k) {
      A(row, slot(i, k)) += R(k, j);
      A(row, slot(k, j)) += R(k, i);
    }
    rhs[row] = i == j ? 2.0 : 0.0;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw ConfigError("Lyapunov system is singular");
  const Eigen::VectorXd q = lu.solve(rhs);
  Eigen::MatrixXd Q(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) Q(i, j) = q[slot(i, j)];
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Q);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      (ldlt.vectorD().array() <= 0.0).any())
    throw ConfigError("Lyapunov solution is not positive definite");
  return Q;
}

StabilityCertificate build_certificate(const DiffusionModel& model, const RunningCost& cost) {
  const auto d = static_cast<Eigen::Index>(model.d);
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(d, d), Gamma = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    R(i, i) = model.mu[i];
    Gamma(i, i) = model.gamma[i];
  }
  StabilityCertificate cert;
  cert.m = cost.m;
  cert.Q = lyapunov_matrix(R);
  const Eigen::MatrixXd S = cert.Q * R + R.transpose() * cert.Q;
  cert.kappa0 = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(S).eigenvalues().minCoeff();
  const Eigen::MatrixXd cross = cert.Q * (R - Gamma);
  cert.C = cost.m * Eigen::JacobiSVD<Eigen::MatrixXd>(cross).singularValues()(0);
  const double cap = std::sqrt(static_cast<double>(model.d));
  cert.delta = cert.C > 0.0 ? std::min(cert.kappa0 / (4.0 * cert.C), cap) : cap;

  // Constants from the homogeneous decomposition over sampled directions.
  double worst_out = -std::numeric_limits<double>::infinity();  // max over K^c
  double worst_in = 0.0;                                         // max^+ over K
  double lower = 0.0;
  for (const auto& theta : sphere_directions(model.d, 20000, 7)) {
    const auto h = decompose(cert, model, theta);
    lower = std::max(lower, std::abs(h.first) + std::abs(h.second));
    if (in_cone(cert, theta))
      worst_in = std::max(worst_in, h.leading);
    else
      worst_out = std::max(worst_out, h.leading);
  }
  if (!(worst_out < 0.0))
    throw ConfigError("drift is not contracting outside the cone; no certificate");
  const double margin = -worst_out;
  constexpr double kSafety = 1.1;
  cert.R0 = std::max(1.0, 4.0 * lower / margin);
  cert.c0 = 0.75 * margin / kSafety;
  cert.c1 = kSafety * (worst_in + 0.25 * margin) / std::pow(cert.delta, cert.m);
  return cert;
}

bool in_cone(const StabilityCertificate& cert, std::span<const double> x) {
  return cert.delta * sphere_norm(x) < queue_mass(x);
}

double lyapunov_value(const StabilityCertificate& cert, std::span<const double> x) {
  const auto d = static_cast<Eigen::Index>(x.size());
  Eigen::Map<const Eigen::VectorXd> v(x.data(), d);
  return std::pow(v.dot(cert.Q * v), cert.m / 2.0);
}

double lyapunov_generator(const StabilityCertificate& cert, const DiffusionModel& model,
                          std::span<const double> x, const SimplexControl& u) {
  const auto d = static_cast<Eigen::Index>(model.d);
  Eigen::Map<const Eigen::VectorXd> v(x.data(), d);
  const Eigen::VectorXd Qx = cert.Q * v;
  const double s2 = v.dot(Qx);
  const double m = cert.m;
  const double g = m * std::pow(s2, m / 2.0 - 1.0);
  const double g2 = m * (m - 2.0) * std::pow(s2, m / 2.0 - 2.0);
  const Vec b = drift(model, x, u);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    acc += b[static_cast<std::size_t>(i)] * g * Qx[i];
    acc += 0.5 * model.variance(static_cast<std::size_t>(i)) *
           (g * cert.Q(i, i) + g2 * Qx[i] * Qx[i]);
  }
  return acc;
}

double drift_bound(const StabilityCertificate& cert, std::span<const double> x) {
  if (in_cone(cert, x)) return 1.0 + cert.c1 * std::pow(queue_mass(x), cert.m);
  return 1.0 - cert.c0 * std::pow(sphere_norm(x), cert.m);
}

DriftCheckReport check_drift_inequality(const StabilityCertificate& cert,
                                        const DiffusionModel& model, std::size_t samples,
                                        double R0, std::uint64_t seed, double slack) {
  if (!(R0 > 0.0)) throw ConfigError("R0 must be positive");
  const std::size_t d = model.d;
  auto rng = make_stream(seed, 0, StreamRole::kSampling);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  DriftCheckReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  Vec x(d);
  for (std::size_t k = 0; k < samples; ++k) {
    for (double& c : x) c = normal(rng);
    const double n = sphere_norm(x);
    const double radius = R0 * std::pow(10.0, 2.0 * unif(rng));  // [R0, 100 R0]
    for (double& c : x) c *= radius / n;
    const double bound = drift_bound(cert, x);
    bool violated = false;
    auto test = [&](const SimplexControl& u) {
      const double margin = bound - lyapunov_generator(cert, model, x, u);
      rep.worst_margin = std::min(rep.worst_margin, margin);
      ++rep.evaluations;
      if (margin < -slack) violated = true;
    };
    for (std::size_t i = 0; i < d; ++i) test(SimplexControl::vertex(d, i));
    Vec w(d);
    double total = 0.0;
    for (double& c : w) total += (c = expo(rng));
    for (double& c : w) c /= total;
    w.back() = 1.0;
    for (std::size_t i = 0; i + 1 < d; ++i) w.back() -= w[i];
    w.back() = std::max(w.back(), 0.0);
    test(SimplexControl(w));
    ++rep.points;
    if (violated) ++rep.violations;
  }
  return rep;
}

}  // namespace ergodic_hw
