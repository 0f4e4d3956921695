#include "ergodic_hw/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ergodic_hw {

SimplexControl::SimplexControl(Vec u) : u_(std::move(u)) {
  if (u_.empty()) throw ConfigError("simplex control must be non-empty");
  double sum = 0.0;
  for (double v : u_) {
    if (!(v >= 0.0)) throw ConfigError("simplex control has a negative entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw ConfigError("simplex control does not sum to one");
}

SimplexControl SimplexControl::vertex(std::size_t d, std::size_t i) {
  Vec u(d, 0.0);
  u.at(i) = 1.0;
  return SimplexControl(std::move(u));
}

RunningCost::RunningCost(double m_, Vec h_) : m(m_), h(std::move(h_)) {
  if (!(m >= 1.0)) throw ConfigError("cost exponent m must be >= 1");
  if (h.empty()) throw ConfigError("cost weights are empty");
  for (double w : h)
    if (!(w >= 0.0)) throw ConfigError("cost weights must be nonnegative");
  const double d = static_cast<double>(h.size());
  c1 = *std::min_element(h.begin(), h.end()) * std::pow(d, 1.0 - m);
  c2 = *std::max_element(h.begin(), h.end()) * d;
}

double RunningCost::operator()(std::span<const double> q) const {
  double acc = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q[i] > 0.0) acc += h[i] * (m == 1.0 ? q[i] : std::pow(q[i], m));
  return acc;
}

bool RunningCost::is_zero() const {
  return std::all_of(h.begin(), h.end(), [](double w) { return w == 0.0; });
}

DiffusionModel build_limit_model(std::span<const ClassParams> classes) {
  if (classes.empty()) throw ConfigError("at least one class is required");
  DiffusionModel model;
  model.d = classes.size();
  double load = 0.0;
  for (const auto& c : classes) {
    if (!(c.lambda > 0.0) || !(c.mu > 0.0) || !(c.gamma > 0.0))
      throw ConfigError("all rates must be strictly positive");
    load += c.lambda / c.mu;
  }
  if (std::abs(load - 1.0) > kOfferedLoadTol)
    throw ConfigError("offered load sum rho_i = " + std::to_string(load) +
                      " differs from 1");
  for (const auto& c : classes) {
    const double rho = c.lambda / c.mu;
    model.ell.push_back((c.lambda_hat - rho * c.mu_hat) / c.mu);
    model.mu.push_back(c.mu);
    model.gamma.push_back(c.gamma);
    model.sigma.push_back(std::sqrt(2.0 * c.lambda));
    model.lambda.push_back(c.lambda);
    model.rho.push_back(rho);
    model.rho_hat += (rho * c.mu_hat - c.lambda_hat) / c.mu;
  }
  return model;
}

double queue_mass(std::span<const double> x) {
  return std::max(0.0, std::accumulate(x.begin(), x.end(), 0.0));
}

Vec drift(const DiffusionModel& model, std::span<const double> x,
          const SimplexControl& u) {
  const double s = queue_mass(x);
  Vec b(model.d);
  for (std::size_t i = 0; i < model.d; ++i)
    b[i] = model.ell[i] - model.mu[i] * (x[i] - s * u[i]) -
           s * model.gamma[i] * u[i];
  return b;
}

double running_cost(const RunningCost& cost, std::span<const double> x,
                    const SimplexControl& u) {
  const double s = queue_mass(x);
  if (s == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    acc += cost.h[i] * std::pow(u[i], cost.m);
  return std::pow(s, cost.m) * acc;
}

double h_tilde(const RunningCost& cost, std::span<const double> x) {
  const double d = static_cast<double>(x.size());
  double norm2 = 0.0;
  for (double v : x) norm2 += v * v;
  return cost.c2 + cost.c2 * std::pow(d, cost.m - 1.0) *
                       std::pow(std::sqrt(norm2), cost.m);
}

double k0_constant(const RunningCost& cost, std::size_t d, double c0,
                   double delta) {
  const double denom =
      std::min({1.0, c0, cost.c1 * std::pow(delta, cost.m)});
  return 2.0 * cost.c2 * std::pow(static_cast<double>(d), cost.m - 1.0) /
         denom;
}

}  // namespace ergodic_hw
