#include "ergodic_hw/hjb_solver.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <string>

#include "ergodic_hw/simplex.hpp"

namespace ergodic_hw {

namespace {

// One coordinate of b.D + r~: b_i = c + k u, weighted by dplus when b_i >= 0
// and by dminus otherwise; the cost adds lin * u (m = 1) or w u^m.
SeparableTerm upwind_term(double c, double k, double dplus, double dminus,
                          double lin, double w) {
  SeparableTerm t;
  t.w = w;
  if (k == 0.0) {
    t.kink = 1.0;
    t.slope_lo = t.slope_hi = lin;
    return t;
  }
  t.kink = -c / k;
  if (k > 0.0) {
    t.slope_lo = k * dminus + lin;
    t.slope_hi = k * dplus + lin;
  } else {
    t.slope_lo = k * dplus + lin;
    t.slope_hi = k * dminus + lin;
  }
  return t;
}

double upwind_value(double b, double dplus, double dminus) {
  return b >= 0.0 ? b * dplus : b * dminus;
}

// Minimizes the upwind Hamiltonian; the argmin goes to u (size d).
double minimize_upwind(const DiffusionModel& model, const RunningCost& cost,
                       std::span<const double> x, std::span<const double> dplus,
                       std::span<const double> dminus, std::span<double> u) {
  const std::size_t d = model.d;
  const double s = queue_mass(x);
  if (d == 1) {
    u[0] = 1.0;
    const double b = model.ell[0] - model.mu[0] * (x[0] - s) - s * model.gamma[0];
    return upwind_value(b, dplus[0], dminus[0]) +
           (s > 0.0 ? cost.h[0] * std::pow(s, cost.m) : 0.0);
  }
  SeparableTerm terms[8];
  std::vector<SeparableTerm> heap;
  std::span<SeparableTerm> t;
  if (d <= 8) {
    t = std::span<SeparableTerm>(terms, d);
  } else {
    heap.resize(d);
    t = heap;
  }
  const bool linear_cost = cost.m == 1.0;
  const double sm = s > 0.0 ? (linear_cost ? s : std::pow(s, cost.m)) : 0.0;
  double base = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double c = model.ell[i] - model.mu[i] * x[i];
    const double k = s * (model.mu[i] - model.gamma[i]);
    base += upwind_value(c, dplus[i], dminus[i]);
    const double lin = linear_cost ? sm * cost.h[i] : 0.0;
    const double w = linear_cost ? 0.0 : sm * cost.h[i];
    t[i] = upwind_term(c, k, dplus[i], dminus[i], lin, w);
  }
  auto best = minimize_on_simplex(t, cost.m);
  std::copy(best.u.begin(), best.u.end(), u.begin());
  return base + best.value;
}

double fixed_upwind(const DiffusionModel& model, const RunningCost& cost,
                    std::span<const double> x, std::span<const double> dplus,
                    std::span<const double> dminus, std::span<const double> u) {
  const double s = queue_mass(x);
  double acc = 0.0;
  double r = 0.0;
  for (std::size_t i = 0; i < model.d; ++i) {
    const double b = model.ell[i] - model.mu[i] * (x[i] - s * u[i]) -
                     s * model.gamma[i] * u[i];
    acc += upwind_value(b, dplus[i], dminus[i]);
    if (s > 0.0 && u[i] > 0.0) r += cost.h[i] * std::pow(s * u[i], cost.m);
  }
  return acc + r;
}

}  // namespace

HamiltonianMin minimize_hamiltonian(const DiffusionModel& model,
                                    const RunningCost& cost,
                                    std::span<const double> x,
                                    std::span<const double> p) {
  const std::size_t d = model.d;
  const double s = queue_mass(x);
  double base = 0.0;
  for (std::size_t i = 0; i < d; ++i) base += (model.ell[i] - model.mu[i] * x[i]) * p[i];
  if (s == 0.0) return {SimplexControl::vertex(d, d - 1), base};

  if (cost.m == 1.0) {
    std::size_t best = d - 1;
    double best_coef = std::numeric_limits<double>::infinity();
    for (std::size_t i = d; i-- > 0;) {
      const double coef = (model.mu[i] - model.gamma[i]) * p[i] + cost.h[i];
      if (coef < best_coef) {
        best_coef = coef;
        best = i;
      }
    }
    return {SimplexControl::vertex(d, best), base + s * best_coef};
  }
  std::vector<double> u(d);
  const double v = minimize_upwind(model, cost, x, p, p, u);
  return {SimplexControl(std::move(u)), v};
}

HamiltonianMin minimize_upwind_hamiltonian(const DiffusionModel& model,
                                           const RunningCost& cost,
                                           std::span<const double> x,
                                           std::span<const double> dplus,
                                           std::span<const double> dminus) {
  std::vector<double> u(model.d);
  const double v = minimize_upwind(model, cost, x, dplus, dminus, u);
  return {SimplexControl(std::move(u)), v};
}

TruncationConfig TruncationConfig::untruncated(const Grid& grid) {
  double l = grid.half_width(0);
  for (std::size_t a = 1; a < grid.dim(); ++a) l = std::min(l, grid.half_width(a));
  return {l, SimplexControl::vertex(grid.dim(), grid.dim() - 1)};
}

ChainApproximation::ChainApproximation(const DiffusionModel& model,
                                       const RunningCost& cost,
                                       const Grid& grid,
                                       const TruncationConfig& trunc,
                                       double epsilon)
    : model_(model), cost_(cost), grid_(grid), u0_(trunc.u0), epsilon_(epsilon),
      d_(grid.dim()) {
  const std::size_t d = d_;
  if (model.d != d || cost.h.size() != d)
    throw ConfigError("grid, model and cost dimensions differ");
  if (d > 16) throw ConfigError("grid dimension above 16 is not supported");
  if (u0_.size() != d) throw ConfigError("u0 has wrong dimension");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be nonnegative");
  double min_half = grid.half_width(0);
  for (std::size_t a = 1; a < d; ++a) min_half = std::min(min_half, grid.half_width(a));
  if (!(trunc.l > 0.0) || trunc.l > min_half + 1e-12)
    throw ConfigError("truncation radius must lie in (0, L]");

  diff_rate_.resize(d);
  inv_h_.resize(d);
  for (std::size_t a = 0; a < d; ++a) {
    diff_rate_[a] = 0.5 * model.variance(a) / (grid.spacing(a) * grid.spacing(a));
    inv_h_[a] = 1.0 / grid.spacing(a);
  }

  const std::size_t n = grid.size();
  coords_.resize(n * d);
  mask_.resize(n);
  frozen_.resize(n);
  fixed_b_.assign(n * d, 0.0);
  extra_.assign(n, 0.0);
  const auto one = SimplexControl::vertex(1, 0);
  double max_rate = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    std::span<double> x(coords_.data() + p * d, d);
    grid.point(p, x);
    double norm2 = 0.0;
    std::uint32_t mask = 0;
    for (std::size_t i = 0; i < d; ++i) {
      norm2 += x[i] * x[i];
      const std::size_t k = grid.axis_index(p, i);
      if (k + 1 < grid.count(i)) mask |= 1u << (2 * i);
      if (k > 0) mask |= 1u << (2 * i + 1);
    }
    mask_[p] = mask;
    frozen_[p] = std::sqrt(norm2) > trunc.l ? 1 : 0;
    if (epsilon > 0.0) extra_[p] = epsilon * h_tilde(cost, x);
    if (frozen_[p] || d == 1) {
      const SimplexControl& u = d == 1 ? one : u0_;
      const Vec b = drift(model, x, u);
      std::copy(b.begin(), b.end(), fixed_b_.begin() + static_cast<std::ptrdiff_t>(p * d));
      extra_[p] += running_cost(cost, x, u);
    }
    const double s = queue_mass(x);
    double rate = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double c = model.ell[i] - model.mu[i] * x[i];
      const double k = s * (model.mu[i] - model.gamma[i]);
      rate += 2.0 * diff_rate_[i] + std::max(std::abs(c), std::abs(c + k)) * inv_h_[i];
    }
    max_rate = std::max(max_rate, rate);
  }
  dt_ = 1.0 / max_rate;
}

std::vector<Transition> ChainApproximation::transition_rates(
    std::size_t p, std::span<const double> u) const {
  const std::size_t d = d_;
  std::span<const double> x(coords_.data() + p * d, d);
  const double s = queue_mass(x);
  std::vector<Transition> out;
  for (std::size_t i = 0; i < d; ++i) {
    const double b = model_.ell[i] - model_.mu[i] * (x[i] - s * u[i]) -
                     s * model_.gamma[i] * u[i];
    if (mask_[p] & (1u << (2 * i)))
      out.push_back({p + grid_.stride(i), diff_rate_[i] + std::max(b, 0.0) * inv_h_[i]});
    if (mask_[p] & (1u << (2 * i + 1)))
      out.push_back({p - grid_.stride(i), diff_rate_[i] + std::max(-b, 0.0) * inv_h_[i]});
  }
  for (const auto& t : out) {
    assert(t.rate >= 0.0);
    (void)t;
  }
  return out;
}

// Generator-plus-cost at p. u_out == nullptr evaluates the fixed control
// stored for frozen points (or u = 1 when d = 1).
double ChainApproximation::kernel(std::size_t p, std::span<const double> V,
                                  double* u_out) const {
  const std::size_t d = d_;
  const double vp = V[p];
  const std::uint32_t mask = mask_[p];
  double dplus[16], dminus[16];
  double diffusion = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const std::size_t st = grid_.stride(i);
    const double up = (mask & (1u << (2 * i))) ? V[p + st] - vp : 0.0;
    const double down = (mask & (1u << (2 * i + 1))) ? V[p - st] - vp : 0.0;
    diffusion += diff_rate_[i] * (up + down);
    dplus[i] = up * inv_h_[i];
    dminus[i] = -down * inv_h_[i];
  }
  if (frozen_[p] || d == 1) {
    double acc = diffusion + extra_[p];
    const double* b = fixed_b_.data() + p * d;
    for (std::size_t i = 0; i < d; ++i) acc += upwind_value(b[i], dplus[i], dminus[i]);
    if (u_out) {
      if (d == 1)
        u_out[0] = 1.0;
      else
        std::copy(u0_.values().begin(), u0_.values().end(), u_out);
    }
    return acc;
  }
  std::span<const double> x(coords_.data() + p * d, d);
  const double s = queue_mass(x);
  double utmp[16];
  double* u = u_out ? u_out : utmp;
  double h;
  if ((cost_.m == 1.0 || s == 0.0) && d <= kSmallSimplexDim) {
    SeparableTerm terms[kSmallSimplexDim];
    double base = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double c = model_.ell[i] - model_.mu[i] * x[i];
      const double k = s * (model_.mu[i] - model_.gamma[i]);
      base += upwind_value(c, dplus[i], dminus[i]);
      terms[i] = upwind_term(c, k, dplus[i], dminus[i], s * cost_.h[i], 0.0);
    }
    h = base + minimize_piecewise_linear({terms, d}, {u, d});
  } else {
    h = minimize_upwind(model_, cost_, x, {dplus, d}, {dminus, d}, {u, d});
  }
  return diffusion + h + extra_[p];
}

double ChainApproximation::bellman_point(std::size_t p, std::span<const double> V,
                                         std::span<double> u_out) const {
  return kernel(p, V, u_out.data());
}

double ChainApproximation::evaluate_point(std::size_t p, std::span<const double> V,
                                          std::span<const double> u) const {
  const std::size_t d = d_;
  std::span<const double> x(coords_.data() + p * d, d);
  double dplus[16], dminus[16];
  double diffusion = 0.0;
  const std::uint32_t mask = mask_[p];
  for (std::size_t i = 0; i < d; ++i) {
    const std::size_t st = grid_.stride(i);
    const double up = (mask & (1u << (2 * i))) ? V[p + st] - V[p] : 0.0;
    const double down = (mask & (1u << (2 * i + 1))) ? V[p - st] - V[p] : 0.0;
    diffusion += diff_rate_[i] * (up + down);
    dplus[i] = up * inv_h_[i];
    dminus[i] = -down * inv_h_[i];
  }
  const double eps_part = epsilon_ > 0.0 ? epsilon_ * h_tilde(cost_, x) : 0.0;
  return diffusion + fixed_upwind(model_, cost_, x, {dplus, d}, {dminus, d}, u) + eps_part;
}

void ChainApproximation::sweep_parallel(std::span<const double> V,
                                        std::span<double> out,
                                        std::span<double> controls) const {
  const std::size_t d = grid_.dim();
  const auto n = static_cast<std::ptrdiff_t>(grid_.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    const auto q = static_cast<std::size_t>(p);
    out[q] = bellman_point(q, V, controls.subspan(q * d, d));
  }
}

void ChainApproximation::sweep_serial(std::span<const double> V,
                                      std::span<double> out,
                                      std::span<double> controls) const {
  const std::size_t d = grid_.dim();
  for (std::size_t p = 0; p < grid_.size(); ++p)
    out[p] = bellman_point(p, V, controls.subspan(p * d, d));
}

namespace {

void sweep(const ChainApproximation& chain, bool parallel,
           std::span<const double> V, std::span<double> out,
           std::span<double> controls) {
  if (parallel)
    chain.sweep_parallel(V, out, controls);
  else
    chain.sweep_serial(V, out, controls);
}

std::vector<double> initial_iterate(const Grid& grid, const SolverOptions& opts) {
  if (opts.warm_start) {
    if (opts.warm_start->size() != grid.size())
      throw ConfigError("warm start does not match the grid");
    return *opts.warm_start;
  }
  return std::vector<double>(grid.size(), 0.0);
}

}  // namespace

ErgodicSolution solve_ergodic(const DiffusionModel& model,
                              const RunningCost& cost, const Grid& grid,
                              const TruncationConfig& trunc,
                              const SolverOptions& opts) {
  const ChainApproximation chain(model, cost, grid, trunc, opts.epsilon);
  const double dt = chain.dt();
  const std::size_t n = grid.size();
  const std::size_t origin = grid.origin();

  std::vector<double> V = initial_iterate(grid, opts);
  const double anchor = V[origin];
  for (double& v : V) v -= anchor;
  std::vector<double> G(n);
  ControlField control(grid, trunc.u0);
  std::span<double> controls = control.data();
  std::vector<double> history;

  for (std::size_t it = 1; it <= opts.max_iters; ++it) {
    sweep(chain, opts.parallel, V, G, controls);
    const auto [lo, hi] = std::minmax_element(G.begin(), G.end());
    const double span = *hi - *lo;
    if (!std::isfinite(span))
      throw SolverError("relative value iteration diverged", history);
    if (span < opts.tol) {
      ErgodicSolution sol{ValueField{std::move(V)}, 0.5 * (*lo + *hi),
                          std::move(control), it, span, dt};
      return sol;
    }
    const double g0 = G[origin];
    for (std::size_t p = 0; p < n; ++p) V[p] += dt * (G[p] - g0);
    if (it % 1000 == 0) history.push_back(span);
  }
  throw SolverError("relative value iteration did not converge in " +
                        std::to_string(opts.max_iters) + " sweeps",
                    history);
}

ValueField solve_discounted(const DiffusionModel& model, const RunningCost& cost,
                            const Grid& grid, double alpha,
                            const SolverOptions& opts) {
  if (!(alpha > 0.0)) throw ConfigError("discount rate must be positive");
  const ChainApproximation chain(model, cost, grid,
                                 TruncationConfig::untruncated(grid), opts.epsilon);
  const double dt = chain.dt();
  const std::size_t n = grid.size();
  std::vector<double> V = initial_iterate(grid, opts);
  std::vector<double> G(n), next(n), controls(n * grid.dim());
  std::vector<double> history;
  const double shrink = 1.0 / (1.0 + alpha * dt);
  for (std::size_t it = 1; it <= opts.max_iters; ++it) {
    sweep(chain, opts.parallel, V, G, controls);
    double diff = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      next[p] = (V[p] + dt * G[p]) * shrink;
      diff = std::max(diff, std::abs(next[p] - V[p]));
    }
    V.swap(next);
    if (!std::isfinite(diff))
      throw SolverError("discounted value iteration diverged", history);
    if (diff / (alpha * dt) < opts.tol) return ValueField{std::move(V)};
    if (it % 1000 == 0) history.push_back(diff);
  }
  throw SolverError("discounted value iteration did not converge", history);
}

double policy_residual(const DiffusionModel& model, const RunningCost& cost,
                       const Grid& grid, const TruncationConfig& trunc,
                       const ErgodicSolution& sol, double epsilon) {
  const ChainApproximation chain(model, cost, grid, trunc, epsilon);
  double worst = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double g = chain.evaluate_point(p, sol.V.values, sol.control.at_index(p));
    worst = std::max(worst, std::abs(g - sol.rho));
  }
  return worst;
}

TruncationSweep truncation_sweep(const DiffusionModel& model,
                                 const RunningCost& cost, const Grid& grid,
                                 std::span<const double> l_values,
                                 const SolverOptions& opts, double tol_mono) {
  TruncationSweep out;
  SolverOptions local = opts;
  double prev_l = -std::numeric_limits<double>::infinity();
  const auto u0 = TruncationConfig::untruncated(grid).u0;
  for (double l : l_values) {
    if (!(l > prev_l)) throw ConfigError("truncation radii must be increasing");
    prev_l = l;
    auto sol = solve_ergodic(model, cost, grid, {l, u0}, local);
    if (!out.rows.empty() && out.rows.back().second < sol.rho - tol_mono)
      out.monotone = false;
    out.rows.emplace_back(l, sol.rho);
    local.warm_start = std::move(sol.V.values);
  }
  return out;
}

EpsilonReport epsilon_bound_check(const DiffusionModel& model,
                                  const RunningCost& cost, const Grid& grid,
                                  const TruncationConfig& trunc,
                                  std::span<const double> eps_values, double k0,
                                  const SolverOptions& opts, double tol) {
  EpsilonReport rep;
  rep.k0 = k0;
  SolverOptions local = opts;
  local.epsilon = 0.0;
  auto base = solve_ergodic(model, cost, grid, trunc, local);
  rep.rho_star = base.rho;
  local.warm_start = base.V.values;
  for (double eps : eps_values) {
    if (!(eps > 0.0)) throw ConfigError("epsilon values must be positive");
    local.epsilon = eps;
    auto sol = solve_ergodic(model, cost, grid, trunc, local);
    EpsilonRow row{eps, sol.rho, rep.rho_star + eps * k0 * (1.0 + rep.rho_star), true};
    row.ok = sol.rho >= rep.rho_star - tol && sol.rho <= row.upper_bound + tol;
    rep.ok = rep.ok && row.ok;
    rep.rows.push_back(row);
  }
  // rho_eps must be nondecreasing in eps.
  for (std::size_t i = 0; i < rep.rows.size(); ++i)
    for (std::size_t j = 0; j < rep.rows.size(); ++j)
      if (rep.rows[i].epsilon < rep.rows[j].epsilon &&
          rep.rows[i].rho_eps > rep.rows[j].rho_eps + tol)
        rep.monotone = false;
  rep.ok = rep.ok && rep.monotone;
  return rep;
}

}  // namespace ergodic_hw
