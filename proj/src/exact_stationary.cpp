#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "ergodic_hw/queue_sim.hpp"

namespace ergodic_hw {

namespace {

struct Edge {
  std::size_t to;
  double rate;
};

// Number of points of {x in Z_+^d : e.x <= cap}, saturating above the guard.
std::size_t lattice_size(std::size_t d, std::size_t cap) {
  double c = 1.0;
  for (std::size_t k = 1; k <= d; ++k)
    c = c * static_cast<double>(cap + k) / static_cast<double>(k);
  return c > 1e15 ? static_cast<std::size_t>(1e15) : static_cast<std::size_t>(std::llround(c));
}

}  // namespace

double exact_stationary_expectation(const QueueSystem& system,
                                    const SchedulingPolicy& policy,
                                    const StateObservable& observable,
                                    std::size_t cap, double tol) {
  const std::size_t d = system.d();
  if (lattice_size(d, cap) > kMaxExactStates)
    throw ConfigError("state space for cap " + std::to_string(cap) + " exceeds " +
                      std::to_string(kMaxExactStates) + " states");

  // Enumerate states in lexicographic order.
  std::vector<CountVec> states;
  std::unordered_map<std::uint64_t, std::size_t> index;
  const std::uint64_t base = cap + 1;
  auto key = [&](const CountVec& x) {
    std::uint64_t k = 0;
    for (Count v : x) k = k * base + static_cast<std::uint64_t>(v);
    return k;
  };
  CountVec x(d, 0);
  for (;;) {
    index.emplace(key(x), states.size());
    states.push_back(x);
    std::size_t i = d;
    while (i-- > 0) {
      ++x[i];
      Count sum = 0;
      for (Count v : x) sum += v;
      if (sum <= static_cast<Count>(cap)) break;
      x[i] = 0;
    }
    if (i == static_cast<std::size_t>(-1)) break;
  }

  const std::size_t ns = states.size();
  std::vector<std::vector<Edge>> edges(ns);
  std::vector<double> out_rate(ns, 0.0), value(ns);
  CountVec z(d), q(d), y(d);
  double uniform_rate = 0.0;
  for (std::size_t s = 0; s < ns; ++s) {
    const auto& xs = states[s];
    policy.allocate(xs, system, z);
    Count total = 0;
    for (std::size_t i = 0; i < d; ++i) {
      q[i] = xs[i] - z[i];
      total += xs[i];
    }
    value[s] = observable(xs, q);
    auto push = [&](std::size_t i, Count delta, double rate) {
      if (rate <= 0.0) return;
      y = xs;
      y[i] += delta;
      edges[s].push_back({index.at(key(y)), rate});
      out_rate[s] += rate;
    };
    for (std::size_t i = 0; i < d; ++i) {
      if (total < static_cast<Count>(cap)) push(i, +1, system.lambda_n[i]);
      push(i, -1, system.mu_n[i] * static_cast<double>(z[i]) +
                      system.gamma_n[i] * static_cast<double>(q[i]));
    }
    uniform_rate = std::max(uniform_rate, out_rate[s]);
  }

  std::vector<double> pi(ns, 1.0 / static_cast<double>(ns)), next(ns);
  const std::size_t max_iters = 50'000'000 / std::max<std::size_t>(1, ns / 100 + 1) + 100'000;
  double residual = 1.0;
  for (std::size_t it = 0; it < max_iters; ++it) {
    for (std::size_t s = 0; s < ns; ++s) next[s] = pi[s] * (1.0 - out_rate[s] / uniform_rate);
    for (std::size_t s = 0; s < ns; ++s)
      for (const auto& e : edges[s]) next[e.to] += pi[s] * e.rate / uniform_rate;
    residual = 0.0;
    double mass = 0.0;
    for (std::size_t s = 0; s < ns; ++s) {
      residual += std::abs(next[s] - pi[s]);
      mass += next[s];
    }
    for (std::size_t s = 0; s < ns; ++s) pi[s] = next[s] / mass;
    if (residual < tol) {
      double acc = 0.0;
      for (std::size_t s = 0; s < ns; ++s) acc += pi[s] * value[s];
      return acc;
    }
  }
  throw std::runtime_error("stationary distribution did not converge (residual " +
                           std::to_string(residual) + "); chain may be reducible");
}

}  // namespace ergodic_hw
