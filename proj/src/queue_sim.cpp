#include "ergodic_hw/queue_sim.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>

namespace ergodic_hw {

QueueSystem QueueSystem::from_limit(std::span<const ClassParams> classes,
                                    std::size_t n) {
  if (n == 0) throw ConfigError("server count must be positive");
  build_limit_model(classes);  // validates rates and offered load
  QueueSystem sys;
  sys.n = n;
  const double sn = std::sqrt(static_cast<double>(n));
  for (const auto& c : classes) {
    sys.lambda_n.push_back(static_cast<double>(n) * c.lambda + sn * c.lambda_hat);
    sys.mu_n.push_back(c.mu + c.mu_hat / sn);
    sys.gamma_n.push_back(c.gamma);
    sys.rho.push_back(c.lambda / c.mu);
    if (!(sys.lambda_n.back() > 0.0) || !(sys.mu_n.back() > 0.0))
      throw ConfigError("prelimit rates must be positive at n = " + std::to_string(n));
  }
  return sys;
}

CountVec varpi(std::span<const double> z) {
  if (z.empty()) throw std::invalid_argument("varpi: empty vector");
  double sum = 0.0;
  for (double v : z) {
    if (!(v >= 0.0)) throw std::invalid_argument("varpi: negative entry");
    sum += v;
  }
  const double total = std::round(sum);
  if (std::abs(sum - total) > 1e-9)
    throw std::invalid_argument("varpi: entries do not sum to an integer");
  CountVec out(z.size());
  Count floors = 0;
  for (std::size_t i = 0; i + 1 < z.size(); ++i) {
    out[i] = static_cast<Count>(std::floor(z[i]));
    floors += out[i];
  }
  out.back() = static_cast<Count>(total) - floors;
  return out;
}

void priority_fill(std::span<const Count> x, std::size_t n,
                   std::span<const std::size_t> order, std::span<Count> z) {
  auto free = static_cast<Count>(n);
  for (std::size_t i : order) {
    z[i] = std::min(x[i], std::max<Count>(free, 0));
    free -= x[i];
  }
}

SchedulingPolicy SchedulingPolicy::static_priority(std::vector<std::size_t> order) {
  auto sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    if (sorted[i] != i) throw ConfigError("priority order must be a permutation");
  std::string name = "priority(";
  for (std::size_t i = 0; i < order.size(); ++i)
    name += (i ? "-" : "") + std::to_string(order[i] + 1);
  return {StaticPriority{std::move(order)}, name + ")"};
}

SchedulingPolicy SchedulingPolicy::cmu_theta(const QueueSystem& system,
                                             const RunningCost& cost) {
  std::vector<std::size_t> order(system.d());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cost.h[a] * system.mu_n[a] / system.gamma_n[a] >
           cost.h[b] * system.mu_n[b] / system.gamma_n[b];
  });
  auto p = static_priority(order);
  p.name_ = "cmu-theta";
  return p;
}

SchedulingPolicy SchedulingPolicy::markov_rounded(
    std::shared_ptr<const ControlField> field, double K) {
  if (!field) throw ConfigError("markov-rounded policy needs a control field");
  if (!(K > 0.0)) throw ConfigError("region constant K must be positive");
  return {MarkovRounded{std::move(field), K}, "markov-rounded"};
}

SchedulingPolicy SchedulingPolicy::fixed_fraction(SimplexControl u) {
  return {FixedFraction{std::move(u)}, "fixed-fraction"};
}

namespace {

// Z = x - varpi(excess * v); nullopt-like false when an entry goes negative.
bool rounded_allocation(std::span<const Count> x, Count excess,
                        std::span<const double> v, std::span<Count> z) {
  std::vector<double> target(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    target[i] = static_cast<double>(excess) * v[i];
  const CountVec q = varpi(target);
  bool ok = true;
  for (std::size_t i = 0; i < x.size(); ++i) {
    z[i] = x[i] - q[i];
    if (z[i] < 0 || q[i] < 0) ok = false;
  }
  return ok;
}

void last_class_last(std::span<const Count> x, std::size_t n, std::span<Count> z) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  priority_fill(x, n, order, z);
}

}  // namespace

bool SchedulingPolicy::allocate(std::span<const Count> x, const QueueSystem& system,
                                std::span<Count> z) const {
  const Count total = std::accumulate(x.begin(), x.end(), Count{0});
  const auto n = static_cast<Count>(system.n);
  if (total <= n) {
    std::copy(x.begin(), x.end(), z.begin());
    return false;
  }
  const Count excess = total - n;
  return std::visit(
      [&](const auto& p) -> bool {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, StaticPriority>) {
          priority_fill(x, system.n, p.order, z);
          return false;
        } else if constexpr (std::is_same_v<T, FixedFraction>) {
          if (rounded_allocation(x, excess, p.u.values(), z)) return false;
          last_class_last(x, system.n, z);
          return true;
        } else {
          const double sn = std::sqrt(static_cast<double>(system.n));
          const double radius = p.K * sn;
          std::vector<double> xhat(x.size());
          bool inside = true;
          for (std::size_t i = 0; i < x.size(); ++i) {
            const double centered =
                static_cast<double>(x[i]) - system.rho[i] * static_cast<double>(system.n);
            if (std::abs(centered) > radius) inside = false;
            xhat[i] = centered / sn;
          }
          if (!inside) {
            last_class_last(x, system.n, z);
            return false;
          }
          if (rounded_allocation(x, excess, p.field->at(xhat), z)) return false;
          last_class_last(x, system.n, z);
          return true;
        }
      },
      v_);
}

namespace {

bool allocation_valid(std::span<const Count> x, std::span<const Count> z,
                      std::size_t n) {
  Count sx = 0, sz = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (z[i] < 0 || z[i] > x[i]) return false;
    sx += x[i];
    sz += z[i];
  }
  return sz == std::min(sx, static_cast<Count>(n));
}

struct ReplicaResult {
  std::vector<double> batches;
  std::uint64_t fallbacks = 0;
  std::uint64_t events = 0;
  std::uint64_t violations = 0;
};

ReplicaResult run_replica(const QueueSystem& sys, const SchedulingPolicy& policy,
                          const StateObservable& obs, const QueueSimConfig& cfg,
                          std::uint64_t replica) {
  const std::size_t d = sys.d();
  auto clock = make_stream(cfg.seed, replica, StreamRole::kClock);
  auto chooser = make_stream(cfg.seed, replica, StreamRole::kEvent);
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  CountVec x(d), z(d), q(d);
  if (cfg.x0.empty()) {
    for (std::size_t i = 0; i < d; ++i)
      x[i] = static_cast<Count>(std::llround(sys.rho[i] * static_cast<double>(sys.n)));
  } else {
    if (cfg.x0.size() != d) throw ConfigError("initial state has wrong dimension");
    x = cfg.x0;
  }
  ReplicaResult res;
  auto reallocate = [&] {
    if (policy.allocate(x, sys, z)) ++res.fallbacks;
    for (std::size_t i = 0; i < d; ++i) q[i] = x[i] - z[i];
    if (!allocation_valid(x, z, sys.n)) {
      ++res.violations;
      assert(false && "allocation left the action set");
    }
  };
  reallocate();

  const double arrival_total = std::accumulate(sys.lambda_n.begin(), sys.lambda_n.end(), 0.0);
  BatchAccumulator acc(cfg.burn_in, cfg.horizon);
  double t = 0.0;
  while (t < cfg.horizon) {
    double service_total = 0.0, abandon_total = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      service_total += sys.mu_n[i] * static_cast<double>(z[i]);
      abandon_total += sys.gamma_n[i] * static_cast<double>(q[i]);
    }
    const double total = arrival_total + service_total + abandon_total;
    const double hold = expo(clock) / total;
    const double t_next = std::min(t + hold, cfg.horizon);
    if (t_next > cfg.burn_in) acc.add(t, t_next, obs(x, q));
    t += hold;
    if (t >= cfg.horizon) break;

    double pick = unif(chooser) * total;
    std::size_t cls = d - 1;
    int kind = 2;
    bool found = false;
    for (std::size_t i = 0; i < d && !found; ++i) {
      if (pick < sys.lambda_n[i]) { cls = i; kind = 0; found = true; break; }
      pick -= sys.lambda_n[i];
    }
    for (std::size_t i = 0; i < d && !found; ++i) {
      const double r = sys.mu_n[i] * static_cast<double>(z[i]);
      if (pick < r) { cls = i; kind = 1; found = true; break; }
      pick -= r;
    }
    for (std::size_t i = 0; i < d && !found; ++i) {
      const double r = sys.gamma_n[i] * static_cast<double>(q[i]);
      if (pick < r) { cls = i; kind = 2; found = true; break; }
      pick -= r;
    }
    if (!found) {
      // Rounding at the top of the cumulative sum; take the last nonzero rate.
      for (std::size_t i = d; i-- > 0;) {
        if (q[i] > 0) { cls = i; kind = 2; found = true; break; }
        if (z[i] > 0) { cls = i; kind = 1; found = true; break; }
      }
      if (!found) { cls = d - 1; kind = 0; }
    }
    if (kind == 0) {
      ++x[cls];
    } else {
      --x[cls];
    }
    ++res.events;
    const Count pop = std::accumulate(x.begin(), x.end(), Count{0});
    if (pop > cfg.max_population)
      throw std::overflow_error("queue population exceeded " +
                                std::to_string(cfg.max_population));
    reallocate();
  }
  res.batches = acc.batch_means();
  return res;
}

}  // namespace

QueueRun simulate_queue(const QueueSystem& system, const SchedulingPolicy& policy,
                        const StateObservable& observable, const QueueSimConfig& cfg) {
  if (!(cfg.burn_in > 0.0) || !(cfg.horizon > cfg.burn_in))
    throw ConfigError("need horizon > burn_in > 0");
  if (cfg.replicas <= 0) throw ConfigError("replica count must be positive");
  std::vector<ReplicaResult> results(static_cast<std::size_t>(cfg.replicas));
  std::vector<std::string> errors(results.size());
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < cfg.replicas; ++r) {
    const auto k = static_cast<std::size_t>(r);
    try {
      results[k] = run_replica(system, policy, observable, cfg, k);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("queue simulation aborted: " + e);

  QueueRun run;
  std::vector<std::vector<double>> batches;
  for (auto& r : results) {
    batches.push_back(std::move(r.batches));
    run.fallback_count += r.fallbacks;
    run.events += r.events;
    run.invariant_violations += r.violations;
  }
  run.estimate = pool_batches(batches, cfg.horizon, cfg.burn_in);
  return run;
}

namespace {

StateObservable cost_observable(const RunningCost& cost, std::size_t n) {
  const double inv = 1.0 / std::sqrt(static_cast<double>(n));
  return [cost, inv](std::span<const Count>, std::span<const Count> q) {
    double acc = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
      if (q[i] > 0) acc += cost.h[i] * std::pow(static_cast<double>(q[i]) * inv, cost.m);
    return acc;
  };
}

}  // namespace

QueueRun simulate_ergodic_cost(const QueueSystem& system, const SchedulingPolicy& policy,
                               const RunningCost& cost, const QueueSimConfig& cfg) {
  if (cost.h.size() != system.d()) throw ConfigError("cost dimension mismatch");
  return simulate_queue(system, policy, cost_observable(cost, system.n), cfg);
}

double exact_stationary_cost(const QueueSystem& system, const SchedulingPolicy& policy,
                             const RunningCost& cost, std::size_t cap) {
  return exact_stationary_expectation(system, policy, cost_observable(cost, system.n), cap);
}

}  // namespace ergodic_hw
