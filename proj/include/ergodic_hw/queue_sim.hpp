#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ergodic_hw/grid.hpp"
#include "ergodic_hw/model.hpp"
#include "ergodic_hw/stats.hpp"

namespace ergodic_hw {

using Count = std::int64_t;
using CountVec = std::vector<Count>;

/// The n-th prelimit system.
struct QueueSystem {
  std::size_t n = 0;
  Vec lambda_n, mu_n, gamma_n;
  Vec rho;

  std::size_t d() const { return rho.size(); }

  /// lambda_n = n lambda + sqrt(n) lambda_hat, mu_n = mu + mu_hat / sqrt(n), gamma_n = gamma.
  static QueueSystem from_limit(std::span<const ClassParams> classes, std::size_t n);
};

/// Rounds z (nonnegative, integer sum) to integers: floor everywhere, the
/// fractional mass goes to the last class.
CountVec varpi(std::span<const double> z);

struct StaticPriority {
  std::vector<std::size_t> order;  // 0-based, highest priority first
};

struct MarkovRounded {
  std::shared_ptr<const ControlField> field;
  double K = 10.0;
};

struct FixedFraction {
  SimplexControl u;
};

/// Work-conserving preemptive policy; allocate always returns Z in A^n(x).
class SchedulingPolicy {
 public:
  using Variant = std::variant<StaticPriority, MarkovRounded, FixedFraction>;

  static SchedulingPolicy static_priority(std::vector<std::size_t> order);
  /// Static priority by decreasing h_i mu_i / gamma_i.
  static SchedulingPolicy cmu_theta(const QueueSystem& system, const RunningCost& cost);
  static SchedulingPolicy markov_rounded(std::shared_ptr<const ControlField> field,
                                         double K = 10.0);
  static SchedulingPolicy fixed_fraction(SimplexControl u);

  /// Writes Z into z; returns true when the rounding branch produced a
  /// negative entry and static priority was used instead.
  bool allocate(std::span<const Count> x, const QueueSystem& system,
                std::span<Count> z) const;

  const std::string& name() const { return name_; }
  const Variant& variant() const { return v_; }

 private:
  SchedulingPolicy(Variant v, std::string name) : v_(std::move(v)), name_(std::move(name)) {}
  Variant v_;
  std::string name_;
};

/// Static priority fill: Z_i = X_i ^ (n - sum of higher-priority X_j)^+.
void priority_fill(std::span<const Count> x, std::size_t n,
                   std::span<const std::size_t> order, std::span<Count> z);

/// f(X, Q) evaluated between events.
using StateObservable = std::function<double(std::span<const Count>, std::span<const Count>)>;

struct QueueSimConfig {
  double horizon = 1000.0;
  double burn_in = 100.0;
  int replicas = 4;
  std::uint64_t seed = 1;
  /// Initial head counts; empty means round(rho n).
  CountVec x0;
  /// Abort when e.X exceeds this.
  Count max_population = Count{1} << 40;
};

struct QueueRun {
  CostEstimate estimate;
  std::uint64_t fallback_count = 0;
  std::uint64_t events = 0;
  std::uint64_t invariant_violations = 0;
};

QueueRun simulate_queue(const QueueSystem& system, const SchedulingPolicy& policy,
                        const StateObservable& observable, const QueueSimConfig& cfg);

/// Time average of r(Q / sqrt(n)).
QueueRun simulate_ergodic_cost(const QueueSystem& system, const SchedulingPolicy& policy,
                               const RunningCost& cost, const QueueSimConfig& cfg);

inline constexpr std::size_t kMaxExactStates = 5'000'000;

/// Stationary expectation on the truncated lattice {e.x <= cap} by power
/// iteration on the uniformized chain; out-of-cap arrivals are dropped.
double exact_stationary_expectation(const QueueSystem& system,
                                    const SchedulingPolicy& policy,
                                    const StateObservable& observable,
                                    std::size_t cap, double tol = 1e-12);

double exact_stationary_cost(const QueueSystem& system, const SchedulingPolicy& policy,
                             const RunningCost& cost, std::size_t cap);

}  // namespace ergodic_hw
