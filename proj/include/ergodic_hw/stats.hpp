#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace ergodic_hw {

/// Time-average estimate with batch-means standard error.
struct CostEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  double horizon = 0.0;
  double burn_in = 0.0;
  int replicas = 0;
};

inline constexpr int kBatchesPerReplica = 20;

/// Integrates a piecewise-constant signal over [begin, end) split into equal batches.
class BatchAccumulator {
 public:
  BatchAccumulator(double begin, double end, int batches = kBatchesPerReplica);

  /// Adds value * |[t0, t1) ∩ [begin, end)|, split across batch boundaries.
  void add(double t0, double t1, double value);

  /// Per-batch time averages.
  std::vector<double> batch_means() const;

 private:
  double begin_;
  double width_;
  std::vector<double> sums_;
};

/// Pools the batch means of all replicas: mean and sd / sqrt(#batches).
CostEstimate pool_batches(std::span<const std::vector<double>> per_replica,
                          double horizon, double burn_in);

enum class StreamRole : std::uint64_t {
  kClock = 1,
  kEvent = 2,
  kNoise = 3,
  kSampling = 4,
};

/// Independent engine for (seed, replica, role).
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t replica,
                            StreamRole role);

}  // namespace ergodic_hw
