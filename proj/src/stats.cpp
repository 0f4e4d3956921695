#include "ergodic_hw/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ergodic_hw {

BatchAccumulator::BatchAccumulator(double begin, double end, int batches)
    : begin_(begin), width_((end - begin) / batches), sums_(batches, 0.0) {
  if (!(end > begin) || batches <= 0)
    throw std::invalid_argument("batch window must be non-empty");
}

void BatchAccumulator::add(double t0, double t1, double value) {
  const double end = begin_ + width_ * static_cast<double>(sums_.size());
  t0 = std::max(t0, begin_);
  t1 = std::min(t1, end);
  while (t0 < t1) {
    auto b = static_cast<std::size_t>((t0 - begin_) / width_);
    b = std::min(b, sums_.size() - 1);
    const double edge = std::min(t1, begin_ + width_ * static_cast<double>(b + 1));
    if (edge <= t0) {
      // Rounding left t0 on a boundary; move to the next batch.
      if (b + 1 >= sums_.size()) break;
      t0 = begin_ + width_ * static_cast<double>(b + 1);
      continue;
    }
    sums_[b] += value * (edge - t0);
    t0 = edge;
  }
}

std::vector<double> BatchAccumulator::batch_means() const {
  std::vector<double> out(sums_.size());
  for (std::size_t i = 0; i < sums_.size(); ++i) out[i] = sums_[i] / width_;
  return out;
}

CostEstimate pool_batches(std::span<const std::vector<double>> per_replica,
                          double horizon, double burn_in) {
  std::vector<double> all;
  for (const auto& r : per_replica) all.insert(all.end(), r.begin(), r.end());
  CostEstimate est;
  est.horizon = horizon;
  est.burn_in = burn_in;
  est.replicas = static_cast<int>(per_replica.size());
  if (all.empty()) return est;
  double sum = 0.0;
  for (double v : all) sum += v;
  est.mean = sum / static_cast<double>(all.size());
  if (all.size() > 1) {
    double ss = 0.0;
    for (double v : all) ss += (v - est.mean) * (v - est.mean);
    const double var = ss / static_cast<double>(all.size() - 1);
    est.std_error = std::sqrt(var / static_cast<double>(all.size()));
  }
  return est;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t replica,
                            StreamRole role) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replica), static_cast<std::uint32_t>(replica >> 32),
                    static_cast<std::uint32_t>(role)};
  return std::mt19937_64(seq);
}

}  // namespace ergodic_hw
