#include "ergodic_hw/diffusion_sim.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace ergodic_hw {

MarkovControl field_control(const ControlField& field) {
  return [&field](std::span<const double> x) { return field.at(x); };
}

MarkovControl constant_control(const SimplexControl& u) {
  auto stored = std::make_shared<Vec>(u.values().begin(), u.values().end());
  return [stored](std::span<const double>) { return std::span<const double>(*stored); };
}

namespace {

std::vector<double> run_path(const DiffusionModel& model, const RunningCost& cost,
                             const MarkovControl& control, const SdePathConfig& cfg,
                             std::uint64_t replica) {
  const std::size_t d = model.d;
  auto rng = make_stream(cfg.seed, replica, StreamRole::kNoise);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec x = cfg.x0.empty() ? Vec(d, 0.0) : cfg.x0;
  if (x.size() != d) throw ConfigError("initial point has wrong dimension");
  const double sqrt_dt = std::sqrt(cfg.dt);
  const double r2 = cfg.divergence_radius * cfg.divergence_radius;
  const bool zero_cost = cost.is_zero();
  BatchAccumulator acc(cfg.burn_in, cfg.horizon);
  const auto steps = static_cast<std::uint64_t>(std::ceil(cfg.horizon / cfg.dt));
  Vec b(d);
  for (std::uint64_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    const auto u = control(x);
    double s = 0.0;
    for (double v : x) s += v;
    s = std::max(s, 0.0);
    if (!zero_cost && t + cfg.dt > cfg.burn_in && s > 0.0) {
      double r = 0.0;
      for (std::size_t i = 0; i < d; ++i)
        if (u[i] > 0.0) r += cost.h[i] * std::pow(s * u[i], cost.m);
      acc.add(t, t + cfg.dt, r);
    }
    for (std::size_t i = 0; i < d; ++i)
      b[i] = model.ell[i] - model.mu[i] * (x[i] - s * u[i]) - s * model.gamma[i] * u[i];
    double norm2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      x[i] += b[i] * cfg.dt + model.sigma[i] * sqrt_dt * normal(rng);
      norm2 += x[i] * x[i];
    }
    if (!(norm2 <= r2))
      throw std::runtime_error("replica " + std::to_string(replica) +
                               " left the divergence ball at t = " + std::to_string(t));
  }
  return acc.batch_means();
}

}  // namespace

CostEstimate simulate_diffusion_cost(const DiffusionModel& model, const RunningCost& cost,
                                     const MarkovControl& control, const SdePathConfig& cfg) {
  if (!(cfg.dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(cfg.burn_in >= 0.0) || !(cfg.horizon > cfg.burn_in))
    throw ConfigError("need horizon > burn_in");
  if (cfg.replicas <= 0) throw ConfigError("replica count must be positive");
  std::vector<std::vector<double>> batches(static_cast<std::size_t>(cfg.replicas));
  std::vector<std::string> errors(batches.size());
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < cfg.replicas; ++r) {
    const auto k = static_cast<std::size_t>(r);
    try {
      batches[k] = run_path(model, cost, control, cfg, k);
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error("diffusion simulation aborted: " + e);
  return pool_batches(batches, cfg.horizon, cfg.burn_in);
}

}  // namespace ergodic_hw
