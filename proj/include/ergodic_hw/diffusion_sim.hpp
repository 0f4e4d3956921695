#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "ergodic_hw/grid.hpp"
#include "ergodic_hw/model.hpp"
#include "ergodic_hw/stats.hpp"

namespace ergodic_hw {

struct SdePathConfig {
  double dt = 1e-3;
  double horizon = 1e4;
  double burn_in = 1e3;
  int replicas = 4;
  std::uint64_t seed = 1;
  /// Replicas leaving this ball abort the run.
  double divergence_radius = 60.0;
  /// Initial point; empty means the origin.
  Vec x0;
};

/// Markov control u(x); returns a span of length d valid until the next call.
using MarkovControl = std::function<std::span<const double>(std::span<const double>)>;

MarkovControl field_control(const ControlField& field);
MarkovControl constant_control(const SimplexControl& u);

/// Euler-Maruyama time average of r~(X, u(X)) over [burn_in, horizon].
CostEstimate simulate_diffusion_cost(const DiffusionModel& model, const RunningCost& cost,
                                     const MarkovControl& control, const SdePathConfig& cfg);

}  // namespace ergodic_hw
