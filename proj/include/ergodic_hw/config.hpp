#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ergodic_hw/diffusion_sim.hpp"
#include "ergodic_hw/grid.hpp"
#include "ergodic_hw/hjb_solver.hpp"
#include "ergodic_hw/model.hpp"
#include "ergodic_hw/queue_sim.hpp"

namespace ergodic_hw {

struct PolicyConfig {
  std::string kind = "markov-rounded";
  double K = 10.0;
  std::vector<std::size_t> order;  // 0-based
  Vec u;
};

struct ExperimentConfig {
  std::vector<ClassParams> classes;
  RunningCost cost;
  DiffusionModel model;

  Vec grid_L, grid_h;
  double trunc_l = 0.0;
  SimplexControl trunc_u0;
  SolverOptions solver;

  std::size_t sim_n = 100;
  std::vector<std::size_t> n_ladder{10, 50, 200, 800};
  QueueSimConfig sim;

  PolicyConfig policy;
  SdePathConfig sde;
  std::string sde_control = "optimal";

  std::vector<double> l_values;
  std::vector<double> eps_values{0.1, 0.01};
  std::vector<double> alphas{0.4, 0.2, 0.1, 0.05};
  int moment_q = 2;
  std::size_t lyapunov_samples = 10000;
  double compact_radius = 3.0;
  std::uint64_t check_seed = 11;

  nlohmann::json raw;

  Grid grid() const { return Grid(model.d, grid_L, grid_h); }
  TruncationConfig truncation() const { return {trunc_l, trunc_u0}; }
  void set_seed(std::uint64_t seed);
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// FNV-1a over the compact JSON dump.
std::uint64_t config_hash(const nlohmann::json& j);

}  // namespace ergodic_hw
