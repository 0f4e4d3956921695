#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ergodic_hw/config.hpp"

namespace ergodic_hw {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitError = 1, kExitFlagged = 2 };

struct LadderRow {
  std::size_t n;
  double vhat;
  double std_error;
  double rho_star;
  double gap;
  std::uint64_t fallback_count;
};

struct ConvergenceResult {
  double rho_star = 0.0;
  std::vector<LadderRow> rounded;   // MarkovRounded policy
  std::vector<LadderRow> priority;  // static priority, lower-bound face
  bool has_trend = false;           // ladder length > 1
  bool gap_shrinks = true;
  bool lower_bound_ok = true;
  bool flagged() const { return !gap_shrinks || !lower_bound_ok; }
};

/// Solve the HJB, lift its control with the rounding policy, simulate the ladder.
ConvergenceResult run_convergence(const ExperimentConfig& cfg);

struct MomentRow {
  std::size_t n;
  double moment;
  double std_error;
};

struct MomentReport {
  int q = 2;
  std::vector<MomentRow> rows;
  double sup = 0.0;
  bool unbounded = false;
};

/// Time averages of |X^n_hat|^q under the rounding policy along the ladder.
MomentReport run_moment_check(const ExperimentConfig& cfg);

struct VanishingRow {
  double alpha;
  double alpha_v0;
  double error;     // |alpha V_alpha(0) - rho_*|
  double sup_dist;  // sup over |x| <= radius of |V_alpha - V_alpha(0) - V_*|
};

struct VanishingReport {
  double rho_star = 0.0;
  std::vector<VanishingRow> rows;
  bool error_decreasing = true;
  bool distance_decreasing = true;
};

VanishingReport run_vanishing_discount(const ExperimentConfig& cfg);

/// Runs one experiment kind, writing CSV files and manifest.txt under out.
/// Returns an ExitCode; throws on configuration or solver errors.
int run_experiment(const std::string& kind, const ExperimentConfig& cfg,
                   const std::filesystem::path& out);

const std::vector<std::string>& experiment_kinds();

}  // namespace ergodic_hw
