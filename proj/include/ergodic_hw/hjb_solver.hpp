#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ergodic_hw/grid.hpp"
#include "ergodic_hw/model.hpp"

namespace ergodic_hw {

struct HamiltonianMin {
  SimplexControl u;
  double value = 0.0;
};

/// min over S of b(x,u).p + r~(x,u). Vertex rule for m = 1 (ties to the
/// largest index), KKT bisection for m > 1.
HamiltonianMin minimize_hamiltonian(const DiffusionModel& model,
                                    const RunningCost& cost,
                                    std::span<const double> x,
                                    std::span<const double> p);

/// Upwind version: b_i multiplies dplus_i where b_i >= 0 and dminus_i where
/// b_i < 0. Equals minimize_hamiltonian when dplus == dminus.
HamiltonianMin minimize_upwind_hamiltonian(const DiffusionModel& model,
                                           const RunningCost& cost,
                                           std::span<const double> x,
                                           std::span<const double> dplus,
                                           std::span<const double> dminus);

/// Control frozen to u0 outside the Euclidean ball of radius l.
struct TruncationConfig {
  double l = 0.0;
  SimplexControl u0;

  static TruncationConfig untruncated(const Grid& grid);
};

struct SolverOptions {
  double tol = 1e-8;
  std::size_t max_iters = 20'000'000;
  double epsilon = 0.0;
  bool parallel = true;
  /// Initial iterate; must match the grid size.
  std::optional<std::vector<double>> warm_start;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, std::vector<double> history)
      : std::runtime_error(what), span_history(std::move(history)) {}
  std::vector<double> span_history;
};

struct ErgodicSolution {
  ValueField V;
  double rho = 0.0;
  ControlField control;
  std::size_t iterations = 0;
  double span_residual = 0.0;
  double dt = 0.0;
};

struct Transition {
  std::size_t target;
  double rate;
};

/// Monotone Markov-chain approximation of L^u on a grid: central second
/// differences, upwind first differences, reflecting box boundary.
class ChainApproximation {
 public:
  ChainApproximation(const DiffusionModel& model, const RunningCost& cost,
                     const Grid& grid, const TruncationConfig& trunc,
                     double epsilon);

  const Grid& grid() const { return grid_; }
  double dt() const { return dt_; }
  double max_rate() const { return 1.0 / dt_; }
  bool frozen(std::size_t p) const { return frozen_[p] != 0; }

  /// Off-diagonal rates at p under control u (dropped boundary moves omitted).
  std::vector<Transition> transition_rates(std::size_t p,
                                           std::span<const double> u) const;

  /// min_u [r~ + sum rate (V(y) - V(x))] + eps h~ at p; argmin written to u_out.
  double bellman_point(std::size_t p, std::span<const double> V,
                       std::span<double> u_out) const;

  /// Same with the control fixed to u.
  double evaluate_point(std::size_t p, std::span<const double> V,
                        std::span<const double> u) const;

  /// Applies bellman_point at every grid point.
  void sweep_parallel(std::span<const double> V, std::span<double> out,
                      std::span<double> controls) const;
  void sweep_serial(std::span<const double> V, std::span<double> out,
                    std::span<double> controls) const;

 private:
  double kernel(std::size_t p, std::span<const double> V, double* u_out) const;

  const DiffusionModel& model_;
  const RunningCost& cost_;
  Grid grid_;
  SimplexControl u0_;
  double epsilon_;
  double dt_ = 0.0;
  std::size_t d_;
  std::vector<double> diff_rate_;  // lambda_i / h_i^2 per axis
  std::vector<double> inv_h_;
  std::vector<double> coords_;     // d per point
  std::vector<std::uint32_t> mask_;  // bit 2i: +e_i exists, bit 2i+1: -e_i exists
  std::vector<double> fixed_b_;    // drift under the fixed control (frozen points, d = 1)
  std::vector<double> extra_;      // fixed-control running cost (frozen, d = 1) + eps h~
  std::vector<char> frozen_;
};

ErgodicSolution solve_ergodic(const DiffusionModel& model,
                              const RunningCost& cost, const Grid& grid,
                              const TruncationConfig& trunc,
                              const SolverOptions& opts = {});

/// Raw (unnormalized) alpha-discounted value on the grid.
ValueField solve_discounted(const DiffusionModel& model,
                            const RunningCost& cost, const Grid& grid,
                            double alpha, const SolverOptions& opts = {});

/// max |T^v V - rho| over grid points, with the control fixed to the solution's field.
double policy_residual(const DiffusionModel& model, const RunningCost& cost,
                       const Grid& grid, const TruncationConfig& trunc,
                       const ErgodicSolution& sol, double epsilon = 0.0);

struct TruncationSweep {
  std::vector<std::pair<double, double>> rows;  // (l, rho_l)
  bool monotone = true;
};

TruncationSweep truncation_sweep(const DiffusionModel& model,
                                 const RunningCost& cost, const Grid& grid,
                                 std::span<const double> l_values,
                                 const SolverOptions& opts = {},
                                 double tol_mono = 1e-4);

struct EpsilonRow {
  double epsilon;
  double rho_eps;
  double upper_bound;
  bool ok;
};

struct EpsilonReport {
  double rho_star = 0.0;
  double k0 = 0.0;
  std::vector<EpsilonRow> rows;
  bool monotone = true;
  bool ok = true;
};

EpsilonReport epsilon_bound_check(const DiffusionModel& model,
                                  const RunningCost& cost, const Grid& grid,
                                  const TruncationConfig& trunc,
                                  std::span<const double> eps_values, double k0,
                                  const SolverOptions& opts = {},
                                  double tol = 1e-6);

}  // namespace ergodic_hw
