#pragma once

#include <span>
#include <vector>

namespace ergodic_hw {

/// One coordinate of a separable objective on the simplex:
///   phi(u) = slope_lo * min(u, kink) + slope_hi * max(u - kink, 0) + w * u^m.
/// kink is clamped to [0, 1].
struct SeparableTerm {
  double kink = 1.0;
  double slope_lo = 0.0;
  double slope_hi = 0.0;
  double w = 0.0;
};

struct SimplexMin {
  std::vector<double> u;
  double value = 0.0;
};

/// Exact minimum of sum_i phi_i(u_i) over {u >= 0, e.u = 1}.
///
/// Each coordinate is split at its kink; every combination of linear pieces is
/// a convex box-simplex problem, solved greedily (w = 0 or m = 1) or by KKT
/// bisection on the multiplier (m > 1). Ties go to the largest index.
SimplexMin minimize_on_simplex(std::span<const SeparableTerm> terms, double m);

inline constexpr std::size_t kSmallSimplexDim = 4;

/// Allocation-free exact minimum for piecewise-linear terms (all w == 0) and
/// d <= kSmallSimplexDim: every vertex of a linear cell has all but one
/// coordinate on a breakpoint {0, kink, 1}, so those points are enumerated.
double minimize_piecewise_linear(std::span<const SeparableTerm> terms,
                                 std::span<double> u_out);

double evaluate_separable(std::span<const SeparableTerm> terms, double m,
                          std::span<const double> u);

}  // namespace ergodic_hw
