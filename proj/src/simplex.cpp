#include "ergodic_hw/simplex.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ergodic_hw {

namespace {

struct BoxTerm {
  double lo, hi, slope, w;
};

double power(double u, double m) {
  if (u <= 0.0) return 0.0;
  return m == 2.0 ? u * u : std::pow(u, m);
}

// Greedy fill for a linear objective on the box-simplex.
void fill_linear(std::span<const BoxTerm> box, std::span<const std::size_t> idx,
                 double budget, std::vector<double>& u) {
  std::vector<std::size_t> order(idx.begin(), idx.end());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (box[a].slope != box[b].slope) return box[a].slope < box[b].slope;
    return a > b;
  });
  for (std::size_t i : order) {
    const double take = std::min(budget, box[i].hi - box[i].lo);
    u[i] += take;
    budget -= take;
    if (budget <= 0.0) break;
  }
}

std::vector<double> solve_box(std::span<const BoxTerm> box, double m) {
  const std::size_t d = box.size();
  std::vector<double> u(d);
  double budget = 1.0;
  for (std::size_t i = 0; i < d; ++i) {
    u[i] = box[i].lo;
    budget -= box[i].lo;
  }
  std::vector<std::size_t> linear, curved;
  for (std::size_t i = 0; i < d; ++i)
    (m > 1.0 && box[i].w > 0.0 ? curved : linear).push_back(i);

  if (curved.empty()) {
    fill_linear(box, linear, budget, u);
    return u;
  }

  // u_i(nu) = clamp(((nu - a_i) / (m w_i))^(1/(m-1)), lo, hi) for curved
  // coordinates; linear coordinates sit at lo (a_i > nu) or hi (a_i < nu).
  const double inv = 1.0 / (m - 1.0);
  auto curved_at = [&](std::size_t i, double nu) {
    const double g = (nu - box[i].slope) / (m * box[i].w);
    const double v = g > 0.0 ? std::pow(g, inv) : 0.0;
    return std::clamp(v, box[i].lo, box[i].hi);
  };
  auto total_at = [&](double nu) {
    double s = 0.0;
    for (std::size_t i : curved) s += curved_at(i, nu) - box[i].lo;
    for (std::size_t i : linear)
      if (box[i].slope < nu) s += box[i].hi - box[i].lo;
    return s;
  };
  double lo_nu = std::numeric_limits<double>::infinity();
  double hi_nu = -lo_nu;
  for (std::size_t i = 0; i < d; ++i) {
    const double dlo = box[i].slope + (box[i].w > 0.0 && m > 1.0
                                           ? m * box[i].w * power(box[i].lo, m - 1.0)
                                           : 0.0);
    const double dhi = box[i].slope + (box[i].w > 0.0 && m > 1.0
                                           ? m * box[i].w * power(box[i].hi, m - 1.0)
                                           : 0.0);
    lo_nu = std::min(lo_nu, dlo);
    hi_nu = std::max(hi_nu, dhi);
  }
  lo_nu -= 1.0;
  hi_nu += 1.0;
  for (int it = 0; it < 200 && hi_nu - lo_nu > 1e-14 * (1.0 + std::abs(hi_nu)); ++it) {
    const double mid = 0.5 * (lo_nu + hi_nu);
    (total_at(mid) < budget ? lo_nu : hi_nu) = mid;
  }
  const double nu = lo_nu;
  double used = 0.0;
  for (std::size_t i : curved) {
    u[i] = curved_at(i, nu);
    used += u[i] - box[i].lo;
  }
  std::vector<std::size_t> strict, at_level;
  for (std::size_t i : linear) {
    if (box[i].slope < nu) {
      u[i] = box[i].hi;
      used += box[i].hi - box[i].lo;
    } else {
      at_level.push_back(i);
    }
  }
  double rest = budget - used;
  if (rest > 0.0 && !at_level.empty()) {
    fill_linear(box, at_level, rest, u);
  } else if (rest != 0.0 && !curved.empty()) {
    // Bisection residual: absorb into the curved coordinate with most room.
    for (std::size_t i : curved) {
      const double v = std::clamp(u[i] + rest, box[i].lo, box[i].hi);
      rest -= v - u[i];
      u[i] = v;
      if (rest == 0.0) break;
    }
  }
  return u;
}

}  // namespace

double evaluate_separable(std::span<const SeparableTerm> terms, double m,
                          std::span<const double> u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    const double k = std::clamp(t.kink, 0.0, 1.0);
    acc += t.slope_lo * std::min(u[i], k) +
           t.slope_hi * std::max(u[i] - k, 0.0) + t.w * power(u[i], m);
  }
  return acc;
}

double minimize_piecewise_linear(std::span<const SeparableTerm> terms,
                                 std::span<double> u_out) {
  const std::size_t d = terms.size();
  if (d == 0 || d > kSmallSimplexDim)
    throw std::invalid_argument("minimize_piecewise_linear: unsupported dimension");
  auto phi = [&](std::size_t i, double u) {
    const auto& t = terms[i];
    const double k = std::clamp(t.kink, 0.0, 1.0);
    return t.slope_lo * std::min(u, k) + t.slope_hi * std::max(u - k, 0.0);
  };
  double cand[kSmallSimplexDim][3];
  int ncand[kSmallSimplexDim];
  for (std::size_t i = 0; i < d; ++i) {
    const double k = terms[i].kink;
    ncand[i] = 0;
    cand[i][ncand[i]++] = 0.0;
    if (k > 0.0 && k < 1.0) cand[i][ncand[i]++] = k;
    cand[i][ncand[i]++] = 1.0;
  }
  double best = std::numeric_limits<double>::infinity();
  double u[kSmallSimplexDim];
  int pick[kSmallSimplexDim];
  for (std::size_t free = d; free-- > 0;) {
    for (std::size_t i = 0; i < d; ++i) pick[i] = 0;
    for (;;) {
      double rest = 1.0, value = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        if (i == free) continue;
        u[i] = cand[i][pick[i]];
        rest -= u[i];
        value += phi(i, u[i]);
      }
      if (rest >= -1e-15 && rest <= 1.0 + 1e-15) {
        u[free] = std::clamp(rest, 0.0, 1.0);
        value += phi(free, u[free]);
        if (value < best - 1e-15 * (1.0 + std::abs(value))) {
          best = value;
          std::copy(u, u + d, u_out.begin());
        }
      }
      std::size_t i = 0;
      for (; i < d; ++i) {
        if (i == free) continue;
        if (++pick[i] < ncand[i]) break;
        pick[i] = 0;
      }
      if (i == d) break;
    }
  }
  return best;
}

SimplexMin minimize_on_simplex(std::span<const SeparableTerm> terms, double m) {
  const std::size_t d = terms.size();
  if (d == 0) throw std::invalid_argument("empty simplex objective");
  if (d > 20) throw std::invalid_argument("simplex dimension too large");

  // Piece lists per coordinate.
  std::vector<std::array<BoxTerm, 2>> pieces(d);
  std::vector<int> count(d);
  for (std::size_t i = 0; i < d; ++i) {
    const auto& t = terms[i];
    const double k = std::clamp(t.kink, 0.0, 1.0);
    if (k <= 0.0 || k >= 1.0 || t.slope_lo == t.slope_hi) {
      const double slope = k <= 0.0 ? t.slope_hi : t.slope_lo;
      pieces[i][0] = {0.0, 1.0, slope, t.w};
      count[i] = 1;
    } else {
      pieces[i][0] = {0.0, k, t.slope_lo, t.w};
      pieces[i][1] = {k, 1.0, t.slope_hi, t.w};
      count[i] = 2;
    }
  }

  SimplexMin best;
  best.value = std::numeric_limits<double>::infinity();
  std::vector<BoxTerm> box(d);
  std::vector<int> choice(d, 0);
  for (;;) {
    double sum_lo = 0.0, sum_hi = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      box[i] = pieces[i][choice[i]];
      sum_lo += box[i].lo;
      sum_hi += box[i].hi;
    }
    if (sum_lo <= 1.0 + 1e-15 && sum_hi >= 1.0 - 1e-15) {
      auto u = solve_box(box, m);
      const double v = evaluate_separable(terms, m, u);
      if (v < best.value - 1e-15 * (1.0 + std::abs(v))) {
        best.value = v;
        best.u = std::move(u);
      }
    }
    std::size_t i = 0;
    for (; i < d; ++i) {
      if (++choice[i] < count[i]) break;
      choice[i] = 0;
    }
    if (i == d) break;
  }
  return best;
}

}  // namespace ergodic_hw
