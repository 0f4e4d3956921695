#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "ergodic_hw/hjb_solver.hpp"

using namespace ergodic_hw;

namespace {

DiffusionModel two_class() {
  std::vector<ClassParams> c{{0.5, 1, 1, 0, 0}, {1.0, 2, 1, 0, 0}};
  return build_limit_model(c);
}

DiffusionModel one_class(double gamma) {
  std::vector<ClassParams> c{{1, 1, gamma, 0, 0}};
  return build_limit_model(c);
}

double objective(const DiffusionModel& m, const RunningCost& c, std::span<const double> x,
                 std::span<const double> p, const Vec& u) {
  const auto b = drift(m, x, SimplexControl(u));
  double v = running_cost(c, x, SimplexControl(u));
  for (std::size_t i = 0; i < b.size(); ++i) v += b[i] * p[i];
  return v;
}

double brute_force(const DiffusionModel& m, const RunningCost& c, std::span<const double> x,
                   std::span<const double> p) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 1000; ++i) {
    const double a = std::min(i * 1e-3, 1.0);
    best = std::min(best, objective(m, c, x, p, {a, 1.0 - a}));
  }
  return best;
}

}  // namespace

TEST_CASE("hamiltonian hand example") {
  auto m = two_class();
  RunningCost c(1, {1, 1});
  Vec x{1, 1}, p{0, 1};
  auto r = minimize_hamiltonian(m, c, x, p);
  CHECK(r.u[0] == 1.0);
  CHECK(r.value == doctest::Approx(objective(m, c, x, p, {1, 0})));
}

TEST_CASE("empty queue returns e_d") {
  auto m = two_class();
  RunningCost c(2, {1, 3});
  Vec x{-1, 0.5}, p{0.3, -2};
  auto r = minimize_hamiltonian(m, c, x, p);
  CHECK(r.u[1] == 1.0);
  CHECK(r.value == doctest::Approx(1.0 * 0.3 + -1.0 * -2.0));
}

TEST_CASE("vertex rule against brute force") {
  auto m = two_class();
  RunningCost c(1, {1, 3});
  std::mt19937_64 g(17);
  std::uniform_real_distribution<double> ux(-4, 4), up(-5, 5);
  for (int k = 0; k < 1000; ++k) {
    Vec x{ux(g), ux(g)}, p{up(g), up(g)};
    auto r = minimize_hamiltonian(m, c, x, p);
    CHECK(r.value == doctest::Approx(brute_force(m, c, x, p)).epsilon(1e-12));
    CHECK((r.u[0] == 1.0 || r.u[1] == 1.0));
  }
}

TEST_CASE("KKT rule against brute force") {
  auto m = two_class();
  RunningCost c(2, {1, 3});
  std::mt19937_64 g(19);
  std::uniform_real_distribution<double> ux(-3, 3), up(-5, 5);
  for (int k = 0; k < 500; ++k) {
    Vec x{ux(g), ux(g)}, p{up(g), up(g)};
    auto r = minimize_hamiltonian(m, c, x, p);
    const double ref = brute_force(m, c, x, p);
    CHECK(r.value <= ref + 1e-9);
    CHECK(r.value >= ref - 1e-6 * std::max(1.0, std::pow(x[0] + x[1], 2)));
  }
}

TEST_CASE("upwind hamiltonian reduces to the central one") {
  auto m = two_class();
  RunningCost c(1, {1, 3});
  std::mt19937_64 g(23);
  std::uniform_real_distribution<double> ux(-4, 4), up(-5, 5);
  for (int k = 0; k < 200; ++k) {
    Vec x{ux(g), ux(g)}, p{up(g), up(g)};
    auto a = minimize_hamiltonian(m, c, x, p);
    auto b = minimize_upwind_hamiltonian(m, c, x, p, p);
    CHECK(b.value == doctest::Approx(a.value).epsilon(1e-12));
  }
}

TEST_CASE("monotone stencil and uniformized row sums") {
  auto m = two_class();
  RunningCost c(1, {1, 3});
  auto grid = Grid::uniform(2, 2, 0.25);
  TruncationConfig trunc{1.5, SimplexControl::vertex(2, 1)};
  ChainApproximation chain(m, c, grid, trunc, 0.0);
  std::mt19937_64 g(29);
  std::uniform_real_distribution<double> a(0, 1);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    for (int k = 0; k < 3; ++k) {
      const double w = k == 0 ? 0.0 : k == 1 ? 1.0 : a(g);
      Vec u{w, 1 - w};
      double total = 0.0;
      for (const auto& t : chain.transition_rates(p, u)) {
        CHECK(t.rate >= 0.0);
        CHECK(t.target < grid.size());
        total += t.rate;
      }
      const double stay = 1.0 - total * chain.dt();
      CHECK(stay >= -1e-12);
      CHECK(stay + total * chain.dt() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("serial and parallel sweeps agree") {
  auto m = two_class();
  RunningCost c(1, {1, 3});
  auto grid = Grid::uniform(2, 3, 0.1);
  ChainApproximation chain(m, c, grid, TruncationConfig{2.0, SimplexControl::vertex(2, 1)},
                           0.05);
  std::mt19937_64 g(31);
  std::uniform_real_distribution<double> a(-1, 1);
  std::vector<double> V(grid.size());
  for (auto& v : V) v = a(g);
  std::vector<double> o1(grid.size()), o2(grid.size());
  std::vector<double> u1(grid.size() * 2), u2(grid.size() * 2);
  chain.sweep_serial(V, o1, u1);
  chain.sweep_parallel(V, o2, u2);
  CHECK(o1 == o2);
  CHECK(u1 == u2);
}

TEST_CASE("zero cost gives zero value") {
  auto m = two_class();
  RunningCost c(1, {0, 0});
  auto grid = Grid::uniform(2, 2, 0.25);
  auto s = solve_ergodic(m, c, grid, TruncationConfig::untruncated(grid));
  CHECK(std::abs(s.rho) < 1e-12);
  for (double v : s.V.values) CHECK(std::abs(v) < 1e-12);
  auto Va = solve_discounted(m, c, grid, 0.5);
  for (double v : Va.values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("one-dimensional solve: normalization, residual, refinement") {
  auto m = one_class(1.0);
  RunningCost c(1, {1});
  const double target = 1.0 / std::sqrt(2.0 * M_PI);
  auto coarse = Grid::uniform(1, 6, 0.04);
  auto fine = Grid::uniform(1, 6, 0.02);
  auto sc = solve_ergodic(m, c, coarse, TruncationConfig::untruncated(coarse));
  auto sf = solve_ergodic(m, c, fine, TruncationConfig::untruncated(fine));
  CHECK(sc.V.values[coarse.origin()] == 0.0);
  CHECK(sc.span_residual < 1e-8);
  CHECK(std::abs(sf.rho - target) < std::abs(sc.rho - target));
  CHECK(policy_residual(m, c, coarse, TruncationConfig::untruncated(coarse), sc) < 1e-7);
}

TEST_CASE("one-dimensional truncation has no effect") {
  auto m = one_class(2.0);
  RunningCost c(1, {1});
  auto grid = Grid::uniform(1, 5, 0.05);
  std::vector<double> ls{1, 3, 5};
  auto sw = truncation_sweep(m, c, grid, ls);
  CHECK(sw.monotone);
  for (auto [l, r] : sw.rows) CHECK(r == doctest::Approx(sw.rows.back().second).epsilon(1e-6));
}

TEST_CASE("two-dimensional residual and epsilon shift") {
  auto m = two_class();
  RunningCost c(1, {1, 3});
  auto grid = Grid::uniform(2, 3, 0.25);
  auto trunc = TruncationConfig::untruncated(grid);
  auto s = solve_ergodic(m, c, grid, trunc);
  CHECK(policy_residual(m, c, grid, trunc, s) < 1e-7);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    auto u = s.control.at_index(p);
    CHECK(u[0] + u[1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  std::vector<double> eps{0.1, 0.01};
  auto rep = epsilon_bound_check(m, c, grid, trunc, eps, 25.0);
  CHECK(rep.ok);
  CHECK(rep.rows[1].rho_eps <= rep.rows[0].rho_eps);
  CHECK(rep.rho_star == doctest::Approx(s.rho).epsilon(1e-7));
}

TEST_CASE("solver rejects bad input") {
  auto m = two_class();
  RunningCost c(1, {1, 3});
  auto grid = Grid::uniform(2, 2, 0.5);
  CHECK_THROWS_AS(solve_ergodic(m, c, grid, {3.0, SimplexControl::vertex(2, 1)}), ConfigError);
  SolverOptions o;
  o.max_iters = 3;
  CHECK_THROWS_AS(solve_ergodic(m, c, grid, TruncationConfig::untruncated(grid), o),
                  SolverError);
  CHECK_THROWS_AS(solve_discounted(m, c, grid, 0.0), ConfigError);
}
