#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "ergodic_hw/queue_sim.hpp"

using namespace ergodic_hw;

namespace {

QueueSystem single_server() {
  std::vector<ClassParams> c{{1, 1, 1, -0.5, 0}};
  return QueueSystem::from_limit(c, 1);
}

QueueSystem symmetric(std::size_t n) {
  std::vector<ClassParams> c{{0.5, 1, 1, 0, 0}, {0.5, 1, 1, 0, 0}};
  return QueueSystem::from_limit(c, n);
}

}  // namespace

TEST_CASE("prelimit rates") {
  auto s = single_server();
  CHECK(s.lambda_n[0] == doctest::Approx(0.5));
  CHECK(s.mu_n[0] == doctest::Approx(1.0));
  CHECK(s.gamma_n[0] == doctest::Approx(1.0));
}

TEST_CASE("varpi examples") {
  Vec a{1.3, 2.6, 0.1};
  CHECK(varpi(a) == CountVec{1, 2, 1});
  Vec b{0.5, 0.5};
  CHECK(varpi(b) == CountVec{0, 1});
  Vec c{4, 0, 7};
  CHECK(varpi(c) == CountVec{4, 0, 7});
  Vec bad{0.5, 0.4};
  CHECK_THROWS(varpi(bad));
  Vec neg{-1, 2};
  CHECK_THROWS(varpi(neg));
}

TEST_CASE("varpi sum preservation and proximity on random inputs") {
  std::mt19937_64 g(41);
  std::uniform_int_distribution<int> dim(1, 6), total(0, 500);
  std::exponential_distribution<double> e(1.0);
  for (int k = 0; k < 10000; ++k) {
    const std::size_t d = static_cast<std::size_t>(dim(g));
    const int sum = total(g);
    Vec z(d);
    double s = 0.0;
    for (auto& v : z) s += (v = e(g));
    for (auto& v : z) v = v / s * sum;
    double partial = 0.0;
    for (std::size_t i = 0; i + 1 < d; ++i) partial += z[i];
    z.back() = std::max(sum - partial, 0.0);
    const auto r = varpi(z);
    Count rs = 0;
    double dist = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      CHECK(r[i] >= 0);
      rs += r[i];
      dist = std::max(dist, std::abs(static_cast<double>(r[i]) - z[i]));
    }
    CHECK(rs == sum);
    CHECK(dist <= static_cast<double>(d));
  }
}

TEST_CASE("static priority allocation") {
  auto sys = symmetric(5);
  auto pol = SchedulingPolicy::static_priority({0, 1});
  CountVec x{3, 4}, z(2);
  CHECK_FALSE(pol.allocate(x, sys, z));
  CHECK(z == CountVec{3, 2});
  CountVec few{1, 2};
  pol.allocate(few, sys, z);
  CHECK(z == few);
  CHECK_THROWS(SchedulingPolicy::static_priority({0, 0}));
}

TEST_CASE("rounded policy hand example") {
  auto sys = symmetric(100);
  auto grid = Grid::uniform(2, 2, 0.5);
  auto field = std::make_shared<ControlField>(
      ControlField::constant(grid, SimplexControl(Vec{0.5, 0.5})));
  auto pol = SchedulingPolicy::markov_rounded(field, 2.0);
  CountVec x{55, 52}, z(2);
  CHECK_FALSE(pol.allocate(x, sys, z));
  CHECK(z == CountVec{52, 48});
  // outside A_n: priority with the last class last
  CountVec far{80, 40};
  pol.allocate(far, sys, z);
  CHECK(z == CountVec{80, 20});
}

TEST_CASE("rounded policy with v = e_d is static priority") {
  auto sys = symmetric(400);
  auto grid = Grid::uniform(2, 4, 0.5);
  auto field =
      std::make_shared<ControlField>(ControlField::constant(grid, SimplexControl::vertex(2, 1)));
  auto rounded = SchedulingPolicy::markov_rounded(field, 3.0);
  auto prio = SchedulingPolicy::static_priority({0, 1});
  std::mt19937_64 g(43);
  std::uniform_int_distribution<int> off(-60, 60);
  int checked = 0;
  for (int k = 0; k < 2000; ++k) {
    CountVec x{200 + off(g), 200 + off(g)};
    if (x[0] + x[1] < 400) continue;
    CountVec a(2), b(2);
    rounded.allocate(x, sys, a);
    prio.allocate(x, sys, b);
    CHECK(a == b);
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("exact stationary cost of the single-server instance") {
  auto sys = single_server();
  RunningCost c(1, {1});
  const double oracle = 0.5 - (1.0 - std::exp(-0.5));
  CHECK(exact_stationary_cost(sys, SchedulingPolicy::static_priority({0}), c, 30) ==
        doctest::Approx(oracle).epsilon(1e-7));
  CHECK(exact_stationary_cost(sys, SchedulingPolicy::static_priority({0}), RunningCost(1, {0}),
                              30) == 0.0);
}

TEST_CASE("simulation agrees with the exact law") {
  RunningCost c(1, {1, 2});
  QueueSimConfig cfg;
  cfg.horizon = 2e4;
  cfg.burn_in = 2e3;
  cfg.replicas = 4;
  cfg.seed = 5;
  for (std::size_t n : {1u, 3u}) {
    auto sys = symmetric(n);
    auto pol = SchedulingPolicy::static_priority({0, 1});
    const double exact = exact_stationary_cost(sys, pol, c, 40);
    auto run = simulate_ergodic_cost(sys, pol, c, cfg);
    CHECK(std::abs(run.estimate.mean - exact) <= 3.0 * run.estimate.std_error);
    CHECK(run.invariant_violations == 0);
  }
}

TEST_CASE("simulation determinism and zero cost") {
  auto sys = symmetric(3);
  auto pol = SchedulingPolicy::static_priority({1, 0});
  QueueSimConfig cfg;
  cfg.horizon = 2000;
  cfg.burn_in = 200;
  cfg.replicas = 3;
  cfg.seed = 9;
  auto a = simulate_ergodic_cost(sys, pol, RunningCost(1, {1, 1}), cfg);
  auto b = simulate_ergodic_cost(sys, pol, RunningCost(1, {1, 1}), cfg);
  CHECK(a.estimate.mean == b.estimate.mean);
  CHECK(a.estimate.std_error == b.estimate.std_error);
  CHECK(a.events == b.events);
  auto z = simulate_ergodic_cost(sys, pol, RunningCost(1, {0, 0}), cfg);
  CHECK(z.estimate.mean == 0.0);
}

TEST_CASE("exact solver guards") {
  auto sys = symmetric(3);
  auto pol = SchedulingPolicy::static_priority({0, 1});
  CHECK_THROWS(exact_stationary_cost(sys, pol, RunningCost(1, {1, 1}), 10000));
}
