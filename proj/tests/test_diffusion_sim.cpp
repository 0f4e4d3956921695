#include <doctest.h>

#include <cmath>

#include "ergodic_hw/diffusion_sim.hpp"

using namespace ergodic_hw;

namespace {

DiffusionModel one_class() {
  std::vector<ClassParams> c{{1, 1, 1, 0, 0}};
  return build_limit_model(c);
}

DiffusionModel two_class() {
  std::vector<ClassParams> c{{0.5, 1, 1, 0, 0}, {1.0, 2, 1, 0, 0}};
  return build_limit_model(c);
}

SdePathConfig short_cfg(double dt) {
  SdePathConfig cfg;
  cfg.dt = dt;
  cfg.horizon = 2e4;
  cfg.burn_in = 2e3;
  cfg.replicas = 2;
  cfg.seed = 13;
  return cfg;
}

}  // namespace

TEST_CASE("symmetric one-dimensional diffusion matches the normal law") {
  auto m = one_class();
  auto est = simulate_diffusion_cost(m, RunningCost(1, {1}),
                                     constant_control(SimplexControl::vertex(1, 0)),
                                     short_cfg(1e-3));
  CHECK(std::abs(est.mean - 1.0 / std::sqrt(2.0 * M_PI)) <= 3.0 * est.std_error);
  CHECK(est.std_error > 0.0);
}

TEST_CASE("halving dt stays within the combined error") {
  auto m = one_class();
  auto u = constant_control(SimplexControl::vertex(1, 0));
  auto a = simulate_diffusion_cost(m, RunningCost(1, {1}), u, short_cfg(2e-3));
  auto b = simulate_diffusion_cost(m, RunningCost(1, {1}), u, short_cfg(1e-3));
  CHECK(std::abs(a.mean - b.mean) <=
        3.0 * std::hypot(a.std_error, b.std_error));
}

TEST_CASE("determinism and zero cost") {
  auto m = two_class();
  auto cfg = short_cfg(1e-2);
  cfg.horizon = 2000;
  cfg.burn_in = 200;
  auto u = constant_control(SimplexControl::vertex(2, 1));
  auto a = simulate_diffusion_cost(m, RunningCost(1, {1, 3}), u, cfg);
  auto b = simulate_diffusion_cost(m, RunningCost(1, {1, 3}), u, cfg);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
  CHECK(std::isfinite(a.mean));
  CHECK(a.mean > 0.0);
  auto z = simulate_diffusion_cost(m, RunningCost(1, {0, 0}), u, cfg);
  CHECK(z.mean == 0.0);
}

TEST_CASE("field control falls back outside the grid") {
  auto grid = Grid::uniform(2, 1, 0.5);
  ControlField f(grid, SimplexControl::vertex(2, 1));
  f.at_index(grid.origin())[0] = 1.0;
  f.at_index(grid.origin())[1] = 0.0;
  auto ctl = field_control(f);
  Vec in{0.1, -0.2}, out{5, 0};
  CHECK(ctl(in)[0] == 1.0);
  CHECK(ctl(out)[1] == 1.0);
}

TEST_CASE("divergence guard fires") {
  std::vector<ClassParams> c{{1, 1, 1, 0, 0}};
  auto m = build_limit_model(c);
  auto cfg = short_cfg(1e-2);
  cfg.divergence_radius = 0.5;
  CHECK_THROWS(simulate_diffusion_cost(m, RunningCost(1, {1}),
                                       constant_control(SimplexControl::vertex(1, 0)), cfg));
}
