// Serial vs OpenMP kernels: one Bellman sweep, one batch of CTMC replicas, one batch of SDE paths.
#include <benchmark/benchmark.h>

#include <omp.h>

#include <vector>

#include "ergodic_hw/diffusion_sim.hpp"
#include "ergodic_hw/hjb_solver.hpp"
#include "ergodic_hw/queue_sim.hpp"

using namespace ergodic_hw;

namespace {

const std::vector<ClassParams>& params() {
  static const std::vector<ClassParams> c{{0.5, 1, 1, 0, 0}, {1.0, 2, 1, 0, 0}};
  return c;
}

struct SweepFixture {
  DiffusionModel model = build_limit_model(params());
  RunningCost cost{1, {1, 3}};
  Grid grid;
  ChainApproximation chain;
  std::vector<double> V, out, u;

  explicit SweepFixture(double h)
      : grid(Grid::uniform(2, 5, h)),
        chain(model, cost, grid, TruncationConfig::untruncated(grid), 0.0),
        V(grid.size()),
        out(grid.size()),
        u(grid.size() * 2) {
    std::vector<double> x(2);
    for (std::size_t p = 0; p < grid.size(); ++p) {
      grid.point(p, x);
      V[p] = x[0] * x[0] + 0.5 * x[0] * x[1] + 2.0 * x[1] * x[1];
    }
  }
};

void bm_sweep_serial(benchmark::State& st) {
  SweepFixture f(st.range(0) / 1000.0);
  for (auto _ : st) {
    f.chain.sweep_serial(f.V, f.out, f.u);
    benchmark::DoNotOptimize(f.out.data());
  }
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * f.grid.size()));
}

void bm_sweep_parallel(benchmark::State& st) {
  SweepFixture f(st.range(0) / 1000.0);
  for (auto _ : st) {
    f.chain.sweep_parallel(f.V, f.out, f.u);
    benchmark::DoNotOptimize(f.out.data());
  }
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * f.grid.size()));
}

QueueSimConfig queue_cfg() {
  QueueSimConfig cfg;
  cfg.horizon = 200;
  cfg.burn_in = 20;
  cfg.replicas = 4;
  cfg.seed = 1;
  return cfg;
}

void run_queue(benchmark::State& st, int threads) {
  const auto sys = QueueSystem::from_limit(params(), 100);
  const auto pol = SchedulingPolicy::static_priority({0, 1});
  RunningCost cost(1, {1, 3});
  const int saved = omp_get_max_threads();
  omp_set_num_threads(threads);
  for (auto _ : st) benchmark::DoNotOptimize(simulate_ergodic_cost(sys, pol, cost, queue_cfg()));
  omp_set_num_threads(saved);
}

void bm_queue_serial(benchmark::State& st) { run_queue(st, 1); }
void bm_queue_parallel(benchmark::State& st) { run_queue(st, omp_get_num_procs()); }

void run_sde(benchmark::State& st, int threads) {
  const auto model = build_limit_model(params());
  RunningCost cost(1, {1, 3});
  SdePathConfig cfg;
  cfg.dt = 1e-3;
  cfg.horizon = 200;
  cfg.burn_in = 20;
  cfg.replicas = 4;
  const auto ctl = constant_control(SimplexControl::vertex(2, 1));
  const int saved = omp_get_max_threads();
  omp_set_num_threads(threads);
  for (auto _ : st) benchmark::DoNotOptimize(simulate_diffusion_cost(model, cost, ctl, cfg));
  omp_set_num_threads(saved);
}

void bm_sde_serial(benchmark::State& st) { run_sde(st, 1); }
void bm_sde_parallel(benchmark::State& st) { run_sde(st, omp_get_num_procs()); }

}  // namespace

BENCHMARK(bm_sweep_serial)->Arg(100)->Arg(50)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_sweep_parallel)->Arg(100)->Arg(50)->Unit(benchmark::kMicrosecond);
BENCHMARK(bm_queue_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_queue_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_sde_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(bm_sde_parallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
