#include "ergodic_hw/harness.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "ergodic_hw/stability.hpp"

namespace ergodic_hw {

namespace {

namespace fs = std::filesystem;

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << std::setprecision(12);
  return os;
}

void write_manifest(const fs::path& out, const std::string& kind,
                    const ExperimentConfig& cfg, double seconds, int code) {
  auto os = open_out(out / "manifest.txt");
  os << "kind: " << kind << '\n'
     << "version: " << kVersion << '\n'
     << "config_hash: " << std::hex << config_hash(cfg.raw) << std::dec << '\n'
     << "sim_seed: " << cfg.sim.seed << '\n'
     << "sde_seed: " << cfg.sde.seed << '\n'
     << "exit_code: " << code << '\n'
     << "wall_clock_seconds: " << seconds << '\n';
}

SchedulingPolicy make_policy(const ExperimentConfig& cfg, const QueueSystem& sys,
                             std::shared_ptr<const ControlField> field) {
  const auto& p = cfg.policy;
  if (p.kind == "priority") return SchedulingPolicy::static_priority(p.order);
  if (p.kind == "cmu-theta") return SchedulingPolicy::cmu_theta(sys, cfg.cost);
  if (p.kind == "fixed-fraction") {
    if (p.u.empty()) throw ConfigError("fixed-fraction policy needs policy.u");
    return SchedulingPolicy::fixed_fraction(SimplexControl(p.u));
  }
  if (p.kind == "markov-rounded") return SchedulingPolicy::markov_rounded(std::move(field), p.K);
  throw ConfigError("unknown policy kind " + p.kind);
}

ErgodicSolution solve(const ExperimentConfig& cfg) {
  return solve_ergodic(cfg.model, cfg.cost, cfg.grid(), cfg.truncation(), cfg.solver);
}

std::shared_ptr<const ControlField> optimal_field(const ExperimentConfig& cfg, double* rho) {
  auto sol = solve(cfg);
  if (rho) *rho = sol.rho;
  return std::make_shared<const ControlField>(std::move(sol.control));
}

template <class T>
bool strictly_decreasing(const std::vector<T>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] < v[i - 1])) return false;
  return true;
}

}  // namespace

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{
      "solve-hjb",        "simulate-queue",     "simulate-diffusion", "convergence",
      "truncation-sweep", "epsilon-bound",      "vanishing-discount", "lyapunov-check",
      "moment-check"};
  return kinds;
}

ConvergenceResult run_convergence(const ExperimentConfig& cfg) {
  if (cfg.n_ladder.empty()) throw ConfigError("n-ladder is empty");
  ConvergenceResult res;
  auto field = optimal_field(cfg, &res.rho_star);
  const auto rounded = SchedulingPolicy::markov_rounded(field, cfg.policy.K);
  const auto priority = SchedulingPolicy::static_priority(cfg.policy.order);
  for (std::size_t n : cfg.n_ladder) {
    const auto sys = QueueSystem::from_limit(cfg.classes, n);
    for (auto* which : {&res.rounded, &res.priority}) {
      const auto& policy = which == &res.rounded ? rounded : priority;
      const auto run = simulate_ergodic_cost(sys, policy, cfg.cost, cfg.sim);
      const double v = run.estimate.mean;
      which->push_back({n, v, run.estimate.std_error, res.rho_star,
                        std::abs(v - res.rho_star), run.fallback_count});
    }
  }
  res.has_trend = cfg.n_ladder.size() > 1;
  if (res.has_trend) res.gap_shrinks = res.rounded.back().gap < res.rounded.front().gap;
  for (const auto& row : res.priority)
    if (row.vhat < res.rho_star - 3.0 * row.std_error) res.lower_bound_ok = false;
  return res;
}

MomentReport run_moment_check(const ExperimentConfig& cfg) {
  if (cfg.moment_q <= 0 || cfg.moment_q % 2 != 0)
    throw ConfigError("moment order q must be an even positive integer");
  MomentReport rep;
  rep.q = cfg.moment_q;
  auto field = optimal_field(cfg, nullptr);
  const auto policy = SchedulingPolicy::markov_rounded(field, cfg.policy.K);
  for (std::size_t n : cfg.n_ladder) {
    const auto sys = QueueSystem::from_limit(cfg.classes, n);
    const double sn = std::sqrt(static_cast<double>(n));
    const int q = cfg.moment_q;
    StateObservable obs = [&sys, sn, q](std::span<const Count> x, std::span<const Count>) {
      double r2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double c = (static_cast<double>(x[i]) - sys.rho[i] * static_cast<double>(sys.n)) / sn;
        r2 += c * c;
      }
      return std::pow(r2, q / 2);
    };
    const auto run = simulate_queue(sys, policy, obs, cfg.sim);
    rep.rows.push_back({n, run.estimate.mean, run.estimate.std_error});
    rep.sup = std::max(rep.sup, run.estimate.mean);
  }
  if (rep.rows.size() > 1) {
    bool increasing = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
      if (!(rep.rows[i].moment > rep.rows[i - 1].moment)) increasing = false;
    rep.unbounded = increasing && rep.rows.back().moment > 2.0 * rep.rows.front().moment;
  }
  return rep;
}

VanishingReport run_vanishing_discount(const ExperimentConfig& cfg) {
  const Grid grid = cfg.grid();
  SolverOptions opts = cfg.solver;
  opts.epsilon = 0.0;
  const auto star = solve_ergodic(cfg.model, cfg.cost, grid, TruncationConfig::untruncated(grid), opts);
  VanishingReport rep;
  rep.rho_star = star.rho;
  std::vector<double> x(grid.dim()), errs, dists;
  for (double alpha : cfg.alphas) {
    SolverOptions dopts = opts;
    dopts.tol = std::max(opts.tol, 1e-7);
    std::vector<double> warm(star.V.values);
    for (double& v : warm) v += star.rho / alpha;
    dopts.warm_start = std::move(warm);
    const auto Va = solve_discounted(cfg.model, cfg.cost, grid, alpha, dopts);
    const double v0 = Va.values[grid.origin()];
    double dist = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
      grid.point(p, x);
      double n2 = 0.0;
      for (double c : x) n2 += c * c;
      if (std::sqrt(n2) > cfg.compact_radius + 1e-12) continue;
      dist = std::max(dist, std::abs(Va.values[p] - v0 - star.V.values[p]));
    }
    rep.rows.push_back({alpha, alpha * v0, std::abs(alpha * v0 - star.rho), dist});
    errs.push_back(rep.rows.back().error);
    dists.push_back(dist);
  }
  rep.error_decreasing = strictly_decreasing(errs);
  rep.distance_decreasing = strictly_decreasing(dists);
  return rep;
}

int run_experiment(const std::string& kind, const ExperimentConfig& cfg, const fs::path& out) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(out);
  int code = kExitOk;
  auto flag = [&](bool bad) {
    if (bad) code = kExitFlagged;
  };

  if (kind == "solve-hjb") {
    const Grid grid = cfg.grid();
    const auto sol = solve(cfg);
    const double resid = policy_residual(cfg.model, cfg.cost, grid, cfg.truncation(), sol, cfg.solver.epsilon);
    auto os = open_out(out / "solve_hjb.csv");
    os << "rho,iterations,span_residual,dt,policy_residual\n"
       << sol.rho << ',' << sol.iterations << ',' << sol.span_residual << ',' << sol.dt << ','
       << resid << '\n';
    auto fields = open_out(out / "fields.txt");
    write_fields(fields, grid, sol.V, sol.control);
  } else if (kind == "simulate-queue") {
    const auto sys = QueueSystem::from_limit(cfg.classes, cfg.sim_n);
    std::shared_ptr<const ControlField> field;
    if (cfg.policy.kind == "markov-rounded") field = optimal_field(cfg, nullptr);
    const auto policy = make_policy(cfg, sys, field);
    const auto run = simulate_ergodic_cost(sys, policy, cfg.cost, cfg.sim);
    auto os = open_out(out / "simulate_queue.csv");
    os << "n,policy,mean,std_error,horizon,replicas,fallback_count\n"
       << sys.n << ',' << policy.name() << ',' << run.estimate.mean << ','
       << run.estimate.std_error << ',' << run.estimate.horizon << ',' << run.estimate.replicas
       << ',' << run.fallback_count << '\n';
    flag(run.invariant_violations > 0);
  } else if (kind == "simulate-diffusion") {
    CostEstimate est;
    if (cfg.sde_control == "optimal") {
      auto field = optimal_field(cfg, nullptr);
      est = simulate_diffusion_cost(cfg.model, cfg.cost, field_control(*field), cfg.sde);
    } else if (cfg.sde_control == "u0") {
      est = simulate_diffusion_cost(cfg.model, cfg.cost, constant_control(cfg.trunc_u0), cfg.sde);
    } else {
      throw ConfigError("sde.control must be 'optimal' or 'u0'");
    }
    auto os = open_out(out / "simulate_diffusion.csv");
    os << "label,mean,std_error,dt,horizon\n"
       << cfg.sde_control << ',' << est.mean << ',' << est.std_error << ',' << cfg.sde.dt << ','
       << cfg.sde.horizon << '\n';
  } else if (kind == "convergence") {
    const auto res = run_convergence(cfg);
    auto os = open_out(out / "convergence.csv");
    os << "n,Vhat_n,std_error,rho_star,gap\n";
    for (const auto& r : res.rounded)
      os << r.n << ',' << r.vhat << ',' << r.std_error << ',' << r.rho_star << ',' << r.gap << '\n';
    auto ps = open_out(out / "convergence_priority.csv");
    ps << "n,Vhat_n,std_error,rho_star,gap\n";
    for (const auto& r : res.priority)
      ps << r.n << ',' << r.vhat << ',' << r.std_error << ',' << r.rho_star << ',' << r.gap << '\n';
    auto fs_ = open_out(out / "convergence_flags.txt");
    fs_ << "trend_checked: " << res.has_trend << "\ngap_shrinks: " << res.gap_shrinks
        << "\nlower_bound_ok: " << res.lower_bound_ok << '\n';
    flag(res.flagged());
  } else if (kind == "truncation-sweep") {
    const auto sweep = truncation_sweep(cfg.model, cfg.cost, cfg.grid(), cfg.l_values, cfg.solver);
    auto os = open_out(out / "truncation_sweep.csv");
    os << "l,rho_l\n";
    for (const auto& [l, rho] : sweep.rows) os << l << ',' << rho << '\n';
    flag(!sweep.monotone);
  } else if (kind == "epsilon-bound") {
    const auto cert = build_certificate(cfg.model, cfg.cost);
    const double k0 = k0_constant(cfg.cost, cfg.model.d, cert.c0, cert.delta);
    const auto rep = epsilon_bound_check(cfg.model, cfg.cost, cfg.grid(), cfg.truncation(),
                                         cfg.eps_values, k0, cfg.solver);
    auto os = open_out(out / "epsilon_bound.csv");
    os << "epsilon,rho_eps,rho_star,upper_bound,k0,ok\n";
    for (const auto& r : rep.rows)
      os << r.epsilon << ',' << r.rho_eps << ',' << rep.rho_star << ',' << r.upper_bound << ','
         << k0 << ',' << (r.ok ? 1 : 0) << '\n';
    flag(!rep.ok);
  } else if (kind == "vanishing-discount") {
    const auto rep = run_vanishing_discount(cfg);
    auto os = open_out(out / "vanishing_discount.csv");
    os << "alpha,alpha_V0,rho_star,abs_error,sup_distance\n";
    for (const auto& r : rep.rows)
      os << r.alpha << ',' << r.alpha_v0 << ',' << rep.rho_star << ',' << r.error << ','
         << r.sup_dist << '\n';
    flag(!rep.error_decreasing || !rep.distance_decreasing);
  } else if (kind == "lyapunov-check") {
    const auto cert = build_certificate(cfg.model, cfg.cost);
    const auto rep = check_drift_inequality(cert, cfg.model, cfg.lyapunov_samples, cert.R0,
                                            cfg.check_seed);
    auto os = open_out(out / "lyapunov_check.txt");
    os << "Q:\n" << cert.Q << '\n'
       << "kappa0: " << cert.kappa0 << '\n'
       << "C: " << cert.C << '\n'
       << "delta: " << cert.delta << '\n'
       << "c0: " << cert.c0 << '\n'
       << "c1: " << cert.c1 << '\n'
       << "R0: " << cert.R0 << '\n'
       << "k0: " << k0_constant(cfg.cost, cfg.model.d, cert.c0, cert.delta) << '\n'
       << "samples: " << rep.points << '\n'
       << "violation_fraction: " << rep.violation_fraction() << '\n'
       << "worst_margin: " << rep.worst_margin << '\n';
    flag(rep.violations > 0);
  } else if (kind == "moment-check") {
    const auto rep = run_moment_check(cfg);
    auto os = open_out(out / "moment_check.csv");
    os << "n,moment,std_error\n";
    for (const auto& r : rep.rows) os << r.n << ',' << r.moment << ',' << r.std_error << '\n';
    auto fs_ = open_out(out / "moment_flags.txt");
    fs_ << "q: " << rep.q << "\nsup: " << rep.sup << "\nunbounded: " << rep.unbounded << '\n';
    flag(rep.unbounded);
  } else {
    throw ConfigError("unknown experiment kind " + kind);
  }

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_manifest(out, kind, cfg, secs, code);
  return code;
}

}  // namespace ergodic_hw
