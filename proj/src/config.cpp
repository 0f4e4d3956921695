#include "ergodic_hw/config.hpp"

#include <cmath>
#include <fstream>

namespace ergodic_hw {

namespace {

using nlohmann::json;

const json* section(const json& j, const char* key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

template <class T>
T get_or(const json* j, const char* key, T fallback) {
  if (!j) return fallback;
  auto it = j->find(key);
  return it == j->end() ? fallback : it->get<T>();
}

Vec vec_or_scalar(const json& v, std::size_t d) {
  if (v.is_array()) {
    auto out = v.get<Vec>();
    if (out.size() != d) throw ConfigError("grid vector has wrong length");
    return out;
  }
  return Vec(d, v.get<double>());
}

Vec required_vec(const json& j, const char* key, std::size_t d) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(std::string("missing key ") + key);
  auto v = it->get<Vec>();
  if (v.size() != d) throw ConfigError(std::string(key) + " must have d entries");
  return v;
}

}  // namespace

void ExperimentConfig::set_seed(std::uint64_t seed) {
  sim.seed = seed;
  sde.seed = seed;
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig cfg;
  cfg.raw = j;
  try {
    const auto d = j.at("d").get<std::size_t>();
    if (d == 0) throw ConfigError("d must be positive");
    const Vec lambda = required_vec(j, "lambda", d);
    const Vec mu = required_vec(j, "mu", d);
    const Vec gamma = required_vec(j, "gamma", d);
    const Vec lambda_hat = j.contains("lambda_hat") ? required_vec(j, "lambda_hat", d) : Vec(d, 0.0);
    const Vec mu_hat = j.contains("mu_hat") ? required_vec(j, "mu_hat", d) : Vec(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      cfg.classes.push_back({lambda[i], mu[i], gamma[i], lambda_hat[i], mu_hat[i]});
    cfg.model = build_limit_model(cfg.classes);

    const json& cost = j.at("cost");
    cfg.cost = RunningCost(cost.value("m", 1.0), required_vec(cost, "h", d));

    // Grid: default half width is 6 stationary standard deviations.
    const json* grid = section(j, "grid");
    const double h_default = d == 1 ? 0.01 : 0.1;
    cfg.grid_h = grid && grid->contains("h") ? vec_or_scalar(grid->at("h"), d) : Vec(d, h_default);
    if (grid && grid->contains("L")) {
      cfg.grid_L = vec_or_scalar(grid->at("L"), d);
    } else {
      double scale = 0.0;
      for (std::size_t i = 0; i < d; ++i) scale = std::max(scale, std::sqrt(lambda[i] / mu[i]));
      cfg.grid_L.resize(d);
      for (std::size_t i = 0; i < d; ++i)
        cfg.grid_L[i] = std::ceil(6.0 * scale / cfg.grid_h[i]) * cfg.grid_h[i];
    }
    (void)Grid(d, cfg.grid_L, cfg.grid_h);  // validates spacing and size
    double min_L = cfg.grid_L[0];
    for (double v : cfg.grid_L) min_L = std::min(min_L, v);

    const json* trunc = section(j, "trunc");
    cfg.trunc_l = get_or(trunc, "l", min_L);
    cfg.trunc_u0 = trunc && trunc->contains("u0")
                       ? SimplexControl(required_vec(*trunc, "u0", d))
                       : SimplexControl::vertex(d, d - 1);

    const json* solver = section(j, "solver");
    cfg.solver.tol = get_or(solver, "tol", 1e-8);
    cfg.solver.max_iters = get_or<std::size_t>(solver, "max_iters", 20'000'000);
    cfg.solver.epsilon = get_or(solver, "epsilon", 0.0);

    const json* sim = section(j, "sim");
    cfg.sim_n = get_or<std::size_t>(sim, "n", 100);
    if (sim && sim->contains("n_ladder")) cfg.n_ladder = sim->at("n_ladder").get<std::vector<std::size_t>>();
    cfg.sim.horizon = get_or(sim, "horizon", 1000.0);
    cfg.sim.burn_in = get_or(sim, "burn_in", 0.1 * cfg.sim.horizon);
    cfg.sim.replicas = get_or(sim, "replicas", 4);
    cfg.sim.seed = get_or<std::uint64_t>(sim, "seed", 1);

    const json* policy = section(j, "policy");
    cfg.policy.kind = get_or<std::string>(policy, "kind", "markov-rounded");
    cfg.policy.K = get_or(policy, "K", 10.0);
    if (policy && policy->contains("order")) {
      for (auto k : policy->at("order").get<std::vector<std::size_t>>()) {
        if (k == 0 || k > d) throw ConfigError("policy.order entries are 1-based class indices");
        cfg.policy.order.push_back(k - 1);
      }
    } else {
      for (std::size_t i = 0; i < d; ++i) cfg.policy.order.push_back(i);
    }
    if (policy && policy->contains("u")) cfg.policy.u = required_vec(*policy, "u", d);

    const json* sde = section(j, "sde");
    cfg.sde.dt = get_or(sde, "dt", 1e-3);
    cfg.sde.horizon = get_or(sde, "horizon", 2e4);
    cfg.sde.burn_in = get_or(sde, "burn_in", 0.1 * cfg.sde.horizon);
    cfg.sde.replicas = get_or(sde, "replicas", 4);
    cfg.sde.seed = get_or<std::uint64_t>(sde, "seed", 1);
    cfg.sde_control = get_or<std::string>(sde, "control", "optimal");
    double max_L = 0.0;
    for (double v : cfg.grid_L) max_L = std::max(max_L, v);
    cfg.sde.divergence_radius = 10.0 * max_L;

    const json* exp = section(j, "experiment");
    if (exp && exp->contains("l_values")) {
      cfg.l_values = exp->at("l_values").get<std::vector<double>>();
    } else {
      for (double l = 1.0; l <= min_L + 1e-12; l += 1.0) cfg.l_values.push_back(l);
    }
    if (exp && exp->contains("eps_values")) cfg.eps_values = exp->at("eps_values").get<std::vector<double>>();
    if (exp && exp->contains("alphas")) cfg.alphas = exp->at("alphas").get<std::vector<double>>();
    cfg.moment_q = get_or(exp, "q", 2);
    cfg.lyapunov_samples = get_or<std::size_t>(exp, "samples", 10000);
    cfg.compact_radius = get_or(exp, "compact_radius", 3.0);
    cfg.check_seed = get_or<std::uint64_t>(exp, "seed", 11);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path + ": " + e.what());
  }
  return parse_config(j);
}

std::uint64_t config_hash(const nlohmann::json& j) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace ergodic_hw
