#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ergodic_hw {

using Vec = std::vector<double>;

/// Thrown for any parameter set that violates a model precondition.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Limit parameters for one customer class.
struct ClassParams {
  double lambda = 0.0;
  double mu = 0.0;
  double gamma = 0.0;
  double lambda_hat = 0.0;
  double mu_hat = 0.0;
};

inline constexpr double kOfferedLoadTol = 1e-9;

/// Point of the simplex S = {u >= 0, e.u = 1}.
class SimplexControl {
 public:
  SimplexControl() = default;
  explicit SimplexControl(Vec u);

  /// Unit vector e_i (0-based index).
  static SimplexControl vertex(std::size_t d, std::size_t i);

  std::size_t size() const { return u_.size(); }
  double operator[](std::size_t i) const { return u_[i]; }
  std::span<const double> values() const { return u_; }

 private:
  Vec u_;
};

/// Limiting diffusion dX = b(X,U)dt + Sigma dW with diagonal R, Gamma, Sigma.
struct DiffusionModel {
  std::size_t d = 0;
  Vec ell;
  Vec mu;     // diagonal of R
  Vec gamma;  // diagonal of Gamma
  Vec sigma;  // diagonal of Sigma, sigma_i^2 = 2 lambda_i
  Vec lambda;
  Vec rho;    // lambda_i / mu_i
  double rho_hat = 0.0;

  double variance(std::size_t i) const { return sigma[i] * sigma[i]; }
};

/// Power running cost r(q) = sum_i h_i q_i^m.
struct RunningCost {
  double m = 1.0;
  Vec h;
  double c1 = 0.0;
  double c2 = 0.0;

  RunningCost() = default;
  RunningCost(double m, Vec h);

  /// r(q) for a queue vector q >= 0.
  double operator()(std::span<const double> q) const;
  bool is_zero() const;
};

DiffusionModel build_limit_model(std::span<const ClassParams> classes);

/// (e.x)^+
double queue_mass(std::span<const double> x);

Vec drift(const DiffusionModel& model, std::span<const double> x,
          const SimplexControl& u);

/// r~(x,u) = r((e.x)^+ u)
double running_cost(const RunningCost& cost, std::span<const double> x,
                    const SimplexControl& u);

/// u-independent dominating function c2 + c2 d^(m-1) |x|^m.
double h_tilde(const RunningCost& cost, std::span<const double> x);

/// k0 = 2 c2 d^(m-1) / (1 ^ c0 ^ c1 delta^m), c1 being the cost's lower growth constant.
double k0_constant(const RunningCost& cost, std::size_t d, double c0,
                   double delta);

}  // namespace ergodic_hw
