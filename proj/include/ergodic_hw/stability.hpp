#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>

#include "ergodic_hw/model.hpp"

namespace ergodic_hw {

/// Quadratic-power Lyapunov certificate V(x) = [x'Qx]^(m/2) with
///   L^u V(x) <= 1 - c0 |x|^m 1{K^c}(x) + c1 [(e.x)^+]^m 1{K}(x),  |x| >= R0,
/// where K = {x : delta |x| < (e.x)^+}.
struct StabilityCertificate {
  Eigen::MatrixXd Q;
  double kappa0 = 0.0;
  double C = 0.0;
  double delta = 0.0;
  double c0 = 0.0;
  double c1 = 0.0;
  double R0 = 1.0;
  double m = 1.0;
};

/// Symmetric Q with QR + R'Q = 2I. Throws ConfigError if R is not a
/// nonsingular M-matrix or Q is not positive definite.
Eigen::MatrixXd lyapunov_matrix(const Eigen::MatrixXd& R);

StabilityCertificate build_certificate(const DiffusionModel& model, const RunningCost& cost);

bool in_cone(const StabilityCertificate& cert, std::span<const double> x);

double lyapunov_value(const StabilityCertificate& cert, std::span<const double> x);

/// L^u V(x) from the closed-form gradient and Hessian.
double lyapunov_generator(const StabilityCertificate& cert, const DiffusionModel& model,
                          std::span<const double> x, const SimplexControl& u);

/// Right-hand side of the drift inequality.
double drift_bound(const StabilityCertificate& cert, std::span<const double> x);

struct DriftCheckReport {
  std::size_t points = 0;
  std::size_t evaluations = 0;
  std::size_t violations = 0;
  double worst_margin = 0.0;
  double violation_fraction() const {
    return points ? static_cast<double>(violations) / static_cast<double>(points) : 0.0;
  }
};

/// Samples points with |x| >= R0 and vertex plus random interior controls.
DriftCheckReport check_drift_inequality(const StabilityCertificate& cert,
                                        const DiffusionModel& model, std::size_t samples,
                                        double R0, std::uint64_t seed,
                                        double slack = 1e-8);

}  // namespace ergodic_hw
