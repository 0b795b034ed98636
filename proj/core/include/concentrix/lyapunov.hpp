#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "concentrix/dynamics.hpp"

namespace concentrix {

/// Exponential Lyapunov condition
///   int exp(alpha_hat |y|^2) P(x, dy) <= C exp(beta |x|^2),  beta < alpha_hat.
struct ExpLyapunovCertificate {
  double alpha_hat = 0.0;
  double beta = 0.0;
  double constant = 0.0;  // C

  /// Throws Error(kInvalidArgument) unless 0 <= beta < alpha_hat and C > 0.
  /// (beta = 0 arises for gamma = 0 and only strengthens the condition.)
  static ExpLyapunovCertificate make(double alpha_hat, double beta,
                                     double constant);
};

/// Geometric drift PW <= eta W + C_hat for W(x) = exp(alpha_hat |x|^2).
struct DriftPair {
  double eta = 0.0;
  double c_hat = 0.0;
  double alpha_hat = 0.0;
  /// Split radius R^2 used to build the pair; absent on the small-C branch.
  std::optional<double> split_radius_sq;

  /// Bound on the stationary moment int W d(mu_pi) = C_hat / (1 - eta).
  double stationary_moment_bound() const { return c_hat / (1.0 - eta); }
};

enum class LyapunovKind { kNorm, kExpSquare };

/// V(x) = |x|_2, or W(x) = exp(alpha |x|^2).
struct LyapunovFunction {
  LyapunovKind kind = LyapunovKind::kNorm;
  double alpha = 0.0;

  static LyapunovFunction norm() { return {}; }
  static LyapunovFunction exp_square(double alpha) {
    return {LyapunovKind::kExpSquare, alpha};
  }
  double operator()(const Eigen::Ref<const Vector>& x) const;
  std::string name() const;
};

/// PV <= gamma V + K.
struct GeometricDriftCertificate {
  double gamma = 0.0;
  double k = 0.0;
  LyapunovFunction v = LyapunovFunction::norm();
};

struct HarrisMetricSpec {
  double beta_star = 1.0;
  LyapunovFunction v = LyapunovFunction::norm();
};

struct MinorizationEstimate {
  double beta = 0.0;
  double small_set_radius = 0.0;
  double truncation_lo = 0.0;
  double truncation_hi = 0.0;
  std::size_t resolution = 0;
  std::size_t small_set_points = 0;
  /// The estimate underestimates the true minorization mass up to
  /// quadrature error (truncation and the finite small-set grid both bias it
  /// down or leave it exact for linear kernels).
  bool lower_bound = true;
};

/// (1 - 2 alpha)^{-n/2} exp(|m|^2 alpha / (1 - 2 alpha)) = E exp(alpha |y|^2)
/// for y ~ N(m, I_n). Throws Error(kDivergentMgf) unless 0 < alpha < 1/2.
double gaussian_exp_square_moment(const Eigen::Ref<const Vector>& mean,
                                  double alpha);

/// int exp(alpha |y|^2) P_j(x, dy) for the kernel N(A_j x, I_n).
double stein_mgf(const Eigen::Ref<const Matrix>& a_j,
                 const Eigen::Ref<const Vector>& x, double alpha);

/// Largest admissible alpha_hat (exclusive) for contraction gamma.
inline double max_alpha_hat(double gamma) { return 0.5 * (1.0 - gamma * gamma); }

/// beta = gamma^2 alpha / (1 - 2 alpha),
/// C = (1 - 2 alpha)^{-n/2} exp(L^2 rho^2 alpha / (1 - 2 alpha)).
/// Runs check_slds_hypothesis first; throws Error(kHypothesisFailed) if it
/// fails and Error(kInvalidAlpha) unless alpha_hat in (0, (1-gamma^2)/2).
ExpLyapunovCertificate slds_exp_lyapunov(const SystemSpec& spec, double rho,
                                         double gamma, double lipschitz_bound,
                                         double alpha_hat);

/// Turns the exponential Lyapunov bound into PW <= eta W + C_hat. If
/// C <= 1/2 the pair (C, C) works directly; otherwise split at
/// R^2 = ln(2C) / (alpha_hat - beta) so that eta = 1/2 outside the ball and
/// C_hat = C exp(beta R^2) inside it.
DriftPair drift_from_exp_lyapunov(const ExpLyapunovCertificate& cert);

/// Right-hand side of the drift inequality at x: eta W(x) + C_hat.
double drift_rhs(const DriftPair& drift, const Eigen::Ref<const Vector>& x);

struct PointwiseDriftCheck {
  std::size_t points = 0;
  std::size_t violations = 0;
  /// max over points of (PW(x) - (eta W(x) + C_hat)) / (eta W(x) + C_hat).
  double worst_relative_margin = 0.0;
  bool passed() const { return violations == 0; }
};

/// Exact check of PW <= eta W + C_hat at each x, with PW from stein_mgf of the
/// region matrix at x. No sampling.
PointwiseDriftCheck pointwise_drift_check(const SystemSpec& spec,
                                          const DriftPair& drift,
                                          const std::vector<Vector>& xs);

/// T1 constant (1 + ln M) / alpha_hat of the stationary law, where
/// M = max(C_hat / (1 - eta), 1) bounds int W d(mu_pi) (W >= 1 so the true
/// moment is never below 1).
double te_constant(const DriftPair& drift);

/// eta^n W(x0) + C_hat (1 - eta^n) / (1 - eta), a bound on P^n W(x0).
double n_step_w_bound(const DriftPair& drift, double w_x0, std::size_t n);

/// sqrt(2 (1 + ln P^nW(x0)) / alpha_hat): the coefficient multiplying
/// sqrt(Ent(nu | P^n(x0, .))) in the n-step transport-entropy bound.
double n_step_te_coefficient(const DriftPair& drift, double w_x0,
                             std::size_t n);

/// gamma and K = sqrt(n + L^2 rho^2) with V = |x|_2.
GeometricDriftCertificate slds_geometric_drift(const SystemSpec& spec,
                                               double rho, double gamma,
                                               double lipschitz_bound);

struct DriftPoint {
  Vector x;
  double v = 0.0;
  double pv_mean = 0.0;
  double pv_stderr = 0.0;
  std::optional<double> analytic_rhs;  // gamma V + K
  std::optional<bool> within_analytic;  // pv_mean <= rhs + 3 stderr
};

struct DriftFit {
  double gamma_hat = 0.0;
  double k_hat = 0.0;
};

struct DriftCheckReport {
  LyapunovFunction v;
  std::size_t samples_per_point = 0;
  std::uint64_t seed = 0;
  std::vector<DriftPoint> points;
  std::optional<DriftFit> fit;  // absent for fewer than two distinct V values
  std::optional<GeometricDriftCertificate> analytic;
  bool all_within_analytic = true;
};

/// Monte Carlo estimate of PV at each grid point (M one-step samples per
/// point, point i uses derive_seed(seed, i)) plus an ordinary least-squares
/// fit PV ~ gamma V + K with intercept. Throws Error(kInvalidArgument) if
/// M < 1000 or the grid is empty.
DriftCheckReport empirical_drift_check(
    const SystemSpec& spec, const LyapunovFunction& v,
    const std::vector<Vector>& x_grid, std::size_t samples_per_point,
    std::uint64_t seed,
    const std::optional<GeometricDriftCertificate>& analytic = std::nullopt);

/// Lower estimate of the minorization mass for the small set
/// S = {|x| <= R}: integral over the truncation box of
///   min_{x in grid(S)} phi(y - A_{j(x)} x),
/// phi the standard normal density, by the tensor trapezoid rule with
/// `resolution` nodes per axis. The small-set grid is the lattice of the same
/// spacing anchored at 0, plus 4*resolution boundary points (n = 2) or +-R
/// (n = 1). Throws Error(kUnsupportedDimension) for n > 2.
MinorizationEstimate minorization_beta(const SystemSpec& spec,
                                       double small_set_radius,
                                       double truncation_lo,
                                       double truncation_hi,
                                       std::size_t resolution);

/// (2 + b V(x) + b V(y)) for x != y, 0 for x == y.
double harris_distance(const HarrisMetricSpec& metric,
                       const Eigen::Ref<const Vector>& x,
                       const Eigen::Ref<const Vector>& y);

}  // namespace concentrix
