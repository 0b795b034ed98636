#include "concentrix/lyapunov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "concentrix/errors.hpp"
#include "concentrix/rng.hpp"

namespace concentrix {

ExpLyapunovCertificate ExpLyapunovCertificate::make(double alpha_hat,
                                                    double beta,
                                                    double constant) {
  if (!(alpha_hat > 0.0) || !(beta >= 0.0) || !(beta < alpha_hat) ||
      !(constant > 0.0) || !std::isfinite(constant)) {
    std::ostringstream os;
    os << "invalid exponential Lyapunov certificate (alpha_hat=" << alpha_hat
       << ", beta=" << beta << ", C=" << constant
       << "); need 0 <= beta < alpha_hat and 0 < C < inf";
    throw Error(ErrorKind::kInvalidArgument, os.str());
  }
  return {alpha_hat, beta, constant};
}

double LyapunovFunction::operator()(const Eigen::Ref<const Vector>& x) const {
  switch (kind) {
    case LyapunovKind::kNorm: return x.norm();
    case LyapunovKind::kExpSquare: return std::exp(alpha * x.squaredNorm());
  }
  return 0.0;
}

std::string LyapunovFunction::name() const {
  if (kind == LyapunovKind::kNorm) return "norm";
  std::ostringstream os;
  os << "exp_square(" << alpha << ")";
  return os.str();
}

double gaussian_exp_square_moment(const Eigen::Ref<const Vector>& mean,
                                  double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) {
    std::ostringstream os;
    os << "E exp(alpha |y|^2) diverges unless 0 < alpha < 1/2; got alpha="
       << alpha;
    throw Error(ErrorKind::kDivergentMgf, os.str());
  }
  const double denom = 1.0 - 2.0 * alpha;
  const double n = static_cast<double>(mean.size());
  return std::pow(denom, -0.5 * n) *
         std::exp(mean.squaredNorm() * alpha / denom);
}

double stein_mgf(const Eigen::Ref<const Matrix>& a_j,
                 const Eigen::Ref<const Vector>& x, double alpha) {
  if (a_j.cols() != x.size() || a_j.rows() != a_j.cols()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "stein_mgf: matrix and state dimensions differ");
  }
  const Vector mean = a_j * x;
  return gaussian_exp_square_moment(mean, alpha);
}

ExpLyapunovCertificate slds_exp_lyapunov(const SystemSpec& spec, double rho,
                                         double gamma, double lipschitz_bound,
                                         double alpha_hat) {
  const auto hypothesis =
      check_slds_hypothesis(spec, rho, gamma, lipschitz_bound);
  if (!hypothesis.passed) {
    std::ostringstream os;
    os << "switched-system hypothesis fails at region "
       << *hypothesis.violating_region;
    throw Error(ErrorKind::kHypothesisFailed, os.str());
  }
  if (!(alpha_hat > 0.0 && alpha_hat < max_alpha_hat(gamma))) {
    std::ostringstream os;
    os << "alpha_hat must lie in (0, " << max_alpha_hat(gamma)
       << ") for gamma=" << gamma << "; got " << alpha_hat;
    throw Error(ErrorKind::kInvalidAlpha, os.str());
  }
  const double denom = 1.0 - 2.0 * alpha_hat;
  const double n = static_cast<double>(spec.dimension());
  const double beta = gamma * gamma * alpha_hat / denom;
  const double lr = lipschitz_bound * rho;
  const double constant =
      std::pow(denom, -0.5 * n) * std::exp(lr * lr * alpha_hat / denom);
  return ExpLyapunovCertificate::make(alpha_hat, beta, constant);
}

DriftPair drift_from_exp_lyapunov(const ExpLyapunovCertificate& cert) {
  DriftPair drift;
  drift.alpha_hat = cert.alpha_hat;
  if (cert.constant <= 0.5) {
    drift.eta = cert.constant;
    drift.c_hat = cert.constant;
    return drift;
  }
  const double r_sq = std::log(2.0 * cert.constant) /
                      (cert.alpha_hat - cert.beta);
  drift.eta = 0.5;
  drift.c_hat = cert.constant * std::exp(cert.beta * r_sq);
  drift.split_radius_sq = r_sq;
  return drift;
}

double drift_rhs(const DriftPair& drift, const Eigen::Ref<const Vector>& x) {
  return drift.eta * std::exp(drift.alpha_hat * x.squaredNorm()) + drift.c_hat;
}

PointwiseDriftCheck pointwise_drift_check(const SystemSpec& spec,
                                          const DriftPair& drift,
                                          const std::vector<Vector>& xs) {
  PointwiseDriftCheck out;
  out.points = xs.size();
  out.worst_relative_margin = -std::numeric_limits<double>::infinity();
  for (const auto& x : xs) {
    const double pw = stein_mgf(spec.matrix_at(x), x, drift.alpha_hat);
    const double rhs = drift_rhs(drift, x);
    const double margin = (pw - rhs) / rhs;
    out.worst_relative_margin = std::max(out.worst_relative_margin, margin);
    if (!(pw <= rhs)) ++out.violations;
  }
  return out;
}

double te_constant(const DriftPair& drift) {
  const double moment = std::max(drift.stationary_moment_bound(), 1.0);
  return (1.0 + std::log(moment)) / drift.alpha_hat;
}

double n_step_w_bound(const DriftPair& drift, double w_x0, std::size_t n) {
  if (!(w_x0 >= 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "n_step_w_bound: W(x0) >= 1 since W = exp(alpha |x|^2)");
  }
  if (n == 0) return w_x0;
  const double eta_n = std::pow(drift.eta, static_cast<double>(n));
  return eta_n * w_x0 + drift.c_hat * (1.0 - eta_n) / (1.0 - drift.eta);
}

double n_step_te_coefficient(const DriftPair& drift, double w_x0,
                             std::size_t n) {
  const double pw = std::max(n_step_w_bound(drift, w_x0, n), 1.0);
  return std::sqrt(2.0 * (1.0 + std::log(pw)) / drift.alpha_hat);
}

GeometricDriftCertificate slds_geometric_drift(const SystemSpec& spec,
                                               double rho, double gamma,
                                               double lipschitz_bound) {
  const auto hypothesis =
      check_slds_hypothesis(spec, rho, gamma, lipschitz_bound);
  if (!hypothesis.passed) {
    std::ostringstream os;
    os << "switched-system hypothesis fails at region "
       << *hypothesis.violating_region;
    throw Error(ErrorKind::kHypothesisFailed, os.str());
  }
  const double n = static_cast<double>(spec.dimension());
  const double lr = lipschitz_bound * rho;
  return {gamma, std::sqrt(n + lr * lr), LyapunovFunction::norm()};
}

DriftCheckReport empirical_drift_check(
    const SystemSpec& spec, const LyapunovFunction& v,
    const std::vector<Vector>& x_grid, std::size_t samples_per_point,
    std::uint64_t seed,
    const std::optional<GeometricDriftCertificate>& analytic) {
  if (samples_per_point < 1000) {
    throw Error(ErrorKind::kInvalidArgument,
                "empirical_drift_check: need at least 1000 samples per point");
  }
  if (x_grid.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                "empirical_drift_check: empty grid");
  }
  DriftCheckReport report;
  report.v = v;
  report.samples_per_point = samples_per_point;
  report.seed = seed;
  report.analytic = analytic;

  const Eigen::Index n = spec.dimension();
  Vector noise(n);
  Vector y(n);
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    const Vector& x = x_grid[i];
    if (x.size() != n) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "empirical_drift_check: grid point dimension");
    }
    GaussianNoise rng(derive_seed(seed, i));
    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t s = 0; s < samples_per_point; ++s) {
      rng.fill(noise);
      step_into(spec, x, noise, y);
      const double value = v(y);
      sum += value;
      sum_sq += value * value;
    }
    const double m = static_cast<double>(samples_per_point);
    DriftPoint point;
    point.x = x;
    point.v = v(x);
    point.pv_mean = sum / m;
    const double var =
        std::max(sum_sq / m - point.pv_mean * point.pv_mean, 0.0) * m /
        (m - 1.0);
    point.pv_stderr = std::sqrt(var / m);
    if (analytic) {
      point.analytic_rhs = analytic->gamma * point.v + analytic->k;
      point.within_analytic =
          point.pv_mean <= *point.analytic_rhs + 3.0 * point.pv_stderr;
      report.all_within_analytic =
          report.all_within_analytic && *point.within_analytic;
    }
    report.points.push_back(std::move(point));
  }

  // OLS of PV on V with intercept.
  double mean_v = 0.0;
  double mean_pv = 0.0;
  for (const auto& p : report.points) {
    mean_v += p.v;
    mean_pv += p.pv_mean;
  }
  mean_v /= static_cast<double>(report.points.size());
  mean_pv /= static_cast<double>(report.points.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& p : report.points) {
    sxx += (p.v - mean_v) * (p.v - mean_v);
    sxy += (p.v - mean_v) * (p.pv_mean - mean_pv);
  }
  if (report.points.size() >= 2 && sxx > 0.0) {
    DriftFit fit;
    fit.gamma_hat = sxy / sxx;
    fit.k_hat = mean_pv - fit.gamma_hat * mean_v;
    report.fit = fit;
  }
  return report;
}

namespace {

std::vector<Vector> small_set_grid(Eigen::Index n, double radius, double h,
                                   std::size_t resolution) {
  std::vector<Vector> points;
  const auto steps = static_cast<long>(std::floor(radius / h + 1e-12));
  if (n == 1) {
    for (long k = -steps; k <= steps; ++k) {
      points.push_back(Vector::Constant(1, static_cast<double>(k) * h));
    }
    points.push_back(Vector::Constant(1, radius));
    points.push_back(Vector::Constant(1, -radius));
    return points;
  }
  for (long i = -steps; i <= steps; ++i) {
    for (long j = -steps; j <= steps; ++j) {
      Vector p(2);
      p << static_cast<double>(i) * h, static_cast<double>(j) * h;
      if (p.norm() <= radius) points.push_back(std::move(p));
    }
  }
  const std::size_t boundary = 4 * resolution;
  for (std::size_t k = 0; k < boundary; ++k) {
    const double theta =
        2.0 * std::numbers::pi * static_cast<double>(k) / boundary;
    Vector p(2);
    p << radius * std::cos(theta), radius * std::sin(theta);
    points.push_back(std::move(p));
  }
  return points;
}

}  // namespace

MinorizationEstimate minorization_beta(const SystemSpec& spec,
                                       double small_set_radius,
                                       double truncation_lo,
                                       double truncation_hi,
                                       std::size_t resolution) {
  const Eigen::Index n = spec.dimension();
  if (n > 2) {
    throw Error(ErrorKind::kUnsupportedDimension,
                "minorization_beta supports dimension 1 or 2 only");
  }
  if (!(small_set_radius >= 0.0) || !(truncation_hi > truncation_lo) ||
      resolution < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "minorization_beta: need R >= 0, lo < hi, resolution >= 2");
  }
  const double h =
      (truncation_hi - truncation_lo) / static_cast<double>(resolution - 1);

  std::vector<Vector> means;
  for (const auto& x : small_set_grid(n, small_set_radius, h, resolution)) {
    means.push_back(spec.matrix_at(x) * x);
  }

  const double norm_const =
      std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(n));
  auto node = [&](std::size_t i) {
    return truncation_lo + static_cast<double>(i) * h;
  };
  auto weight = [&](std::size_t i) {
    return (i == 0 || i + 1 == resolution) ? 0.5 * h : h;
  };
  // min over the small set of phi(y - m) = phi at the farthest mean.
  auto lower_density = [&](const Vector& y) {
    double far_sq = 0.0;
    for (const auto& m : means) far_sq = std::max(far_sq, (y - m).squaredNorm());
    return norm_const * std::exp(-0.5 * far_sq);
  };

  double total = 0.0;
  Vector y(n);
  if (n == 1) {
    for (std::size_t i = 0; i < resolution; ++i) {
      y[0] = node(i);
      total += weight(i) * lower_density(y);
    }
  } else {
    for (std::size_t i = 0; i < resolution; ++i) {
      for (std::size_t j = 0; j < resolution; ++j) {
        y << node(i), node(j);
        total += weight(i) * weight(j) * lower_density(y);
      }
    }
  }

  MinorizationEstimate estimate;
  estimate.beta = std::clamp(total, 0.0, 1.0);
  estimate.small_set_radius = small_set_radius;
  estimate.truncation_lo = truncation_lo;
  estimate.truncation_hi = truncation_hi;
  estimate.resolution = resolution;
  estimate.small_set_points = means.size();
  return estimate;
}

double harris_distance(const HarrisMetricSpec& metric,
                       const Eigen::Ref<const Vector>& x,
                       const Eigen::Ref<const Vector>& y) {
  if (x.size() == y.size() && x == y) return 0.0;
  return 2.0 + metric.beta_star * metric.v(x) + metric.beta_star * metric.v(y);
}

}  // namespace concentrix
