#include "concentrix/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "concentrix/errors.hpp"

namespace concentrix {

namespace {

constexpr double kPsdTolerance = 1e-9;

void require_contraction(double lambda_hat, const char* what) {
  if (!(lambda_hat >= 0.0 && lambda_hat < 1.0)) {
    std::ostringstream os;
    os << what << ": contraction factor must lie in [0, 1), got " << lambda_hat;
    throw Error(ErrorKind::kNotContractive, os.str());
  }
}

Matrix checked_symmetric(const Eigen::Ref<const Matrix>& s, const char* what) {
  if (s.rows() != s.cols()) {
    throw Error(ErrorKind::kDimensionMismatch,
                std::string(what) + " must be square");
  }
  if (!s.allFinite()) {
    throw Error(ErrorKind::kNonFinite, std::string(what) + " is not finite");
  }
  const double scale = std::max(1.0, s.cwiseAbs().maxCoeff());
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > kPsdTolerance * scale) {
    throw Error(ErrorKind::kNotPsd, std::string(what) + " is not symmetric");
  }
  return 0.5 * (s + s.transpose());
}

// Square root of a symmetric PSD matrix; eigenvalues in (-tol, 0) clamp to 0.
Matrix psd_sqrt(const Matrix& s, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(s);
  const Vector& values = eig.eigenvalues();
  if (values.size() > 0 && values.minCoeff() < -kPsdTolerance) {
    std::ostringstream os;
    os << what << " has eigenvalue " << values.minCoeff();
    throw Error(ErrorKind::kNotPsd, os.str());
  }
  const Vector roots = values.cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() *
         eig.eigenvectors().transpose();
}

}  // namespace

double ConcentrationCertificate::tail_bound(double eps) const {
  return trajectory_deviation_bound(*this, eps);
}

std::pair<T1Certificate, ContractionCertificate> lds_certificate(
    const Eigen::Ref<const Matrix>& a) {
  const double norm = spectral_norm(a);
  if (!(norm < 1.0)) {
    std::ostringstream os;
    os << "lds is not contractive: ||A||_2 = " << norm << " >= 1";
    throw Error(ErrorKind::kNotContractive, os.str());
  }
  return {T1Certificate{1.0, MetricTag::kEuclidean},
          ContractionCertificate{norm}};
}

double gaussian_w2(const Eigen::Ref<const Vector>& m1,
                   const Eigen::Ref<const Matrix>& s1,
                   const Eigen::Ref<const Vector>& m2,
                   const Eigen::Ref<const Matrix>& s2) {
  const Eigen::Index n = m1.size();
  if (m2.size() != n || s1.rows() != n || s2.rows() != n) {
    throw Error(ErrorKind::kDimensionMismatch,
                "gaussian_w2: means and covariances must share a dimension");
  }
  const Matrix a = checked_symmetric(s1, "gaussian_w2: first covariance");
  const Matrix b = checked_symmetric(s2, "gaussian_w2: second covariance");
  const Matrix a_half = psd_sqrt(a, "gaussian_w2: first covariance");
  // Validates b as PSD.
  psd_sqrt(b, "gaussian_w2: second covariance");

  Matrix cross = a_half * b * a_half;
  cross = 0.5 * (cross + cross.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(cross, Eigen::EigenvaluesOnly);
  const double cross_trace = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

  const double w2_sq = (m1 - m2).squaredNorm() + a.trace() + b.trace() -
                       2.0 * cross_trace;
  return std::sqrt(std::max(w2_sq, 0.0));
}

double tensorized_constant(double constant, double lambda_hat,
                           std::size_t samples) {
  require_contraction(lambda_hat, "tensorized_constant");
  if (!(constant > 0.0) || samples == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "tensorized_constant: need C > 0 and N >= 1");
  }
  const double gap = 1.0 - lambda_hat;
  return constant * static_cast<double>(samples) / (gap * gap);
}

double trajectory_deviation_bound(const ConcentrationCertificate& cert,
                                  double eps) {
  const double n = static_cast<double>(cert.samples);
  const double gap = 1.0 - cert.lambda_hat;
  const double exponent = -(n * eps * eps) * gap * gap /
                          (2.0 * cert.constant * cert.lipschitz *
                           cert.lipschitz);
  return 2.0 * std::exp(exponent);
}

double bias_term(double w1_to_stationary, std::size_t samples,
                 double lambda_hat) {
  require_contraction(lambda_hat, "bias_term");
  if (!(w1_to_stationary >= 0.0) || samples == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "bias_term: need W >= 0 and N >= 1");
  }
  return w1_to_stationary / (static_cast<double>(samples) * (1.0 - lambda_hat));
}

double iid_deviation_bound(double constant, double lipschitz,
                           std::size_t samples, double eps) {
  const double n = static_cast<double>(samples);
  const double exponent =
      -(n * eps * eps) / (2.0 * constant * lipschitz * lipschitz);
  return 2.0 * std::exp(exponent);
}

double correlation_bound(double constant, double lambda_hat, double lipschitz,
                         std::size_t lag) {
  require_contraction(lambda_hat, "correlation_bound");
  return std::pow(lambda_hat, static_cast<double>(lag)) * constant *
         lipschitz * lipschitz / (1.0 - lambda_hat * lambda_hat);
}

std::vector<double> default_lambda_grid(double constant, double lipschitz) {
  constexpr int kPoints = 41;
  const double scale = 1.0 / (std::sqrt(constant) * lipschitz);
  std::vector<double> grid(kPoints);
  for (int i = 0; i < kPoints; ++i) {
    grid[i] = scale * (-1.0 + 2.0 * i / (kPoints - 1));
  }
  grid[kPoints / 2] = 0.0;
  return grid;
}

BobkovGoetzeResult bobkov_goetze_gap(std::span<const double> values,
                                     double constant, double lipschitz,
                                     std::span<const double> lambda_grid) {
  if (values.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "bobkov_goetze_gap: no samples");
  }
  if (lambda_grid.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                "bobkov_goetze_gap: empty lambda grid");
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());

  BobkovGoetzeResult result;
  result.gap = -std::numeric_limits<double>::infinity();
  const double log_n = std::log(static_cast<double>(values.size()));
  for (double lambda : lambda_grid) {
    BobkovGoetzePoint point;
    point.lambda = lambda;
    point.envelope = 0.5 * lambda * lambda * constant * lipschitz * lipschitz;
    // log-sum-exp around the largest exponent.
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : values) peak = std::max(peak, lambda * (v - mean));
    double acc = 0.0;
    for (double v : values) acc += std::exp(lambda * (v - mean) - peak);
    point.log_mgf = peak + std::log(acc) - log_n;
    point.overflow = !std::isfinite(point.log_mgf);
    if (point.overflow) {
      result.any_overflow = true;
    } else {
      result.gap = std::max(result.gap, point.log_mgf - point.envelope);
    }
    result.points.push_back(point);
  }
  return result;
}

}  // namespace concentrix
