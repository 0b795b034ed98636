#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "concentrix/dynamics.hpp"

namespace concentrix {

enum class MetricTag { kEuclidean, kHarris };

/// Transport-entropy certificate: W_d(mu, nu) <= sqrt(2 C Ent(nu | mu)).
struct T1Certificate {
  double constant = 1.0;
  MetricTag metric = MetricTag::kEuclidean;
};

/// Uniform Wasserstein contraction W_d(P(x,.), P(y,.)) <= lambda_hat d(x,y).
struct ContractionCertificate {
  double lambda_hat = 0.0;
};

/// Everything needed to evaluate the single-trajectory deviation bound for a
/// Lipschitz observable averaged over N steps of a contractive chain.
struct ConcentrationCertificate {
  double constant = 1.0;  // C
  double lambda_hat = 0.0;
  std::size_t samples = 1;  // N
  double lipschitz = 1.0;   // L
  double bias = 0.0;

  /// Deviation threshold the bound applies to: bias + eps.
  double threshold(double eps) const { return bias + eps; }
  /// Tail probability bound at deviation bias + eps.
  double tail_bound(double eps) const;
};

/// C = 1 for the standard Gaussian kernel, lambda_hat = ||A||_2.
/// Throws Error(kNotContractive) when ||A||_2 >= 1.
std::pair<T1Certificate, ContractionCertificate> lds_certificate(
    const Eigen::Ref<const Matrix>& a);

/// Closed-form 2-Wasserstein distance between N(m1, s1) and N(m2, s2).
/// Throws Error(kNotPsd) if a covariance has an eigenvalue below -1e-9 or is
/// not symmetric.
double gaussian_w2(const Eigen::Ref<const Vector>& m1,
                   const Eigen::Ref<const Matrix>& s1,
                   const Eigen::Ref<const Vector>& m2,
                   const Eigen::Ref<const Matrix>& s2);

/// Transport constant C N / (1 - lambda_hat)^2 of the N-sample path law under
/// the summed metric.
double tensorized_constant(double constant, double lambda_hat,
                           std::size_t samples);

double trajectory_deviation_bound(const ConcentrationCertificate& cert,
                                  double eps);

/// Non-stationary start shift W(P(x,.), mu) / (N (1 - lambda_hat)).
double bias_term(double w1_to_stationary, std::size_t samples,
                 double lambda_hat);

/// 2 exp(-N eps^2 / (2 C L^2)) for the mean of N i.i.d. draws from a
/// T1(C) measure.
double iid_deviation_bound(double constant, double lipschitz,
                           std::size_t samples, double eps);

/// lambda_hat^k C L^2 / (1 - lambda_hat^2).
double correlation_bound(double constant, double lambda_hat, double lipschitz,
                         std::size_t lag);

struct BobkovGoetzePoint {
  double lambda = 0.0;
  double log_mgf = 0.0;  // log mean exp(lambda (f - mean f))
  double envelope = 0.0; // lambda^2 C L^2 / 2
  bool overflow = false;
};

struct BobkovGoetzeResult {
  /// max over non-overflowing grid points of log_mgf - envelope.
  double gap = 0.0;
  std::vector<BobkovGoetzePoint> points;
  bool any_overflow = false;
};

/// 41 points on [-1, 1] scaled by 1 / (sqrt(C) L).
std::vector<double> default_lambda_grid(double constant, double lipschitz);

/// Empirical sub-Gaussian check of already-evaluated observable values f(x_i).
/// A gap <= 0 (up to sampling error) is consistent with T1(C).
BobkovGoetzeResult bobkov_goetze_gap(std::span<const double> values,
                                     double constant, double lipschitz,
                                     std::span<const double> lambda_grid);

}  // namespace concentrix
