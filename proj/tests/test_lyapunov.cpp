#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include <concentrix/errors.hpp>
#include <concentrix/lyapunov.hpp>
#include <concentrix/rng.hpp>

#include "oracles.hpp"

using namespace concentrix;

namespace {

Matrix m1(double a) { return Matrix::Constant(1, 1, a); }
Vector v1(double a) { return Vector::Constant(1, a); }

// One bounded region (unit ball, gain 1) and a contractive exterior (0.5).
SystemSpec reference_slds() {
  return SystemSpec::slds(
      RegionSpec({Predicate::ball(1.0), Predicate::catch_all()}, 1),
      {m1(1.0), m1(0.5)});
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::kConfig;
}

// Monte Carlo E exp(alpha |A x + z|^2) with its standard error.
std::pair<double, double> mc_exp_square(const Matrix& a, const Vector& x,
                                        double alpha, int draws,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  const Vector mean = a * x;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    double sq = 0.0;
    for (Eigen::Index k = 0; k < mean.size(); ++k) {
      const double y = mean[k] + g(rng);
      sq += y * y;
    }
    const double w = std::exp(alpha * sq);
    sum += w;
    sum_sq += w * w;
  }
  const double m = sum / draws;
  const double var = (sum_sq / draws - m * m) * draws / (draws - 1.0);
  return {m, std::sqrt(var / draws)};
}

}  // namespace

TEST(SteinMgf, CentredTwoDimensional) {
  EXPECT_NEAR(stein_mgf(Matrix::Zero(2, 2), Vector::Ones(2), 0.25), 2.0, 1e-14);
}

TEST(SteinMgf, OneDimensionalMatchesMonteCarlo) {
  const double closed = stein_mgf(m1(0.0), v1(0.0), 0.1);
  EXPECT_NEAR(closed, 1.0 / std::sqrt(0.8), 1e-14);
  EXPECT_NEAR(closed, 1.11803, 1e-5);
  const auto [mc, se] = mc_exp_square(m1(0.0), v1(0.0), 0.1, 1000000, 8);
  EXPECT_LT(std::abs(mc - closed) / closed, 0.01);
  (void)se;
}

TEST(SteinMgf, MatchesQuadratureOracle) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (double alpha : {0.01, 0.1, 0.2, 0.3, 0.45}) {
    for (Eigen::Index n = 1; n <= 3; ++n) {
      Matrix a(n, n);
      Vector x(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        x[i] = g(rng);
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = 0.5 * g(rng);
      }
      const double exact = stein_mgf(a, x, alpha);
      const double quad = oracle::exp_square_moment_quadrature(a * x, alpha);
      EXPECT_NEAR(exact, quad, 1e-9 * quad) << "alpha=" << alpha << " n=" << n;
    }
  }
}

TEST(SteinMgf, DivergesAtOneHalf) {
  EXPECT_EQ(kind_of([] { stein_mgf(m1(0.5), v1(1.0), 0.5); }),
            ErrorKind::kDivergentMgf);
  EXPECT_EQ(kind_of([] { stein_mgf(m1(0.5), v1(1.0), 0.0); }),
            ErrorKind::kDivergentMgf);
  EXPECT_EQ(kind_of([] { stein_mgf(Matrix::Zero(2, 2), v1(1.0), 0.1); }),
            ErrorKind::kDimensionMismatch);
}

TEST(ExpLyapunov, ReferenceSystemConstants) {
  const auto c = slds_exp_lyapunov(reference_slds(), 1.0, 0.5, 1.0, 0.25);
  EXPECT_DOUBLE_EQ(c.beta, 0.125);
  EXPECT_NEAR(c.constant, std::sqrt(2.0) * std::exp(0.5), 1e-14);
  EXPECT_NEAR(c.constant, 2.3316, 1e-4);
}

TEST(ExpLyapunov, AdmissibleAlphaRange) {
  EXPECT_NEAR(max_alpha_hat(0.9), 0.095, 1e-15);
  const auto spec = SystemSpec::lds(m1(0.9)).as_switched();
  EXPECT_NO_THROW(slds_exp_lyapunov(spec, 0.0, 0.9, 0.9, 0.0949));
  EXPECT_EQ(kind_of([&] { slds_exp_lyapunov(spec, 0.0, 0.9, 0.9, 0.095); }),
            ErrorKind::kInvalidAlpha);
  EXPECT_EQ(kind_of([] {
              slds_exp_lyapunov(reference_slds(), 1.0, 0.5, 1.0, 0.4);
            }),
            ErrorKind::kInvalidAlpha);
  EXPECT_EQ(kind_of([] {
              slds_exp_lyapunov(reference_slds(), 1.0, 0.5, 1.0, 0.0);
            }),
            ErrorKind::kInvalidAlpha);
}

TEST(ExpLyapunov, HypothesisFailureIsReported) {
  const auto spec = SystemSpec::lds(m1(1.1)).as_switched();
  EXPECT_EQ(kind_of([&] { slds_exp_lyapunov(spec, 1.0, 0.5, 1.0, 0.1); }),
            ErrorKind::kHypothesisFailed);
}

TEST(ExpLyapunov, CertificateInvariantValidation) {
  EXPECT_EQ(kind_of([] { ExpLyapunovCertificate::make(0.2, 0.2, 1.0); }),
            ErrorKind::kInvalidArgument);
  EXPECT_EQ(kind_of([] { ExpLyapunovCertificate::make(0.2, 0.1, 0.0); }),
            ErrorKind::kInvalidArgument);
  EXPECT_NO_THROW(ExpLyapunovCertificate::make(0.2, 0.0, 1.0));
}

TEST(ExpLyapunov, BoundHoldsAcrossAdmissibleAlphaGrid) {
  const auto spec = reference_slds();
  const double top = max_alpha_hat(0.5);
  for (int i = 1; i <= 20; ++i) {
    const double alpha = top * i / 21.0;
    const auto c = slds_exp_lyapunov(spec, 1.0, 0.5, 1.0, alpha);
    ASSERT_LT(c.beta, alpha);
    for (int k = 0; k < 50; ++k) {
      const Vector x = v1(-10.0 + 20.0 * k / 49.0);
      const Matrix& a = spec.matrix_at(x);
      // Exact kernel integral by quadrature, independent of the closed form.
      const double integral = oracle::exp_square_moment_quadrature(a * x, alpha);
      ASSERT_LE(integral / std::exp(c.beta * x.squaredNorm()),
                c.constant * (1.0 + 1e-9))
          << "alpha=" << alpha << " x=" << x[0];
    }
  }
}

TEST(ExpLyapunov, BoundHoldsAgainstMonteCarlo) {
  // Finite-variance range only: alpha < 1/4 keeps exp(2 alpha y^2) integrable
  // for the bounded-region kernels.
  const auto spec = reference_slds();
  for (double alpha : {0.05, 0.1, 0.15}) {
    const auto c = slds_exp_lyapunov(spec, 1.0, 0.5, 1.0, alpha);
    for (double xv : {0.0, 0.5, 1.0, 2.0, 4.0}) {
      const Vector x = v1(xv);
      const auto [mc, se] =
          mc_exp_square(spec.matrix_at(x), x, alpha, 200000, 100 + static_cast<int>(xv * 10));
      const double scale = std::exp(c.beta * xv * xv);
      EXPECT_LE(mc / scale, c.constant + 3.0 * se / scale);
    }
  }
}

TEST(DriftPair, ReferenceSplit) {
  const auto d = drift_from_exp_lyapunov({0.25, 0.125, 2.3316});
  EXPECT_EQ(d.eta, 0.5);
  ASSERT_TRUE(d.split_radius_sq.has_value());
  EXPECT_NEAR(*d.split_radius_sq, std::log(2 * 2.3316) / 0.125, 1e-12);
  EXPECT_NEAR(*d.split_radius_sq, 12.318, 1e-3);
  EXPECT_NEAR(d.c_hat, 10.872, 1e-3);
  EXPECT_NEAR(d.stationary_moment_bound(), 21.744, 2e-3);
}

TEST(DriftPair, SmallConstantBranch) {
  const auto d = drift_from_exp_lyapunov({0.3, 0.1, 0.4});
  EXPECT_EQ(d.eta, 0.4);
  EXPECT_EQ(d.c_hat, 0.4);
  EXPECT_FALSE(d.split_radius_sq.has_value());
}

TEST(DriftPair, PointwiseInequalityHoldsExactly) {
  const auto spec = reference_slds();
  for (double alpha : {0.05, 0.15, 0.25, 0.35}) {
    const auto d =
        drift_from_exp_lyapunov(slds_exp_lyapunov(spec, 1.0, 0.5, 1.0, alpha));
    std::vector<Vector> xs;
    for (int k = 0; k < 1000; ++k) xs.push_back(v1(-8.0 + 16.0 * k / 999.0));
    const auto check = pointwise_drift_check(spec, d, xs);
    EXPECT_TRUE(check.passed()) << "alpha=" << alpha;
    EXPECT_EQ(check.points, 1000u);
    EXPECT_LE(check.worst_relative_margin, 0.0);
  }
}

TEST(DriftPair, PointwiseCheckCatchesABrokenPair) {
  DriftPair bogus;
  bogus.alpha_hat = 0.25;
  bogus.eta = 0.1;
  bogus.c_hat = 0.1;
  const auto check = pointwise_drift_check(reference_slds(), bogus, {v1(0.0)});
  EXPECT_FALSE(check.passed());
}

TEST(TeConstant, ReferenceAndLimits) {
  DriftPair d{0.5, 10.872, 0.25, std::nullopt};
  EXPECT_NEAR(te_constant(d), 16.318, 1e-3);
  DriftPair unit{0.0, 1.0, 1.0, std::nullopt};
  EXPECT_NEAR(te_constant(unit), 1.0, 1e-15);
}

TEST(TeConstant, IncreasingInChatAndAlwaysPositive) {
  double previous = 0.0;
  for (double c = 0.01; c < 100.0; c *= 1.3) {
    const double v = te_constant({0.5, c, 0.2, std::nullopt});
    EXPECT_GT(v, 0.0);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, previous);
    previous = v;
  }
}

TEST(NStepBound, ReferenceAndLimits) {
  DriftPair d{0.5, 10.872, 0.25, std::nullopt};
  EXPECT_EQ(n_step_w_bound(d, 3.0, 0), 3.0);
  EXPECT_NEAR(n_step_w_bound(d, 1.0, 3), 0.125 + 10.872 * 0.875 / 0.5, 1e-12);
  EXPECT_NEAR(n_step_w_bound(d, 1.0, 3), 19.151, 1e-3);
  EXPECT_NEAR(n_step_w_bound(d, 5.0, 2000), d.stationary_moment_bound(), 1e-9);
  EXPECT_EQ(kind_of([&] { n_step_w_bound(d, 0.5, 1); }),
            ErrorKind::kInvalidArgument);
}

TEST(NStepBound, MonotoneTowardsStationaryMoment) {
  DriftPair d{0.5, 10.872, 0.25, std::nullopt};
  const double limit = d.stationary_moment_bound();
  for (std::size_t n = 0; n < 50; ++n) {
    EXPECT_GE(n_step_w_bound(d, 1000.0, n), n_step_w_bound(d, 1000.0, n + 1));
    EXPECT_LE(n_step_w_bound(d, 1.0, n), n_step_w_bound(d, 1.0, n + 1));
  }
  EXPECT_GT(1000.0, limit);
  const double coef = n_step_te_coefficient(d, 1.0, 3);
  EXPECT_NEAR(coef, std::sqrt(2.0 * (1.0 + std::log(n_step_w_bound(d, 1.0, 3))) / 0.25),
              1e-12);
}

TEST(GeometricDrift, ConstantFromDimensionLipschitzAndRadius) {
  // Two bounded regions with gain 2 inside radius 3, contractive outside.
  const auto spec = SystemSpec::slds(
      RegionSpec({Predicate::ball(3.0), Predicate::catch_all()}, 2),
      {Matrix::Identity(2, 2) * 2.0, Matrix::Identity(2, 2) * 0.5});
  const auto g = slds_geometric_drift(spec, 3.0, 0.5, 2.0);
  EXPECT_NEAR(g.k, std::sqrt(38.0), 1e-14);
  EXPECT_NEAR(g.k, 6.1644, 1e-4);
  EXPECT_EQ(g.gamma, 0.5);

  const auto lds = SystemSpec::lds(m1(0.5)).as_switched();
  EXPECT_DOUBLE_EQ(slds_geometric_drift(lds, 0.0, 0.5, 0.5).k, 1.0);
  EXPECT_EQ(kind_of([&] { slds_geometric_drift(lds, 0.0, 0.4, 0.5); }),
            ErrorKind::kHypothesisFailed);
}

TEST(GeometricDrift, MonteCarloPvStaysUnderCertificate) {
  const auto spec = SystemSpec::lds(Matrix::Identity(2, 2) * 0.5).as_switched();
  const auto g = slds_geometric_drift(spec, 0.0, 0.5, 0.5);
  Vector x(2);
  x << 10, 0;
  const auto r = empirical_drift_check(spec, LyapunovFunction::norm(), {x},
                                       100000, 5, g);
  ASSERT_EQ(r.points.size(), 1u);
  EXPECT_LE(r.points[0].pv_mean, 0.5 * 10 + g.k + 3 * r.points[0].pv_stderr);
  EXPECT_TRUE(r.all_within_analytic);
  EXPECT_FALSE(r.fit.has_value());
}

TEST(EmpiricalDrift, HalfGainSlope) {
  const auto spec = SystemSpec::lds(m1(0.5));
  std::vector<Vector> grid;
  for (double x : {-20.0, -5.0, -1.0, 1.0, 5.0, 20.0}) grid.push_back(v1(x));
  const auto r =
      empirical_drift_check(spec, LyapunovFunction::norm(), grid, 10000, 6);
  ASSERT_TRUE(r.fit.has_value());
  EXPECT_GE(r.fit->gamma_hat, 0.45);
  EXPECT_LE(r.fit->gamma_hat, 0.55);
}

TEST(EmpiricalDrift, PureNoiseFitsHalfNormalIntercept) {
  const auto spec = SystemSpec::lds(m1(0.0));
  std::vector<Vector> grid;
  for (double x : {0.0, 1.0, 3.0, 10.0}) grid.push_back(v1(x));
  const auto r =
      empirical_drift_check(spec, LyapunovFunction::norm(), grid, 100000, 7);
  ASSERT_TRUE(r.fit.has_value());
  EXPECT_NEAR(r.fit->gamma_hat, 0.0, 0.01);
  EXPECT_NEAR(r.fit->k_hat, std::sqrt(2.0 / std::numbers::pi), 0.02);
}

TEST(EmpiricalDrift, SinglePointHasNoFitAndSmallMRejected) {
  const auto spec = SystemSpec::lds(m1(0.5));
  const auto r = empirical_drift_check(spec, LyapunovFunction::norm(),
                                       {v1(2.0)}, 1000, 1);
  EXPECT_FALSE(r.fit.has_value());
  EXPECT_EQ(r.points.size(), 1u);
  EXPECT_EQ(kind_of([&] {
              empirical_drift_check(spec, LyapunovFunction::norm(), {v1(2.0)},
                                    999, 1);
            }),
            ErrorKind::kInvalidArgument);
}

TEST(EmpiricalDrift, ReproducibleFromSeed) {
  const auto spec = SystemSpec::lds(m1(0.5));
  const std::vector<Vector> grid = {v1(1.0), v1(4.0)};
  const auto a = empirical_drift_check(spec, LyapunovFunction::norm(), grid, 2000, 3);
  const auto b = empirical_drift_check(spec, LyapunovFunction::norm(), grid, 2000, 3);
  EXPECT_EQ(a.points[1].pv_mean, b.points[1].pv_mean);
  EXPECT_EQ(a.fit->gamma_hat, b.fit->gamma_hat);
}

TEST(Minorization, PureNoiseKernelGivesTruncatedMass) {
  const auto spec = SystemSpec::lds(m1(0.0));
  const auto est = minorization_beta(spec, 3.0, -5.0, 5.0, 2001);
  EXPECT_NEAR(est.beta, std::erf(5.0 / std::sqrt(2.0)), 1e-6);
  EXPECT_NEAR(est.beta, 0.999999, 1e-6);
  EXPECT_TRUE(est.lower_bound);
}

TEST(Minorization, WidelySeparatedMeansGiveAlmostNothing) {
  const auto est = minorization_beta(SystemSpec::lds(m1(0.99)), 20.0, -30.0,
                                     30.0, 1201);
  EXPECT_LT(est.beta, 1e-6);
  EXPECT_GE(est.beta, 0.0);
}

TEST(Minorization, GridRefinementChangesLittle) {
  const auto spec = reference_slds();
  const double fine = minorization_beta(spec, 2.0, -6.0, 6.0, 801).beta;
  const double mid = minorization_beta(spec, 2.0, -6.0, 6.0, 401).beta;
  const double coarse = minorization_beta(spec, 2.0, -6.0, 6.0, 201).beta;
  EXPECT_LT(std::abs(fine - coarse), 1e-3);
  EXPECT_LT(std::abs(fine - mid), 1e-3);
}

TEST(Minorization, NonIncreasingInSmallSetRadius) {
  const auto one_d = reference_slds();
  double previous = 1.0;
  for (double r : {0.5, 1.0, 1.5, 2.0, 3.0, 4.0}) {
    const double b = minorization_beta(one_d, r, -8.0, 8.0, 401).beta;
    EXPECT_LE(b, previous + 1e-15) << "R=" << r;
    previous = b;
  }
  Matrix a(2, 2);
  a << 0.6, 0.2, -0.1, 0.4;
  const auto two_d = SystemSpec::lds(a);
  previous = 1.0;
  for (double r : {0.5, 1.0, 2.0, 3.0}) {
    const double b = minorization_beta(two_d, r, -6.0, 6.0, 61).beta;
    EXPECT_LE(b, previous + 1e-15) << "R=" << r;
    EXPECT_GE(b, 0.0);
    previous = b;
  }
}

TEST(Minorization, RejectsHighDimension) {
  EXPECT_EQ(kind_of([] {
              minorization_beta(SystemSpec::lds(Matrix::Zero(3, 3)), 1.0, -3.0,
                                3.0, 11);
            }),
            ErrorKind::kUnsupportedDimension);
}

TEST(HarrisDistance, BasicValues) {
  const HarrisMetricSpec metric;
  EXPECT_EQ(harris_distance(metric, v1(1.5), v1(1.5)), 0.0);
  EXPECT_EQ(harris_distance(metric, v1(0.0), v1(1.0)), 3.0);
  EXPECT_EQ(harris_distance(metric, v1(-2.0), v1(1.0)),
            harris_distance(metric, v1(1.0), v1(-2.0)));
  EXPECT_GE(harris_distance(metric, v1(0.0), v1(1e-300)), 2.0);
}

TEST(HarrisDistance, TriangleInequalityOnRandomTriples) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  const HarrisMetricSpec metric{0.7, LyapunovFunction::norm()};
  for (int t = 0; t < 10000; ++t) {
    Vector x(2), y(2), z(2);
    x << g(rng), g(rng);
    y << g(rng), g(rng);
    z << g(rng), g(rng);
    if (t % 3 == 0) y = x;
    ASSERT_LE(harris_distance(metric, x, z),
              harris_distance(metric, x, y) + harris_distance(metric, y, z) +
                  1e-12);
  }
}
