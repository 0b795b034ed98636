#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "concentrix/dynamics.hpp"
#include "concentrix/lyapunov.hpp"
#include "concentrix/stats.hpp"
#include "concentrix/transport.hpp"

namespace concentrix {

enum class Provenance { kSingleTrajectory, kBurnInEndpoints, kAnalyticGaussian };

std::string to_string(Provenance p);

/// Column-major batch of states (one column per point).
struct SampleBatch {
  Matrix points;
  Provenance provenance = Provenance::kBurnInEndpoints;
  std::uint64_t master_seed = 0;
  std::optional<std::size_t> burn_in;

  Eigen::Index size() const { return points.cols(); }
  Eigen::Index dimension() const { return points.rows(); }
};

/// Lipschitz observable r with its Lipschitz constant under |.|_2.
struct Reward {
  enum class Kind { kNorm, kCoordinate, kCustom };

  Kind kind = Kind::kNorm;
  Eigen::Index index = 0;
  std::function<double(const Eigen::Ref<const Vector>&)> fn;
  double lipschitz = 1.0;
  std::string label = "norm";

  static Reward norm() { return {}; }
  static Reward coordinate(Eigen::Index i) {
    return {Kind::kCoordinate, i, {}, 1.0, "coordinate:" + std::to_string(i)};
  }
  static Reward custom(std::string label,
                       std::function<double(const Eigen::Ref<const Vector>&)> fn,
                       double lipschitz) {
    return {Kind::kCustom, 0, std::move(fn), lipschitz, std::move(label)};
  }

  double operator()(const Eigen::Ref<const Vector>& x) const {
    switch (kind) {
      case Kind::kNorm: return x.norm();
      case Kind::kCoordinate: return x[index];
      case Kind::kCustom: return fn(x);
    }
    return 0.0;
  }
};

/// Ground metric for empirical transport: Euclidean or the Harris weighted
/// metric (2 + b V(x) + b V(y)) 1{x != y}.
struct GroundMetric {
  MetricTag tag = MetricTag::kEuclidean;
  HarrisMetricSpec harris;

  static GroundMetric euclidean() { return {}; }
  static GroundMetric harris_metric(HarrisMetricSpec spec) {
    return {MetricTag::kHarris, spec};
  }
  double operator()(const Eigen::Ref<const Vector>& x,
                    const Eigen::Ref<const Vector>& y) const;
};

enum class W1Solver { kAuto, kSorted1d, kAssignment };

inline constexpr Eigen::Index kMaxAssignmentSize = 1024;

struct WassersteinEstimate {
  double value = 0.0;
  Eigen::Index size = 0;
  MetricTag metric = MetricTag::kEuclidean;
  W1Solver solver = W1Solver::kAssignment;
};

/// Exact W1 between two equal-size empirical measures: optimal assignment
/// cost / m. kAuto uses sorted matching for one-dimensional Euclidean input
/// (no size cap) and the assignment solver otherwise (m <= 1024).
WassersteinEstimate empirical_w1(const Eigen::Ref<const Matrix>& a,
                                 const Eigen::Ref<const Matrix>& b,
                                 const GroundMetric& metric = {},
                                 W1Solver solver = W1Solver::kAuto);

inline WassersteinEstimate empirical_w1(const SampleBatch& a,
                                        const SampleBatch& b,
                                        const GroundMetric& metric = {},
                                        W1Solver solver = W1Solver::kAuto) {
  return empirical_w1(a.points, b.points, metric, solver);
}

/// Stationary expectation <r>_mu together with where it came from.
struct TargetMean {
  double value = 0.0;
  std::string provenance;  // e.g. "analytic_half_normal", "mc_gaussian"
  std::optional<Interval> ci;
};

struct DeviationRow {
  double epsilon = 0.0;
  double threshold = 0.0;  // bias + epsilon
  std::size_t exceedances = 0;
  double frequency = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double bound = 0.0;
  bool pass = false;  // ci_high <= bound
};

struct BiasEstimate {
  double value = 0.0;  // W1_hat / (N (1 - lambda_hat))
  double w1_one_step = 0.0;
  Eigen::Index samples = 0;
  /// Closed-form W2(P(x0,.), mu) for linear systems; W1 <= W2.
  std::optional<double> w2_closed_form;
};

struct DeviationReport {
  std::string kind;      // "trajectory" or "iid"
  std::string bound_id;  // formula identifier
  std::string reward;
  double lipschitz = 1.0;
  double constant = 1.0;  // C (trajectory) or the stationary T1 constant (iid)
  double lambda_hat = 0.0;
  std::size_t samples = 0;       // N
  std::size_t replications = 0;  // M
  std::optional<std::size_t> burn_in;
  TargetMean target;
  BiasEstimate bias;
  double confidence = 0.99;
  /// Upper confidence limit at zero exceedances: no bound below this value
  /// can pass at this M.
  double ci_floor = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> burn_in_w1_diagnostic;
  std::vector<std::string> notes;
  std::vector<DeviationRow> rows;

  bool all_pass() const;
};

struct ExperimentOptions {
  std::size_t workers = 1;
  double confidence = 0.99;
  /// Sample size for the one-step vs. reference W1 used by the bias term.
  Eigen::Index bias_samples = 1024;
};

/// Mean of r(x_1..x_N) along simulate(spec, x0, N, seed), streamed.
double trajectory_average(const SystemSpec& spec,
                          const Eigen::Ref<const Vector>& x0, std::size_t steps,
                          std::uint64_t seed, const Reward& reward);

/// Single-trajectory tail experiment for a contractive linear system: M
/// replications of the N-step average compared against target at threshold
/// bias + eps. Throws Error(kInvalidArgument) for M < 100, a missing target
/// provenance, or a non-lds spec.
DeviationReport deviation_probability_experiment(
    const SystemSpec& spec, const Reward& reward,
    const Eigen::Ref<const Vector>& x0, std::size_t samples,
    const std::vector<double>& epsilons, std::size_t replications,
    std::uint64_t seed, const TargetMean& target,
    const ExperimentOptions& options = {});

/// M independent length-T runs from x0; returns their final states.
SampleBatch burn_in_sampler(const SystemSpec& spec,
                            const Eigen::Ref<const Vector>& x0,
                            std::size_t count, std::size_t burn_in,
                            std::uint64_t seed, std::size_t workers = 1);

/// i.i.d. tail experiment: each of M replications averages r over N burn-in
/// endpoints; compared against 2 exp(-N eps^2 / (2 L_TE L^2)).
DeviationReport iid_deviation_experiment(
    const SystemSpec& spec, const Reward& reward,
    const Eigen::Ref<const Vector>& x0, std::size_t samples,
    std::size_t replications, std::size_t burn_in,
    const std::vector<double>& epsilons, double te_constant,
    std::uint64_t seed, const TargetMean& target,
    const ExperimentOptions& options = {});

struct ContractionStep {
  std::size_t n = 0;
  double w1 = 0.0;
  bool used = false;
};

struct ContractionFit {
  double kappa_hat = 0.0;
  double noise_floor = 0.0;
  std::size_t sample_size = 0;
  std::vector<ContractionStep> steps;
};

/// Fits kappa in W1(P^n(x0,.), mu) ~ c kappa^n. Uses the first m reference
/// points as mu and the next m for the noise floor (reference needs >= 2m
/// points); keeps the leading run of n with W1 > 3 * floor and regresses
/// ln W1 on n. Throws Error(kNoSignal) with fewer than two usable steps.
ContractionFit contraction_rate_fit(const SystemSpec& spec,
                                    const Eigen::Ref<const Vector>& x0,
                                    std::size_t n_max, Eigen::Index sample_size,
                                    const SampleBatch& reference,
                                    const GroundMetric& metric,
                                    std::uint64_t seed, std::size_t workers = 1);

struct AutocovarianceRow {
  std::size_t lag = 0;
  double covariance = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct AutocovarianceReport {
  std::size_t length = 0;
  double confidence = 0.99;
  std::vector<AutocovarianceRow> rows;
};

/// Sample autocovariance of f(x_t) over the whole trajectory at lags
/// 0..k_max, with batch-means standard errors (floor(sqrt(L-k)) batches).
/// Throws Error(kInvalidArgument) if length < 10 k_max.
AutocovarianceReport empirical_autocovariance(const Trajectory& trajectory,
                                              const Reward& f, std::size_t k_max,
                                              double confidence = 0.99);

/// Fixed point of Sigma = A Sigma A^T + I by iteration from I, stopped when
/// the Frobenius residual drops below `tolerance`. Throws
/// Error(kNotContractive) when ||A||_2 >= 1.
Matrix lds_stationary_covariance(const Eigen::Ref<const Matrix>& a,
                                 double tolerance = 1e-12,
                                 std::size_t max_iterations = 1000000);

/// <r> under N(0, sigma): closed form for |x| in one dimension (sigma
/// sqrt(2/pi)) and for coordinates (0); otherwise Monte Carlo with up to
/// `budget` draws, throwing Error(kPrecisionUnreachable) if the 99% CLT
/// half-width exceeds `precision`.
TargetMean stationary_mean_reward(const Eigen::Ref<const Matrix>& sigma,
                                  const Reward& reward, double precision,
                                  std::uint64_t seed,
                                  std::size_t budget = 1000000);

/// <r> estimated from a burn-in batch, with a 99% CLT interval.
TargetMean stationary_mean_reward(const SampleBatch& batch,
                                  const Reward& reward);

}  // namespace concentrix
