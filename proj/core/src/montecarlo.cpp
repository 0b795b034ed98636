#include "concentrix/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "concentrix/assignment.hpp"
#include "concentrix/errors.hpp"
#include "concentrix/parallel.hpp"
#include "concentrix/rng.hpp"

namespace concentrix {

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::kSingleTrajectory: return "single_trajectory";
    case Provenance::kBurnInEndpoints: return "burn_in_endpoints";
    case Provenance::kAnalyticGaussian: return "analytic_gaussian";
  }
  return "unknown";
}

double GroundMetric::operator()(const Eigen::Ref<const Vector>& x,
                                const Eigen::Ref<const Vector>& y) const {
  if (tag == MetricTag::kHarris) return harris_distance(harris, x, y);
  return (x - y).norm();
}

WassersteinEstimate empirical_w1(const Eigen::Ref<const Matrix>& a,
                                 const Eigen::Ref<const Matrix>& b,
                                 const GroundMetric& metric, W1Solver solver) {
  if (a.cols() != b.cols()) {
    std::ostringstream os;
    os << "empirical_w1: batch sizes differ (" << a.cols() << " vs "
       << b.cols() << ")";
    throw Error(ErrorKind::kInvalidArgument, os.str());
  }
  if (a.rows() != b.rows()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "empirical_w1: batches have different dimensions");
  }
  if (a.cols() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "empirical_w1: empty batches");
  }
  const Eigen::Index m = a.cols();
  const bool sortable = metric.tag == MetricTag::kEuclidean && a.rows() == 1;
  if (solver == W1Solver::kAuto) {
    solver = sortable ? W1Solver::kSorted1d : W1Solver::kAssignment;
  }

  WassersteinEstimate est;
  est.size = m;
  est.metric = metric.tag;
  est.solver = solver;

  if (solver == W1Solver::kSorted1d) {
    if (!sortable) {
      throw Error(ErrorKind::kInvalidArgument,
                  "empirical_w1: sorted matching needs 1-D Euclidean input");
    }
    std::vector<double> xs(static_cast<std::size_t>(m));
    std::vector<double> ys(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
      xs[static_cast<std::size_t>(i)] = a(0, i);
      ys[static_cast<std::size_t>(i)] = b(0, i);
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double total = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) total += std::abs(xs[i] - ys[i]);
    est.value = total / static_cast<double>(m);
    return est;
  }

  if (m > kMaxAssignmentSize) {
    std::ostringstream os;
    os << "empirical_w1: assignment solver is limited to " << kMaxAssignmentSize
       << " points per batch (got " << m << "); subsample both batches";
    throw Error(ErrorKind::kInvalidArgument, os.str());
  }
  Matrix cost(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      cost(i, j) = metric(a.col(i), b.col(j));
    }
  }
  est.value = solve_assignment(cost).cost / static_cast<double>(m);
  return est;
}

bool DeviationReport::all_pass() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const DeviationRow& r) { return r.pass; });
}

double trajectory_average(const SystemSpec& spec,
                          const Eigen::Ref<const Vector>& x0, std::size_t steps,
                          std::uint64_t seed, const Reward& reward) {
  if (steps == 0) {
    throw Error(ErrorKind::kInvalidArgument,
                "trajectory_average: need at least one step");
  }
  GaussianNoise noise(seed);
  Vector x = x0;
  Vector next(spec.dimension());
  Vector xi(spec.dimension());
  double sum = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    noise.fill(xi);
    step_into(spec, x, xi, next);
    x.swap(next);
    sum += reward(x);
  }
  return sum / static_cast<double>(steps);
}

namespace {

void validate_experiment(std::size_t replications, std::size_t samples,
                         const std::vector<double>& epsilons,
                         const TargetMean& target) {
  if (replications < 100) {
    throw Error(ErrorKind::kInvalidArgument,
                "deviation experiments need at least 100 replications");
  }
  if (samples == 0) {
    throw Error(ErrorKind::kInvalidArgument, "N must be at least 1");
  }
  if (epsilons.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "epsilon grid is empty");
  }
  for (double eps : epsilons) {
    if (!(eps > 0.0) || !std::isfinite(eps)) {
      throw Error(ErrorKind::kInvalidArgument, "epsilon values must be > 0");
    }
  }
  if (target.provenance.empty()) {
    throw Error(ErrorKind::kInvalidArgument,
                "target mean has no provenance; record where <r> came from");
  }
}

// Burn-in long enough that lambda^T <= e^-30.
std::size_t reference_burn_in(double lambda_hat) {
  if (lambda_hat <= 0.0) return 50;
  const double t = std::ceil(-30.0 / std::log(lambda_hat));
  return static_cast<std::size_t>(std::clamp(t, 50.0, 20000.0));
}

void fill_rows(DeviationReport& report, const std::vector<double>& averages,
               const std::vector<double>& epsilons,
               const std::function<double(double)>& bound) {
  const std::size_t m = averages.size();
  report.ci_floor = clopper_pearson(0, m, report.confidence).high;
  for (double eps : epsilons) {
    DeviationRow row;
    row.epsilon = eps;
    row.threshold = report.bias.value + eps;
    row.exceedances = static_cast<std::size_t>(std::count_if(
        averages.begin(), averages.end(), [&](double avg) {
          return std::abs(avg - report.target.value) > row.threshold;
        }));
    row.frequency = static_cast<double>(row.exceedances) / static_cast<double>(m);
    const Interval ci = clopper_pearson(row.exceedances, m, report.confidence);
    row.ci_low = ci.low;
    row.ci_high = ci.high;
    row.bound = bound(eps);
    row.pass = row.ci_high <= row.bound;
    report.rows.push_back(row);
  }
}

}  // namespace

SampleBatch burn_in_sampler(const SystemSpec& spec,
                            const Eigen::Ref<const Vector>& x0,
                            std::size_t count, std::size_t burn_in,
                            std::uint64_t seed, std::size_t workers) {
  if (count == 0) {
    throw Error(ErrorKind::kInvalidArgument, "burn_in_sampler: M must be >= 1");
  }
  if (x0.size() != spec.dimension()) {
    throw Error(ErrorKind::kDimensionMismatch, "burn_in_sampler: x0 dimension");
  }
  SampleBatch batch;
  batch.provenance = Provenance::kBurnInEndpoints;
  batch.master_seed = seed;
  batch.burn_in = burn_in;
  batch.points.resize(spec.dimension(), static_cast<Eigen::Index>(count));
  parallel_for(count, workers, [&](std::size_t i) {
    batch.points.col(static_cast<Eigen::Index>(i)) =
        simulate_endpoint(spec, x0, burn_in, derive_seed(seed, i));
  });
  return batch;
}

DeviationReport deviation_probability_experiment(
    const SystemSpec& spec, const Reward& reward,
    const Eigen::Ref<const Vector>& x0, std::size_t samples,
    const std::vector<double>& epsilons, std::size_t replications,
    std::uint64_t seed, const TargetMean& target,
    const ExperimentOptions& options) {
  validate_experiment(replications, samples, epsilons, target);
  if (!spec.is_lds()) {
    throw Error(ErrorKind::kInvalidArgument,
                "single-trajectory certificates need a contractive lds; use "
                "the i.i.d. burn-in experiment for switched systems");
  }
  if (x0.size() != spec.dimension()) {
    throw Error(ErrorKind::kDimensionMismatch, "x0 dimension");
  }
  const Matrix& a = spec.lds_matrix();
  const auto [t1, contraction] = lds_certificate(a);

  DeviationReport report;
  report.kind = "trajectory";
  report.bound_id = "trajectory_contractive_subgaussian";
  report.reward = reward.label;
  report.lipschitz = reward.lipschitz;
  report.constant = t1.constant;
  report.lambda_hat = contraction.lambda_hat;
  report.samples = samples;
  report.replications = replications;
  report.target = target;
  report.confidence = options.confidence;
  report.seed = seed;

  // Bias: empirical W1 between one-step samples and a long burn-in reference.
  const Eigen::Index m = options.bias_samples;
  Matrix one_step(spec.dimension(), m);
  const std::uint64_t bias_seed = derive_seed(seed, stream::kBias);
  parallel_for(static_cast<std::size_t>(m), options.workers, [&](std::size_t i) {
    one_step.col(static_cast<Eigen::Index>(i)) =
        simulate_endpoint(spec, x0, 1, derive_seed(bias_seed, i));
  });
  const SampleBatch reference =
      burn_in_sampler(spec, x0, static_cast<std::size_t>(m),
                      reference_burn_in(contraction.lambda_hat),
                      derive_seed(seed, stream::kReference), options.workers);
  report.bias.samples = m;
  report.bias.w1_one_step = empirical_w1(one_step, reference.points).value;
  report.bias.value = reward.lipschitz *
                      bias_term(report.bias.w1_one_step, samples,
                                contraction.lambda_hat);
  const Matrix sigma = lds_stationary_covariance(a);
  report.bias.w2_closed_form =
      gaussian_w2(a * x0, Matrix::Identity(a.rows(), a.cols()),
                  Vector::Zero(a.rows()), sigma);
  report.notes.push_back(
      "bias uses the empirical one-step W1; w2_closed_form upper-bounds W1");

  ConcentrationCertificate cert;
  cert.constant = t1.constant;
  cert.lambda_hat = contraction.lambda_hat;
  cert.samples = samples;
  cert.lipschitz = reward.lipschitz;
  cert.bias = report.bias.value;

  std::vector<double> averages(replications);
  const std::uint64_t rep_seed = derive_seed(seed, stream::kReplications);
  parallel_for(replications, options.workers, [&](std::size_t r) {
    averages[r] =
        trajectory_average(spec, x0, samples, derive_seed(rep_seed, r), reward);
  });

  fill_rows(report, averages, epsilons,
            [&](double eps) { return cert.tail_bound(eps); });
  return report;
}

DeviationReport iid_deviation_experiment(
    const SystemSpec& spec, const Reward& reward,
    const Eigen::Ref<const Vector>& x0, std::size_t samples,
    std::size_t replications, std::size_t burn_in,
    const std::vector<double>& epsilons, double te_constant,
    std::uint64_t seed, const TargetMean& target,
    const ExperimentOptions& options) {
  validate_experiment(replications, samples, epsilons, target);
  if (!(te_constant > 0.0) || !std::isfinite(te_constant)) {
    throw Error(ErrorKind::kInvalidArgument,
                "transport-entropy constant must be finite and positive");
  }
  if (x0.size() != spec.dimension()) {
    throw Error(ErrorKind::kDimensionMismatch, "x0 dimension");
  }

  DeviationReport report;
  report.kind = "iid";
  report.bound_id = "iid_stationary_subgaussian";
  report.reward = reward.label;
  report.lipschitz = reward.lipschitz;
  report.constant = te_constant;
  report.samples = samples;
  report.replications = replications;
  report.burn_in = burn_in;
  report.target = target;
  report.confidence = options.confidence;
  report.seed = seed;

  std::vector<double> averages(replications);
  const std::uint64_t rep_seed = derive_seed(seed, stream::kReplications);
  parallel_for(replications, options.workers, [&](std::size_t r) {
    const std::uint64_t batch_seed = derive_seed(rep_seed, r);
    double sum = 0.0;
    for (std::size_t i = 0; i < samples; ++i) {
      sum += reward(
          simulate_endpoint(spec, x0, burn_in, derive_seed(batch_seed, i)));
    }
    averages[r] = sum / static_cast<double>(samples);
  });

  // Distance between the burn-in endpoint law and a 4x longer run.
  const std::uint64_t diag_seed = derive_seed(seed, stream::kDiagnostic);
  const auto m = static_cast<std::size_t>(options.bias_samples);
  const SampleBatch endpoints = burn_in_sampler(
      spec, x0, m, burn_in, derive_seed(diag_seed, 0), options.workers);
  const SampleBatch long_run =
      burn_in_sampler(spec, x0, m, std::max<std::size_t>(4 * burn_in, 1),
                      derive_seed(diag_seed, 1), options.workers);
  report.burn_in_w1_diagnostic = empirical_w1(endpoints, long_run).value;
  report.notes.push_back(
      "burn-in endpoints are approximately stationary; "
      "burn_in_w1_diagnostic is reported, not folded into the bound");

  fill_rows(report, averages, epsilons, [&](double eps) {
    return iid_deviation_bound(te_constant, reward.lipschitz, samples, eps);
  });
  return report;
}

ContractionFit contraction_rate_fit(const SystemSpec& spec,
                                    const Eigen::Ref<const Vector>& x0,
                                    std::size_t n_max, Eigen::Index sample_size,
                                    const SampleBatch& reference,
                                    const GroundMetric& metric,
                                    std::uint64_t seed, std::size_t workers) {
  if (n_max < 2 || sample_size < 2) {
    throw Error(ErrorKind::kInvalidArgument,
                "contraction_rate_fit: need n_max >= 2 and m >= 2");
  }
  if (reference.size() < 2 * sample_size) {
    throw Error(ErrorKind::kInvalidArgument,
                "contraction_rate_fit: reference batch needs at least 2m points");
  }
  if (reference.dimension() != spec.dimension() ||
      x0.size() != spec.dimension()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "contraction_rate_fit: dimension mismatch");
  }
  const Eigen::Index m = sample_size;
  const auto ref_a = reference.points.leftCols(m);
  const auto ref_b = reference.points.middleCols(m, m);

  ContractionFit fit;
  fit.sample_size = static_cast<std::size_t>(m);
  fit.noise_floor = empirical_w1(ref_b, ref_a, metric).value;

  std::vector<Matrix> by_step(n_max, Matrix(spec.dimension(), m));
  parallel_for(static_cast<std::size_t>(m), workers, [&](std::size_t i) {
    const Trajectory traj = simulate(spec, x0, n_max, derive_seed(seed, i));
    for (std::size_t n = 1; n <= n_max; ++n) {
      by_step[n - 1].col(static_cast<Eigen::Index>(i)) =
          traj.states.col(static_cast<Eigen::Index>(n));
    }
  });
  fit.steps.resize(n_max);
  parallel_for(n_max, workers, [&](std::size_t k) {
    fit.steps[k].n = k + 1;
    fit.steps[k].w1 = empirical_w1(by_step[k], ref_a, metric).value;
  });

  std::vector<double> xs, ys;
  for (auto& s : fit.steps) {
    if (!(s.w1 > 3.0 * fit.noise_floor)) break;
    s.used = true;
    xs.push_back(static_cast<double>(s.n));
    ys.push_back(std::log(s.w1));
  }
  if (xs.size() < 2) {
    throw Error(ErrorKind::kNoSignal,
                "contraction_rate_fit: W1 reaches the noise floor within one "
                "step; no decay to fit");
  }
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  fit.kappa_hat = std::exp(sxy / sxx);
  return fit;
}

AutocovarianceReport empirical_autocovariance(const Trajectory& trajectory,
                                              const Reward& f, std::size_t k_max,
                                              double confidence) {
  const auto length = static_cast<std::size_t>(trajectory.length());
  if (length < 10 * std::max<std::size_t>(k_max, 1)) {
    std::ostringstream os;
    os << "empirical_autocovariance: trajectory length " << length
       << " is below 10 * k_max = " << 10 * k_max;
    throw Error(ErrorKind::kInvalidArgument, os.str());
  }
  std::vector<double> values(length);
  for (std::size_t t = 0; t < length; ++t) {
    values[t] = f(trajectory.state(static_cast<Eigen::Index>(t)));
  }
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / length;
  const double z = normal_two_sided_quantile(confidence);

  AutocovarianceReport report;
  report.length = length;
  report.confidence = confidence;
  std::vector<double> products;
  for (std::size_t k = 0; k <= k_max; ++k) {
    products.resize(length - k);
    for (std::size_t t = 0; t + k < length; ++t) {
      products[t] = (values[t] - mean) * (values[t + k] - mean);
    }
    AutocovarianceRow row;
    row.lag = k;
    row.covariance =
        std::accumulate(products.begin(), products.end(), 0.0) / products.size();
    const auto batches = static_cast<std::size_t>(
        std::floor(std::sqrt(static_cast<double>(products.size()))));
    row.std_error = batch_means_stderr(products, batches);
    row.ci_low = row.covariance - z * row.std_error;
    row.ci_high = row.covariance + z * row.std_error;
    report.rows.push_back(row);
  }
  return report;
}

Matrix lds_stationary_covariance(const Eigen::Ref<const Matrix>& a,
                                 double tolerance,
                                 std::size_t max_iterations) {
  const double norm = spectral_norm(a);
  if (!(norm < 1.0)) {
    std::ostringstream os;
    os << "stationary covariance needs ||A||_2 < 1; got " << norm;
    throw Error(ErrorKind::kNotContractive, os.str());
  }
  const Eigen::Index n = a.rows();
  const Matrix identity = Matrix::Identity(n, n);
  Matrix sigma = identity;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    Matrix next = a * sigma * a.transpose() + identity;
    next = 0.5 * (next + next.transpose());
    const double residual = (next - sigma).norm();
    sigma = std::move(next);
    if (residual < tolerance) return sigma;
  }
  throw Error(ErrorKind::kPrecisionUnreachable,
              "stationary covariance iteration did not converge");
}

TargetMean stationary_mean_reward(const Eigen::Ref<const Matrix>& sigma,
                                  const Reward& reward, double precision,
                                  std::uint64_t seed, std::size_t budget) {
  const Eigen::Index n = sigma.rows();
  if (sigma.cols() != n || n == 0) {
    throw Error(ErrorKind::kDimensionMismatch,
                "stationary_mean_reward: covariance must be square");
  }
  if (reward.kind == Reward::Kind::kNorm && n == 1) {
    const double value = std::sqrt(sigma(0, 0)) * std::sqrt(2.0 / std::numbers::pi);
    return {value, "analytic_half_normal", Interval{value, value}};
  }
  if (reward.kind == Reward::Kind::kCoordinate) {
    if (reward.index < 0 || reward.index >= n) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "stationary_mean_reward: coordinate out of range");
    }
    return {0.0, "analytic_symmetry", Interval{0.0, 0.0}};
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sigma + sigma.transpose()));
  const Matrix root = eig.eigenvectors() *
                      eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  GaussianNoise rng(derive_seed(seed, stream::kTarget));
  Vector z(n);
  std::vector<double> values(budget);
  for (std::size_t i = 0; i < budget; ++i) {
    rng.fill(z);
    values[i] = reward(root * z);
  }
  const MeanEstimate est = mean_with_stderr(values);
  const double half = normal_two_sided_quantile(0.99) * est.std_error;
  if (half > precision) {
    std::ostringstream os;
    os << "stationary_mean_reward: 99% half-width " << half << " after "
       << budget << " draws exceeds requested precision " << precision;
    throw Error(ErrorKind::kPrecisionUnreachable, os.str());
  }
  return {est.mean, "mc_gaussian", Interval{est.mean - half, est.mean + half}};
}

TargetMean stationary_mean_reward(const SampleBatch& batch,
                                  const Reward& reward) {
  if (batch.size() == 0) {
    throw Error(ErrorKind::kInvalidArgument, "empty sample batch");
  }
  std::vector<double> values(static_cast<std::size_t>(batch.size()));
  for (Eigen::Index i = 0; i < batch.size(); ++i) {
    values[static_cast<std::size_t>(i)] = reward(batch.points.col(i));
  }
  const MeanEstimate est = mean_with_stderr(values);
  const double half = normal_two_sided_quantile(0.99) * est.std_error;
  return {est.mean, "mc_burn_in", Interval{est.mean - half, est.mean + half}};
}

}  // namespace concentrix
