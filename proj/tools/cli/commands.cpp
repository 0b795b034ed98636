#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <concentrix/errors.hpp>
#include <concentrix/lyapunov.hpp>
#include <concentrix/montecarlo.hpp>
#include <concentrix/rng.hpp>
#include <concentrix/stats.hpp>
#include <concentrix/transport.hpp>

namespace concentrix::cli {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorKind::kConfig, message);
}

// Typed access to a "params" object. Every key read is remembered so that
// finish() can reject typos instead of silently ignoring them.
class Params {
 public:
  Params(const json& object, std::string where)
      : object_(object), where_(std::move(where)) {
    if (!object_.is_object()) config_error(where_ + " must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return object_.contains(key);
  }

  const json& raw(const std::string& key) {
    if (!has(key)) config_error(where_ + "." + key + " is required");
    return object_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) config_error(where_ + "." + key + " must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) config_error(where_ + "." + key + " must be finite");
    return d;
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : fallback;
  }

  std::size_t count(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      config_error(where_ + "." + key + " must be a non-negative integer");
    }
    return static_cast<std::size_t>(v.get<long long>());
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    return has(key) ? count(key) : fallback;
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = object_.at(key);
    if (!v.is_string()) config_error(where_ + "." + key + " must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) config_error(where_ + "." + key + " must be an array");
    std::vector<double> out;
    for (const auto& item : v) {
      if (!item.is_number()) {
        config_error(where_ + "." + key + " must contain only numbers");
      }
      out.push_back(item.get<double>());
    }
    return out;
  }

  std::vector<double> epsilons(const std::string& key) {
    auto grid = numbers(key);
    if (grid.empty()) config_error(where_ + "." + key + " is empty");
    for (double e : grid) {
      if (!(e > 0.0) || !std::isfinite(e)) {
        config_error(where_ + "." + key + " values must be positive");
      }
    }
    return grid;
  }
  std::vector<double> epsilons(const std::string& key,
                               std::vector<double> fallback) {
    return has(key) ? epsilons(key) : fallback;
  }

  Vector vector(const std::string& key, Eigen::Index dimension) {
    if (!has(key)) return Vector::Zero(dimension);
    Vector v;
    try {
      v = vector_from_json(object_.at(key));
    } catch (const Error&) {
      config_error(where_ + "." + key + " must be a non-empty numeric array");
    }
    if (v.size() != dimension) {
      std::ostringstream os;
      os << where_ << "." << key << " has " << v.size()
         << " entries; the system dimension is " << dimension;
      config_error(os.str());
    }
    return v;
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!seen_.count(key)) {
        config_error("unknown parameter " + where_ + "." + key);
      }
    }
  }

 private:
  const json& object_;
  std::string where_;
  std::set<std::string> seen_;
};

std::vector<double> default_epsilons() {
  std::vector<double> grid;
  for (int i = 1; i <= 10; ++i) grid.push_back(0.1 * i);
  return grid;
}

struct SldsParams {
  double rho = 0.0;
  double gamma = 0.0;
  double lipschitz = 0.0;
  double alpha_hat = 0.0;
};

SldsParams read_slds_params(Params& p, bool need_alpha = true) {
  SldsParams s;
  s.rho = p.number("rho");
  s.gamma = p.number("gamma");
  s.lipschitz = p.number("L");
  if (need_alpha) s.alpha_hat = p.number("alpha_hat");
  return s;
}

struct LyapunovChain {
  SldsHypothesisReport hypothesis;
  ExpLyapunovCertificate exp;
  DriftPair drift;
  double te = 0.0;
  GeometricDriftCertificate geometric;
};

LyapunovChain lyapunov_chain(const SystemSpec& spec, const SldsParams& s,
                             std::size_t probe_points) {
  LyapunovChain c;
  c.hypothesis =
      check_slds_hypothesis(spec, s.rho, s.gamma, s.lipschitz, probe_points);
  if (!c.hypothesis.passed) {
    std::ostringstream os;
    os << "switched-system hypothesis fails at region "
       << *c.hypothesis.violating_region;
    throw Error(ErrorKind::kHypothesisFailed, os.str());
  }
  c.exp = slds_exp_lyapunov(spec, s.rho, s.gamma, s.lipschitz, s.alpha_hat);
  c.drift = drift_from_exp_lyapunov(c.exp);
  c.te = te_constant(c.drift);
  c.geometric = slds_geometric_drift(spec, s.rho, s.gamma, s.lipschitz);
  return c;
}

json chain_json(const LyapunovChain& c) {
  return {{"hypothesis", c.hypothesis},
          {"exp_lyapunov", c.exp},
          {"drift", c.drift},
          {"te_constant", c.te},
          {"geometric_drift", c.geometric},
          {"chain",
           {{"alpha_hat", c.exp.alpha_hat},
            {"beta", c.exp.beta},
            {"C", c.exp.constant},
            {"eta", c.drift.eta},
            {"C_hat", c.drift.c_hat},
            {"stationary_moment_bound", c.drift.stationary_moment_bound()},
            {"L_TE", c.te}}}};
}

Reward read_reward(Params& p, Eigen::Index dimension) {
  if (!p.has("reward")) return Reward::norm();
  Reward r = reward_from_json(p.raw("reward"));
  if (r.kind == Reward::Kind::kCoordinate &&
      (r.index < 0 || r.index >= dimension)) {
    config_error("reward coordinate is out of range for the system dimension");
  }
  return r;
}

// target_mean: {"value": v, "provenance": "..."}, "analytic" (lds only) or
// "burn_in" (mean over burn-in endpoints).
TargetMean read_target(Params& p, const SystemSpec& spec, const Reward& reward,
                       const Vector& x0, std::size_t burn_in,
                       std::uint64_t seed, std::size_t workers) {
  const json& t = p.raw("target_mean");
  if (t.is_object()) {
    if (!t.contains("value") || !t.at("value").is_number()) {
      config_error("target_mean.value must be a number");
    }
    if (!t.contains("provenance") || !t.at("provenance").is_string() ||
        t.at("provenance").get<std::string>().empty()) {
      config_error("target_mean.provenance is required");
    }
    return {t.at("value").get<double>(), t.at("provenance").get<std::string>(),
            std::nullopt};
  }
  if (t == "analytic") {
    if (!spec.is_lds()) {
      config_error("target_mean \"analytic\" needs an lds; use \"burn_in\"");
    }
    const double precision = p.number("target_precision", 1e-3);
    return stationary_mean_reward(lds_stationary_covariance(spec.lds_matrix()),
                                  reward, precision, seed);
  }
  if (t == "burn_in") {
    const std::size_t samples = p.count("target_samples", 20000);
    if (samples == 0) config_error("target_samples must be positive");
    const SampleBatch batch =
        burn_in_sampler(spec, x0, samples, burn_in,
                        derive_seed(seed, stream::kTarget), workers);
    return stationary_mean_reward(batch, reward);
  }
  config_error(
      "target_mean must be {\"value\", \"provenance\"}, \"analytic\" or "
      "\"burn_in\"");
}

std::size_t default_burn_in(const SystemSpec& spec) {
  if (!spec.is_lds()) return 200;
  const double lambda = spectral_norm(spec.lds_matrix());
  if (!(lambda > 0.0)) return 50;
  if (!(lambda < 1.0)) return 200;
  return static_cast<std::size_t>(
      std::clamp(std::ceil(-30.0 / std::log(lambda)), 50.0, 20000.0));
}

json envelope(const LoadedConfig& config, bool pass, json result) {
  return {{"tool", "concentrix"},
          {"version", std::string(library_version())},
          {"pipeline", config.pipeline},
          {"config", config.document},
          {"config_hash", json_hash(config.document)},
          {"spec_hash", json_hash(system_to_json(config.system))},
          {"seed", config.seed},
          {"pass", pass},
          {"result", std::move(result)}};
}

std::string output_stem(const LoadedConfig& config) {
  if (config.document.contains("name")) {
    return config.document.at("name").get<std::string>();
  }
  return config.pipeline;
}

fs::path write_text(const RunOptions& options, const std::string& file,
                    const std::string& content) {
  fs::create_directories(options.out_dir);
  const fs::path path = options.out_dir / file;
  std::ofstream out(path, std::ios::binary);
  if (!out) config_error("cannot write " + path.string());
  out << content;
  if (!out) config_error("failed writing " + path.string());
  return path;
}

CommandResult finish(const LoadedConfig& config, bool pass,
                     std::vector<fs::path> files) {
  CommandResult r;
  r.exit_code = pass ? kPass : kVerificationFailed;
  json outputs = json::array();
  for (const auto& f : files) outputs.push_back(f.string());
  r.summary = {{"status", pass ? "pass" : "fail"},
               {"pipeline", config.pipeline},
               {"outputs", std::move(outputs)}};
  return r;
}

std::vector<Vector> drift_grid(const LoadedConfig& config, Params& p) {
  const Eigen::Index n = config.system.dimension();
  std::vector<Vector> grid;
  if (p.has("drift_grid")) {
    const json& g = p.raw("drift_grid");
    if (!g.is_array()) config_error("params.drift_grid must be an array");
    for (const auto& item : g) {
      Vector x = vector_from_json(item);
      if (x.size() != n) config_error("params.drift_grid point dimension");
      grid.push_back(std::move(x));
    }
    return grid;
  }
  for (double r : {0.0, 1.0, -1.0, 5.0, -5.0, 20.0, -20.0}) {
    Vector x = Vector::Zero(n);
    x[0] = r;
    grid.push_back(std::move(x));
  }
  return grid;
}

// Radii evenly spaced on [0, radius]; directions drawn from a seeded stream
// (only the sign for n = 1).
std::vector<Vector> pointwise_grid(Eigen::Index n, std::size_t points,
                                   double radius, std::uint64_t seed) {
  std::vector<Vector> grid;
  grid.reserve(points);
  if (n == 1) {
    for (std::size_t i = 0; i < points; ++i) {
      const double t = points == 1 ? 0.0
                                   : static_cast<double>(i) /
                                         static_cast<double>(points - 1);
      grid.push_back(Vector::Constant(1, -radius + 2.0 * radius * t));
    }
    return grid;
  }
  GaussianNoise rng(seed);
  Vector u(n);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = points == 1 ? 0.0
                                 : static_cast<double>(i) /
                                       static_cast<double>(points - 1);
    rng.fill(u);
    grid.push_back(radius * t * u / u.norm());
  }
  return grid;
}

CommandResult verify_deviation(const LoadedConfig& config,
                               const RunOptions& options) {
  const SystemSpec& spec = config.system;
  Params p(config.params, "params");
  const std::string mode = p.text("mode", spec.is_lds() ? "trajectory" : "iid");
  if (mode != "trajectory" && mode != "iid") {
    config_error("params.mode must be \"trajectory\" or \"iid\"");
  }
  const Reward reward = read_reward(p, spec.dimension());
  const Vector x0 = p.vector("x0", spec.dimension());
  const std::size_t n = p.count("N");
  const std::size_t m = p.count("M");
  const auto eps = p.epsilons("eps");

  ExperimentOptions opts;
  opts.workers = options.workers;
  opts.bias_samples =
      static_cast<Eigen::Index>(p.count("bias_samples", 1024));

  DeviationReport report;
  json extra = json::object();
  if (mode == "trajectory") {
    if (!spec.is_lds()) {
      config_error(
          "mode \"trajectory\" needs an lds; switched systems use mode \"iid\"");
    }
    const TargetMean target = read_target(p, spec, reward, x0,
                                          default_burn_in(spec), config.seed,
                                          options.workers);
    p.finish();
    report = deviation_probability_experiment(spec, reward, x0, n, eps, m,
                                              config.seed, target, opts);
  } else {
    const SldsParams s = read_slds_params(p);
    const std::size_t probes = p.count("probe_points", 100000);
    const std::size_t burn_in = p.count("T");
    const TargetMean target = read_target(p, spec, reward, x0, burn_in,
                                          config.seed, options.workers);
    p.finish();
    const LyapunovChain chain = lyapunov_chain(spec, s, probes);
    extra["certificate"] = chain_json(chain);
    report = iid_deviation_experiment(spec, reward, x0, n, m, burn_in, eps,
                                      chain.te, config.seed, target, opts);
  }

  json result = report;
  for (auto& [k, v] : extra.items()) result[k] = v;
  const bool pass = report.all_pass();
  const std::string stem = output_stem(config);
  std::ostringstream csv;
  write_deviation_csv(csv, report);
  std::vector<fs::path> files;
  files.push_back(write_text(options, stem + ".json",
                             envelope(config, pass, std::move(result)).dump(2) +
                                 "\n"));
  files.push_back(write_text(options, stem + ".csv", csv.str()));
  return finish(config, pass, std::move(files));
}

CommandResult verify_lyapunov(const LoadedConfig& config,
                              const RunOptions& options) {
  const SystemSpec& spec = config.system;
  Params p(config.params, "params");
  const SldsParams s = read_slds_params(p);
  const std::size_t probes = p.count("probe_points", 100000);
  const std::size_t points = p.count("grid_points", 1000);
  const double radius = p.number("grid_radius", 10.0);
  const std::size_t burn_in = p.count("T", 100);
  const std::size_t samples = p.count("samples", 10000);
  const std::size_t drift_samples = p.count("drift_samples", 10000);
  const Vector x0 = p.vector("x0", spec.dimension());
  const auto grid = drift_grid(config, p);
  p.finish();
  if (points == 0 || samples < 2) {
    config_error("params.grid_points must be >= 1 and params.samples >= 2");
  }

  const LyapunovChain chain = lyapunov_chain(spec, s, probes);

  const auto pointwise = pointwise_drift_check(
      spec, chain.drift,
      pointwise_grid(spec.dimension(), points, radius,
                     derive_seed(config.seed, stream::kProbe)));

  const SampleBatch batch =
      burn_in_sampler(spec, x0, samples, burn_in,
                      derive_seed(config.seed, stream::kReference),
                      options.workers);
  std::vector<double> w(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    w[i] = std::exp(chain.drift.alpha_hat *
                    batch.points.col(static_cast<Eigen::Index>(i)).squaredNorm());
  }
  const MeanEstimate moment = mean_with_stderr(w);
  const double upper =
      moment.mean + normal_two_sided_quantile(0.99) * moment.std_error;
  const double moment_bound = chain.drift.stationary_moment_bound();
  const bool moment_pass = upper <= moment_bound;

  const DriftCheckReport drift = empirical_drift_check(
      spec, LyapunovFunction::norm(), grid, drift_samples,
      derive_seed(config.seed, stream::kDiagnostic), chain.geometric);

  const bool pass =
      pointwise.passed() && moment_pass && drift.all_within_analytic;
  json result = chain_json(chain);
  result["pointwise_drift"] = pointwise;
  result["pointwise_drift"]["grid_radius"] = radius;
  result["stationary_moment"] = {{"T", burn_in},
                                 {"samples", samples},
                                 {"mean", moment.mean},
                                 {"std_error", moment.std_error},
                                 {"ci_high", upper},
                                 {"confidence", 0.99},
                                 {"bound", moment_bound},
                                 {"pass", moment_pass},
                                 {"note",
                                  "normal-approximation interval; heuristic "
                                  "when exp(2 alpha_hat |x|^2) is not "
                                  "integrable under the stationary law"}};
  result["geometric_drift_check"] = drift;

  const std::string stem = output_stem(config);
  return finish(config, pass,
                {write_text(options, stem + ".json",
                            envelope(config, pass, std::move(result)).dump(2) +
                                "\n")});
}

CommandResult verify_contraction(const LoadedConfig& config,
                                 const RunOptions& options) {
  const SystemSpec& spec = config.system;
  Params p(config.params, "params");
  const Vector x0 = p.vector("x0", spec.dimension());
  const std::size_t n_max = p.count("n_max", 30);
  const std::size_t m = p.count("m", 512);
  const std::size_t ref_burn_in =
      p.count("reference_burn_in", default_burn_in(spec));
  const std::string metric_tag = p.text("metric", "euclidean");
  const double beta_star = p.number("beta_star", 1.0);
  const double tolerance = p.number("tolerance", 0.1);
  p.finish();

  GroundMetric metric;
  if (metric_tag == "harris") {
    metric = GroundMetric::harris_metric({beta_star, LyapunovFunction::norm()});
  } else if (metric_tag != "euclidean") {
    config_error("params.metric must be \"euclidean\" or \"harris\"");
  }
  if (m < 2 || static_cast<Eigen::Index>(m) > kMaxAssignmentSize) {
    config_error("params.m must be in [2, 1024]");
  }

  const SampleBatch reference = burn_in_sampler(
      spec, Vector::Zero(spec.dimension()), 2 * m, ref_burn_in,
      derive_seed(config.seed, stream::kReference), options.workers);
  const ContractionFit fit = contraction_rate_fit(
      spec, x0, n_max, static_cast<Eigen::Index>(m), reference, metric,
      derive_seed(config.seed, stream::kReplications), options.workers);

  json result = fit;
  bool pass = fit.kappa_hat < 1.0;
  if (spec.is_lds()) {
    const double norm = spectral_norm(spec.lds_matrix());
    result["spectral_norm"] = norm;
    result["tolerance"] = tolerance;
    pass = pass && std::abs(fit.kappa_hat - norm) <= tolerance;
  }
  result["metric"] = metric_tag;
  result["reference_burn_in"] = ref_burn_in;

  std::ostringstream csv;
  csv << "n,w1,used\n" << std::setprecision(12);
  for (const auto& s : fit.steps) {
    csv << s.n << ',' << s.w1 << ',' << (s.used ? 1 : 0) << '\n';
  }
  const std::string stem = output_stem(config);
  std::vector<fs::path> files;
  files.push_back(write_text(options, stem + ".json",
                             envelope(config, pass, std::move(result)).dump(2) +
                                 "\n"));
  files.push_back(write_text(options, stem + ".csv", csv.str()));
  return finish(config, pass, std::move(files));
}

std::uint64_t read_seed(const json& doc, const RunOptions& options) {
  if (options.seed) return *options.seed;
  if (!doc.contains("seed")) {
    config_error("seed is mandatory (config \"seed\" or --seed)");
  }
  const json& s = doc.at("seed");
  if (s.is_number_unsigned()) return s.get<std::uint64_t>();
  if (s.is_number_integer() && s.get<long long>() >= 0) {
    return static_cast<std::uint64_t>(s.get<long long>());
  }
  config_error("seed must be a non-negative 64-bit integer");
}

const std::set<std::string> kPipelines = {
    "certify", "verify-deviation", "verify-lyapunov", "contraction", "sweep"};

}  // namespace

json error_document(const std::string& kind, const std::string& message) {
  return {{"status", "error"}, {"error", {{"kind", kind}, {"message", message}}}};
}

LoadedConfig load_config(const json& document, const fs::path& base_dir,
                         const RunOptions& options) {
  if (!document.is_object()) config_error("config must be a JSON object");
  static const std::set<std::string> allowed = {
      "pipeline", "seed", "system", "system_path", "params", "name"};
  for (const auto& [key, value] : document.items()) {
    if (!allowed.count(key)) config_error("unknown config key \"" + key + "\"");
  }

  if (!document.contains("pipeline") || !document.at("pipeline").is_string()) {
    config_error("config needs a string \"pipeline\"");
  }
  const std::string pipeline = document.at("pipeline").get<std::string>();
  if (!kPipelines.count(pipeline)) {
    config_error("unknown pipeline \"" + pipeline + "\"");
  }
  const std::uint64_t seed = read_seed(document, options);

  json system;
  if (document.contains("system") == document.contains("system_path")) {
    config_error("config needs exactly one of \"system\" or \"system_path\"");
  }
  if (document.contains("system")) {
    system = document.at("system");
  } else {
    const json& rel = document.at("system_path");
    if (!rel.is_string()) config_error("system_path must be a string");
    const fs::path path = base_dir / rel.get<std::string>();
    std::ifstream in(path);
    if (!in) config_error("cannot read system file " + path.string());
    try {
      system = json::parse(in);
    } catch (const json::parse_error& e) {
      config_error("system file " + path.string() + ": " + e.what());
    }
  }
  SystemSpec spec = system_from_json(system);

  json params = document.value("params", json::object());
  if (!params.is_object()) config_error("params must be an object");
  if (document.contains("name")) {
    const json& name = document.at("name");
    if (!name.is_string() || name.get<std::string>().empty() ||
        name.get<std::string>().find('/') != std::string::npos) {
      config_error("name must be a non-empty file stem");
    }
  }

  json effective = document;
  effective.erase("system_path");
  effective["system"] = system_to_json(spec);
  effective["seed"] = seed;
  effective["params"] = params;
  return LoadedConfig{std::move(effective), pipeline, std::move(spec), seed,
                      std::move(params)};
}

LoadedConfig load_config_file(const fs::path& path, const RunOptions& options) {
  std::ifstream in(path);
  if (!in) config_error("cannot read config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    config_error("config " + path.string() + ": " + e.what());
  }
  return load_config(doc, path.parent_path(), options);
}

CommandResult cmd_certify(const LoadedConfig& config,
                          const RunOptions& options) {
  if (config.pipeline != "certify") {
    config_error("command certify cannot run pipeline \"" + config.pipeline +
                 "\"");
  }
  const SystemSpec& spec = config.system;
  Params p(config.params, "params");
  json result;
  if (spec.is_lds()) {
    const std::size_t n = p.count("N");
    const double lipschitz = p.number("L", 1.0);
    const double bias = p.number("bias", 0.0);
    const auto eps = p.epsilons("eps", default_epsilons());
    const std::size_t k_max = p.count("k_max", 10);
    p.finish();
    if (n == 0) config_error("params.N must be >= 1");
    if (!(lipschitz > 0.0) || bias < 0.0) {
      config_error("params.L must be > 0 and params.bias >= 0");
    }
    const auto [t1, contraction] = lds_certificate(spec.lds_matrix());
    ConcentrationCertificate cert{t1.constant, contraction.lambda_hat, n,
                                  lipschitz, bias};
    json curve = json::array();
    for (double e : eps) {
      curve.push_back({{"epsilon", e},
                       {"threshold", cert.threshold(e)},
                       {"bound", cert.tail_bound(e)}});
    }
    json correlation = json::array();
    for (std::size_t k = 0; k <= k_max; ++k) {
      correlation.push_back(
          {{"lag", k},
           {"bound", correlation_bound(t1.constant, contraction.lambda_hat,
                                       lipschitz, k)}});
    }
    result = {{"system", "lds"},
              {"T1", t1},
              {"contraction", contraction},
              {"tensorized_constant",
               tensorized_constant(t1.constant, contraction.lambda_hat, n)},
              {"concentration", cert},
              {"bound_curve", std::move(curve)},
              {"correlation_bound", std::move(correlation)}};
  } else {
    const SldsParams s = read_slds_params(p);
    const std::size_t probes = p.count("probe_points", 100000);
    std::optional<json> minor;
    if (p.has("minorization")) {
      Params mp(p.raw("minorization"), "params.minorization");
      const double radius = mp.number("R");
      const double lo = mp.number("lo", -5.0);
      const double hi = mp.number("hi", 5.0);
      const std::size_t res = mp.count("resolution", 201);
      mp.finish();
      minor = minorization_beta(spec, radius, lo, hi, res);
    }
    std::optional<std::size_t> n;
    if (p.has("N")) n = p.count("N");
    const auto eps = p.epsilons("eps", default_epsilons());
    p.finish();
    const LyapunovChain chain = lyapunov_chain(spec, s, probes);
    result = chain_json(chain);
    result["system"] = "slds";
    result["minorization"] = minor ? *minor : json(nullptr);
    if (n) {
      if (*n == 0) config_error("params.N must be >= 1");
      json curve = json::array();
      for (double e : eps) {
        curve.push_back(
            {{"epsilon", e},
             {"bound", iid_deviation_bound(chain.te, 1.0, *n, e)}});
      }
      result["iid_bound"] = {{"bound", "iid_stationary_subgaussian"},
                             {"N", *n},
                             {"L", 1.0},
                             {"curve", std::move(curve)}};
    }
  }
  const std::string stem = output_stem(config);
  return finish(config, true,
                {write_text(options, stem + ".json",
                            envelope(config, true, std::move(result)).dump(2) +
                                "\n")});
}

CommandResult cmd_verify(const LoadedConfig& config,
                         const RunOptions& options) {
  if (config.pipeline == "verify-deviation") {
    return verify_deviation(config, options);
  }
  if (config.pipeline == "verify-lyapunov") {
    return verify_lyapunov(config, options);
  }
  if (config.pipeline == "contraction") {
    return verify_contraction(config, options);
  }
  config_error("command verify cannot run pipeline \"" + config.pipeline +
               "\"");
}

CommandResult cmd_sweep(const LoadedConfig& config, const RunOptions& options) {
  if (config.pipeline != "sweep") {
    config_error("command sweep cannot run pipeline \"" + config.pipeline +
                 "\"");
  }
  const SystemSpec& spec = config.system;
  Params p(config.params, "params");
  const std::string variable = p.text("variable", "");
  const auto grid = p.numbers("grid");
  if (grid.empty()) config_error("params.grid is empty");
  for (double g : grid) {
    if (!std::isfinite(g)) config_error("params.grid values must be finite");
  }

  std::ostringstream csv;
  csv << std::setprecision(12);
  json rows = json::array();
  bool pass = true;

  if (variable == "alpha_hat") {
    const SldsParams s = read_slds_params(p, false);
    const std::size_t probes = p.count("probe_points", 100000);
    p.finish();
    const auto hypothesis =
        check_slds_hypothesis(spec, s.rho, s.gamma, s.lipschitz, probes);
    if (!hypothesis.passed) {
      throw Error(ErrorKind::kHypothesisFailed,
                  "switched-system hypothesis fails");
    }
    csv << "alpha_hat,beta,C,eta,C_hat,stationary_moment_bound,L_TE\n";
    for (double a : grid) {
      const auto cert =
          slds_exp_lyapunov(spec, s.rho, s.gamma, s.lipschitz, a);
      const auto drift = drift_from_exp_lyapunov(cert);
      const double te = te_constant(drift);
      csv << a << ',' << cert.beta << ',' << cert.constant << ',' << drift.eta
          << ',' << drift.c_hat << ',' << drift.stationary_moment_bound()
          << ',' << te << '\n';
      rows.push_back({{"alpha_hat", a},
                      {"beta", cert.beta},
                      {"C", cert.constant},
                      {"eta", drift.eta},
                      {"C_hat", drift.c_hat},
                      {"stationary_moment_bound",
                       drift.stationary_moment_bound()},
                      {"L_TE", te}});
    }
  } else if (variable == "N" || variable == "eps" || variable == "lambda_hat") {
    if (!spec.is_lds()) {
      config_error("sweeps over " + variable + " need an lds system");
    }
    const auto [t1, contraction] = lds_certificate(spec.lds_matrix());
    const double lipschitz = p.number("L", 1.0);
    const double bias = p.number("bias", 0.0);
    const std::size_t base_n = variable == "N" ? 0 : p.count("N");
    const double base_eps = variable == "eps" ? 0.0 : p.number("eps");
    if (variable != "eps" && !(base_eps > 0.0)) {
      config_error("params.eps must be > 0");
    }

    std::optional<json> empirical;
    if (p.has("empirical")) {
      if (variable == "lambda_hat") {
        config_error("empirical runs are only available for N and eps sweeps");
      }
      empirical = p.raw("empirical");
    }
    p.finish();

    for (double g : grid) {
      if (variable == "N" &&
          (g < 1.0 || g != std::floor(g))) {
        config_error("N grid values must be positive integers");
      }
      if (variable == "eps" && !(g > 0.0)) {
        config_error("eps grid values must be positive");
      }
      if (variable == "lambda_hat" && !(g >= 0.0 && g < 1.0)) {
        config_error("lambda_hat grid values must be in [0, 1)");
      }
    }

    std::vector<std::optional<DeviationRow>> measured(grid.size());
    if (empirical) {
      Params ep(*empirical, "params.empirical");
      const Reward reward = read_reward(ep, spec.dimension());
      const Vector x0 = ep.vector("x0", spec.dimension());
      const std::size_t m = ep.count("M");
      const TargetMean target =
          read_target(ep, spec, reward, x0, default_burn_in(spec), config.seed,
                      options.workers);
      ep.finish();
      ExperimentOptions opts;
      opts.workers = options.workers;
      if (variable == "eps") {
        const auto report = deviation_probability_experiment(
            spec, reward, x0, base_n, grid, m, config.seed, target, opts);
        for (std::size_t i = 0; i < grid.size(); ++i) {
          measured[i] = report.rows[i];
        }
      } else {
        for (std::size_t i = 0; i < grid.size(); ++i) {
          const auto report = deviation_probability_experiment(
              spec, reward, x0, static_cast<std::size_t>(grid[i]), {base_eps},
              m, derive_seed(config.seed, i), target, opts);
          measured[i] = report.rows[0];
        }
      }
    }

    csv << "variable,value,C,lambda_hat,N,eps,tensorized_constant,bias,bound,"
           "empirical,ci_high,pass\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double g = grid[i];
      const double lambda = variable == "lambda_hat" ? g : contraction.lambda_hat;
      const std::size_t n =
          variable == "N" ? static_cast<std::size_t>(g) : base_n;
      const double e = variable == "eps" ? g : base_eps;
      const double effective_bias =
          measured[i] ? measured[i]->threshold - e : bias;
      const ConcentrationCertificate cert{t1.constant, lambda, n, lipschitz,
                                          effective_bias};
      const double tensorized = tensorized_constant(t1.constant, lambda, n);
      const double bound = cert.tail_bound(e);
      csv << variable << ',' << g << ',' << t1.constant << ',' << lambda << ','
          << n << ',' << e << ',' << tensorized << ',' << effective_bias << ','
          << bound << ',';
      json row = {{"value", g},
                  {"C", t1.constant},
                  {"lambda_hat", lambda},
                  {"N", n},
                  {"eps", e},
                  {"tensorized_constant", tensorized},
                  {"bias", effective_bias},
                  {"bound", bound}};
      if (measured[i]) {
        csv << measured[i]->frequency << ',' << measured[i]->ci_high << ','
            << (measured[i]->pass ? 1 : 0) << '\n';
        row["empirical"] = measured[i]->frequency;
        row["ci_high"] = measured[i]->ci_high;
        row["pass"] = measured[i]->pass;
        pass = pass && measured[i]->pass;
      } else {
        csv << ",,\n";
      }
      rows.push_back(std::move(row));
    }
  } else {
    config_error("params.variable must be one of N, eps, lambda_hat, alpha_hat");
  }

  json result = {{"variable", variable}, {"rows", std::move(rows)}};
  const std::string stem = output_stem(config);
  std::vector<fs::path> files;
  files.push_back(write_text(options, stem + ".csv", csv.str()));
  files.push_back(write_text(options, stem + ".json",
                             envelope(config, pass, std::move(result)).dump(2) +
                                 "\n"));
  return finish(config, pass, std::move(files));
}

CommandResult run(const std::string& command, const fs::path& config_path,
                  const RunOptions& options) {
  try {
    const LoadedConfig config = load_config_file(config_path, options);
    if (command == "certify") return cmd_certify(config, options);
    if (command == "verify") return cmd_verify(config, options);
    if (command == "sweep") return cmd_sweep(config, options);
    config_error("unknown command \"" + command + "\"");
  } catch (const Error& e) {
    return {kConfigError,
            error_document(std::string(to_string(e.kind())), e.what())};
  } catch (const json::exception& e) {
    return {kConfigError, error_document("config", e.what())};
  } catch (const fs::filesystem_error& e) {
    return {kConfigError, error_document("io", e.what())};
  } catch (const std::exception& e) {
    return {kConfigError, error_document("internal", e.what())};
  }
}

}  // namespace concentrix::cli
