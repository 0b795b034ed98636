#include "concentrix/serialization.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "concentrix/errors.hpp"

#ifndef CONCENTRIX_VERSION_STRING
#define CONCENTRIX_VERSION_STRING "unknown"
#endif

namespace concentrix {

namespace {

[[noreturn]] void bad_spec(const std::string& what) {
  throw Error(ErrorKind::kInvalidSpec, "system spec: " + what);
}

double number_at(const json& value, const char* what) {
  if (!value.is_number()) bad_spec(std::string(what) + " must be a number");
  return value.get<double>();
}

Predicate predicate_from_json(const json& value, Eigen::Index dimension) {
  if (!value.is_object()) bad_spec("predicate must be an object");
  Predicate p;
  bool any = false;
  for (const auto& [key, item] : value.items()) {
    if (key == "catch_all") {
      if (!item.is_boolean() || !item.get<bool>()) {
        bad_spec("catch_all must be true");
      }
      any = true;
    } else if (key == "ball_le") {
      p.ball_le = number_at(item, "ball_le");
      any = true;
    } else if (key == "ball_gt") {
      p.ball_gt = number_at(item, "ball_gt");
      any = true;
    } else if (key == "halfspaces") {
      if (!item.is_array() || item.empty()) {
        bad_spec("halfspaces must be a non-empty array");
      }
      for (const auto& h : item) {
        if (!h.is_object() || !h.contains("normal") || !h.contains("offset")) {
          bad_spec("halfspace needs normal and offset");
        }
        Halfspace hs{vector_from_json(h.at("normal")),
                     number_at(h.at("offset"), "offset")};
        if (hs.normal.size() != dimension) {
          bad_spec("halfspace normal has the wrong dimension");
        }
        p.halfspaces.push_back(std::move(hs));
      }
      any = true;
    } else {
      bad_spec("unknown predicate key '" + key + "'");
    }
  }
  if (!any) bad_spec("empty predicate; use {\"catch_all\": true}");
  if (value.contains("catch_all") && !p.is_catch_all()) {
    bad_spec("catch_all cannot be combined with other constraints");
  }
  return p;
}

json predicate_to_json(const Predicate& p) {
  if (p.is_catch_all()) return {{"catch_all", true}};
  json j = json::object();
  if (p.ball_le) j["ball_le"] = *p.ball_le;
  if (p.ball_gt) j["ball_gt"] = *p.ball_gt;
  if (!p.halfspaces.empty()) {
    json hs = json::array();
    for (const auto& h : p.halfspaces) {
      hs.push_back({{"normal", vector_to_json(h.normal)}, {"offset", h.offset}});
    }
    j["halfspaces"] = std::move(hs);
  }
  return j;
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string_view library_version() { return CONCENTRIX_VERSION_STRING; }

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

std::string json_hash(const json& value) { return fnv1a_hex(value.dump()); }

Matrix matrix_from_json(const json& value) {
  if (!value.is_array() || value.empty()) bad_spec("matrix must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(value.size());
  if (!value[0].is_array() || value[0].empty()) bad_spec("matrix rows must be non-empty arrays");
  const auto cols = static_cast<Eigen::Index>(value[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& row = value[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      bad_spec("matrix rows must all have the same length");
    }
    for (Eigen::Index k = 0; k < cols; ++k) {
      m(i, k) = number_at(row[static_cast<std::size_t>(k)], "matrix entry");
    }
  }
  return m;
}

json matrix_to_json(const Eigen::Ref<const Matrix>& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vector vector_from_json(const json& value) {
  if (!value.is_array() || value.empty()) bad_spec("vector must be a non-empty array");
  Vector v(static_cast<Eigen::Index>(value.size()));
  for (std::size_t i = 0; i < value.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = number_at(value[i], "vector entry");
  }
  return v;
}

json vector_to_json(const Eigen::Ref<const Vector>& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

SystemSpec system_from_json(const json& value) {
  if (!value.is_object() || !value.contains("type")) {
    bad_spec("expected an object with a \"type\" field");
  }
  const auto& type = value.at("type");
  if (!type.is_string()) bad_spec("type must be a string");
  if (type == "lds") {
    if (!value.contains("A")) bad_spec("lds needs \"A\"");
    return SystemSpec::lds(matrix_from_json(value.at("A")));
  }
  if (type == "slds") {
    if (!value.contains("regions") || !value.at("regions").is_array()) {
      bad_spec("slds needs a \"regions\" array");
    }
    const auto& regions = value.at("regions");
    if (regions.empty()) bad_spec("slds needs at least one region");
    std::vector<Matrix> matrices;
    for (const auto& r : regions) {
      if (!r.is_object() || !r.contains("A") || !r.contains("predicate")) {
        bad_spec("each region needs \"predicate\" and \"A\"");
      }
      matrices.push_back(matrix_from_json(r.at("A")));
    }
    const Eigen::Index n = matrices.front().rows();
    std::vector<Predicate> predicates;
    for (const auto& r : regions) {
      predicates.push_back(predicate_from_json(r.at("predicate"), n));
    }
    return SystemSpec::slds(RegionSpec(std::move(predicates), n),
                            std::move(matrices));
  }
  bad_spec("unknown type '" + type.get<std::string>() + "'");
}

json system_to_json(const SystemSpec& spec) {
  if (spec.is_lds()) {
    return {{"type", "lds"}, {"A", matrix_to_json(spec.lds_matrix())}};
  }
  json regions = json::array();
  for (std::size_t j = 0; j < spec.matrices().size(); ++j) {
    regions.push_back({{"predicate", predicate_to_json(spec.regions()[j])},
                       {"A", matrix_to_json(spec.matrices()[j])}});
  }
  return {{"type", "slds"}, {"regions", std::move(regions)}};
}

Reward reward_from_json(const json& value) {
  if (value.is_string()) {
    const auto tag = value.get<std::string>();
    if (tag == "norm") return Reward::norm();
    constexpr std::string_view prefix = "coordinate:";
    if (tag.rfind(prefix, 0) == 0) {
      const auto digits = tag.substr(prefix.size());
      if (!digits.empty() && digits.size() <= 9 &&
          std::all_of(digits.begin(), digits.end(),
                      [](unsigned char c) { return std::isdigit(c) != 0; })) {
        return Reward::coordinate(std::stol(digits));
      }
    }
    throw Error(ErrorKind::kInvalidArgument, "unknown reward tag '" + tag + "'");
  }
  if (value.is_object() && value.size() == 1 && value.contains("coordinate") &&
      value.at("coordinate").is_number_integer() &&
      value.at("coordinate").get<long>() >= 0) {
    return Reward::coordinate(value.at("coordinate").get<long>());
  }
  throw Error(ErrorKind::kInvalidArgument,
              "unknown reward tag " + value.dump());
}

std::string to_string(MetricTag tag) {
  return tag == MetricTag::kHarris ? "harris" : "euclidean";
}

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "step";
  for (Eigen::Index i = 0; i < trajectory.states.rows(); ++i) {
    out << ",x_" << (i + 1);
  }
  out << '\n' << std::setprecision(17);
  for (Eigen::Index k = 0; k < trajectory.length(); ++k) {
    out << k;
    for (Eigen::Index i = 0; i < trajectory.states.rows(); ++i) {
      out << ',' << trajectory.states(i, k);
    }
    out << '\n';
  }
}

void write_deviation_csv(std::ostream& out, const DeviationReport& report) {
  out << "epsilon,empirical,ci_low,ci_high,bound,pass\n"
      << std::setprecision(12);
  for (const auto& row : report.rows) {
    out << row.epsilon << ',' << row.frequency << ',' << row.ci_low << ','
        << row.ci_high << ',' << row.bound << ',' << (row.pass ? 1 : 0)
        << '\n';
  }
}

void to_json(json& j, const T1Certificate& c) {
  j = {{"C", c.constant}, {"metric", to_string(c.metric)}};
}

void to_json(json& j, const ContractionCertificate& c) {
  j = {{"lambda_hat", c.lambda_hat}};
}

void to_json(json& j, const ConcentrationCertificate& c) {
  j = {{"bound", "trajectory_contractive_subgaussian"},
       {"formula", "2*exp(-N*eps^2*(1-lambda_hat)^2/(2*C*L^2)) at deviation bias+eps"},
       {"C", c.constant},
       {"lambda_hat", c.lambda_hat},
       {"N", c.samples},
       {"L", c.lipschitz},
       {"bias", c.bias}};
}

void to_json(json& j, const ExpLyapunovCertificate& c) {
  j = {{"alpha_hat", c.alpha_hat}, {"beta", c.beta}, {"C", c.constant}};
}

void to_json(json& j, const DriftPair& d) {
  j = {{"eta", d.eta},
       {"C_hat", d.c_hat},
       {"alpha_hat", d.alpha_hat},
       {"split_radius_sq", optional_json(d.split_radius_sq)},
       {"stationary_moment_bound", d.stationary_moment_bound()}};
}

void to_json(json& j, const GeometricDriftCertificate& g) {
  j = {{"gamma", g.gamma}, {"K", g.k}, {"V", g.v.name()}};
}

void to_json(json& j, const MinorizationEstimate& m) {
  j = {{"beta", m.beta},
       {"small_set_radius", m.small_set_radius},
       {"truncation", {m.truncation_lo, m.truncation_hi}},
       {"resolution", m.resolution},
       {"small_set_points", m.small_set_points},
       {"lower_bound", m.lower_bound}};
}

void to_json(json& j, const SldsHypothesisReport& r) {
  json regions = json::array();
  for (const auto& c : r.regions) {
    regions.push_back({{"region", c.region},
                       {"norm", c.norm},
                       {"contractive", c.contractive},
                       {"bounded", c.bounded},
                       {"bounded_by_sampling", c.bounded_by_sampling},
                       {"ok", c.ok}});
  }
  j = {{"rho", r.rho},
       {"gamma", r.gamma},
       {"L", r.lipschitz_bound},
       {"passed", r.passed},
       {"violating_region", optional_json(r.violating_region)},
       {"probabilistic", r.probabilistic},
       {"regions", std::move(regions)}};
}

void to_json(json& j, const DriftCheckReport& r) {
  json points = json::array();
  for (const auto& p : r.points) {
    points.push_back({{"x", vector_to_json(p.x)},
                      {"V", p.v},
                      {"PV_mean", p.pv_mean},
                      {"PV_stderr", p.pv_stderr},
                      {"analytic_rhs", optional_json(p.analytic_rhs)},
                      {"within_analytic", optional_json(p.within_analytic)}});
  }
  j = {{"V", r.v.name()},
       {"samples_per_point", r.samples_per_point},
       {"seed", r.seed},
       {"points", std::move(points)},
       {"all_within_analytic", r.all_within_analytic}};
  j["fit"] = r.fit ? json{{"gamma_hat", r.fit->gamma_hat}, {"K_hat", r.fit->k_hat}}
                   : json(nullptr);
  j["analytic"] = r.analytic ? json(*r.analytic) : json(nullptr);
}

void to_json(json& j, const PointwiseDriftCheck& r) {
  j = {{"points", r.points},
       {"violations", r.violations},
       {"worst_relative_margin", r.worst_relative_margin},
       {"passed", r.passed()}};
}

void to_json(json& j, const TargetMean& t) {
  j = {{"value", t.value}, {"provenance", t.provenance}};
  j["ci"] = t.ci ? json{t.ci->low, t.ci->high} : json(nullptr);
}

void to_json(json& j, const DeviationReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"epsilon", row.epsilon},
                    {"threshold", row.threshold},
                    {"exceedances", row.exceedances},
                    {"empirical", row.frequency},
                    {"ci_low", row.ci_low},
                    {"ci_high", row.ci_high},
                    {"bound", row.bound},
                    {"pass", row.pass}});
  }
  j = {{"kind", r.kind},
       {"bound", r.bound_id},
       {"reward", r.reward},
       {"L", r.lipschitz},
       {"C", r.constant},
       {"lambda_hat", r.lambda_hat},
       {"N", r.samples},
       {"M", r.replications},
       {"burn_in", optional_json(r.burn_in)},
       {"target_mean", r.target},
       {"bias",
        {{"value", r.bias.value},
         {"w1_one_step", r.bias.w1_one_step},
         {"samples", r.bias.samples},
         {"w2_closed_form", optional_json(r.bias.w2_closed_form)},
         {"inequality", "W1 <= W2"}}},
       {"confidence", r.confidence},
       {"ci_method", "clopper_pearson"},
       {"ci_floor", r.ci_floor},
       {"seed", r.seed},
       {"burn_in_w1_diagnostic", optional_json(r.burn_in_w1_diagnostic)},
       {"notes", r.notes},
       {"rows", std::move(rows)},
       {"all_pass", r.all_pass()}};
}

void to_json(json& j, const ContractionFit& f) {
  json steps = json::array();
  for (const auto& s : f.steps) {
    steps.push_back({{"n", s.n}, {"w1", s.w1}, {"used", s.used}});
  }
  j = {{"kappa_hat", f.kappa_hat},
       {"noise_floor", f.noise_floor},
       {"m", f.sample_size},
       {"steps", std::move(steps)}};
}

void to_json(json& j, const AutocovarianceReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"lag", row.lag},
                    {"covariance", row.covariance},
                    {"stderr", row.std_error},
                    {"ci_low", row.ci_low},
                    {"ci_high", row.ci_high}});
  }
  j = {{"length", r.length},
       {"confidence", r.confidence},
       {"ci_method", "batch_means"},
       {"rows", std::move(rows)}};
}

void to_json(json& j, const WassersteinEstimate& w) {
  j = {{"value", w.value},
       {"m", w.size},
       {"metric", to_string(w.metric)},
       {"solver", w.solver == W1Solver::kSorted1d ? "sorted_1d" : "assignment"}};
}

}  // namespace concentrix
