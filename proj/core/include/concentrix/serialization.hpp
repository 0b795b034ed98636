#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "concentrix/dynamics.hpp"
#include "concentrix/lyapunov.hpp"
#include "concentrix/montecarlo.hpp"
#include "concentrix/transport.hpp"

namespace concentrix {

using json = nlohmann::json;

std::string_view library_version();

/// 64-bit FNV-1a of `text`, as 16 lowercase hex digits.
std::string fnv1a_hex(std::string_view text);

/// Hash of the canonical (sorted-key, compact) dump of a JSON value.
std::string json_hash(const json& value);

/// Parses `{"type":"lds","A":[[...]]}` or
/// `{"type":"slds","regions":[{"predicate":{...},"A":[[...]]}, ...]}`.
/// Predicates: `{"ball_le": r}`, `{"ball_gt": r}`,
/// `{"halfspaces":[{"normal":[...],"offset":c}]}`, `{"catch_all": true}`;
/// keys other than catch_all may be combined in one object (conjunction).
/// Throws Error(kInvalidSpec) on malformed input.
SystemSpec system_from_json(const json& value);
json system_to_json(const SystemSpec& spec);

Matrix matrix_from_json(const json& value);
json matrix_to_json(const Eigen::Ref<const Matrix>& m);
Vector vector_from_json(const json& value);
json vector_to_json(const Eigen::Ref<const Vector>& v);

/// "norm", "coordinate:<i>", or {"coordinate": i}. Custom rewards have no
/// JSON form. Throws Error(kInvalidArgument) on an unknown tag.
Reward reward_from_json(const json& value);

std::string to_string(MetricTag tag);

/// CSV with header `step,x_1,...,x_n`.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

/// CSV with header `epsilon,empirical,ci_low,ci_high,bound,pass`.
void write_deviation_csv(std::ostream& out, const DeviationReport& report);

void to_json(json& j, const T1Certificate& c);
void to_json(json& j, const ContractionCertificate& c);
void to_json(json& j, const ConcentrationCertificate& c);
void to_json(json& j, const ExpLyapunovCertificate& c);
void to_json(json& j, const DriftPair& d);
void to_json(json& j, const GeometricDriftCertificate& g);
void to_json(json& j, const MinorizationEstimate& m);
void to_json(json& j, const SldsHypothesisReport& r);
void to_json(json& j, const DriftCheckReport& r);
void to_json(json& j, const PointwiseDriftCheck& r);
void to_json(json& j, const TargetMean& t);
void to_json(json& j, const DeviationReport& r);
void to_json(json& j, const ContractionFit& f);
void to_json(json& j, const AutocovarianceReport& r);
void to_json(json& j, const WassersteinEstimate& w);

}  // namespace concentrix
