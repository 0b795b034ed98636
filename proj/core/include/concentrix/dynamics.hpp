#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "concentrix/rng.hpp"

namespace concentrix {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Linear inequality `normal . x <= offset`.
struct Halfspace {
  Vector normal;
  double offset = 0.0;
};

/// Conjunction of halfspaces and optional norm bounds. The empty predicate is
/// the catch-all. Ball bounds are closed (`||x|| <= r`), their complements open
/// (`||x|| > r`).
struct Predicate {
  std::vector<Halfspace> halfspaces;
  std::optional<double> ball_le;
  std::optional<double> ball_gt;

  static Predicate catch_all() { return {}; }
  static Predicate ball(double radius) { return {{}, radius, std::nullopt}; }
  static Predicate outside_ball(double radius) {
    return {{}, std::nullopt, radius};
  }

  bool is_catch_all() const {
    return halfspaces.empty() && !ball_le && !ball_gt;
  }
  bool contains(const Eigen::Ref<const Vector>& x) const;
};

/// Ordered decision list of predicates: the first matching entry wins, which
/// makes the induced regions pairwise disjoint. The last entry must be the
/// catch-all so every point is classified.
class RegionSpec {
 public:
  RegionSpec() = default;
  /// Throws Error(kInvalidSpec) if empty or if the last predicate is not a
  /// catch-all, and Error(kDimensionMismatch) if a halfspace normal does not
  /// have `dimension` entries.
  RegionSpec(std::vector<Predicate> predicates, Eigen::Index dimension);

  std::size_t size() const { return predicates_.size(); }
  const Predicate& operator[](std::size_t i) const { return predicates_[i]; }
  const std::vector<Predicate>& predicates() const { return predicates_; }

 private:
  std::vector<Predicate> predicates_;
};

/// Index of the first predicate matching `x`.
std::size_t region_index(const RegionSpec& regions,
                         const Eigen::Ref<const Vector>& x);

/// Closed-loop map x' = A_{j(x)} x + xi with xi ~ N(0, I_n). A linear system
/// is the single-region special case but keeps its own tag so callers can
/// dispatch on the certificates that only hold for it.
class SystemSpec {
 public:
  enum class Kind { kLds, kSlds };

  static SystemSpec lds(Matrix a);
  static SystemSpec slds(RegionSpec regions, std::vector<Matrix> matrices);

  Kind kind() const { return kind_; }
  bool is_lds() const { return kind_ == Kind::kLds; }
  Eigen::Index dimension() const { return dimension_; }

  const RegionSpec& regions() const { return regions_; }
  const std::vector<Matrix>& matrices() const { return matrices_; }
  /// The system matrix of an lds. Throws Error(kInvalidSpec) for an slds.
  const Matrix& lds_matrix() const;

  std::size_t region_of(const Eigen::Ref<const Vector>& x) const;
  const Matrix& matrix_at(const Eigen::Ref<const Vector>& x) const {
    return matrices_[region_of(x)];
  }

  /// The same dynamics viewed as a one-region switched system.
  SystemSpec as_switched() const;

 private:
  SystemSpec() = default;

  Kind kind_ = Kind::kLds;
  Eigen::Index dimension_ = 0;
  RegionSpec regions_;
  std::vector<Matrix> matrices_;
};

struct Trajectory {
  /// Column k holds x_k; there are N+1 columns including x_0.
  Matrix states;
  std::uint64_t seed = 0;

  Eigen::Index length() const { return states.cols(); }
  auto state(Eigen::Index k) const { return states.col(k); }
  auto x0() const { return states.col(0); }
};

Vector step(const SystemSpec& spec, const Eigen::Ref<const Vector>& x,
            const Eigen::Ref<const Vector>& noise);

/// In-place step into `out` (must not alias `x`). Hot-loop variant of step().
void step_into(const SystemSpec& spec, const Eigen::Ref<const Vector>& x,
               const Eigen::Ref<const Vector>& noise, Eigen::Ref<Vector> out);

/// Pure function of (spec, x0, steps, seed).
Trajectory simulate(const SystemSpec& spec, const Eigen::Ref<const Vector>& x0,
                    std::size_t steps, std::uint64_t seed);

/// Final state of simulate(spec, x0, steps, seed) without storing the path.
Vector simulate_endpoint(const SystemSpec& spec,
                         const Eigen::Ref<const Vector>& x0, std::size_t steps,
                         std::uint64_t seed);

/// Largest singular value, from the symmetric eigenproblem of A^T A.
double spectral_norm(const Eigen::Ref<const Matrix>& a);

struct RegionCheck {
  std::size_t region = 0;
  double norm = 0.0;
  bool contractive = false;  // ||A_j|| <= gamma
  bool bounded = false;      // region inside the closed rho-ball
  bool bounded_by_sampling = false;
  bool ok = false;
};

struct SldsHypothesisReport {
  double rho = 0.0;
  double gamma = 0.0;
  double lipschitz_bound = 0.0;
  bool passed = false;
  std::optional<std::size_t> violating_region;
  std::vector<RegionCheck> regions;
  /// True when any containment verdict came from rejection sampling.
  bool probabilistic = false;
};

/// Checks that every region is either contained in the rho-ball with
/// ||A_j|| <= lipschitz_bound, or satisfies ||A_j|| <= gamma. A region whose
/// predicate carries `ball_le <= rho` is contained analytically; any other
/// region is probed with `probe_points` points on the sphere of radius
/// rho*(1+1e-6) and the same number on the exterior shell out to 1e3*rho (all
/// classified with decision-list semantics); a hit means "not contained".
/// Throws Error(kInvalidHypothesis) unless 0 <= gamma < 1.
SldsHypothesisReport check_slds_hypothesis(const SystemSpec& spec, double rho,
                                           double gamma, double lipschitz_bound,
                                           std::size_t probe_points = 100000,
                                           std::uint64_t seed = 0x5EED);

}  // namespace concentrix
