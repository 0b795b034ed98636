#include "concentrix/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "concentrix/errors.hpp"

namespace concentrix {

namespace {

void require_dimension(Eigen::Index expected, Eigen::Index actual,
                       const char* what) {
  if (expected != actual) {
    std::ostringstream os;
    os << what << ": expected dimension " << expected << ", got " << actual;
    throw Error(ErrorKind::kDimensionMismatch, os.str());
  }
}

void require_finite_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    std::ostringstream os;
    os << what << ": system matrix must be square and non-empty, got "
       << a.rows() << "x" << a.cols();
    throw Error(ErrorKind::kInvalidSpec, os.str());
  }
  if (!a.allFinite()) {
    throw Error(ErrorKind::kNonFinite,
                std::string(what) + ": matrix has non-finite entries");
  }
}

}  // namespace

bool Predicate::contains(const Eigen::Ref<const Vector>& x) const {
  if (ball_le || ball_gt) {
    const double norm = x.norm();
    if (ball_le && !(norm <= *ball_le)) return false;
    if (ball_gt && !(norm > *ball_gt)) return false;
  }
  for (const auto& h : halfspaces) {
    if (!(h.normal.dot(x) <= h.offset)) return false;
  }
  return true;
}

RegionSpec::RegionSpec(std::vector<Predicate> predicates,
                       Eigen::Index dimension)
    : predicates_(std::move(predicates)) {
  if (predicates_.empty()) {
    throw Error(ErrorKind::kInvalidSpec, "region list is empty");
  }
  if (!predicates_.back().is_catch_all()) {
    throw Error(ErrorKind::kInvalidSpec,
                "last region predicate must be the catch-all");
  }
  for (const auto& p : predicates_) {
    for (const auto& h : p.halfspaces) {
      require_dimension(dimension, h.normal.size(), "halfspace normal");
      if (!h.normal.allFinite() || !std::isfinite(h.offset)) {
        throw Error(ErrorKind::kNonFinite, "halfspace has non-finite entries");
      }
    }
    if ((p.ball_le && !(*p.ball_le >= 0.0)) ||
        (p.ball_gt && !(*p.ball_gt >= 0.0))) {
      throw Error(ErrorKind::kInvalidSpec,
                  "ball radius must be finite and nonnegative");
    }
  }
}

std::size_t region_index(const RegionSpec& regions,
                         const Eigen::Ref<const Vector>& x) {
  const std::size_t last = regions.size() - 1;
  for (std::size_t i = 0; i < last; ++i) {
    if (regions[i].contains(x)) return i;
  }
  return last;
}

SystemSpec SystemSpec::lds(Matrix a) {
  require_finite_square(a, "lds");
  SystemSpec spec;
  spec.kind_ = Kind::kLds;
  spec.dimension_ = a.rows();
  spec.regions_ = RegionSpec({Predicate::catch_all()}, a.rows());
  spec.matrices_.push_back(std::move(a));
  return spec;
}

SystemSpec SystemSpec::slds(RegionSpec regions, std::vector<Matrix> matrices) {
  if (regions.size() == 0) {
    throw Error(ErrorKind::kInvalidSpec, "slds needs at least one region");
  }
  if (regions.size() != matrices.size()) {
    std::ostringstream os;
    os << "slds has " << regions.size() << " regions but " << matrices.size()
       << " matrices";
    throw Error(ErrorKind::kInvalidSpec, os.str());
  }
  require_finite_square(matrices.front(), "slds");
  for (const auto& a : matrices) {
    require_finite_square(a, "slds");
    require_dimension(matrices.front().rows(), a.rows(), "slds matrix");
  }
  for (const auto& p : regions.predicates()) {
    for (const auto& h : p.halfspaces) {
      require_dimension(matrices.front().rows(), h.normal.size(),
                        "halfspace normal");
    }
  }
  SystemSpec spec;
  spec.kind_ = Kind::kSlds;
  spec.dimension_ = matrices.front().rows();
  spec.regions_ = std::move(regions);
  spec.matrices_ = std::move(matrices);
  return spec;
}

const Matrix& SystemSpec::lds_matrix() const {
  if (kind_ != Kind::kLds) {
    throw Error(ErrorKind::kInvalidSpec, "system is not an lds");
  }
  return matrices_.front();
}

std::size_t SystemSpec::region_of(const Eigen::Ref<const Vector>& x) const {
  return matrices_.size() == 1 ? 0 : region_index(regions_, x);
}

SystemSpec SystemSpec::as_switched() const {
  SystemSpec copy = *this;
  copy.kind_ = Kind::kSlds;
  return copy;
}

void step_into(const SystemSpec& spec, const Eigen::Ref<const Vector>& x,
               const Eigen::Ref<const Vector>& noise, Eigen::Ref<Vector> out) {
  out.noalias() = spec.matrix_at(x) * x;
  out += noise;
}

Vector step(const SystemSpec& spec, const Eigen::Ref<const Vector>& x,
            const Eigen::Ref<const Vector>& noise) {
  require_dimension(spec.dimension(), x.size(), "step state");
  require_dimension(spec.dimension(), noise.size(), "step noise");
  Vector out(spec.dimension());
  step_into(spec, x, noise, out);
  return out;
}

Trajectory simulate(const SystemSpec& spec, const Eigen::Ref<const Vector>& x0,
                    std::size_t steps, std::uint64_t seed) {
  require_dimension(spec.dimension(), x0.size(), "simulate x0");
  const Eigen::Index n = spec.dimension();
  Trajectory traj;
  traj.seed = seed;
  traj.states.resize(n, static_cast<Eigen::Index>(steps) + 1);
  traj.states.col(0) = x0;

  GaussianNoise noise(seed);
  Vector xi(n);
  for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(steps); ++k) {
    noise.fill(xi);
    traj.states.col(k + 1).noalias() =
        spec.matrix_at(traj.states.col(k)) * traj.states.col(k);
    traj.states.col(k + 1) += xi;
  }
  return traj;
}

Vector simulate_endpoint(const SystemSpec& spec,
                         const Eigen::Ref<const Vector>& x0, std::size_t steps,
                         std::uint64_t seed) {
  require_dimension(spec.dimension(), x0.size(), "simulate x0");
  GaussianNoise noise(seed);
  Vector x = x0;
  Vector next(spec.dimension());
  Vector xi(spec.dimension());
  for (std::size_t k = 0; k < steps; ++k) {
    noise.fill(xi);
    step_into(spec, x, xi, next);
    x.swap(next);
  }
  return x;
}

double spectral_norm(const Eigen::Ref<const Matrix>& a) {
  if (!a.allFinite()) {
    throw Error(ErrorKind::kNonFinite, "spectral_norm: non-finite entries");
  }
  if (a.rows() != a.cols()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "spectral_norm: matrix must be square");
  }
  if (a.size() == 0) return 0.0;
  const Matrix gram = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(eig.eigenvalues().maxCoeff(), 0.0));
}

namespace {

// Sample the sphere of the given radius uniformly (Gaussian direction).
void sample_sphere(GaussianNoise& rng, double radius, Vector& out) {
  double norm = 0.0;
  do {
    rng.fill(out);
    norm = out.norm();
  } while (norm == 0.0);
  out *= radius / norm;
}

bool region_hits_outside(const SystemSpec& spec, std::size_t region,
                         double rho, std::size_t probes, std::uint64_t seed) {
  GaussianNoise rng(derive_seed(seed, region));
  Vector x(spec.dimension());
  const double inner = rho * (1.0 + 1e-6);
  // Exterior shell radii are log-uniform on [inner, 1e3*inner]; for rho = 0
  // the shell starts at 1e-6.
  const double shell_lo = inner > 0.0 ? inner : 1e-6;
  const double log_span = std::log(1e3);
  for (std::size_t i = 0; i < probes; ++i) {
    sample_sphere(rng, inner, x);
    if (inner > 0.0 && spec.region_of(x) == region) return true;
    sample_sphere(rng, shell_lo * std::exp(log_span * rng.uniform()), x);
    if (spec.region_of(x) == region) return true;
  }
  return false;
}

}  // namespace

SldsHypothesisReport check_slds_hypothesis(const SystemSpec& spec, double rho,
                                           double gamma, double lipschitz_bound,
                                           std::size_t probe_points,
                                           std::uint64_t seed) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw Error(ErrorKind::kInvalidHypothesis,
                "gamma must lie in [0, 1); got " + std::to_string(gamma));
  }
  if (!(rho >= 0.0) || !std::isfinite(rho) || !(lipschitz_bound >= 0.0)) {
    throw Error(ErrorKind::kInvalidHypothesis,
                "rho and L must be finite and nonnegative");
  }
  SldsHypothesisReport report;
  report.rho = rho;
  report.gamma = gamma;
  report.lipschitz_bound = lipschitz_bound;
  report.passed = true;

  for (std::size_t j = 0; j < spec.matrices().size(); ++j) {
    RegionCheck check;
    check.region = j;
    check.norm = spectral_norm(spec.matrices()[j]);
    check.contractive = check.norm <= gamma;
    if (!check.contractive) {
      const auto& pred = spec.regions()[j];
      if (pred.ball_le && *pred.ball_le <= rho) {
        check.bounded = true;
      } else {
        check.bounded_by_sampling = true;
        report.probabilistic = true;
        check.bounded = !region_hits_outside(spec, j, rho, probe_points, seed);
      }
    }
    check.ok =
        check.contractive || (check.bounded && check.norm <= lipschitz_bound);
    if (!check.ok && report.passed) {
      report.passed = false;
      report.violating_region = j;
    }
    report.regions.push_back(check);
  }
  return report;
}

}  // namespace concentrix
