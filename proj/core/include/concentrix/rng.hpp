#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace concentrix {

/// SplitMix64 finalizer. Bijective 64-bit avalanche mix.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed for the `index`-th independent task of an experiment keyed by
/// `master`. Depends only on (master, index), so any scheduling of tasks
/// across workers reproduces the same streams.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ (index * 0xD1B54A32D192ED03ULL + 1));
}

/// Sub-stream tags. Used as `derive_seed(master, tag)` to obtain the master
/// seed for one phase of a multi-phase experiment.
namespace stream {
inline constexpr std::uint64_t kReplications = 0x5245504CULL;  // "REPL"
inline constexpr std::uint64_t kReference = 0x52454646ULL;     // "REFF"
inline constexpr std::uint64_t kBias = 0x42494153ULL;          // "BIAS"
inline constexpr std::uint64_t kTarget = 0x54415247ULL;        // "TARG"
inline constexpr std::uint64_t kDiagnostic = 0x44494147ULL;    // "DIAG"
inline constexpr std::uint64_t kProbe = 0x50524F42ULL;         // "PROB"
}  // namespace stream

/// Standard-normal vector source over a seeded 64-bit Mersenne twister.
class GaussianNoise {
 public:
  explicit GaussianNoise(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  double next() { return normal_(engine_); }

  void fill(Eigen::Ref<Eigen::VectorXd> out) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = normal_(engine_);
  }

  double uniform() { return uniform_(engine_); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace concentrix
