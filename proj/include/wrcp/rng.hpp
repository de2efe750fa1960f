#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace wrcp {

/// splitmix64 finalizer; used to derive stream seeds from (seed, tag) pairs.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag);

// Tags for the independent random streams one top-level seed fans out into.
// Keeping them centralized guarantees that two call sites asking for "the
// calibration split of seed s" get the same stream.
namespace seed_tag {
inline constexpr std::uint64_t kTrainSplit = 0x1;
inline constexpr std::uint64_t kTestSplit = 0x2;
inline constexpr std::uint64_t kMeanFit = 0x3;
inline constexpr std::uint64_t kMeanFitAlt = 0x4;
inline constexpr std::uint64_t kSourceData = 0x5;
inline constexpr std::uint64_t kTargetData = 0x6;
inline constexpr std::uint64_t kRun = 0x7;
}  // namespace seed_tag

/// Deterministic random generator with portable output: all variates are
/// produced from the raw mt19937_64 stream rather than the distribution
/// objects of <random>, whose sequences are implementation-defined.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform on (0, 1); never returns an exact endpoint.
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via inverse-CDF transform.
  double normal();

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_int(std::uint64_t n);

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_int(i)]);
    }
  }

private:
  std::mt19937_64 engine_;
};

}  // namespace wrcp
