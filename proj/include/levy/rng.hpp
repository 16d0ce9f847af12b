#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace levy {

/// Splittable random stream.
///
/// A stream is identified by a master seed and up to two stream ids (for
/// example a path index and a purpose tag). Streams are cheap to construct,
/// so each simulated path or particle step owns its own and results never
/// depend on how work is scheduled across threads.
///
/// The generator is SplitMix64. It satisfies UniformRandomBitGenerator and can
/// be handed to the standard <random> distributions.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t seed = 0) : state_(mix(seed)) {}
  Stream(std::uint64_t seed, std::uint64_t id_a, std::uint64_t id_b = 0)
      : state_(mix(mix(seed + kGolden * (id_a + 1)) ^ (kGolden2 * (id_b + 1)))) {}

  /// Derives a child seed, for keys that need more than two ids.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t id) {
    return mix(mix(seed ^ kGolden2) + kGolden * (id + 1));
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += kGolden;
    return mix(state_);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  double normal() { return normal_(*this); }

  double normal(double mean, double sd) { return mean + sd * normal_(*this); }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kGolden2 = 0xD1B54A32D192ED03ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Purpose tags so that different estimators seeded with the same master seed
/// draw from unrelated streams.
namespace stream_tag {
inline constexpr std::uint64_t kPath = 1;
inline constexpr std::uint64_t kDensity = 2;
inline constexpr std::uint64_t kSurvival = 3;
inline constexpr std::uint64_t kTable = 4;
inline constexpr std::uint64_t kParticle = 5;
inline constexpr std::uint64_t kResample = 6;
inline constexpr std::uint64_t kObservation = 7;
inline constexpr std::uint64_t kBounds = 8;
inline constexpr std::uint64_t kGoodness = 9;
inline constexpr std::uint64_t kExtension = 10;
}  // namespace stream_tag

}  // namespace levy
