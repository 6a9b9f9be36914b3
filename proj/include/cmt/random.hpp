// Seed derivation and per-replication random streams.
//
// Every replication draws from streams whose seeds are a stateless function of
// (master seed, replication index, stream tag), so results never depend on how
// replications are scheduled across workers.

#ifndef CMT_RANDOM_HPP
#define CMT_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace cmt {

/// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t tag = 0) {
  return mix64(mix64(mix64(master) ^ index) ^ (tag * 0xd6e8feb86659fd93ULL));
}

/// Uniform doubles in [0, 1) with 53 random bits, platform independent.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}

  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; consumes two uniforms.
  double normal() {
    double u1 = next();
    while (u1 <= 0.0) u1 = next();
    const double u2 = next();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

enum class StreamTag : std::uint64_t { Responses = 0, Pruning = 1, Walk = 2 };

/// Independent streams owned by one simulated examinee.
struct ExamineeStreams {
  std::uint64_t master = 0;
  std::uint64_t replication = 0;

  UniformStream responses() const {
    return UniformStream(derive_seed(master, replication, static_cast<std::uint64_t>(StreamTag::Responses)));
  }
  std::uint64_t pruning_seed() const {
    return derive_seed(master, replication, static_cast<std::uint64_t>(StreamTag::Pruning));
  }
};

}  // namespace cmt

#endif  // CMT_RANDOM_HPP
