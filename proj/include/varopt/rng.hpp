#pragma once

#include <cstdint>
#include <random>

namespace varopt {

/// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t x);

/// Deterministic random stream. Every draw goes through the raw 64-bit
/// engine output so the sequence does not depend on the standard library's
/// distribution implementations (except `normal`, used only for weight init).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Stream `stream` of master seed `seed`. Depends only on the pair, so
  /// chain i gets the same numbers however chains are scheduled.
  static Rng for_stream(std::uint64_t seed, std::uint64_t stream);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  double normal(double mean, double stddev);

  /// Uniform integer on [0, n).
  std::uint64_t below(std::uint64_t n);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Named sub-seed of a master seed (e.g. separate streams for the g survey
/// and the main AIS pass).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag);

}  // namespace varopt
