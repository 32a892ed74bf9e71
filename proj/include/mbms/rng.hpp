#pragma once

#include <cstdint>

namespace mbms {

/// Named substreams. Each (master seed, stream, entity) triple yields an
/// independent sequence, so per-UE draws do not depend on iteration order.
enum class Stream : std::uint32_t {
  Spawn = 1,
  Shadowing,
  Fading,
  Decode,
  FeedbackError,
  Phases,
  Lifetimes,
  Mobility,
  Background,
};

/// Counter-based generator: output n is splitmix64(key + n * gamma).
class Rng {
 public:
  Rng() = default;
  Rng(std::uint64_t master_seed, Stream stream, std::uint64_t entity = 0);

  std::uint64_t next_u64();

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  double exponential(double mean);
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace mbms
