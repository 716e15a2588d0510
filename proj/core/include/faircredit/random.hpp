#pragma once

#include <cstdint>
#include <random>

namespace faircredit {

/// Seeded pseudo-random stream. Independent streams are derived from one
/// master seed and a stream id, so the draws seen by one quantity do not
/// depend on how many draws any other quantity consumed.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Stream `stream_id` of the family rooted at `master_seed`.
  static RandomStream derive(std::uint64_t master_seed, std::uint64_t stream_id);

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  double normal() { return normal_(engine_); }

  std::mt19937_64& engine() { return engine_; }

  bool operator==(const RandomStream&) const = default;

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// SplitMix64 finalizer; used to decorrelate (seed, stream id) pairs.
std::uint64_t mix64(std::uint64_t x);

}  // namespace faircredit
