#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace divlogic {

/// Counter-based generator: output k of stream (seed, stream) is a fixed
/// SplitMix64-style hash of (seed, stream, k). Streams are cheap to derive,
/// so every instance and every retry gets its own reproducible stream.
///
/// All distributions are implemented here rather than through <random>,
/// whose distributions differ between standard libraries.
class CounterRng {
 public:
  static constexpr std::string_view kAlgorithm = "splitmix64-ctr/1";

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

  std::uint64_t next_u64();

  /// Uniform integer in [lo, hi] (inclusive), rejection sampled.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1)); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01();

  /// Index drawn proportionally to non-negative weights. Requires a positive total.
  std::size_t weighted_index(std::span<const double> weights);

  /// Independent child stream; (seed, stream, key) identifies it.
  CounterRng split(std::uint64_t key) const;

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

}  // namespace divlogic
