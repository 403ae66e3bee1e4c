#include "divlogic/rng.hpp"

#include <limits>
#include <stdexcept>

namespace divlogic {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t CounterRng::next_u64() {
  const std::uint64_t key = mix64(seed_ ^ mix64(stream_ + 0x632be59bd9b4e019ULL));
  return mix64(key + 0x9e3779b97f4a7c15ULL * ++counter_);
}

std::int64_t CounterRng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next_u64());  // full 64-bit range
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
  std::uint64_t x;
  do x = next_u64();
  while (x >= limit);
  return lo + static_cast<std::int64_t>(x % span);
}

double CounterRng::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::size_t CounterRng::weighted_index(std::span<const double> weights) {
  double total = 0;
  for (double w : weights) {
    if (w < 0) throw std::invalid_argument("weighted_index: negative weight");
    total += w;
  }
  if (!(total > 0)) throw std::invalid_argument("weighted_index: weights sum to zero");
  const double target = uniform01() * total;
  double acc = 0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0) continue;
    acc += weights[i];
    last_positive = i;
    if (target < acc) return i;
  }
  return last_positive;
}

CounterRng CounterRng::split(std::uint64_t key) const {
  return CounterRng(seed_, mix64(stream_ ^ mix64(key + 0x2545f4914f6cdd1dULL)));
}

}  // namespace divlogic
