#pragma once

#include <cstdint>
#include <string_view>

namespace ostk {

/// 64-bit FNV-1a. Stable across platforms and runs, unlike std::hash.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Combine a seed with a named stream label into a new key.
std::uint64_t derive_key(std::uint64_t seed, std::string_view label);
std::uint64_t derive_key(std::uint64_t seed, std::uint64_t index);

// Counter-based generator: draw n is mix64(key + n * golden). Streams are
// addressed by key alone, so results never depend on call interleaving across
// streams. Normals use Box-Muller so output is identical on every platform.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double normal(double mean, double sigma) { return mean + sigma * normal(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ostk
