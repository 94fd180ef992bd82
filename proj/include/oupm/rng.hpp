#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace oupm {

/// Counter-based random stream.
///
/// Every draw is a pure function of (seed, stream, counter), so any number of
/// streams can be evaluated in any order or on any thread with identical
/// results. The mixing function is the SplitMix64 finalizer; a stream is the
/// SplitMix64 sequence started from a key derived from (seed, stream).
class CounterRng {
 public:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(mix(seed + kGamma) ^ (stream * 0xd1b54a32d192ed03ULL + 0x8bb84b93962eacc9ULL))) {}

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t bits(std::uint64_t counter) const { return mix(key_ + (counter + 1) * kGamma); }

  // Uniform on the open interval (0, 1).
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on counters 2k and 2k+1.
  double normal(std::uint64_t k) const {
    const double u1 = uniform(2 * k);
    const double u2 = uniform(2 * k + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n) by rejection; consumes counters from `counter` onward.
  std::uint64_t below(std::uint64_t n, std::uint64_t& counter) const {
    const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0} - n + 1) % n;
    for (;;) {
      const std::uint64_t r = bits(counter++);
      if (r >= limit) return r % n;
    }
  }

 private:
  std::uint64_t key_;
};

}  // namespace oupm
