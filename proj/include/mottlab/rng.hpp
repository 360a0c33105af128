#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace mottlab {

// Counter-based 64-bit generator: output n is a bijective mix of
// seed + n * golden_gamma, so streams are cheap to fork and replay.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    state_ += kGamma;
    return mix(state_);
  }

  std::uint64_t state() const { return state_; }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  bool operator==(const SplitMix64&) const = default;

 private:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t state_;
};

/// Seed of realization `index` under `master`. Distinct indices give
/// decorrelated streams; the map is pure so sweeps replay exactly.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return SplitMix64::mix(SplitMix64::mix(master) ^
                         SplitMix64::mix(index + 0x632be59bd9b4e019ULL));
}

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(SplitMix64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on (0, 1].
inline double uniform_open0(SplitMix64& rng) {
  return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}

inline double exponential(SplitMix64& rng, double rate) {
  return -std::log(uniform_open0(rng)) / rate;
}

}  // namespace mottlab
