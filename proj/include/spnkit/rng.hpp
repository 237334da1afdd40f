#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace spnkit {

/// SplitMix64 (Steele, Lea & Flood 2014). Chosen because its behaviour is a
/// pure function of the 64-bit seed, independent of platform and standard
/// library, so every artifact written by this toolkit regenerates
/// bit-identically anywhere.
///
/// Stream splitting: the stream for sample index i of a run seeded with s is
/// SplitMix64(s ^ i). Consumers draw a documented, fixed sequence of values
/// from their stream, which makes per-index work order-independent and
/// parallelizable.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (cosine branch). Consumes exactly two
  /// uniform draws per call; nothing is cached between calls.
  double next_normal() {
    const double u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

inline SplitMix64 stream_for(std::uint64_t seed, std::uint64_t index) {
  return SplitMix64(seed ^ index);
}

}  // namespace spnkit
