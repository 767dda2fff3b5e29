#pragma once

#include <cmath>
#include <cstdint>

namespace speckle {

/// SplitMix64 (Steele, Lea & Flood, 2014). State advances by the golden
/// gamma 0x9E3779B97F4A7C15; each output is the murmur3-style finalizer of
/// the new state. From state 0 the first outputs are 0xE220A8397B1DCDAF,
/// 0x6E789E6AA1B965F4, 0x06C45D188009454F.
class SplitMix64 {
 public:
  static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

  explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t next() noexcept {
    state_ += kGamma;
    return mix(state_);
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Independent SplitMix64 stream for element `index` of a field generated
/// with `seed`. The starting state depends only on (seed, index), so fields
/// can be filled in any order or in parallel with identical results.
constexpr SplitMix64 element_stream(std::uint64_t seed, std::uint64_t index) noexcept {
  return SplitMix64(SplitMix64::mix(SplitMix64::mix(seed) + SplitMix64::kGamma * (index + 1)));
}

/// Gamma variates from a SplitMix64 stream.
///
/// Uniforms: top 53 bits, offset by half an ulp, so u is in (0, 1).
/// Normals: Marsaglia polar method, one variate per accepted pair (the
///   second is dropped so the stream layout does not depend on call history).
/// Gamma(shape, 1): Marsaglia & Tsang (2000) squeeze/rejection for
///   shape >= 1; for shape < 1, Gamma(shape + 1) * u^(1/shape).
class GammaSampler {
 public:
  explicit constexpr GammaSampler(SplitMix64 stream) noexcept : stream_(stream) {}

  double uniform() noexcept {
    return (static_cast<double>(stream_.next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() noexcept {
    for (;;) {
      const double x = 2.0 * uniform() - 1.0;
      const double y = 2.0 * uniform() - 1.0;
      const double s = x * x + y * y;
      if (s < 1.0 && s > 0.0) return x * std::sqrt(-2.0 * std::log(s) / s);
    }
  }

  /// Gamma with the given shape and unit scale. shape must be positive.
  double gamma(double shape) noexcept {
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = 0.0;
      double v = 0.0;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

 private:
  SplitMix64 stream_;
};

}  // namespace speckle
