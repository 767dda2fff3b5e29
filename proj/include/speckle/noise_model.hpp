#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>

#include "speckle/error.hpp"
#include "speckle/image.hpp"
#include "speckle/parallel.hpp"
#include "speckle/random.hpp"
#include "speckle/tv.hpp"

namespace speckle {

inline constexpr double kDefaultClampFloor = 1e-12;

/// Multiplicative M-look speckle: N ~ Gamma(shape M, scale 1/M), so E[N] = 1
/// and Var[N] = 1/M.
class SpeckleModel {
 public:
  explicit SpeckleModel(double looks) : looks_(looks) {
    if (!(looks > 0.0) || !std::isfinite(looks)) {
      throw InvalidArgument("SpeckleModel: number of looks must be finite and > 0, got " +
                            std::to_string(looks));
    }
  }

  double looks() const noexcept { return looks_; }

  /// log p_N(n) = M log M - log Gamma(M) + (M - 1) log n - M n,  n > 0.
  double noise_log_pdf(double n) const {
    if (!(n > 0.0)) return -INFINITY;
    const double m = looks_;
    return m * std::log(m) - std::lgamma(m) + (m - 1.0) * std::log(n) - m * n;
  }

  /// log p_W(w) for W = log N:  M log M - log Gamma(M) + M w - M e^w.
  double log_noise_log_pdf(double w) const {
    const double m = looks_;
    return m * std::log(m) - std::lgamma(m) + m * w - m * std::exp(w);
  }

  /// Density of N.
  double noise_pdf(double n) const { return std::exp(noise_log_pdf(n)); }
  /// Density of W = log N.
  double log_noise_pdf(double w) const { return std::exp(log_noise_log_pdf(w)); }

 private:
  double looks_;
};

/// g = log(max(y, clamp_floor)), the additive-model observation.
struct LogObservation {
  ImageGrid g;
  double clamp_floor = kDefaultClampFloor;
};

/// i.i.d. unit-mean Gamma field. Pixel i draws from element_stream(seed, i),
/// so the field does not depend on the thread count.
inline ImageGrid sample_speckle(const SpeckleModel& model, std::size_t width,
                                std::size_t height, std::uint64_t seed, int threads = 1) {
  ImageGrid n(width, height);
  const double m = model.looks();
  parallel_rows(height, threads, [&](std::size_t r) {
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t i = r * width + c;
      GammaSampler sampler(element_stream(seed, i));
      n[i] = sampler.gamma(m) / m;
    }
  });
  return n;
}

/// y = x * n elementwise.
inline ImageGrid apply_speckle(const ImageGrid& x, const ImageGrid& noise) {
  require_same_shape(x, noise, "apply_speckle");
  ImageGrid y(x.width(), x.height());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (x[i] < 0.0) throw InvalidArgument("apply_speckle: clean image must be nonnegative");
    y[i] = x[i] * noise[i];
  }
  return y;
}

inline LogObservation to_log(const ImageGrid& y, double clamp_floor = kDefaultClampFloor) {
  if (!(clamp_floor > 0.0)) throw InvalidArgument("to_log: clamp_floor must be > 0");
  ImageGrid g(y.width(), y.height());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::log(std::max(y[i], clamp_floor));
  return {std::move(g), clamp_floor};
}

/// M * sum_s (z_s + e^{g_s - z_s}). The additive constant of the negative
/// log-likelihood is dropped.
inline double data_term(const ImageGrid& z, const LogObservation& obs, const SpeckleModel& model) {
  require_same_shape(z, obs.g, "data_term");
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double e = std::exp(obs.g[i] - z[i]);
    if (!std::isfinite(e)) {
      throw NumericError("data_term: exp(g - z) overflows at pixel " + std::to_string(i));
    }
    s += z[i] + e;
  }
  return model.looks() * s;
}

/// Penalized negative log-likelihood L(z) = data_term(z) + lambda * TV(z).
inline double objective(const ImageGrid& z, const LogObservation& obs, const SpeckleModel& model,
                        double lambda) {
  if (!(lambda >= 0.0)) throw InvalidArgument("objective: lambda must be >= 0");
  return data_term(z, obs, model) + lambda * tv(z);
}

}  // namespace speckle
