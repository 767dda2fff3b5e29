#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "speckle/error.hpp"
#include "speckle/image.hpp"
#include "speckle/parallel.hpp"

namespace speckle {

/// Isotropic total variation: sum over pixels of the Euclidean norm of the
/// forward-difference gradient (zero difference past the last row/column).
inline double tv(const ImageGrid& z) {
  const std::size_t w = z.width();
  const std::size_t h = z.height();
  double s = 0.0;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      const double dh = c + 1 < w ? z(r, c + 1) - z(r, c) : 0.0;
      const double dv = r + 1 < h ? z(r + 1, c) - z(r, c) : 0.0;
      s += std::sqrt(dh * dh + dv * dv);
    }
  }
  return s;
}

/// Settings for Chambolle's dual projection method.
struct ChambolleConfig {
  /// Dual step. Convergence is proven for step <= 1/8; values up to 1/4 are
  /// stable in practice.
  double step = 0.248;
  int max_iters = 10;
  /// Stop once max |p_new - p_old| <= tol. Zero runs exactly max_iters.
  double tol = 0.0;

  void validate() const {
    if (!(step > 0.0 && step <= 0.25)) {
      throw InvalidArgument("ChambolleConfig: step must lie in (0, 0.25]");
    }
    if (max_iters < 1) throw InvalidArgument("ChambolleConfig: max_iters must be >= 1");
    if (!(tol >= 0.0)) throw InvalidArgument("ChambolleConfig: tol must be >= 0");
  }
};

struct DenoiseResult {
  ImageGrid u;
  DualField dual;
  int iterations = 0;
};

/// Approximately solves  min_u 1/2 ||u - v||^2 + weight * TV(u)  with
/// Chambolle's semi-implicit dual iteration
///
///   q = div p + v / weight
///   p <- (p + step * grad q) / (1 + step * |grad q|)
///   u = v + weight * div p
///
/// Each sweep is Jacobi-style (reads only the previous iterate), so rows may
/// be updated in parallel without changing the result. The dual field is
/// returned for warm starting a subsequent call with the same weight.
inline DenoiseResult denoise(const ImageGrid& v, double weight, const ChambolleConfig& cfg,
                             std::optional<DualField> warm_start = std::nullopt,
                             int threads = 1) {
  cfg.validate();
  if (!(weight >= 0.0) || !std::isfinite(weight)) {
    throw InvalidArgument("denoise: weight must be finite and >= 0");
  }
  const std::size_t w = v.width();
  const std::size_t h = v.height();
  DualField p = warm_start ? std::move(*warm_start) : DualField(w, h);
  require_same_shape(v, p.horizontal, "denoise (warm start)");
  require_same_shape(v, p.vertical, "denoise (warm start)");

  if (weight == 0.0) return {v, std::move(p), 0};

  const double inv_weight = 1.0 / weight;
  const double step = cfg.step;
  ImageGrid q(w, h);
  std::vector<double> row_change(cfg.tol > 0.0 ? h : 0, 0.0);

  auto div_at = [&](std::size_t r, std::size_t c) {
    double d = 0.0;
    if (c + 1 < w) d += p.horizontal(r, c);
    if (c > 0) d -= p.horizontal(r, c - 1);
    if (r + 1 < h) d += p.vertical(r, c);
    if (r > 0) d -= p.vertical(r - 1, c);
    return d;
  };

  int it = 0;
  while (it < cfg.max_iters) {
    ++it;
    parallel_rows(h, threads, [&](std::size_t r) {
      for (std::size_t c = 0; c < w; ++c) q(r, c) = div_at(r, c) + v(r, c) * inv_weight;
    });
    parallel_rows(h, threads, [&](std::size_t r) {
      double change = 0.0;
      for (std::size_t c = 0; c < w; ++c) {
        const double gh = c + 1 < w ? q(r, c + 1) - q(r, c) : 0.0;
        const double gv = r + 1 < h ? q(r + 1, c) - q(r, c) : 0.0;
        const double denom = 1.0 + step * std::sqrt(gh * gh + gv * gv);
        const double ph = (p.horizontal(r, c) + step * gh) / denom;
        const double pv = (p.vertical(r, c) + step * gv) / denom;
        if (!row_change.empty()) {
          change = std::max({change, std::abs(ph - p.horizontal(r, c)),
                             std::abs(pv - p.vertical(r, c))});
        }
        p.horizontal(r, c) = ph;
        p.vertical(r, c) = pv;
      }
      if (!row_change.empty()) row_change[r] = change;
    });
    if (!row_change.empty() &&
        *std::max_element(row_change.begin(), row_change.end()) <= cfg.tol) {
      break;
    }
  }

  ImageGrid u(w, h);
  parallel_rows(h, threads, [&](std::size_t r) {
    for (std::size_t c = 0; c < w; ++c) u(r, c) = v(r, c) + weight * div_at(r, c);
  });
  return {std::move(u), std::move(p), it};
}

}  // namespace speckle
