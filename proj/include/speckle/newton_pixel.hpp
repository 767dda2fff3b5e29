#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "speckle/error.hpp"
#include "speckle/image.hpp"
#include "speckle/parallel.hpp"

namespace speckle {

/// One decoupled data subproblem:
///   minimize  phi(z) = z + e^{g - z} + (a/2) (z - c)^2,   a > 0.
/// phi is strictly convex (phi'' = e^{g-z} + a), so the minimizer is unique
/// and lies in [min(g, c), max(g, c)].
struct PixelProblem {
  double g;
  double c;
  double a;

  double derivative(double z) const { return 1.0 - std::exp(g - z) + a * (z - c); }
  double second_derivative(double z) const { return std::exp(g - z) + a; }
};

inline constexpr int kDefaultNewtonIters = 4;
inline constexpr double kDefaultSafeguardTol = 1e-12;

/// Newton start: the largest of three lower bounds on the minimizer,
///   (g + a c) / (1 + a)            from log(1 + x) <= x,
///   c - 1/a                        since 1 + a (z* - c) = e^{g - z*} > 0,
///   g - log(1 + a (g - c))         when g > c.
/// phi' is concave and increasing, so Newton from the left of the root
/// climbs monotonically onto it without overshoot, and e^{g - z0} is at most
/// max(1, 1 + a (g - c)).
inline double newton_initial_guess(const PixelProblem& p) {
  double z0 = std::max((p.g + p.a * p.c) / (1.0 + p.a), p.c - 1.0 / p.a);
  if (p.g > p.c) z0 = std::max(z0, p.g - std::log1p(p.a * (p.g - p.c)));
  return z0;
}

/// Plain Newton from newton_initial_guess, no safeguards.
inline double newton_steps(const PixelProblem& p, int iters) {
  double z = newton_initial_guess(p);
  for (int k = 0; k < iters; ++k) z -= p.derivative(z) / p.second_derivative(z);
  return z;
}

/// Returns z with |phi'(z)| <= safeguard_tol (or the root to within a few
/// ulps when rounding makes the tolerance unreachable).
///
/// Fast path: newton_iters plain Newton steps from newton_initial_guess.
/// The solve falls back to the bracket [min(g,c), max(g,c)] when an iterate
/// leaves [min(g,c) - 1/a - 1, max(g,c) + 1/a + 1], turns non-finite, fails
/// to decrease |phi'|, or the tolerance is still unmet after newton_iters
/// steps. There it takes a Newton step when it lands strictly inside the
/// current bracket and bisects otherwise.
inline double solve_pixel(const PixelProblem& p, int newton_iters = kDefaultNewtonIters,
                          double safeguard_tol = kDefaultSafeguardTol) {
  double lo = std::min(p.g, p.c);
  double hi = std::max(p.g, p.c);
  if (lo == hi) return lo;  // phi'(g) = 0 when c == g

  const double wide_lo = lo - 1.0 / p.a - 1.0;
  const double wide_hi = hi + 1.0 / p.a + 1.0;

  double z = std::clamp(newton_initial_guess(p), lo, hi);
  double fz = p.derivative(z);
  bool fallback = false;
  for (int k = 0; k < newton_iters; ++k) {
    if (std::abs(fz) <= safeguard_tol) return z;
    const double next = z - fz / p.second_derivative(z);
    if (!std::isfinite(next) || next < wide_lo || next > wide_hi) {
      fallback = true;
      break;
    }
    const double fnext = p.derivative(next);
    if (!std::isfinite(fnext) || std::abs(fnext) >= std::abs(fz)) {
      fallback = true;
      break;
    }
    z = next;
    fz = fnext;
  }
  if (!fallback && std::abs(fz) <= safeguard_tol) return z;

  // Bracketed phase. phi' is increasing, phi'(lo) <= 0 <= phi'(hi).
  if (z > lo && z < hi && std::isfinite(fz)) {
    if (fz > 0.0) {
      hi = z;
    } else {
      lo = z;
    }
  }
  z = 0.5 * (lo + hi);
  for (int k = 0; k < 400; ++k) {
    fz = p.derivative(z);
    if (std::abs(fz) <= safeguard_tol) return z;
    if (fz > 0.0) {
      hi = z;
    } else {
      lo = z;
    }
    if (!(hi - lo > 4.0 * std::numeric_limits<double>::epsilon() *
                        std::max({1.0, std::abs(lo), std::abs(hi)}))) {
      return 0.5 * (lo + hi);
    }
    const double newton = z - fz / p.second_derivative(z);
    z = std::isfinite(newton) && newton > lo && newton < hi ? newton : 0.5 * (lo + hi);
  }
  return z;
}

/// Applies solve_pixel per pixel with a = tau / M and c = u + b.
inline ImageGrid solve_field(const ImageGrid& g, const ImageGrid& u, const ImageGrid& b,
                             double tau, double looks, int newton_iters = kDefaultNewtonIters,
                             double safeguard_tol = kDefaultSafeguardTol, int threads = 1) {
  require_same_shape(g, u, "solve_field");
  require_same_shape(g, b, "solve_field");
  if (!(tau > 0.0) || !(looks > 0.0)) {
    throw InvalidArgument("solve_field: tau and M must be > 0");
  }
  if (newton_iters < 1) throw InvalidArgument("solve_field: newton_iters must be >= 1");
  const double a = tau / looks;
  ImageGrid z(g.width(), g.height());
  parallel_rows(g.height(), threads, [&](std::size_t r) {
    const std::size_t base = r * g.width();
    for (std::size_t c = 0; c < g.width(); ++c) {
      const std::size_t i = base + c;
      z[i] = solve_pixel({g[i], u[i] + b[i], a}, newton_iters, safeguard_tol);
    }
  });
  return z;
}

}  // namespace speckle
