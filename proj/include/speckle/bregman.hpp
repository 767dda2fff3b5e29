#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "speckle/error.hpp"
#include "speckle/format.hpp"
#include "speckle/image.hpp"
#include "speckle/newton_pixel.hpp"
#include "speckle/noise_model.hpp"
#include "speckle/parallel.hpp"
#include "speckle/tv.hpp"

namespace speckle {

enum class InitMode {
  observation,  ///< z = u = g, b = 0
  zeros,        ///< z = u = b = 0
};

/// Settings for the split Bregman restoration loop.
struct SolverConfig {
  double lambda = 1.0;
  /// Splitting weight. Unset means 2 * lambda.
  std::optional<double> tau;
  /// Alternations of the z- and u-subproblems per outer iteration.
  int inner_iters = 1;
  int newton_iters = kDefaultNewtonIters;
  double newton_tol = kDefaultSafeguardTol;
  ChambolleConfig chambolle{};
  /// Carry the Chambolle dual field from one outer iteration to the next.
  bool warm_start_dual = true;
  /// Stop when ||z^k - z^{k-1}||^2 / ||z^{k-1}||^2 < stop_tol (checked from
  /// the second outer iteration on).
  double stop_tol = 1e-4;
  int max_outer = 2000;
  InitMode init = InitMode::observation;
  int threads = 1;

  double effective_tau() const { return tau.value_or(2.0 * lambda); }

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
      throw InvalidArgument("SolverConfig: lambda must be finite and > 0");
    }
    const double t = effective_tau();
    if (!(t > 0.0) || !std::isfinite(t)) {
      throw InvalidArgument("SolverConfig: tau must be finite and > 0");
    }
    if (!(stop_tol > 0.0)) throw InvalidArgument("SolverConfig: stop_tol must be > 0");
    if (inner_iters < 1) throw InvalidArgument("SolverConfig: inner_iters must be >= 1");
    if (newton_iters < 1) throw InvalidArgument("SolverConfig: newton_iters must be >= 1");
    if (!(newton_tol > 0.0)) throw InvalidArgument("SolverConfig: newton_tol must be > 0");
    if (max_outer < 1) throw InvalidArgument("SolverConfig: max_outer must be >= 1");
    if (threads < 1) throw InvalidArgument("SolverConfig: threads must be >= 1");
    chambolle.validate();
  }
};

/// Per-iteration diagnostics.
struct TraceRow {
  int iter = 0;
  double objective = 0.0;      ///< L(z^k) = M sum(z + e^{g-z}) + lambda TV(z)
  double constraint_sq = 0.0;  ///< ||z^k - u^k||^2
  double rel_change = 0.0;     ///< ||z^k - z^{k-1}||^2 / ||z^{k-1}||^2

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

/// Iterates of the outer loop. `iteration` counts completed outer steps.
struct SolverState {
  ImageGrid z;
  ImageGrid u;
  ImageGrid b;
  DualField dual;
  int iteration = 0;
};

struct RestoreResult {
  ImageGrid x_hat;  ///< exp(z), the intensity estimate
  ImageGrid z_final;
  ImageGrid u_final;
  ImageGrid b_final;
  int iterations = 0;
  std::vector<TraceRow> trace;
  bool converged = false;
};

inline SolverState init_state(const LogObservation& obs, InitMode mode) {
  const std::size_t w = obs.g.width();
  const std::size_t h = obs.g.height();
  if (mode == InitMode::observation) {
    return {obs.g, obs.g, ImageGrid(w, h), DualField(w, h), 0};
  }
  return {ImageGrid(w, h), ImageGrid(w, h), ImageGrid(w, h), DualField(w, h), 0};
}

/// One outer iteration, Gauss-Seidel ordering:
///   repeat inner_iters times:
///     z <- argmin sum(z + e^{g-z}) + tau/(2M) ||z - u - b||^2   (per pixel)
///     u <- argmin 1/2 ||u - (z - b)||^2 + (lambda/tau) TV(u)     (Chambolle)
///   b <- b - (z - u)
/// Returns the trace row for the completed iteration.
inline TraceRow step(SolverState& state, const LogObservation& obs, const SpeckleModel& model,
                     const SolverConfig& cfg) {
  const double tau = cfg.effective_tau();
  const double weight = cfg.lambda / tau;
  const int k = state.iteration + 1;
  const ImageGrid z_prev = state.z;

  for (int t = 0; t < cfg.inner_iters; ++t) {
    state.z = solve_field(obs.g, state.u, state.b, tau, model.looks(), cfg.newton_iters,
                          cfg.newton_tol, cfg.threads);
    ImageGrid v = state.z - state.b;
    std::optional<DualField> warm;
    if (cfg.warm_start_dual) warm = std::move(state.dual);
    auto denoised = denoise(v, weight, cfg.chambolle, std::move(warm), cfg.threads);
    state.u = std::move(denoised.u);
    state.dual = std::move(denoised.dual);
  }
  for (std::size_t i = 0; i < state.b.size(); ++i) state.b[i] -= state.z[i] - state.u[i];
  state.iteration = k;

  if (!state.z.all_finite() || !state.u.all_finite()) {
    throw NumericError("non-finite iterate", k);
  }

  TraceRow row;
  row.iter = k;
  try {
    row.objective = objective(state.z, obs, model, cfg.lambda);
  } catch (const NumericError& e) {
    throw NumericError(e.what(), k);
  }
  row.constraint_sq = squared_distance(state.z, state.u);
  const double prev_sq = squared_norm(z_prev);
  const double diff_sq = squared_distance(state.z, z_prev);
  row.rel_change = prev_sq > 0.0 ? diff_sq / prev_sq
                                 : (diff_sq > 0.0 ? INFINITY : 0.0);
  return row;
}

using IterationCallback = std::function<void(const TraceRow&)>;

/// Runs outer iterations until rel_change < stop_tol (from the second
/// iteration on) or max_outer is reached. The first iteration is exempt
/// because with observation initialization its z equals the initial z.
inline RestoreResult restore(const LogObservation& obs, const SpeckleModel& model,
                             const SolverConfig& cfg, const IterationCallback& on_iteration = {}) {
  cfg.validate();
  if (!obs.g.all_finite()) throw InvalidArgument("restore: log observation has non-finite values");

  SolverState state = init_state(obs, cfg.init);
  RestoreResult result{obs.g, obs.g, obs.g, obs.g, 0, {}, false};
  result.trace.reserve(static_cast<std::size_t>(std::min(cfg.max_outer, 4096)));

  while (state.iteration < cfg.max_outer) {
    const TraceRow row = step(state, obs, model, cfg);
    result.trace.push_back(row);
    if (on_iteration) on_iteration(row);
    if (row.iter >= 2 && row.rel_change < cfg.stop_tol) {
      result.converged = true;
      break;
    }
  }

  ImageGrid x(state.z.width(), state.z.height());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = std::exp(state.z[i]);
    if (!(x[i] > 0.0) || !std::isfinite(x[i])) {
      throw NumericError("exp(z) leaves (0, inf) at pixel " + std::to_string(i),
                         state.iteration);
    }
  }
  result.x_hat = std::move(x);
  result.z_final = std::move(state.z);
  result.u_final = std::move(state.u);
  result.b_final = std::move(state.b);
  result.iterations = state.iteration;
  return result;
}

/// CSV with header iter,objective,constraint_sq,rel_change.
inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "iter,objective,constraint_sq,rel_change\n";
  for (const auto& r : rows) {
    out << r.iter << ',' << format_double(r.objective) << ',' << format_double(r.constraint_sq)
        << ',' << format_double(r.rel_change) << '\n';
  }
}

}  // namespace speckle
