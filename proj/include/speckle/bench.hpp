#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "speckle/bregman.hpp"
#include "speckle/error.hpp"
#include "speckle/format.hpp"
#include "speckle/image.hpp"
#include "speckle/image_io.hpp"
#include "speckle/noise_model.hpp"

namespace speckle {

/// Regularization values to try, plus an optional golden-section refinement
/// (in log lambda) between the neighbours of the best grid point.
struct SweepSpec {
  std::vector<double> lambdas;
  bool refine = false;
  int refine_evals = 8;

  /// count values evenly spaced in log between lo and hi, inclusive.
  static SweepSpec log_grid(double lo, double hi, int count, bool refine = false) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
      throw InvalidArgument("SweepSpec::log_grid: need 0 < lo <= hi and count >= 1");
    }
    SweepSpec spec;
    spec.refine = refine;
    if (count == 1) {
      spec.lambdas = {lo};
      return spec;
    }
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int i = 0; i < count; ++i) {
      spec.lambdas.push_back(std::exp(a + (b - a) * i / (count - 1)));
    }
    return spec;
  }

  void validate() const {
    if (lambdas.empty()) throw InvalidArgument("SweepSpec: lambda grid is empty");
    for (double l : lambdas) {
      if (!(l > 0.0) || !std::isfinite(l)) {
        throw InvalidArgument("SweepSpec: lambda values must be finite and > 0");
      }
    }
    if (refine && refine_evals < 1) throw InvalidArgument("SweepSpec: refine_evals must be >= 1");
  }
};

/// 15 log-spaced values over two decades centred on sqrt(M).
inline SweepSpec default_sweep(double looks, bool refine = true) {
  const double center = std::sqrt(looks);
  return SweepSpec::log_grid(center / 10.0, center * 10.0, 15, refine);
}

struct SweepPoint {
  double lambda = 0.0;
  double err = NAN;
  int iterations = 0;
  bool converged = false;
  double seconds = 0.0;
  bool refinement = false;
  std::optional<std::string> error;

  bool ok() const { return !error.has_value(); }
};

struct SweepResult {
  double best_lambda = 0.0;
  SweepPoint best;
  std::vector<SweepPoint> points;  ///< grid order, then refinement order
};

namespace detail {

inline SweepPoint evaluate_lambda(const ImageGrid& x_true, const LogObservation& obs,
                                  const SpeckleModel& model, SolverConfig cfg, double lambda) {
  SweepPoint pt;
  pt.lambda = lambda;
  cfg.lambda = lambda;
  const auto start = std::chrono::steady_clock::now();
  try {
    const RestoreResult res = restore(obs, model, cfg);
    pt.err = relative_error(res.x_hat, x_true);
    pt.iterations = res.iterations;
    pt.converged = res.converged;
  } catch (const Error& e) {
    pt.error = e.what();
  }
  pt.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return pt;
}

// Strictly better; ties keep the earlier point.
inline bool better(const SweepPoint& a, const SweepPoint& b) {
  if (!a.ok()) return false;
  if (!b.ok()) return true;
  return a.err < b.err;
}

}  // namespace detail

/// Restores `y` once per lambda and scores relative_error against x_true.
/// The tau of cfg_template, when set, is kept fixed across the sweep; unset
/// tau follows 2 * lambda. Failing grid points are recorded, not fatal.
inline SweepResult lambda_sweep(const ImageGrid& x_true, const ImageGrid& y,
                                const SpeckleModel& model, const SolverConfig& cfg_template,
                                const SweepSpec& spec, double clamp_floor = kDefaultClampFloor) {
  require_same_shape(x_true, y, "lambda_sweep");
  spec.validate();
  const LogObservation obs = to_log(y, clamp_floor);

  SweepResult result;
  std::optional<std::size_t> best;
  auto consider = [&](SweepPoint pt) {
    result.points.push_back(std::move(pt));
    const std::size_t idx = result.points.size() - 1;
    if (!best || detail::better(result.points[idx], result.points[*best])) best = idx;
  };

  for (double lambda : spec.lambdas) {
    consider(detail::evaluate_lambda(x_true, obs, model, cfg_template, lambda));
  }
  if (!best || !result.points[*best].ok()) {
    throw Error("lambda_sweep: every grid point failed");
  }

  if (spec.refine && spec.lambdas.size() > 1) {
    std::vector<double> sorted = spec.lambdas;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    const double center = result.points[*best].lambda;
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), center);
    const std::size_t i = static_cast<std::size_t>(it - sorted.begin());
    double lo = std::log(sorted[i == 0 ? 0 : i - 1]);
    double hi = std::log(sorted[std::min(i + 1, sorted.size() - 1)]);

    auto eval = [&](double log_lambda) {
      SweepPoint pt =
          detail::evaluate_lambda(x_true, obs, model, cfg_template, std::exp(log_lambda));
      pt.refinement = true;
      const double score = pt.ok() ? pt.err : INFINITY;
      consider(std::move(pt));
      return score;
    };

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    int evals = 0;
    double f1 = INFINITY;
    double f2 = INFINITY;
    if (evals < spec.refine_evals) { f1 = eval(x1); ++evals; }
    if (evals < spec.refine_evals) { f2 = eval(x2); ++evals; }
    while (evals < spec.refine_evals) {
      if (f1 <= f2) {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - inv_phi * (hi - lo);
        f1 = eval(x1);
      } else {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + inv_phi * (hi - lo);
        f2 = eval(x2);
      }
      ++evals;
    }
  }

  result.best = result.points[*best];
  result.best_lambda = result.best.lambda;
  return result;
}

/// CSV with header lambda,err,iters,converged,refinement.
inline void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "lambda,err,iters,converged,refinement\n";
  for (const auto& p : sweep.points) {
    out << format_double(p.lambda) << ',' << format_double(p.err) << ',' << p.iterations << ','
        << (p.converged ? 1 : 0) << ',' << (p.refinement ? 1 : 0) << '\n';
  }
}

/// One line of the results table: best lambda for (image, M).
struct BenchRow {
  std::string image;
  double looks = 0.0;
  double lambda = NAN;
  double err = NAN;
  int iterations = 0;
  double seconds = 0.0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;
};

struct BenchImage {
  std::string id;
  std::filesystem::path path;
};

struct TableOptions {
  SolverConfig solver{};
  /// Grid to sweep; unset uses default_sweep(M) for each M, refined per
  /// refine / refine_evals.
  std::optional<SweepSpec> sweep;
  bool refine = true;
  int refine_evals = 8;
  double clamp_floor = kDefaultClampFloor;
};

/// Rows are produced image-major, then in the order of `looks`. `seeds` holds
/// either one seed for every row or exactly one seed per row.
inline std::vector<BenchRow> run_table(const std::vector<BenchImage>& images,
                                       const std::vector<double>& looks,
                                       const std::vector<std::uint64_t>& seeds,
                                       const TableOptions& options) {
  const std::size_t n_rows = images.size() * looks.size();
  if (n_rows > 0 && seeds.size() != 1 && seeds.size() != n_rows) {
    throw InvalidArgument("run_table: expected 1 or " + std::to_string(n_rows) + " seeds, got " +
                          std::to_string(seeds.size()));
  }
  std::vector<BenchRow> rows;
  rows.reserve(n_rows);
  for (const auto& image : images) {
    std::optional<ImageGrid> x;
    std::string load_error;
    try {
      x = load_image(image.path);
    } catch (const Error& e) {
      load_error = e.what();
    }
    for (double m : looks) {
      BenchRow row;
      row.image = image.id;
      row.looks = m;
      row.seed = seeds.size() == 1 ? seeds[0] : seeds[rows.size()];
      if (!x) {
        row.error = load_error;
        rows.push_back(std::move(row));
        continue;
      }
      try {
        const SpeckleModel model(m);
        const ImageGrid noise =
            sample_speckle(model, x->width(), x->height(), row.seed, options.solver.threads);
        const ImageGrid y = apply_speckle(*x, noise);
        SweepSpec spec = default_sweep(m, options.refine);
        spec.refine_evals = options.refine_evals;
        if (options.sweep) spec = *options.sweep;
        const SweepResult sweep =
            lambda_sweep(*x, y, model, options.solver, spec, options.clamp_floor);
        row.lambda = sweep.best_lambda;
        row.err = sweep.best.err;
        row.iterations = sweep.best.iterations;
        row.seconds = sweep.best.seconds;
      } catch (const Error& e) {
        row.error = e.what();
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

/// CSV with header image,M,lambda,err,iters,seconds,seed. Failed rows carry
/// nan for lambda and err. With record_time false the seconds column is 0,
/// which makes the output a pure function of inputs, seeds and settings.
inline void write_table_csv(std::ostream& out, const std::vector<BenchRow>& rows,
                            bool record_time = true) {
  out << "image,M,lambda,err,iters,seconds,seed\n";
  for (const auto& r : rows) {
    out << r.image << ',' << format_double(r.looks) << ',' << format_double(r.lambda) << ','
        << format_double(r.err) << ',' << r.iterations << ','
        << format_double(record_time ? r.seconds : 0.0) << ',' << r.seed << '\n';
  }
}

}  // namespace speckle
