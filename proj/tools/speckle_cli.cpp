// speckle: command-line front end for simulation, restoration and
// benchmarking of TV restoration under multiplicative Gamma noise.
//
// Exit codes: 0 success, 2 usage, 3 I/O, 4 not converged, 5 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "speckle/speckle.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNotConverged = 4;
constexpr int kExitNumeric = 5;

using nlohmann::json;

struct Globals {
  int threads = speckle::hardware_threads();
  std::string format;
  std::uint32_t maxval = 255;
};

speckle::ImageFormat resolve_format(const Globals& g, const std::string& path) {
  if (!g.format.empty()) {
    auto f = speckle::parse_format(g.format);
    if (!f) throw speckle::InvalidArgument("unknown --format '" + g.format + "'");
    return *f;
  }
  auto f = speckle::format_from_extension(path);
  if (!f) {
    throw speckle::InvalidArgument("cannot infer format of '" + path +
                                   "' (use .pgm or .spkf, or pass --format)");
  }
  return *f;
}

speckle::ImageGrid load(const Globals& g, const std::string& path) {
  return speckle::load_image(path, resolve_format(g, path));
}

void save(const Globals& g, const speckle::ImageGrid& img, const std::string& path) {
  speckle::save_image(img, path, resolve_format(g, path), speckle::PgmOptions{g.maxval});
}

std::ofstream open_text(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw speckle::IoError(speckle::IoError::Kind::open_failed, "cannot open " + path);
  return out;
}

void print_summary(const json& j) { std::cout << j.dump() << '\n'; }

// Solver flags shared by restore, sweep, bench and trace.
struct SolverFlags {
  std::optional<double> tau;
  std::string init = "observation";
  int max_iters = 2000;
  double stop_tol = 1e-4;
  int inner_iters = 1;
  int newton_iters = speckle::kDefaultNewtonIters;
  int chambolle_iters = 10;
  double chambolle_step = 0.248;
  double clamp_floor = speckle::kDefaultClampFloor;

  void add_to(CLI::App* cmd, bool with_tau = true) {
    if (with_tau) {
      cmd->add_option("--tau", tau, "Splitting weight (default 2*lambda)")
          ->check(CLI::PositiveNumber);
    }
    cmd->add_option("--init", init, "Initialization: observation or zeros")
        ->check(CLI::IsMember({"observation", "zeros"}))
        ->capture_default_str();
    cmd->add_option("--max-iters", max_iters, "Cap on outer iterations")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--stop-tol", stop_tol, "Stop when squared relative change of z drops below")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--inner-iters", inner_iters, "z/u alternations per outer iteration")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--newton-iters", newton_iters, "Newton steps per pixel before fallback")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--chambolle-iters", chambolle_iters, "Dual iterations per TV subproblem")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--chambolle-step", chambolle_step, "Dual step, at most 0.25")
        ->check(CLI::Range(1e-12, 0.25))
        ->capture_default_str();
    cmd->add_option("--clamp-floor", clamp_floor, "Floor applied to intensities before the log")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  speckle::SolverConfig config(double lambda, int threads) const {
    speckle::SolverConfig cfg;
    cfg.lambda = lambda;
    cfg.tau = tau;
    cfg.init = init == "zeros" ? speckle::InitMode::zeros : speckle::InitMode::observation;
    cfg.max_outer = max_iters;
    cfg.stop_tol = stop_tol;
    cfg.inner_iters = inner_iters;
    cfg.newton_iters = newton_iters;
    cfg.chambolle.max_iters = chambolle_iters;
    cfg.chambolle.step = chambolle_step;
    cfg.threads = threads;
    return cfg;
  }
};

// Lambda grid flags shared by sweep and bench.
struct GridFlags {
  std::vector<double> lambdas;
  std::optional<double> lambda_min;
  std::optional<double> lambda_max;
  int lambda_count = 15;
  bool refine = true;
  int refine_evals = 8;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--lambdas", lambdas, "Explicit lambda grid")->delimiter(',');
    cmd->add_option("--lambda-min", lambda_min, "Lower end of a log-spaced grid")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--lambda-max", lambda_max, "Upper end of a log-spaced grid")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--lambda-count", lambda_count, "Points in the log-spaced grid")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_flag("--refine,!--no-refine", refine,
                 "Golden-section refinement around the best grid point (default on)");
    cmd->add_option("--refine-evals", refine_evals, "Evaluations spent on refinement")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  bool given() const { return !lambdas.empty() || lambda_min || lambda_max; }

  speckle::SweepSpec spec(double looks) const {
    speckle::SweepSpec s;
    if (!lambdas.empty()) {
      s.lambdas = lambdas;
    } else if (lambda_min || lambda_max) {
      if (!lambda_min || !lambda_max) {
        throw speckle::InvalidArgument("--lambda-min and --lambda-max must be given together");
      }
      s = speckle::SweepSpec::log_grid(*lambda_min, *lambda_max, lambda_count);
    } else {
      s = speckle::default_sweep(looks, false);
    }
    s.refine = refine;
    s.refine_evals = refine_evals;
    return s;
  }
};

json trace_summary(const std::vector<speckle::TraceRow>& trace) {
  json j;
  if (trace.empty()) return j;
  const auto& first = trace.front();
  const auto& last = trace.back();
  j["objective_first"] = first.objective;
  j["objective_last"] = last.objective;
  j["constraint_sq_first"] = first.constraint_sq;
  j["constraint_sq_last"] = last.constraint_sq;
  j["constraint_ratio"] =
      first.constraint_sq > 0.0 ? last.constraint_sq / first.constraint_sq : 0.0;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TV restoration of images corrupted by multiplicative Gamma speckle"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals globals;
  app.add_option("--threads", globals.threads, "Worker threads (1 = reference mode)")
      ->check(CLI::PositiveNumber);
  app.add_option("--format", globals.format, "Override image format: pgm or rawf64")
      ->check(CLI::IsMember({"pgm", "rawf64", "spkf"}));
  app.add_option("--maxval", globals.maxval, "maxval for PGM output")
      ->check(CLI::Range(1, 65535))
      ->capture_default_str();

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Multiply a clean image by M-look Gamma noise");
  std::string sim_input;
  std::string sim_output;
  double sim_looks = 0.0;
  std::uint64_t sim_seed = 0;
  std::optional<double> sim_floor;
  simulate->add_option("--input", sim_input, "Clean image")->required();
  simulate->add_option("--looks", sim_looks, "Number of looks M > 0")->required();
  simulate->add_option("--seed", sim_seed, "PRNG seed")->capture_default_str();
  simulate->add_option("--output", sim_output, "Speckled image")->required();
  simulate->add_option("--clamp-floor", sim_floor, "Lower bound applied to output intensities")
      ->check(CLI::PositiveNumber);

  // restore
  auto* restore_cmd = app.add_subcommand("restore", "Restore a speckled image");
  std::string rs_input;
  std::string rs_output;
  std::string rs_trace;
  std::string rs_truth;
  double rs_looks = 0.0;
  double rs_lambda = 0.0;
  bool rs_verbose = false;
  SolverFlags rs_solver;
  restore_cmd->add_option("--input", rs_input, "Observed (speckled) intensity image")->required();
  restore_cmd->add_option("--looks", rs_looks, "Number of looks M > 0")->required();
  restore_cmd->add_option("--lambda", rs_lambda, "Regularization weight")->required();
  restore_cmd->add_option("--output", rs_output, "Restored intensity image")->required();
  restore_cmd->add_option("--trace", rs_trace, "Write per-iteration trace CSV here");
  restore_cmd->add_option("--truth", rs_truth, "Clean image; reports relative error");
  restore_cmd->add_flag("--verbose", rs_verbose, "Per-iteration progress on stderr");
  rs_solver.add_to(restore_cmd);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Pick lambda by minimal error against the truth");
  std::string sw_truth;
  std::string sw_input;
  std::string sw_output;
  double sw_looks = 0.0;
  SolverFlags sw_solver;
  GridFlags sw_grid;
  sweep_cmd->add_option("--truth", sw_truth, "Clean image")->required();
  sweep_cmd->add_option("--input", sw_input, "Observed (speckled) intensity image")->required();
  sweep_cmd->add_option("--looks", sw_looks, "Number of looks M > 0")->required();
  sweep_cmd->add_option("--output", sw_output, "Write per-lambda CSV here");
  sw_solver.add_to(sweep_cmd);
  sw_grid.add_to(sweep_cmd);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Simulate and sweep for each (image, M)");
  std::vector<std::string> bn_images;
  std::vector<double> bn_looks;
  std::vector<std::uint64_t> bn_seeds{1};
  std::string bn_output;
  bool bn_no_timing = false;
  SolverFlags bn_solver;
  GridFlags bn_grid;
  bench_cmd->add_option("--image", bn_images, "Clean image as id=path (repeatable)");
  bench_cmd->add_option("--looks", bn_looks, "Numbers of looks")->delimiter(',');
  bench_cmd->add_option("--seed", bn_seeds, "One seed, or one per (image, M) row")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--output", bn_output, "CSV path (default stdout)");
  bench_cmd->add_flag("--no-timing", bn_no_timing, "Write 0 in the seconds column");
  bn_solver.add_to(bench_cmd, false);
  bn_grid.add_to(bench_cmd);

  // trace
  auto* trace_cmd = app.add_subcommand("trace", "Objective and constraint evolution of one run");
  std::string tr_input;
  std::string tr_output;
  std::string tr_restored;
  double tr_looks = 0.0;
  double tr_lambda = 0.0;
  SolverFlags tr_solver;
  trace_cmd->add_option("--input", tr_input, "Observed (speckled) intensity image")->required();
  trace_cmd->add_option("--looks", tr_looks, "Number of looks M > 0")->required();
  trace_cmd->add_option("--lambda", tr_lambda, "Regularization weight")->required();
  trace_cmd->add_option("--output", tr_output, "Trace CSV")->required();
  trace_cmd->add_option("--restored", tr_restored, "Also write the restored image here");
  tr_solver.add_to(trace_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate) {
      const speckle::SpeckleModel model(sim_looks);
      const auto x = load(globals, sim_input);
      const auto noise =
          speckle::sample_speckle(model, x.width(), x.height(), sim_seed, globals.threads);
      auto y = speckle::apply_speckle(x, noise);
      if (sim_floor) {
        for (double& v : y.values()) v = std::max(v, *sim_floor);
      }
      save(globals, y, sim_output);
      print_summary({{"command", "simulate"},
                     {"width", x.width()},
                     {"height", x.height()},
                     {"looks", sim_looks},
                     {"seed", sim_seed},
                     {"output", sim_output}});
      return kExitOk;
    }

    if (*restore_cmd) {
      const speckle::SpeckleModel model(rs_looks);
      const auto y = load(globals, rs_input);
      const auto obs = speckle::to_log(y, rs_solver.clamp_floor);
      const auto cfg = rs_solver.config(rs_lambda, globals.threads);
      speckle::IterationCallback progress;
      if (rs_verbose) {
        progress = [](const speckle::TraceRow& r) {
          std::cerr << "iter " << r.iter << " objective " << r.objective << " constraint "
                    << r.constraint_sq << " change " << r.rel_change << '\n';
        };
      }
      const auto res = speckle::restore(obs, model, cfg, progress);
      save(globals, res.x_hat, rs_output);
      if (!rs_trace.empty()) {
        auto out = open_text(rs_trace);
        speckle::write_trace_csv(out, res.trace);
      }
      json j{{"command", "restore"},
             {"iterations", res.iterations},
             {"converged", res.converged},
             {"lambda", rs_lambda},
             {"tau", cfg.effective_tau()},
             {"output", rs_output}};
      j.update(trace_summary(res.trace));
      if (!rs_truth.empty()) {
        j["err"] = speckle::relative_error(res.x_hat, load(globals, rs_truth));
      }
      print_summary(j);
      if (!res.converged) {
        std::cerr << "restore: stopped at max iterations (" << res.iterations
                  << ") without meeting the stop tolerance\n";
        return kExitNotConverged;
      }
      return kExitOk;
    }

    if (*sweep_cmd) {
      const speckle::SpeckleModel model(sw_looks);
      const auto x = load(globals, sw_truth);
      const auto y = load(globals, sw_input);
      const auto cfg = sw_solver.config(1.0, globals.threads);
      const auto spec = sw_grid.spec(sw_looks);
      const auto res = speckle::lambda_sweep(x, y, model, cfg, spec, sw_solver.clamp_floor);
      if (!sw_output.empty()) {
        auto out = open_text(sw_output);
        speckle::write_sweep_csv(out, res);
      }
      for (const auto& p : res.points) {
        if (!p.ok()) std::cerr << "sweep: lambda " << p.lambda << " failed: " << *p.error << '\n';
      }
      print_summary({{"command", "sweep"},
                     {"best_lambda", res.best_lambda},
                     {"err", res.best.err},
                     {"iterations", res.best.iterations},
                     {"evaluated", res.points.size()}});
      return kExitOk;
    }

    if (*bench_cmd) {
      std::vector<speckle::BenchImage> images;
      for (const auto& spec : bn_images) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
          throw speckle::InvalidArgument("--image expects id=path, got '" + spec + "'");
        }
        images.push_back({spec.substr(0, eq), spec.substr(eq + 1)});
      }
      if (!images.empty() && bn_looks.empty()) {
        throw speckle::InvalidArgument("bench: --looks is required when images are given");
      }
      speckle::TableOptions opts;
      opts.solver = bn_solver.config(1.0, globals.threads);
      opts.clamp_floor = bn_solver.clamp_floor;
      if (bn_grid.given()) opts.sweep = bn_grid.spec(1.0);
      opts.refine = bn_grid.refine;
      opts.refine_evals = bn_grid.refine_evals;
      const auto rows = speckle::run_table(images, bn_looks, bn_seeds, opts);
      int failures = 0;
      for (const auto& r : rows) {
        if (r.error) {
          ++failures;
          std::cerr << "bench: " << r.image << " M=" << r.looks << ": " << *r.error << '\n';
        }
      }
      if (bn_output.empty()) {
        speckle::write_table_csv(std::cout, rows, !bn_no_timing);
      } else {
        auto out = open_text(bn_output);
        speckle::write_table_csv(out, rows, !bn_no_timing);
        print_summary({{"command", "bench"},
                       {"rows", rows.size()},
                       {"failed", failures},
                       {"output", bn_output}});
      }
      return kExitOk;
    }

    if (*trace_cmd) {
      const speckle::SpeckleModel model(tr_looks);
      const auto y = load(globals, tr_input);
      const auto obs = speckle::to_log(y, tr_solver.clamp_floor);
      const auto cfg = tr_solver.config(tr_lambda, globals.threads);
      const auto res = speckle::restore(obs, model, cfg);
      {
        auto out = open_text(tr_output);
        speckle::write_trace_csv(out, res.trace);
      }
      if (!tr_restored.empty()) save(globals, res.x_hat, tr_restored);
      json j{{"command", "trace"},
             {"iterations", res.iterations},
             {"converged", res.converged},
             {"output", tr_output}};
      j.update(trace_summary(res.trace));
      print_summary(j);
      return res.converged ? kExitOk : kExitNotConverged;
    }
  } catch (const speckle::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const speckle::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const speckle::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
