#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "speckle/bregman.hpp"

namespace speckle {
namespace {

LogObservation noisy_blocks(std::size_t w, std::size_t h, double looks, std::uint64_t seed) {
  ImageGrid x(w, h);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) x(r, c) = (r < h / 2) == (c < w / 2) ? 40.0 : 160.0;
  }
  return to_log(apply_speckle(x, sample_speckle(SpeckleModel(looks), w, h, seed)));
}

TEST(SolverConfig, DefaultsAndValidation) {
  SolverConfig cfg;
  cfg.lambda = 3.0;
  EXPECT_EQ(cfg.effective_tau(), 6.0);
  cfg.tau = 1.5;
  EXPECT_EQ(cfg.effective_tau(), 1.5);
  EXPECT_NO_THROW(cfg.validate());

  auto bad = cfg;
  bad.lambda = 0.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.tau = -1.0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
  bad = cfg;
  bad.max_outer = 0;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}

TEST(Restore, ConstantObservationIsAFixedPoint) {
  const auto obs = to_log(ImageGrid(6, 5, 50.0));
  SolverConfig cfg;
  cfg.lambda = 1.0;
  const auto res = restore(obs, SpeckleModel(3.0), cfg);
  EXPECT_TRUE(res.converged);
  EXPECT_EQ(res.iterations, 2);
  EXPECT_LE(oracle::max_abs_diff(res.x_hat, ImageGrid(6, 5, 50.0)), 1e-10);
}

TEST(Restore, TinyLambdaReturnsObservation) {
  const auto obs = noisy_blocks(16, 16, 1.0, 3);
  SolverConfig cfg;
  cfg.lambda = 1e-8;
  const auto res = restore(obs, SpeckleModel(1.0), cfg);
  for (std::size_t i = 0; i < obs.g.size(); ++i) {
    ASSERT_NEAR(res.z_final[i], obs.g[i], 1e-6);
  }
}

TEST(Restore, RejectsNonFiniteObservation) {
  LogObservation obs{ImageGrid(3, 3), kDefaultClampFloor};
  obs.g(1, 1) = NAN;
  EXPECT_THROW(restore(obs, SpeckleModel(1.0), SolverConfig{}), InvalidArgument);
}

TEST(Restore, TraceHasOneRowPerIterationAndPositiveOutput) {
  const auto obs = noisy_blocks(24, 20, 3.0, 11);
  SolverConfig cfg;
  cfg.lambda = 2.0;
  int callbacks = 0;
  const auto res = restore(obs, SpeckleModel(3.0), cfg, [&](const TraceRow&) { ++callbacks; });
  ASSERT_EQ(res.trace.size(), static_cast<std::size_t>(res.iterations));
  EXPECT_EQ(callbacks, res.iterations);
  for (std::size_t k = 0; k < res.trace.size(); ++k) EXPECT_EQ(res.trace[k].iter, int(k) + 1);
  EXPECT_TRUE(res.converged);
  EXPECT_LT(res.trace.back().rel_change, cfg.stop_tol);
  for (double v : res.x_hat.values()) ASSERT_GT(v, 0.0);
}

TEST(Restore, MaxOuterCapsIterations) {
  const auto obs = noisy_blocks(16, 16, 3.0, 2);
  SolverConfig cfg;
  cfg.lambda = 2.0;
  cfg.stop_tol = 1e-30;
  cfg.max_outer = 7;
  const auto res = restore(obs, SpeckleModel(3.0), cfg);
  EXPECT_FALSE(res.converged);
  EXPECT_EQ(res.iterations, 7);
}

TEST(Restore, ObjectiveSettlesAndConstraintShrinks) {
  const auto obs = noisy_blocks(32, 32, 5.0, 4);
  SolverConfig cfg;
  cfg.lambda = 2.0;
  cfg.stop_tol = 1e-12;
  cfg.max_outer = 200;
  const auto res = restore(obs, SpeckleModel(5.0), cfg);
  const auto& t = res.trace;
  ASSERT_GE(t.size(), 50u);
  const double last = t.back().objective;
  const double earlier = t[t.size() - 10].objective;
  EXPECT_LE(std::abs(last - earlier), 1e-6 * std::abs(last));
  EXPECT_LT(t.back().constraint_sq, 1e-3 * t[1].constraint_sq);
}

TEST(Step, ZSubproblemIsSolvedPerPixel) {
  const auto obs = noisy_blocks(12, 10, 3.0, 6);
  const SpeckleModel model(3.0);
  SolverConfig cfg;
  cfg.lambda = 1.5;
  auto state = init_state(obs, InitMode::observation);
  step(state, obs, model, cfg);
  step(state, obs, model, cfg);
  const ImageGrid u_before = state.u;
  const ImageGrid b_before = state.b;
  step(state, obs, model, cfg);
  const double a = cfg.effective_tau() / model.looks();
  for (std::size_t i = 0; i < obs.g.size(); ++i) {
    const double ref = oracle::bisect_pixel(obs.g[i], u_before[i] + b_before[i], a);
    ASSERT_NEAR(state.z[i], ref, 1e-8);
  }
}

TEST(Step, BregmanUpdateAndDenoiseStep) {
  const auto obs = noisy_blocks(12, 10, 3.0, 9);
  const SpeckleModel model(3.0);
  SolverConfig cfg;
  cfg.lambda = 1.5;
  auto state = init_state(obs, InitMode::observation);
  step(state, obs, model, cfg);
  const auto u0 = state.u;
  const auto b0 = state.b;
  const auto dual0 = state.dual;
  step(state, obs, model, cfg);

  // u is the warm-started Chambolle output on z - b_prev
  const auto expect_u =
      denoise(state.z - b0, cfg.lambda / cfg.effective_tau(), cfg.chambolle, dual0).u;
  EXPECT_EQ(state.u, expect_u);
  // b follows b <- b - (z - u)
  for (std::size_t i = 0; i < state.b.size(); ++i) {
    ASSERT_NEAR(state.b[i], b0[i] - (state.z[i] - state.u[i]), 1e-15);
  }
  (void)u0;
}

TEST(Step, MatchesStandaloneSubproblemSolveOn4x4) {
  const auto obs = noisy_blocks(4, 4, 5.0, 21);
  const SpeckleModel model(5.0);
  SolverConfig cfg;
  cfg.lambda = 0.8;
  auto state = init_state(obs, InitMode::observation);
  for (int k = 0; k < 4; ++k) {
    const auto expect_z =
        solve_field(obs.g, state.u, state.b, cfg.effective_tau(), model.looks());
    step(state, obs, model, cfg);
    ASSERT_EQ(state.z, expect_z) << "iteration " << k + 1;
  }
}

TEST(Step, DataSubproblemIsStationaryEveryIteration) {
  const auto obs = noisy_blocks(20, 20, 3.0, 13);
  const SpeckleModel model(3.0);
  SolverConfig cfg;
  cfg.lambda = 2.0;
  const double a = cfg.effective_tau() / model.looks();
  auto state = init_state(obs, InitMode::observation);
  for (int k = 0; k < 15; ++k) {
    const auto c = state.u + state.b;
    step(state, obs, model, cfg);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const PixelProblem p{obs.g[i], c[i], a};
      ASSERT_LE(std::abs(p.derivative(state.z[i])), 1e-8) << "iteration " << k + 1;
    }
  }
}

TEST(Restore, ObjectiveChangeAtTerminationIsSmall) {
  for (double looks : {1.0, 3.0, 13.0}) {
    const auto obs = noisy_blocks(48, 40, looks, 31);
    SolverConfig cfg;
    cfg.lambda = std::sqrt(looks);
    const auto res = restore(obs, SpeckleModel(looks), cfg);
    ASSERT_TRUE(res.converged);
    const auto& t = res.trace;
    ASSERT_GE(t.size(), 2u);
    const double prev = t[t.size() - 2].objective;
    EXPECT_LT(std::abs(t.back().objective - prev) / std::abs(prev), 10.0 * cfg.stop_tol)
        << "M=" << looks;
  }
}

TEST(Restore, ZeroInitReachesTheSameRestoration) {
  const auto obs = noisy_blocks(16, 16, 13.0, 8);
  SolverConfig cfg;
  cfg.lambda = 3.0;
  cfg.stop_tol = 1e-12;
  cfg.max_outer = 400;
  const auto a = restore(obs, SpeckleModel(13.0), cfg);
  cfg.init = InitMode::zeros;
  const auto b = restore(obs, SpeckleModel(13.0), cfg);
  EXPECT_LE(relative_error(b.x_hat, a.x_hat), 1e-3);
}

TEST(Restore, ThreadCountDoesNotChangeResult) {
  const auto obs = noisy_blocks(40, 36, 3.0, 5);
  SolverConfig cfg;
  cfg.lambda = 2.0;
  cfg.threads = 1;
  const auto a = restore(obs, SpeckleModel(3.0), cfg);
  cfg.threads = 4;
  const auto b = restore(obs, SpeckleModel(3.0), cfg);
  EXPECT_EQ(a.x_hat, b.x_hat);
  EXPECT_EQ(a.trace, b.trace);
}

TEST(TraceCsv, HeaderAndRows) {
  std::ostringstream out;
  write_trace_csv(out, {{1, 10.5, 0.25, INFINITY}, {2, 9.0, 0.125, 1e-5}});
  EXPECT_EQ(out.str(),
            "iter,objective,constraint_sq,rel_change\n1,10.5,0.25,inf\n2,9,0.125,1e-05\n");
}

}  // namespace
}  // namespace speckle
