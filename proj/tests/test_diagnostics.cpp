#include <atomic>
#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "alset/diagnostics.hpp"
#include "alset/synthetic.hpp"

using namespace alset;

namespace
{

BilevelProblem diag12()
{
  QuadraticBilevelSpec s;
  s.A = Mat::Zero(2, 2);
  s.A(0, 0) = 1.0;
  s.A(1, 1) = 2.0;
  s.B = Mat::Identity(2, 2);
  s.c = Vec::Zero(2);
  s.P = Mat::Identity(2, 2);
  s.Q = Mat::Zero(2, 2);
  s.R = Mat::Identity(2, 2);
  s.p = Vec::Zero(2);
  s.q = Vec::Zero(2);
  return make_quadratic_bilevel(s);
}

} // namespace

TEST(FitRate, RecoversPowerLaw)
{
  std::vector<SweepPoint> pts;
  for (std::int64_t K : {10, 100, 1000, 10000})
    pts.push_back({K, {3.0 * std::pow(static_cast<double>(K), -0.5), 3.0 * std::pow(static_cast<double>(K), -0.5)}});
  const auto fit = fit_rate(pts);
  EXPECT_NEAR(fit.slope, -0.5, 1e-12);
  EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-12);
  EXPECT_NEAR(fit.r_squared, 1.0, 1e-12);
  EXPECT_EQ(fit.points.size(), 4u);
}

TEST(FitRate, AveragesSeedsBeforeTakingLogs)
{
  const auto fit = fit_rate({{1, {1.0, 3.0}}, {2, {2.0}}, {4, {4.0}}});
  EXPECT_DOUBLE_EQ(fit.points[0].second, 2.0);
  EXPECT_NEAR(fit.slope, std::log(2.0) / std::log(4.0), 1e-12);
}

TEST(FitRate, RejectsDegenerateSweeps)
{
  EXPECT_THROW(fit_rate({{10, {1.0}}, {20, {0.5}}}), domain_error);
  EXPECT_THROW(fit_rate({{10, {1.0}}, {10, {0.9}}, {20, {0.5}}}), domain_error);
  EXPECT_THROW(fit_rate({{10, {1.0}}, {20, {0.0}}, {40, {0.5}}}), domain_error);
  EXPECT_THROW(fit_rate({{10, {1.0}}, {20, {std::nan("")}}, {40, {0.5}}}), domain_error);
}

TEST(NeumannBiasCurve, WithinBoundAndDeterministic)
{
  const auto p = diag12();
  const std::vector<int> depths{1, 2, 4, 8};
  const auto curve = neumann_bias_curve(p, Vec::Zero(2), Vec::Zero(2), Vec::Ones(2), depths, 20000, 5);
  ASSERT_EQ(curve.size(), 4u);
  for (std::size_t i = 0; i < curve.size(); ++i)
  {
    EXPECT_EQ(curve[i].N, depths[i]);
    EXPECT_DOUBLE_EQ(curve[i].bound, std::pow(0.5, depths[i]) * std::sqrt(2.0));
    EXPECT_LE(curve[i].empirical_bias, curve[i].bound + 3 * curve[i].standard_error);
    if (i > 0)
      EXPECT_LT(curve[i].bound, curve[i - 1].bound);
  }
  const auto again = neumann_bias_curve(p, Vec::Zero(2), Vec::Zero(2), Vec::Ones(2), depths, 20000, 5);
  EXPECT_EQ(again[2].empirical_bias, curve[2].empirical_bias);
}

TEST(NeumannBiasCurve, ShallowDepthBiasIsResolved)
{
  // at N = 1 the estimate is v / l exactly, so the bias is deterministic
  const auto p = diag12();
  const auto curve = neumann_bias_curve(p, Vec::Zero(2), Vec::Zero(2), Vec::Ones(2), {1}, 100, 1);
  EXPECT_NEAR(curve[0].empirical_bias, std::hypot(1.0 - 0.5, 0.5 - 0.5), 1e-14);
  EXPECT_NEAR(curve[0].standard_error, 0.0, 1e-14);
}

TEST(NeumannBiasCurve, NeedsTwoDraws)
{
  EXPECT_THROW(neumann_bias_curve(diag12(), Vec::Zero(2), Vec::Zero(2), Vec::Ones(2), {1}, 1, 0),
               precondition_violation);
}

TEST(LipschitzCertificate, PassesOnDeclaredAndFailsOnShrunkConstants)
{
  auto p = make_quadratic_bilevel(canned_quadratic_spec(4));
  const auto ok = lipschitz_certificate(p, LipschitzTarget::y_star, 2000, 1);
  EXPECT_TRUE(ok.pass);
  EXPECT_GT(ok.max_ratio, 0.0);
  EXPECT_DOUBLE_EQ(ok.declared, p.constants.L_y);
  p.constants.L_y = 0.5 * ok.max_ratio;
  EXPECT_FALSE(lipschitz_certificate(p, LipschitzTarget::y_star, 2000, 1).pass);
}

TEST(LipschitzCertificate, RequiresGroundTruth)
{
  auto p = diag12();
  p.ground_truth.reset();
  EXPECT_THROW(lipschitz_certificate(p, LipschitzTarget::grad_F, 10, 1), unsupported_operation);
}

TEST(LyapunovSeries, MatchesRecordedValues)
{
  const auto p = make_quadratic_bilevel(canned_quadratic_spec(2));
  AlsetConfig cfg;
  cfg.horizon_K = 20;
  cfg.neumann.exact_inverse_mode = true;
  cfg.x0 = Vec::Ones(5);
  cfg.keep_iterates = true;
  const auto t = run_bilevel(p, cfg);
  const auto v = lyapunov_series(p, t);
  ASSERT_EQ(v.size(), t.records.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    EXPECT_NEAR(v[i], t.records[i].lyapunov, 1e-12 * (1 + std::abs(v[i])));
  cfg.keep_iterates = false;
  EXPECT_THROW(lyapunov_series(p, run_bilevel(p, cfg)), precondition_violation);
}

TEST(RunSweep, OrderIsIndependentOfJobs)
{
  const std::vector<std::int64_t> Ks{3, 1, 2};
  const std::vector<std::uint64_t> seeds{7, 8};
  auto fn = [](std::int64_t K, std::uint64_t seed) {
    TrajectorySummary s;
    s.mean_grad_F_norm_sq = static_cast<double>(K) * 100 + static_cast<double>(seed);
    return s;
  };
  const auto serial = run_sweep(Ks, seeds, fn, 1);
  const auto parallel = run_sweep(Ks, seeds, fn, 4);
  ASSERT_EQ(serial.size(), 6u);
  for (std::size_t i = 0; i < serial.size(); ++i)
  {
    EXPECT_EQ(serial[i].K, Ks[i / 2]);
    EXPECT_EQ(serial[i].seed, seeds[i % 2]);
    EXPECT_EQ(parallel[i].summary.mean_grad_F_norm_sq, serial[i].summary.mean_grad_F_norm_sq);
  }
  const auto pts = sweep_points(serial, [](const TrajectorySummary& s) { return s.mean_grad_F_norm_sq; });
  ASSERT_EQ(pts.size(), 3u);
  EXPECT_EQ(pts[0].K, 3);
  EXPECT_EQ(pts[0].values, (std::vector<double>{307, 308}));
}

TEST(RunSweep, ParallelRunsMatchSerialTrajectories)
{
  QuadraticGeneratorParams g;
  g.noise_sigma_grad_f = g.noise_sigma_grad_g = 0.1;
  const auto p = make_quadratic_bilevel(generate_quadratic_spec(g, 3));
  auto fn = [&](std::int64_t K, std::uint64_t seed) {
    AlsetConfig cfg;
    cfg.horizon_K = K;
    cfg.seed = seed;
    cfg.run_index = static_cast<std::uint64_t>(K);
    cfg.neumann.depth_N = 3;
    return run_bilevel(p, cfg).summary;
  };
  const auto a = run_sweep({50, 100}, {1, 2, 3}, fn, 1);
  const auto b = run_sweep({50, 100}, {1, 2, 3}, fn, 3);
  for (std::size_t i = 0; i < a.size(); ++i)
    EXPECT_EQ(a[i].summary.final_x, b[i].summary.final_x);
}

TEST(ParallelFor, PropagatesFirstException)
{
  std::atomic<int> done{0};
  EXPECT_THROW(parallel_for(100, 4,
                            [&](std::size_t i) {
                              if (i == 37)
                                throw std::runtime_error("boom");
                              ++done;
                            }),
               std::runtime_error);
  EXPECT_LE(done.load(), 99);
}
