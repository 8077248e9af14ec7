#ifndef ALSET_DIAGNOSTICS_HPP
#define ALSET_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "alset.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "problem.hpp"
#include "rng.hpp"

namespace alset
{

/// Per-seed values of one metric at horizon K.
struct SweepPoint
{
  std::int64_t K = 0;
  std::vector<double> values;
};

struct RateFit
{
  std::vector<std::pair<std::int64_t, double>> points; // (K, mean over seeds)
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Least squares of log(mean metric) on log K.
inline RateFit fit_rate(const std::vector<SweepPoint>& sweep)
{
  std::set<std::int64_t> distinct;
  RateFit fit;
  for (const auto& p : sweep)
  {
    if (p.K < 1 || p.values.empty())
      throw domain_error("fit_rate: every point needs K >= 1 and at least one value");
    double mean = 0.0;
    for (double v : p.values)
    {
      if (!(v > 0.0) || !std::isfinite(v))
        throw domain_error("fit_rate: metric values must be positive and finite");
      mean += v;
    }
    mean /= static_cast<double>(p.values.size());
    fit.points.emplace_back(p.K, mean);
    distinct.insert(p.K);
  }
  if (distinct.size() < 3)
    throw domain_error("fit_rate: needs at least 3 distinct K values");

  const auto n = static_cast<double>(fit.points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [k, m] : fit.points)
  {
    mx += std::log(static_cast<double>(k));
    my += std::log(m);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [k, m] : fit.points)
  {
    const double dx = std::log(static_cast<double>(k)) - mx;
    const double dy = std::log(m) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return fit;
}

struct BiasPoint
{
  int N = 0;
  double empirical_bias = 0.0; // ||mean of draws - A^{-1} v||
  double standard_error = 0.0; // sqrt(trace Cov / M)
  double bound = 0.0;          // (1/mu)(1 - mu/l)^N ||v||
};

/**
 * Empirical bias of the randomized Neumann estimate of
 * [grad^2_yy g(x, y)]^{-1} v, M draws per depth, against a CG reference.
 * Draws for depth index i use streams keyed by (seed, i).
 */
inline std::vector<BiasPoint> neumann_bias_curve(const BilevelProblem& problem, const Vec& x, const Vec& y,
                                                 const Vec& v, const std::vector<int>& depths, std::int64_t draws,
                                                 std::uint64_t seed,
                                                 TruncationConvention convention = TruncationConvention::shifted)
{
  if (draws < 2)
    throw precondition_violation("neumann_bias_curve: needs at least 2 draws");
  detail::check_dims(problem, x, y);
  const Vec reference = solve_lower_hessian(problem, x, y, v);
  const double mu = problem.constants.mu_g();
  const double l = problem.constants.l_g1();

  std::vector<BiasPoint> out;
  for (std::size_t i = 0; i < depths.size(); ++i)
  {
    NeumannConfig cfg;
    cfg.depth_N = depths[i];
    cfg.convention = convention;
    CounterRng level(seed, i, "level");
    CounterRng phi_hess(seed, i, "phi_hess");
    Vec sum = Vec::Zero(v.size());
    Vec sum_sq = Vec::Zero(v.size());
    for (std::int64_t m = 0; m < draws; ++m)
    {
      const Vec z = neumann_inverse_apply(problem, x, y, v, cfg, level, phi_hess);
      sum += z;
      sum_sq += z.cwiseAbs2();
    }
    const double M = static_cast<double>(draws);
    const Vec mean = sum / M;
    const Vec var = (sum_sq / M - mean.cwiseAbs2()) * (M / (M - 1.0));
    BiasPoint p;
    p.N = depths[i];
    p.empirical_bias = (mean - reference).norm();
    p.standard_error = std::sqrt(var.cwiseMax(0.0).sum() / M);
    p.bound = std::pow(1.0 - mu / l, depths[i]) * v.norm() / mu;
    out.push_back(p);
  }
  return out;
}

enum class LipschitzTarget
{
  y_star,     // declared L_y
  grad_F,     // declared L_F
  jac_y_star, // declared L_yx
};

struct LipschitzCertificate
{
  double max_ratio = 0.0;
  double declared = 0.0;
  bool pass = false;
};

inline constexpr double lipschitz_slack = 1e-9;

/// Uniform point in the ball of the given radius.
inline Vec sample_in_ball(Index n, double radius, CounterRng& rng)
{
  Vec dir = gaussian_vector(n, 1.0, rng);
  dir /= dir.norm();
  return radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(n)) * dir;
}

/// Max difference ratio over random pairs in the radius ball around the origin.
inline LipschitzCertificate lipschitz_certificate(const BilevelProblem& problem, LipschitzTarget which,
                                                  std::int64_t n_pairs, std::uint64_t seed, double radius = 10.0)
{
  if (!problem.has_ground_truth())
    throw unsupported_operation("lipschitz_certificate requires ground truth");
  if (n_pairs < 1 || !(radius > 0.0))
    throw precondition_violation("lipschitz_certificate: needs n_pairs >= 1 and a positive radius");
  const auto& c = problem.constants;
  LipschitzCertificate cert;
  std::function<double(const Vec&, const Vec&)> gap;
  switch (which)
  {
  case LipschitzTarget::y_star:
    cert.declared = c.L_y;
    gap = [&](const Vec& a, const Vec& b) {
      return (problem.lower_solution(a) - problem.lower_solution(b)).norm();
    };
    break;
  case LipschitzTarget::grad_F:
    cert.declared = c.L_F;
    gap = [&](const Vec& a, const Vec& b) {
      return (problem.ground_truth->hypergradient(a) - problem.ground_truth->hypergradient(b)).norm();
    };
    break;
  case LipschitzTarget::jac_y_star:
    cert.declared = c.L_yx;
    gap = [&](const Vec& a, const Vec& b) {
      return spectral_norm(lower_solution_jacobian(problem, a) - lower_solution_jacobian(problem, b));
    };
    break;
  }
  CounterRng rng(seed, 0, "lipschitz_pairs");
  for (std::int64_t i = 0; i < n_pairs; ++i)
  {
    const Vec a = sample_in_ball(problem.dim_upper, radius, rng);
    const Vec b = sample_in_ball(problem.dim_upper, radius, rng);
    const double dist = (a - b).norm();
    if (dist == 0.0)
      continue;
    cert.max_ratio = std::max(cert.max_ratio, gap(a, b) / dist);
  }
  cert.pass = cert.max_ratio <= cert.declared * (1.0 + lipschitz_slack);
  return cert;
}

/// V^k along a trajectory recorded with keep_iterates.
inline std::vector<double> lyapunov_series(const BilevelProblem& problem, const Trajectory& traj)
{
  if (traj.xs.size() != traj.records.size() || traj.ys.size() != traj.records.size())
    throw precondition_violation("lyapunov_series: trajectory was recorded without iterates");
  std::vector<double> v;
  v.reserve(traj.xs.size());
  for (std::size_t i = 0; i < traj.xs.size(); ++i)
    v.push_back(lyapunov_value(problem, traj.xs[i], traj.ys[i]));
  return v;
}

struct SweepRun
{
  std::int64_t K = 0;
  std::uint64_t seed = 0;
  TrajectorySummary summary;
};

/**
 * Runs run(K, seed) for every (K, seed) pair on a worker pool. Results come
 * back in (K-major, seed-minor) order regardless of scheduling.
 */
inline std::vector<SweepRun> run_sweep(const std::vector<std::int64_t>& Ks, const std::vector<std::uint64_t>& seeds,
                                       const std::function<TrajectorySummary(std::int64_t, std::uint64_t)>& run,
                                       unsigned jobs = 1)
{
  std::vector<SweepRun> out(Ks.size() * seeds.size());
  parallel_for(out.size(), jobs, [&](std::size_t i) {
    const std::int64_t K = Ks[i / seeds.size()];
    const std::uint64_t seed = seeds[i % seeds.size()];
    out[i] = SweepRun{K, seed, run(K, seed)};
  });
  return out;
}

/// Groups a sweep into fit_rate input using the chosen summary field.
inline std::vector<SweepPoint> sweep_points(const std::vector<SweepRun>& runs,
                                            const std::function<double(const TrajectorySummary&)>& metric)
{
  std::vector<SweepPoint> points;
  for (const auto& r : runs)
  {
    auto it = std::find_if(points.begin(), points.end(), [&](const SweepPoint& p) { return p.K == r.K; });
    if (it == points.end())
    {
      points.push_back({r.K, {}});
      it = points.end() - 1;
    }
    it->values.push_back(metric(r.summary));
  }
  return points;
}

} // namespace alset

#endif
