#ifndef ALSET_ESTIMATORS_HPP
#define ALSET_ESTIMATORS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "errors.hpp"
#include "linalg.hpp"
#include "problem.hpp"
#include "rng.hpp"

namespace alset
{

/// Which truncation levels the randomized Neumann series draws.
enum class TruncationConvention
{
  /// N' uniform on {0, ..., N-1}; the empty product is the identity, so
  /// E[estimate] = A^{-1} (I - (I - A/l)^N).
  shifted,
  /// N' uniform on {1, ..., N}; drops the zeroth term. Kept for comparison.
  literal,
};

struct NeumannConfig
{
  int depth_N = 1;
  bool exact_inverse_mode = false;
  TruncationConvention convention = TruncationConvention::shifted;
};

inline void validate(const NeumannConfig& cfg)
{
  if (cfg.depth_N < 1)
    throw precondition_violation("Neumann depth must be at least 1");
}

/// Streams consumed by one hypergradient evaluation; they must be distinct.
struct HypergradientStreams
{
  CounterRng& xi;        // upper-level draw shared by grad_x f and grad_y f
  CounterRng& phi_cross; // phi_(0), the cross-Hessian draw
  CounterRng& phi_hess;  // phi_(1..N'), the Neumann product draws
  CounterRng& level;     // truncation level N'
};

/// Result of one randomized inverse application.
struct NeumannDraw
{
  Vec value;
  int hessian_samples = 0;
};

/**
 * Randomized truncated Neumann series for [grad^2_yy g(x, y)]^{-1} v:
 *
 *   (N / l_g1) prod_{n=1}^{N'} (I - grad^2_yy g(x, y; phi_n) / l_g1) v
 *
 * evaluated right to left with one Hessian-vector product per factor.
 * With exact_inverse_mode the deterministic solve is returned instead.
 */
inline NeumannDraw neumann_inverse_draw(const BilevelProblem& problem, const Vec& x, const Vec& y,
                                        const Vec& v, const NeumannConfig& cfg, CounterRng& level,
                                        CounterRng& phi_hess)
{
  validate(cfg);
  if (cfg.exact_inverse_mode)
    return {solve_lower_hessian(problem, x, y, v), 0};

  const double l_g1 = problem.constants.l_g1();
  const auto n_max = static_cast<std::size_t>(cfg.depth_N);
  int depth = static_cast<int>(level.index(n_max));
  if (cfg.convention == TruncationConvention::literal)
    depth += 1;

  Vec z = v;
  for (int n = 0; n < depth; ++n)
    z -= problem.sample_lower_hess_yy_vec(x, y, z, phi_hess) / l_g1;
  z *= static_cast<double>(cfg.depth_N) / l_g1;
  return {std::move(z), depth};
}

inline Vec neumann_inverse_apply(const BilevelProblem& problem, const Vec& x, const Vec& y, const Vec& v,
                                 const NeumannConfig& cfg, CounterRng& level, CounterRng& phi_hess)
{
  return neumann_inverse_draw(problem, x, y, v, cfg, level, phi_hess).value;
}

struct HypergradientDraw
{
  Vec value;
  int hessian_samples = 0; // N' of this draw
};

/**
 * Stochastic hypergradient
 *
 *   h_f = grad_x f(x, y; xi) - grad^2_xy g(x, y; phi_0) H_N grad_y f(x, y; xi)
 *
 * where H_N is the Neumann estimate above. One xi draw feeds both
 * f-gradients; phi_0 and phi_1..N' come from their own streams.
 */
inline HypergradientDraw stochastic_hypergradient_draw(const BilevelProblem& problem, const Vec& x,
                                                       const Vec& y, const NeumannConfig& cfg,
                                                       const HypergradientStreams& streams)
{
  detail::check_dims(problem, x, y);
  GradPair grad = problem.sample_upper_grad(x, y, streams.xi);
  NeumannDraw inverse = neumann_inverse_draw(problem, x, y, grad.y, cfg, streams.level, streams.phi_hess);
  Vec cross = problem.sample_lower_hess_xy_vec(x, y, inverse.value, streams.phi_cross);
  return {grad.x - cross, inverse.hessian_samples};
}

inline Vec stochastic_hypergradient(const BilevelProblem& problem, const Vec& x, const Vec& y,
                                    const NeumannConfig& cfg, const HypergradientStreams& streams)
{
  return stochastic_hypergradient_draw(problem, x, y, cfg, streams).value;
}

/// b_N = l_g1 l_f1 (1 / mu_g) (1 - mu_g / l_g1)^N.
inline double bias_bound(const ProblemConstants& c, int depth_N)
{
  if (depth_N < 1)
    throw domain_error("bias_bound: N must be at least 1");
  const double mu = c.mu_g();
  const double l = c.l_g1();
  return l * c.primitives.l_f1 / mu * std::pow(1.0 - mu / l, depth_N);
}

/// Smallest N with bias_bound(N)^2 <= 1 / sqrt(K).
inline int depth_for_horizon(const ProblemConstants& c, std::int64_t horizon_K)
{
  if (horizon_K < 1)
    throw domain_error("depth_for_horizon: K must be at least 1");
  const double target = 1.0 / std::sqrt(static_cast<double>(horizon_K));
  const double mu = c.mu_g();
  const double l = c.l_g1();
  if (l <= mu)
    return 1;
  const double lead = l * c.primitives.l_f1 / mu;
  if (lead == 0.0)
    return 1;
  // first guess from logs, then settle the integer exactly
  const double ratio = 1.0 - mu / l;
  double guess = std::log(std::sqrt(target) / lead) / std::log(ratio);
  int n = std::max(1, static_cast<int>(std::floor(guess)) - 1);
  while (n > 1 && std::pow(bias_bound(c, n - 1), 2) <= target)
    --n;
  while (std::pow(bias_bound(c, n), 2) > target)
    ++n;
  return n;
}

} // namespace alset

#endif
