#ifndef ALSET_ALSET_HPP
#define ALSET_ALSET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "estimators.hpp"
#include "linalg.hpp"
#include "problem.hpp"
#include "rng.hpp"

namespace alset
{

enum class Preset
{
  manual,
  bilevel_kappa,
  minmax_kappa,
  compositional,
};

enum class StepsizeMode
{
  schedule, // alpha_k = min(abar_1, abar_2, alpha / sqrt(K)) with the matching beta_k
  fixed,    // alpha_fixed / beta_fixed used verbatim
};

/// Which strong-convexity constant divides the beta/alpha ratio.
enum class StepRatioForm
{
  rho_g, // 2 mu l / (mu + l); keeps beta_k <= 2 / (mu + l)
  mu_g,
};

struct AlsetConfig
{
  std::int64_t horizon_K = 1;
  int inner_T = 1;
  double alpha_base = 1.0;
  double beta_base = 1.0; // two-timescale baseline only
  double eta = 1.0;
  NeumannConfig neumann;
  /// Pick N = depth_for_horizon(constants, K) instead of neumann.depth_N.
  bool auto_depth = false;
  Preset preset = Preset::manual;
  double preset_scale = 1.0; // constant in front of the kappa powers
  std::uint64_t seed = 0;
  std::uint64_t run_index = 0;
  Vec x0; // empty means zero
  Vec y0;
  StepsizeMode stepsize_mode = StepsizeMode::schedule;
  double alpha_fixed = 0.0;
  double beta_fixed = 0.0;
  StepRatioForm ratio_form = StepRatioForm::rho_g;
  bool keep_iterates = false;
};

inline void validate(const AlsetConfig& cfg)
{
  if (cfg.horizon_K < 1)
    throw precondition_violation("horizon_K must be at least 1");
  if (cfg.inner_T < 1)
    throw precondition_violation("inner_T must be at least 1");
  if (!(cfg.alpha_base > 0.0) || !std::isfinite(cfg.alpha_base))
    throw precondition_violation("alpha_base must be positive");
  if (!(cfg.eta > 0.0) || !std::isfinite(cfg.eta))
    throw precondition_violation("eta must be positive");
  if (!(cfg.preset_scale > 0.0))
    throw precondition_violation("preset_scale must be positive");
  if (cfg.stepsize_mode == StepsizeMode::fixed &&
      (!(cfg.alpha_fixed > 0.0) || !(cfg.beta_fixed >= 0.0)))
    throw precondition_violation("fixed stepsizes need alpha_fixed > 0 and beta_fixed >= 0");
  validate(cfg.neumann);
}

struct StepsizePair
{
  double alpha_k = 0.0;
  double beta_k = 0.0;
  double alpha_bar_1 = 0.0;
  double alpha_bar_2 = 0.0;
};

/**
 * Stepsize schedule, constant over the horizon:
 *
 *   abar_1 = 1 / (2 L_F + 4 L_f L_y + L_f L_yx / (L_y eta))
 *   X      = 8 L_f L_y + eta L_yx C~^2 abar_1
 *   abar_2 = 8 T rho_g / ((mu_g + l_g1) X)
 *   alpha  = min(abar_1, abar_2, alpha_base / sqrt(K))
 *   beta   = X / (4 T rho_g) * alpha
 *
 * Terms multiplied by a zero L_yx are dropped before dividing.
 */
inline StepsizePair stepsize_schedule(const ProblemConstants& c, const AlsetConfig& cfg, std::int64_t k = 0)
{
  (void)k;
  for (double v : {c.L_f, c.L_y, c.L_F, c.L_yx, c.C_f_tilde_sq, c.rho_g, c.mu_g(), c.l_g1()})
    if (!std::isfinite(v))
      throw domain_error("stepsize_schedule: non-finite constant");
  if (!(cfg.eta > 0.0) || cfg.inner_T < 1 || cfg.horizon_K < 1)
    throw domain_error("stepsize_schedule: invalid configuration");

  StepsizePair s;
  const double T = cfg.inner_T;
  double denom1 = 2.0 * c.L_F + 4.0 * c.L_f * c.L_y;
  if (c.L_yx != 0.0)
  {
    if (c.L_y == 0.0)
      throw domain_error("stepsize_schedule: L_y = 0 with nonzero L_yx");
    denom1 += c.L_f * c.L_yx / (c.L_y * cfg.eta);
  }
  s.alpha_bar_1 = denom1 > 0.0 ? 1.0 / denom1 : std::numeric_limits<double>::infinity();

  double x_term = 8.0 * c.L_f * c.L_y;
  if (c.L_yx != 0.0)
    x_term += cfg.eta * c.L_yx * c.C_f_tilde_sq * s.alpha_bar_1;
  s.alpha_bar_2 = x_term > 0.0 ? 8.0 * T * c.rho_g / ((c.mu_g() + c.l_g1()) * x_term)
                               : std::numeric_limits<double>::infinity();

  const double horizon = cfg.alpha_base / std::sqrt(static_cast<double>(cfg.horizon_K));
  s.alpha_k = std::min({s.alpha_bar_1, s.alpha_bar_2, horizon});
  const double rho = cfg.ratio_form == StepRatioForm::rho_g ? c.rho_g : c.mu_g();
  s.beta_k = x_term / (4.0 * T * rho) * s.alpha_k;
  return s;
}

/// Ceiling that ignores round-off just above an integer.
inline int ceil_tolerant(double v) { return static_cast<int>(std::ceil(v * (1.0 - 1e-12))); }

/**
 * kappa presets (c = preset_scale):
 *   bilevel_kappa  alpha = c kappa^-2.5, T = ceil(kappa^4), eta = kappa
 *   minmax_kappa   alpha = c / kappa,    T = ceil(kappa),   eta = 1
 *   compositional  alpha = c,            T = 1,             eta = 1 / L_yx (1 if L_yx = 0)
 */
inline AlsetConfig apply_preset(const ProblemConstants& c, AlsetConfig cfg)
{
  const double kappa = c.kappa;
  const double scale = cfg.preset_scale;
  switch (cfg.preset)
  {
  case Preset::manual:
    throw precondition_violation("apply_preset: preset is manual");
  case Preset::bilevel_kappa:
    cfg.alpha_base = scale * std::pow(kappa, -2.5);
    cfg.inner_T = std::max(1, ceil_tolerant(std::pow(kappa, 4.0)));
    cfg.eta = kappa;
    break;
  case Preset::minmax_kappa:
    cfg.alpha_base = scale / kappa;
    cfg.inner_T = std::max(1, ceil_tolerant(kappa));
    cfg.eta = 1.0;
    break;
  case Preset::compositional:
    cfg.alpha_base = scale;
    cfg.inner_T = 1;
    cfg.eta = c.L_yx > 0.0 ? 1.0 / c.L_yx : 1.0;
    break;
  }
  return cfg;
}

/// Preset applied (when not manual) and Neumann depth resolved.
inline AlsetConfig resolve_config(const ProblemConstants& c, AlsetConfig cfg)
{
  if (cfg.preset != Preset::manual)
    cfg = apply_preset(c, cfg);
  if (cfg.auto_depth)
    cfg.neumann.depth_N = depth_for_horizon(c, cfg.horizon_K);
  validate(cfg);
  return cfg;
}

struct IterationRecord
{
  std::int64_t k = 0;
  double grad_F_norm_sq = std::numeric_limits<double>::quiet_NaN();
  double lower_err_sq = std::numeric_limits<double>::quiet_NaN();
  double lyapunov = std::numeric_limits<double>::quiet_NaN();
  double alpha_k = 0.0;
  double beta_k = 0.0;
  std::int64_t xi_samples = 0;  // cumulative before the step out of iterate k
  std::int64_t phi_samples = 0;
};

struct TrajectorySummary
{
  Vec final_x;
  Vec final_y;
  std::int64_t iterations = 0;
  /// (1/K) sum_{k<K} ||grad F(x^k)||^2.
  double mean_grad_F_norm_sq = std::numeric_limits<double>::quiet_NaN();
  double final_grad_F_norm_sq = std::numeric_limits<double>::quiet_NaN();
  double final_lower_err_sq = std::numeric_limits<double>::quiet_NaN();
  std::int64_t total_xi_samples = 0;
  std::int64_t total_phi_samples = 0;
  bool aborted = false;
  std::string abort_reason;
};

/// Rows k = 0..K (x^k, y^k), or up to the abort point.
struct Trajectory
{
  std::vector<IterationRecord> records;
  std::vector<Vec> xs; // filled when keep_iterates
  std::vector<Vec> ys;
  TrajectorySummary summary;
};

/// V = F(x) + (L_f / L_y) ||y - y*(x)||^2.
inline double lyapunov_value(const BilevelProblem& problem, const Vec& x, const Vec& y)
{
  const Vec ystar = problem.lower_solution(x);
  const auto& c = problem.constants;
  const double weight = c.L_y > 0.0 ? c.L_f / c.L_y : 0.0;
  return problem.upper_value(x, ystar) + weight * (y - ystar).squaredNorm();
}

namespace detail
{

class TrajectoryWriter
{
public:
  TrajectoryWriter(const BilevelProblem& problem, const AlsetConfig& cfg, Trajectory& out)
    : problem_(problem), cfg_(cfg), out_(out)
  {
    out_.records.reserve(static_cast<std::size_t>(cfg.horizon_K) + 1);
  }

  /// Returns false (and marks the abort) when the iterate is not finite.
  bool record(std::int64_t k, const Vec& x, const Vec& y, double alpha, double beta, std::int64_t xi,
              std::int64_t phi)
  {
    IterationRecord r;
    r.k = k;
    r.alpha_k = alpha;
    r.beta_k = beta;
    r.xi_samples = xi;
    r.phi_samples = phi;
    const bool finite = all_finite(x) && all_finite(y);
    if (finite && problem_.has_ground_truth())
    {
      const Vec ystar = problem_.ground_truth->lower_solution(x);
      r.grad_F_norm_sq = problem_.ground_truth->hypergradient(x).squaredNorm();
      r.lower_err_sq = (y - ystar).squaredNorm();
      const auto& c = problem_.constants;
      const double weight = c.L_y > 0.0 ? c.L_f / c.L_y : 0.0;
      r.lyapunov = problem_.upper_value(x, ystar) + weight * r.lower_err_sq;
    }
    out_.records.push_back(r);
    if (cfg_.keep_iterates)
    {
      out_.xs.push_back(x);
      out_.ys.push_back(y);
    }
    auto& s = out_.summary;
    s.final_x = x;
    s.final_y = y;
    s.iterations = k;
    s.total_xi_samples = xi;
    s.total_phi_samples = phi;
    s.final_grad_F_norm_sq = r.grad_F_norm_sq;
    s.final_lower_err_sq = r.lower_err_sq;
    if (!finite)
    {
      s.aborted = true;
      s.abort_reason = "non-finite iterate at k=" + std::to_string(k);
    }
    return finite;
  }

  void finish()
  {
    auto& s = out_.summary;
    const auto& rec = out_.records;
    const std::size_t n = rec.size() > 1 ? rec.size() - 1 : rec.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += rec[i].grad_F_norm_sq;
    s.mean_grad_F_norm_sq = n > 0 ? acc / static_cast<double>(n) : acc;
  }

private:
  const BilevelProblem& problem_;
  const AlsetConfig& cfg_;
  Trajectory& out_;
};

inline Vec initial_or_zero(const Vec& v, Index n, const char* name)
{
  if (v.size() == 0)
    return Vec::Zero(n);
  if (v.size() != n)
    throw precondition_violation(std::string(name) + " has the wrong dimension");
  return v;
}

inline StepsizePair steps_for(const ProblemConstants& c, const AlsetConfig& cfg, std::int64_t k)
{
  if (cfg.stepsize_mode == StepsizeMode::fixed)
    return {cfg.alpha_fixed, cfg.beta_fixed, cfg.alpha_fixed, cfg.alpha_fixed};
  return stepsize_schedule(c, cfg, k);
}

inline void require_kind(const BilevelProblem& problem, ProblemKind kind, const char* who)
{
  if (problem.kind != kind)
    throw precondition_violation(std::string(who) + ": problem kind does not match the algorithm");
}

/// Shared bilevel loop; `steps(k)` supplies the stepsizes of iteration k.
template <class StepFn>
Trajectory bilevel_loop(const BilevelProblem& problem, const AlsetConfig& cfg, StepFn steps)
{
  Trajectory traj;
  TrajectoryWriter writer(problem, cfg, traj);
  Vec x = initial_or_zero(cfg.x0, problem.dim_upper, "x0");
  Vec y = initial_or_zero(cfg.y0, problem.dim_lower, "y0");

  CounterRng xi(cfg.seed, cfg.run_index, "xi");
  CounterRng phi_lower(cfg.seed, cfg.run_index, "phi_lower");
  CounterRng phi_cross(cfg.seed, cfg.run_index, "phi_cross");
  CounterRng phi_hess(cfg.seed, cfg.run_index, "phi_hess");
  CounterRng level(cfg.seed, cfg.run_index, "level");
  const HypergradientStreams streams{xi, phi_cross, phi_hess, level};

  std::int64_t xi_count = 0;
  std::int64_t phi_count = 0;
  for (std::int64_t k = 0; k < cfg.horizon_K; ++k)
  {
    const auto [alpha, beta, inner_T] = steps(k);
    if (!writer.record(k, x, y, alpha, beta, xi_count, phi_count))
      return traj;
    for (int t = 0; t < inner_T; ++t)
      y -= beta * problem.sample_lower_grad(x, y, phi_lower);
    HypergradientDraw h = stochastic_hypergradient_draw(problem, x, y, cfg.neumann, streams);
    x -= alpha * h.value;
    xi_count += 1;
    phi_count += inner_T + h.hessian_samples + 1;
  }
  const auto [alpha, beta, inner_T] = steps(cfg.horizon_K);
  (void)inner_T;
  writer.record(cfg.horizon_K, x, y, alpha, beta, xi_count, phi_count);
  writer.finish();
  return traj;
}

struct LoopSteps
{
  double alpha;
  double beta;
  int inner_T;
};

} // namespace detail

/**
 * Alternating stochastic gradient descent for bilevel problems: per outer
 * iteration, T lower SGD steps from the previous y, then one upper step
 * along the Neumann hypergradient estimate at (x^k, y^{k+1}).
 *
 * Streams: "phi_lower" (lower gradients), "xi", "phi_cross", "phi_hess",
 * "level". Sample bookkeeping per iteration: 1 xi draw and
 * T + N' + 1 phi draws.
 */
inline Trajectory run_bilevel(const BilevelProblem& problem, const AlsetConfig& config)
{
  const AlsetConfig cfg = resolve_config(problem.constants, config);
  const StepsizePair s = detail::steps_for(problem.constants, cfg, 0);
  return detail::bilevel_loop(problem, cfg, [&](std::int64_t) {
    return detail::LoopSteps{s.alpha_k, s.beta_k, cfg.inner_T};
  });
}

/**
 * Two-timescale baseline: T = 1 with alpha_k = alpha (k+1)^-0.6 and
 * beta_k = beta (k+1)^-0.4, otherwise identical to run_bilevel.
 */
inline Trajectory run_two_timescale_baseline(const BilevelProblem& problem, const AlsetConfig& config)
{
  AlsetConfig cfg = config;
  cfg.inner_T = 1;
  cfg.preset = Preset::manual;
  cfg = resolve_config(problem.constants, cfg);
  if (!(cfg.beta_base > 0.0))
    throw precondition_violation("two-timescale baseline needs beta_base > 0");
  return detail::bilevel_loop(problem, cfg, [&](std::int64_t k) {
    const double kk = static_cast<double>(k + 1);
    return detail::LoopSteps{cfg.alpha_base * std::pow(kk, -0.6), cfg.beta_base * std::pow(kk, -0.4), 1};
  });
}

/**
 * Alternating stochastic gradient descent-ascent. The inner loop ascends
 * y along grad_y f(x^k, y; xi_1) drawn from "xi_inner"; the outer step
 * uses grad_x f(x^k, y^{k+1}; xi_2) from "xi_outer". With T = 1 this is
 * plain SGDA. Per iteration: T + 1 xi draws, no phi draws.
 */
inline Trajectory run_minmax(const BilevelProblem& problem, const AlsetConfig& config)
{
  detail::require_kind(problem, ProblemKind::minmax, "run_minmax");
  const AlsetConfig cfg = resolve_config(problem.constants, config);
  const StepsizePair s = detail::steps_for(problem.constants, cfg, 0);

  Trajectory traj;
  detail::TrajectoryWriter writer(problem, cfg, traj);
  Vec x = detail::initial_or_zero(cfg.x0, problem.dim_upper, "x0");
  Vec y = detail::initial_or_zero(cfg.y0, problem.dim_lower, "y0");
  CounterRng xi_inner(cfg.seed, cfg.run_index, "xi_inner");
  CounterRng xi_outer(cfg.seed, cfg.run_index, "xi_outer");

  std::int64_t xi_count = 0;
  for (std::int64_t k = 0; k < cfg.horizon_K; ++k)
  {
    if (!writer.record(k, x, y, s.alpha_k, s.beta_k, xi_count, 0))
      return traj;
    for (int t = 0; t < cfg.inner_T; ++t)
      y += s.beta_k * problem.sample_upper_grad(x, y, xi_inner).y;
    x -= s.alpha_k * problem.sample_upper_grad(x, y, xi_outer).x;
    xi_count += cfg.inner_T + 1;
  }
  writer.record(cfg.horizon_K, x, y, s.alpha_k, s.beta_k, xi_count, 0);
  writer.finish();
  return traj;
}

/**
 * Stochastic compositional gradient: T averaging steps
 * y <- y - beta (y - h(x^k; phi)), then
 * x <- x - alpha grad h(x^k; phi')' grad f(y^{k+1}; xi).
 * Streams: "phi_lower" for h draws, "phi_cross" for Jacobian draws, "xi".
 * Per iteration: 1 xi draw and T + 1 phi draws.
 */
inline Trajectory run_compositional(const BilevelProblem& problem, const AlsetConfig& config)
{
  detail::require_kind(problem, ProblemKind::compositional, "run_compositional");
  const AlsetConfig cfg = resolve_config(problem.constants, config);
  const StepsizePair s = detail::steps_for(problem.constants, cfg, 0);

  Trajectory traj;
  detail::TrajectoryWriter writer(problem, cfg, traj);
  Vec x = detail::initial_or_zero(cfg.x0, problem.dim_upper, "x0");
  Vec y = detail::initial_or_zero(cfg.y0, problem.dim_lower, "y0");
  CounterRng xi(cfg.seed, cfg.run_index, "xi");
  CounterRng phi_lower(cfg.seed, cfg.run_index, "phi_lower");
  CounterRng phi_cross(cfg.seed, cfg.run_index, "phi_cross");

  std::int64_t xi_count = 0;
  std::int64_t phi_count = 0;
  for (std::int64_t k = 0; k < cfg.horizon_K; ++k)
  {
    if (!writer.record(k, x, y, s.alpha_k, s.beta_k, xi_count, phi_count))
      return traj;
    for (int t = 0; t < cfg.inner_T; ++t)
      y -= s.beta_k * problem.sample_lower_grad(x, y, phi_lower);
    GradPair g = problem.sample_upper_grad(x, y, xi);
    // grad^2_xy g v = -grad h' v
    x -= s.alpha_k * (g.x - problem.sample_lower_hess_xy_vec(x, y, g.y, phi_cross));
    xi_count += 1;
    phi_count += cfg.inner_T + 1;
  }
  writer.record(cfg.horizon_K, x, y, s.alpha_k, s.beta_k, xi_count, phi_count);
  writer.finish();
  return traj;
}

/// Dispatch on the problem kind.
inline Trajectory run_alset(const BilevelProblem& problem, const AlsetConfig& cfg)
{
  switch (problem.kind)
  {
  case ProblemKind::minmax:
    return run_minmax(problem, cfg);
  case ProblemKind::compositional:
    return run_compositional(problem, cfg);
  case ProblemKind::bilevel:
    break;
  }
  return run_bilevel(problem, cfg);
}

} // namespace alset

#endif
