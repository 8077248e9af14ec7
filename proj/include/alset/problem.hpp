#ifndef ALSET_PROBLEM_HPP
#define ALSET_PROBLEM_HPP

#include <cmath>
#include <functional>
#include <optional>
#include <string>

#include "errors.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace alset
{

/// Assumption-level constants of a nested problem, as declared by the instance.
struct PrimitiveConstants
{
  double mu_g = 1.0;
  double l_f0 = 0.0;
  double l_f1 = 0.0;
  double l_g1 = 1.0;
  double l_g2 = 0.0;
  double sigma_f = 0.0;
  double sigma_g1 = 0.0;
  double sigma_g2 = 0.0;

  bool operator==(const PrimitiveConstants&) const = default;
};

/// Primitives of a compositional instance min_x f(h(x)): f, grad f, h, grad h
/// Lipschitz constants and the variances of grad f, h and grad h draws.
struct CompositionalPrimitives
{
  double l_f0 = 0.0;
  double l_f1 = 0.0;
  double l_h0 = 0.0;
  double l_h1 = 0.0;
  double sigma_f = 0.0;
  double sigma_h0 = 0.0;
  double sigma_h1 = 0.0;

  bool operator==(const CompositionalPrimitives&) const = default;
};

enum class ConstantsModel
{
  general,
  compositional
};

struct ProblemConstants
{
  ConstantsModel model = ConstantsModel::general;
  PrimitiveConstants primitives;
  CompositionalPrimitives compositional; // meaningful when model == compositional

  double kappa = 1.0;
  double rho_g = 1.0;
  double L_f = 0.0;
  double L_y = 0.0;
  double L_F = 0.0;
  double L_yx = 0.0;
  double C_f_tilde_sq = 0.0;
  double sigma_f_tilde_sq = 0.0;

  double mu_g() const { return primitives.mu_g; }
  double l_g1() const { return primitives.l_g1; }

  bool operator==(const ProblemConstants&) const = default;
};

namespace detail
{
inline void require_finite_nonnegative(double v, const char* name)
{
  if (!std::isfinite(v) || v < 0.0)
    throw domain_error(std::string("constant ") + name + " must be finite and non-negative");
}
} // namespace detail

/**
 * Derived smoothness and variance constants of a strongly convex lower
 * level problem.
 *
 *   L_f  = l_f1 + l_g1 l_f1 / mu + (l_f0 / mu)(l_g2 + l_g1 l_g2 / mu)
 *   L_y  = l_g1 / mu
 *   L_F  = l_f1 + l_g1 (l_f1 + L_f) / mu + (l_f0 / mu)(l_g2 + l_g1 l_g2 / mu)
 *   L_yx = (l_g2 + l_g2 L_y) / mu + l_g1 (l_g2 + l_g2 L_y) / mu^2
 *   sigma~^2 = sigma_f^2 + 3/mu^2 [(sigma_f^2 + l_f0^2)(sigma_g2^2 + 2 l_g1^2) + sigma_f^2 l_g1^2]
 *   C~^2 = (l_f0 + l_f0 l_g1 / mu + l_g1 l_f1 / mu)^2 + sigma~^2
 *   rho_g = 2 mu l_g1 / (mu + l_g1)
 */
inline ProblemConstants derive_constants(const PrimitiveConstants& p)
{
  if (!std::isfinite(p.mu_g) || p.mu_g <= 0.0)
    throw domain_error("derive_constants: mu_g must be positive");
  detail::require_finite_nonnegative(p.l_f0, "l_f0");
  detail::require_finite_nonnegative(p.l_f1, "l_f1");
  detail::require_finite_nonnegative(p.l_g1, "l_g1");
  detail::require_finite_nonnegative(p.l_g2, "l_g2");
  detail::require_finite_nonnegative(p.sigma_f, "sigma_f");
  detail::require_finite_nonnegative(p.sigma_g1, "sigma_g1");
  detail::require_finite_nonnegative(p.sigma_g2, "sigma_g2");
  if (p.l_g1 < p.mu_g)
    throw domain_error("derive_constants: l_g1 must be at least mu_g");

  const double mu = p.mu_g;
  ProblemConstants c;
  c.model = ConstantsModel::general;
  c.primitives = p;
  c.kappa = p.l_g1 / mu;
  c.rho_g = 2.0 * mu * p.l_g1 / (mu + p.l_g1);
  const double curvature_term = (p.l_f0 / mu) * (p.l_g2 + p.l_g1 * p.l_g2 / mu);
  c.L_f = p.l_f1 + p.l_g1 * p.l_f1 / mu + curvature_term;
  c.L_y = p.l_g1 / mu;
  c.L_F = p.l_f1 + p.l_g1 * (p.l_f1 + c.L_f) / mu + curvature_term;
  const double cross = p.l_g2 + p.l_g2 * c.L_y;
  c.L_yx = cross / mu + p.l_g1 * cross / (mu * mu);
  const double sf2 = p.sigma_f * p.sigma_f;
  c.sigma_f_tilde_sq =
      sf2 + (3.0 / (mu * mu)) * ((sf2 + p.l_f0 * p.l_f0) * (p.sigma_g2 * p.sigma_g2 + 2.0 * p.l_g1 * p.l_g1) +
                                 sf2 * p.l_g1 * p.l_g1);
  const double bound = p.l_f0 + p.l_f0 * p.l_g1 / mu + p.l_g1 * p.l_f1 / mu;
  c.C_f_tilde_sq = bound * bound + c.sigma_f_tilde_sq;
  return c;
}

/// Constants of min_x f(h(x)) cast as a bilevel problem with
/// g(x, y) = 1/2 ||y - h(x)||^2, so mu_g = l_g1 = 1.
inline ProblemConstants derive_compositional_constants(const CompositionalPrimitives& p)
{
  detail::require_finite_nonnegative(p.l_f0, "l_f0");
  detail::require_finite_nonnegative(p.l_f1, "l_f1");
  detail::require_finite_nonnegative(p.l_h0, "l_h0");
  detail::require_finite_nonnegative(p.l_h1, "l_h1");
  detail::require_finite_nonnegative(p.sigma_f, "sigma_f");
  detail::require_finite_nonnegative(p.sigma_h0, "sigma_h0");
  detail::require_finite_nonnegative(p.sigma_h1, "sigma_h1");

  ProblemConstants c;
  c.model = ConstantsModel::compositional;
  c.compositional = p;
  c.primitives = PrimitiveConstants{
      .mu_g = 1.0,
      .l_f0 = p.l_f0,
      .l_f1 = p.l_f1,
      .l_g1 = 1.0,
      .l_g2 = p.l_h1,
      .sigma_f = p.sigma_f,
      .sigma_g1 = p.sigma_h0,
      .sigma_g2 = p.sigma_h1,
  };
  c.kappa = 1.0;
  c.rho_g = 1.0;
  c.L_f = p.l_h0 * p.l_f1;
  c.L_y = p.l_h0;
  c.L_F = p.l_h0 * p.l_h0 * p.l_f1 + p.l_f0 * p.l_h1;
  c.L_yx = p.l_h1;
  const double sf2 = p.sigma_f * p.sigma_f;
  const double sh1 = p.sigma_h1 * p.sigma_h1;
  c.sigma_f_tilde_sq = p.l_h0 * p.l_h0 * sf2 + (p.l_f0 * p.l_f0 + sf2) * sh1;
  c.C_f_tilde_sq = (p.l_f0 * p.l_f0 + sf2) * (p.l_h0 * p.l_h0 + sh1);
  return c;
}

/// Recomputes every derived field from the stored primitives.
inline ProblemConstants rederive(const ProblemConstants& c)
{
  return c.model == ConstantsModel::compositional ? derive_compositional_constants(c.compositional)
                                                  : derive_constants(c.primitives);
}

enum class ProblemKind
{
  bilevel,
  minmax,
  compositional
};

struct GradPair
{
  Vec x;
  Vec y;
};

/// Closed-form (or high-precision) references of a synthetic instance.
struct GroundTruth
{
  std::function<Vec(const Vec&)> lower_solution; // x -> y*(x)
  std::function<Vec(const Vec&)> hypergradient;  // x -> grad F(x)
};

/**
 * Oracle bundle of min_x F(x) = f(x, y*(x)), y*(x) = argmin_y g(x, y).
 *
 * Second-order information is only available as operator applications:
 * lower_hess_yy_vec(x, y, v) = grad^2_yy g(x, y) v  (d'-vector) and
 * lower_hess_xy_vec(x, y, v) = grad^2_xy g(x, y) v  (d-vector, v in R^d').
 * Stochastic oracles draw one sample from the stream they are given and
 * keep no state, so a run is reproducible from its streams alone.
 *
 * Min-max problems store g = -f; compositional problems store
 * f(x, y) = f(y) and g = 1/2 ||y - h(x)||^2.
 */
struct BilevelProblem
{
  using Value = std::function<double(const Vec&, const Vec&)>;
  using Grad = std::function<Vec(const Vec&, const Vec&)>;
  using Apply = std::function<Vec(const Vec&, const Vec&, const Vec&)>;
  using SampleGradPair = std::function<GradPair(const Vec&, const Vec&, CounterRng&)>;
  using SampleGrad = std::function<Vec(const Vec&, const Vec&, CounterRng&)>;
  using SampleApply = std::function<Vec(const Vec&, const Vec&, const Vec&, CounterRng&)>;

  ProblemKind kind = ProblemKind::bilevel;
  Index dim_upper = 0;
  Index dim_lower = 0;

  Value upper_value;
  Grad upper_grad_x;
  Grad upper_grad_y;
  Grad lower_grad_y;
  Apply lower_hess_yy_vec;
  Apply lower_hess_xy_vec;

  SampleGradPair sample_upper_grad;
  SampleGrad sample_lower_grad;
  SampleApply sample_lower_hess_yy_vec;
  SampleApply sample_lower_hess_xy_vec;

  std::optional<GroundTruth> ground_truth;
  ProblemConstants constants;

  bool has_ground_truth() const { return ground_truth.has_value(); }

  Vec lower_solution(const Vec& x) const
  {
    if (!ground_truth)
      throw unsupported_operation("problem has no ground-truth lower solution");
    return ground_truth->lower_solution(x);
  }

  /// F(x) = f(x, y*(x)).
  double upper_objective(const Vec& x) const { return upper_value(x, lower_solution(x)); }
};

namespace detail
{
inline void check_dims(const BilevelProblem& problem, const Vec& x, const Vec& y)
{
  if (x.size() != problem.dim_upper || y.size() != problem.dim_lower)
    throw precondition_violation("dimension mismatch between iterate and problem");
}
} // namespace detail

/// Solves grad^2_yy g(x, y) z = rhs by conjugate gradients.
inline Vec solve_lower_hessian(const BilevelProblem& problem, const Vec& x, const Vec& y, const Vec& rhs)
{
  return conjugate_gradient([&](const Vec& v) { return problem.lower_hess_yy_vec(x, y, v); }, rhs);
}

/**
 * grad_x f(x, y) - grad^2_xy g(x, y) [grad^2_yy g(x, y)]^{-1} grad_y f(x, y).
 *
 * At y = y*(x) this is the hypergradient; elsewhere it is the surrogate
 * whose distance to grad F(x) is at most L_f ||y - y*(x)||.
 */
inline Vec surrogate_gradient(const BilevelProblem& problem, const Vec& x, const Vec& y)
{
  detail::check_dims(problem, x, y);
  Vec z = solve_lower_hessian(problem, x, y, problem.upper_grad_y(x, y));
  return problem.upper_grad_x(x, y) - problem.lower_hess_xy_vec(x, y, z);
}

inline Vec exact_hypergradient(const BilevelProblem& problem, const Vec& x)
{
  if (!problem.ground_truth)
    throw unsupported_operation("exact_hypergradient requires a ground-truth lower solution");
  return surrogate_gradient(problem, x, problem.ground_truth->lower_solution(x));
}

/// Jacobian of x -> y*(x) (d' x d), -[grad^2_yy g]^{-1} grad^2_yx g, from operator oracles.
inline Mat lower_solution_jacobian(const BilevelProblem& problem, const Vec& x)
{
  const Vec y = problem.lower_solution(x);
  const Index d = problem.dim_upper;
  const Index dl = problem.dim_lower;
  // rows of grad^2_xy g are columns of its transpose grad^2_yx g
  Mat cross = materialize([&](const Vec& v) { return problem.lower_hess_xy_vec(x, y, v); }, d, dl);
  Mat jac(dl, d);
  for (Index j = 0; j < d; ++j)
    jac.col(j) = -solve_lower_hessian(problem, x, y, cross.row(j).transpose());
  return jac;
}

} // namespace alset

#endif
