#ifndef ALSET_SYNTHETIC_HPP
#define ALSET_SYNTHETIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>

#include "errors.hpp"
#include "linalg.hpp"
#include "problem.hpp"
#include "rng.hpp"

namespace alset
{

/**
 * Quadratic bilevel instance
 *
 *   f(x, y) = 1/2 x'Px + x'Qy + 1/2 y'Ry + p'x + q'y
 *   g(x, y) = 1/2 y'Ay - y'(Bx + c) + eps sum_i log cosh(y_i)
 *
 * With eps = 0 the lower solution is y*(x) = A^{-1}(Bx + c) and F is an
 * explicit quadratic. eps > 0 adds a smooth convex term with bounded
 * third derivative (|d^3/dt^3 log cosh| <= 4 / (3 sqrt 3)), giving a
 * nonzero l_g2; y*(x) then comes from a Newton solve.
 *
 * Noise: gradients get isotropic Gaussian perturbations with the given
 * per-coordinate scales. Hessian draws add a symmetric perturbation of
 * typical spectral size noise_sigma_hess, redrawn while its spectral norm
 * reaches mu_g / 2, so each sampled Hessian stays in [mu_g/2, l_g1].
 */
struct QuadraticBilevelSpec
{
  Mat A, B;
  Vec c;
  Mat P, Q, R;
  Vec p, q;
  double noise_sigma_grad_f = 0.0;
  double noise_sigma_grad_g = 0.0;
  double noise_sigma_hess = 0.0;
  double smoothing_weight = 0.0;
  /// Radius of the x-region on which l_f0 is certified.
  double domain_radius = 10.0;
};

/// f(x, y) = 1/2 x'Px + x'Qy - 1/2 y'Ry, strongly concave in y.
struct MinmaxSpec
{
  Mat P, Q, R;
  double noise_sigma = 0.0;
  double domain_radius = 10.0;
};

/// min_x f(h(x)) with h(x) = Wx + w and f(y) = 1/2 y'My + m'y.
struct CompositionalSpec
{
  Mat W;
  Vec w;
  Mat M;
  Vec m;
  double noise_sigma_h = 0.0;   // h(x; phi) draws
  double noise_sigma_jac = 0.0; // grad h(x; phi) draws, per entry
  double noise_sigma_f = 0.0;   // grad f(y; xi) draws
  double domain_radius = 10.0;
};

inline constexpr double log_cosh_third_derivative_bound = 4.0 / (3.0 * 1.7320508075688772);

namespace detail
{

inline bool is_symmetric(const Mat& m)
{
  return m.rows() == m.cols() && (m - m.transpose()).norm() <= 1e-12 * std::max(1.0, m.norm());
}

/// Symmetric perturbation with spectral norm below `bound`, by rejection.
inline Mat symmetric_noise(Index n, double scale, double bound, CounterRng& rng)
{
  for (;;)
  {
    Mat e(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i <= j; ++i)
        e(i, j) = e(j, i) = rng.normal();
    e *= scale / (2.0 * std::sqrt(static_cast<double>(n)));
    Eigen::SelfAdjointEigenSolver<Mat> es(e, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().cwiseAbs().maxCoeff() < bound)
      return e;
  }
}

inline Mat rectangular_noise(Index rows, Index cols, double scale, double bound, CounterRng& rng)
{
  const double norm = std::sqrt(static_cast<double>(rows)) + std::sqrt(static_cast<double>(cols));
  for (;;)
  {
    Mat e = gaussian_matrix(rows, cols, scale / norm, rng);
    if (spectral_norm(e) < bound)
      return e;
  }
}

inline Vec linspace(Index n, double lo, double hi)
{
  if (n == 1)
    return Vec::Constant(1, lo);
  return Vec::LinSpaced(n, lo, hi);
}

inline Mat spd_with_spectrum(const Vec& eigenvalues, CounterRng& rng)
{
  Mat u = random_orthogonal(eigenvalues.size(), rng);
  Mat m = u * eigenvalues.asDiagonal() * u.transpose();
  return 0.5 * (m + m.transpose());
}

inline Mat with_spectral_norm(Mat m, double target)
{
  double n = spectral_norm(m);
  if (n > 0.0)
    m *= target / n;
  return m;
}

struct QuadraticData
{
  QuadraticBilevelSpec spec;
  Eigen::LDLT<Mat> a_factor;
  Mat solution_map;   // A^{-1} B
  Vec solution_shift; // A^{-1} c
  Mat hyper_hessian;  // Hessian of F when eps = 0
  Vec hyper_shift;
  double mu_g = 0.0;
};

inline Vec smooth_lower_solution(const QuadraticData& d, const Vec& x)
{
  const auto& s = d.spec;
  const Vec rhs = s.B * x + s.c;
  Vec y = d.a_factor.solve(rhs);
  if (s.smoothing_weight == 0.0)
    return y;
  auto residual = [&](const Vec& v) -> Vec {
    return s.A * v + s.smoothing_weight * v.array().tanh().matrix() - rhs;
  };
  Vec r = residual(y);
  const double tol = 1e-15 * (1.0 + rhs.norm());
  for (int it = 0; it < 100 && r.norm() > tol; ++it)
  {
    Mat h = s.A;
    h.diagonal().array() += s.smoothing_weight * (1.0 - y.array().tanh().square());
    Vec step = h.ldlt().solve(r);
    double t = 1.0;
    Vec trial = y - step;
    Vec r_trial = residual(trial);
    while (r_trial.norm() > r.norm() && t > 1e-8)
    {
      t *= 0.5;
      trial = y - t * step;
      r_trial = residual(trial);
    }
    if (r_trial.norm() >= r.norm())
      break;
    y = std::move(trial);
    r = std::move(r_trial);
  }
  return y;
}

} // namespace detail

/**
 * Builds the oracle bundle of a quadratic (or smoothed quadratic) bilevel
 * instance. Throws domain_error when A is not symmetric positive definite,
 * when P or R are not symmetric positive semidefinite, or when the
 * Hessian noise scale reaches mu_g / 2.
 */
inline BilevelProblem make_quadratic_bilevel(const QuadraticBilevelSpec& spec)
{
  const Index d = spec.P.rows();
  const Index dl = spec.A.rows();
  if (d < 1 || dl < 1)
    throw domain_error("quadratic bilevel: empty dimensions");
  if (spec.A.cols() != dl || spec.B.rows() != dl || spec.B.cols() != d || spec.c.size() != dl ||
      spec.P.cols() != d || spec.Q.rows() != d || spec.Q.cols() != dl || spec.R.rows() != dl ||
      spec.R.cols() != dl || spec.p.size() != d || spec.q.size() != dl)
    throw domain_error("quadratic bilevel: inconsistent matrix shapes");
  if (!detail::is_symmetric(spec.A) || !detail::is_symmetric(spec.P) || !detail::is_symmetric(spec.R))
    throw domain_error("quadratic bilevel: A, P and R must be symmetric");
  if (spec.noise_sigma_grad_f < 0.0 || spec.noise_sigma_grad_g < 0.0 || spec.noise_sigma_hess < 0.0 ||
      spec.smoothing_weight < 0.0 || !(spec.domain_radius > 0.0))
    throw domain_error("quadratic bilevel: noise scales and smoothing must be non-negative");

  const double mu = symmetric_min_eigenvalue(spec.A);
  if (!(mu > 0.0))
    throw domain_error("quadratic bilevel: A is not positive definite");
  if (symmetric_min_eigenvalue(spec.P) < -1e-12 || symmetric_min_eigenvalue(spec.R) < -1e-12)
    throw domain_error("quadratic bilevel: P and R must be positive semidefinite");
  if (spec.noise_sigma_hess >= 0.5 * mu)
    throw domain_error("quadratic bilevel: Hessian noise must stay below mu_g / 2");

  auto data = std::make_shared<detail::QuadraticData>();
  data->spec = spec;
  data->mu_g = mu;
  data->a_factor.compute(spec.A);
  data->solution_map = data->a_factor.solve(spec.B);
  data->solution_shift = data->a_factor.solve(spec.c);
  const Mat& S = data->solution_map;
  const Vec& s0 = data->solution_shift;
  data->hyper_hessian = spec.P + spec.Q * S + S.transpose() * spec.Q.transpose() + S.transpose() * spec.R * S;
  data->hyper_shift = spec.Q * s0 + S.transpose() * spec.R * s0 + spec.p + S.transpose() * spec.q;

  std::shared_ptr<const detail::QuadraticData> cd = data;
  const double eps = spec.smoothing_weight;
  const bool hess_noise = spec.noise_sigma_hess > 0.0;

  BilevelProblem prob;
  prob.kind = ProblemKind::bilevel;
  prob.dim_upper = d;
  prob.dim_lower = dl;

  prob.upper_value = [cd](const Vec& x, const Vec& y) {
    const auto& s = cd->spec;
    return 0.5 * x.dot(s.P * x) + x.dot(s.Q * y) + 0.5 * y.dot(s.R * y) + s.p.dot(x) + s.q.dot(y);
  };
  prob.upper_grad_x = [cd](const Vec& x, const Vec& y) -> Vec {
    const auto& s = cd->spec;
    return s.P * x + s.Q * y + s.p;
  };
  prob.upper_grad_y = [cd](const Vec& x, const Vec& y) -> Vec {
    const auto& s = cd->spec;
    return s.Q.transpose() * x + s.R * y + s.q;
  };
  prob.lower_grad_y = [cd, eps](const Vec& x, const Vec& y) -> Vec {
    const auto& s = cd->spec;
    Vec g = s.A * y - s.B * x - s.c;
    if (eps > 0.0)
      g += eps * y.array().tanh().matrix();
    return g;
  };
  prob.lower_hess_yy_vec = [cd, eps](const Vec&, const Vec& y, const Vec& v) -> Vec {
    Vec h = cd->spec.A * v;
    if (eps > 0.0)
      h.array() += eps * (1.0 - y.array().tanh().square()) * v.array();
    return h;
  };
  prob.lower_hess_xy_vec = [cd](const Vec&, const Vec&, const Vec& v) -> Vec {
    return -(cd->spec.B.transpose() * v);
  };

  const BilevelProblem::Grad gx = prob.upper_grad_x;
  const BilevelProblem::Grad gy = prob.upper_grad_y;
  const BilevelProblem::Grad lg = prob.lower_grad_y;
  const BilevelProblem::Apply hyy = prob.lower_hess_yy_vec;
  prob.sample_upper_grad = [cd, gx, gy](const Vec& x, const Vec& y, CounterRng& rng) {
    const double s = cd->spec.noise_sigma_grad_f;
    GradPair g{gx(x, y), gy(x, y)};
    if (s > 0.0)
    {
      g.x += gaussian_vector(g.x.size(), s, rng);
      g.y += gaussian_vector(g.y.size(), s, rng);
    }
    return g;
  };
  prob.sample_lower_grad = [cd, lg](const Vec& x, const Vec& y, CounterRng& rng) -> Vec {
    const double s = cd->spec.noise_sigma_grad_g;
    Vec g = lg(x, y);
    if (s > 0.0)
      g += gaussian_vector(g.size(), s, rng);
    return g;
  };
  prob.sample_lower_hess_yy_vec = [cd, hyy, hess_noise](const Vec& x, const Vec& y, const Vec& v,
                                                        CounterRng& rng) -> Vec {
    Vec h = hyy(x, y, v);
    if (hess_noise)
      h += detail::symmetric_noise(v.size(), cd->spec.noise_sigma_hess, 0.5 * cd->mu_g, rng) * v;
    return h;
  };
  prob.sample_lower_hess_xy_vec = [cd, hess_noise](const Vec&, const Vec&, const Vec& v,
                                                   CounterRng& rng) -> Vec {
    const auto& s = cd->spec;
    if (!hess_noise)
      return -(s.B.transpose() * v);
    Mat e = detail::rectangular_noise(s.B.rows(), s.B.cols(), s.noise_sigma_hess, 0.5 * cd->mu_g, rng);
    return -((s.B + e).transpose() * v);
  };

  GroundTruth truth;
  if (eps == 0.0)
  {
    truth.lower_solution = [cd](const Vec& x) -> Vec { return cd->solution_map * x + cd->solution_shift; };
    truth.hypergradient = [cd](const Vec& x) -> Vec { return cd->hyper_hessian * x + cd->hyper_shift; };
  }
  else
  {
    truth.lower_solution = [cd](const Vec& x) -> Vec { return detail::smooth_lower_solution(*cd, x); };
    // grad F = grad_x f + B' H^{-1} grad_y f with a dense factorization at the Newton solution
    truth.hypergradient = [cd, eps](const Vec& x) -> Vec {
      const auto& s = cd->spec;
      Vec y = detail::smooth_lower_solution(*cd, x);
      Mat h = s.A;
      h.diagonal().array() += eps * (1.0 - y.array().tanh().square());
      Vec fy = s.Q.transpose() * x + s.R * y + s.q;
      return s.P * x + s.Q * y + s.p + s.B.transpose() * h.ldlt().solve(fy);
    };
  }
  prob.ground_truth = std::move(truth);

  // declared constants
  const double b_norm = spectral_norm(spec.B);
  double l_g1 = std::max(symmetric_max_eigenvalue(spec.A) + eps, b_norm);
  if (hess_noise)
    l_g1 += 0.5 * mu;
  Mat f_hess(d + dl, d + dl);
  f_hess << spec.P, spec.Q, spec.Q.transpose(), spec.R;
  const double l_f1 = spectral_norm(f_hess);
  const double r = spec.domain_radius;
  const double y_bound = (b_norm * r + spec.c.norm()) / mu;
  Vec lin(d + dl);
  lin << spec.p, spec.q;

  PrimitiveConstants pc;
  pc.mu_g = mu;
  pc.l_g1 = l_g1;
  pc.l_g2 = eps * log_cosh_third_derivative_bound;
  pc.l_f1 = l_f1;
  pc.l_f0 = l_f1 * std::hypot(r, y_bound) + lin.norm();
  pc.sigma_f = spec.noise_sigma_grad_f * std::sqrt(static_cast<double>(d + dl));
  pc.sigma_g1 = spec.noise_sigma_grad_g * std::sqrt(static_cast<double>(dl));
  pc.sigma_g2 = hess_noise ? mu : 0.0;
  prob.constants = derive_constants(pc);
  return prob;
}

/// Min-max instance cast as bilevel with g = -f.
inline BilevelProblem make_minmax_quadratic(const MinmaxSpec& spec)
{
  const Index d = spec.P.rows();
  const Index dl = spec.R.rows();
  if (d < 1 || dl < 1 || spec.P.cols() != d || spec.R.cols() != dl || spec.Q.rows() != d ||
      spec.Q.cols() != dl)
    throw domain_error("minmax quadratic: inconsistent matrix shapes");
  if (!detail::is_symmetric(spec.P) || !detail::is_symmetric(spec.R))
    throw domain_error("minmax quadratic: P and R must be symmetric");
  if (spec.noise_sigma < 0.0 || !(spec.domain_radius > 0.0))
    throw domain_error("minmax quadratic: noise must be non-negative");
  const double mu = symmetric_min_eigenvalue(spec.R);
  if (!(mu > 0.0))
    throw domain_error("minmax quadratic: R is not positive definite");

  struct Data
  {
    MinmaxSpec spec;
    Mat solution_map; // R^{-1} Q'
    Mat hyper_hessian;
  };
  auto data = std::make_shared<Data>();
  data->spec = spec;
  Eigen::LDLT<Mat> r_factor(spec.R);
  data->solution_map = r_factor.solve(spec.Q.transpose());
  data->hyper_hessian = spec.P + spec.Q * data->solution_map;
  data->hyper_hessian = 0.5 * (data->hyper_hessian + data->hyper_hessian.transpose());
  if (symmetric_min_eigenvalue(data->hyper_hessian) < -1e-12)
    throw domain_error("minmax quadratic: P + Q R^{-1} Q' must be positive semidefinite");
  std::shared_ptr<const Data> cd = data;

  BilevelProblem prob;
  prob.kind = ProblemKind::minmax;
  prob.dim_upper = d;
  prob.dim_lower = dl;
  prob.upper_value = [cd](const Vec& x, const Vec& y) {
    const auto& s = cd->spec;
    return 0.5 * x.dot(s.P * x) + x.dot(s.Q * y) - 0.5 * y.dot(s.R * y);
  };
  prob.upper_grad_x = [cd](const Vec& x, const Vec& y) -> Vec { return cd->spec.P * x + cd->spec.Q * y; };
  prob.upper_grad_y = [cd](const Vec& x, const Vec& y) -> Vec {
    return cd->spec.Q.transpose() * x - cd->spec.R * y;
  };
  prob.lower_grad_y = [cd](const Vec& x, const Vec& y) -> Vec {
    return cd->spec.R * y - cd->spec.Q.transpose() * x;
  };
  prob.lower_hess_yy_vec = [cd](const Vec&, const Vec&, const Vec& v) -> Vec { return cd->spec.R * v; };
  prob.lower_hess_xy_vec = [cd](const Vec&, const Vec&, const Vec& v) -> Vec { return -(cd->spec.Q * v); };

  const auto gx = prob.upper_grad_x;
  const auto gy = prob.upper_grad_y;
  prob.sample_upper_grad = [cd, gx, gy](const Vec& x, const Vec& y, CounterRng& rng) {
    const double s = cd->spec.noise_sigma;
    GradPair g{gx(x, y), gy(x, y)};
    if (s > 0.0)
    {
      g.x += gaussian_vector(g.x.size(), s, rng);
      g.y += gaussian_vector(g.y.size(), s, rng);
    }
    return g;
  };
  prob.sample_lower_grad = [cd, gy](const Vec& x, const Vec& y, CounterRng& rng) -> Vec {
    const double s = cd->spec.noise_sigma;
    Vec g = gy(x, y);
    if (s > 0.0)
      g += gaussian_vector(g.size(), s, rng);
    return -g;
  };
  const auto hyy = prob.lower_hess_yy_vec;
  const auto hxy = prob.lower_hess_xy_vec;
  prob.sample_lower_hess_yy_vec = [hyy](const Vec& x, const Vec& y, const Vec& v, CounterRng&) {
    return hyy(x, y, v);
  };
  prob.sample_lower_hess_xy_vec = [hxy](const Vec& x, const Vec& y, const Vec& v, CounterRng&) {
    return hxy(x, y, v);
  };

  GroundTruth truth;
  truth.lower_solution = [cd](const Vec& x) -> Vec { return cd->solution_map * x; };
  truth.hypergradient = [cd](const Vec& x) -> Vec { return cd->hyper_hessian * x; };
  prob.ground_truth = std::move(truth);

  const double q_norm = spectral_norm(spec.Q);
  Mat f_hess(d + dl, d + dl);
  f_hess << spec.P, spec.Q, spec.Q.transpose(), -spec.R;
  const double l_f1 = spectral_norm(f_hess);
  const double r = spec.domain_radius;

  PrimitiveConstants pc;
  pc.mu_g = mu;
  pc.l_g1 = std::max(symmetric_max_eigenvalue(spec.R), q_norm);
  pc.l_g2 = 0.0;
  pc.l_f1 = l_f1;
  pc.l_f0 = l_f1 * std::hypot(r, q_norm * r / mu);
  pc.sigma_f = spec.noise_sigma * std::sqrt(static_cast<double>(d + dl));
  pc.sigma_g1 = spec.noise_sigma * std::sqrt(static_cast<double>(dl));
  pc.sigma_g2 = 0.0;
  prob.constants = derive_constants(pc);
  return prob;
}

/// Compositional instance with g(x, y) = 1/2 ||y - h(x)||^2, so grad^2_yy g = I.
inline BilevelProblem make_compositional(const CompositionalSpec& spec)
{
  const Index dl = spec.W.rows();
  const Index d = spec.W.cols();
  if (d < 1 || dl < 1 || spec.w.size() != dl || spec.M.rows() != dl || spec.M.cols() != dl ||
      spec.m.size() != dl)
    throw domain_error("compositional: inconsistent shapes");
  if (!detail::is_symmetric(spec.M) || symmetric_min_eigenvalue(spec.M) < -1e-12)
    throw domain_error("compositional: M must be symmetric positive semidefinite");
  if (spec.noise_sigma_h < 0.0 || spec.noise_sigma_jac < 0.0 || spec.noise_sigma_f < 0.0 ||
      !(spec.domain_radius > 0.0))
    throw domain_error("compositional: noise scales must be non-negative");

  auto cd = std::make_shared<const CompositionalSpec>(spec);

  BilevelProblem prob;
  prob.kind = ProblemKind::compositional;
  prob.dim_upper = d;
  prob.dim_lower = dl;
  prob.upper_value = [cd](const Vec&, const Vec& y) { return 0.5 * y.dot(cd->M * y) + cd->m.dot(y); };
  prob.upper_grad_x = [d](const Vec&, const Vec&) -> Vec { return Vec::Zero(d); };
  prob.upper_grad_y = [cd](const Vec&, const Vec& y) -> Vec { return cd->M * y + cd->m; };
  prob.lower_grad_y = [cd](const Vec& x, const Vec& y) -> Vec { return y - (cd->W * x + cd->w); };
  prob.lower_hess_yy_vec = [](const Vec&, const Vec&, const Vec& v) -> Vec { return v; };
  prob.lower_hess_xy_vec = [cd](const Vec&, const Vec&, const Vec& v) -> Vec {
    return -(cd->W.transpose() * v);
  };

  prob.sample_upper_grad = [cd, d](const Vec&, const Vec& y, CounterRng& rng) {
    GradPair g{Vec::Zero(d), cd->M * y + cd->m};
    if (cd->noise_sigma_f > 0.0)
      g.y += gaussian_vector(g.y.size(), cd->noise_sigma_f, rng);
    return g;
  };
  prob.sample_lower_grad = [cd](const Vec& x, const Vec& y, CounterRng& rng) -> Vec {
    Vec h = cd->W * x + cd->w;
    if (cd->noise_sigma_h > 0.0)
      h += gaussian_vector(h.size(), cd->noise_sigma_h, rng);
    return y - h;
  };
  prob.sample_lower_hess_yy_vec = [](const Vec&, const Vec&, const Vec& v, CounterRng&) -> Vec { return v; };
  prob.sample_lower_hess_xy_vec = [cd](const Vec&, const Vec&, const Vec& v, CounterRng& rng) -> Vec {
    if (cd->noise_sigma_jac == 0.0)
      return -(cd->W.transpose() * v);
    Mat jac = cd->W + gaussian_matrix(cd->W.rows(), cd->W.cols(), cd->noise_sigma_jac, rng);
    return -(jac.transpose() * v);
  };

  GroundTruth truth;
  truth.lower_solution = [cd](const Vec& x) -> Vec { return cd->W * x + cd->w; };
  truth.hypergradient = [cd](const Vec& x) -> Vec {
    return cd->W.transpose() * (cd->M * (cd->W * x + cd->w) + cd->m);
  };
  prob.ground_truth = std::move(truth);

  const double w_norm = spectral_norm(spec.W);
  const double m_norm = spectral_norm(spec.M);
  CompositionalPrimitives cp;
  cp.l_h0 = w_norm;
  cp.l_h1 = 0.0;
  cp.l_f1 = m_norm;
  cp.l_f0 = m_norm * (w_norm * spec.domain_radius + spec.w.norm()) + spec.m.norm();
  cp.sigma_f = spec.noise_sigma_f * std::sqrt(static_cast<double>(dl));
  cp.sigma_h0 = spec.noise_sigma_h * std::sqrt(static_cast<double>(dl));
  cp.sigma_h1 = spec.noise_sigma_jac * std::sqrt(static_cast<double>(d * dl));
  prob.constants = derive_compositional_constants(cp);
  return prob;
}

// ---------------------------------------------------------------------------
// seeded generators

struct QuadraticGeneratorParams
{
  Index dim_upper = 5;
  Index dim_lower = 5;
  double mu_g = 1.0;
  double kappa = 2.0;
  /// ||B|| as a fraction of lambda_max(A).
  double cross_scale = 0.5;
  double upper_curvature_min = 0.5;
  double upper_curvature_max = 1.0;
  double lower_weight_min = 0.5; // spectrum of R
  double lower_weight_max = 1.0;
  double coupling_norm = 0.0; // ||Q||
  double offset_scale = 1.0;  // scale of c, p, q
  double noise_sigma_grad_f = 0.0;
  double noise_sigma_grad_g = 0.0;
  double noise_sigma_hess = 0.0;
  double smoothing_weight = 0.0;
};

/**
 * Random quadratic bilevel spec: A has eigenvalues evenly spaced on
 * [mu_g, kappa mu_g] in a random basis, B is Gaussian rescaled to
 * cross_scale * kappa * mu_g, P and R have evenly spaced spectra.
 */
inline QuadraticBilevelSpec generate_quadratic_spec(const QuadraticGeneratorParams& g, std::uint64_t seed)
{
  if (g.dim_upper < 1 || g.dim_lower < 1 || !(g.mu_g > 0.0) || g.kappa < 1.0 || g.cross_scale < 0.0 ||
      g.cross_scale > 1.0)
    throw domain_error("generate_quadratic_spec: invalid parameters");
  CounterRng rng(seed, 0, "quadratic_spec");
  const Index d = g.dim_upper;
  const Index dl = g.dim_lower;
  QuadraticBilevelSpec s;
  s.A = detail::spd_with_spectrum(detail::linspace(dl, g.mu_g, g.kappa * g.mu_g), rng);
  s.B = detail::with_spectral_norm(gaussian_matrix(dl, d, 1.0, rng), g.cross_scale * g.kappa * g.mu_g);
  s.c = gaussian_vector(dl, g.offset_scale, rng);
  s.P = detail::spd_with_spectrum(detail::linspace(d, g.upper_curvature_min, g.upper_curvature_max), rng);
  s.Q = g.coupling_norm > 0.0 ? detail::with_spectral_norm(gaussian_matrix(d, dl, 1.0, rng), g.coupling_norm)
                              : Mat::Zero(d, dl);
  s.R = detail::spd_with_spectrum(detail::linspace(dl, g.lower_weight_min, g.lower_weight_max), rng);
  s.p = gaussian_vector(d, g.offset_scale, rng);
  s.q = gaussian_vector(dl, g.offset_scale, rng);
  s.noise_sigma_grad_f = g.noise_sigma_grad_f;
  s.noise_sigma_grad_g = g.noise_sigma_grad_g;
  s.noise_sigma_hess = g.noise_sigma_hess;
  s.smoothing_weight = g.smoothing_weight;
  return s;
}

/// Well-conditioned 5x5 instances for kappa in {1, 2, 4, 8}.
inline QuadraticBilevelSpec canned_quadratic_spec(int kappa)
{
  if (kappa != 1 && kappa != 2 && kappa != 4 && kappa != 8)
    throw domain_error("canned specs exist for kappa in {1, 2, 4, 8}");
  QuadraticGeneratorParams g;
  g.kappa = kappa;
  g.coupling_norm = 0.2;
  return generate_quadratic_spec(g, 1000 + static_cast<std::uint64_t>(kappa));
}

struct MinmaxGeneratorParams
{
  Index dim_upper = 5;
  Index dim_lower = 5;
  double mu_g = 1.0;
  double kappa = 2.0;
  double coupling_scale = 0.5; // ||Q|| as a fraction of lambda_max(R)
  double upper_curvature_min = 0.5;
  double upper_curvature_max = 1.0;
  double noise_sigma = 0.0;
};

inline MinmaxSpec generate_minmax_spec(const MinmaxGeneratorParams& g, std::uint64_t seed)
{
  if (g.dim_upper < 1 || g.dim_lower < 1 || !(g.mu_g > 0.0) || g.kappa < 1.0 || g.coupling_scale < 0.0 ||
      g.coupling_scale > 1.0)
    throw domain_error("generate_minmax_spec: invalid parameters");
  CounterRng rng(seed, 0, "minmax_spec");
  MinmaxSpec s;
  s.R = detail::spd_with_spectrum(detail::linspace(g.dim_lower, g.mu_g, g.kappa * g.mu_g), rng);
  s.Q = detail::with_spectral_norm(gaussian_matrix(g.dim_upper, g.dim_lower, 1.0, rng),
                                   g.coupling_scale * g.kappa * g.mu_g);
  s.P = detail::spd_with_spectrum(detail::linspace(g.dim_upper, g.upper_curvature_min, g.upper_curvature_max),
                                  rng);
  s.noise_sigma = g.noise_sigma;
  return s;
}

struct CompositionalGeneratorParams
{
  Index dim_upper = 5;
  Index dim_lower = 5;
  double inner_sv_min = 0.5; // singular values of W
  double inner_sv_max = 1.0;
  double outer_curvature_min = 0.5; // spectrum of M
  double outer_curvature_max = 1.0;
  double offset_scale = 1.0;
  double noise_sigma_h = 0.0;
  double noise_sigma_jac = 0.0;
  double noise_sigma_f = 0.0;
};

inline CompositionalSpec generate_compositional_spec(const CompositionalGeneratorParams& g, std::uint64_t seed)
{
  if (g.dim_upper < 1 || g.dim_lower < 1 || g.inner_sv_min < 0.0 || g.inner_sv_max < g.inner_sv_min)
    throw domain_error("generate_compositional_spec: invalid parameters");
  CounterRng rng(seed, 0, "compositional_spec");
  const Index d = g.dim_upper;
  const Index dl = g.dim_lower;
  const Index k = std::min(d, dl);
  Mat u = random_orthogonal(dl, rng);
  Mat v = random_orthogonal(d, rng);
  Vec sv = detail::linspace(k, g.inner_sv_max, g.inner_sv_min);
  CompositionalSpec s;
  s.W = u.leftCols(k) * sv.asDiagonal() * v.leftCols(k).transpose();
  s.w = gaussian_vector(dl, g.offset_scale, rng);
  s.M = detail::spd_with_spectrum(detail::linspace(dl, g.outer_curvature_min, g.outer_curvature_max), rng);
  s.m = gaussian_vector(dl, g.offset_scale, rng);
  s.noise_sigma_h = g.noise_sigma_h;
  s.noise_sigma_jac = g.noise_sigma_jac;
  s.noise_sigma_f = g.noise_sigma_f;
  return s;
}

/// d = d' = 1: g = 1/2 (y - x)^2, f = 1/2 y^2, so y*(x) = x and F(x) = x^2 / 2.
inline QuadraticBilevelSpec scalar_sanity_spec()
{
  QuadraticBilevelSpec s;
  s.A = Mat::Constant(1, 1, 1.0);
  s.B = Mat::Constant(1, 1, 1.0);
  s.c = Vec::Zero(1);
  s.P = Mat::Zero(1, 1);
  s.Q = Mat::Zero(1, 1);
  s.R = Mat::Constant(1, 1, 1.0);
  s.p = Vec::Zero(1);
  s.q = Vec::Zero(1);
  return s;
}

} // namespace alset

#endif
