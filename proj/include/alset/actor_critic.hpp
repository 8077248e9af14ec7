#ifndef ALSET_ACTOR_CRITIC_HPP
#define ALSET_ACTOR_CRITIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "alset.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "rng.hpp"

namespace alset
{

/**
 * Finite MDP with a softmax-tabular policy pi_theta(a|s) ∝ exp(theta[s, a])
 * and linear value features. transition[a](s, s') = P(s'|s, a) and
 * reward[a](s, s') = R(s, a, s'). theta is stored row-major: index s * |A| + a.
 */
struct TabularMdp
{
  Index n_states = 0;
  Index n_actions = 0;
  std::vector<Mat> transition;
  std::vector<Mat> reward;
  double gamma = 0.0;
  Vec init_dist;
  Mat features; // |S| x d_y, row norms <= 1

  Index theta_dim() const { return n_states * n_actions; }
  Index feature_dim() const { return features.cols(); }

  double r_max() const
  {
    double m = 0.0;
    for (const auto& r : reward)
      m = std::max(m, r.cwiseAbs().maxCoeff());
    return m;
  }
};

inline void validate(const TabularMdp& mdp)
{
  const Index ns = mdp.n_states;
  const Index na = mdp.n_actions;
  if (ns < 1 || na < 1)
    throw domain_error("mdp: needs at least one state and one action");
  if (static_cast<Index>(mdp.transition.size()) != na || static_cast<Index>(mdp.reward.size()) != na)
    throw domain_error("mdp: one transition and reward matrix per action");
  if (!(mdp.gamma >= 0.0 && mdp.gamma < 1.0))
    throw domain_error("mdp: gamma must lie in [0, 1)");
  for (Index a = 0; a < na; ++a)
  {
    const Mat& p = mdp.transition[a];
    if (p.rows() != ns || p.cols() != ns || mdp.reward[a].rows() != ns || mdp.reward[a].cols() != ns)
      throw domain_error("mdp: transition and reward matrices must be |S| x |S|");
    if (p.minCoeff() < 0.0)
      throw domain_error("mdp: negative transition probability");
    if (((p.rowwise().sum().array() - 1.0).abs() > 1e-12).any())
      throw domain_error("mdp: transition rows must sum to 1");
    if (!mdp.reward[a].allFinite())
      throw domain_error("mdp: non-finite reward");
  }
  if (mdp.init_dist.size() != ns || mdp.init_dist.minCoeff() < 0.0 || std::abs(mdp.init_dist.sum() - 1.0) > 1e-12)
    throw domain_error("mdp: init_dist must be a probability vector over states");
  if (mdp.features.rows() != ns || mdp.features.cols() < 1)
    throw domain_error("mdp: features must have one row per state");
  if ((mdp.features.rowwise().norm().array() > 1.0 + 1e-12).any())
    throw domain_error("mdp: feature rows must have norm at most 1");
}

/// pi(s, a), each row a softmax of the corresponding theta block.
inline Mat policy_matrix(const TabularMdp& mdp, const Vec& theta)
{
  if (theta.size() != mdp.theta_dim())
    throw precondition_violation("theta has the wrong dimension");
  Mat pi(mdp.n_states, mdp.n_actions);
  for (Index s = 0; s < mdp.n_states; ++s)
  {
    auto row = theta.segment(s * mdp.n_actions, mdp.n_actions);
    const double m = row.maxCoeff();
    double z = 0.0;
    for (Index a = 0; a < mdp.n_actions; ++a)
      z += pi(s, a) = std::exp(row(a) - m);
    pi.row(s) /= z;
  }
  return pi;
}

/// P_pi(s, s') = sum_a pi(a|s) P(s'|s, a).
inline Mat state_transition(const TabularMdp& mdp, const Mat& pi)
{
  Mat p = Mat::Zero(mdp.n_states, mdp.n_states);
  for (Index a = 0; a < mdp.n_actions; ++a)
    p += pi.col(a).asDiagonal() * mdp.transition[a];
  return p;
}

/// Expected one-step reward per state under pi.
inline Vec expected_reward(const TabularMdp& mdp, const Mat& pi)
{
  Vec r = Vec::Zero(mdp.n_states);
  for (Index a = 0; a < mdp.n_actions; ++a)
    r += pi.col(a).cwiseProduct(mdp.transition[a].cwiseProduct(mdp.reward[a]).rowwise().sum());
  return r;
}

/// Unique mu with mu' P_pi = mu', sum mu = 1.
inline Vec stationary_distribution(const TabularMdp& mdp, const Vec& theta)
{
  const Index n = mdp.n_states;
  const Mat p = state_transition(mdp, policy_matrix(mdp, theta));
  Mat m = (p - Mat::Identity(n, n)).transpose();
  m.row(n - 1).setOnes();
  Vec rhs = Vec::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::FullPivLU<Mat> lu(m);
  lu.setThreshold(1e-12);
  if (lu.rank() < n)
    throw domain_error("stationary_distribution: chain is reducible, stationary distribution not unique");
  Vec mu = lu.solve(rhs);
  mu += lu.solve(rhs - m * mu); // one refinement step
  return mu;
}

/// d = (1 - gamma) eta + gamma P_pi' d.
inline Vec discounted_visitation(const TabularMdp& mdp, const Vec& theta)
{
  const Index n = mdp.n_states;
  const Mat p = state_transition(mdp, policy_matrix(mdp, theta));
  Mat m = Mat::Identity(n, n) - mdp.gamma * p.transpose();
  return m.partialPivLu().solve((1.0 - mdp.gamma) * mdp.init_dist);
}

/// V_pi = (I - gamma P_pi)^{-1} rbar_pi.
inline Vec value_function(const TabularMdp& mdp, const Vec& theta)
{
  const Mat pi = policy_matrix(mdp, theta);
  const Index n = mdp.n_states;
  Mat m = Mat::Identity(n, n) - mdp.gamma * state_transition(mdp, pi);
  return m.partialPivLu().solve(expected_reward(mdp, pi));
}

/// F(theta) = E_{s ~ eta} V_pi(s).
inline double policy_objective(const TabularMdp& mdp, const Vec& theta)
{
  return mdp.init_dist.dot(value_function(mdp, theta));
}

struct TdSystem
{
  Mat A; // Phi' D_mu (gamma P_pi - I) Phi
  Vec b; // Phi' D_mu rbar_pi
};

inline TdSystem td_system(const TabularMdp& mdp, const Vec& theta)
{
  const Mat pi = policy_matrix(mdp, theta);
  const Mat p = state_transition(mdp, pi);
  const Vec mu = stationary_distribution(mdp, theta);
  const Mat& phi = mdp.features;
  const Mat weighted = phi.transpose() * mu.asDiagonal();
  TdSystem sys;
  sys.A = weighted * (mdp.gamma * p * phi - phi);
  sys.b = weighted * expected_reward(mdp, pi);
  return sys;
}

/// y*(theta) = -A^{-1} b.
inline Vec critic_fixed_point(const TabularMdp& mdp, const Vec& theta)
{
  const TdSystem sys = td_system(mdp, theta);
  Eigen::FullPivLU<Mat> lu(sys.A);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible())
    throw linear_solver_error("critic_fixed_point: A is singular (rank-deficient features?)");
  return -lu.solve(sys.b);
}

/// -lambda_max((A + A') / 2): the negative-definiteness margin of A at theta.
inline double td_margin(const TabularMdp& mdp, const Vec& theta)
{
  const Mat a = td_system(mdp, theta).A;
  return -symmetric_max_eigenvalue(0.5 * (a + a.transpose()));
}

/// Gaussian theta draws (scale per coordinate) used as the sample set for grid quantities.
inline std::vector<Vec> sample_thetas(const TabularMdp& mdp, int count, double scale, std::uint64_t seed)
{
  CounterRng rng(seed, 0, "theta_grid");
  std::vector<Vec> out;
  out.reserve(static_cast<std::size_t>(count) + 1);
  out.push_back(Vec::Zero(mdp.theta_dim()));
  for (int i = 0; i < count; ++i)
    out.push_back(gaussian_vector(mdp.theta_dim(), scale, rng));
  return out;
}

inline constexpr double lambda_safety_factor = 0.9;

/// 0.9 * min over the grid of the margin; throws when A fails to be negative definite.
inline double estimate_lambda(const TabularMdp& mdp, const std::vector<Vec>& thetas)
{
  if (thetas.empty())
    throw precondition_violation("estimate_lambda: empty theta set");
  double m = std::numeric_limits<double>::infinity();
  for (const Vec& t : thetas)
    m = std::min(m, td_margin(mdp, t));
  if (!(m > 0.0))
    throw domain_error("estimate_lambda: A is not negative definite on the theta grid");
  return lambda_safety_factor * m;
}

struct CriticState
{
  Vec y;
  double R_y = std::numeric_limits<double>::infinity();
};

/// Radial projection onto the ball of radius r.
inline Vec project_ball(Vec y, double r)
{
  const double n = y.norm();
  if (n > r)
    y *= r / n;
  return y;
}

struct Transition
{
  Index s = 0;
  Index a = 0;
  Index s_next = 0;
  double r = 0.0;
};

/// s ~ state_dist, a ~ pi(.|s), s' ~ P(.|s, a).
inline Transition sample_transition(const TabularMdp& mdp, const Mat& pi, const Vec& state_dist, CounterRng& rng)
{
  Transition t;
  t.s = static_cast<Index>(rng.categorical({state_dist.data(), static_cast<std::size_t>(state_dist.size())}));
  const Vec pa = pi.row(t.s).transpose();
  t.a = static_cast<Index>(rng.categorical({pa.data(), static_cast<std::size_t>(pa.size())}));
  const Vec ps = mdp.transition[t.a].row(t.s).transpose();
  t.s_next = static_cast<Index>(rng.categorical({ps.data(), static_cast<std::size_t>(ps.size())}));
  t.r = mdp.reward[t.a](t.s, t.s_next);
  return t;
}

/// delta = r + gamma phi(s')'y - phi(s)'y.
inline double td_error(const TabularMdp& mdp, const Transition& t, const Vec& y)
{
  return t.r + mdp.gamma * mdp.features.row(t.s_next).dot(y) - mdp.features.row(t.s).dot(y);
}

/// y <- Proj_{R_y}(y + beta delta phi(s)).
inline CriticState td_critic_step(const TabularMdp& mdp, const CriticState& critic, const Transition& t, double beta)
{
  const double delta = td_error(mdp, t, critic.y);
  CriticState next = critic;
  next.y = project_ball(critic.y + beta * delta * mdp.features.row(t.s).transpose(), critic.R_y);
  return next;
}

/// grad log pi(a|s): e_{s,a} - pi(.|s) on the block of state s.
inline Vec score_function(const TabularMdp& mdp, const Mat& pi, Index s, Index a)
{
  Vec psi = Vec::Zero(mdp.theta_dim());
  psi.segment(s * mdp.n_actions, mdp.n_actions) = -pi.row(s).transpose();
  psi(s * mdp.n_actions + a) += 1.0;
  return psi;
}

/// theta + alpha delta(xi', y) psi(s', a').
inline Vec actor_step(const TabularMdp& mdp, const Vec& theta, const Vec& critic_y, const Transition& t, double alpha)
{
  const Mat pi = policy_matrix(mdp, theta);
  return theta + alpha * td_error(mdp, t, critic_y) * score_function(mdp, pi, t.s, t.a);
}

/**
 * grad F(theta) = 1/(1 - gamma) E_{s ~ d, a ~ pi, s' ~ P}[(r + gamma V(s') - V(s)) psi(s, a)]
 * by enumeration.
 */
inline Vec exact_policy_gradient(const TabularMdp& mdp, const Vec& theta)
{
  const Mat pi = policy_matrix(mdp, theta);
  const Vec v = value_function(mdp, theta);
  const Vec d = discounted_visitation(mdp, theta);
  Vec grad = Vec::Zero(mdp.theta_dim());
  for (Index s = 0; s < mdp.n_states; ++s)
    for (Index a = 0; a < mdp.n_actions; ++a)
    {
      double adv = 0.0;
      for (Index sn = 0; sn < mdp.n_states; ++sn)
        adv += mdp.transition[a](s, sn) * (mdp.reward[a](s, sn) + mdp.gamma * v(sn));
      adv -= v(s);
      grad += d(s) * pi(s, a) * adv * score_function(mdp, pi, s, a);
    }
  return grad / (1.0 - mdp.gamma);
}

/// sqrt(E_{s ~ mu} |V(s) - phi(s)'y*|^2) at one theta.
inline double critic_approximation_error(const TabularMdp& mdp, const Vec& theta)
{
  const Vec gap = value_function(mdp, theta) - mdp.features * critic_fixed_point(mdp, theta);
  return std::sqrt(stationary_distribution(mdp, theta).dot(gap.cwiseAbs2()));
}

/// Max of the approximation error over the given thetas; a lower estimate of the max over all theta.
inline double epsilon_app(const TabularMdp& mdp, const std::vector<Vec>& thetas)
{
  if (thetas.empty())
    throw precondition_violation("epsilon_app: empty theta set");
  double m = 0.0;
  for (const Vec& t : thetas)
    m = std::max(m, critic_approximation_error(mdp, t));
  return m;
}

struct MdpGeneratorParams
{
  Index n_states = 5;
  Index n_actions = 2;
  double gamma = 0.9;
  double reward_max = 1.0;
};

/// Dirichlet(1) transition rows, rewards uniform on [0, reward_max], uniform init, identity features.
inline TabularMdp generate_random_mdp(const MdpGeneratorParams& g, std::uint64_t seed)
{
  if (g.n_states < 1 || g.n_actions < 1)
    throw domain_error("generate_random_mdp: sizes must be positive");
  CounterRng rng(seed, 0, "mdp");
  TabularMdp mdp;
  mdp.n_states = g.n_states;
  mdp.n_actions = g.n_actions;
  mdp.gamma = g.gamma;
  for (Index a = 0; a < g.n_actions; ++a)
  {
    Mat p(g.n_states, g.n_states);
    for (Index s = 0; s < g.n_states; ++s)
    {
      for (Index sn = 0; sn < g.n_states; ++sn)
        p(s, sn) = -std::log(1.0 - rng.uniform());
      p.row(s) /= p.row(s).sum();
    }
    mdp.transition.push_back(std::move(p));
    Mat r(g.n_states, g.n_states);
    for (Index s = 0; s < g.n_states; ++s)
      for (Index sn = 0; sn < g.n_states; ++sn)
        r(s, sn) = g.reward_max * rng.uniform();
    mdp.reward.push_back(std::move(r));
  }
  mdp.init_dist = Vec::Constant(g.n_states, 1.0 / static_cast<double>(g.n_states));
  mdp.features = Mat::Identity(g.n_states, g.n_states);
  validate(mdp);
  return mdp;
}

struct ActorCriticConfig
{
  std::int64_t horizon_K = 1;
  double alpha_scale = 1.0; // alpha = alpha_scale / sqrt(K)
  double beta_scale = 1.0;  // beta = beta_scale / sqrt(K)
  /// Margin lambda; non-positive means estimate it on a sampled theta grid.
  double lambda = 0.0;
  int lambda_grid_size = 64;
  double lambda_grid_scale = 1.0;
  std::uint64_t seed = 0;
  std::uint64_t run_index = 0;
  Vec theta0; // empty means zero
  Vec y0;     // empty means zero
  bool keep_iterates = false;
};

inline void validate(const ActorCriticConfig& cfg)
{
  if (cfg.horizon_K < 1)
    throw precondition_violation("horizon_K must be at least 1");
  if (!(cfg.alpha_scale > 0.0) || !(cfg.beta_scale > 0.0))
    throw precondition_violation("actor and critic stepsize scales must be positive");
  if (cfg.lambda <= 0.0 && cfg.lambda_grid_size < 0)
    throw precondition_violation("lambda_grid_size must be non-negative");
}

/// R_y = r_max / lambda with lambda taken from the config or the grid estimate.
inline double critic_radius(const TabularMdp& mdp, const ActorCriticConfig& cfg)
{
  double lambda = cfg.lambda;
  if (!(lambda > 0.0))
    lambda = estimate_lambda(mdp, sample_thetas(mdp, cfg.lambda_grid_size, cfg.lambda_grid_scale, cfg.seed));
  return mdp.r_max() / lambda;
}

/**
 * Alternating actor-critic with i.i.d. sampling from the exact measures:
 * one projected TD step on xi_k ~ mu_theta x pi x P ("critic_transition"),
 * then one actor step on an independent xi'_k ~ d_theta x pi x P
 * ("actor_transition") evaluated with the updated critic.
 *
 * Records use xi for actor samples and phi for critic samples, 2K in total.
 * The lyapunov column is not defined here and stays NaN.
 */
inline Trajectory run_actor_critic(const TabularMdp& mdp, const ActorCriticConfig& cfg)
{
  validate(mdp);
  validate(cfg);
  const double sqrt_k = std::sqrt(static_cast<double>(cfg.horizon_K));
  const double alpha = cfg.alpha_scale / sqrt_k;
  const double beta = cfg.beta_scale / sqrt_k;

  Vec theta = detail::initial_or_zero(cfg.theta0, mdp.theta_dim(), "theta0");
  CriticState critic{detail::initial_or_zero(cfg.y0, mdp.feature_dim(), "y0"), critic_radius(mdp, cfg)};
  if (critic.y.norm() > critic.R_y)
    throw precondition_violation("initial critic lies outside the projection ball");

  CounterRng critic_rng(cfg.seed, cfg.run_index, "critic_transition");
  CounterRng actor_rng(cfg.seed, cfg.run_index, "actor_transition");

  Trajectory traj;
  traj.records.reserve(static_cast<std::size_t>(cfg.horizon_K) + 1);
  auto record = [&](std::int64_t k, std::int64_t samples) {
    IterationRecord r;
    r.k = k;
    r.alpha_k = alpha;
    r.beta_k = beta;
    r.xi_samples = samples;
    r.phi_samples = samples;
    const bool finite = all_finite(theta) && all_finite(critic.y);
    if (finite)
    {
      r.grad_F_norm_sq = exact_policy_gradient(mdp, theta).squaredNorm();
      r.lower_err_sq = (critic.y - critic_fixed_point(mdp, theta)).squaredNorm();
    }
    traj.records.push_back(r);
    if (cfg.keep_iterates)
    {
      traj.xs.push_back(theta);
      traj.ys.push_back(critic.y);
    }
    auto& s = traj.summary;
    s.final_x = theta;
    s.final_y = critic.y;
    s.iterations = k;
    s.total_xi_samples = samples;
    s.total_phi_samples = samples;
    s.final_grad_F_norm_sq = r.grad_F_norm_sq;
    s.final_lower_err_sq = r.lower_err_sq;
    if (!finite)
    {
      s.aborted = true;
      s.abort_reason = "non-finite iterate at k=" + std::to_string(k);
    }
    return finite;
  };

  for (std::int64_t k = 0; k < cfg.horizon_K; ++k)
  {
    if (!record(k, k))
      return traj;
    const Mat pi = policy_matrix(mdp, theta);
    const Vec mu = stationary_distribution(mdp, theta);
    const Vec d = discounted_visitation(mdp, theta);
    const Transition xi = sample_transition(mdp, pi, mu, critic_rng);
    critic = td_critic_step(mdp, critic, xi, beta);
    const Transition xi_actor = sample_transition(mdp, pi, d, actor_rng);
    theta += alpha * td_error(mdp, xi_actor, critic.y) * score_function(mdp, pi, xi_actor.s, xi_actor.a);
  }
  record(cfg.horizon_K, cfg.horizon_K);

  const auto& rec = traj.records;
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < rec.size(); ++i)
    acc += rec[i].grad_F_norm_sq;
  traj.summary.mean_grad_F_norm_sq = acc / static_cast<double>(rec.size() - 1);
  return traj;
}

} // namespace alset

#endif
