#include <cmath>

#include <gtest/gtest.h>

#include "alset/actor_critic.hpp"

using namespace alset;

namespace
{

TabularMdp make_mdp(std::vector<Mat> p, std::vector<Mat> r, double gamma, Mat features = Mat())
{
  TabularMdp m;
  m.n_states = p.front().rows();
  m.n_actions = static_cast<Index>(p.size());
  m.transition = std::move(p);
  m.reward = std::move(r);
  m.gamma = gamma;
  m.init_dist = Vec::Constant(m.n_states, 1.0 / static_cast<double>(m.n_states));
  m.features = features.size() ? features : Mat::Identity(m.n_states, m.n_states);
  validate(m);
  return m;
}

TabularMdp random_mdp(std::uint64_t seed, Index ns = 5, Index na = 2, double gamma = 0.9)
{
  MdpGeneratorParams g;
  g.n_states = ns;
  g.n_actions = na;
  g.gamma = gamma;
  return generate_random_mdp(g, seed);
}

Vec random_theta(const TabularMdp& mdp, std::uint64_t seed, double scale = 1.0)
{
  CounterRng r(seed, 0, "theta");
  return gaussian_vector(mdp.theta_dim(), scale, r);
}

Vec fd_gradient(const TabularMdp& mdp, const Vec& theta, double h = 1e-5)
{
  Vec g(theta.size());
  for (Index i = 0; i < theta.size(); ++i)
  {
    Vec a = theta, b = theta;
    a(i) += h;
    b(i) -= h;
    g(i) = (policy_objective(mdp, a) - policy_objective(mdp, b)) / (2 * h);
  }
  return g;
}

} // namespace

// --- MDP model -----------------------------------------------------------------

TEST(TabularMdp, ValidationCatchesBadInputs)
{
  auto m = random_mdp(1);
  m.transition[0](0, 0) += 0.1;
  EXPECT_THROW(validate(m), domain_error);
  m = random_mdp(1);
  m.gamma = 1.0;
  EXPECT_THROW(validate(m), domain_error);
  m = random_mdp(1);
  m.features *= 2.0;
  EXPECT_THROW(validate(m), domain_error);
}

TEST(StationaryDistribution, SymmetricTwoStateChain)
{
  const Mat p = Mat::Constant(2, 2, 0.5);
  const auto m = make_mdp({p, p}, {Mat::Zero(2, 2), Mat::Ones(2, 2)}, 0.5);
  for (std::uint64_t s : {1, 2, 3})
  {
    const Vec mu = stationary_distribution(m, random_theta(m, s, 3.0));
    EXPECT_NEAR(mu(0), 0.5, 1e-14);
    EXPECT_NEAR(mu(1), 0.5, 1e-14);
  }
}

TEST(StationaryDistribution, SatisfiesDefiningEquation)
{
  for (std::uint64_t seed = 1; seed <= 5; ++seed)
  {
    const auto m = random_mdp(seed);
    const Vec theta = random_theta(m, seed);
    const Vec mu = stationary_distribution(m, theta);
    const Mat p = state_transition(m, policy_matrix(m, theta));
    EXPECT_LE((p.transpose() * mu - mu).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(mu.sum(), 1.0, 1e-12);
    EXPECT_GE(mu.minCoeff(), 0.0);
  }
}

TEST(StationaryDistribution, MatchesRolloutFrequencies)
{
  const auto m = random_mdp(7);
  const Vec theta = random_theta(m, 7);
  const Mat pi = policy_matrix(m, theta);
  const Vec mu = stationary_distribution(m, theta);
  CounterRng rng(7, 0, "rollout");
  const int batches = 100, per_batch = 10000;
  Mat freq = Mat::Zero(m.n_states, batches);
  Index s = 0;
  for (int b = 0; b < batches; ++b)
    for (int i = 0; i < per_batch; ++i)
    {
      const Vec pa = pi.row(s).transpose();
      const auto a = static_cast<Index>(rng.categorical({pa.data(), static_cast<std::size_t>(pa.size())}));
      const Vec ps = m.transition[a].row(s).transpose();
      s = static_cast<Index>(rng.categorical({ps.data(), static_cast<std::size_t>(ps.size())}));
      freq(s, b) += 1.0 / per_batch;
    }
  // batch means absorb the chain's autocorrelation
  for (Index i = 0; i < m.n_states; ++i)
  {
    const double mean = freq.row(i).mean();
    const double var = (freq.row(i).array() - mean).square().sum() / (batches - 1);
    EXPECT_NEAR(mean, mu(i), 3 * std::sqrt(var / batches));
  }
}

TEST(StationaryDistribution, ReducibleChainIsRejected)
{
  const Mat p = Mat::Identity(2, 2);
  const auto m = make_mdp({p}, {Mat::Zero(2, 2)}, 0.5);
  EXPECT_THROW(stationary_distribution(m, Vec::Zero(2)), domain_error);
}

TEST(DiscountedVisitation, ZeroDiscountIsInitialDistribution)
{
  auto m = random_mdp(2, 5, 2, 0.0);
  m.init_dist << 0.1, 0.2, 0.3, 0.4, 0.0;
  EXPECT_LE((discounted_visitation(m, random_theta(m, 2)) - m.init_dist).norm(), 1e-15);
}

TEST(DiscountedVisitation, NormalizedAndMatchesSeries)
{
  const auto m = random_mdp(3);
  const Vec theta = random_theta(m, 3);
  const Vec d = discounted_visitation(m, theta);
  EXPECT_NEAR(d.sum(), 1.0, 1e-12);
  const Mat p = state_transition(m, policy_matrix(m, theta));
  Vec term = m.init_dist, series = Vec::Zero(m.n_states);
  double w = 1.0;
  for (int t = 0; t <= 200; ++t)
  {
    series += (1 - m.gamma) * w * term;
    term = p.transpose() * term;
    w *= m.gamma;
  }
  EXPECT_LE((series - d).cwiseAbs().maxCoeff(), 1e-8);
}

// --- critic --------------------------------------------------------------------

TEST(CriticFixedPoint, ZeroDiscountIsExpectedReward)
{
  const auto m = random_mdp(4, 5, 2, 0.0);
  const Vec theta = random_theta(m, 4);
  EXPECT_LE((critic_fixed_point(m, theta) - expected_reward(m, policy_matrix(m, theta))).norm(), 1e-12);
}

TEST(CriticFixedPoint, IdentityFeaturesGiveValueFunction)
{
  for (std::uint64_t seed : {5, 6})
  {
    const auto m = random_mdp(seed);
    const Vec theta = random_theta(m, seed);
    EXPECT_LE((critic_fixed_point(m, theta) - value_function(m, theta)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(CriticFixedPoint, InsideProjectionBall)
{
  const auto m = random_mdp(8);
  ActorCriticConfig cfg;
  cfg.seed = 8;
  const double radius = critic_radius(m, cfg);
  for (std::uint64_t i = 0; i < 1000; ++i)
    EXPECT_LE(critic_fixed_point(m, random_theta(m, 100 + i)).norm(), radius);
}

TEST(CriticFixedPoint, SingularSystemIsRejected)
{
  Mat f = Mat::Zero(5, 2);
  f.col(0).setConstant(0.4);
  f.col(1).setConstant(0.4);
  auto m = random_mdp(9);
  m.features = f;
  EXPECT_THROW(critic_fixed_point(m, Vec::Zero(m.theta_dim())), linear_solver_error);
}

TEST(TdCriticStep, SingleStateHandStep)
{
  const auto m = make_mdp({Mat::Ones(1, 1)}, {Mat::Ones(1, 1)}, 0.5);
  const Vec theta = Vec::Zero(1);
  EXPECT_NEAR(critic_fixed_point(m, theta)(0), 2.0, 1e-14);
  EXPECT_NEAR(td_margin(m, theta), 0.5, 1e-14);
  ActorCriticConfig cfg;
  cfg.lambda = td_margin(m, theta);
  const CriticState c0{Vec::Zero(1), critic_radius(m, cfg)};
  EXPECT_DOUBLE_EQ(c0.R_y, 2.0);
  const Transition t{0, 0, 0, 1.0};
  EXPECT_DOUBLE_EQ(td_critic_step(m, c0, t, 0.5).y(0), 0.5);
}

TEST(TdCriticStep, InteriorStepIsNotProjected)
{
  const auto m = random_mdp(10);
  const CriticState c{Vec::Constant(5, 0.1), 100.0};
  const Transition t{1, 0, 3, 0.7};
  const double delta = td_error(m, t, c.y);
  Vec expected = c.y;
  expected(1) += 0.2 * delta;
  EXPECT_EQ(td_critic_step(m, c, t, 0.2).y, expected);
}

TEST(TdCriticStep, ProjectsOntoBall)
{
  const auto m = random_mdp(10);
  const CriticState c{Vec::Constant(5, 0.4), 1.0};
  const Transition t{1, 0, 3, 1.0};
  EXPECT_NEAR(td_critic_step(m, c, t, 5.0).y.norm(), 1.0, 1e-14);
}

TEST(TdCriticStep, BellmanFixedPointIsStationary)
{
  // single action, deterministic cycle 0 -> 1 -> 2 -> 0
  Mat p = Mat::Zero(3, 3);
  p(0, 1) = p(1, 2) = p(2, 0) = 1.0;
  Mat r(3, 3);
  r << 0, 1, 0, 0, 0, 2, 3, 0, 0;
  const auto m = make_mdp({p}, {r}, 0.8);
  const Vec theta = Vec::Zero(3);
  const CriticState c{critic_fixed_point(m, theta), 1e6};
  for (const Transition t : {Transition{0, 0, 1, 1.0}, Transition{1, 0, 2, 2.0}, Transition{2, 0, 0, 3.0}})
  {
    EXPECT_NEAR(td_error(m, t, c.y), 0.0, 1e-12);
    EXPECT_LE((td_critic_step(m, c, t, 0.3).y - c.y).norm(), 1e-12);
  }
}

// --- actor ---------------------------------------------------------------------

TEST(ScoreFunction, SoftmaxAlgebra)
{
  const auto m = random_mdp(11, 4, 3);
  const Vec theta = random_theta(m, 11);
  const Mat pi = policy_matrix(m, theta);
  for (Index s = 0; s < 4; ++s)
  {
    Vec weighted = Vec::Zero(m.theta_dim());
    for (Index a = 0; a < 3; ++a)
    {
      const Vec psi = score_function(m, pi, s, a);
      for (Index b = 0; b < 3; ++b)
        EXPECT_DOUBLE_EQ(psi(s * 3 + b), (a == b ? 1.0 : 0.0) - pi(s, b));
      EXPECT_EQ((psi.array() != 0.0).count() <= 3, true);
      weighted += pi(s, a) * psi;
    }
    EXPECT_LE(weighted.norm(), 1e-15);
  }
}

TEST(ActorStep, ZeroTdErrorLeavesThetaUnchanged)
{
  const auto m = make_mdp({Mat::Ones(1, 1), Mat::Ones(1, 1)}, {Mat::Ones(1, 1), Mat::Ones(1, 1)}, 0.5);
  const Vec theta = Vec::LinSpaced(2, -1, 1);
  const Vec y = Vec::Constant(1, 2.0); // V = 2 for every policy
  EXPECT_EQ(actor_step(m, theta, y, Transition{0, 1, 0, 1.0}, 0.7), theta);
}

TEST(ActorStep, MeanDirectionMatchesPolicyGradient)
{
  const auto m = random_mdp(12);
  const Vec theta = random_theta(m, 12);
  const Mat pi = policy_matrix(m, theta);
  const Vec d = discounted_visitation(m, theta);
  const Vec y = critic_fixed_point(m, theta);
  CounterRng rng(12, 0, "actor_mc");
  const int n = 100000;
  Vec sum = Vec::Zero(m.theta_dim()), sq = Vec::Zero(m.theta_dim());
  for (int i = 0; i < n; ++i)
  {
    const Vec g = actor_step(m, theta, y, sample_transition(m, pi, d, rng), 1.0) - theta;
    sum += g;
    sq += g.cwiseAbs2();
  }
  const Vec mean = sum / n;
  const Vec se = ((sq / n - mean.cwiseAbs2()) / n).cwiseSqrt();
  const Vec exact = (1 - m.gamma) * exact_policy_gradient(m, theta);
  for (Index i = 0; i < mean.size(); ++i)
    EXPECT_NEAR(mean(i), exact(i), 3 * se(i) + 1e-15);
}

// --- exact policy gradient -------------------------------------------------------

TEST(ExactPolicyGradient, ConstantRewardGivesZero)
{
  auto m = random_mdp(13);
  for (auto& r : m.reward)
    r.setConstant(0.7);
  const Vec theta = random_theta(m, 13);
  EXPECT_NEAR(policy_objective(m, theta), 0.7 / (1 - m.gamma), 1e-12);
  EXPECT_LE(exact_policy_gradient(m, theta).norm(), 1e-12);
}

TEST(ExactPolicyGradient, MatchesFiniteDifferencesWithoutDiscount)
{
  const auto m = random_mdp(14, 4, 3, 0.0);
  const Vec theta = random_theta(m, 14);
  const Vec g = exact_policy_gradient(m, theta);
  EXPECT_LE((g - fd_gradient(m, theta)).norm(), 1e-6 * g.norm());
}

TEST(ExactPolicyGradient, MatchesFiniteDifferencesTwoByTwo)
{
  for (std::uint64_t seed : {15, 16, 17})
  {
    const auto m = random_mdp(seed, 2, 2, 0.9);
    const Vec theta = random_theta(m, seed);
    const Vec g = exact_policy_gradient(m, theta);
    EXPECT_LE((g - fd_gradient(m, theta)).norm(), 1e-6 * g.norm());
  }
}

// --- approximation error ---------------------------------------------------------

TEST(EpsilonApp, IdentityFeaturesAreExact)
{
  const auto m = random_mdp(18);
  EXPECT_LE(epsilon_app(m, sample_thetas(m, 20, 1.0, 18)), 1e-8);
}

TEST(EpsilonApp, RankOneFeaturesMatchWeightedProjection)
{
  // without discounting the TD fixed point is the mu-weighted least-squares fit of V
  Mat p(2, 2);
  p << 0.3, 0.7, 0.6, 0.4;
  Mat r0(2, 2), r1(2, 2);
  r0 << 1.0, 0.0, 0.2, 0.5;
  r1 << 0.0, 0.3, 0.9, 0.1;
  Mat f(2, 1);
  f << 1.0, 0.5;
  const auto m = make_mdp({p, p}, {r0, r1}, 0.0, f);
  const Vec theta = Vec::LinSpaced(4, -0.5, 0.5);
  const Vec v = value_function(m, theta);
  const Vec mu = stationary_distribution(m, theta);
  ASSERT_GT(std::abs(v(0) - 2 * v(1)), 1e-3);
  const double c = (mu(0) * v(0) * 1.0 + mu(1) * v(1) * 0.5) / (mu(0) + mu(1) * 0.25);
  const double residual = std::sqrt(mu(0) * std::pow(v(0) - c, 2) + mu(1) * std::pow(v(1) - 0.5 * c, 2));
  const double eps = epsilon_app(m, {theta});
  EXPECT_GT(eps, 0.0);
  EXPECT_NEAR(eps, residual, 1e-12);
}

TEST(EpsilonApp, MoreFeaturesNeverHurt)
{
  auto m = random_mdp(19, 5, 2, 0.0);
  CounterRng rng(19, 0, "features");
  Mat full = gaussian_matrix(5, 4, 1.0, rng);
  full /= full.rowwise().norm().maxCoeff();
  const auto thetas = sample_thetas(m, 10, 1.0, 19);
  double previous = std::numeric_limits<double>::infinity();
  for (Index k = 1; k <= 4; ++k)
  {
    m.features = full.leftCols(k);
    const double e = epsilon_app(m, thetas);
    EXPECT_LE(e, previous + 1e-12);
    previous = e;
  }
}

// --- lambda --------------------------------------------------------------------

TEST(Lambda, EstimateIsSafetyScaledGridMinimum)
{
  const auto m = random_mdp(20);
  const auto thetas = sample_thetas(m, 16, 1.0, 20);
  double lo = std::numeric_limits<double>::infinity();
  for (const Vec& t : thetas)
    lo = std::min(lo, td_margin(m, t));
  EXPECT_DOUBLE_EQ(estimate_lambda(m, thetas), 0.9 * lo);
  EXPECT_GT(lo, 0.0);
}

// --- runner --------------------------------------------------------------------

TEST(RunActorCritic, ProjectionInvariantAndAccounting)
{
  const auto m = random_mdp(21);
  ActorCriticConfig cfg;
  cfg.horizon_K = 500;
  cfg.alpha_scale = 10;
  cfg.beta_scale = 10;
  cfg.seed = 21;
  cfg.keep_iterates = true;
  const auto t = run_actor_critic(m, cfg);
  const double radius = critic_radius(m, cfg);
  for (const Vec& y : t.ys)
    EXPECT_LE(y.norm(), radius * (1 + 1e-12));
  EXPECT_EQ(t.summary.total_xi_samples + t.summary.total_phi_samples, 2 * cfg.horizon_K);
  EXPECT_EQ(t.records.size(), 501u);
  EXPECT_TRUE(std::isnan(t.records[3].lyapunov));
}

TEST(RunActorCritic, Deterministic)
{
  const auto m = random_mdp(22);
  ActorCriticConfig cfg;
  cfg.horizon_K = 200;
  cfg.alpha_scale = 5;
  cfg.beta_scale = 5;
  cfg.seed = 3;
  const auto a = run_actor_critic(m, cfg), b = run_actor_critic(m, cfg);
  EXPECT_EQ(a.summary.final_x, b.summary.final_x);
  EXPECT_EQ(a.summary.final_y, b.summary.final_y);
  EXPECT_EQ(a.summary.mean_grad_F_norm_sq, b.summary.mean_grad_F_norm_sq);
}

TEST(RunActorCritic, ActionSymmetricMdpHasZeroGradientThroughout)
{
  auto m = random_mdp(23, 4, 1);
  m.n_actions = 2;
  m.transition.push_back(m.transition[0]);
  m.reward.push_back(m.reward[0]);
  validate(m);
  ActorCriticConfig cfg;
  cfg.horizon_K = 300;
  cfg.seed = 4;
  cfg.y0 = critic_fixed_point(m, Vec::Zero(8));
  const auto t = run_actor_critic(m, cfg);
  for (const auto& r : t.records)
    EXPECT_LE(r.grad_F_norm_sq, 1e-24);
}

TEST(RunActorCritic, InitialCriticOutsideBallIsRejected)
{
  const auto m = random_mdp(24);
  ActorCriticConfig cfg;
  cfg.y0 = Vec::Constant(5, 1e6);
  EXPECT_THROW(run_actor_critic(m, cfg), precondition_violation);
}
