#ifndef ALSET_CLI_CONFIG_HPP
#define ALSET_CLI_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "../actor_critic.hpp"
#include "../alset.hpp"
#include "../estimators.hpp"
#include "../problem.hpp"
#include "../synthetic.hpp"

namespace alset::cli
{

using json = nlohmann::json;

/// Any problem with the experiment file: syntax, schema or a rejected value.
struct config_error : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

/**
 * Strict view of one JSON object: every key must be read exactly through
 * req/opt, and finish() rejects keys that were never read.
 */
class ObjectReader
{
public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path))
  {
    if (!j_.is_object())
      throw config_error(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T req(const std::string& key)
  {
    if (!j_.contains(key))
      throw config_error(where(key) + ": missing required field");
    return get<T>(key);
  }

  template <class T>
  T opt(const std::string& key, T fallback)
  {
    if (!j_.contains(key))
      return fallback;
    return get<T>(key);
  }

  const json& sub(const std::string& key)
  {
    if (!j_.contains(key))
      throw config_error(where(key) + ": missing required field");
    used_.insert(key);
    return j_.at(key);
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const
  {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key))
        throw config_error(where(key) + ": unknown field");
  }

private:
  template <class T>
  T get(const std::string& key)
  {
    used_.insert(key);
    try
    {
      return j_.at(key).get<T>();
    }
    catch (const json::exception& e)
    {
      throw config_error(where(key) + ": " + e.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline Vec to_vec(const json& j, const std::string& where)
{
  if (!j.is_array())
    throw config_error(where + ": expected an array of numbers");
  Vec v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
  {
    if (!j[i].is_number())
      throw config_error(where + ": expected numbers");
    v(static_cast<Index>(i)) = j[i].get<double>();
  }
  return v;
}

/// Matrix given as an array of rows.
inline Mat to_mat(const json& j, const std::string& where)
{
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw config_error(where + ": expected a non-empty array of rows");
  const std::size_t cols = j[0].size();
  Mat m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r)
  {
    if (!j[r].is_array() || j[r].size() != cols)
      throw config_error(where + ": rows must have equal length");
    m.row(static_cast<Index>(r)) = to_vec(j[r], where).transpose();
  }
  return m;
}

inline json from_vec(const Vec& v)
{
  json j = json::array();
  for (Index i = 0; i < v.size(); ++i)
    j.push_back(v(i));
  return j;
}

enum class Algorithm
{
  alset_bilevel,
  alset_minmax,
  alset_compositional,
  two_timescale,
  actor_critic,
};

inline Algorithm parse_algorithm(const std::string& s)
{
  if (s == "alset_bilevel")
    return Algorithm::alset_bilevel;
  if (s == "alset_minmax")
    return Algorithm::alset_minmax;
  if (s == "alset_compositional")
    return Algorithm::alset_compositional;
  if (s == "two_timescale")
    return Algorithm::two_timescale;
  if (s == "actor_critic")
    return Algorithm::actor_critic;
  throw config_error("algorithm: unknown value '" + s + "'");
}

enum class RateMetric
{
  grad_F_mean,     // (1/K) sum_k ||grad F(x^k)||^2
  lower_err_final, // ||y^K - y*(x^K)||^2
};

inline RateMetric parse_rate_metric(const std::string& s)
{
  if (s == "grad_F_mean")
    return RateMetric::grad_F_mean;
  if (s == "lower_err_final")
    return RateMetric::lower_err_final;
  throw config_error("rate.metrics: unknown metric '" + s + "'");
}

inline std::string to_string(RateMetric m)
{
  return m == RateMetric::grad_F_mean ? "grad_F_mean" : "lower_err_final";
}

struct RateSpec
{
  std::vector<RateMetric> metrics{RateMetric::grad_F_mean};
  double slope_min = -std::numeric_limits<double>::infinity();
  double slope_max = std::numeric_limits<double>::infinity();
};

struct BiasCurveSpec
{
  std::vector<int> depths;
  std::int64_t draws = 0;
  std::uint64_t seed = 0;
  Vec x, y, v; // empty: x, y zero and v all ones
  TruncationConvention convention = TruncationConvention::shifted;
};

struct LipschitzSpec
{
  std::int64_t pairs = 0;
  std::uint64_t seed = 0;
  double radius = 10.0;
};

struct EpsilonAppSpec
{
  int thetas = 0;
  double scale = 1.0;
  std::uint64_t seed = 0;
};

struct DiagSpec
{
  std::optional<BiasCurveSpec> bias_curve;
  std::optional<LipschitzSpec> lipschitz;
  bool lyapunov = false;
  std::optional<EpsilonAppSpec> epsilon_app;
};

struct Experiment
{
  Algorithm algorithm = Algorithm::alset_bilevel;
  std::optional<BilevelProblem> problem;
  std::optional<TabularMdp> mdp;
  AlsetConfig alset;
  ActorCriticConfig actor_critic;
  std::vector<std::int64_t> sweep;
  std::vector<std::uint64_t> seeds;
  std::string output;
  std::optional<RateSpec> rate;
  std::optional<DiagSpec> diag;
  json document; // config after overrides, echoed into summaries
};

// ---------------------------------------------------------------------------
// problem sections

inline QuadraticBilevelSpec parse_quadratic_matrices(const json& j, const std::string& path)
{
  ObjectReader r(j, path);
  QuadraticBilevelSpec s;
  s.A = to_mat(r.sub("A"), r.where("A"));
  s.B = to_mat(r.sub("B"), r.where("B"));
  s.c = to_vec(r.sub("c"), r.where("c"));
  s.P = to_mat(r.sub("P"), r.where("P"));
  s.Q = to_mat(r.sub("Q"), r.where("Q"));
  s.R = to_mat(r.sub("R"), r.where("R"));
  s.p = to_vec(r.sub("p"), r.where("p"));
  s.q = to_vec(r.sub("q"), r.where("q"));
  s.noise_sigma_grad_f = r.req<double>("noise_sigma_grad_f");
  s.noise_sigma_grad_g = r.req<double>("noise_sigma_grad_g");
  s.noise_sigma_hess = r.req<double>("noise_sigma_hess");
  s.smoothing_weight = r.opt<double>("smoothing_weight", 0.0);
  s.domain_radius = r.opt<double>("domain_radius", 10.0);
  r.finish();
  return s;
}

inline QuadraticBilevelSpec parse_quadratic_generator(const json& j, const std::string& path)
{
  ObjectReader r(j, path);
  QuadraticGeneratorParams g;
  const auto seed = r.req<std::uint64_t>("seed");
  g.dim_upper = r.req<Index>("dim_upper");
  g.dim_lower = r.req<Index>("dim_lower");
  g.mu_g = r.req<double>("mu_g");
  g.kappa = r.req<double>("kappa");
  g.cross_scale = r.req<double>("cross_scale");
  g.upper_curvature_min = r.req<double>("upper_curvature_min");
  g.upper_curvature_max = r.req<double>("upper_curvature_max");
  g.lower_weight_min = r.req<double>("lower_weight_min");
  g.lower_weight_max = r.req<double>("lower_weight_max");
  g.coupling_norm = r.req<double>("coupling_norm");
  g.offset_scale = r.req<double>("offset_scale");
  g.noise_sigma_grad_f = r.req<double>("noise_sigma_grad_f");
  g.noise_sigma_grad_g = r.req<double>("noise_sigma_grad_g");
  g.noise_sigma_hess = r.req<double>("noise_sigma_hess");
  g.smoothing_weight = r.opt<double>("smoothing_weight", 0.0);
  r.finish();
  return generate_quadratic_spec(g, seed);
}

inline MinmaxSpec parse_minmax(ObjectReader& r)
{
  if (r.has("generator"))
  {
    ObjectReader g(r.sub("generator"), r.where("generator"));
    MinmaxGeneratorParams p;
    const auto seed = g.req<std::uint64_t>("seed");
    p.dim_upper = g.req<Index>("dim_upper");
    p.dim_lower = g.req<Index>("dim_lower");
    p.mu_g = g.req<double>("mu_g");
    p.kappa = g.req<double>("kappa");
    p.coupling_scale = g.req<double>("coupling_scale");
    p.upper_curvature_min = g.req<double>("upper_curvature_min");
    p.upper_curvature_max = g.req<double>("upper_curvature_max");
    p.noise_sigma = g.req<double>("noise_sigma");
    g.finish();
    return generate_minmax_spec(p, seed);
  }
  ObjectReader m(r.sub("matrices"), r.where("matrices"));
  MinmaxSpec s;
  s.P = to_mat(m.sub("P"), m.where("P"));
  s.Q = to_mat(m.sub("Q"), m.where("Q"));
  s.R = to_mat(m.sub("R"), m.where("R"));
  s.noise_sigma = m.req<double>("noise_sigma");
  s.domain_radius = m.opt<double>("domain_radius", 10.0);
  m.finish();
  return s;
}

inline CompositionalSpec parse_compositional(ObjectReader& r)
{
  if (r.has("generator"))
  {
    ObjectReader g(r.sub("generator"), r.where("generator"));
    CompositionalGeneratorParams p;
    const auto seed = g.req<std::uint64_t>("seed");
    p.dim_upper = g.req<Index>("dim_upper");
    p.dim_lower = g.req<Index>("dim_lower");
    p.inner_sv_min = g.req<double>("inner_sv_min");
    p.inner_sv_max = g.req<double>("inner_sv_max");
    p.outer_curvature_min = g.req<double>("outer_curvature_min");
    p.outer_curvature_max = g.req<double>("outer_curvature_max");
    p.offset_scale = g.req<double>("offset_scale");
    p.noise_sigma_h = g.req<double>("noise_sigma_h");
    p.noise_sigma_jac = g.req<double>("noise_sigma_jac");
    p.noise_sigma_f = g.req<double>("noise_sigma_f");
    g.finish();
    return generate_compositional_spec(p, seed);
  }
  ObjectReader m(r.sub("matrices"), r.where("matrices"));
  CompositionalSpec s;
  s.W = to_mat(m.sub("W"), m.where("W"));
  s.w = to_vec(m.sub("w"), m.where("w"));
  s.M = to_mat(m.sub("M"), m.where("M"));
  s.m = to_vec(m.sub("m"), m.where("m"));
  s.noise_sigma_h = m.req<double>("noise_sigma_h");
  s.noise_sigma_jac = m.req<double>("noise_sigma_jac");
  s.noise_sigma_f = m.req<double>("noise_sigma_f");
  s.domain_radius = m.opt<double>("domain_radius", 10.0);
  m.finish();
  return s;
}

inline TabularMdp parse_mdp(ObjectReader& r)
{
  if (r.has("generator"))
  {
    ObjectReader g(r.sub("generator"), r.where("generator"));
    MdpGeneratorParams p;
    const auto seed = g.req<std::uint64_t>("seed");
    p.n_states = g.req<Index>("n_states");
    p.n_actions = g.req<Index>("n_actions");
    p.gamma = g.req<double>("gamma");
    p.reward_max = g.req<double>("reward_max");
    g.finish();
    return generate_random_mdp(p, seed);
  }
  ObjectReader m(r.sub("explicit"), r.where("explicit"));
  TabularMdp mdp;
  const json& trans = m.sub("transition");
  const json& rew = m.sub("reward");
  if (!trans.is_array() || !rew.is_array() || trans.size() != rew.size() || trans.empty())
    throw config_error(m.where("transition") + ": one transition and reward matrix per action");
  for (std::size_t a = 0; a < trans.size(); ++a)
  {
    mdp.transition.push_back(to_mat(trans[a], m.where("transition")));
    mdp.reward.push_back(to_mat(rew[a], m.where("reward")));
  }
  mdp.n_actions = static_cast<Index>(trans.size());
  mdp.n_states = mdp.transition[0].rows();
  mdp.gamma = m.req<double>("gamma");
  mdp.init_dist = to_vec(m.sub("init_dist"), m.where("init_dist"));
  const json& f = m.sub("features");
  if (f.is_string() && f.get<std::string>() == "identity")
    mdp.features = Mat::Identity(mdp.n_states, mdp.n_states);
  else
    mdp.features = to_mat(f, m.where("features"));
  m.finish();
  return mdp;
}

inline void parse_problem(const json& j, Experiment& ex)
{
  ObjectReader r(j, "problem");
  const auto type = r.req<std::string>("type");
  if (type == "quadratic_bilevel")
  {
    QuadraticBilevelSpec spec;
    const int modes = r.has("generator") + r.has("matrices") + r.has("canned_kappa");
    if (modes != 1)
      throw config_error("problem: give exactly one of generator, matrices, canned_kappa");
    if (r.has("generator"))
      spec = parse_quadratic_generator(r.sub("generator"), r.where("generator"));
    else if (r.has("matrices"))
      spec = parse_quadratic_matrices(r.sub("matrices"), r.where("matrices"));
    else
      spec = canned_quadratic_spec(r.req<int>("canned_kappa"));
    r.finish();
    ex.problem = make_quadratic_bilevel(spec);
  }
  else if (type == "minmax_quadratic")
  {
    if (r.has("generator") == r.has("matrices"))
      throw config_error("problem: give exactly one of generator, matrices");
    MinmaxSpec spec = parse_minmax(r);
    r.finish();
    ex.problem = make_minmax_quadratic(spec);
  }
  else if (type == "compositional")
  {
    if (r.has("generator") == r.has("matrices"))
      throw config_error("problem: give exactly one of generator, matrices");
    CompositionalSpec spec = parse_compositional(r);
    r.finish();
    ex.problem = make_compositional(spec);
  }
  else if (type == "tabular_mdp")
  {
    if (r.has("generator") == r.has("explicit"))
      throw config_error("problem: give exactly one of generator, explicit");
    TabularMdp mdp = parse_mdp(r);
    r.finish();
    validate(mdp);
    ex.mdp = std::move(mdp);
  }
  else
    throw config_error("problem.type: unknown value '" + type + "'");
}

// ---------------------------------------------------------------------------
// algorithm sections

inline Preset parse_preset(const std::string& s)
{
  if (s == "manual")
    return Preset::manual;
  if (s == "bilevel_kappa")
    return Preset::bilevel_kappa;
  if (s == "minmax_kappa")
    return Preset::minmax_kappa;
  if (s == "compositional")
    return Preset::compositional;
  throw config_error("alset.preset: unknown value '" + s + "'");
}

inline void parse_alset(const json& j, AlsetConfig& cfg)
{
  ObjectReader r(j, "alset");
  cfg.preset = parse_preset(r.req<std::string>("preset"));
  const auto mode = r.req<std::string>("stepsize_mode");
  if (mode == "schedule")
    cfg.stepsize_mode = StepsizeMode::schedule;
  else if (mode == "fixed")
    cfg.stepsize_mode = StepsizeMode::fixed;
  else
    throw config_error("alset.stepsize_mode: expected schedule or fixed");
  cfg.inner_T = r.opt<int>("inner_T", cfg.inner_T);
  cfg.alpha_base = r.opt<double>("alpha_base", cfg.alpha_base);
  cfg.beta_base = r.opt<double>("beta_base", cfg.beta_base);
  cfg.eta = r.opt<double>("eta", cfg.eta);
  cfg.preset_scale = r.opt<double>("preset_scale", cfg.preset_scale);
  cfg.alpha_fixed = r.opt<double>("alpha_fixed", cfg.alpha_fixed);
  cfg.beta_fixed = r.opt<double>("beta_fixed", cfg.beta_fixed);
  const auto ratio = r.opt<std::string>("ratio_form", "rho_g");
  if (ratio == "rho_g")
    cfg.ratio_form = StepRatioForm::rho_g;
  else if (ratio == "mu_g")
    cfg.ratio_form = StepRatioForm::mu_g;
  else
    throw config_error("alset.ratio_form: expected rho_g or mu_g");
  if (r.has("x0"))
    cfg.x0 = to_vec(r.sub("x0"), "alset.x0");
  if (r.has("y0"))
    cfg.y0 = to_vec(r.sub("y0"), "alset.y0");
  if (r.has("neumann"))
  {
    ObjectReader n(r.sub("neumann"), "alset.neumann");
    cfg.neumann.depth_N = n.opt<int>("depth_N", cfg.neumann.depth_N);
    cfg.auto_depth = n.opt<bool>("auto_depth", cfg.auto_depth);
    cfg.neumann.exact_inverse_mode = n.opt<bool>("exact_inverse_mode", cfg.neumann.exact_inverse_mode);
    const auto conv = n.opt<std::string>("convention", "shifted");
    if (conv == "shifted")
      cfg.neumann.convention = TruncationConvention::shifted;
    else if (conv == "literal")
      cfg.neumann.convention = TruncationConvention::literal;
    else
      throw config_error("alset.neumann.convention: expected shifted or literal");
    n.finish();
  }
  r.finish();
}

inline void parse_actor_critic(const json& j, ActorCriticConfig& cfg)
{
  ObjectReader r(j, "actor_critic");
  cfg.alpha_scale = r.req<double>("alpha_scale");
  cfg.beta_scale = r.req<double>("beta_scale");
  cfg.lambda = r.opt<double>("lambda", cfg.lambda);
  cfg.lambda_grid_size = r.opt<int>("lambda_grid_size", cfg.lambda_grid_size);
  cfg.lambda_grid_scale = r.opt<double>("lambda_grid_scale", cfg.lambda_grid_scale);
  if (r.has("theta0"))
    cfg.theta0 = to_vec(r.sub("theta0"), "actor_critic.theta0");
  if (r.has("y0"))
    cfg.y0 = to_vec(r.sub("y0"), "actor_critic.y0");
  r.finish();
}

inline void parse_rate(const json& j, RateSpec& spec)
{
  ObjectReader r(j, "rate");
  if (r.has("metrics"))
  {
    spec.metrics.clear();
    for (const auto& m : r.req<std::vector<std::string>>("metrics"))
      spec.metrics.push_back(parse_rate_metric(m));
    if (spec.metrics.empty())
      throw config_error("rate.metrics: must not be empty");
  }
  spec.slope_min = r.opt<double>("slope_min", spec.slope_min);
  spec.slope_max = r.opt<double>("slope_max", spec.slope_max);
  r.finish();
}

inline void parse_diag(const json& j, DiagSpec& spec)
{
  ObjectReader r(j, "diag");
  if (r.has("bias_curve"))
  {
    ObjectReader b(r.sub("bias_curve"), "diag.bias_curve");
    BiasCurveSpec s;
    s.depths = b.req<std::vector<int>>("depths");
    s.draws = b.req<std::int64_t>("draws");
    s.seed = b.req<std::uint64_t>("seed");
    if (b.has("x"))
      s.x = to_vec(b.sub("x"), "diag.bias_curve.x");
    if (b.has("y"))
      s.y = to_vec(b.sub("y"), "diag.bias_curve.y");
    if (b.has("v"))
      s.v = to_vec(b.sub("v"), "diag.bias_curve.v");
    const auto conv = b.opt<std::string>("convention", "shifted");
    if (conv != "shifted" && conv != "literal")
      throw config_error("diag.bias_curve.convention: expected shifted or literal");
    s.convention = conv == "shifted" ? TruncationConvention::shifted : TruncationConvention::literal;
    b.finish();
    if (s.depths.empty() || s.draws < 2)
      throw config_error("diag.bias_curve: needs depths and at least 2 draws");
    spec.bias_curve = s;
  }
  if (r.has("lipschitz"))
  {
    ObjectReader l(r.sub("lipschitz"), "diag.lipschitz");
    LipschitzSpec s;
    s.pairs = l.req<std::int64_t>("pairs");
    s.seed = l.req<std::uint64_t>("seed");
    s.radius = l.opt<double>("radius", s.radius);
    l.finish();
    if (s.pairs < 1 || !(s.radius > 0.0))
      throw config_error("diag.lipschitz: needs pairs >= 1 and radius > 0");
    spec.lipschitz = s;
  }
  spec.lyapunov = r.opt<bool>("lyapunov", false);
  if (r.has("epsilon_app"))
  {
    ObjectReader e(r.sub("epsilon_app"), "diag.epsilon_app");
    EpsilonAppSpec s;
    s.thetas = e.req<int>("thetas");
    s.scale = e.req<double>("scale");
    s.seed = e.req<std::uint64_t>("seed");
    e.finish();
    if (s.thetas < 0)
      throw config_error("diag.epsilon_app.thetas: must be non-negative");
    spec.epsilon_app = s;
  }
  r.finish();
}

// ---------------------------------------------------------------------------
// overrides and top level

/**
 * Applies KEY=VALUE with a dotted KEY. VALUE is parsed as JSON when it
 * parses, otherwise stored as a string. Missing objects are created.
 */
inline void apply_override(json& doc, const std::string& assignment)
{
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw config_error("override '" + assignment + "': expected KEY=VALUE");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded())
    value = text;
  json* node = &doc;
  std::size_t start = 0;
  for (;;)
  {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty())
      throw config_error("override '" + assignment + "': empty path segment");
    if (!node->is_object())
      throw config_error("override '" + assignment + "': '" + part + "' is not inside an object");
    if (dot == std::string::npos)
    {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null())
      *node = json::object();
    start = dot + 1;
  }
}

inline json load_document(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw config_error("cannot open config file '" + path + "'");
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded())
    throw config_error("config file '" + path + "' is not valid JSON");
  return doc;
}

/// Builds and validates an experiment; any failure is a config_error.
inline Experiment parse_experiment(const json& doc)
{
  Experiment ex;
  ex.document = doc;
  try
  {
    ObjectReader r(doc, "");
    ex.algorithm = parse_algorithm(r.req<std::string>("algorithm"));
    parse_problem(r.sub("problem"), ex);
    if (r.has("alset"))
      parse_alset(r.sub("alset"), ex.alset);
    if (r.has("actor_critic"))
      parse_actor_critic(r.sub("actor_critic"), ex.actor_critic);
    ex.sweep = r.req<std::vector<std::int64_t>>("sweep");
    ex.seeds = r.req<std::vector<std::uint64_t>>("seeds");
    ex.output = r.opt<std::string>("output", "");
    if (r.has("rate"))
    {
      ex.rate.emplace();
      parse_rate(r.sub("rate"), *ex.rate);
    }
    if (r.has("diag"))
    {
      ex.diag.emplace();
      parse_diag(r.sub("diag"), *ex.diag);
    }
    r.finish();

    if (ex.sweep.empty())
      throw config_error("sweep: must list at least one K");
    for (auto k : ex.sweep)
      if (k < 1)
        throw config_error("sweep: every K must be at least 1");
    if (ex.seeds.empty())
      throw config_error("seeds: must list at least one seed");

    const bool is_ac = ex.algorithm == Algorithm::actor_critic;
    if (is_ac != ex.mdp.has_value())
      throw config_error("algorithm actor_critic goes with problem type tabular_mdp, and only with it");
    if (is_ac)
    {
      if (!doc.contains("actor_critic"))
        throw config_error("actor_critic: section required for this algorithm");
      ActorCriticConfig probe = ex.actor_critic;
      probe.horizon_K = ex.sweep.front();
      validate(probe);
    }
    else
    {
      if (!doc.contains("alset"))
        throw config_error("alset: section required for this algorithm");
      if (ex.algorithm == Algorithm::alset_minmax && ex.problem->kind != ProblemKind::minmax)
        throw config_error("alset_minmax needs a minmax_quadratic problem");
      if (ex.algorithm == Algorithm::alset_compositional && ex.problem->kind != ProblemKind::compositional)
        throw config_error("alset_compositional needs a compositional problem");
      AlsetConfig probe = ex.alset;
      probe.horizon_K = ex.sweep.front();
      if (ex.algorithm == Algorithm::two_timescale)
        probe.preset = Preset::manual;
      probe = resolve_config(ex.problem->constants, probe);
      if (probe.x0.size() != 0 && probe.x0.size() != ex.problem->dim_upper)
        throw config_error("alset.x0: wrong dimension");
      if (probe.y0.size() != 0 && probe.y0.size() != ex.problem->dim_lower)
        throw config_error("alset.y0: wrong dimension");
    }
  }
  catch (const config_error&)
  {
    throw;
  }
  catch (const std::exception& e)
  {
    throw config_error(e.what());
  }
  return ex;
}

} // namespace alset::cli

#endif
