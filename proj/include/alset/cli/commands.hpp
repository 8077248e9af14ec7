#ifndef ALSET_CLI_COMMANDS_HPP
#define ALSET_CLI_COMMANDS_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "../actor_critic.hpp"
#include "../alset.hpp"
#include "../diagnostics.hpp"
#include "../parallel.hpp"
#include "config.hpp"

#ifndef ALSET_CODE_VERSION
#define ALSET_CODE_VERSION "unknown"
#endif

namespace alset::cli
{

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 1;
inline constexpr int exit_numeric = 2;

inline constexpr const char* trajectory_csv_header =
    "k,grad_F_norm_sq,lower_err_sq,lyapunov,alpha_k,beta_k,xi_samples,phi_samples";

struct CommandOptions
{
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir; // overrides the config's output when set
  unsigned jobs = 1;
};

/// 17 significant digits; NaN always as "nan".
inline std::string format_double(double v)
{
  if (std::isnan(v))
    return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw config_error("cannot write '" + path.string() + "'");
  out << trajectory_csv_header << '\n';
  for (const auto& r : traj.records)
    out << r.k << ',' << format_double(r.grad_F_norm_sq) << ',' << format_double(r.lower_err_sq) << ','
        << format_double(r.lyapunov) << ',' << format_double(r.alpha_k) << ',' << format_double(r.beta_k) << ','
        << r.xi_samples << ',' << r.phi_samples << '\n';
  out.flush();
  if (!out)
    throw config_error("failed writing '" + path.string() + "'");
}

inline json nan_to_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json summary_json(std::int64_t K, std::uint64_t seed, const TrajectorySummary& s)
{
  return json{
      {"K", K},
      {"seed", seed},
      {"run_index", K},
      {"iterations", s.iterations},
      {"aborted", s.aborted},
      {"abort_reason", s.abort_reason},
      {"mean_grad_F_norm_sq", nan_to_null(s.mean_grad_F_norm_sq)},
      {"final_grad_F_norm_sq", nan_to_null(s.final_grad_F_norm_sq)},
      {"final_lower_err_sq", nan_to_null(s.final_lower_err_sq)},
      {"total_xi_samples", s.total_xi_samples},
      {"total_phi_samples", s.total_phi_samples},
      {"final_x", from_vec(s.final_x)},
      {"final_y", from_vec(s.final_y)},
  };
}

inline void write_json(const std::filesystem::path& path, const json& j)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw config_error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out)
    throw config_error("failed writing '" + path.string() + "'");
}

/// One run of the configured algorithm. Streams are keyed by (seed, run_index = K).
inline Trajectory execute(const Experiment& ex, std::int64_t K, std::uint64_t seed, bool keep_iterates = false)
{
  if (ex.algorithm == Algorithm::actor_critic)
  {
    ActorCriticConfig cfg = ex.actor_critic;
    cfg.horizon_K = K;
    cfg.seed = seed;
    cfg.run_index = static_cast<std::uint64_t>(K);
    cfg.keep_iterates = keep_iterates;
    return run_actor_critic(*ex.mdp, cfg);
  }
  AlsetConfig cfg = ex.alset;
  cfg.horizon_K = K;
  cfg.seed = seed;
  cfg.run_index = static_cast<std::uint64_t>(K);
  cfg.keep_iterates = keep_iterates;
  switch (ex.algorithm)
  {
  case Algorithm::alset_minmax:
    return run_minmax(*ex.problem, cfg);
  case Algorithm::alset_compositional:
    return run_compositional(*ex.problem, cfg);
  case Algorithm::two_timescale:
    return run_two_timescale_baseline(*ex.problem, cfg);
  default:
    return run_bilevel(*ex.problem, cfg);
  }
}

inline Experiment load_experiment(const CommandOptions& opt)
{
  json doc = load_document(opt.config_path);
  for (const auto& o : opt.overrides)
    apply_override(doc, o);
  Experiment ex = parse_experiment(doc);
  if (!opt.out_dir.empty())
    ex.output = opt.out_dir;
  if (ex.output.empty())
    throw config_error("output: no output directory (set \"output\" or pass --out)");
  return ex;
}

inline std::filesystem::path prepare_output(const Experiment& ex)
{
  std::filesystem::path dir(ex.output);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec)
    throw config_error("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

inline std::string run_file_name(std::int64_t K, std::uint64_t seed)
{
  return "run_K" + std::to_string(K) + "_seed" + std::to_string(seed) + ".csv";
}

/// Wraps a command body with the exit-code contract.
template <class Body>
int guarded(const char* name, Body body)
{
  try
  {
    return body();
  }
  catch (const config_error& e)
  {
    std::cerr << "alset " << name << ": config error: " << e.what() << '\n';
    return exit_config;
  }
  catch (const std::exception& e)
  {
    std::cerr << "alset " << name << ": numeric failure: " << e.what() << '\n';
    return exit_numeric;
  }
}

/**
 * One run per (K, seed): run_K<K>_seed<seed>.csv plus summary.json.
 * Exit 2 when any run aborted on a non-finite iterate (its CSV is still written).
 */
inline int cmd_run(const CommandOptions& opt)
{
  return guarded("run", [&] {
    const Experiment ex = load_experiment(opt);
    const auto dir = prepare_output(ex);
    std::vector<json> rows(ex.sweep.size() * ex.seeds.size());
    std::vector<char> aborted(rows.size(), 0);
    parallel_for(rows.size(), opt.jobs, [&](std::size_t i) {
      const auto K = ex.sweep[i / ex.seeds.size()];
      const auto seed = ex.seeds[i % ex.seeds.size()];
      const Trajectory traj = execute(ex, K, seed);
      write_trajectory_csv(dir / run_file_name(K, seed), traj);
      rows[i] = summary_json(K, seed, traj.summary);
      aborted[i] = traj.summary.aborted;
    });
    json summary{{"command", "run"}, {"code_version", ALSET_CODE_VERSION}, {"config", ex.document},
                 {"runs", rows}};
    write_json(dir / "summary.json", summary);
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (aborted[i])
      {
        std::cerr << "alset run: numeric abort: " << rows[i]["abort_reason"].get<std::string>() << '\n';
        return exit_numeric;
      }
    return exit_ok;
  });
}

inline double rate_metric_value(RateMetric m, const TrajectorySummary& s)
{
  return m == RateMetric::grad_F_mean ? s.mean_grad_F_norm_sq : s.final_lower_err_sq;
}

/// Sweep, fit slope per metric, write rate.json; pass flags do not change the exit code.
inline int cmd_rate(const CommandOptions& opt)
{
  return guarded("rate", [&] {
    const Experiment ex = load_experiment(opt);
    const std::set<std::int64_t> distinct(ex.sweep.begin(), ex.sweep.end());
    if (distinct.size() < 3)
      throw config_error("sweep: rate fitting needs at least 3 distinct K values");
    const RateSpec spec = ex.rate.value_or(RateSpec{});
    const auto dir = prepare_output(ex);

    const auto runs = run_sweep(
        ex.sweep, ex.seeds, [&](std::int64_t K, std::uint64_t seed) { return execute(ex, K, seed).summary; },
        opt.jobs);
    json rows = json::array();
    for (const auto& r : runs)
      rows.push_back(summary_json(r.K, r.seed, r.summary));
    for (const auto& r : runs)
      if (r.summary.aborted)
      {
        write_json(dir / "rate.json", json{{"command", "rate"}, {"code_version", ALSET_CODE_VERSION},
                                           {"config", ex.document}, {"runs", rows}});
        std::cerr << "alset rate: numeric abort: " << r.summary.abort_reason << '\n';
        return exit_numeric;
      }

    json fits = json::array();
    bool all_pass = true;
    for (RateMetric m : spec.metrics)
    {
      const RateFit fit = fit_rate(sweep_points(runs, [m](const TrajectorySummary& s) {
        return rate_metric_value(m, s);
      }));
      const bool pass = fit.slope >= spec.slope_min && fit.slope <= spec.slope_max;
      all_pass = all_pass && pass;
      json points = json::array();
      for (const auto& [K, mean] : fit.points)
        points.push_back({{"K", K}, {"mean", mean}});
      fits.push_back({{"metric", to_string(m)},
                      {"slope", fit.slope},
                      {"intercept", fit.intercept},
                      {"r_squared", fit.r_squared},
                      {"points", points},
                      {"pass", pass}});
      std::cout << to_string(m) << " slope=" << format_double(fit.slope) << " r2=" << format_double(fit.r_squared)
                << (pass ? " pass" : " fail") << '\n';
    }
    json out{{"command", "rate"},
             {"code_version", ALSET_CODE_VERSION},
             {"config", ex.document},
             {"slope_min", nan_to_null(spec.slope_min)},
             {"slope_max", nan_to_null(spec.slope_max)},
             {"fits", fits},
             {"pass", all_pass},
             {"runs", rows}};
    write_json(dir / "rate.json", out);
    return exit_ok;
  });
}

/// Writes one CSV per configured diagnostic plus diag.json.
inline int cmd_diag(const CommandOptions& opt)
{
  return guarded("diag", [&] {
    const Experiment ex = load_experiment(opt);
    if (!ex.diag)
      throw config_error("diag: section required for the diag command");
    const DiagSpec& spec = *ex.diag;
    const bool bilevel_diag = spec.bias_curve || spec.lipschitz || spec.lyapunov;
    if (bilevel_diag && !ex.problem)
      throw config_error("diag: bias_curve, lipschitz and lyapunov need a bilevel-type problem");
    if (spec.epsilon_app && !ex.mdp)
      throw config_error("diag.epsilon_app: needs a tabular_mdp problem");
    const auto dir = prepare_output(ex);
    json report{{"command", "diag"}, {"code_version", ALSET_CODE_VERSION}, {"config", ex.document}};

    if (spec.bias_curve)
    {
      const auto& b = *spec.bias_curve;
      const BilevelProblem& p = *ex.problem;
      const Vec x = b.x.size() ? b.x : Vec::Zero(p.dim_upper);
      const Vec y = b.y.size() ? b.y : Vec::Zero(p.dim_lower);
      const Vec v = b.v.size() ? b.v : Vec::Ones(p.dim_lower);
      if (x.size() != p.dim_upper || y.size() != p.dim_lower || v.size() != p.dim_lower)
        throw config_error("diag.bias_curve: x, y or v has the wrong dimension");
      const auto curve = neumann_bias_curve(p, x, y, v, b.depths, b.draws, b.seed, b.convention);
      std::ofstream out(dir / "bias_curve.csv", std::ios::binary);
      out << "N,empirical_bias,standard_error,bound\n";
      json rows = json::array();
      for (const auto& c : curve)
      {
        out << c.N << ',' << format_double(c.empirical_bias) << ',' << format_double(c.standard_error) << ','
            << format_double(c.bound) << '\n';
        rows.push_back({{"N", c.N}, {"empirical_bias", c.empirical_bias}, {"standard_error", c.standard_error},
                        {"bound", c.bound}});
      }
      report["bias_curve"] = rows;
    }

    if (spec.lipschitz)
    {
      const auto& l = *spec.lipschitz;
      std::ofstream out(dir / "lipschitz.csv", std::ios::binary);
      out << "target,max_ratio,declared,pass\n";
      json rows = json::array();
      const std::pair<const char*, LipschitzTarget> targets[] = {{"y_star", LipschitzTarget::y_star},
                                                                 {"grad_F", LipschitzTarget::grad_F},
                                                                 {"jac_y_star", LipschitzTarget::jac_y_star}};
      for (const auto& [name, target] : targets)
      {
        const auto cert = lipschitz_certificate(*ex.problem, target, l.pairs, l.seed, l.radius);
        out << name << ',' << format_double(cert.max_ratio) << ',' << format_double(cert.declared) << ','
            << (cert.pass ? "true" : "false") << '\n';
        rows.push_back(
            {{"target", name}, {"max_ratio", cert.max_ratio}, {"declared", cert.declared}, {"pass", cert.pass}});
      }
      report["lipschitz"] = rows;
    }

    if (spec.lyapunov)
    {
      const Trajectory traj = execute(ex, ex.sweep.front(), ex.seeds.front(), true);
      const auto series = lyapunov_series(*ex.problem, traj);
      std::ofstream out(dir / "lyapunov.csv", std::ios::binary);
      out << "k,lyapunov\n";
      bool non_increasing = true;
      for (std::size_t k = 0; k < series.size(); ++k)
      {
        out << k << ',' << format_double(series[k]) << '\n';
        if (k > 0 && series[k] > series[k - 1])
          non_increasing = false;
      }
      report["lyapunov"] = {{"K", ex.sweep.front()}, {"seed", ex.seeds.front()}, {"non_increasing", non_increasing}};
      if (traj.summary.aborted)
      {
        write_json(dir / "diag.json", report);
        std::cerr << "alset diag: numeric abort: " << traj.summary.abort_reason << '\n';
        return exit_numeric;
      }
    }

    if (spec.epsilon_app)
    {
      const auto& e = *spec.epsilon_app;
      const auto thetas = sample_thetas(*ex.mdp, e.thetas, e.scale, e.seed);
      std::ofstream out(dir / "epsilon_app.csv", std::ios::binary);
      out << "theta_index,approximation_error\n";
      double worst = 0.0;
      for (std::size_t i = 0; i < thetas.size(); ++i)
      {
        const double err = critic_approximation_error(*ex.mdp, thetas[i]);
        worst = std::max(worst, err);
        out << i << ',' << format_double(err) << '\n';
      }
      // a max over sampled thetas only bounds the true max from below
      report["epsilon_app"] = {{"sampled_max_lower_estimate", worst}, {"theta_count", thetas.size()}};
    }

    write_json(dir / "diag.json", report);
    return exit_ok;
  });
}

inline std::string preset_name(Preset p)
{
  switch (p)
  {
  case Preset::bilevel_kappa:
    return "bilevel_kappa";
  case Preset::minmax_kappa:
    return "minmax_kappa";
  case Preset::compositional:
    return "compositional";
  case Preset::manual:
    break;
  }
  return "manual";
}

/// Table of preset values for plain kappa values (constants only through kappa).
inline void print_kappa_table(std::ostream& os, const std::vector<double>& kappas)
{
  os << "preset,kappa,T,alpha,eta\n";
  for (double kappa : kappas)
  {
    if (!(kappa >= 1.0))
      throw config_error("kappa values must be at least 1");
    ProblemConstants c;
    c.kappa = kappa;
    for (Preset p : {Preset::bilevel_kappa, Preset::minmax_kappa})
    {
      AlsetConfig cfg;
      cfg.preset = p;
      const AlsetConfig r = apply_preset(c, cfg);
      os << preset_name(p) << ',' << format_double(kappa) << ',' << r.inner_T << ',' << format_double(r.alpha_base)
         << ',' << format_double(r.eta) << '\n';
    }
  }
}

/// Table of preset values and resulting stepsizes for the configured problem and sweep.
inline void print_problem_table(std::ostream& os, const Experiment& ex)
{
  if (!ex.problem)
    throw config_error("presets: needs a bilevel-type problem");
  const ProblemConstants& c = ex.problem->constants;
  os << "preset,kappa,K,T,alpha,eta,alpha_k,beta_k,alpha_bar_1,alpha_bar_2\n";
  for (Preset p : {Preset::bilevel_kappa, Preset::minmax_kappa, Preset::compositional})
    for (auto K : ex.sweep)
    {
      AlsetConfig cfg = ex.alset;
      cfg.preset = p;
      cfg.horizon_K = K;
      const AlsetConfig r = apply_preset(c, cfg);
      const StepsizePair s = stepsize_schedule(c, r);
      os << preset_name(p) << ',' << format_double(c.kappa) << ',' << K << ',' << r.inner_T << ','
         << format_double(r.alpha_base) << ',' << format_double(r.eta) << ',' << format_double(s.alpha_k) << ','
         << format_double(s.beta_k) << ',' << format_double(s.alpha_bar_1) << ',' << format_double(s.alpha_bar_2)
         << '\n';
    }
}

inline int cmd_presets(const CommandOptions& opt, const std::vector<double>& kappas)
{
  return guarded("presets", [&] {
    if (opt.config_path.empty())
    {
      if (kappas.empty())
        throw config_error("presets: pass --config or --kappa");
      print_kappa_table(std::cout, kappas);
      return exit_ok;
    }
    json doc = load_document(opt.config_path);
    for (const auto& o : opt.overrides)
      apply_override(doc, o);
    print_problem_table(std::cout, parse_experiment(doc));
    return exit_ok;
  });
}

} // namespace alset::cli

#endif
