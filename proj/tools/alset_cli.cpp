// alset: experiment driver (run, rate, diag, presets).

#include <string>
#include <vector>

#include <CLI11.hpp>

#include "alset/cli/commands.hpp"

int main(int argc, char** argv)
{
  using namespace alset::cli;

  CLI::App app{"Stochastic nested optimization experiments"};
  app.require_subcommand(1);

  CommandOptions opt;
  std::vector<double> kappas;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("--config", opt.config_path, "experiment JSON file");
    if (config_required)
      c->required();
    sub->add_option("--out", opt.out_dir, "output directory (overrides the config)");
    sub->add_option("--jobs", opt.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
    sub->add_option("--override", opt.overrides, "dotted KEY=VALUE applied to the config");
  };

  auto* run = app.add_subcommand("run", "one run per (K, seed), CSV + summary.json");
  add_common(run, true);
  auto* rate = app.add_subcommand("rate", "sweep and fit the log-log rate slope");
  add_common(rate, true);
  auto* diag = app.add_subcommand("diag", "bias curve, Lipschitz certificates, Lyapunov series, eps_app");
  add_common(diag, true);
  auto* presets = app.add_subcommand("presets", "print kappa preset tables");
  add_common(presets, false);
  presets->add_option("--kappa", kappas, "kappa values (used without --config)")->delimiter(',');

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError& e)
  {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_config;
  }

  if (run->parsed())
    return cmd_run(opt);
  if (rate->parsed())
    return cmd_rate(opt);
  if (diag->parsed())
    return cmd_diag(opt);
  return cmd_presets(opt, kappas);
}
