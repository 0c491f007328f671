#include <iostream>

#include "CLI11.hpp"
#include "pfode/cli.hpp"

using namespace pfode::cli;

int main(int argc, char** argv) {
  CLI::App app{"PF-ODE sampling lab: adaptive solvers and Wasserstein-bounded schedules on analytic oracles"};
  app.require_subcommand(1);
  Options opts;
  std::uint64_t seed = 0;

  auto common = [&](CLI::App* sub, bool needs_config) {
    auto* c = sub->add_option("--config", opts.config, "experiment config (JSON)");
    if (needs_config) c->required();
    sub->add_option("--out", opts.out, "output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "RNG seed (overrides the config)");
  };

  auto* schedule = app.add_subcommand("schedule", "build an adaptive timestep schedule");
  common(schedule, true);

  auto* sample = app.add_subcommand("sample", "integrate trajectories over a schedule");
  common(sample, true);
  sample->add_option("--schedule", opts.schedule, "schedule JSON, or edm-grid:N")->required();

  auto* verify = app.add_subcommand("verify", "run an invariant battery");
  common(verify, true);
  verify->add_option("--suite", opts.suite, "curvature | stepbound | totalbound | proxy | resample")->required();

  auto* analyze = app.add_subcommand("analyze", "emit plot-ready CSV");
  common(analyze, true);
  analyze->add_option("--what", opts.what, "curvature_vs_sigma | eta_profile | convergence")->required();
  analyze->add_option("--schedule", opts.schedule, "schedule JSON, or edm-grid:N (eta_profile)");

  auto* presets = app.add_subcommand("presets", "list mixture presets; with --out, write them as JSON");
  presets->add_option("--out", opts.out, "directory for preset JSON files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  for (auto* sub : app.get_subcommands())
    if (const auto* o = sub->get_option_no_throw("--seed"); o && o->count() > 0) opts.seed = seed;

  int (*cmd)(const Options&, std::ostream&) = nullptr;
  if (schedule->parsed()) cmd = cmd_schedule;
  else if (sample->parsed()) cmd = cmd_sample;
  else if (verify->parsed()) cmd = cmd_verify;
  else if (analyze->parsed()) cmd = cmd_analyze;
  else cmd = cmd_presets;
  return guarded(cmd, opts, std::cout, std::cerr);
}
