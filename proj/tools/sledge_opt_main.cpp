#include <CLI11.hpp>

#include "sledge/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Finite-sum optimization benchmark driver"};
  app.require_subcommand(1);

  sledge::cli::CliOptions opts;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", opts.config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--jobs", opts.jobs, "concurrent runs (default 1)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", opts.out_override, "override the output directory");
  };

  CLI::App* run = app.add_subcommand("run", "execute every algorithm x seed");
  CLI::App* sweep =
      app.add_subcommand("sweep", "grid-expand hyperparameter lists and rank them");
  CLI::App* disc = app.add_subcommand(
      "discrepancy", "estimator-vs-gradient error comparison across methods");
  CLI::App* validate =
      app.add_subcommand("validate", "check a config and print its resolved form");
  for (CLI::App* sub : {run, sweep, disc, validate}) add_common(sub);

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) return sledge::cli::cmd_run(opts);
  if (sweep->parsed()) return sledge::cli::cmd_sweep(opts);
  if (disc->parsed()) return sledge::cli::cmd_discrepancy(opts);
  return sledge::cli::cmd_validate(opts);
}
