#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "schro/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Schrodingerisation experiments"};
  app.require_subcommand(1);

  std::string run_config;
  auto* run = app.add_subcommand("run", "run one experiment");
  run->add_option("config", run_config, "config JSON")->required();

  std::string sweep_config, axis;
  std::vector<std::string> values;
  auto* sweep = app.add_subcommand("sweep", "rerun an experiment over one config field");
  sweep->add_option("config", sweep_config, "config JSON")->required();
  sweep->add_option("--axis", axis, "field name, e.g. N or physics.t")->required();
  sweep->add_option("--values", values, "comma-separated values")->required()->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : schro::cli::kExitValidation;
  }
  if (*run) return schro::cli::run_command(run_config, std::cout, std::cerr);
  return schro::cli::sweep_command(sweep_config, axis, values, std::cout, std::cerr);
}
