#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bosedyn/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Hartree-Fock-Bogoliubov dynamics of trapped bosons"};
  app.require_subcommand(1);
  std::string out_dir;
  app.add_option("--output-dir", out_dir, "directory for CSV, summary.json and manifest.json");

  std::string run_cfg, sweep_cfg, fock_cfg;
  std::vector<double> n_values;
  auto* run = app.add_subcommand("run", "execute the pipeline named by the config's mode");
  run->add_option("config", run_cfg)->required()->check(CLI::ExistingFile);
  auto* sweep = app.add_subcommand("sweep", "closeness sweep over N");
  sweep->add_option("config", sweep_cfg)->required()->check(CLI::ExistingFile);
  sweep->add_option("--n-values", n_values, "comma separated N values")->delimiter(',');
  auto* fock = app.add_subcommand("verify-fock", "truncated Fock space identities");
  fock->add_option("config", fock_cfg)->required()->check(CLI::ExistingFile);
  for (auto* sub : {run, sweep, fock})
    sub->add_option("--output-dir", out_dir, "directory for CSV, summary.json and manifest.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  std::optional<std::string> dir;
  if (!out_dir.empty()) dir = out_dir;
  int rc = 1;
  if (*run) rc = bose::run_config_file(run_cfg, "run", dir);
  else if (*sweep) rc = bose::run_config_file(sweep_cfg, "sweep", dir, n_values);
  else if (*fock) rc = bose::run_config_file(fock_cfg, "verify-fock", dir);
  if (rc == 1) std::cerr << "bosedyn: configuration error, see manifest.json\n";
  else if (rc == 2) std::cerr << "bosedyn: invariant violation, see manifest.json\n";
  return rc;
}
