#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bosedyn/grid.hpp"
#include "bosedyn/interaction.hpp"

namespace bose {

inline constexpr int kSchemaVersion = 1;

enum class RunMode { hfb_run, closeness_sweep, thermal_build, fock_verify, heat_kernel_check };

const char* mode_name(RunMode m);

struct ThermalSection {
  double N_total = 20.0;
  std::optional<double> lambda_over_tc;
  std::optional<double> temperature;
  bool mu_total_rule = true;  // false: solve for the excited count (lambda/t_c)^alpha N
};

struct IntegratorSection {
  double dt = 1e-3;
  double t_end = 1.0;
  int frames = 10;
  std::string representation = "both";  // dense, modes or both
  int M_cap = 4;                          // thermal modes kept, 0 for all
  bool vacuum_completion = true;
  bool compare = false;                   // also write the closeness comparison columns
};

struct ToleranceSection {
  double conservation = 1e-6;
  double positivity = 1e-8;
  double equivalence = 1e-6;
  double thermal_total = 1e-6;
  double weyl = 1e-8;
  double bogoliubov = 1e-9;
  double wick = 1e-8;
  double generator = 1e-10;
  double slope = 0.1;
  double zero_ratio = 1e-12;
};

struct SweepSection {
  std::vector<double> N_values;
  double c_hat = 0.0;
};

struct FockSection {
  double weyl_phi = 0.3;
  int weyl_n_max = 16;
  double gamma = 0.25;
  int bogoliubov_n_max = 20;
  double condensate_phi = 0.3;
  int wick_samples = 4;
  int generator_m = 2;
  int generator_n_max = 6;
  int generator_seeds = 5;
  double generator_scale = 0.3;
  std::optional<int> cutoff = 9;
};

struct HeatKernelSection {
  std::vector<double> s_values{1.0, 1.5, 2.0};
  std::vector<double> t_values{0.5, 1.0, 2.0};
};

struct ExperimentConfig {
  RunMode mode = RunMode::hfb_run;
  std::uint64_t seed = 0;
  std::optional<std::string> output_dir;
  Grid grid{1, 32, 8.0};
  TrapSpec trap{2.0, 1.0};
  InteractionSpec interaction;
  bool interaction_N_set = false;  // N_scale given explicitly; otherwise N_total
  ThermalSection thermal;
  IntegratorSection integrator;
  ToleranceSection tol;
  SweepSection sweep;
  FockSection fock;
  HeatKernelSection heat_kernel;
  nlohmann::json source;  // the document as parsed

  std::string hash() const;  // FNV-1a of the canonical (sorted-key) dump
};

// Schema validation: unknown keys, wrong types and out-of-range values raise ConfigError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

struct RunManifest {
  std::string config_hash;
  std::string code_version;
  std::string mode;
  std::string started;
  std::string finished;
  std::string status = "incomplete";  // incomplete, ok, invariant_violation, config_error
  int exit_code = 0;
  std::vector<std::string> files;
  std::vector<std::string> warnings;
  std::string failure;

  nlohmann::json to_json() const;
};

struct RunResult {
  int exit_code = 0;
  RunManifest manifest;
  nlohmann::json summary;
  std::string output_dir;
};

// Output directory: explicit argument, else BOSEDYN_OUTPUT_DIR, else the config's output_dir,
// else "bosedyn_out".
std::string resolve_output_dir(const std::optional<std::string>& cli, const ExperimentConfig* cfg);

// Executes the configured pipeline and writes CSV, summary.json and manifest.json.
// Never throws for pipeline errors; they map to the exit code and the manifest.
RunResult run(const ExperimentConfig& cfg, const std::string& output_dir);
// Closeness experiment per N (overrides sweep.N_values when non-empty), sweep.csv with
// N,T_c,ratio_gamma_max,ratio_phi_max,slope_flag and the fitted slopes in summary.json.
RunResult sweep(const ExperimentConfig& tmpl, const std::vector<double>& N_values,
                const std::string& output_dir);
// Same as run() with the mode forced to fock_verify.
RunResult verify_fock(const ExperimentConfig& cfg, const std::string& output_dir);

// Config file path to exit code, with the manifest written even for unreadable configs.
int run_config_file(const std::string& path, const std::string& command,
                    const std::optional<std::string>& output_dir,
                    const std::vector<double>& N_values = {});

const char* code_version();

}  // namespace bose
