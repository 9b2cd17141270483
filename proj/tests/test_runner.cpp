#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bosedyn/error.hpp"
#include "bosedyn/io.hpp"
#include "bosedyn/runner.hpp"

using namespace bose;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("bosedyn_runner_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::string> listing(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

json read_json(const fs::path& p) { return json::parse(read_file(p.string())); }

std::vector<std::string> csv_header(const fs::path& p) {
  std::istringstream in(read_file(p.string()));
  std::string line, cell;
  std::getline(in, line);
  std::vector<std::string> cols;
  std::istringstream ls(line);
  while (std::getline(ls, cell, ',')) cols.push_back(cell);
  return cols;
}

json small_sweep(double v0) {
  return {{"mode", "closeness_sweep"},
          {"grid", {{"dim", 1}, {"n", 32}, {"half_length", 8.0}}},
          {"trap", {{"s", 2.0}}},
          {"thermal", {{"N_total", 20}, {"lambda_over_tc", 0.5}}},
          {"interaction", {{"v0", v0}, {"sigma", 1.0}}},
          {"integrator", {{"dt", 0.01}, {"t_end", 0.5}, {"frames", 5}, {"M_cap", 0}}},
          {"sweep", {{"N_values", {20, 40, 80}}}}};
}

}  // namespace

TEST_CASE("thermal build balances the particle count") {
  json doc = {{"mode", "thermal_build"},
              {"grid", {{"dim", 1}, {"n", 128}, {"half_length", 20.0}}},
              {"trap", {{"s", 2.0}}},
              {"thermal", {{"N_total", 100}, {"lambda_over_tc", 0.5}}},
              {"integrator", {{"M_cap", 0}}}};
  auto dir = scratch("thermal");
  RunResult r = run(parse_config(doc), dir.string());
  CHECK(r.exit_code == 0);
  json s = read_json(dir / "summary.json");
  CHECK(s["schema_version"] == kSchemaVersion);
  CHECK(s["particle_total"].get<double>() == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(s["gamma_op_norm"].get<double>() == s["top_weight"].get<double>());
  CHECK(csv_header(dir / "modes.csv") == std::vector<std::string>{"index", "energy", "weight"});
  json m = read_json(dir / "manifest.json");
  CHECK(m["status"] == "ok");
  CHECK(m["config_hash"] == parse_config(doc).hash());
}

TEST_CASE("invalid configurations are rejected before any output") {
  auto dir = scratch("invalid");
  fs::create_directories(dir);
  const fs::path cfg = dir / "bad.json";
  std::ofstream(cfg) << R"({"mode": "thermal_build", "trap": {"s": -1.0}})";
  const fs::path out = dir / "out";
  CHECK(run_config_file(cfg.string(), "run", out.string()) == 1);
  CHECK(listing(out) == std::vector<std::string>{"manifest.json"});
  json m = read_json(out / "manifest.json");
  CHECK(m["status"] == "config_error");
  CHECK(m["exit_code"] == 1);
  CHECK(m["failure"].get<std::string>().find("trap.s") != std::string::npos);

  CHECK_THROWS_AS(parse_config(json{{"mode", "hfb_run"}, {"trap", {{"s", 0.0}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"mode", "hfb_run"}, {"trapp", json::object()}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"mode", "hfb_run"}, {"grid", {{"n", 30}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"mode", "hfb_run"}, {"grid", {{"dim", "1"}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"mode", "nope"}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"grid", json::object()}}), ConfigError);
  CHECK_THROWS_AS(parse_config(json{{"mode", "hfb_run"},
                                    {"thermal", {{"temperature", 1.0}, {"lambda_over_tc", 0.5}}}}),
                  ConfigError);

  std::ofstream(dir / "garbage.json") << "{ not json";
  CHECK(run_config_file((dir / "garbage.json").string(), "run", (dir / "g").string()) == 1);
}

TEST_CASE("a sweep needs three values of N") {
  auto dir = scratch("short");
  RunResult r = sweep(parse_config(small_sweep(1.0)), {20, 40}, dir.string());
  CHECK(r.exit_code == 1);
  CHECK(read_json(dir / "manifest.json")["status"] == "config_error");
}

TEST_CASE("non-interacting sweep has vanishing ratios") {
  auto dir = scratch("zero");
  RunResult r = sweep(parse_config(small_sweep(0.0)), {}, dir.string());
  CHECK(r.exit_code == 0);
  CHECK(csv_header(dir / "sweep.csv") ==
        std::vector<std::string>{"N", "T_c", "ratio_gamma_max", "ratio_phi_max", "slope_flag"});
  json s = read_json(dir / "summary.json");
  CHECK(s["max_ratio"].get<double>() <= 1e-12);
  CHECK(s["slope_gamma"].get<double>() == 0.0);
  CHECK(s["slope_phi"].get<double>() == 0.0);
  CHECK(s["rows"].size() == 3);
  for (double N : {20, 40, 80}) CHECK(fs::exists(dir / ("comparison_N" + format_number(N) + ".csv")));
}

TEST_CASE("fock verification reruns byte for byte") {
  json doc = {{"mode", "fock_verify"}, {"seed", 3}, {"fock", {{"generator_seeds", 2}}}};
  auto a = scratch("fock_a"), b = scratch("fock_b");
  CHECK(run(parse_config(doc), a.string()).exit_code == 0);
  CHECK(verify_fock(parse_config(doc), b.string()).exit_code == 0);
  for (const char* f : {"summary.json", "reports.csv"})
    CHECK(read_file((a / f).string()) == read_file((b / f).string()));
  json s = read_json(a / "summary.json");
  CHECK(s["reports"].size() == 8);
  for (const auto& rep : s["reports"]) CHECK(rep["passed"] == true);
}

TEST_CASE("a failed check maps to exit code 2") {
  json doc = {{"mode", "fock_verify"},
              {"fock", {{"generator_seeds", 1}}},
              {"tolerances", {{"bogoliubov", 1e-14}}}};
  auto dir = scratch("violation");
  RunResult r = run(parse_config(doc), dir.string());
  CHECK(r.exit_code == 2);
  json m = read_json(dir / "manifest.json");
  CHECK(m["status"] == "invariant_violation");
  CHECK(!m["failure"].get<std::string>().empty());
}

TEST_CASE("output directory precedence") {
  ExperimentConfig c;
  c.output_dir = "from_config";
  unsetenv("BOSEDYN_OUTPUT_DIR");
  CHECK(resolve_output_dir(std::string("cli"), &c) == "cli");
  CHECK(resolve_output_dir(std::nullopt, &c) == "from_config");
  CHECK(resolve_output_dir(std::nullopt, nullptr) == "bosedyn_out");
  setenv("BOSEDYN_OUTPUT_DIR", "from_env", 1);
  CHECK(resolve_output_dir(std::nullopt, &c) == "from_env");
  CHECK(resolve_output_dir(std::string("cli"), &c) == "cli");
  unsetenv("BOSEDYN_OUTPUT_DIR");
}

TEST_CASE("hfb run writes frames and conserves") {
  json doc = {{"mode", "hfb_run"},
              {"grid", {{"dim", 1}, {"n", 32}, {"half_length", 8.0}}},
              {"thermal", {{"N_total", 20}, {"temperature", 1.0}}},
              {"interaction", {{"v0", 1.0}, {"sigma", 1.0}}},
              {"integrator", {{"dt", 0.001}, {"t_end", 0.2}, {"frames", 2}, {"compare", true}}}};
  auto dir = scratch("hfb");
  RunResult r = run(parse_config(doc), dir.string());
  CHECK(r.exit_code == 0);
  CHECK(listing(dir) ==
        std::vector<std::string>{"comparison.csv", "frames.csv", "manifest.json", "summary.json"});
  CHECK(csv_header(dir / "frames.csv").front() == "t");
  json s = read_json(dir / "summary.json");
  CHECK(s["frames"] == 3);
  CHECK(s["number_drift_dense"].get<double>() <= 1e-6);
  CHECK(s["max_gamma_trace_distance"].get<double>() <= 1e-6);
}
