#include "bosedyn/runner.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <map>
#include <set>

#include "bosedyn/diagnostics.hpp"
#include "bosedyn/error.hpp"
#include "bosedyn/fock.hpp"
#include "bosedyn/generator.hpp"
#include "bosedyn/hartree.hpp"
#include "bosedyn/io.hpp"
#include "bosedyn/thermal.hpp"

#ifndef BOSEDYN_VERSION
#define BOSEDYN_VERSION "0.0.0"
#endif

namespace bose {

using nlohmann::json;

const char* code_version() { return BOSEDYN_VERSION; }

const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::hfb_run: return "hfb_run";
    case RunMode::closeness_sweep: return "closeness_sweep";
    case RunMode::thermal_build: return "thermal_build";
    case RunMode::fock_verify: return "fock_verify";
    case RunMode::heat_kernel_check: return "heat_kernel_check";
  }
  return "unknown";
}

// ---------------------------------------------------------------- config parsing

namespace {

void check_keys(const json& o, const std::string& where, const std::set<std::string>& keys) {
  if (!o.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = o.begin(); it != o.end(); ++it)
    if (!keys.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

double number(const json& o, const char* key, const std::string& where, double def) {
  if (!o.contains(key)) return def;
  const json& v = o.at(key);
  if (!v.is_number()) throw ConfigError(where + "." + key + " must be a number");
  double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where + "." + key + " must be finite");
  return x;
}

long integer(const json& o, const char* key, const std::string& where, long def) {
  if (!o.contains(key)) return def;
  const json& v = o.at(key);
  if (!v.is_number_integer()) throw ConfigError(where + "." + key + " must be an integer");
  return v.get<long>();
}

bool boolean(const json& o, const char* key, const std::string& where, bool def) {
  if (!o.contains(key)) return def;
  const json& v = o.at(key);
  if (!v.is_boolean()) throw ConfigError(where + "." + key + " must be true or false");
  return v.get<bool>();
}

std::string string(const json& o, const char* key, const std::string& where, const std::string& def) {
  if (!o.contains(key)) return def;
  const json& v = o.at(key);
  if (!v.is_string()) throw ConfigError(where + "." + key + " must be a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& o, const char* key, const std::string& where,
                            std::vector<double> def) {
  if (!o.contains(key)) return def;
  const json& v = o.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(where + "." + key + " must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

void positive(double x, const std::string& what) {
  if (!(x > 0.0)) throw ConfigError(what + " must be positive");
}

const json& section(const json& doc, const char* key) {
  static const json empty = json::object();
  return doc.contains(key) ? doc.at(key) : empty;
}

RunMode parse_mode(const std::string& s) {
  static const std::map<std::string, RunMode> m = {
      {"hfb_run", RunMode::hfb_run},
      {"closeness_sweep", RunMode::closeness_sweep},
      {"thermal_build", RunMode::thermal_build},
      {"fock_verify", RunMode::fock_verify},
      {"heat_kernel_check", RunMode::heat_kernel_check}};
  auto it = m.find(s);
  if (it == m.end()) throw ConfigError("unknown mode '" + s + "'");
  return it->second;
}

}  // namespace

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(source.dump())); }

ExperimentConfig parse_config(const json& doc) {
  check_keys(doc, "config",
             {"mode", "seed", "output_dir", "grid", "trap", "interaction", "thermal", "integrator",
              "tolerances", "sweep", "fock", "heat_kernel"});
  ExperimentConfig c;
  c.source = doc;
  if (!doc.contains("mode")) throw ConfigError("config.mode is required");
  c.mode = parse_mode(string(doc, "mode", "config", ""));
  const long seed = integer(doc, "seed", "config", 0);
  if (seed < 0) throw ConfigError("config.seed must be nonnegative");
  c.seed = static_cast<std::uint64_t>(seed);
  if (doc.contains("output_dir")) c.output_dir = string(doc, "output_dir", "config", "");

  const json& g = section(doc, "grid");
  check_keys(g, "grid", {"dim", "n", "half_length"});
  const long dim = integer(g, "dim", "grid", 1);
  const long n = integer(g, "n", "grid", 32);
  const double L = number(g, "half_length", "grid", 8.0);
  if (dim < 1 || dim > 3) throw ConfigError("grid.dim must be 1, 2 or 3");
  if (n < 4 || (n & (n - 1)) != 0) throw ConfigError("grid.n must be a power of two >= 4");
  positive(L, "grid.half_length");
  c.grid = Grid(static_cast<int>(dim), static_cast<int>(n), L);

  const json& t = section(doc, "trap");
  check_keys(t, "trap", {"s", "prefactor"});
  const double s = number(t, "s", "trap", 2.0);
  const double pre = number(t, "prefactor", "trap", 1.0);
  positive(s, "trap.s");
  positive(pre, "trap.prefactor");
  c.trap = TrapSpec(s, pre);

  const json& th = section(doc, "thermal");
  check_keys(th, "thermal", {"N_total", "lambda_over_tc", "temperature", "mu_rule"});
  c.thermal.N_total = number(th, "N_total", "thermal", 20.0);
  positive(c.thermal.N_total, "thermal.N_total");
  if (th.contains("lambda_over_tc") && th.contains("temperature"))
    throw ConfigError("thermal: give lambda_over_tc or temperature, not both");
  if (th.contains("lambda_over_tc")) {
    c.thermal.lambda_over_tc = number(th, "lambda_over_tc", "thermal", 0.0);
    positive(*c.thermal.lambda_over_tc, "thermal.lambda_over_tc");
  } else {
    c.thermal.temperature = number(th, "temperature", "thermal", 1.0);
    positive(*c.thermal.temperature, "thermal.temperature");
  }
  const std::string rule = string(th, "mu_rule", "thermal", "total");
  if (rule != "total" && rule != "excited") throw ConfigError("thermal.mu_rule must be total or excited");
  c.thermal.mu_total_rule = rule == "total";
  if (!c.thermal.mu_total_rule && !c.thermal.lambda_over_tc)
    throw ConfigError("thermal.mu_rule = excited needs lambda_over_tc");

  const json& in = section(doc, "interaction");
  check_keys(in, "interaction", {"shape", "v0", "sigma", "N_scale"});
  if (string(in, "shape", "interaction", "gaussian") != "gaussian")
    throw ConfigError("interaction.shape must be gaussian");
  const double v0 = number(in, "v0", "interaction", 1.0);
  if (v0 < 0.0) throw ConfigError("interaction.v0 must be nonnegative");
  const double sigma = number(in, "sigma", "interaction", 1.0);
  positive(sigma, "interaction.sigma");
  c.interaction_N_set = in.contains("N_scale");
  const double Ns = number(in, "N_scale", "interaction", c.thermal.N_total);
  positive(Ns, "interaction.N_scale");
  c.interaction = InteractionSpec::gaussian(v0, sigma, Ns);

  const json& ig = section(doc, "integrator");
  check_keys(ig, "integrator",
             {"dt", "t_end", "frames", "representation", "M_cap", "vacuum_completion", "compare"});
  c.integrator.dt = number(ig, "dt", "integrator", 1e-3);
  c.integrator.t_end = number(ig, "t_end", "integrator", 1.0);
  positive(c.integrator.dt, "integrator.dt");
  positive(c.integrator.t_end, "integrator.t_end");
  if (c.integrator.dt > c.integrator.t_end) throw ConfigError("integrator.dt exceeds t_end");
  c.integrator.frames = static_cast<int>(integer(ig, "frames", "integrator", 10));
  if (c.integrator.frames < 1) throw ConfigError("integrator.frames must be >= 1");
  c.integrator.representation = string(ig, "representation", "integrator", "both");
  if (c.integrator.representation != "dense" && c.integrator.representation != "modes" &&
      c.integrator.representation != "both")
    throw ConfigError("integrator.representation must be dense, modes or both");
  c.integrator.M_cap = static_cast<int>(integer(ig, "M_cap", "integrator", 4));
  if (c.integrator.M_cap < 0) throw ConfigError("integrator.M_cap must be >= 0");
  c.integrator.vacuum_completion = boolean(ig, "vacuum_completion", "integrator", true);
  c.integrator.compare = boolean(ig, "compare", "integrator", false);

  const json& tl = section(doc, "tolerances");
  check_keys(tl, "tolerances",
             {"conservation", "positivity", "equivalence", "thermal_total", "weyl", "bogoliubov",
              "wick", "generator", "slope", "zero_ratio"});
  auto tol = [&](const char* k, double def) {
    double x = number(tl, k, "tolerances", def);
    positive(x, std::string("tolerances.") + k);
    return x;
  };
  c.tol.conservation = tol("conservation", c.tol.conservation);
  c.tol.positivity = tol("positivity", c.tol.positivity);
  c.tol.equivalence = tol("equivalence", c.tol.equivalence);
  c.tol.thermal_total = tol("thermal_total", c.tol.thermal_total);
  c.tol.weyl = tol("weyl", c.tol.weyl);
  c.tol.bogoliubov = tol("bogoliubov", c.tol.bogoliubov);
  c.tol.wick = tol("wick", c.tol.wick);
  c.tol.generator = tol("generator", c.tol.generator);
  c.tol.slope = tol("slope", c.tol.slope);
  c.tol.zero_ratio = tol("zero_ratio", c.tol.zero_ratio);

  const json& sw = section(doc, "sweep");
  check_keys(sw, "sweep", {"N_values", "c_hat"});
  c.sweep.N_values = numbers(sw, "N_values", "sweep", {});
  for (double N : c.sweep.N_values) positive(N, "sweep.N_values entries");
  c.sweep.c_hat = number(sw, "c_hat", "sweep", 0.0);
  if (c.sweep.c_hat < 0.0) throw ConfigError("sweep.c_hat must be nonnegative");

  const json& fk = section(doc, "fock");
  check_keys(fk, "fock",
             {"weyl_phi", "weyl_n_max", "gamma", "bogoliubov_n_max", "condensate_phi",
              "wick_samples", "generator_m", "generator_n_max", "generator_seeds",
              "generator_scale", "cutoff"});
  auto& f = c.fock;
  f.weyl_phi = number(fk, "weyl_phi", "fock", f.weyl_phi);
  f.weyl_n_max = static_cast<int>(integer(fk, "weyl_n_max", "fock", f.weyl_n_max));
  f.gamma = number(fk, "gamma", "fock", f.gamma);
  f.bogoliubov_n_max = static_cast<int>(integer(fk, "bogoliubov_n_max", "fock", f.bogoliubov_n_max));
  f.condensate_phi = number(fk, "condensate_phi", "fock", f.condensate_phi);
  f.wick_samples = static_cast<int>(integer(fk, "wick_samples", "fock", f.wick_samples));
  f.generator_m = static_cast<int>(integer(fk, "generator_m", "fock", f.generator_m));
  f.generator_n_max = static_cast<int>(integer(fk, "generator_n_max", "fock", f.generator_n_max));
  f.generator_seeds = static_cast<int>(integer(fk, "generator_seeds", "fock", f.generator_seeds));
  f.generator_scale = number(fk, "generator_scale", "fock", f.generator_scale);
  if (fk.contains("cutoff")) {
    if (fk.at("cutoff").is_null()) f.cutoff.reset();
    else f.cutoff = static_cast<int>(integer(fk, "cutoff", "fock", 0));
  }
  if (f.gamma < 0.0) throw ConfigError("fock.gamma must be nonnegative");
  if (f.weyl_n_max < 1 || f.bogoliubov_n_max < 1 || f.generator_n_max < 1)
    throw ConfigError("fock n_max values must be >= 1");
  if (f.wick_samples < 1 || f.generator_seeds < 1) throw ConfigError("fock sample counts must be >= 1");
  if (f.generator_m < 1 || f.generator_m > 3) throw ConfigError("fock.generator_m must be 1, 2 or 3");
  positive(f.generator_scale, "fock.generator_scale");

  const json& hk = section(doc, "heat_kernel");
  check_keys(hk, "heat_kernel", {"s_values", "t_values"});
  c.heat_kernel.s_values = numbers(hk, "s_values", "heat_kernel", c.heat_kernel.s_values);
  c.heat_kernel.t_values = numbers(hk, "t_values", "heat_kernel", c.heat_kernel.t_values);
  for (double x : c.heat_kernel.s_values) positive(x, "heat_kernel.s_values entries");
  for (double x : c.heat_kernel.t_values) positive(x, "heat_kernel.t_values entries");
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

// ---------------------------------------------------------------- manifest and outputs

json RunManifest::to_json() const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["config_hash"] = config_hash;
  j["code_version"] = code_version;
  j["mode"] = mode;
  j["started"] = started;
  j["finished"] = finished;
  j["status"] = status;
  j["exit_code"] = exit_code;
  j["files"] = files;
  j["warnings"] = warnings;
  j["failure"] = failure;
  return j;
}

std::string resolve_output_dir(const std::optional<std::string>& cli, const ExperimentConfig* cfg) {
  if (cli) return *cli;
  if (const char* env = std::getenv("BOSEDYN_OUTPUT_DIR"); env && *env) return env;
  if (cfg && cfg->output_dir) return *cfg->output_dir;
  return "bosedyn_out";
}

namespace {

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Output {
  json summary = json::object();
  std::map<std::string, std::string> files;  // name -> content, written in name order
  std::vector<std::string> warnings;
  std::vector<std::string> violations;
};

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_manifest(const std::string& dir, const RunManifest& m) {
  write_atomic(join(dir, "manifest.json"), m.to_json().dump(2) + "\n");
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// ---------------------------------------------------------------- shared instance

struct Instance {
  SpectralData spec;
  ThermalModel model;
  ThermalPDM pdm;
  cvec phi;  // orthonormal-basis coefficients
  InteractionSpec v;
  double T_c = 0.0;
  double n0 = 0.0;
};

SpectralData spectrum_for(const Grid& g, const TrapSpec& trap, std::vector<std::string>& warnings) {
  if (g.size() <= 2048) return all_eigenpairs(g, trap);
  warnings.push_back("grid above 2048 points: spectrum limited to the lowest 256 levels");
  return lowest_eigenpairs(g, trap, 256);
}

Instance build_instance(const ExperimentConfig& c, double N, int max_modes,
                        std::vector<std::string>& warnings, const SpectralData* spec = nullptr) {
  Instance in;
  in.spec = spec ? *spec : spectrum_for(c.grid, c.trap, warnings);
  const rvec& ev = in.spec.eigenvalues;
  if (c.thermal.lambda_over_tc) {
    in.model = make_thermal_model(c.trap, N, *c.thermal.lambda_over_tc, ev);
    if (!c.thermal.mu_total_rule) {
      const double excited = N * std::pow(*c.thermal.lambda_over_tc, in.model.alpha_exp);
      in.model.chemical_potential = solve_chemical_potential(ev, in.model.temperature, excited);
    }
  } else {
    auto ct = critical_temperature(c.trap, N);
    in.model.trap = c.trap;
    in.model.N_total = N;
    in.model.alpha_exp = ct.alpha;
    in.model.kappa_const = ct.kappa;
    in.model.t_c_const = ct.t_c;
    in.model.temperature = *c.thermal.temperature;
    in.model.lambda_scaled = in.model.temperature / std::pow(N, 1.0 / ct.alpha);
    in.model.chemical_potential = solve_chemical_potential_total(ev, in.model.temperature, N);
  }
  in.T_c = critical_temperature(c.trap, N).T_c;
  PdmOptions po;
  po.max_modes = max_modes;
  in.pdm = build_thermal_pdm(in.model, in.spec, po);
  in.n0 = N - in.pdm.trace() - in.pdm.discarded_trace;
  if (in.n0 < 0.0) throw InvariantError("thermal cloud exceeds the particle budget");
  in.phi = std::sqrt(in.n0 * c.grid.cell_volume()) * in.spec.eigenfunctions.col(0);
  const double Ns = c.interaction_N_set ? c.interaction.N_scale : N;
  in.v = InteractionSpec::gaussian(c.interaction.v0, c.interaction.sigma, Ns);
  return in;
}

int every_for(const IntegratorSection& ig) {
  const double steps = ig.t_end / ig.dt;
  return std::max(1, static_cast<int>(std::lround(steps / ig.frames)));
}

// ---------------------------------------------------------------- pipelines

void thermal_build(const ExperimentConfig& c, Output& out) {
  Instance in = build_instance(c, c.thermal.N_total, c.integrator.M_cap, out.warnings);
  CsvTable modes({"index", "energy", "weight"});
  for (int j = 0; j < in.pdm.count(); ++j) modes.add_row({double(j + 1), in.pdm.energies(j), in.pdm.weights(j)});
  out.files["modes.csv"] = modes.str();
  const double phi2 = in.phi.squaredNorm();
  const double total = in.pdm.trace() + phi2;
  const double N = c.thermal.N_total;
  auto diag = assumption_diagnostics(in.pdm);
  json& s = out.summary;
  s["N_total"] = N;
  s["temperature"] = in.model.temperature;
  s["chemical_potential"] = in.model.chemical_potential;
  s["T_c"] = in.T_c;
  s["alpha"] = in.model.alpha_exp;
  s["retained_modes"] = in.pdm.count();
  s["trace_gamma"] = in.pdm.trace();
  s["discarded_trace"] = in.pdm.discarded_trace;
  s["condensate_norm_sq"] = phi2;
  s["particle_total"] = total;
  s["particle_total_rel_error"] = rel(total, N);
  s["gamma_op_norm"] = in.pdm.op_norm();
  s["top_weight"] = in.pdm.count() ? in.pdm.weights(0) : 0.0;
  s["condensate_fraction"] = phi2 / N;
  if (c.thermal.lambda_over_tc) {
    s["lambda_over_tc"] = *c.thermal.lambda_over_tc;
    s["formula_condensate_fraction"] = condensate_fraction(in.model.lambda_scaled, c.trap);
  }
  s["assumption_op_norm"] = diag.op_norm;
  s["assumption_fourier_l1"] = diag.fourier_l1;
  s["assumption_h3_trace"] = diag.h3_trace;
  s["spectrum_boundary_warning"] = in.spec.boundary_warning;
  if (in.spec.boundary_warning) out.warnings.push_back("eigenfunctions carry boundary mass above 1e-6");
  if (rel(total, N) > c.tol.thermal_total)
    out.violations.push_back("tr gamma + |phi|^2 = " + format_number(total) + " differs from N by " +
                             format_number(rel(total, N)) + " (relative)");
}

void hfb_run(const ExperimentConfig& c, Output& out) {
  Instance in = build_instance(c, c.thermal.N_total, c.integrator.M_cap, out.warnings);
  const auto& ig = c.integrator;
  const int every = every_for(ig);
  const bool dense = ig.representation != "modes";
  const bool modes = ig.representation != "dense";
  if (dense && c.grid.size() > 1024) throw ConfigError("dense integrator limited to 1024 grid points");

  std::vector<double> times, nd, ed, ad, pos, nm, em, am, td;
  std::vector<DensePDM> dframes;
  StepStats dstats, mstats;
  if (dense) {
    DenseState s0 = make_dense_state(c.grid, in.phi, in.pdm, in.v);
    run_dense(s0, ig.dt, ig.t_end, every, [&](double t, const DenseState& s) {
      times.push_back(t);
      nd.push_back(particle_number(s));
      ed.push_back(hfb_energy(s).total());
      ad.push_back(alpha_hs_norm(s.pdm));
      pos.push_back(positivity_margin(s.pdm));
      if (modes) dframes.push_back(s.pdm);
    }, &dstats);
  }
  std::vector<double> mtimes;
  if (modes) {
    ModeState s0 = make_mode_state(c.grid, in.phi, in.pdm, in.v, ig.vacuum_completion);
    std::size_t k = 0;
    run_modes(s0, ig.dt, ig.t_end, every, [&](double t, const ModeState& s) {
      mtimes.push_back(t);
      nm.push_back(particle_number(s));
      em.push_back(hfb_energy(s).total());
      am.push_back(alpha_hs_norm(s));
      if (dense && k < dframes.size()) td.push_back(trace_distance(s, dframes[k]));
      ++k;
    }, {}, &mstats);
    if (!dense) times = mtimes;
  }
  if (dense && modes && (mtimes.size() != times.size() || td.size() != times.size()))
    throw InvariantError("dense and mode frames do not line up");

  std::vector<std::string> cols{"t"};
  if (dense) cols.insert(cols.end(), {"number_dense", "energy_dense", "alpha_hs_dense", "positivity_margin"});
  if (modes) cols.insert(cols.end(), {"number_modes", "energy_modes", "alpha_hs_modes"});
  if (dense && modes) cols.push_back("gamma_trace_distance");
  CsvTable frames(cols);
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<double> r{times[k]};
    if (dense) r.insert(r.end(), {nd[k], ed[k], ad[k], pos[k]});
    if (modes) r.insert(r.end(), {nm[k], em[k], am[k]});
    if (dense && modes) r.push_back(td[k]);
    frames.add_row(r);
  }
  out.files["frames.csv"] = frames.str();

  auto drift = [](const std::vector<double>& v) {
    double d = 0.0;
    for (double x : v) d = std::max(d, rel(x, v.front()));
    return d;
  };
  json& s = out.summary;
  s["N_total"] = c.thermal.N_total;
  s["temperature"] = in.model.temperature;
  s["thermal_modes"] = in.pdm.count();
  s["condensate_norm_sq"] = in.phi.squaredNorm();
  s["frames"] = times.size();
  const double tol = c.tol.conservation;
  auto conservation = [&](const char* tag, const std::vector<double>& n, const std::vector<double>& e) {
    const double dn = drift(n), de = drift(e);
    s[std::string("number_drift_") + tag] = dn;
    s[std::string("energy_drift_") + tag] = de;
    s[std::string("energy_initial_") + tag] = e.front();
    if (dn > tol) out.violations.push_back(std::string(tag) + " particle number drift " + format_number(dn));
    if (de > tol) out.violations.push_back(std::string(tag) + " energy drift " + format_number(de));
  };
  if (dense) {
    conservation("dense", nd, ed);
    const double mp = *std::min_element(pos.begin(), pos.end());
    s["min_positivity_margin"] = mp;
    s["dense_symmetry_drift"] = dstats.symmetry_drift;
    if (mp < -c.tol.positivity) out.violations.push_back("positivity margin " + format_number(mp));
  }
  if (modes) {
    conservation("modes", nm, em);
    s["mode_probe_defect"] = mstats.probe_defect;
  }
  if (dense && modes) {
    double tmax = 0.0, amax = 0.0, emax = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      tmax = std::max(tmax, td[k]);
      amax = std::max(amax, rel(am[k], ad[k]));
      emax = std::max(emax, rel(em[k], ed[k]));
    }
    s["max_gamma_trace_distance"] = tmax;
    s["max_alpha_rel_diff"] = amax;
    s["max_energy_rel_diff"] = emax;
    const double te = c.tol.equivalence;
    if (tmax > te) out.violations.push_back("dense/mode trace distance " + format_number(tmax));
    if (amax > te) out.violations.push_back("dense/mode alpha norm difference " + format_number(amax));
    if (emax > te) out.violations.push_back("dense/mode energy difference " + format_number(emax));
  }
  if (ig.compare) {
    CompareOptions co;
    co.dt = ig.dt;
    co.t_end = ig.t_end;
    co.every = every;
    Normalizers nz{c.thermal.N_total, in.T_c, c.trap.s};
    ComparisonReport rep = compare_dynamics(make_mode_state(c.grid, in.phi, in.pdm, in.v, ig.vacuum_completion), nz, co);
    CsvTable ct({"t", "gamma_trace_dist", "phi_l2_dist", "alpha_hs", "sup_kernel_bound", "positivity_margin"});
    for (std::size_t k = 0; k < rep.times.size(); ++k)
      ct.add_row({rep.times[k], rep.gamma_trace_dist[k], rep.phi_l2_dist[k], rep.alpha_hs[k],
                  rep.sup_kernel[k], std::nan("")});
    out.files["comparison.csv"] = ct.str();
    auto row = closeness_row(rep, c.sweep.c_hat);
    s["ratio_gamma_max"] = row.ratio_gamma;
    s["ratio_phi_max"] = row.ratio_phi;
  }
}

ClosenessRow closeness_member(const ExperimentConfig& c, double N, const SpectralData& spec,
                              Output& out) {
  Instance in = build_instance(c, N, c.integrator.M_cap, out.warnings, &spec);
  CompareOptions co;
  co.dt = c.integrator.dt;
  co.t_end = c.integrator.t_end;
  co.every = every_for(c.integrator);
  Normalizers nz{N, in.T_c, c.trap.s};
  ComparisonReport rep = compare_dynamics(make_mode_state(c.grid, in.phi, in.pdm, in.v), nz, co);
  rep.validate();
  CsvTable ct({"t", "gamma_trace_dist", "phi_l2_dist", "alpha_hs", "sup_kernel_bound", "positivity_margin"});
  for (std::size_t k = 0; k < rep.times.size(); ++k)
    ct.add_row({rep.times[k], rep.gamma_trace_dist[k], rep.phi_l2_dist[k], rep.alpha_hs[k],
                rep.sup_kernel[k], std::nan("")});
  out.files["comparison_N" + format_number(N) + ".csv"] = ct.str();
  return closeness_row(rep, c.sweep.c_hat);
}

void closeness_sweep(const ExperimentConfig& c, const std::vector<double>& Ns, Output& out) {
  if (Ns.size() < 3) throw ConfigError("a sweep needs at least three values of N");
  if (!c.thermal.lambda_over_tc) throw ConfigError("a sweep needs thermal.lambda_over_tc");
  const SpectralData spec = spectrum_for(c.grid, c.trap, out.warnings);
  std::vector<ClosenessRow> rows;
  const bool zero = c.interaction.v0 == 0.0;
  auto table = [&](double flag) {
    CsvTable t({"N", "T_c", "ratio_gamma_max", "ratio_phi_max", "slope_flag"});
    for (const auto& r : rows) t.add_row({r.N, r.T_c, r.ratio_gamma, r.ratio_phi, flag});
    return t.str();
  };
  json members = json::array();
  for (double N : Ns) {
    rows.push_back(closeness_member(c, N, spec, out));
    members.push_back({{"N", N}, {"T_c", rows.back().T_c}, {"ratio_gamma_max", rows.back().ratio_gamma},
                       {"ratio_phi_max", rows.back().ratio_phi}});
    out.summary["rows"] = members;
    out.files["sweep.csv"] = table(std::nan(""));  // partial until the fit
  }
  const ClosenessFit fit = closeness_fit(rows, zero ? c.tol.zero_ratio : 0.0);
  const bool flag = fit.slope_gamma <= c.tol.slope && fit.slope_phi <= c.tol.slope;
  out.files["sweep.csv"] = table(flag ? 1.0 : 0.0);
  json& s = out.summary;
  s["slope_gamma"] = fit.slope_gamma;
  s["slope_phi"] = fit.slope_phi;
  s["slope_threshold"] = c.tol.slope;
  s["slope_flag"] = flag;
  s["c_hat"] = c.sweep.c_hat;
  s["zero_interaction"] = zero;
  if (zero) {
    double mx = 0.0;
    for (const auto& r : rows) mx = std::max({mx, r.ratio_gamma, r.ratio_phi});
    s["max_ratio"] = mx;
    if (mx > c.tol.zero_ratio)
      out.violations.push_back("non-interacting ratios reach " + format_number(mx));
  }
}

json report_json(const CheckReport& r) {
  return {{"name", r.name},
          {"max_deviation", r.max_deviation},
          {"tolerance", r.tolerance},
          {"truncation_estimate", r.truncation_estimate},
          {"passed", r.passed},
          {"detail", r.detail}};
}

void fock_verify(const ExperimentConfig& c, Output& out) {
  const auto& f = c.fock;
  std::vector<CheckReport> reps;
  std::map<std::size_t, json> extra;
  {
    FockSpace s(2, 6);
    reps.push_back(verify_ccr(s, build_operators(s)));
  }
  {
    FockSpace s(1, f.weyl_n_max, FockCap::per_slot);
    reps.push_back(verify_weyl_shift(s, build_operators(s), cvec::Constant(1, f.weyl_phi), c.tol.weyl));
  }
  {
    FockSpace s(1, f.bogoliubov_n_max, FockCap::per_slot);
    auto ops = build_operators(s);
    const cmat g = cmat::Constant(1, 1, f.gamma);
    reps.push_back(verify_bogoliubov_pdm(s, ops, g, cvec(), c.tol.bogoliubov));
    const cvec phi = cvec::Constant(1, f.condensate_phi);
    reps.push_back(verify_bogoliubov_pdm(s, ops, g, phi, c.tol.weyl));
    auto q = quasi_free_state(s, ops, g, phi);
    reps.push_back(verify_wick(s, ops, q.state, doubled_shift(phi), c.tol.wick, c.seed, f.wick_samples));
  }
  FockSpace gs(f.generator_m, f.generator_n_max);
  auto gops = build_operators(gs);
  for (int k = 0; k < f.generator_seeds; ++k) {
    const std::uint64_t seed = c.seed + 1 + static_cast<std::uint64_t>(k);
    auto b = random_symplectic(f.generator_m, f.generator_scale, seed);
    auto in = random_generator_input(f.generator_m, seed);
    in.cutoff = f.cutoff;
    auto g = assemble_generator(gs, gops, b, in, c.tol.generator);
    auto cr = verify_commutator_identity(g, gops, c.tol.generator);
    CheckReport r;
    r.name = "commutator_seed_" + std::to_string(seed);
    r.max_deviation = cr.max_deviation;
    r.tolerance = cr.tolerance;
    r.passed = cr.passed && cr.hermiticity <= c.tol.generator;
    r.detail = "hermiticity " + format_number(cr.hermiticity) + ", max |[G,N]| " +
               format_number(cr.max_commutator) + ", symplectic defect " +
               format_number(symplectic_defect(b)) +
               (cr.constant_shift_exact ? ", constant shift exact" : ", constant shift NOT exact");
    extra[reps.size()] = {{"hermiticity", cr.hermiticity}, {"max_commutator", cr.max_commutator}};
    reps.push_back(r);
  }
  {
    auto b = random_symplectic(f.generator_m, f.generator_scale, c.seed);
    Eigen::HouseholderQR<cmat> qr(b.U);
    BogoliubovBlocks nb{cmat(qr.householderQ()), cmat::Zero(b.V.rows(), b.V.cols())};
    auto in = random_generator_input(f.generator_m, c.seed);
    in.phi.setZero();
    in.cutoff = f.cutoff;
    auto g = assemble_generator(gs, gops, nb, in, c.tol.generator);
    auto cr = verify_commutator_identity(g, gops, 0.0);
    CheckReport r;
    r.name = "commutator_number_conserving";
    r.max_deviation = cr.max_commutator;
    r.tolerance = 0.0;
    r.passed = cr.max_commutator == 0.0 && cr.max_deviation == 0.0;
    r.detail = "V = 0, phi = 0: [G, N] must vanish exactly";
    extra[reps.size()] = {{"hermiticity", cr.hermiticity}, {"max_commutator", cr.max_commutator}};
    reps.push_back(r);
  }
  CsvTable t({"index", "max_deviation", "tolerance", "truncation_estimate", "passed"});
  json arr = json::array();
  for (std::size_t k = 0; k < reps.size(); ++k) {
    const auto& r = reps[k];
    t.add_row({double(k), r.max_deviation, r.tolerance, r.truncation_estimate, r.passed ? 1.0 : 0.0});
    json j = report_json(r);
    if (auto it = extra.find(k); it != extra.end()) j.update(it->second);
    arr.push_back(j);
    if (!r.passed) out.violations.push_back(r.name + " deviation " + format_number(r.max_deviation));
  }
  out.files["reports.csv"] = t.str();
  out.summary["reports"] = arr;
  out.summary["seed"] = c.seed;
}

void heat_kernel_check(const ExperimentConfig& c, Output& out) {
  if (c.grid.size() > 2048) throw ConfigError("heat kernel check needs a grid of at most 2048 points");
  CsvTable t({"s", "t", "l1_mass", "bound", "ratio", "min_kernel", "truncation_estimate"});
  json arr = json::array();
  for (double s : c.heat_kernel.s_values) {
    TrapSpec trap(s, c.trap.prefactor);
    SpectralData spec = all_eigenpairs(c.grid, trap);
    for (double tt : c.heat_kernel.t_values) {
      auto r = heat_kernel_fourier_check(c.grid, trap, spec, tt);
      const double ratio = r.l1_mass / r.bound;
      t.add_row({s, tt, r.l1_mass, r.bound, ratio, r.min_kernel, r.truncation_estimate()});
      arr.push_back({{"s", s}, {"t", tt}, {"l1_mass", r.l1_mass}, {"bound", r.bound},
                     {"min_kernel", r.min_kernel}, {"truncation_estimate", r.truncation_estimate()}});
      if (ratio > 1.001)
        out.violations.push_back("L1 mass above bound at s=" + format_number(s) + ", t=" + format_number(tt));
      if (r.min_kernel < -r.truncation_estimate())
        out.violations.push_back("negative kernel beyond the truncation estimate at s=" +
                                 format_number(s) + ", t=" + format_number(tt));
    }
  }
  out.files["heat_kernel.csv"] = t.str();
  out.summary["checks"] = arr;
}

RunResult execute(const ExperimentConfig& c, const std::string& dir, const std::vector<double>& Ns,
                  bool as_sweep) {
  RunResult res;
  res.output_dir = dir;
  RunManifest& m = res.manifest;
  m.config_hash = c.hash();
  m.code_version = code_version();
  m.mode = as_sweep ? "closeness_sweep" : mode_name(c.mode);
  m.started = now_utc();
  write_manifest(dir, m);  // incomplete until overwritten

  Output out;
  try {
    if (as_sweep) {
      closeness_sweep(c, Ns.empty() ? c.sweep.N_values : Ns, out);
    } else {
      switch (c.mode) {
        case RunMode::thermal_build: thermal_build(c, out); break;
        case RunMode::hfb_run: hfb_run(c, out); break;
        case RunMode::closeness_sweep: closeness_sweep(c, c.sweep.N_values, out); break;
        case RunMode::fock_verify: fock_verify(c, out); break;
        case RunMode::heat_kernel_check: heat_kernel_check(c, out); break;
      }
    }
    if (out.violations.empty()) {
      m.status = "ok";
      m.exit_code = 0;
    } else {
      m.status = "invariant_violation";
      m.exit_code = 2;
      m.failure = out.violations.front();
    }
  } catch (const ConfigError& e) {
    m.status = "config_error";
    m.exit_code = 1;
    m.failure = e.what();
  } catch (const std::exception& e) {
    m.status = "invariant_violation";
    m.exit_code = 2;
    m.failure = e.what();
  }

  out.summary["schema_version"] = kSchemaVersion;
  out.summary["mode"] = m.mode;
  out.summary["config_hash"] = m.config_hash;
  out.summary["status"] = m.status;
  out.summary["violations"] = out.violations;
  if (!m.failure.empty()) out.summary["failure"] = m.failure;
  out.files["summary.json"] = out.summary.dump(2) + "\n";
  for (const auto& [name, content] : out.files) {
    write_atomic(join(dir, name), content);
    m.files.push_back(name);
  }
  m.warnings = out.warnings;
  m.finished = now_utc();
  write_manifest(dir, m);
  res.exit_code = m.exit_code;
  res.summary = out.summary;
  return res;
}

}  // namespace

RunResult run(const ExperimentConfig& cfg, const std::string& output_dir) {
  return execute(cfg, output_dir, {}, false);
}

RunResult sweep(const ExperimentConfig& tmpl, const std::vector<double>& N_values,
                const std::string& output_dir) {
  return execute(tmpl, output_dir, N_values, true);
}

RunResult verify_fock(const ExperimentConfig& cfg, const std::string& output_dir) {
  ExperimentConfig c = cfg;
  c.mode = RunMode::fock_verify;
  return execute(c, output_dir, {}, false);
}

int run_config_file(const std::string& path, const std::string& command,
                    const std::optional<std::string>& output_dir, const std::vector<double>& N_values) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(path);
  } catch (const std::exception& e) {
    RunManifest m;
    m.config_hash = "";
    m.code_version = code_version();
    m.mode = command;
    m.started = m.finished = now_utc();
    m.status = "config_error";
    m.exit_code = 1;
    m.failure = e.what();
    // A rejected config still names its output directory when it can be read.
    ExperimentConfig partial;
    try {
      const json doc = json::parse(read_file(path));
      if (doc.is_object() && doc.contains("output_dir") && doc.at("output_dir").is_string())
        partial.output_dir = doc.at("output_dir").get<std::string>();
    } catch (const std::exception&) {
    }
    try {
      write_manifest(resolve_output_dir(output_dir, &partial), m);
    } catch (const std::exception&) {
    }
    return 1;
  }
  const std::string dir = resolve_output_dir(output_dir, &cfg);
  try {
    if (command == "sweep") return sweep(cfg, N_values, dir).exit_code;
    if (command == "verify-fock") return verify_fock(cfg, dir).exit_code;
    return run(cfg, dir).exit_code;
  } catch (const ConfigError&) {
    return 1;  // output directory not writable
  }
}

}  // namespace bose
