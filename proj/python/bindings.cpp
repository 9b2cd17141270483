#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bosedyn/error.hpp"
#include "bosedyn/fock.hpp"
#include "bosedyn/generator.hpp"
#include "bosedyn/runner.hpp"
#include "bosedyn/spectral.hpp"
#include "bosedyn/thermal.hpp"

namespace py = pybind11;
using namespace bose;
using nlohmann::json;

namespace {

FockCap cap_of(const std::string& s) {
  if (s == "total") return FockCap::total;
  if (s == "per_slot") return FockCap::per_slot;
  throw ConfigError("cap must be 'total' or 'per_slot'");
}

// Run entry points take JSON text; the Python layer does the dict conversion.
ExperimentConfig config_of(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(doc);
}

}  // namespace

PYBIND11_MODULE(_bosedyn, m) {
  m.doc() = "Hartree-Fock-Bogoliubov dynamics of trapped bosons";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvariantError>(m, "InvariantError", PyExc_RuntimeError);

  py::class_<Grid>(m, "Grid")
      .def(py::init<int, int, double>(), py::arg("dim"), py::arg("n"), py::arg("half_length"))
      .def_readonly("dim", &Grid::dim)
      .def_readonly("n", &Grid::n)
      .def_readonly("half_length", &Grid::half_length)
      .def_property_readonly("spacing", &Grid::spacing)
      .def_property_readonly("size", &Grid::size)
      .def("__repr__", [](const Grid& g) {
        return "Grid(dim=" + std::to_string(g.dim) + ", n=" + std::to_string(g.n) +
               ", half_length=" + std::to_string(g.half_length) + ")";
      });

  py::class_<TrapSpec>(m, "Trap")
      .def(py::init<double, double>(), py::arg("s"), py::arg("prefactor") = 1.0)
      .def_readonly("s", &TrapSpec::s)
      .def_readonly("prefactor", &TrapSpec::prefactor)
      .def("__call__", &TrapSpec::operator());

  m.def("eigenpairs",
        [](const Grid& g, const TrapSpec& trap, int count) {
          SpectralData sd = count > 0 ? lowest_eigenpairs(g, trap, count) : all_eigenpairs(g, trap);
          return py::make_tuple(sd.eigenvalues, sd.eigenfunctions, sd.boundary_warning);
        },
        py::arg("grid"), py::arg("trap"), py::arg("count") = 0,
        "Lowest eigenpairs of -Laplacian + trap (all of them for count=0): "
        "(eigenvalues, eigenfunction samples as columns, boundary warning).");

  m.def("heat_kernel_check",
        [](const Grid& g, const TrapSpec& trap, double t) {
          SpectralData sd = all_eigenpairs(g, trap);
          auto r = heat_kernel_fourier_check(g, trap, sd, t);
          py::dict d;
          d["l1_mass"] = r.l1_mass;
          d["bound"] = r.bound;
          d["min_kernel"] = r.min_kernel;
          d["truncation_estimate"] = r.truncation_estimate();
          return d;
        },
        py::arg("grid"), py::arg("trap"), py::arg("t"));

  m.def("alpha_exponent", &alpha_exponent, py::arg("s"));
  m.def("critical_temperature",
        [](const TrapSpec& trap, double N) {
          auto c = critical_temperature(trap, N);
          py::dict d;
          d["T_c"] = c.T_c;
          d["alpha"] = c.alpha;
          d["kappa"] = c.kappa;
          d["t_c"] = c.t_c;
          return d;
        },
        py::arg("trap"), py::arg("N"));
  m.def("condensate_fraction", &condensate_fraction, py::arg("lambda_scaled"), py::arg("trap"));
  m.def("semiclassical_condensate_fraction", &semiclassical_condensate_fraction, py::arg("trap"),
        py::arg("N"), py::arg("T"));

  py::class_<CheckReport>(m, "CheckReport")
      .def_readonly("name", &CheckReport::name)
      .def_readonly("max_deviation", &CheckReport::max_deviation)
      .def_readonly("tolerance", &CheckReport::tolerance)
      .def_readonly("truncation_estimate", &CheckReport::truncation_estimate)
      .def_readonly("passed", &CheckReport::passed)
      .def_readonly("detail", &CheckReport::detail)
      .def("__repr__", [](const CheckReport& r) {
        return "CheckReport(" + r.name + ", deviation=" + std::to_string(r.max_deviation) +
               (r.passed ? ", passed)" : ", FAILED)");
      });

  m.def("fock_dim", [](int modes, int n_max, const std::string& cap) {
    return FockSpace(modes, n_max, cap_of(cap)).dim();
  }, py::arg("modes"), py::arg("n_max"), py::arg("cap") = "total");

  m.def("verify_weyl_shift",
        [](const cvec& phi, int n_max, const std::string& cap, double tol) {
          FockSpace s(static_cast<int>(phi.size()), n_max, cap_of(cap));
          return verify_weyl_shift(s, build_operators(s), phi, tol);
        },
        py::arg("phi"), py::arg("n_max"), py::arg("cap") = "per_slot", py::arg("tol") = 1e-8);

  m.def("verify_bogoliubov_pdm",
        [](const cmat& gamma, const cvec& phi, int n_max, const std::string& cap, double tol) {
          FockSpace s(static_cast<int>(gamma.rows()), n_max, cap_of(cap));
          return verify_bogoliubov_pdm(s, build_operators(s), gamma, phi, tol);
        },
        py::arg("gamma"), py::arg("phi") = cvec(), py::arg("n_max") = 20,
        py::arg("cap") = "per_slot", py::arg("tol") = 1e-9);

  m.def("verify_wick",
        [](const cmat& gamma, const cvec& phi, int n_max, double tol, std::uint64_t seed) {
          FockSpace s(static_cast<int>(gamma.rows()), n_max, FockCap::per_slot);
          auto ops = build_operators(s);
          auto q = quasi_free_state(s, ops, gamma, phi);
          return verify_wick(s, ops, q.state, doubled_shift(phi.size() ? phi : cvec::Zero(gamma.rows())),
                             tol, seed);
        },
        py::arg("gamma"), py::arg("phi") = cvec(), py::arg("n_max") = 20, py::arg("tol") = 1e-8,
        py::arg("seed") = 0);

  m.def("commutator_identity",
        [](int m_, int n_max, std::uint64_t seed, double scale, std::optional<int> cutoff) {
          FockSpace s(m_, n_max);
          auto ops = build_operators(s);
          auto b = random_symplectic(m_, scale, seed);
          auto in = random_generator_input(m_, seed);
          in.cutoff = cutoff;
          auto g = assemble_generator(s, ops, b, in);
          auto r = verify_commutator_identity(g, ops);
          py::dict d;
          d["max_deviation"] = r.max_deviation;
          d["max_commutator"] = r.max_commutator;
          d["hermiticity"] = r.hermiticity;
          d["symplectic_defect"] = symplectic_defect(b);
          d["passed"] = r.passed;
          d["dim"] = s.dim();
          return d;
        },
        py::arg("m") = 2, py::arg("n_max") = 6, py::arg("seed") = 1, py::arg("scale") = 0.3,
        py::arg("cutoff") = std::optional<int>());

  m.def("validate_config", [](const std::string& text) {
    return config_of(text).hash();
  }, py::arg("config_json"), "Validate a config; returns its hash or raises ConfigError.");

  m.def("run",
        [](const std::string& text, const std::string& out) {
          ExperimentConfig c = config_of(text);
          py::gil_scoped_release release;
          return run(c, out);
        },
        py::arg("config_json"), py::arg("output_dir"));
  m.def("sweep",
        [](const std::string& text, const std::vector<double>& Ns, const std::string& out) {
          ExperimentConfig c = config_of(text);
          py::gil_scoped_release release;
          return sweep(c, Ns, out);
        },
        py::arg("config_json"), py::arg("N_values"), py::arg("output_dir"));
  m.def("verify_fock",
        [](const std::string& text, const std::string& out) {
          ExperimentConfig c = config_of(text);
          py::gil_scoped_release release;
          return verify_fock(c, out);
        },
        py::arg("config_json"), py::arg("output_dir"));

  py::class_<RunResult>(m, "RunResult")
      .def_readonly("exit_code", &RunResult::exit_code)
      .def_readonly("output_dir", &RunResult::output_dir)
      .def_property_readonly("summary_json", [](const RunResult& r) { return r.summary.dump(); })
      .def_property_readonly("manifest_json", [](const RunResult& r) { return r.manifest.to_json().dump(); });

  m.attr("schema_version") = kSchemaVersion;
  m.attr("__version__") = code_version();
}
