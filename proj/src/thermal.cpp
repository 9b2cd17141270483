#include "bosedyn/thermal.hpp"

#include <cmath>

#include "bosedyn/error.hpp"

namespace bose {

double alpha_exponent(double s) {
  require(s > 0.0, "trap exponent s must be positive");
  return (6.0 + 3.0 * s) / (2.0 * s);
}

double weyl_integral(double s) {
  require(s > 0.0, "trap exponent s must be positive");
  // substitute u = x^s: (1/s) B(3/s, 5/2)
  double a = 3.0 / s, b = 2.5;
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b)) / s;
}

CriticalTemperature critical_temperature(const TrapSpec& trap, double N) {
  require(trap.s > 0.0, "trap exponent s must be positive");
  require(trap.prefactor > 0.0, "critical temperature needs a confining trap");
  require(N > 0.0, "particle number must be positive");
  CriticalTemperature out;
  out.alpha = alpha_exponent(trap.s);
  out.kappa = 2.0 * std::pow(trap.prefactor, -3.0 / trap.s) / (3.0 * kPi) * weyl_integral(trap.s);
  double c = out.kappa * out.alpha * std::tgamma(out.alpha) * std::riemann_zeta(out.alpha);
  out.t_c = 1.0 / std::pow(c, 1.0 / out.alpha);
  out.T_c = std::pow(N, 1.0 / out.alpha) * out.t_c;
  return out;
}

double condensate_fraction(double lambda_scaled, const TrapSpec& trap) {
  require(lambda_scaled >= 0.0, "lambda must be nonnegative");
  auto ct = critical_temperature(trap, 1.0);
  double g = 1.0 - std::pow(lambda_scaled / ct.t_c, ct.alpha);
  return std::max(g, 0.0);
}

double bose_weight(double e, double mu, double T) {
  if (T <= 0.0) return 0.0;
  return 1.0 / std::expm1((e - mu) / T);
}

namespace {

double excited_count(const rvec& ev, double mu, double T) {
  double s = 0.0;
  for (Eigen::Index j = ev.size() - 1; j >= 1; --j) s += bose_weight(ev[j], mu, T);
  return s;
}

double total_count(const rvec& ev, double mu, double T) {
  return excited_count(ev, mu, T) + bose_weight(ev[0], mu, T);
}

}  // namespace

double solve_chemical_potential(const rvec& ev, double T, double target, const MuOptions& opt) {
  require(T > 0.0, "temperature must be positive");
  require(target > 0.0, "target excited count must be positive");
  require(ev.size() >= 2, "need at least one excited level");
  double hi = ev[1] - T * std::log1p(1.0 / opt.occupation_cap);
  double reach = excited_count(ev, hi, T);
  if (reach < target) {
    throw ConfigError("excited count target " + std::to_string(target) +
                      " unreachable; maximum with retained modes is " + std::to_string(reach));
  }
  double lo = std::min(ev[0], ev[1]) - 50.0 * T;
  while (excited_count(ev, lo, T) > target) lo -= 50.0 * T;
  for (int it = 0; it < 400; ++it) {
    double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    double f = excited_count(ev, mid, T);
    if (std::abs(f - target) <= opt.rel_tol * target * 1e-2) return mid;
    (f < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double solve_chemical_potential_total(const rvec& ev, double T, double N) {
  require(T > 0.0, "temperature must be positive");
  require(N > 0.0, "particle number must be positive");
  // x = e_0 - mu > 0, bisected on a log scale
  double lx_lo = std::log(T) - 40.0, lx_hi = std::log(T) + 5.0;
  while (total_count(ev, ev[0] - std::exp(lx_hi), T) > N) lx_hi += 5.0;
  while (total_count(ev, ev[0] - std::exp(lx_lo), T) < N) lx_lo -= 10.0;
  for (int it = 0; it < 300; ++it) {
    double mid = 0.5 * (lx_lo + lx_hi);
    if (mid == lx_lo || mid == lx_hi) break;
    double f = total_count(ev, ev[0] - std::exp(mid), T);
    (f > N ? lx_lo : lx_hi) = mid;
  }
  return ev[0] - std::exp(0.5 * (lx_lo + lx_hi));
}

ThermalModel make_thermal_model(const TrapSpec& trap, double N, double lambda_over_tc,
                                const rvec& eigenvalues) {
  require(lambda_over_tc >= 0.0, "lambda/t_c must be nonnegative");
  auto ct = critical_temperature(trap, N);
  ThermalModel m;
  m.trap = trap;
  m.N_total = N;
  m.alpha_exp = ct.alpha;
  m.kappa_const = ct.kappa;
  m.t_c_const = ct.t_c;
  m.lambda_scaled = lambda_over_tc * ct.t_c;
  m.temperature = lambda_over_tc * ct.T_c;
  m.chemical_potential = m.temperature > 0.0
                             ? solve_chemical_potential_total(eigenvalues, m.temperature, N)
                             : eigenvalues[0];
  return m;
}

ThermalPDM build_thermal_pdm(const ThermalModel& model, const SpectralData& spec,
                             const PdmOptions& opt) {
  ThermalPDM pdm;
  pdm.grid = spec.grid;
  pdm.temperature = model.temperature;
  pdm.mu = model.chemical_potential;
  const double T = model.temperature;
  const int m = spec.count();
  if (T <= 0.0 || m < 2) {
    pdm.weights.resize(0);
    pdm.energies.resize(0);
    pdm.modes.resize(spec.grid.size(), 0);
    return pdm;
  }
  if (model.chemical_potential >= spec.eigenvalues[0])
    throw ConfigError("chemical potential must lie below the ground level");
  double top = bose_weight(spec.eigenvalues[1], pdm.mu, T);
  int keep = 0;
  for (int j = 1; j < m; ++j) {
    double wj = bose_weight(spec.eigenvalues[j], pdm.mu, T);
    if (wj < opt.weight_cutoff * top) break;
    if (opt.max_modes > 0 && keep >= opt.max_modes) break;
    ++keep;
  }
  pdm.weights.resize(keep);
  pdm.energies = spec.eigenvalues.segment(1, keep);
  pdm.modes = spec.eigenfunctions.middleCols(1, keep);
  for (int j = 0; j < keep; ++j) pdm.weights[j] = bose_weight(pdm.energies[j], pdm.mu, T);
  double discarded = 0.0;
  for (int j = m - 1; j > keep; --j) discarded += bose_weight(spec.eigenvalues[j], pdm.mu, T);
  if (!spec.complete) {
    TailFit fit = fit_growth(spec.eigenvalues);
    // integral of the Bose weight beyond the computed levels
    const int steps = 4000;
    double x0 = m, x1 = m;
    while (bose_weight(fit.c * std::pow(x1, fit.p), pdm.mu, T) > 1e-18 * top) x1 = 2.0 * x1 + 1.0;
    double h = (x1 - x0) / steps, s = 0.0;
    for (int i = 0; i <= steps; ++i) {
      double f = bose_weight(fit.c * std::pow(x0 + i * h, fit.p), pdm.mu, T);
      s += (i == 0 || i == steps) ? f : (i % 2 ? 4 * f : 2 * f);
    }
    discarded += s * h / 3.0;
  }
  pdm.discarded_trace = discarded;
  double tr = pdm.weights.sum();
  if (tr > 0.0 && discarded > opt.discard_tol * tr) {
    throw ConfigError("thermal 1-pdm: discarded trace " + std::to_string(discarded) +
                      " exceeds tolerance; retain more modes");
  }
  return pdm;
}

AssumptionDiagnostics assumption_diagnostics(const ThermalPDM& pdm) {
  AssumptionDiagnostics d;
  if (pdm.count() == 0) return d;
  const Grid& g = pdm.grid;
  const Fourier& ft = fourier_for(g);
  rvec k2 = kinetic_symbol(g);
  rvec h3 = (1.0 + k2.array()).cube().matrix();
  const double dk = g.momentum_cell();
  d.op_norm = pdm.op_norm();
  for (int j = 0; j < pdm.count(); ++j) {
    cvec fh = ft.to_momentum(pdm.modes.col(j));
    double l1 = fh.cwiseAbs().sum() * dk;
    d.fourier_l1 += pdm.weights[j] * l1 * l1;
    d.h3_trace += pdm.weights[j] * dk * h3.dot(fh.cwiseAbs2());
  }
  return d;
}

namespace {

// integral_a^b f by composite Simpson with n (even) panels
template <class F>
double simpson(F f, double a, double b, int n) {
  double h = (b - a) / n, s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

}  // namespace

double spectrum_condensate_fraction(const std::vector<RadialLevel>& levels, const TrapSpec& trap,
                                    double N, double T) {
  require(!levels.empty(), "empty level list");
  auto ct = critical_temperature(trap, N);
  const double e0 = levels.front().energy;
  const double ecut = levels.back().energy;
  auto count = [&](double mu) {
    double s = 0.0;
    for (auto it = levels.rbegin(); it != levels.rend(); ++it)
      s += it->degeneracy * bose_weight(it->energy, mu, T);
    // Weyl-law density kappa*alpha*E^{alpha-1} above the last computed level
    auto f = [&](double e) {
      return ct.kappa * ct.alpha * std::pow(e, ct.alpha - 1.0) * bose_weight(e, mu, T);
    };
    s += simpson(f, ecut, ecut + 80.0 * T, 4000);
    return s;
  };
  double lx_lo = std::log(T) - 40.0, lx_hi = std::log(T) + 5.0;
  while (count(e0 - std::exp(lx_hi)) > N) lx_hi += 5.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lx_lo + lx_hi);
    (count(e0 - std::exp(mid)) > N ? lx_lo : lx_hi) = mid;
  }
  double mu = e0 - std::exp(0.5 * (lx_lo + lx_hi));
  return levels.front().degeneracy * bose_weight(e0, mu, T) / N;
}

double semiclassical_condensate_fraction(const TrapSpec& trap, double N, double T) {
  auto ct = critical_temperature(trap, N);
  auto count = [&](double mu) {
    // E = T u; the integrand u^{alpha-1}/(e^{u - mu/T} - 1) is regular at 0 for alpha > 2
    auto f = [&](double u) {
      if (u == 0.0) return 0.0;
      return std::pow(u, ct.alpha - 1.0) / std::expm1(u - mu / T);
    };
    double excited = ct.kappa * ct.alpha * std::pow(T, ct.alpha) * simpson(f, 0.0, 80.0, 20000);
    return excited + bose_weight(0.0, mu, T);
  };
  double lx_lo = std::log(T) - 40.0, lx_hi = std::log(T) + 5.0;
  while (count(-std::exp(lx_hi)) > N) lx_hi += 5.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lx_lo + lx_hi);
    (count(-std::exp(mid)) > N ? lx_lo : lx_hi) = mid;
  }
  double mu = -std::exp(0.5 * (lx_lo + lx_hi));
  return bose_weight(0.0, mu, T) / N;
}

}  // namespace bose
