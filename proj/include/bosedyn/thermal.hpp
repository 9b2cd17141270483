#pragma once

#include <vector>

#include "bosedyn/spectral.hpp"

namespace bose {

struct CriticalTemperature {
  double T_c = 0.0;
  double alpha = 0.0;
  double kappa = 0.0;
  double t_c = 0.0;  // T_c / N^{1/alpha}
};

double alpha_exponent(double s);
// int_0^1 (1 - x^s)^{3/2} x^2 dx, the phase-space volume factor of {p^2 + |x|^s < 1}.
double weyl_integral(double s);
CriticalTemperature critical_temperature(const TrapSpec& trap, double N);
double condensate_fraction(double lambda_scaled, const TrapSpec& trap);

struct MuOptions {
  double rel_tol = 1e-12;
  double occupation_cap = 1e12;  // largest allowed occupation of level 1
};

// mu with sum_{j>=1} 1/(e^{(e_j-mu)/T}-1) = target_excited (ground level excluded).
double solve_chemical_potential(const rvec& eigenvalues, double T, double target_excited,
                                const MuOptions& opt = {});
// mu with sum_{j>=0} 1/(e^{(e_j-mu)/T}-1) = N (ground level included).
double solve_chemical_potential_total(const rvec& eigenvalues, double T, double N);

double bose_weight(double e, double mu, double T);

struct ThermalModel {
  TrapSpec trap;
  double N_total = 0.0;
  double temperature = 0.0;
  double lambda_scaled = 0.0;
  double alpha_exp = 0.0;
  double kappa_const = 0.0;
  double t_c_const = 0.0;
  double chemical_potential = 0.0;
};

// Temperature from lambda/t_c using the 3D formulas; mu from the total-count rule.
ThermalModel make_thermal_model(const TrapSpec& trap, double N, double lambda_over_tc,
                                const rvec& eigenvalues);

struct ThermalPDM {
  Grid grid;
  rvec weights;       // lambda_j for retained excited modes, decreasing
  rvec energies;      // e_j of retained modes
  cmat modes;         // function samples of retained modes
  double discarded_trace = 0.0;
  double temperature = 0.0;
  double mu = 0.0;

  int count() const { return static_cast<int>(weights.size()); }
  double trace() const { return weights.sum(); }
  double op_norm() const { return weights.size() ? weights.maxCoeff() : 0.0; }
};

struct PdmOptions {
  double weight_cutoff = 1e-10;  // relative to lambda_1
  int max_modes = 0;             // 0: no cap
  double discard_tol = 1e-3;     // relative to the retained trace
};

ThermalPDM build_thermal_pdm(const ThermalModel& model, const SpectralData& spec,
                             const PdmOptions& opt = {});

struct AssumptionDiagnostics {
  double op_norm = 0.0;
  double fourier_l1 = 0.0;  // upper bound sum_j lambda_j ||psi^_j||_1^2
  double h3_trace = 0.0;
};
AssumptionDiagnostics assumption_diagnostics(const ThermalPDM& pdm);

// Ideal gas at finite N from a level list (energy, degeneracy) plus a Weyl-law tail above the
// last level: returns N_0 / N.
double spectrum_condensate_fraction(const std::vector<RadialLevel>& levels, const TrapSpec& trap,
                                    double N, double T);
// Same with the semiclassical density of states kappa*alpha*E^{alpha-1} evaluated by quadrature.
double semiclassical_condensate_fraction(const TrapSpec& trap, double N, double T);

}  // namespace bose
