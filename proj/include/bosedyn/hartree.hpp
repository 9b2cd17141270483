#pragma once

#include <vector>

#include "bosedyn/interaction.hpp"
#include "bosedyn/pdm.hpp"
#include "bosedyn/spectral.hpp"

namespace bose {

double hartree_energy(const Field& phi, const TrapSpec& trap, const InteractionSpec& v, double g);

struct HartreeResult {
  Field minimizer;
  double energy = 0.0;
  double mu_H = 0.0;
  double g_coupling = 0.0;
  double residual = 0.0;
  double dt_imag = 0.0;  // initial step 0.5 / e_max
  int iterations = 0;
};

struct HartreeOptions {
  int max_iterations = 200000;
  int max_halvings = 40;
  const Field* initial = nullptr;
};

HartreeResult minimize_hartree(const Grid& grid, const TrapSpec& trap, const InteractionSpec& v,
                               double g, double grad_tol, const HartreeOptions& opt = {});

struct PropagationOptions {
  int save_every = 1;
  bool trap_on = false;  // dynamics are trap-free unless asked
  TrapSpec trap;
  double norm_drift_tol = 1e-8;  // per unit time
};

struct FieldTrajectory {
  std::vector<double> times;
  std::vector<Field> frames;
};

FieldTrajectory propagate_hartree(const Field& phi0, const InteractionSpec& v, double dt,
                                  double t_end, const PropagationOptions& opt = {});

struct MatrixTrajectory {
  Grid grid;
  std::vector<double> times;
  std::vector<cmat> frames;
};

// i d omega/dt = [-Delta + N^{-1} v * rho_omega, omega] with omega in the orthonormal grid basis.
MatrixTrajectory propagate_onebody_hartree(const Grid& grid, const cmat& omega0,
                                           const InteractionSpec& v, double dt, double t_end,
                                           const PropagationOptions& opt = {});

std::vector<double> fourier_l1_trajectory(const FieldTrajectory& traj);

// Least-squares slope of log(values) against times.
double log_growth_rate(const std::vector<double>& times, const std::vector<double>& values);

}  // namespace bose
