#pragma once

#include <vector>

#include "bosedyn/hfb.hpp"

namespace bose {

// Hermitian operator F diag(w) F^* in the orthonormal grid basis.
struct LowRankHermitian {
  cmat F;
  rvec w;

  static LowRankHermitian of(const ModeState& s);     // gamma of the modes
  static LowRankHermitian of(const ThermalPDM& pdm);  // sum lambda_j |psi_j><psi_j|
  static LowRankHermitian of_phi(const cvec& phi);    // |phi><phi|
  LowRankHermitian minus(const LowRankHermitian& o) const;
  LowRankHermitian plus(const LowRankHermitian& o) const;
  cmat dense() const;
};

// Exact trace norm; QR of the factor then a small eigenproblem, dense above rank n.
double trace_norm(const LowRankHermitian& h, long dense_limit = 4096);
double trace_norm(const cmat& hermitian);

double trace_distance(const DensePDM& a, const DensePDM& b);
double trace_distance(const ModeState& a, const ModeState& b);
double trace_distance(const ModeState& a, const DensePDM& b);
double trace_distance(const ModeState& a, const ThermalPDM& b);

// ||alpha||_{L2} without materializing alpha.
double alpha_hs_norm(const ModeState& s);
double alpha_hs_norm(const DensePDM& d);

// sup_{x,y} |gamma(x,y)|: exact for dense, an upper bound from factor sup norms for modes.
double sup_kernel(const DensePDM& d);
double sup_kernel_bound(const ModeState& s);
double sup_kernel_bound(const ThermalPDM& pdm);

// (2pi)^{-d} sum_j w_j ||f^_j||_1^2 >= (2pi)^{-d} int int |gamma^(p,q)|, which bounds sup |gamma(x,y)|.
// Invariant under free evolution.
double fourier_kernel_bound(const ModeState& s);
double fourier_kernel_bound(const DensePDM& d);  // exact (2pi)^{-d} int int |gamma^|

// Smallest eigenvalue of ((gamma, alpha), (conj alpha, 1 + conj gamma)).
double positivity_margin(const DensePDM& d);

struct Normalizers {
  double N = 0.0;
  double T_c = 0.0;
  double s = 0.0;
};

struct ComparisonReport {
  std::vector<double> times;
  std::vector<double> gamma_trace_dist;  // ||gamma_t - gamma_t^F||_1
  std::vector<double> phi_l2_dist;       // ||phi_t - phi_t^H||
  std::vector<double> alpha_hs;
  std::vector<double> omega_trace_dist;  // optional, empty when not computed
  std::vector<double> sup_kernel;        // bound for mode runs
  std::vector<double> fourier_bound;
  std::vector<double> positivity;        // optional, dense runs only
  Normalizers norm;

  void validate() const;  // lengths and signs
};

// ratio(t) = d(t) / (scale * t * exp(c t)) maximized over t > 0.
double max_closeness_ratio(const std::vector<double>& times, const std::vector<double>& dist,
                           double scale, double c_hat);

struct ClosenessRow {
  double N = 0.0;
  double T_c = 0.0;
  double ratio_gamma = 0.0;
  double ratio_phi = 0.0;
};

ClosenessRow closeness_row(const ComparisonReport& rep, double c_hat);

struct ClosenessFit {
  double slope_gamma = 0.0;
  double slope_phi = 0.0;
};

// Least-squares slopes of log ratio against log N; needs three rows or more. A column at or
// below zero_floor everywhere (roundoff of a non-interacting run) has slope 0.
ClosenessFit closeness_fit(const std::vector<ClosenessRow>& rows, double zero_floor = 0.0);

// sup kernel over T_c^{3/2}, frame by frame.
std::vector<double> diluteness_trajectory(const ComparisonReport& rep);

struct CompareOptions {
  double dt = 1e-3;
  double t_end = 1.0;
  int every = 100;        // steps between frames
  bool omega = false;     // also run the one-body Hartree flow (dense, small grids)
  ModeStepOptions mode;
};

// Propagate HFB and the two references (free conjugation of gamma_0, Hartree for phi_0) and
// collect the comparison columns at common frames.
ComparisonReport compare_dynamics(const ModeState& s0, const Normalizers& norm,
                                  const CompareOptions& opt);
ComparisonReport compare_dynamics(const DenseState& s0, const Normalizers& norm,
                                  const CompareOptions& opt);

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace bose
