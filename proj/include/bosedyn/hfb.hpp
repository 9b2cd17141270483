#pragma once

#include <functional>
#include <optional>

#include "bosedyn/interaction.hpp"
#include "bosedyn/pdm.hpp"
#include "bosedyn/thermal.hpp"

namespace bose {

// All vectors and matrices below are in the orthonormal grid basis (see pdm.hpp).

struct DenseState {
  cvec phi;
  DensePDM pdm;
  InteractionSpec interaction;

  const Grid& grid() const { return pdm.grid; }
};

// Thermal modes a_j, b_j with weights lambda_j. gamma = sum lambda a a* + (1+lambda) b b*,
// alpha = sum lambda a b^T + (1+lambda) b a^T. Vacuum-completion modes carry lambda = 0.
struct ModeState {
  Grid grid;
  cvec phi;
  rvec weights;
  cmat a;
  cmat b;
  InteractionSpec interaction;
  int thermal_count = 0;
  double discarded_trace = 0.0;

  int count() const { return static_cast<int>(weights.size()); }
};

ModeState make_mode_state(const Grid& grid, const cvec& phi, const ThermalPDM& pdm,
                          const InteractionSpec& v, bool vacuum_completion = true);
DenseState make_dense_state(const Grid& grid, const cvec& phi, const ThermalPDM& pdm,
                            const InteractionSpec& v);

DensePDM reconstruct(const ModeState& s);

// Low-rank sources for gamma and alpha. gamma = C diag(wc) C^* + sum_k wp_k p_k p_k^*,
// alpha = X diag(wx) Y^T + sum_k wp_k p_k p_k^T (the phi parts enter both).
struct FieldSources {
  cmat C;
  rvec wc;
  cmat X, Y;
  rvec wx;
  cmat P;
  rvec wp;

  static FieldSources from_modes(const ModeState& s, double scale = 1.0);
  void append(const FieldSources& o);
  long rank() const { return C.cols() + X.cols() + P.cols(); }
};

enum class FieldStrategy { Auto, Dense, ModeWise };

// Mean-field operator b(.) and pairing k(.) built from frozen sources.
class MeanField {
public:
  MeanField(const PairPotential& pp, FieldSources src, FieldStrategy strat = FieldStrategy::Auto);

  // b(gamma) f, optionally including the phi part of gamma^phi.
  cmat apply_b(const cmat& f, bool with_phi) const;
  // k(alpha^phi) g (no conjugation applied).
  cmat apply_k(const cmat& g) const;
  bool dense() const { return dense_; }

private:
  const PairPotential& pp_;
  FieldSources src_;
  bool dense_;
  rmat V_;
  cmat Bg_, Bphi_, K_;
  rvec direct_g_, direct_phi_;
};

// Operator-level helpers used by tests and diagnostics.
cvec mean_field_exchange_apply(const PairPotential& pp, const DensePDM& pdm, const cvec& f);
cvec mean_field_exchange_apply(const PairPotential& pp, const ModeState& s, const cvec& f);
cvec pairing_apply(const PairPotential& pp, const DensePDM& pdm, const cvec& phi, const cvec& f);
cvec pairing_apply(const PairPotential& pp, const ModeState& s, const cvec& f);

struct StepStats {
  double symmetry_drift = 0.0;  // largest pre-averaging asymmetry seen
  double probe_defect = 0.0;    // largest Gram-relation defect seen
  int taylor_terms = 0;
};

DenseState step_dense(const DenseState& s, double dt, StepStats* stats = nullptr);

struct ModeStepOptions {
  FieldStrategy strategy = FieldStrategy::Auto;
  double probe_tol = 1e-8;
};

ModeState step_modes(const ModeState& s, double dt, const ModeStepOptions& opt = {},
                     StepStats* stats = nullptr);
// Symplectic Gram relation <a_i,a_j> - conj<b_i,b_j> = delta_ij on a few sampled pairs.
double mode_probe_defect(const ModeState& s);

using DenseObserver = std::function<void(double, const DenseState&)>;
using ModeObserver = std::function<void(double, const ModeState&)>;

// Integrate to t_end, calling the observer at t=0 and every `every` steps.
DenseState run_dense(DenseState s, double dt, double t_end, int every, const DenseObserver& obs,
                     StepStats* stats = nullptr);
ModeState run_modes(ModeState s, double dt, double t_end, int every, const ModeObserver& obs,
                    const ModeStepOptions& opt = {}, StepStats* stats = nullptr, int check_every = 10);

ThermalPDM free_conjugate(const ThermalPDM& pdm, double t);
DensePDM free_conjugate(const DensePDM& pdm, double t);

struct EnergyParts {
  double kinetic = 0.0;    // tr[-Delta (gamma + |phi><phi|)]
  double condensate = 0.0; // N^{-1} tr[(v*|phi|^2 + v#|phi><phi|) gamma]
  double cloud = 0.0;      // (2N)^{-1} tr[(v*rho + v#gamma) gamma]
  double pairing = 0.0;    // (2N)^{-1} int v |alpha + phi phi|^2
  double total() const { return kinetic + condensate + cloud + pairing; }
};

EnergyParts hfb_energy(const DenseState& s);
EnergyParts hfb_energy(const ModeState& s, FieldStrategy strat = FieldStrategy::Auto);

double particle_number(const DenseState& s);
double particle_number(const ModeState& s);  // includes the discarded trace

}  // namespace bose
