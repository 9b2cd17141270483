#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "bosedyn/grid.hpp"

namespace bose {

struct SpectralData {
  Grid grid;
  rvec eigenvalues;       // ascending
  cmat eigenfunctions;    // columns are function samples, unit L2 norm on the grid
  rvec residuals;         // ||h psi - e psi|| per pair
  rvec boundary_mass;     // l2 fraction in the outer 10% shell
  bool boundary_warning = false;
  bool complete = false;  // every grid eigenpair present

  int count() const { return static_cast<int>(eigenvalues.size()); }
  Field field(int j) const { return Field(grid, eigenfunctions.col(j)); }
};

struct EigenOptions {
  double tol = 1e-8;          // residual tolerance per pair
  int max_subspace = 0;       // 0: automatic
  int max_restarts = 200;
  long dense_limit = 2048;    // grids up to this size are diagonalized densely
  int count_cap = 4096;
  std::uint64_t seed = 7;
};

// (-Delta + w) f with the Laplacian applied spectrally.
Field apply_h(const Grid& grid, const TrapSpec& trap, const Field& f);

// Dense real symmetric matrix of h in the orthonormal grid basis (small grids only).
rmat dense_h(const Grid& grid, const TrapSpec& trap);

SpectralData lowest_eigenpairs(const Grid& grid, const TrapSpec& trap, int count,
                               const EigenOptions& opt = {});
SpectralData all_eigenpairs(const Grid& grid, const TrapSpec& trap);

// Block Lanczos with full reorthogonalization and thick restart, for a real symmetric
// operator given as a block apply. Returns Ritz values/vectors of the lowest `count`.
struct LanczosResult {
  rvec values;
  rmat vectors;
  rvec residuals;
  int restarts = 0;
};
LanczosResult block_lanczos(const std::function<rmat(const rmat&)>& apply, long dim, int count,
                            const EigenOptions& opt);

double boundary_fraction(const Grid& grid, const cvec& f);

// Tail sum_{j >= M} e^{-t e_j} from a power-law fit e_j ~ c j^p to the retained levels.
struct TailFit {
  double c = 0.0;
  double p = 0.0;
  double tail(double t, int from) const;
  int count_for(double t, double target) const;
};
TailFit fit_growth(const rvec& eigenvalues);

struct HeatKernelReport {
  double min_kernel = 0.0;
  double max_kernel = 0.0;
  double l1_mass = 0.0;
  double bound = 0.0;
  double spectral_tail = 0.0;  // missing eigenpairs
  double lattice_tail = 0.0;   // box + momentum cutoff
  double truncation_estimate() const { return spectral_tail + lattice_tail; }
};

// Momentum-space heat kernel of h from its eigenpairs: min real part, L1(dp dq) mass and
// the free bound (pi/t)^{d/2}.
HeatKernelReport heat_kernel_fourier_check(const Grid& grid, const TrapSpec& trap,
                                           const SpectralData& spec, double t);

// Levels of -Delta + w in 3D from radial finite differences per angular momentum.
struct RadialLevel {
  double energy;
  int l;
  int degeneracy;
};
std::vector<RadialLevel> radial_levels(const TrapSpec& trap, double e_cut, double r_max,
                                       int n_r);

}  // namespace bose
