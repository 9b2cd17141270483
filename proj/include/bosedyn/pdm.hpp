#pragma once

#include "bosedyn/grid.hpp"

namespace bose {

// gamma and alpha as matrices in the orthonormal grid basis e_i = delta_i / dx^{d/2}.
// The integral kernels are gamma(x_i, x_j) = gamma_ij / dx^d.
struct DensePDM {
  Grid grid;
  cmat gamma;
  cmat alpha;

  DensePDM() = default;
  explicit DensePDM(const Grid& g)
      : grid(g), gamma(cmat::Zero(g.size(), g.size())), alpha(cmat::Zero(g.size(), g.size())) {}
};

// Coefficient vector c = dx^{d/2} f of a field.
cvec to_coeff(const Field& f);
Field from_coeff(const Grid& g, const cvec& c);

// Spectral free propagator exp(i Delta t) on columns of coefficient vectors.
cmat free_evolve_cols(const Grid& g, const cmat& c, double t);
cvec free_evolve(const Grid& g, const cvec& c, double t);

}  // namespace bose
