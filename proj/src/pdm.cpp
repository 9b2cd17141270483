#include "bosedyn/pdm.hpp"

#include <cmath>

namespace bose {

cvec to_coeff(const Field& f) { return std::sqrt(f.grid.cell_volume()) * f.values; }

Field from_coeff(const Grid& g, const cvec& c) {
  return Field(g, c / std::sqrt(g.cell_volume()));
}

cmat free_evolve_cols(const Grid& g, const cmat& c, double t) {
  if (t == 0.0) return c;
  rvec k2 = kinetic_symbol(g);
  cvec sym(k2.size());
  for (Eigen::Index i = 0; i < k2.size(); ++i) sym[i] = std::exp(cplx(0.0, -t * k2[i]));
  return fourier_for(g).apply_symbol_cols(c, sym);
}

cvec free_evolve(const Grid& g, const cvec& c, double t) {
  return free_evolve_cols(g, c, t).col(0);
}

}  // namespace bose
