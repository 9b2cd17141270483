#include "bosedyn/interaction.hpp"

#include <cmath>

#include "bosedyn/error.hpp"

namespace bose {

InteractionSpec InteractionSpec::gaussian(double v0, double sigma, double N_scale) {
  require(sigma > 0.0, "interaction width must be positive");
  require(N_scale > 0.0, "N_scale must be positive");
  InteractionSpec s;
  s.shape = Shape::Gaussian;
  s.v0 = v0;
  s.sigma = sigma;
  s.N_scale = N_scale;
  return s;
}

InteractionSpec InteractionSpec::from_table(rvec values, double N_scale) {
  require(N_scale > 0.0, "N_scale must be positive");
  InteractionSpec s;
  s.shape = Shape::Table;
  s.table = std::move(values);
  s.N_scale = N_scale;
  return s;
}

bool InteractionSpec::is_zero() const {
  if (shape == Shape::Gaussian) return v0 == 0.0;
  return table.size() == 0 || table.cwiseAbs().maxCoeff() == 0.0;
}

PairPotential::PairPotential(const Grid& grid, const InteractionSpec& spec)
    : grid_(grid), inv_N_(1.0 / spec.N_scale), disp_(grid.size()) {
  const long n = grid.size();
  const double dx = grid.spacing();
  if (spec.shape == InteractionSpec::Shape::Gaussian) {
    for (long i = 0; i < n; ++i) {
      auto ix = grid.unravel(i);
      double r2 = 0.0;
      for (int a = 0; a < grid.dim; ++a) {
        double x = (ix[a] < grid.n / 2 ? ix[a] : ix[a] - grid.n) * dx;
        r2 += x * x;
      }
      disp_[i] = spec.v0 * std::exp(-r2 / (2.0 * spec.sigma * spec.sigma));
    }
  } else {
    require(spec.table.size() == n, "interaction table size does not match grid");
    double scale = std::max(spec.table.cwiseAbs().maxCoeff(), 1e-300);
    for (long i = 0; i < n; ++i) {
      auto ix = grid.unravel(i);
      long src = 0, mirror = 0;
      for (int a = 0; a < grid.dim; ++a) {
        int p = (ix[a] + grid.n / 2) % grid.n;  // grid point at displacement ix[a]*dx
        int q = (grid.n - p) % grid.n;          // grid point at the negated coordinate
        src = src * grid.n + p;
        mirror = mirror * grid.n + q;
      }
      if (std::abs(spec.table[src] - spec.table[mirror]) > 1e-12 * scale)
        throw ConfigError("interaction table is not even: v(x) != v(-x)");
      disp_[i] = spec.table[src];
    }
  }
  zero_ = disp_.cwiseAbs().maxCoeff() == 0.0;
  disp_hat_ = fourier_for(grid).kernel_transform(disp_.cast<cplx>());
}

cvec PairPotential::convolve(const cvec& u) const {
  if (zero_) return cvec::Zero(u.size());
  return fourier_for(grid_).convolve(disp_hat_, u);
}

rmat PairPotential::matrix() const {
  const long n = grid_.size();
  rmat v(n, n);
  for (long j = 0; j < n; ++j) {
    auto jx = grid_.unravel(j);
    for (long i = 0; i < n; ++i) {
      auto ix = grid_.unravel(i);
      long d = 0;
      for (int a = 0; a < grid_.dim; ++a) d = d * grid_.n + ((ix[a] - jx[a] + grid_.n) % grid_.n);
      v(i, j) = disp_[d];
    }
  }
  return v;
}

double PairPotential::l1_norm() const { return disp_.cwiseAbs().sum() * grid_.cell_volume(); }
double PairPotential::sup_norm() const { return disp_.cwiseAbs().maxCoeff(); }

Field mean_field_direct(const Field& rho, const InteractionSpec& v) {
  PairPotential pp(rho.grid, v);
  cvec out = pp.inv_N() * pp.convolve(rho.values * rho.grid.cell_volume());
  return Field(rho.grid, out);
}

}  // namespace bose
