#pragma once

#include "bosedyn/grid.hpp"

namespace bose {

struct InteractionSpec {
  enum class Shape { Gaussian, Table };
  Shape shape = Shape::Gaussian;
  double v0 = 1.0;
  double sigma = 1.0;
  rvec table;            // samples v(x_i) at the grid points, only for Shape::Table
  double N_scale = 1.0;  // the N of the 1/N mean-field factor

  static InteractionSpec gaussian(double v0, double sigma, double N_scale = 1.0);
  static InteractionSpec from_table(rvec values, double N_scale = 1.0);
  bool is_zero() const;
};

// Precomputed pair potential on a grid: v at every displacement (minimum image) and its DFT.
class PairPotential {
public:
  PairPotential(const Grid& grid, const InteractionSpec& spec);

  const Grid& grid() const { return grid_; }
  double inv_N() const { return inv_N_; }
  const rvec& displacement_values() const { return disp_; }

  // (V u)_i = sum_j v(x_i - x_j) u_j. No cell weight: pass masses rho_j dx^d.
  cvec convolve(const cvec& u) const;
  // Dense V_ij = v(x_i - x_j).
  rmat matrix() const;
  double l1_norm() const;  // int |v|
  double sup_norm() const;
  bool is_zero() const { return zero_; }

private:
  Grid grid_;
  double inv_N_;
  rvec disp_;
  cvec disp_hat_;
  bool zero_;
};

// N^{-1} v * rho for a density rho given as function samples.
Field mean_field_direct(const Field& rho, const InteractionSpec& v);

}  // namespace bose
