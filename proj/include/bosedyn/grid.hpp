#pragma once

#include <array>
#include <memory>
#include <vector>

#include "bosedyn/types.hpp"

namespace bose {

// Uniform periodic grid on [-L, L)^dim with n points per axis.
struct Grid {
  int dim = 1;
  int n = 64;
  double half_length = 8.0;

  Grid() = default;
  Grid(int dim_, int n_, double half_length_);

  double spacing() const { return 2.0 * half_length / n; }
  double cell_volume() const;          // dx^dim
  double momentum_spacing() const { return kPi / half_length; }
  double momentum_cell() const;        // dk^dim
  long size() const;                   // n^dim

  double coord(int i) const { return -half_length + i * spacing(); }
  // FFT-ordered momentum along one axis.
  double momentum(int i) const { return momentum_spacing() * (i < n / 2 ? i : i - n); }

  std::array<int, 3> unravel(long idx) const;
  double radius_sq(long idx) const;
  double momentum_sq(long idx) const;
  double max_momentum_sq() const;

  bool operator==(const Grid& o) const {
    return dim == o.dim && n == o.n && half_length == o.half_length;
  }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

struct TrapSpec {
  double s = 2.0;
  double prefactor = 1.0;

  TrapSpec() = default;
  TrapSpec(double s_, double prefactor_ = 1.0);
  double operator()(double r) const;
};

// Function samples on a grid. Norms use the cell volume as weight.
struct Field {
  Grid grid;
  cvec values;

  Field() = default;
  explicit Field(const Grid& g) : grid(g), values(cvec::Zero(g.size())) {}
  Field(const Grid& g, cvec v);

  double norm() const;
  cplx dot(const Field& o) const;  // <this, o>, antilinear in this
};

rvec trap_values(const Grid& g, const TrapSpec& trap);
rvec kinetic_symbol(const Grid& g);  // |k|^2 in FFT order

// FFTW-backed transforms for one grid. Not thread safe; use one per thread.
class Fourier {
public:
  explicit Fourier(const Grid& g);
  ~Fourier();
  Fourier(const Fourier&) = delete;
  Fourier& operator=(const Fourier&) = delete;

  const Grid& grid() const { return grid_; }
  // Unnormalized DFT with e^{-i} (forward) / e^{+i} (backward) kernels.
  void forward(const cplx* in, cplx* out) const;
  void backward(const cplx* in, cplx* out) const;

  // Physical transform (2pi)^{-d/2} sum dx^d e^{ikx} f(x), FFT-ordered momenta. Unitary
  // from L2(dx) to L2(dk).
  cvec to_momentum(const cvec& f) const;
  cvec from_momentum(const cvec& fhat) const;

  // Multiply by a symbol in momentum space: F^{-1} diag(sym) F f.
  cvec apply_symbol(const cvec& f, const cvec& sym) const;
  cvec apply_symbol(const cvec& f, const rvec& sym) const;
  // Same on every column.
  cmat apply_symbol_cols(const cmat& f, const cvec& sym) const;
  cmat apply_symbol_cols(const cmat& f, const rvec& sym) const;

  // Circular convolution sum_j v(x_i - x_j) u_j, where kernel holds v at displacement
  // index (FFT order, no cell weight).
  cvec convolve(const cvec& kernel_hat, const cvec& u) const;
  cvec kernel_transform(const cvec& kernel) const;  // DFT of displacement samples

  const rvec& parity() const { return parity_; }  // (-1)^(sum of axis indices)

private:
  Grid grid_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
  rvec parity_;
};

// Thread-local cache keyed by grid.
Fourier& fourier_for(const Grid& g);

}  // namespace bose
