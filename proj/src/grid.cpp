#include "bosedyn/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

#include "bosedyn/error.hpp"

namespace bose {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

Grid::Grid(int dim_, int n_, double half_length_) : dim(dim_), n(n_), half_length(half_length_) {
  require(dim >= 1 && dim <= 3, "grid dim must be 1, 2 or 3");
  require(n >= 2 && (n & (n - 1)) == 0, "points per axis must be a power of two");
  require(half_length > 0.0, "box half length must be positive");
}

double Grid::cell_volume() const { return std::pow(spacing(), dim); }
double Grid::momentum_cell() const { return std::pow(momentum_spacing(), dim); }

long Grid::size() const {
  long s = 1;
  for (int d = 0; d < dim; ++d) s *= n;
  return s;
}

std::array<int, 3> Grid::unravel(long idx) const {
  std::array<int, 3> out{0, 0, 0};
  for (int d = dim - 1; d >= 0; --d) {
    out[d] = static_cast<int>(idx % n);
    idx /= n;
  }
  return out;
}

double Grid::radius_sq(long idx) const {
  auto ix = unravel(idx);
  double r2 = 0.0;
  for (int d = 0; d < dim; ++d) r2 += coord(ix[d]) * coord(ix[d]);
  return r2;
}

double Grid::momentum_sq(long idx) const {
  auto ix = unravel(idx);
  double k2 = 0.0;
  for (int d = 0; d < dim; ++d) k2 += momentum(ix[d]) * momentum(ix[d]);
  return k2;
}

double Grid::max_momentum_sq() const {
  double k = momentum_spacing() * (n / 2);
  return dim * k * k;
}

TrapSpec::TrapSpec(double s_, double prefactor_) : s(s_), prefactor(prefactor_) {
  require(s > 0.0, "trap exponent s must be positive");
  require(prefactor >= 0.0, "trap prefactor must be nonnegative");
}

double TrapSpec::operator()(double r) const {
  if (prefactor == 0.0) return 0.0;
  return prefactor * std::pow(r, s);
}

Field::Field(const Grid& g, cvec v) : grid(g), values(std::move(v)) {
  require(values.size() == g.size(), "field size does not match grid");
}

double Field::norm() const { return std::sqrt(grid.cell_volume()) * values.norm(); }

cplx Field::dot(const Field& o) const {
  if (grid != o.grid) throw ConfigError("grid mismatch in inner product");
  return grid.cell_volume() * values.dot(o.values);
}

rvec trap_values(const Grid& g, const TrapSpec& trap) {
  rvec w(g.size());
  for (long i = 0; i < g.size(); ++i) w[i] = trap(std::sqrt(g.radius_sq(i)));
  return w;
}

rvec kinetic_symbol(const Grid& g) {
  rvec k2(g.size());
  for (long i = 0; i < g.size(); ++i) k2[i] = g.momentum_sq(i);
  return k2;
}

struct Fourier::Impl {
  long size = 0;
  fftw_complex* buf = nullptr;
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  ~Impl() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
    if (buf) fftw_free(buf);
  }
};

Fourier::Fourier(const Grid& g) : grid_(g), impl_(std::make_unique<Impl>()) {
  impl_->size = g.size();
  int dims[3] = {g.n, g.n, g.n};
  std::lock_guard<std::mutex> lock(planner_mutex());
  impl_->buf = fftw_alloc_complex(impl_->size);
  impl_->fwd = fftw_plan_dft(g.dim, dims, impl_->buf, impl_->buf, FFTW_FORWARD, FFTW_ESTIMATE);
  impl_->bwd = fftw_plan_dft(g.dim, dims, impl_->buf, impl_->buf, FFTW_BACKWARD, FFTW_ESTIMATE);

  parity_.resize(g.size());
  for (long i = 0; i < g.size(); ++i) {
    auto ix = g.unravel(i);
    parity_[i] = ((ix[0] + ix[1] + ix[2]) % 2 == 0) ? 1.0 : -1.0;
  }
}

Fourier::~Fourier() = default;

void Fourier::forward(const cplx* in, cplx* out) const {
  auto* b = reinterpret_cast<cplx*>(impl_->buf);
  std::copy(in, in + impl_->size, b);
  fftw_execute(impl_->fwd);
  std::copy(b, b + impl_->size, out);
}

void Fourier::backward(const cplx* in, cplx* out) const {
  auto* b = reinterpret_cast<cplx*>(impl_->buf);
  std::copy(in, in + impl_->size, b);
  fftw_execute(impl_->bwd);
  std::copy(b, b + impl_->size, out);
}

cvec Fourier::to_momentum(const cvec& f) const {
  cvec out(f.size());
  backward(f.data(), out.data());
  double c = grid_.cell_volume() / std::pow(2.0 * kPi, 0.5 * grid_.dim);
  return (c * parity_.array()).matrix().cwiseProduct(out);
}

cvec Fourier::from_momentum(const cvec& fhat) const {
  cvec tmp = parity_.cast<cplx>().cwiseProduct(fhat);
  cvec out(fhat.size());
  forward(tmp.data(), out.data());
  double c = grid_.momentum_cell() / std::pow(2.0 * kPi, 0.5 * grid_.dim);
  return c * out;
}

cvec Fourier::apply_symbol(const cvec& f, const cvec& sym) const {
  cvec tmp(f.size());
  forward(f.data(), tmp.data());
  tmp = tmp.cwiseProduct(sym);
  cvec out(f.size());
  backward(tmp.data(), out.data());
  return out / static_cast<double>(impl_->size);
}

cvec Fourier::apply_symbol(const cvec& f, const rvec& sym) const {
  return apply_symbol(f, cvec(sym.cast<cplx>()));
}

cmat Fourier::apply_symbol_cols(const cmat& f, const cvec& sym) const {
  cmat out(f.rows(), f.cols());
  for (Eigen::Index j = 0; j < f.cols(); ++j) out.col(j) = apply_symbol(cvec(f.col(j)), sym);
  return out;
}

cmat Fourier::apply_symbol_cols(const cmat& f, const rvec& sym) const {
  return apply_symbol_cols(f, cvec(sym.cast<cplx>()));
}

cvec Fourier::kernel_transform(const cvec& kernel) const {
  cvec out(kernel.size());
  forward(kernel.data(), out.data());
  return out;
}

cvec Fourier::convolve(const cvec& kernel_hat, const cvec& u) const {
  return apply_symbol(u, kernel_hat);
}

Fourier& fourier_for(const Grid& g) {
  thread_local std::map<std::tuple<int, int, double>, std::unique_ptr<Fourier>> cache;
  auto key = std::make_tuple(g.dim, g.n, g.half_length);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, std::make_unique<Fourier>(g)).first;
  return *it->second;
}

}  // namespace bose
