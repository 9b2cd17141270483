#include "bosedyn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "bosedyn/error.hpp"

namespace bose {

namespace {

rmat apply_h_block(const Grid& grid, const rvec& k2, const rvec& w, const rmat& x) {
  const Fourier& ft = fourier_for(grid);
  rmat out(x.rows(), x.cols());
  cvec sym = k2.cast<cplx>();
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    cvec f = x.col(j).cast<cplx>();
    out.col(j) = ft.apply_symbol(f, sym).real() + w.cwiseProduct(x.col(j));
  }
  return out;
}

// Orthonormalize the columns of x against basis (two passes) and among themselves.
// Columns that collapse are replaced by random directions.
rmat orthonormalize_block(const rmat& basis, rmat x, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  for (int attempt = 0; attempt < x.cols() + 3; ++attempt) {
    rvec before = x.colwise().norm().transpose();
    for (int pass = 0; pass < 2; ++pass) {
      if (basis.cols() > 0) x -= basis * (basis.transpose() * x);
    }
    bool ok = true;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) {
        for (int pass = 0; pass < 2; ++pass) x.col(j) -= x.col(i).dot(x.col(j)) * x.col(i);
      }
      double nrm = x.col(j).norm();
      if (!(nrm > 1e-8 * std::max(before[j], 1e-300))) {
        // direction already in the span: continue the Krylov space with a fresh vector
        for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, j) = nd(rng);
        ok = false;
        continue;
      }
      x.col(j) /= nrm;
    }
    if (ok) return x;
  }
  throw InvariantError("block orthonormalization failed");
}

}  // namespace

Field apply_h(const Grid& grid, const TrapSpec& trap, const Field& f) {
  if (f.grid != grid) throw ConfigError("apply_h: field lives on a different grid");
  const Fourier& ft = fourier_for(grid);
  cvec out = ft.apply_symbol(f.values, kinetic_symbol(grid));
  out += trap_values(grid, trap).cwiseProduct(f.values);
  return Field(grid, out);
}

rmat dense_h(const Grid& grid, const TrapSpec& trap) {
  const long n = grid.size();
  rvec k2 = kinetic_symbol(grid);
  rmat h(n, n);
  cvec sym = k2.cast<cplx>();
  const Fourier& ft = fourier_for(grid);
  // The kinetic matrix is circulant: one column determines all.
  cvec e0 = cvec::Zero(n);
  e0[0] = 1.0;
  rvec col0 = ft.apply_symbol(e0, sym).real();
  for (long j = 0; j < n; ++j) {
    auto jx = grid.unravel(j);
    for (long i = 0; i < n; ++i) {
      auto ix = grid.unravel(i);
      long d = 0;
      for (int a = 0; a < grid.dim; ++a) d = d * grid.n + ((ix[a] - jx[a] + grid.n) % grid.n);
      h(i, j) = col0[d];
    }
  }
  h = 0.5 * (h + h.transpose());
  h.diagonal() += trap_values(grid, trap);
  return h;
}

double boundary_fraction(const Grid& grid, const cvec& f) {
  double total = f.squaredNorm();
  if (total == 0.0) return 0.0;
  double edge = 0.0;
  const double cut = 0.9 * grid.half_length;
  for (long i = 0; i < grid.size(); ++i) {
    auto ix = grid.unravel(i);
    double m = 0.0;
    for (int a = 0; a < grid.dim; ++a) m = std::max(m, std::abs(grid.coord(ix[a])));
    if (m >= cut) edge += std::norm(f[i]);
  }
  return edge / total;
}

namespace {

SpectralData package(const Grid& grid, const TrapSpec& trap, const rvec& vals, const rmat& vecs,
                     bool complete) {
  SpectralData sd;
  sd.grid = grid;
  sd.eigenvalues = vals;
  sd.complete = complete;
  const double scale = 1.0 / std::sqrt(grid.cell_volume());
  sd.eigenfunctions = (vecs * scale).cast<cplx>();
  rvec k2 = kinetic_symbol(grid);
  rvec w = trap_values(grid, trap);
  rmat hv = apply_h_block(grid, k2, w, vecs);
  sd.residuals.resize(vals.size());
  sd.boundary_mass.resize(vals.size());
  for (Eigen::Index j = 0; j < vals.size(); ++j) {
    sd.residuals[j] = (hv.col(j) - vals[j] * vecs.col(j)).norm();
    sd.boundary_mass[j] = boundary_fraction(grid, vecs.col(j).cast<cplx>());
    if (sd.boundary_mass[j] > 1e-6) sd.boundary_warning = true;
  }
  return sd;
}

}  // namespace

SpectralData all_eigenpairs(const Grid& grid, const TrapSpec& trap) {
  Eigen::SelfAdjointEigenSolver<rmat> es(dense_h(grid, trap));
  if (es.info() != Eigen::Success) throw InvariantError("dense eigensolver failed");
  return package(grid, trap, es.eigenvalues(), es.eigenvectors(), true);
}

LanczosResult block_lanczos(const std::function<rmat(const rmat&)>& apply, long dim, int count,
                            const EigenOptions& opt) {
  const int b = std::min<long>(count + 2, dim);
  const int keep = std::min<long>(count + b, dim);
  int max_dim = opt.max_subspace > 0 ? opt.max_subspace : std::max(12 * b, keep + 8 * b);
  max_dim = static_cast<int>(std::min<long>(max_dim, dim));

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  rmat x(dim, b);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = nd(rng);

  rmat v(dim, 0), hv(dim, 0);
  LanczosResult res;
  double best = INFINITY;
  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    while (v.cols() < max_dim) {
      int take = static_cast<int>(std::min<long>(x.cols(), max_dim - v.cols()));
      rmat q = orthonormalize_block(v, x.leftCols(take), rng);
      rmat hq = apply(q);
      v.conservativeResize(Eigen::NoChange, v.cols() + take);
      hv.conservativeResize(Eigen::NoChange, hv.cols() + take);
      v.rightCols(take) = q;
      hv.rightCols(take) = hq;
      x = hq;
    }
    rmat t = v.transpose() * hv;
    t = 0.5 * (t + t.transpose());
    Eigen::SelfAdjointEigenSolver<rmat> es(t);
    rmat y = es.eigenvectors().leftCols(keep);
    rvec theta = es.eigenvalues().head(keep);
    rmat xr = v * y;
    rmat hxr = hv * y;
    rmat r = hxr - xr * theta.asDiagonal();
    rvec rn(count);
    for (int j = 0; j < count; ++j) rn[j] = r.col(j).norm();
    best = std::min(best, rn.maxCoeff());
    res.restarts = restart;
    if (rn.maxCoeff() <= opt.tol || v.cols() == dim) {
      res.values = theta.head(count);
      res.vectors = xr.leftCols(count);
      res.residuals = rn;
      return res;
    }
    // Thick restart: keep the Ritz block, extend with the residuals.
    v = xr;
    hv = hxr;
    x = r.leftCols(b);
  }
  throw ConvergenceError("block Lanczos did not converge", best);
}

SpectralData lowest_eigenpairs(const Grid& grid, const TrapSpec& trap, int count,
                               const EigenOptions& opt) {
  require(count >= 1, "eigenpair count must be positive");
  require(count <= opt.count_cap, "eigenpair count exceeds configured cap");
  require(count <= grid.size(), "more eigenpairs requested than grid points");
  if (grid.size() <= opt.dense_limit) {
    Eigen::SelfAdjointEigenSolver<rmat> es(dense_h(grid, trap));
    if (es.info() != Eigen::Success) throw InvariantError("dense eigensolver failed");
    return package(grid, trap, es.eigenvalues().head(count), es.eigenvectors().leftCols(count),
                   count == grid.size());
  }
  rvec k2 = kinetic_symbol(grid);
  rvec w = trap_values(grid, trap);
  auto apply = [&](const rmat& x) { return apply_h_block(grid, k2, w, x); };
  LanczosResult lr = block_lanczos(apply, grid.size(), count, opt);
  return package(grid, trap, lr.values, lr.vectors, false);
}

double TailFit::tail(double t, int from) const {
  // integral_{from-1}^inf exp(-t c x^p) dx by composite Simpson on a stretched range
  double x0 = std::max(0.0, from - 1.0);
  double f0 = std::exp(-t * c * std::pow(std::max(x0, 1.0), p));
  if (f0 == 0.0) return 0.0;
  // exponent grows at least linearly after x0; integrate until the integrand is negligible
  double x1 = x0 + 1.0;
  while (std::exp(-t * c * std::pow(x1, p)) > 1e-18 * f0 && x1 < 1e9) x1 = x0 + 2.0 * (x1 - x0);
  const int m = 4000;
  double h = (x1 - x0) / m, s = 0.0;
  for (int i = 0; i <= m; ++i) {
    double x = x0 + i * h;
    double fx = std::exp(-t * c * std::pow(std::max(x, 1.0), p));
    s += (i == 0 || i == m) ? fx : (i % 2 ? 4 * fx : 2 * fx);
  }
  return s * h / 3.0;
}

int TailFit::count_for(double t, double target) const {
  int m = 1;
  while (tail(t, m) > target && m < (1 << 28)) m *= 2;
  int lo = m / 2, hi = m;
  while (hi - lo > 1) {
    int mid = (lo + hi) / 2;
    (tail(t, mid) > target ? lo : hi) = mid;
  }
  return hi;
}

TailFit fit_growth(const rvec& ev) {
  // least squares of log e_j against log j over the upper half of the retained levels
  const int n = static_cast<int>(ev.size());
  TailFit fit;
  if (n < 4) {
    fit.c = ev.size() ? std::max(ev[n - 1], 1e-12) : 1.0;
    fit.p = 2.0 / 3.0;
    return fit;
  }
  int start = std::max(1, n / 2);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (int j = start; j < n; ++j) {
    if (ev[j] <= 0) continue;
    double x = std::log(static_cast<double>(j)), y = std::log(ev[j]);
    sx += x; sy += y; sxx += x * x; sxy += x * y; ++k;
  }
  double den = k * sxx - sx * sx;
  fit.p = den > 0 ? (k * sxy - sx * sy) / den : 2.0 / 3.0;
  fit.p = std::max(fit.p, 1e-3);
  fit.c = std::exp((sy - fit.p * sx) / std::max(k, 1));
  return fit;
}

HeatKernelReport heat_kernel_fourier_check(const Grid& grid, const TrapSpec& trap,
                                           const SpectralData& spec, double t) {
  require(t > 0.0, "heat kernel time must be positive");
  require(spec.grid == grid, "spectral data lives on a different grid");
  HeatKernelReport rep;
  rep.bound = std::pow(kPi / t, 0.5 * grid.dim);
  if (!spec.complete) {
    TailFit fit = fit_growth(spec.eigenvalues);
    rep.spectral_tail = fit.tail(t, spec.count());
    if (rep.spectral_tail > 1e-8) {
      throw ConfigError("heat kernel: spectral tail " + std::to_string(rep.spectral_tail) +
                        " too large; about " + std::to_string(fit.count_for(t, 1e-8)) +
                        " eigenpairs required");
    }
  }
  const Fourier& ft = fourier_for(grid);
  const long n = grid.size();
  const int m = spec.count();
  rmat re(n, m), im(n, m);
  for (int j = 0; j < m; ++j) {
    cvec fh = ft.to_momentum(spec.eigenfunctions.col(j));
    re.col(j) = fh.real();
    im.col(j) = fh.imag();
  }
  rvec d = (-t * spec.eigenvalues.array()).exp();
  // k(p,q) = sum_j d_j psi^_j(p) conj(psi^_j(q)), split into real GEMMs
  rmat x(n, 2 * m), y(n, 2 * m);
  x << re, im;
  y << re * d.asDiagonal(), im * d.asDiagonal();
  rmat kr = x * y.transpose();
  rmat z(n, 2 * m);
  z << im, -re;
  rmat ki = z * y.transpose();
  const double cell = grid.momentum_cell();
  double l1 = 0.0;
  rep.min_kernel = kr(0, 0);
  rep.max_kernel = kr(0, 0);
  for (long q = 0; q < n; ++q) {
    for (long p = 0; p < n; ++p) {
      double a = kr(p, q), b = ki(p, q);
      l1 += std::sqrt(a * a + b * b);
      rep.min_kernel = std::min(rep.min_kernel, a);
      rep.max_kernel = std::max(rep.max_kernel, a);
    }
  }
  rep.l1_mass = l1 * cell * cell;
  // Lattice effects: the box cuts the confining factor exp(-t w) at the faces and the
  // momentum lattice cuts exp(-t p^2) at the Nyquist shell. The last term covers roundoff.
  double kc = grid.momentum_spacing() * (grid.n / 2);
  rep.lattice_tail = rep.max_kernel * (std::exp(-t * trap(grid.half_length)) +
                                       std::exp(-t * kc * kc) + 1e-13);
  return rep;
}

std::vector<RadialLevel> radial_levels(const TrapSpec& trap, double e_cut, double r_max, int n_r) {
  require(n_r >= 8 && r_max > 0.0, "radial grid too small");
  const double dr = r_max / (n_r + 1);
  std::vector<RadialLevel> out;
  rvec diag(n_r), off = rvec::Constant(n_r - 1, -1.0 / (dr * dr));
  for (int l = 0;; ++l) {
    for (int i = 0; i < n_r; ++i) {
      double r = (i + 1) * dr;
      diag[i] = 2.0 / (dr * dr) + l * (l + 1.0) / (r * r) + trap(r);
    }
    Eigen::SelfAdjointEigenSolver<rmat> es;
    es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    const rvec& ev = es.eigenvalues();
    if (ev[0] > e_cut) break;
    for (Eigen::Index k = 0; k < ev.size() && ev[k] <= e_cut; ++k)
      out.push_back({ev[k], l, 2 * l + 1});
  }
  std::sort(out.begin(), out.end(),
            [](const RadialLevel& a, const RadialLevel& b) { return a.energy < b.energy; });
  return out;
}

}  // namespace bose
