#include "bosedyn/hfb.hpp"

#include <cmath>

#include <Eigen/QR>

#include "bosedyn/error.hpp"

namespace bose {

namespace {

cmat coeff_cols(const Grid& g, const cmat& samples) { return std::sqrt(g.cell_volume()) * samples; }

// Dense kinetic matrix (real symmetric) in the orthonormal basis.
rmat kinetic_matrix(const Grid& g) { return dense_h(g, TrapSpec(1.0, 0.0)); }

double max_abs(const cmat& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

ModeState make_mode_state(const Grid& grid, const cvec& phi, const ThermalPDM& pdm,
                          const InteractionSpec& v, bool vacuum_completion) {
  require(pdm.count() == 0 || pdm.grid == grid, "thermal modes live on a different grid");
  require(phi.size() == grid.size(), "phi size does not match grid");
  ModeState s;
  s.grid = grid;
  s.phi = phi;
  s.interaction = v;
  s.thermal_count = pdm.count();
  s.discarded_trace = pdm.discarded_trace;
  const long n = grid.size();
  cmat psi = coeff_cols(grid, pdm.modes);
  int total = pdm.count();
  if (vacuum_completion) total = static_cast<int>(n);
  s.a.resize(n, total);
  s.a.leftCols(pdm.count()) = psi;
  s.weights = rvec::Zero(total);
  s.weights.head(pdm.count()) = pdm.weights;
  if (vacuum_completion && total > pdm.count()) {
    // orthonormal completion of the thermal modes
    cmat q;
    if (pdm.count() > 0) {
      Eigen::HouseholderQR<cmat> qr(psi);
      q = qr.householderQ();
    } else {
      q = cmat::Identity(n, n);
    }
    s.a.rightCols(total - pdm.count()) = q.rightCols(total - pdm.count());
  }
  s.b = cmat::Zero(n, total);
  return s;
}

DenseState make_dense_state(const Grid& grid, const cvec& phi, const ThermalPDM& pdm,
                            const InteractionSpec& v) {
  DenseState s;
  s.phi = phi;
  s.interaction = v;
  s.pdm = DensePDM(grid);
  if (pdm.count() > 0) {
    cmat psi = coeff_cols(grid, pdm.modes);
    s.pdm.gamma = psi * pdm.weights.cast<cplx>().asDiagonal() * psi.adjoint();
  }
  return s;
}

DensePDM reconstruct(const ModeState& s) {
  DensePDM d(s.grid);
  cvec wa = s.weights.cast<cplx>();
  cvec wb = (s.weights.array() + 1.0).matrix().cast<cplx>();
  d.gamma = s.a * wa.asDiagonal() * s.a.adjoint() + s.b * wb.asDiagonal() * s.b.adjoint();
  d.alpha = s.a * wa.asDiagonal() * s.b.transpose() + s.b * wb.asDiagonal() * s.a.transpose();
  return d;
}

FieldSources FieldSources::from_modes(const ModeState& s, double scale) {
  FieldSources f;
  const long n = s.grid.size();
  std::vector<int> occ;
  for (int j = 0; j < s.count(); ++j)
    if (s.weights[j] != 0.0) occ.push_back(j);
  const int m = s.count(), k = static_cast<int>(occ.size());
  f.C.resize(n, k + m);
  f.wc.resize(k + m);
  f.X.resize(n, k + m);
  f.Y.resize(n, k + m);
  f.wx.resize(k + m);
  for (int i = 0; i < k; ++i) {
    f.C.col(i) = s.a.col(occ[i]);
    f.wc[i] = scale * s.weights[occ[i]];
    f.X.col(i) = s.a.col(occ[i]);
    f.Y.col(i) = s.b.col(occ[i]);
    f.wx[i] = scale * s.weights[occ[i]];
  }
  f.C.rightCols(m) = s.b;
  f.X.rightCols(m) = s.b;
  f.Y.rightCols(m) = s.a;
  for (int j = 0; j < m; ++j) {
    f.wc[k + j] = scale * (1.0 + s.weights[j]);
    f.wx[k + j] = scale * (1.0 + s.weights[j]);
  }
  f.P = s.phi;
  f.wp = rvec::Constant(1, scale);
  return f;
}

void FieldSources::append(const FieldSources& o) {
  auto cat = [](cmat& a, const cmat& b) {
    if (a.size() == 0) { a = b; return; }
    cmat t(a.rows(), a.cols() + b.cols());
    t << a, b;
    a = std::move(t);
  };
  auto catv = [](rvec& a, const rvec& b) {
    rvec t(a.size() + b.size());
    t << a, b;
    a = std::move(t);
  };
  cat(C, o.C); catv(wc, o.wc);
  cat(X, o.X); cat(Y, o.Y); catv(wx, o.wx);
  cat(P, o.P); catv(wp, o.wp);
}

MeanField::MeanField(const PairPotential& pp, FieldSources src, FieldStrategy strat)
    : pp_(pp), src_(std::move(src)) {
  const long n = pp.grid().size();
  dense_ = strat == FieldStrategy::Dense ||
           (strat == FieldStrategy::Auto && src_.rank() * 8 >= n);
  auto density = [&](const cmat& c, const rvec& w) {
    rvec rho = rvec::Zero(n);
    for (Eigen::Index m = 0; m < c.cols(); ++m) rho += w[m] * c.col(m).cwiseAbs2();
    return rho;
  };
  const double inv = pp.inv_N();
  direct_g_ = inv * pp.convolve(density(src_.C, src_.wc).cast<cplx>()).real();
  direct_phi_ = inv * pp.convolve(density(src_.P, src_.wp).cast<cplx>()).real();
  if (!dense_) return;
  V_ = pp.matrix();
  cmat Vc = V_.cast<cplx>();
  cmat G = src_.C * src_.wc.cast<cplx>().asDiagonal() * src_.C.adjoint();
  cmat Gp = src_.P * src_.wp.cast<cplx>().asDiagonal() * src_.P.adjoint();
  cmat A = src_.X * src_.wx.cast<cplx>().asDiagonal() * src_.Y.transpose() +
           src_.P * src_.wp.cast<cplx>().asDiagonal() * src_.P.transpose();
  Bg_ = inv * Vc.cwiseProduct(G);
  Bg_.diagonal() += direct_g_.cast<cplx>();
  Bphi_ = inv * Vc.cwiseProduct(Gp);
  Bphi_.diagonal() += direct_phi_.cast<cplx>();
  K_ = inv * Vc.cwiseProduct(A);
}

cmat MeanField::apply_b(const cmat& f, bool with_phi) const {
  if (dense_) {
    cmat out = Bg_ * f;
    if (with_phi) out += Bphi_ * f;
    return out;
  }
  const double inv = pp_.inv_N();
  rvec direct = with_phi ? rvec(direct_g_ + direct_phi_) : direct_g_;
  cmat out = direct.cast<cplx>().asDiagonal() * f;
  auto exchange = [&](const cmat& c, const rvec& w) {
    for (Eigen::Index m = 0; m < c.cols(); ++m) {
      if (w[m] == 0.0) continue;
      for (Eigen::Index j = 0; j < f.cols(); ++j) {
        cvec u = c.col(m).conjugate().cwiseProduct(f.col(j));
        out.col(j) += (inv * w[m]) * c.col(m).cwiseProduct(pp_.convolve(u));
      }
    }
  };
  exchange(src_.C, src_.wc);
  if (with_phi) exchange(src_.P, src_.wp);
  return out;
}

cmat MeanField::apply_k(const cmat& g) const {
  if (dense_) return K_ * g;
  const double inv = pp_.inv_N();
  cmat out = cmat::Zero(g.rows(), g.cols());
  auto pair = [&](const cmat& x, const cmat& y, const rvec& w) {
    for (Eigen::Index m = 0; m < x.cols(); ++m) {
      if (w[m] == 0.0) continue;
      for (Eigen::Index j = 0; j < g.cols(); ++j) {
        cvec u = y.col(m).cwiseProduct(g.col(j));
        out.col(j) += (inv * w[m]) * x.col(m).cwiseProduct(pp_.convolve(u));
      }
    }
  };
  pair(src_.X, src_.Y, src_.wx);
  pair(src_.P, src_.P, src_.wp);
  return out;
}

cvec mean_field_exchange_apply(const PairPotential& pp, const DensePDM& pdm, const cvec& f) {
  return pp.inv_N() * pp.matrix().cast<cplx>().cwiseProduct(pdm.gamma) * f;
}

cvec mean_field_exchange_apply(const PairPotential& pp, const ModeState& s, const cvec& f) {
  FieldSources src = FieldSources::from_modes(s);
  src.P.resize(s.grid.size(), 0);
  src.wp.resize(0);
  MeanField mf(pp, src, FieldStrategy::ModeWise);
  // remove the direct part: b(gamma) f - N^{-1}(v * rho) f
  cmat bf = mf.apply_b(f, false);
  rvec rho = rvec::Zero(f.size());
  for (Eigen::Index m = 0; m < src.C.cols(); ++m) rho += src.wc[m] * src.C.col(m).cwiseAbs2();
  rvec direct = pp.inv_N() * pp.convolve(rho.cast<cplx>()).real();
  return bf.col(0) - direct.cast<cplx>().cwiseProduct(f);
}

cvec pairing_apply(const PairPotential& pp, const DensePDM& pdm, const cvec& phi, const cvec& f) {
  cmat a = pdm.alpha + phi * phi.transpose();
  return pp.inv_N() * pp.matrix().cast<cplx>().cwiseProduct(a) * f.conjugate();
}

cvec pairing_apply(const PairPotential& pp, const ModeState& s, const cvec& f) {
  MeanField mf(pp, FieldSources::from_modes(s), FieldStrategy::ModeWise);
  return mf.apply_k(f.conjugate()).col(0);
}

// ---------------------------------------------------------------- dense integrator

namespace {

struct DenseRhs {
  rmat K;
  rmat V;
  double inv_N;

  DenseRhs(const Grid& g, const InteractionSpec& v)
      : K(kinetic_matrix(g)), V(PairPotential(g, v).matrix()), inv_N(1.0 / v.N_scale) {}

  cmat b_of(const cmat& G) const {
    cmat b = inv_N * V.cast<cplx>().cwiseProduct(G);
    b.diagonal() += (inv_N * (V * G.diagonal().real())).cast<cplx>();
    return b;
  }

  void operator()(const cvec& phi, const cmat& G, const cmat& A, cvec& dphi, cmat& dG,
                  cmat& dA) const {
    cmat Kc = K.cast<cplx>();
    cmat Gphi = G + phi * phi.adjoint();
    cmat Aphi = A + phi * phi.transpose();
    cmat hG = Kc + b_of(G);
    cmat hGamma = Kc + b_of(Gphi);
    cmat k = inv_N * V.cast<cplx>().cwiseProduct(Aphi);
    const cplx mi(0.0, -1.0);
    dphi = mi * (hG * phi + k * phi.conjugate());
    cmat kAs = k * A.adjoint();
    dG = mi * (hGamma * G - G * hGamma + kAs - kAs.adjoint());
    cmat hA = hGamma * A;
    dA = mi * (hA + hA.transpose() + k * G.conjugate() + G * k + k);
  }
};

DenseState step_dense_ctx(const DenseRhs& f, const DenseState& s, double dt, StepStats* stats) {
  const cvec& p0 = s.phi;
  const cmat& G0 = s.pdm.gamma;
  const cmat& A0 = s.pdm.alpha;
  cvec k1p, k2p, k3p, k4p;
  cmat k1g, k2g, k3g, k4g, k1a, k2a, k3a, k4a;
  f(p0, G0, A0, k1p, k1g, k1a);
  f(p0 + 0.5 * dt * k1p, G0 + 0.5 * dt * k1g, A0 + 0.5 * dt * k1a, k2p, k2g, k2a);
  f(p0 + 0.5 * dt * k2p, G0 + 0.5 * dt * k2g, A0 + 0.5 * dt * k2a, k3p, k3g, k3a);
  f(p0 + dt * k3p, G0 + dt * k3g, A0 + dt * k3a, k4p, k4g, k4a);
  DenseState out = s;
  out.phi = p0 + dt / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
  cmat G = G0 + dt / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
  cmat A = A0 + dt / 6.0 * (k1a + 2.0 * k2a + 2.0 * k3a + k4a);
  double drift = std::max(max_abs(G - G.adjoint()), max_abs(A - A.transpose()));
  if (drift > 1e-8)
    throw InvariantError("dense HFB step: symmetry drift " + std::to_string(drift));
  out.pdm.gamma = 0.5 * (G + G.adjoint());
  out.pdm.alpha = 0.5 * (A + A.transpose());
  if (stats) stats->symmetry_drift = std::max(stats->symmetry_drift, drift);
  return out;
}

}  // namespace

DenseState step_dense(const DenseState& s, double dt, StepStats* stats) {
  DenseRhs f(s.grid(), s.interaction);
  return step_dense_ctx(f, s, dt, stats);
}

DenseState run_dense(DenseState s, double dt, double t_end, int every, const DenseObserver& obs,
                     StepStats* stats) {
  require(dt > 0.0, "time step must be positive");
  require(s.grid().size() <= 4096, "dense HFB integrator is limited to small grids");
  DenseRhs f(s.grid(), s.interaction);
  const long steps = std::lround(t_end / dt);
  if (obs) obs(0.0, s);
  for (long k = 1; k <= steps; ++k) {
    s = step_dense_ctx(f, s, dt, stats);
    if (obs && (k % every == 0 || k == steps)) obs(k * dt, s);
  }
  return s;
}

// ---------------------------------------------------------------- mode integrator

namespace {

void kinetic_half(ModeState& s, double t) {
  s.phi = free_evolve(s.grid, s.phi, t);
  if (s.count() > 0) {
    s.a = free_evolve_cols(s.grid, s.a, t);
    s.b = free_evolve_cols(s.grid, s.b, t);
  }
}

// exp(dt L) for the frozen real-linear generator, summed as a Taylor series.
ModeState frozen_step(const MeanField& mf, const ModeState& s, double dt, int* terms) {
  const cplx mi(0.0, -1.0);
  const long n = s.grid.size();
  const int m = s.count();
  ModeState out = s;
  cvec tp = s.phi;
  cmat ab(n, 2 * m);
  ab << s.a, s.b;
  cmat tab = ab;
  double scale = std::max({tp.norm(), ab.norm(), 1e-300});
  int k = 1;
  for (; k < 80; ++k) {
    double c = dt / k;
    cvec np = c * mi * (mf.apply_b(tp, false).col(0) + mf.apply_k(tp.conjugate()).col(0));
    cmat nab(n, 2 * m);
    if (m > 0) {
      cmat swapped(n, 2 * m);
      swapped << tab.rightCols(m).conjugate(), tab.leftCols(m).conjugate();
      nab = c * mi * (mf.apply_b(tab, true) + mf.apply_k(swapped));
    }
    tp = np;
    tab = nab;
    out.phi += tp;
    if (m > 0) {
      out.a += tab.leftCols(m);
      out.b += tab.rightCols(m);
    }
    double sz = std::max(tp.norm(), m > 0 ? tab.norm() : 0.0);
    if (sz <= 1e-17 * scale) break;
  }
  if (k >= 80) throw InvariantError("mode step: Taylor series did not converge; reduce dt");
  if (terms) *terms = std::max(*terms, k);
  return out;
}

}  // namespace

double mode_probe_defect(const ModeState& s) {
  const int m = s.count();
  if (m == 0) return 0.0;
  std::vector<int> idx = {0, m / 3, m / 2, m - 1};
  if (s.thermal_count > 1) idx.push_back(s.thermal_count - 1);
  double defect = 0.0;
  for (int i : idx) {
    for (int j : idx) {
      cplx g = s.a.col(i).dot(s.a.col(j)) - std::conj(s.b.col(i).dot(s.b.col(j)));
      if (i == j) g -= 1.0;
      defect = std::max(defect, std::abs(g));
    }
  }
  return defect;
}

ModeState step_modes(const ModeState& s, double dt, const ModeStepOptions& opt, StepStats* stats) {
  PairPotential pp(s.grid, s.interaction);
  ModeState s1 = s;
  kinetic_half(s1, 0.5 * dt);
  int terms = 0;
  FieldSources f0 = FieldSources::from_modes(s1, 0.5);
  ModeState pred;
  {
    FieldSources full = FieldSources::from_modes(s1, 1.0);
    MeanField mf0(pp, full, opt.strategy);
    pred = frozen_step(mf0, s1, dt, &terms);
  }
  f0.append(FieldSources::from_modes(pred, 0.5));
  MeanField mid(pp, f0, opt.strategy);
  ModeState s2 = frozen_step(mid, s1, dt, &terms);
  kinetic_half(s2, 0.5 * dt);
  if (stats) stats->taylor_terms = std::max(stats->taylor_terms, terms);
  return s2;
}

ModeState run_modes(ModeState s, double dt, double t_end, int every, const ModeObserver& obs,
                    const ModeStepOptions& opt, StepStats* stats, int check_every) {
  require(dt > 0.0, "time step must be positive");
  const long steps = std::lround(t_end / dt);
  if (obs) obs(0.0, s);
  for (long k = 1; k <= steps; ++k) {
    s = step_modes(s, dt, opt, stats);
    if (check_every > 0 && (k % check_every == 0 || k == steps)) {
      double d = mode_probe_defect(s);
      if (stats) stats->probe_defect = std::max(stats->probe_defect, d);
      if (d > opt.probe_tol)
        throw InvariantError("mode integrator: Gram relation defect " + std::to_string(d) +
                             " at step " + std::to_string(k));
    }
    if (obs && (k % every == 0 || k == steps)) obs(k * dt, s);
  }
  return s;
}

ThermalPDM free_conjugate(const ThermalPDM& pdm, double t) {
  ThermalPDM out = pdm;
  if (pdm.count() > 0) out.modes = free_evolve_cols(pdm.grid, pdm.modes, t);
  return out;
}

DensePDM free_conjugate(const DensePDM& pdm, double t) {
  DensePDM out = pdm;
  cmat ug = free_evolve_cols(pdm.grid, pdm.gamma, t);
  out.gamma = free_evolve_cols(pdm.grid, cmat(ug.adjoint()), t).adjoint();
  cmat ua = free_evolve_cols(pdm.grid, pdm.alpha, t);
  out.alpha = free_evolve_cols(pdm.grid, cmat(ua.transpose()), t).transpose();
  return out;
}

// ---------------------------------------------------------------- energy

namespace {

EnergyParts dense_energy(const Grid& grid, const InteractionSpec& v, const cvec& phi,
                         const cmat& G, const cmat& A) {
  rmat K = kinetic_matrix(grid);
  PairPotential pp(grid, v);
  rmat V = pp.matrix();
  const double inv = pp.inv_N();
  EnergyParts e;
  e.kinetic = (K.cast<cplx>() * G).trace().real() + phi.dot(K.cast<cplx>() * phi).real();
  rvec phi2 = phi.cwiseAbs2();
  rvec rho = G.diagonal().real();
  cmat Vc = V.cast<cplx>();
  cmat xphi = Vc.cwiseProduct(phi * phi.adjoint());
  e.condensate = inv * ((V * phi2).dot(rho) + (xphi.cwiseProduct(G.transpose())).sum().real());
  e.cloud = 0.5 * inv * (rho.dot(V * rho) + V.cwiseProduct(G.cwiseAbs2()).sum());
  cmat Aphi = A + phi * phi.transpose();
  e.pairing = 0.5 * inv * V.cwiseProduct(Aphi.cwiseAbs2()).sum();
  return e;
}

}  // namespace

EnergyParts hfb_energy(const DenseState& s) {
  return dense_energy(s.grid(), s.interaction, s.phi, s.pdm.gamma, s.pdm.alpha);
}

EnergyParts hfb_energy(const ModeState& s, FieldStrategy strat) {
  const long n = s.grid.size();
  FieldSources src = FieldSources::from_modes(s);
  bool dense = strat == FieldStrategy::Dense ||
               (strat == FieldStrategy::Auto && src.rank() * 8 >= n);
  if (dense) {
    DensePDM d = reconstruct(s);
    return dense_energy(s.grid, s.interaction, s.phi, d.gamma, d.alpha);
  }
  PairPotential pp(s.grid, s.interaction);
  const double inv = pp.inv_N();
  const rvec k2 = kinetic_symbol(s.grid);
  const Fourier& ft = fourier_for(s.grid);
  EnergyParts e;
  auto kin = [&](const cvec& c) { return c.dot(ft.apply_symbol(c, k2)).real(); };
  e.kinetic = kin(s.phi);
  rvec rho = rvec::Zero(n);
  for (Eigen::Index m = 0; m < src.C.cols(); ++m) {
    e.kinetic += src.wc[m] * kin(src.C.col(m));
    rho += src.wc[m] * src.C.col(m).cwiseAbs2();
  }
  rvec phi2 = s.phi.cwiseAbs2();
  rvec vphi = pp.convolve(phi2.cast<cplx>()).real();
  rvec vrho = pp.convolve(rho.cast<cplx>()).real();
  double cond = vphi.dot(rho), cloud = rho.dot(vrho);
  for (Eigen::Index m = 0; m < src.C.cols(); ++m) {
    const cvec& c = src.C.col(m);
    cvec u = s.phi.conjugate().cwiseProduct(c);
    cond += src.wc[m] * c.dot(s.phi.cwiseProduct(pp.convolve(u))).real();
    for (Eigen::Index q = 0; q < src.C.cols(); ++q) {
      const cvec& d = src.C.col(q);
      cvec w = d.conjugate().cwiseProduct(c);
      cloud += src.wc[m] * src.wc[q] * c.dot(d.cwiseProduct(pp.convolve(w))).real();
    }
  }
  e.condensate = inv * cond;
  e.cloud = 0.5 * inv * cloud;
  // alpha^phi = sum_k u_k x_k y_k^T, phi phi^T included
  cmat X(n, src.X.cols() + 1), Y(n, src.Y.cols() + 1);
  X << src.X, s.phi;
  Y << src.Y, s.phi;
  rvec u(src.wx.size() + 1);
  u << src.wx, 1.0;
  double pair = 0.0;
  for (Eigen::Index k = 0; k < X.cols(); ++k) {
    if (u[k] == 0.0) continue;
    for (Eigen::Index q = 0; q < X.cols(); ++q) {
      if (u[q] == 0.0) continue;
      cvec xx = X.col(k).cwiseProduct(X.col(q).conjugate());
      cvec yy = Y.col(k).cwiseProduct(Y.col(q).conjugate());
      pair += u[k] * u[q] * (xx.array() * pp.convolve(yy).array()).sum().real();
    }
  }
  e.pairing = 0.5 * inv * pair;
  return e;
}

double particle_number(const DenseState& s) {
  return s.phi.squaredNorm() + s.pdm.gamma.trace().real();
}

double particle_number(const ModeState& s) {
  double n = s.phi.squaredNorm() + s.discarded_trace;
  for (int j = 0; j < s.count(); ++j)
    n += s.weights[j] * s.a.col(j).squaredNorm() + (1.0 + s.weights[j]) * s.b.col(j).squaredNorm();
  return n;
}

}  // namespace bose
