#include "bosedyn/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>

#include "bosedyn/error.hpp"
#include "bosedyn/hartree.hpp"

namespace bose {

LowRankHermitian LowRankHermitian::of(const ModeState& s) {
  LowRankHermitian h;
  const long n = s.grid.size();
  int occ = 0;
  for (int j = 0; j < s.count(); ++j) occ += s.weights[j] != 0.0;
  h.F.resize(n, occ + s.count());
  h.w.resize(occ + s.count());
  int c = 0;
  for (int j = 0; j < s.count(); ++j) {
    if (s.weights[j] == 0.0) continue;
    h.F.col(c) = s.a.col(j);
    h.w[c++] = s.weights[j];
  }
  for (int j = 0; j < s.count(); ++j) {
    h.F.col(c) = s.b.col(j);
    h.w[c++] = 1.0 + s.weights[j];
  }
  return h;
}

LowRankHermitian LowRankHermitian::of(const ThermalPDM& pdm) {
  LowRankHermitian h;
  h.F = std::sqrt(pdm.grid.cell_volume()) * pdm.modes;
  h.w = pdm.weights;
  return h;
}

LowRankHermitian LowRankHermitian::of_phi(const cvec& phi) {
  LowRankHermitian h;
  h.F = phi;
  h.w = rvec::Ones(1);
  return h;
}

LowRankHermitian LowRankHermitian::plus(const LowRankHermitian& o) const {
  LowRankHermitian h;
  if (F.cols() == 0) return o;
  if (o.F.cols() == 0) return *this;
  require(F.rows() == o.F.rows(), "operators act on different grids");
  h.F.resize(F.rows(), F.cols() + o.F.cols());
  h.F << F, o.F;
  h.w.resize(w.size() + o.w.size());
  h.w << w, o.w;
  return h;
}

LowRankHermitian LowRankHermitian::minus(const LowRankHermitian& o) const {
  LowRankHermitian neg = o;
  neg.w = -o.w;
  return plus(neg);
}

cmat LowRankHermitian::dense() const {
  return F * w.cast<cplx>().asDiagonal() * F.adjoint();
}

double trace_norm(const cmat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<cmat> es(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

double trace_norm(const LowRankHermitian& h, long dense_limit) {
  const long n = h.F.rows(), r = h.F.cols();
  if (r == 0) return 0.0;
  if (r >= n) {
    if (n > dense_limit)
      throw ConfigError("trace norm: factor rank " + std::to_string(r) + " on " + std::to_string(n) +
                        " grid points exceeds the dense fallback; subsample with a probe basis");
    return trace_norm(h.dense());
  }
  Eigen::HouseholderQR<cmat> qr(h.F);
  cmat R = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
  return trace_norm(cmat(R * h.w.cast<cplx>().asDiagonal() * R.adjoint()));
}

double trace_distance(const DensePDM& a, const DensePDM& b) {
  require(a.grid == b.grid, "trace distance between different grids");
  return trace_norm(cmat(a.gamma - b.gamma));
}

namespace {

double low_rank_distance(const LowRankHermitian& a, const LowRankHermitian& b) {
  // above full rank, subtract the dense operators so equal inputs give exactly zero
  if (a.F.cols() + b.F.cols() >= a.F.rows() && a.F.rows() <= 4096 && a.F.cols() && b.F.cols())
    return trace_norm(cmat(a.dense() - b.dense()));
  return trace_norm(a.minus(b));
}

}  // namespace

double trace_distance(const ModeState& a, const ModeState& b) {
  require(a.grid == b.grid, "trace distance between different grids");
  return low_rank_distance(LowRankHermitian::of(a), LowRankHermitian::of(b));
}

double trace_distance(const ModeState& a, const DensePDM& b) {
  require(a.grid == b.grid, "trace distance between different grids");
  return trace_norm(cmat(LowRankHermitian::of(a).dense() - b.gamma));
}

double trace_distance(const ModeState& a, const ThermalPDM& b) {
  require(b.count() == 0 || a.grid == b.grid, "trace distance between different grids");
  return low_rank_distance(LowRankHermitian::of(a), LowRankHermitian::of(b));
}

double alpha_hs_norm(const DensePDM& d) { return d.alpha.norm(); }

double alpha_hs_norm(const ModeState& s) {
  FieldSources src = FieldSources::from_modes(s);
  if (src.X.cols() == 0) return 0.0;
  // ||X U Y^T||_F^2 = sum_{k,q} u_k u_q (X^* X)_{qk} (Y^* Y)_{qk}
  cmat gx = src.X.adjoint() * src.X;
  cmat gy = src.Y.adjoint() * src.Y;
  cmat u = (src.wx * src.wx.transpose()).cast<cplx>();
  double v = u.cwiseProduct(gx).cwiseProduct(gy).sum().real();
  return std::sqrt(std::max(v, 0.0));
}

double sup_kernel(const DensePDM& d) {
  if (d.gamma.size() == 0) return 0.0;
  return d.gamma.cwiseAbs().maxCoeff() / d.grid.cell_volume();
}

double sup_kernel_bound(const ModeState& s) {
  double b = 0.0;
  for (int j = 0; j < s.count(); ++j) {
    if (s.weights[j] != 0.0) b += s.weights[j] * s.a.col(j).cwiseAbs2().maxCoeff();
    b += (1.0 + s.weights[j]) * s.b.col(j).cwiseAbs2().maxCoeff();
  }
  return b / s.grid.cell_volume();
}

double sup_kernel_bound(const ThermalPDM& pdm) {
  double b = 0.0;
  for (int j = 0; j < pdm.count(); ++j) b += pdm.weights[j] * pdm.modes.col(j).cwiseAbs2().maxCoeff();
  return b;
}

double fourier_kernel_bound(const ModeState& s) {
  const Fourier& ft = fourier_for(s.grid);
  const double scale = s.grid.momentum_cell() / std::sqrt(s.grid.cell_volume());
  auto l1sq = [&](const cvec& c) {
    double l1 = ft.to_momentum(c).cwiseAbs().sum() * scale;
    return l1 * l1;
  };
  double b = 0.0;
  for (int j = 0; j < s.count(); ++j) {
    if (s.weights[j] != 0.0) b += s.weights[j] * l1sq(s.a.col(j));
    if (s.b.col(j).squaredNorm() > 0.0) b += (1.0 + s.weights[j]) * l1sq(s.b.col(j));
  }
  return b / std::pow(2 * kPi, s.grid.dim);
}

double fourier_kernel_bound(const DensePDM& d) {
  // gamma^ = F G F^* on function samples; coefficients carry dx^{d/2} on each side
  const Fourier& ft = fourier_for(d.grid);
  const long n = d.grid.size();
  cmat left(n, n);
  for (long j = 0; j < n; ++j) left.col(j) = ft.to_momentum(d.gamma.col(j));
  cmat both(n, n);
  cmat la = left.adjoint();
  for (long j = 0; j < n; ++j) both.col(j) = ft.to_momentum(la.col(j));
  const double dk = d.grid.momentum_cell();
  return both.cwiseAbs().sum() * dk * dk / d.grid.cell_volume() / std::pow(2 * kPi, d.grid.dim);
}

double positivity_margin(const DensePDM& d) {
  const long n = d.gamma.rows();
  cmat g(2 * n, 2 * n);
  g << d.gamma, d.alpha, d.alpha.conjugate(), cmat::Identity(n, n) + d.gamma.conjugate();
  Eigen::SelfAdjointEigenSolver<cmat> es(0.5 * (g + g.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

void ComparisonReport::validate() const {
  const std::size_t n = times.size();
  auto check = [&](const std::vector<double>& v, const char* name, bool optional) {
    if (optional && v.empty()) return;
    if (v.size() != n)
      throw InvariantError(std::string("comparison report: column ") + name + " has wrong length");
    for (double x : v)
      if (!(x >= 0.0)) throw InvariantError(std::string("comparison report: negative ") + name);
  };
  check(gamma_trace_dist, "gamma_trace_dist", false);
  check(phi_l2_dist, "phi_l2_dist", false);
  check(alpha_hs, "alpha_hs", false);
  check(omega_trace_dist, "omega_trace_dist", true);
  check(sup_kernel, "sup_kernel", false);
  check(fourier_bound, "fourier_bound", true);
  if (!positivity.empty() && positivity.size() != n)
    throw InvariantError("comparison report: column positivity has wrong length");
}

double max_closeness_ratio(const std::vector<double>& times, const std::vector<double>& dist,
                           double scale, double c_hat) {
  require(times.size() == dist.size(), "times and distances differ in length");
  require(scale > 0.0, "closeness normalizer must be positive");
  double best = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] <= 0.0) continue;
    best = std::max(best, dist[i] / (scale * times[i] * std::exp(c_hat * times[i])));
  }
  return best;
}

ClosenessRow closeness_row(const ComparisonReport& rep, double c_hat) {
  ClosenessRow row;
  row.N = rep.norm.N;
  row.T_c = rep.norm.T_c;
  const double tc34 = std::pow(rep.norm.T_c, 0.75);
  row.ratio_gamma = max_closeness_ratio(rep.times, rep.gamma_trace_dist, std::sqrt(rep.norm.N) * tc34,
                                        c_hat);
  row.ratio_phi = max_closeness_ratio(rep.times, rep.phi_l2_dist, tc34, c_hat);
  return row;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i]; sy += y[i]; sxx += x[i] * x[i]; sxy += x[i] * y[i];
  }
  double den = n * sxx - sx * sx;
  return den > 0 ? (n * sxy - sx * sy) / den : 0.0;
}

ClosenessFit closeness_fit(const std::vector<ClosenessRow>& rows, double zero_floor) {
  if (rows.size() < 3) throw ConfigError("closeness sweep needs at least three values of N");
  auto slope = [&](auto get) {
    std::vector<double> x, y;
    bool all_zero = true;
    for (const auto& r : rows) {
      double v = get(r);
      if (v > zero_floor) all_zero = false;
    }
    if (all_zero) return 0.0;
    for (const auto& r : rows) {
      double v = get(r);
      if (!(v > 0.0)) throw InvariantError("closeness ratio vanishes for some N but not all");
      x.push_back(std::log(r.N));
      y.push_back(std::log(v));
    }
    return least_squares_slope(x, y);
  };
  ClosenessFit f;
  f.slope_gamma = slope([](const ClosenessRow& r) { return r.ratio_gamma; });
  f.slope_phi = slope([](const ClosenessRow& r) { return r.ratio_phi; });
  return f;
}

std::vector<double> diluteness_trajectory(const ComparisonReport& rep) {
  std::vector<double> out;
  const double s = std::pow(rep.norm.T_c, 1.5);
  for (double x : rep.sup_kernel) out.push_back(x / s);
  return out;
}

}  // namespace bose

namespace bose {

namespace {

struct References {
  ThermalPDM free0;
  FieldTrajectory hartree;
  MatrixTrajectory omega;
};

References make_references(const Grid& grid, const cvec& phi0, const cmat* gamma0,
                           const ThermalPDM* modes0, const InteractionSpec& v,
                           const CompareOptions& opt) {
  References r;
  if (modes0) r.free0 = *modes0;
  PropagationOptions po;
  po.save_every = opt.every;
  r.hartree = propagate_hartree(from_coeff(grid, phi0), v, opt.dt, opt.t_end, po);
  if (opt.omega) {
    cmat om = phi0 * phi0.adjoint();
    if (gamma0) om += *gamma0;
    r.omega = propagate_onebody_hartree(grid, om, v, opt.dt, opt.t_end, po);
  }
  return r;
}

void push_common(ComparisonReport& rep, const References& ref, std::size_t idx, double t,
                 const cvec& phi, const LowRankHermitian* g_low, const cmat* g_dense) {
  rep.times.push_back(t);
  rep.phi_l2_dist.push_back((phi - to_coeff(ref.hartree.frames.at(idx))).norm());
  if (!ref.omega.frames.empty()) {
    cmat d = phi * phi.adjoint() - ref.omega.frames.at(idx);
    d += g_dense ? *g_dense : g_low->dense();
    rep.omega_trace_dist.push_back(trace_norm(d));
  }
}

}  // namespace

ComparisonReport compare_dynamics(const ModeState& s0, const Normalizers& norm,
                                  const CompareOptions& opt) {
  // gamma_0 as a thermal list, rebuilt from the occupied a-modes (b = 0 initially)
  ThermalPDM th;
  th.grid = s0.grid;
  {
    std::vector<int> occ;
    for (int j = 0; j < s0.count(); ++j)
      if (s0.weights[j] != 0.0) occ.push_back(j);
    require(s0.b.norm() == 0.0, "comparison runs start from b = 0 thermal data");
    th.weights.resize(occ.size());
    th.modes.resize(s0.grid.size(), occ.size());
    for (std::size_t i = 0; i < occ.size(); ++i) {
      th.weights[i] = s0.weights[occ[i]];
      th.modes.col(i) = s0.a.col(occ[i]) / std::sqrt(s0.grid.cell_volume());
    }
  }
  cmat g0;
  if (opt.omega) g0 = LowRankHermitian::of(th).dense();
  References ref = make_references(s0.grid, s0.phi, opt.omega ? &g0 : nullptr, &th,
                                   s0.interaction, opt);
  ComparisonReport rep;
  rep.norm = norm;
  std::size_t idx = 0;
  run_modes(s0, opt.dt, opt.t_end, opt.every, [&](double t, const ModeState& s) {
    LowRankHermitian g = LowRankHermitian::of(s);
    push_common(rep, ref, idx++, t, s.phi, &g, nullptr);
    rep.gamma_trace_dist.push_back(trace_norm(g.minus(LowRankHermitian::of(free_conjugate(th, t)))));
    rep.alpha_hs.push_back(alpha_hs_norm(s));
    rep.sup_kernel.push_back(sup_kernel_bound(s));
    rep.fourier_bound.push_back(fourier_kernel_bound(s));
  }, opt.mode);
  rep.validate();
  return rep;
}

ComparisonReport compare_dynamics(const DenseState& s0, const Normalizers& norm,
                                  const CompareOptions& opt) {
  References ref = make_references(s0.grid(), s0.phi, &s0.pdm.gamma, nullptr, s0.interaction, opt);
  ComparisonReport rep;
  rep.norm = norm;
  std::size_t idx = 0;
  run_dense(s0, opt.dt, opt.t_end, opt.every, [&](double t, const DenseState& s) {
    push_common(rep, ref, idx++, t, s.phi, nullptr, &s.pdm.gamma);
    rep.gamma_trace_dist.push_back(trace_distance(s.pdm, free_conjugate(s0.pdm, t)));
    rep.alpha_hs.push_back(alpha_hs_norm(s.pdm));
    rep.sup_kernel.push_back(sup_kernel(s.pdm));
    rep.fourier_bound.push_back(fourier_kernel_bound(s.pdm));
    rep.positivity.push_back(positivity_margin(s.pdm));
  });
  rep.validate();
  return rep;
}

}  // namespace bose
