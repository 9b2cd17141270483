#include "bosedyn/hartree.hpp"

#include <cmath>
#include <limits>

#include "bosedyn/error.hpp"

namespace bose {

namespace {

double kinetic_energy(const Grid& g, const cvec& f) {
  cvec fh = fourier_for(g).to_momentum(f);
  return kinetic_symbol(g).dot(fh.cwiseAbs2()) * g.momentum_cell();
}

// g v * |f|^2 sampled on the grid (f as function samples)
rvec self_potential(const PairPotential& pp, const cvec& f, double g) {
  if (g == 0.0 || pp.is_zero()) return rvec::Zero(f.size());
  cvec mass = (f.cwiseAbs2() * pp.grid().cell_volume()).cast<cplx>();
  return g * pp.convolve(mass).real();
}

struct HartreeParts {
  double kinetic, trap, quartic;
};

HartreeParts hartree_parts(const Grid& grid, const cvec& f, const rvec& w, const PairPotential& pp) {
  const double dv = grid.cell_volume();
  HartreeParts p;
  p.kinetic = kinetic_energy(grid, f);
  p.trap = w.dot(f.cwiseAbs2()) * dv;
  p.quartic = self_potential(pp, f, 1.0).dot(f.cwiseAbs2()) * dv;
  return p;
}

}  // namespace

double hartree_energy(const Field& phi, const TrapSpec& trap, const InteractionSpec& v, double g) {
  if (std::abs(phi.norm() - 1.0) > 1e-8) throw ConfigError("hartree_energy expects a unit-norm field");
  PairPotential pp(phi.grid, v);
  auto p = hartree_parts(phi.grid, phi.values, trap_values(phi.grid, trap), pp);
  return p.kinetic + p.trap + 0.5 * g * p.quartic;
}

HartreeResult minimize_hartree(const Grid& grid, const TrapSpec& trap, const InteractionSpec& v,
                               double g, double grad_tol, const HartreeOptions& opt) {
  require(g >= 0.0, "coupling g must be nonnegative");
  require(grad_tol > 0.0, "gradient tolerance must be positive");
  if (v.shape == InteractionSpec::Shape::Gaussian)
    require(v.v0 >= 0.0 || g == 0.0, "attractive Gaussian interaction is not supported");
  const Fourier& ft = fourier_for(grid);
  const rvec k2 = kinetic_symbol(grid);
  const rvec w = trap_values(grid, trap);
  const double dv = grid.cell_volume();
  PairPotential pp(grid, v);

  cvec f(grid.size());
  if (opt.initial) {
    require(opt.initial->grid == grid, "initial guess on a different grid");
    f = opt.initial->values;
  } else {
    for (long i = 0; i < grid.size(); ++i) f[i] = std::exp(-0.5 * grid.radius_sq(i));
  }
  f /= std::sqrt(dv) * f.norm();

  auto energy = [&](const cvec& x) {
    auto p = hartree_parts(grid, x, w, pp);
    return p.kinetic + p.trap + 0.5 * g * p.quartic;
  };
  auto apply_H = [&](const cvec& x) -> cvec {
    cvec out = ft.apply_symbol(x, k2);
    out += (w + self_potential(pp, x, g)).cwiseProduct(x);
    return out;
  };

  HartreeResult res;
  const double e_max = grid.max_momentum_sq() + w.maxCoeff() + g * pp.sup_norm();
  double tau = 0.5 / e_max;
  // above 2 / e_max the top of the spectrum is amplified instead of damped
  const double tau_max = 1.9 / e_max;
  res.dt_imag = tau;
  res.g_coupling = g;
  double e = energy(f);
  double e_prev = e;
  double best_res = INFINITY;
  int stalled = 0;
  for (int it = 0; it < opt.max_iterations; ++it) {
    cvec hf = apply_H(f);
    cplx mu = dv * f.dot(hf);
    cvec r = hf - mu * f;
    double rn = std::sqrt(dv) * r.norm();
    res.iterations = it;
    res.residual = rn;
    if (rn <= grad_tol) {
      res.minimizer = Field(grid, f);
      res.energy = e;
      res.mu_H = mu.real();
      return res;
    }
    int halvings = 0;
    for (;;) {
      cvec trial = f - tau * r;
      trial /= std::sqrt(dv) * trial.norm();
      double et = energy(trial);
      // near the fixed point the decrease tau |r|^2 drops below roundoff of E
      if (et <= e + 64 * std::numeric_limits<double>::epsilon() * std::abs(e)) {
        e_prev = e;
        e = et;
        f = trial;
        tau = std::min(1.25 * tau, tau_max);
        break;
      }
      tau *= 0.5;
      if (++halvings > opt.max_halvings) {
        throw ConvergenceError("Hartree minimization: energy increase after step halving (E=" +
                                   std::to_string(e) + ", trial " + std::to_string(et) + ")",
                               rn);
      }
    }
    // flat energy with a residual that no longer improves means the flow is cycling
    if (rn < 0.999 * best_res) {
      best_res = rn;
      stalled = 0;
    } else if (std::abs(e_prev - e) <= 1e-15 * std::abs(e)) {
      if (++stalled > 200) {
        throw ConvergenceError("Hartree minimization oscillates: last energies " +
                                   std::to_string(e_prev) + ", " + std::to_string(e),
                               rn);
      }
    }
  }
  throw ConvergenceError("Hartree minimization hit the iteration limit", res.residual);
}

FieldTrajectory propagate_hartree(const Field& phi0, const InteractionSpec& v, double dt,
                                  double t_end, const PropagationOptions& opt) {
  require(dt > 0.0 && t_end >= 0.0, "time step must be positive");
  const Grid& grid = phi0.grid;
  const Fourier& ft = fourier_for(grid);
  PairPotential pp(grid, v);
  const rvec w = opt.trap_on ? trap_values(grid, opt.trap) : rvec::Zero(grid.size());
  rvec k2 = kinetic_symbol(grid);
  cvec kin(grid.size());
  for (long i = 0; i < grid.size(); ++i) kin[i] = std::exp(cplx(0.0, -dt * k2[i]));

  auto half_potential = [&](cvec& f) {
    rvec u = w + self_potential(pp, f, pp.inv_N());
    for (long i = 0; i < f.size(); ++i) f[i] *= std::exp(cplx(0.0, -0.5 * dt * u[i]));
  };

  FieldTrajectory traj;
  cvec f = phi0.values;
  const double n0 = phi0.norm();
  traj.times.push_back(0.0);
  traj.frames.push_back(phi0);
  const long steps = std::lround(t_end / dt);
  for (long s = 1; s <= steps; ++s) {
    half_potential(f);
    f = ft.apply_symbol(f, kin);
    half_potential(f);
    double t = s * dt;
    if (s % opt.save_every == 0 || s == steps) {
      Field fr(grid, f);
      double drift = std::abs(fr.norm() - n0) / std::max(n0, 1e-300);
      if (drift > opt.norm_drift_tol * std::max(t, 1.0))
        throw InvariantError("Hartree propagation: norm drift " + std::to_string(drift) +
                             " at t=" + std::to_string(t) + "; reduce dt");
      traj.times.push_back(t);
      traj.frames.push_back(std::move(fr));
    }
  }
  return traj;
}

MatrixTrajectory propagate_onebody_hartree(const Grid& grid, const cmat& omega0,
                                           const InteractionSpec& v, double dt, double t_end,
                                           const PropagationOptions& opt) {
  require(dt > 0.0 && t_end >= 0.0, "time step must be positive");
  require(omega0.rows() == grid.size() && omega0.cols() == grid.size(),
          "omega size does not match grid");
  const Fourier& ft = fourier_for(grid);
  PairPotential pp(grid, v);
  const rvec w = opt.trap_on ? trap_values(grid, opt.trap) : rvec::Zero(grid.size());
  rvec k2 = kinetic_symbol(grid);
  cvec kin(grid.size());
  for (long i = 0; i < grid.size(); ++i) kin[i] = std::exp(cplx(0.0, -dt * k2[i]));

  auto half_potential = [&](cmat& om) {
    // diagonal of omega in the orthonormal basis is rho(x_i) dx^d
    cvec mass = om.diagonal().real().cast<cplx>();
    rvec u = w + pp.inv_N() * pp.convolve(mass).real();
    cvec ph(u.size());
    for (long i = 0; i < u.size(); ++i) ph[i] = std::exp(cplx(0.0, -0.5 * dt * u[i]));
    om = ph.asDiagonal() * om * ph.conjugate().asDiagonal();
  };
  auto kinetic = [&](cmat& om) {
    cmat a = ft.apply_symbol_cols(om, kin);
    cmat b = ft.apply_symbol_cols(cmat(a.adjoint()), kin);
    om = b.adjoint();
  };

  MatrixTrajectory traj;
  traj.grid = grid;
  cmat om = omega0;
  const double tr0 = om.trace().real();
  traj.times.push_back(0.0);
  traj.frames.push_back(om);
  const long steps = std::lround(t_end / dt);
  for (long s = 1; s <= steps; ++s) {
    half_potential(om);
    kinetic(om);
    half_potential(om);
    double t = s * dt;
    double drift = std::abs(om.trace().real() - tr0) / std::max(std::abs(tr0), 1e-300);
    if (drift > 1e-7)
      throw InvariantError("one-body Hartree flow: trace drift " + std::to_string(drift));
    if (s % opt.save_every == 0 || s == steps) {
      traj.times.push_back(t);
      traj.frames.push_back(om);
    }
  }
  return traj;
}

std::vector<double> fourier_l1_trajectory(const FieldTrajectory& traj) {
  std::vector<double> out;
  out.reserve(traj.frames.size());
  for (const auto& fr : traj.frames) {
    cvec fh = fourier_for(fr.grid).to_momentum(fr.values);
    out.push_back(fh.cwiseAbs().sum() * fr.grid.momentum_cell());
  }
  return out;
}

double log_growth_rate(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = std::min(t.size(), y.size());
  if (n < 2) return 0.0;
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double ly = std::log(y[i]);
    st += t[i]; sy += ly; stt += t[i] * t[i]; sty += t[i] * ly;
  }
  double den = n * stt - st * st;
  return den > 0 ? (n * sty - st * sy) / den : 0.0;
}

}  // namespace bose
