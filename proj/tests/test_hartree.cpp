#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "bosedyn/error.hpp"
#include "bosedyn/hartree.hpp"

using namespace bose;

namespace {

Field gaussian(const Grid& g, double width, double shift = 0.0, double kick = 0.0) {
  cvec f(g.size());
  for (long i = 0; i < g.size(); ++i) {
    double x = g.coord(i) - shift;
    f[i] = std::exp(-0.5 * x * x / (width * width)) * std::exp(cplx(0.0, kick * g.coord(i)));
  }
  Field out(g, f);
  out.values /= out.norm();
  return out;
}

double second_moment(const Field& f) {
  double s = 0;
  for (long i = 0; i < f.grid.size(); ++i) s += f.grid.radius_sq(i) * std::norm(f.values[i]);
  return s * f.grid.cell_volume();
}

double trace_norm(const cmat& a) {
  Eigen::SelfAdjointEigenSolver<cmat> es(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

// E = <phi,-Delta phi> + (1/2N) quartic, trap off
double flow_energy(const Field& f, const InteractionSpec& v) {
  double kin = hartree_energy(f, TrapSpec(2.0, 0.0), InteractionSpec::gaussian(0.0, 1.0), 0.0);
  double full = hartree_energy(f, TrapSpec(2.0, 0.0), v, 1.0 / v.N_scale);
  return kin + (full - kin);
}

}  // namespace

TEST_CASE("Hartree energy: linear case equals the ground level") {
  Grid g(1, 128, 10.0);
  auto sd = lowest_eigenpairs(g, TrapSpec(2.0), 2);
  Field psi0 = sd.field(0);
  psi0.values /= psi0.norm();
  CHECK(hartree_energy(psi0, TrapSpec(2.0), InteractionSpec::gaussian(1.0, 1.0), 0.0) ==
        doctest::Approx(sd.eigenvalues[0]).epsilon(1e-10));
  CHECK(hartree_energy(gaussian(g, 1.0), TrapSpec(2.0), InteractionSpec::gaussian(1.0, 1.0), 0.0) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("Hartree energy: quartic term against a double sum") {
  Grid g(1, 128, 10.0);
  Field f = gaussian(g, 1.0);
  double e = hartree_energy(f, TrapSpec(2.0), InteractionSpec::gaussian(1.0, 1.0), 1.0);
  const double dx = g.spacing();
  double q = 0;
  for (long i = 0; i < g.size(); ++i)
    for (long j = 0; j < g.size(); ++j) {
      double r = g.coord(i) - g.coord(j);
      q += std::norm(f.values[i]) * std::exp(-0.5 * r * r) * std::norm(f.values[j]);
    }
  q *= dx * dx;
  CHECK(e == doctest::Approx(1.0 + 0.5 * q).epsilon(1e-10));
  // |phi|^2 has variance 1/2, so the quartic term is 1/sqrt(2)
  CHECK(e == doctest::Approx(1.0 + 0.5 / std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("Hartree energy rejects unnormalized input") {
  Grid g(1, 32, 5.0);
  Field f = gaussian(g, 1.0);
  f.values *= 2.0;
  CHECK_THROWS_AS(hartree_energy(f, TrapSpec(2.0), InteractionSpec::gaussian(1.0, 1.0), 1.0),
                  ConfigError);
}

TEST_CASE("Hartree minimizer without interaction") {
  Grid g(1, 64, 8.0);
  auto sd = lowest_eigenpairs(g, TrapSpec(1.5), 2);
  auto res = minimize_hartree(g, TrapSpec(1.5), InteractionSpec::gaussian(1.0, 1.0), 0.0, 1e-9);
  Field psi0 = sd.field(0);
  double ov = std::abs(res.minimizer.dot(psi0)) / psi0.norm();
  CHECK(ov >= 1 - 1e-8);
  CHECK(res.energy == doctest::Approx(sd.eigenvalues[0]).epsilon(1e-10));
  CHECK(res.minimizer.norm() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(res.residual <= 1e-9);
  CHECK(res.dt_imag > 0.0);
}

TEST_CASE("Hartree minimizer against self-consistent field iteration") {
  Grid g(1, 128, 8.0);
  TrapSpec trap(2.0);
  auto v = InteractionSpec::gaussian(1.0, 1.0);
  auto res = minimize_hartree(g, trap, v, 1.0, 1e-9);
  double e0 = lowest_eigenpairs(g, trap, 1).eigenvalues[0];
  CHECK(res.energy >= e0);
  CHECK(res.mu_H >= res.energy);

  // oracle: dense SCF with linear density mixing, ground eigenvector each sweep
  const long n = g.size();
  const double dx = g.spacing();
  rmat h0 = dense_h(g, trap).real();
  rmat V(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      double r = g.coord(i) - g.coord(j);
      r -= 2 * g.half_length * std::round(r / (2 * g.half_length));
      V(i, j) = std::exp(-0.5 * r * r);
    }
  rvec rho = rvec::Zero(n);
  rvec u;
  for (int it = 0; it < 400; ++it) {
    rmat h = h0;
    h.diagonal() += V * rho * dx;
    Eigen::SelfAdjointEigenSolver<rmat> es(h);
    u = es.eigenvectors().col(0) / std::sqrt(dx);
    rvec nr = u.cwiseAbs2();
    if ((nr - rho).cwiseAbs().maxCoeff() < 1e-13) break;
    rho = 0.5 * rho + 0.5 * nr;
  }
  Field fu(g, u.cast<cplx>());
  CHECK(hartree_energy(fu, trap, v, 1.0) == doctest::Approx(res.energy).epsilon(1e-9));
  CHECK(std::abs(fu.dot(res.minimizer)) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("Hartree minimizer input validation") {
  Grid g(1, 32, 5.0);
  CHECK_THROWS_AS(minimize_hartree(g, TrapSpec(2.0), InteractionSpec::gaussian(1.0, 1.0), -1.0, 1e-8),
                  ConfigError);
  CHECK_THROWS_AS(minimize_hartree(g, TrapSpec(2.0), InteractionSpec::gaussian(-1.0, 1.0), 1.0, 1e-8),
                  ConfigError);
}

TEST_CASE("free Gaussian spreading") {
  Grid g(1, 512, 40.0);
  const double s0 = 1.0;
  auto traj = propagate_hartree(gaussian(g, s0), InteractionSpec::gaussian(0.0, 1.0), 0.01, 2.0,
                                {.save_every = 50});
  for (std::size_t k = 0; k < traj.frames.size(); ++k) {
    double t = traj.times[k];
    // i u_t = -u'' widens as sigma(t)^2 = sigma0^2 + 4 t^2 / sigma0^2, <x^2> = sigma^2 / 2
    double expect = 0.5 * (s0 * s0 + 4 * t * t / (s0 * s0));
    CHECK(second_moment(traj.frames[k]) == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("Hartree flow conserves norm and energy") {
  Grid g(1, 128, 16.0);
  auto v = InteractionSpec::gaussian(1.0, 1.0, 0.05);
  Field f0 = gaussian(g, 1.0, 0.5, 0.7);
  auto traj = propagate_hartree(f0, v, 2e-4, 1.0, {.save_every = 500});
  double e0 = flow_energy(f0, v);
  for (const auto& fr : traj.frames) {
    CHECK(std::abs(fr.norm() - 1.0) <= 1e-10);
    CHECK(flow_energy(fr, v) == doctest::Approx(e0).epsilon(1e-6));
  }
}

TEST_CASE("Strang splitting converges at second order") {
  Grid g(1, 128, 16.0);
  auto v = InteractionSpec::gaussian(3.0, 1.0, 0.2);
  Field f0 = gaussian(g, 1.0, 0.0, 1.0);
  auto end = [&](double dt) { return propagate_hartree(f0, v, dt, 0.5).frames.back().values; };
  cvec a = end(0.01), b = end(0.005), c = end(0.0025);
  double r = (a - b).norm() / (b - c).norm();
  CHECK(r == doctest::Approx(4.0).epsilon(0.1));
}

TEST_CASE("minimizer is stationary with the trap kept on") {
  Grid g(1, 64, 8.0);
  TrapSpec trap(2.0);
  const double gc = 0.5;
  auto v = InteractionSpec::gaussian(1.0, 1.0, 1.0 / gc);
  auto res = minimize_hartree(g, trap, v, gc, 1e-10);
  PropagationOptions opt;
  opt.trap_on = true;
  opt.trap = trap;
  auto traj = propagate_hartree(res.minimizer, v, 1e-3, 1.0, opt);
  const Field& ft = traj.frames.back();
  cplx phase = std::exp(cplx(0.0, -res.mu_H * 1.0));
  CHECK((ft.values - phase * res.minimizer.values).norm() * std::sqrt(g.spacing()) < 1e-6);
}

TEST_CASE("one-body Hartree flow: free conjugation") {
  Grid g(1, 32, 6.0);
  const long n = g.size();
  cmat x = cmat::Random(n, 3);
  cmat om = x * x.adjoint();
  auto traj = propagate_onebody_hartree(g, om, InteractionSpec::gaussian(0.0, 1.0), 0.01, 0.5);
  // oracle: U = exp(i Delta t) from the dense Laplacian
  cmat lap = dense_h(g, TrapSpec(2.0, 0.0));
  Eigen::SelfAdjointEigenSolver<cmat> es(lap);
  cvec ph(n);
  for (long i = 0; i < n; ++i) ph[i] = std::exp(cplx(0.0, -0.5 * es.eigenvalues()[i]));
  cmat U = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
  CHECK((traj.frames.back() - U * om * U.adjoint()).norm() <= 1e-10 * om.norm());
}

TEST_CASE("one-body Hartree flow: rank-1 consistency and invariants") {
  Grid g(1, 64, 10.0);
  auto v = InteractionSpec::gaussian(2.0, 1.0, 0.5);
  Field f0 = gaussian(g, 1.0, 0.3, 0.5);
  cvec c0 = f0.values * std::sqrt(g.spacing());
  cmat om0 = c0 * c0.adjoint();
  auto mt = propagate_onebody_hartree(g, om0, v, 1e-3, 1.0, {.save_every = 100});
  auto ft = propagate_hartree(f0, v, 1e-3, 1.0, {.save_every = 100});
  REQUIRE(mt.frames.size() == ft.frames.size());
  for (std::size_t k = 0; k < mt.frames.size(); ++k) {
    cvec c = ft.frames[k].values * std::sqrt(g.spacing());
    CHECK(trace_norm(mt.frames[k] - c * c.adjoint()) <= 1e-8);
  }

  cmat x = cmat::Random(g.size(), 4);
  cmat om = x * x.adjoint();
  om /= om.trace().real();
  auto tr = propagate_onebody_hartree(g, om, v, 1e-3, 1.0, {.save_every = 250});
  Eigen::SelfAdjointEigenSolver<cmat> e0(om, Eigen::EigenvaluesOnly);
  for (const auto& w : tr.frames) {
    CHECK((w - w.adjoint()).norm() <= 1e-10);
    CHECK(w.trace().real() == doctest::Approx(1.0).epsilon(1e-12));
    Eigen::SelfAdjointEigenSolver<cmat> es(w, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    CHECK((es.eigenvalues() - e0.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("Fourier L1 along free and interacting flows") {
  Grid g(1, 128, 16.0);
  Field f0 = gaussian(g, 1.0, 0.0, 0.5);
  auto free_t = propagate_hartree(f0, InteractionSpec::gaussian(0.0, 1.0), 0.01, 1.0,
                                  {.save_every = 10});
  auto l1 = fourier_l1_trajectory(free_t);
  cvec fh = fourier_for(g).to_momentum(f0.values);
  CHECK(l1[0] == doctest::Approx(fh.cwiseAbs().sum() * g.momentum_cell()).epsilon(1e-14));
  for (double x : l1) CHECK(x == doctest::Approx(l1[0]).epsilon(1e-6));
  CHECK(log_growth_rate(free_t.times, l1) == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));

  auto v = InteractionSpec::gaussian(5.0, 1.0, 0.1);
  auto it = propagate_hartree(f0, v, 1e-3, 1.0, {.save_every = 100});
  auto l1i = fourier_l1_trajectory(it);
  double rate = log_growth_rate(it.times, l1i);
  CHECK(std::isfinite(rate));
  CHECK(std::abs(l1i.back() / l1i.front() - 1.0) > 1e-6);
}

TEST_CASE("growth-rate fit recovers an exponential") {
  std::vector<double> t, y;
  for (int k = 0; k <= 10; ++k) {
    t.push_back(0.1 * k);
    y.push_back(3.0 * std::exp(0.7 * t.back()));
  }
  CHECK(log_growth_rate(t, y) == doctest::Approx(0.7).epsilon(1e-12));
}
