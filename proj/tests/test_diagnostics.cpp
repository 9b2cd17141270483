#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bosedyn/diagnostics.hpp"
#include "bosedyn/error.hpp"

using namespace bose;

namespace {

struct Instance {
  Grid grid;
  cvec phi;
  ThermalPDM pdm;
  InteractionSpec v;
  Normalizers norm;
};

Instance standard(double v0 = 1.0) {
  Instance in;
  in.grid = Grid(1, 32, 8.0);
  TrapSpec trap(2.0);
  auto sd = all_eigenpairs(in.grid, trap);
  ThermalModel m;
  m.trap = trap;
  m.N_total = 20.0;
  m.temperature = 1.0;
  m.chemical_potential = solve_chemical_potential_total(sd.eigenvalues, 1.0, 20.0);
  PdmOptions opt;
  opt.max_modes = 4;
  in.pdm = build_thermal_pdm(m, sd, opt);
  double n0 = 20.0 - in.pdm.trace() - in.pdm.discarded_trace;
  in.phi = std::sqrt(n0 * in.grid.cell_volume()) * sd.eigenfunctions.col(0);
  in.v = InteractionSpec::gaussian(v0, 1.0, 20.0);
  in.norm = {20.0, critical_temperature(trap, 20.0).T_c, 2.0};
  return in;
}

DensePDM random_pdm(const Grid& g, int rank, unsigned seed) {
  std::srand(seed);
  DensePDM d(g);
  cmat x = cmat::Random(g.size(), rank);
  d.gamma = x * x.adjoint();
  return d;
}

}  // namespace

TEST_CASE("trace distance basics") {
  Grid g(1, 32, 4.0);
  DensePDM a = random_pdm(g, 3, 1);
  CHECK(trace_distance(a, a) == 0.0);
  DensePDM p(g), q(g);
  p.gamma(3, 3) = 1.0;
  q.gamma(7, 7) = 1.0;
  CHECK(trace_distance(p, q) == doctest::Approx(2.0).epsilon(1e-14));
  cvec u = cvec::Random(32).normalized(), w = cvec::Random(32);
  w -= u * u.dot(w);
  w.normalize();
  auto lu = LowRankHermitian::of_phi(u), lw = LowRankHermitian::of_phi(w);
  CHECK(trace_norm(lu.minus(lw)) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("trace distance is a metric") {
  Grid g(1, 32, 4.0);
  for (unsigned seed = 1; seed <= 5; ++seed) {
    DensePDM a = random_pdm(g, 2, seed), b = random_pdm(g, 3, seed + 10), c = random_pdm(g, 4, seed + 20);
    double ab = trace_distance(a, b), ba = trace_distance(b, a);
    CHECK(std::abs(ab - ba) <= 1e-12 * ab);
    CHECK(ab <= trace_distance(a, c) + trace_distance(c, b) + 1e-10);
  }
}

TEST_CASE("low-rank trace norm against dense eigendecomposition") {
  auto in = standard();
  LowRankHermitian d = LowRankHermitian::of(free_conjugate(in.pdm, 0.2))
                           .minus(LowRankHermitian::of(in.pdm))
                           .plus(LowRankHermitian::of_phi(in.phi));
  REQUIRE(d.F.cols() < in.grid.size());
  CHECK(trace_norm(d) == doctest::Approx(trace_norm(d.dense())).epsilon(1e-10));

  ModeState ms = make_mode_state(in.grid, in.phi, in.pdm, in.v);
  ms = run_modes(ms, 1e-3, 0.2, 1000, nullptr);
  cmat ref = reconstruct(ms).gamma - LowRankHermitian::of(in.pdm).dense();
  CHECK(trace_distance(ms, in.pdm) == doctest::Approx(trace_norm(ref)).epsilon(1e-10));
  CHECK(trace_distance(ms, reconstruct(ms)) <= 1e-12);
  CHECK(trace_distance(ms, ms) == 0.0);
}

TEST_CASE("dense fallback limit") {
  Grid g(1, 32, 4.0);
  LowRankHermitian h;
  h.F = cmat::Random(32, 40);
  h.w = rvec::Ones(40);
  CHECK_THROWS_AS(trace_norm(h, 16), ConfigError);
  CHECK(trace_norm(h) == doctest::Approx(h.F.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("alpha norm from modes") {
  auto in = standard();
  ModeState ms = make_mode_state(in.grid, in.phi, in.pdm, in.v);
  CHECK(alpha_hs_norm(ms) == 0.0);
  ms = run_modes(ms, 1e-3, 0.2, 1000, nullptr);
  CHECK(alpha_hs_norm(ms) == doctest::Approx(reconstruct(ms).alpha.norm()).epsilon(1e-10));
}

TEST_CASE("positivity margin") {
  Grid g(1, 32, 4.0);
  DensePDM zero(g);
  CHECK(positivity_margin(zero) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  auto in = standard();
  DenseState ds = make_dense_state(in.grid, in.phi, in.pdm, in.v);
  CHECK(std::abs(positivity_margin(ds.pdm)) <= 1e-12);
}

TEST_CASE("kernel bounds") {
  auto in = standard();
  ModeState ms = make_mode_state(in.grid, in.phi, in.pdm, in.v);
  DensePDM d = reconstruct(ms);
  double sup = sup_kernel(d);
  CHECK(sup <= sup_kernel_bound(ms) * (1 + 1e-12));
  CHECK(sup_kernel_bound(ms) == doctest::Approx(sup_kernel_bound(in.pdm)).epsilon(1e-12));
  CHECK(sup <= fourier_kernel_bound(d) * (1 + 1e-12));
  CHECK(fourier_kernel_bound(d) <= fourier_kernel_bound(ms) * (1 + 1e-12));
}

TEST_CASE("closeness ratios vanish without interaction") {
  auto in = standard(0.0);
  CompareOptions opt;
  opt.dt = 1e-2;
  opt.every = 10;
  opt.omega = true;
  auto rep = compare_dynamics(make_mode_state(in.grid, in.phi, in.pdm, in.v), in.norm, opt);
  auto row = closeness_row(rep, 0.0);
  CHECK(row.ratio_gamma <= 1e-12);
  CHECK(row.ratio_phi <= 1e-12);
  for (double x : rep.omega_trace_dist) CHECK(x <= 1e-10);
  auto dil = diluteness_trajectory(rep);
  REQUIRE(dil.size() == rep.times.size());
  // free conjugation only changes Fourier phases
  for (double f : rep.fourier_bound) CHECK(f == doctest::Approx(rep.fourier_bound[0]).epsilon(1e-3));
}

TEST_CASE("comparison against the references with interaction") {
  auto in = standard();
  CompareOptions opt;
  opt.dt = 1e-3;
  opt.every = 100;
  opt.t_end = 0.5;
  opt.omega = true;
  auto rm = compare_dynamics(make_mode_state(in.grid, in.phi, in.pdm, in.v), in.norm, opt);
  auto rd = compare_dynamics(make_dense_state(in.grid, in.phi, in.pdm, in.v), in.norm, opt);
  REQUIRE(rm.times.size() == 6);
  REQUIRE(rd.times.size() == 6);
  for (std::size_t k = 0; k < rm.times.size(); ++k) {
    CHECK(std::abs(rm.gamma_trace_dist[k] - rd.gamma_trace_dist[k]) <= 1e-6);
    CHECK(std::abs(rm.phi_l2_dist[k] - rd.phi_l2_dist[k]) <= 1e-6);
    CHECK(rm.alpha_hs[k] == doctest::Approx(rd.alpha_hs[k]).epsilon(1e-6));
    CHECK(rd.positivity[k] >= -1e-8);
  }
  CHECK(rm.gamma_trace_dist.back() > 0.0);
  auto row = closeness_row(rm, 0.0);
  CHECK(std::isfinite(row.ratio_gamma));
  CHECK(row.ratio_gamma > 0.0);
  auto dil = diluteness_trajectory(rm);
  for (double x : dil) CHECK(x <= 10 * dil[0]);
}

TEST_CASE("pairing bounded by the cloud size along a dense run") {
  auto in = standard();
  DenseState ds = make_dense_state(in.grid, in.phi, in.pdm, in.v);
  run_dense(ds, 1e-3, 1.0, 100, [&](double, const DenseState& s) {
    double tr = s.pdm.gamma.trace().real();
    CHECK(s.pdm.alpha.squaredNorm() <= (1 + tr) * tr * (1 + 1e-10));
  });
}

TEST_CASE("ratios do not depend on the global phase of phi") {
  auto in = standard();
  CompareOptions opt;
  opt.dt = 2e-3;
  opt.every = 50;
  opt.t_end = 0.4;
  auto r0 = closeness_row(compare_dynamics(make_mode_state(in.grid, in.phi, in.pdm, in.v), in.norm, opt), 0.5);
  cvec rot = std::exp(cplx(0.0, 0.7)) * in.phi;
  auto r1 = closeness_row(compare_dynamics(make_mode_state(in.grid, rot, in.pdm, in.v), in.norm, opt), 0.5);
  CHECK(r1.ratio_gamma == doctest::Approx(r0.ratio_gamma).epsilon(1e-10));
  CHECK(r1.ratio_phi == doctest::Approx(r0.ratio_phi).epsilon(1e-10));
}

TEST_CASE("closeness fit") {
  std::vector<ClosenessRow> rows;
  for (double N : {200.0, 400.0, 800.0}) rows.push_back({N, 1.0, 3.0 * std::pow(N, -0.25), 0.5 * std::pow(N, 0.05)});
  auto f = closeness_fit(rows);
  CHECK(f.slope_gamma == doctest::Approx(-0.25).epsilon(1e-12));
  CHECK(f.slope_phi == doctest::Approx(0.05).epsilon(1e-12));
  rows.pop_back();
  CHECK_THROWS_AS(closeness_fit(rows), ConfigError);
  std::vector<ClosenessRow> zeros(3);
  for (int k = 0; k < 3; ++k) zeros[k].N = 100.0 * (k + 1);
  CHECK(closeness_fit(zeros).slope_gamma == 0.0);
  zeros[0].ratio_gamma = 3e-15;
  zeros[2].ratio_gamma = 1e-13;
  CHECK_THROWS_AS(closeness_fit(zeros), InvariantError);
  CHECK(closeness_fit(zeros, 1e-12).slope_gamma == 0.0);
}

TEST_CASE("report validation") {
  ComparisonReport r;
  r.times = {0.0, 1.0};
  r.gamma_trace_dist = {0.0, 1.0};
  r.phi_l2_dist = {0.0, 1.0};
  r.alpha_hs = {0.0, 1.0};
  r.sup_kernel = {1.0};
  CHECK_THROWS_AS(r.validate(), InvariantError);
  r.sup_kernel = {1.0, -1.0};
  CHECK_THROWS_AS(r.validate(), InvariantError);
  r.sup_kernel = {1.0, 1.0};
  CHECK_NOTHROW(r.validate());
}
