#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "bosedyn/error.hpp"
#include "bosedyn/hartree.hpp"
#include "bosedyn/hfb.hpp"

using namespace bose;

namespace {

struct Instance {
  Grid grid;
  cvec phi;
  ThermalPDM pdm;
  InteractionSpec v;
};

// 1D, 32 points, harmonic initial data at T = 1, N = 20, four thermal modes
Instance standard(double v0 = 1.0, int n = 32) {
  Instance in;
  in.grid = Grid(1, n, 8.0);
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
  return in;
}

double trace_norm(const cmat& a) {
  Eigen::SelfAdjointEigenSolver<cmat> es(0.5 * (a + a.adjoint()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

double block_min_eig(const DensePDM& d) {
  const long n = d.gamma.rows();
  cmat g(2 * n, 2 * n);
  g << d.gamma, d.alpha, d.alpha.conjugate(), cmat::Identity(n, n) + d.gamma.conjugate();
  Eigen::SelfAdjointEigenSolver<cmat> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

cmat random_psd(long n, int rank, unsigned seed) {
  std::srand(seed);
  cmat x = cmat::Random(n, rank);
  return x * x.adjoint() / double(n);
}

}  // namespace

TEST_CASE("exchange term: separable and zero cases") {
  Grid g(1, 32, 6.0);
  PairPotential pp(g, InteractionSpec::from_table(rvec::Constant(32, 2.0), 4.0));
  DensePDM d(g);
  cvec f = cvec::Random(32);
  CHECK(mean_field_exchange_apply(pp, d, f).norm() == 0.0);
  cvec psi = cvec::Random(32);
  psi.normalize();
  d.gamma = psi * psi.adjoint();
  cvec expect = (2.0 / 4.0) * psi * psi.dot(f);
  CHECK((mean_field_exchange_apply(pp, d, f) - expect).norm() <= 1e-13);
}

TEST_CASE("pairing term: separable and zero cases") {
  Grid g(1, 32, 6.0);
  PairPotential pp(g, InteractionSpec::from_table(rvec::Constant(32, 2.0), 4.0));
  DensePDM d(g);
  cvec f = cvec::Random(32), zero = cvec::Zero(32);
  CHECK(pairing_apply(pp, d, zero, f).norm() == 0.0);
  cvec psi = cvec::Random(32);
  // kernel psi(x) psi(y) against conj(f)
  cvec expect = (2.0 / 4.0) * psi * (psi.transpose() * f.conjugate())(0);
  CHECK((pairing_apply(pp, d, psi, f) - expect).norm() <= 1e-13);
}

TEST_CASE("mode-wise and dense field operators agree") {
  auto in = standard();
  ModeState ms = make_mode_state(in.grid, in.phi, in.pdm, in.v);
  // give the modes some pairing structure first
  ms = run_modes(ms, 1e-3, 0.05, 1000, nullptr);
  DensePDM d = reconstruct(ms);
  PairPotential pp(in.grid, in.v);
  cvec f = cvec::Random(in.grid.size());
  CHECK((mean_field_exchange_apply(pp, ms, f) - mean_field_exchange_apply(pp, d, f)).norm() <=
        1e-10 * f.norm());
  CHECK((pairing_apply(pp, ms, f) - pairing_apply(pp, d, ms.phi, f)).norm() <= 1e-10 * f.norm());

  FieldSources src = FieldSources::from_modes(ms);
  MeanField md(pp, src, FieldStrategy::Dense), mw(pp, src, FieldStrategy::ModeWise);
  cmat F = cmat::Random(in.grid.size(), 3);
  CHECK((md.apply_b(F, true) - mw.apply_b(F, true)).norm() <= 1e-10 * F.norm());
  CHECK((md.apply_k(F) - mw.apply_k(F)).norm() <= 1e-10 * F.norm());
}

TEST_CASE("mode reconstruction of the initial state") {
  auto in = standard();
  ModeState ms = make_mode_state(in.grid, in.phi, in.pdm, in.v);
  DenseState ds = make_dense_state(in.grid, in.phi, in.pdm, in.v);
  DensePDM d = reconstruct(ms);
  CHECK((d.gamma - ds.pdm.gamma).norm() <= 1e-12);
  CHECK(d.alpha.norm() == 0.0);
  CHECK(mode_probe_defect(ms) <= 1e-12);
  CHECK(particle_number(ms) == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(particle_number(ds) + in.pdm.discarded_trace == doctest::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("free HFB flow is free conjugation") {
  auto in = standard(0.0);
  DenseState ds = make_dense_state(in.grid, in.phi, in.pdm, in.v);
  DenseState out = run_dense(ds, 1e-3, 0.5, 100, nullptr);
  DensePDM ref = free_conjugate(ds.pdm, 0.5);
  CHECK((out.pdm.gamma - ref.gamma).norm() <= 1e-9);
  CHECK(out.pdm.alpha.norm() <= 1e-12);
  CHECK((out.phi - free_evolve(in.grid, in.phi, 0.5)).norm() <= 1e-9);

  ModeState ms = make_mode_state(in.grid, in.phi, in.pdm, in.v);
  ModeState mo = run_modes(ms, 1e-2, 0.5, 100, nullptr);
  CHECK((reconstruct(mo).gamma - ref.gamma).norm() <= 1e-9);
  CHECK((mo.phi - free_evolve(in.grid, in.phi, 0.5)).norm() <= 1e-9);
}

TEST_CASE("free conjugation keeps traces and spectra") {
  auto in = standard();
  ThermalPDM same = free_conjugate(in.pdm, 0.0);
  CHECK((same.modes - in.pdm.modes).norm() == 0.0);
  DensePDM d = make_dense_state(in.grid, in.phi, in.pdm, in.v).pdm;
  Eigen::SelfAdjointEigenSolver<cmat> e0(d.gamma, Eigen::EigenvaluesOnly);
  for (double t : {0.3, 1.7}) {
    DensePDM dt = free_conjugate(d, t);
    Eigen::SelfAdjointEigenSolver<cmat> et(dt.gamma, Eigen::EigenvaluesOnly);
    CHECK((et.eigenvalues() - e0.eigenvalues()).cwiseAbs().maxCoeff() <= 1e-12);
    // sup of the kernel bounded by (2pi)^{-d} times the momentum L1 norm of gamma^
    double sup = dt.gamma.cwiseAbs().maxCoeff() / in.grid.cell_volume();
    const Fourier& ft = fourier_for(in.grid);
    cmat psi_hat(in.grid.size(), in.pdm.count());
    for (int j = 0; j < in.pdm.count(); ++j) psi_hat.col(j) = ft.to_momentum(in.pdm.modes.col(j));
    cmat ghat = psi_hat * in.pdm.weights.cast<cplx>().asDiagonal() * psi_hat.adjoint();
    double dk = in.grid.momentum_cell();
    double l1 = ghat.cwiseAbs().sum() * dk * dk / (2 * kPi);
    CHECK(sup <= l1 * (1 + 1e-12));
  }
}

TEST_CASE("empty cloud reduces to the Hartree flow") {
  auto in = standard();
  ThermalPDM none;
  none.grid = in.grid;
  ModeState ms = make_mode_state(in.grid, in.phi, none, in.v, false);
  REQUIRE(ms.count() == 0);
  // the two splittings order kinetic and potential parts differently, so compare at small dt
  ModeState mo = run_modes(ms, 1e-4, 0.5, 5000, nullptr);
  Field f0 = from_coeff(in.grid, in.phi);
  auto ht = propagate_hartree(f0, in.v, 1e-4, 0.5, {.save_every = 5000});
  cvec ref = to_coeff(ht.frames.back());
  CHECK((mo.phi - ref).norm() <= 1e-8 * ref.norm());
}

TEST_CASE("dense flow from a pure condensate: phi follows Hartree, alpha is sourced") {
  auto in = standard();
  ThermalPDM none;
  none.grid = in.grid;
  DenseState ds = make_dense_state(in.grid, in.phi, none, in.v);
  const double t = 0.05;
  DenseState out = run_dense(ds, 1e-4, t, 1000, nullptr);
  Field f0 = from_coeff(in.grid, in.phi);
  cvec ref = to_coeff(propagate_hartree(f0, in.v, 1e-4, t).frames.back());
  double dphi = (out.phi - ref).norm() / ref.norm();
  // alpha grows like t k(phi phi^T) and feeds back into phi only at second order
  double alpha = out.pdm.alpha.norm();
  PairPotential pp(in.grid, in.v);
  cmat src = pp.inv_N() * pp.matrix().cast<cplx>().cwiseProduct(in.phi * in.phi.transpose());
  CHECK(alpha == doctest::Approx(t * src.norm()).epsilon(0.05));
  CHECK(dphi <= 1e-8 + 2 * t * alpha);
  MESSAGE("phi deviation from Hartree " << dphi << ", |alpha| " << alpha);
}

TEST_CASE("dense and mode integrators agree") {
  auto in = standard();
  DenseState ds = make_dense_state(in.grid, in.phi, in.pdm, in.v);
  ModeState ms = make_mode_state(in.grid, in.phi, in.pdm, in.v);
  std::vector<double> stops = {0.25, 0.5, 1.0};
  auto at_stop = [&](double t) {
    for (double x : stops) if (std::abs(t - x) < 1e-9) return true;
    return false;
  };
  std::vector<DensePDM> dense_at;
  std::vector<cvec> phi_at;
  run_dense(ds, 1e-3, 1.0, 250, [&](double t, const DenseState& s) {
    if (at_stop(t)) { dense_at.push_back(s.pdm); phi_at.push_back(s.phi); }
  });
  std::vector<DensePDM> mode_at;
  std::vector<cvec> mphi_at;
  run_modes(ms, 1e-3, 1.0, 250, [&](double t, const ModeState& s) {
    if (at_stop(t)) { mode_at.push_back(reconstruct(s)); mphi_at.push_back(s.phi); }
  });
  REQUIRE(dense_at.size() == 3);
  REQUIRE(mode_at.size() == 3);
  for (int k = 0; k < 3; ++k) {
    double dg = trace_norm(dense_at[k].gamma - mode_at[k].gamma);
    double da = (dense_at[k].alpha - mode_at[k].alpha).norm();
    double dp = (phi_at[k] - mphi_at[k]).norm();
    MESSAGE("t=" << stops[k] << " gamma " << dg << " alpha " << da << " phi " << dp);
    CHECK(dg <= 1e-6);
    CHECK(da <= 1e-6);
    CHECK(dp <= 1e-6 * phi_at[k].norm());
  }
}

TEST_CASE("conservation along both integrators") {
  auto in = standard();
  DenseState ds = make_dense_state(in.grid, in.phi, in.pdm, in.v);
  ModeState ms = make_mode_state(in.grid, in.phi, in.pdm, in.v);
  const double n0 = particle_number(ds), e0 = hfb_energy(ds).total();
  CHECK(hfb_energy(ms).total() == doctest::Approx(e0).epsilon(1e-9));
  double worst_n = 0, worst_e = 0, worst_sym = 0, worst_pos = 0;
  run_dense(ds, 1e-3, 1.0, 100, [&](double, const DenseState& s) {
    worst_n = std::max(worst_n, std::abs(particle_number(s) / n0 - 1));
    worst_e = std::max(worst_e, std::abs(hfb_energy(s).total() / e0 - 1));
    worst_sym = std::max(worst_sym, (s.pdm.alpha - s.pdm.alpha.transpose()).norm());
    worst_pos = std::min(worst_pos, block_min_eig(s.pdm));
  });
  CHECK(worst_n <= 1e-6);
  CHECK(worst_e <= 1e-6);
  CHECK(worst_sym <= 1e-12);
  CHECK(worst_pos >= -1e-8);

  const double nm0 = particle_number(ms);
  double mn = 0, me = 0, agree = 0, msym = 0;
  StepStats st;
  run_modes(ms, 1e-3, 1.0, 100, [&](double, const ModeState& s) {
    mn = std::max(mn, std::abs(particle_number(s) / nm0 - 1));
    double ed = hfb_energy(s, FieldStrategy::Dense).total();
    double ew = hfb_energy(s, FieldStrategy::ModeWise).total();
    me = std::max(me, std::abs(ed / e0 - 1));
    agree = std::max(agree, std::abs(ew / ed - 1));
    DensePDM d = reconstruct(s);
    msym = std::max(msym, (d.alpha - d.alpha.transpose()).norm());
  }, {}, &st);
  CHECK(mn <= 1e-6);
  CHECK(me <= 1e-6);
  CHECK(agree <= 1e-9);
  CHECK(msym <= 1e-10);
  CHECK(st.probe_defect <= 1e-8);
}

TEST_CASE("non-interacting energy is the kinetic energy of the modes") {
  auto in = standard(0.0);
  ModeState ms = make_mode_state(in.grid, in.phi, in.pdm, in.v);
  cmat K = dense_h(in.grid, TrapSpec(2.0, 0.0));
  double expect = in.phi.dot(K * in.phi).real();
  cmat psi = std::sqrt(in.grid.cell_volume()) * in.pdm.modes;
  for (int j = 0; j < in.pdm.count(); ++j)
    expect += in.pdm.weights[j] * psi.col(j).dot(K * psi.col(j)).real();
  CHECK(hfb_energy(ms, FieldStrategy::ModeWise).total() == doctest::Approx(expect).epsilon(1e-12));
  CHECK(hfb_energy(make_dense_state(in.grid, in.phi, in.pdm, in.v)).total() ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("dense step rejects a broken symmetry") {
  auto in = standard();
  DenseState ds = make_dense_state(in.grid, in.phi, in.pdm, in.v);
  ds.pdm.gamma(0, 1) += 1e-3;
  CHECK_THROWS_AS(step_dense(ds, 1e-3), InvariantError);
}

TEST_CASE("mode probe catches a corrupted mode") {
  auto in = standard();
  ModeState ms = make_mode_state(in.grid, in.phi, in.pdm, in.v);
  ms.a.col(0) *= 1.01;
  CHECK_THROWS_AS(run_modes(ms, 1e-3, 0.01, 10, nullptr, {}, nullptr, 1), InvariantError);
}

TEST_CASE("dense integrator on a random positive state stays positive") {
  Grid g(1, 32, 6.0);
  DenseState s;
  s.pdm = DensePDM(g);
  s.pdm.gamma = random_psd(32, 5, 3);
  s.phi = cvec::Random(32).normalized() * std::sqrt(5.0);
  s.interaction = InteractionSpec::gaussian(2.0, 0.8, 10.0);
  double lo = 0;
  run_dense(s, 2.5e-4, 0.5, 200, [&](double, const DenseState& x) { lo = std::min(lo, block_min_eig(x.pdm)); });
  CHECK(lo >= -1e-8);
}
