#include "bosedyn/fock.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "bosedyn/error.hpp"

namespace bose {

namespace {

void enumerate(int slot, int remaining, FockCap cap, int n_max, std::vector<int>& occ,
               std::vector<std::vector<int>>& out) {
  if (slot == static_cast<int>(occ.size())) {
    out.push_back(occ);
    return;
  }
  const int top = cap == FockCap::total ? remaining : n_max;
  for (int n = 0; n <= top; ++n) {
    occ[slot] = n;
    enumerate(slot + 1, remaining - n, cap, n_max, occ, out);
  }
  occ[slot] = 0;
}

double max_abs(const spmat& m) {
  double r = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (spmat::InnerIterator it(m, k); it; ++it) r = std::max(r, std::abs(it.value()));
  return r;
}

double one_norm(const spmat& m) {
  double r = 0.0;
  for (int k = 0; k < m.outerSize(); ++k) {
    double c = 0.0;
    for (spmat::InnerIterator it(m, k); it; ++it) c += std::abs(it.value());
    r = std::max(r, c);
  }
  return r;
}

spmat identity(long n) {
  spmat id(n, n);
  id.setIdentity();
  return id;
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << x;
  return os.str();
}

}  // namespace

long FockSpace::count(int slots, int n_max, FockCap cap) {
  if (cap == FockCap::per_slot) {
    double d = std::pow(static_cast<double>(n_max + 1), slots);
    return d > 1e15 ? -1 : static_cast<long>(d);
  }
  // C(slots + n_max, slots)
  double c = 1.0;
  for (int i = 1; i <= slots; ++i) c = c * (n_max + i) / i;
  return c > 1e15 ? -1 : static_cast<long>(std::llround(c));
}

FockSpace::FockSpace(int modes, int n_max, FockCap cap, bool doubled, long budget)
    : modes_(modes), slots_(doubled ? 2 * modes : modes), n_max_(n_max), cap_(cap),
      doubled_(doubled) {
  require(modes >= 1, "Fock space needs at least one mode");
  require(n_max >= 1, "Fock space needs n_max >= 1");
  require(slots_ * std::log2(n_max + 1.0) < 63.0, "Fock space too large to index");
  const long need = count(slots_, n_max, cap);
  if (need < 0 || need > budget)
    throw ConfigError("Fock space dimension " + (need < 0 ? std::string("> 1e15") : std::to_string(need)) +
                      " exceeds the matrix budget " + std::to_string(budget));
  std::vector<int> occ(slots_, 0);
  basis_.reserve(need);
  enumerate(0, n_max, cap, n_max, occ, basis_);
  lookup_.reserve(basis_.size());
  for (long k = 0; k < dim(); ++k) lookup_.emplace(key(basis_[k]), k);
}

std::uint64_t FockSpace::key(const std::vector<int>& occ) const {
  std::uint64_t k = 0;
  for (int n : occ) k = k * static_cast<std::uint64_t>(n_max_ + 1) + static_cast<std::uint64_t>(n);
  return k;
}

int FockSpace::total(long k) const {
  int t = 0;
  for (int n : basis_[k]) t += n;
  return t;
}

bool FockSpace::interior(long k) const {
  if (cap_ == FockCap::total) return total(k) < n_max_;
  for (int n : basis_[k])
    if (n >= n_max_) return false;
  return true;
}

long FockSpace::index(const std::vector<int>& occ) const {
  if (static_cast<int>(occ.size()) != slots_) return -1;
  int t = 0;
  for (int n : occ) {
    if (n < 0 || n > n_max_) return -1;
    t += n;
  }
  if (cap_ == FockCap::total && t > n_max_) return -1;
  auto it = lookup_.find(key(occ));
  return it == lookup_.end() ? -1 : it->second;
}

FockOperators build_operators(const FockSpace& space) {
  FockOperators ops;
  const long d = space.dim();
  for (int i = 0; i < space.slots(); ++i) {
    std::vector<Eigen::Triplet<cplx>> trips;
    for (long k = 0; k < d; ++k) {
      std::vector<int> occ = space.occupation(k);
      const int n = occ[i];
      if (n == 0) continue;
      occ[i] = n - 1;
      trips.emplace_back(space.index(occ), k, cplx(std::sqrt(static_cast<double>(n)), 0.0));
    }
    spmat a(d, d);
    a.setFromTriplets(trips.begin(), trips.end());
    ops.adag.push_back(spmat(a.adjoint()));
    ops.a.push_back(std::move(a));
  }
  ops.n_left = rvec::Zero(d);
  ops.n_right = rvec::Zero(d);
  for (long k = 0; k < d; ++k) {
    const auto& occ = space.occupation(k);
    for (int i = 0; i < space.slots(); ++i) {
      if (i < space.modes()) ops.n_left(k) += occ[i];
      else ops.n_right(k) += occ[i];
    }
  }
  return ops;
}

spmat FockOperators::annihilate(const cvec& f) const {
  require(f.size() == static_cast<long>(a.size()), "smearing vector size must equal the slot count");
  spmat r(a[0].rows(), a[0].cols());
  for (long z = 0; z < f.size(); ++z)
    if (f(z) != cplx(0.0)) r += std::conj(f(z)) * a[z];
  return r;
}

spmat FockOperators::create(const cvec& f) const {
  require(f.size() == static_cast<long>(a.size()), "smearing vector size must equal the slot count");
  spmat r(a[0].rows(), a[0].cols());
  for (long z = 0; z < f.size(); ++z)
    if (f(z) != cplx(0.0)) r += f(z) * adag[z];
  return r;
}

cvec expm_action(const spmat& A, const cvec& v) {
  const double nrm = one_norm(A);
  if (nrm == 0.0) return v;
  const int s = std::max(1, static_cast<int>(std::ceil(nrm / 0.5)));
  cvec x = v;
  for (int step = 0; step < s; ++step) {
    cvec term = x;
    cvec acc = x;
    for (int k = 1; k <= 60; ++k) {
      term = (A * term) / (static_cast<double>(k) * s);
      acc += term;
      if (term.norm() <= 1e-18 * acc.norm()) break;
    }
    x = acc;
  }
  return x;
}

CheckReport verify_ccr(const FockSpace& space, const FockOperators& ops, double tol) {
  CheckReport rep;
  rep.name = "ccr";
  rep.tolerance = tol;
  const long d = space.dim();
  std::vector<char> inner(d);
  for (long k = 0; k < d; ++k) inner[k] = space.interior(k) ? 1 : 0;
  const int n = space.slots();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      spmat c = ops.a[i] * ops.adag[j] - ops.adag[j] * ops.a[i];
      if (i == j) c -= identity(d);
      for (int k = 0; k < c.outerSize(); ++k) {
        if (!inner[k]) continue;
        for (spmat::InnerIterator it(c, k); it; ++it)
          rep.max_deviation = std::max(rep.max_deviation, std::abs(it.value()));
      }
      rep.max_deviation = std::max(rep.max_deviation, max_abs(spmat(ops.a[i] * ops.a[j] - ops.a[j] * ops.a[i])));
    }
  }
  rep.passed = rep.max_deviation <= tol;
  return rep;
}

cvec doubled_shift(const cvec& phi) {
  // Undoubled spaces have modes == phi.size() slots and take phi as is.
  cvec s(2 * phi.size());
  s << phi, phi.conjugate();
  return s;
}

spmat weyl_generator(const FockOperators& ops, const cvec& phi) {
  const long slots = static_cast<long>(ops.a.size());
  cvec f = slots == phi.size() ? phi : doubled_shift(phi);
  require(f.size() == slots, "phi must have one entry per one-particle mode");
  return ops.create(f) - ops.annihilate(f);
}

cmat hermitian_sqrt(const cmat& gamma) {
  Eigen::SelfAdjointEigenSolver<cmat> es(gamma);
  rvec ev = es.eigenvalues();
  if (ev.size() > 0 && ev.minCoeff() < -1e-12) throw ConfigError("gamma must be positive semidefinite");
  return es.eigenvectors() * ev.cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
}

cmat arcsinh_sqrt(const cmat& gamma) {
  Eigen::SelfAdjointEigenSolver<cmat> es(gamma);
  rvec ev = es.eigenvalues();
  if (ev.size() > 0 && ev.minCoeff() < -1e-12) throw ConfigError("gamma must be positive semidefinite");
  rvec k = ev.unaryExpr([](double l) { return std::asinh(std::sqrt(std::max(l, 0.0))); });
  return es.eigenvectors() * k.asDiagonal() * es.eigenvectors().adjoint();
}

spmat bogoliubov_generator(const FockOperators& ops, const cmat& gamma) {
  const long m = gamma.rows();
  require(gamma.cols() == m && static_cast<long>(ops.a.size()) == 2 * m,
          "gamma must be m x m on a doubled space with m modes");
  const cmat k = arcsinh_sqrt(gamma);
  const long d = ops.a[0].rows();
  spmat b(d, d);
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < m; ++j)
      if (k(i, j) != cplx(0.0)) b += k(i, j) * (ops.adag[i] * ops.adag[m + j]);
  return b - spmat(b.adjoint());
}

double coherent_tail_estimate(double amplitude, int level, int q) {
  if (amplitude <= 0.0) return 0.0;
  double sum = 0.0;
  const double la = std::log(amplitude);
  for (int k = std::max(level + 1, q + 1); k <= level + 200; ++k) {
    const double lt = 0.5 * (std::lgamma(k + 1.0) - std::lgamma(q + 1.0)) - std::lgamma(k - q + 1.0) +
                      (k - q) * la;
    const double t = std::exp(lt);
    sum += t;
    if (t < 1e-30 * sum) break;
  }
  return sum;
}

double thermal_tail_estimate(const FockSpace& space, const cmat& gamma) {
  if (gamma.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<cmat> es(gamma, Eigen::EigenvaluesOnly);
  const int m = space.modes();
  const int level = space.cap() == FockCap::per_slot ? space.n_max() / m : space.n_max() / (2 * m);
  double est = 0.0;
  for (long j = 0; j < es.eigenvalues().size(); ++j) {
    const double l = std::max(es.eigenvalues()(j), 0.0);
    if (l > 0.0) est += std::pow(l / (1.0 + l), level + 1);
  }
  return est;
}

CheckReport verify_weyl_shift(const FockSpace& space, const FockOperators& ops, const cvec& phi,
                              double tol, int test_occupation) {
  CheckReport rep;
  rep.name = "weyl_shift";
  rep.tolerance = tol;
  const long slots = space.slots();
  const cvec shift = slots == phi.size() ? phi : doubled_shift(phi);
  require(shift.size() == slots, "phi must have one entry per one-particle mode");
  if (space.cap() == FockCap::per_slot) {
    for (long i = 0; i < slots; ++i)
      rep.truncation_estimate +=
          coherent_tail_estimate(std::abs(shift(i)), space.n_max() - 1, test_occupation);
  } else {
    rep.truncation_estimate = coherent_tail_estimate(shift.norm(), space.n_max() - 1, test_occupation);
  }
  if (rep.truncation_estimate > tol)
    throw ConfigError("coherent truncation estimate " + fmt(rep.truncation_estimate) +
                      " exceeds tolerance; increase n_max or reduce |phi|");
  const spmat B = weyl_generator(ops, phi);
  const spmat Bm = -B;
  const long d = space.dim();
  double shift_dev = 0.0;
  for (long k = 0; k < d; ++k) {
    if (space.total(k) > test_occupation) continue;
    cvec e = cvec::Zero(d);
    e(k) = 1.0;
    const cvec w = expm_action(B, e);
    for (long i = 0; i < slots; ++i) {
      cvec lhs = expm_action(Bm, cvec(ops.a[i] * w));
      cvec rhs = ops.a[i] * e + shift(i) * e;
      shift_dev = std::max(shift_dev, (lhs - rhs).norm());
    }
  }
  cvec vac = cvec::Zero(d);
  vac(0) = 1.0;
  const cvec coh = expm_action(B, vac);
  double occ_dev = 0.0;
  for (long i = 0; i < slots; ++i)
    occ_dev = std::max(occ_dev, std::abs(cvec(ops.a[i] * coh).squaredNorm() - std::norm(shift(i))));
  rep.max_deviation = std::max(shift_dev, occ_dev);
  rep.passed = rep.max_deviation <= tol;
  rep.detail = "shift " + fmt(shift_dev) + ", coherent occupancy " + fmt(occ_dev);
  return rep;
}

ToyQuasiFree quasi_free_state(const FockSpace& space, const FockOperators& ops, const cmat& gamma,
                              const cvec& phi) {
  require(space.doubled(), "quasi-free states live on the doubled space");
  require(gamma.rows() == space.modes() && gamma.cols() == space.modes(), "gamma must be m x m");
  require(phi.size() == 0 || phi.size() == space.modes(), "phi must be empty or have m entries");
  ToyQuasiFree q;
  q.gamma = gamma;
  q.k = arcsinh_sqrt(gamma);
  q.phi = phi.size() == 0 ? cvec(cvec::Zero(space.modes())) : phi;
  cvec vac = cvec::Zero(space.dim());
  vac(0) = 1.0;
  q.state = expm_action(bogoliubov_generator(ops, gamma), vac);
  if (q.phi.squaredNorm() > 0.0) q.state = expm_action(weyl_generator(ops, q.phi), q.state);
  Eigen::SelfAdjointEigenSolver<cmat> es(gamma, Eigen::EigenvaluesOnly);
  const double lmax = es.eigenvalues().size() ? std::max(es.eigenvalues().maxCoeff(), 0.0) : 0.0;
  q.truncation_estimate = thermal_tail_estimate(space, gamma) +
                          coherent_tail_estimate(doubled_shift(q.phi).norm() * std::sqrt(1.0 + 2.0 * lmax),
                                                 space.n_max() - 1);
  q.norm_defect = std::abs(q.state.norm() - 1.0);
  return q;
}

cplx expectation(const cvec& state, const spmat& op) { return state.dot(op * state); }

CheckReport verify_bogoliubov_pdm(const FockSpace& space, const FockOperators& ops,
                                  const cmat& gamma, const cvec& phi, double tol) {
  CheckReport rep;
  rep.name = phi.size() && phi.squaredNorm() > 0.0 ? "quasi_free_condensate_pdm" : "bogoliubov_pdm";
  rep.tolerance = tol;
  const ToyQuasiFree q = quasi_free_state(space, ops, gamma, phi);
  rep.truncation_estimate = q.truncation_estimate;
  if (rep.truncation_estimate > tol)
    throw ConfigError("truncation estimate " + fmt(rep.truncation_estimate) +
                      " exceeds tolerance; increase n_max or use a per-slot cap");
  const long m = space.modes();
  const cmat pair = hermitian_sqrt(cmat(cmat::Identity(m, m) + gamma)) * hermitian_sqrt(gamma);
  std::vector<cvec> al(m), ar(m);
  for (long x = 0; x < m; ++x) {
    al[x] = ops.a[x] * q.state;
    ar[x] = ops.a[m + x] * q.state;
  }
  double dl = 0.0, dr = 0.0, dp = 0.0;
  for (long x = 0; x < m; ++x) {
    for (long y = 0; y < m; ++y) {
      const cplx cc = q.phi(x) * std::conj(q.phi(y));
      // <a*_y a_x> = <a_y psi, a_x psi>
      dl = std::max(dl, std::abs(al[y].dot(al[x]) - (gamma(x, y) + cc)));
      dr = std::max(dr, std::abs(ar[y].dot(ar[x]) - std::conj(gamma(x, y) + cc)));
      const cplx p = q.state.dot(ops.a[x] * ar[y]);
      dp = std::max(dp, std::abs(p - (pair(x, y) + cc)));
    }
  }
  rep.max_deviation = std::max({dl, dr, dp, q.norm_defect});
  rep.passed = rep.max_deviation <= tol;
  rep.detail = "l-sector " + fmt(dl) + ", r-sector " + fmt(dr) + ", pairing " + fmt(dp) +
               ", norm defect " + fmt(q.norm_defect);
  return rep;
}

CheckReport verify_wick(const FockSpace& space, const FockOperators& ops, const cvec& state,
                        const cvec& shift, double tol, std::uint64_t seed, int samples) {
  CheckReport rep;
  rep.name = "wick";
  rep.tolerance = tol;
  const int slots = space.slots();
  require(shift.size() == slots, "shift needs one entry per slot");
  require(state.size() == space.dim(), "state dimension mismatch");
  const spmat id = identity(space.dim());
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, slots - 1);
  double dev = 0.0, mean_dev = 0.0;
  for (int s = 0; s < samples; ++s) {
    int sl[4];
    for (int& v : sl) v = pick(rng);
    for (int pattern = 0; pattern < 16; ++pattern) {
      spmat op[4];
      for (int j = 0; j < 4; ++j) {
        const bool dag = (pattern >> j) & 1;
        op[j] = dag ? spmat(ops.adag[sl[j]] - std::conj(shift(sl[j])) * id)
                    : spmat(ops.a[sl[j]] - shift(sl[j]) * id);
        mean_dev = std::max(mean_dev, std::abs(expectation(state, op[j])));
      }
      auto two = [&](int i, int j) { return state.dot(op[i] * (op[j] * state)); };
      const cvec w = op[0].adjoint() * state;
      const cplx four = w.dot(op[1] * (op[2] * (op[3] * state)));
      const cplx wick = two(0, 1) * two(2, 3) + two(0, 2) * two(1, 3) + two(0, 3) * two(1, 2);
      dev = std::max(dev, std::abs(four - wick));
    }
  }
  rep.max_deviation = std::max(dev, mean_dev);
  rep.passed = rep.max_deviation <= tol;
  rep.detail = "pairing sum " + fmt(dev) + ", centered means " + fmt(mean_dev) + " over " +
               std::to_string(samples * 16) + " products";
  return rep;
}

}  // namespace bose
