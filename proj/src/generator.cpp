#include "bosedyn/generator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "bosedyn/error.hpp"

namespace bose {

namespace {

constexpr TermFactor cU(char arg) { return {true, 'U', arg}; }
constexpr TermFactor cV(char arg) { return {true, 'V', arg}; }
constexpr TermFactor aU(char arg) { return {false, 'U', arg}; }
constexpr TermFactor aV(char arg) { return {false, 'V', arg}; }

struct Smeared {
  std::vector<spmat> aU, aUd, aV, aVd;  // per doubled index
  const spmat& get(const TermFactor& f, long x, long y) const {
    const long i = f.arg == 'x' ? x : y;
    if (f.field == 'U') return f.dagger ? aUd[i] : aU[i];
    return f.dagger ? aVd[i] : aV[i];
  }
};

spmat monomial(const Smeared& s, const Term& t, long x, long y) {
  spmat p = s.get(t.factors[0], x, y);
  for (std::size_t j = 1; j < t.factors.size(); ++j) p = p * s.get(t.factors[j], x, y);
  return p;
}

// Sum over doubled index pairs of weight(x, y) * sum_t c(t) P_t(x, y).
template <class Weight, class Coeff>
cmat accumulate(const Smeared& s, const std::vector<Term>& terms, long slots, long dim, Weight w,
                Coeff c) {
  spmat acc(dim, dim);
  for (long x = 0; x < slots; ++x) {
    for (long y = 0; y < slots; ++y) {
      const cplx wxy = w(x, y);
      if (wxy == cplx(0.0)) continue;
      for (const Term& t : terms) {
        const double ct = c(t);
        if (ct == 0.0) continue;
        acc += (wxy * ct) * monomial(s, t, x, y);
      }
    }
  }
  return cmat(acc);
}

}  // namespace

const std::vector<Term>& i1_terms() {
  static const std::vector<Term> t = {
      {{cU('x'), cU('y'), aU('y'), aU('x')}, 1.0, 0.0},
      {{cU('x'), cV('y'), aV('y'), aU('x')}, 1.0, 0.0},
      {{cU('y'), cV('x'), aV('x'), aU('y')}, 1.0, 0.0},
      {{cV('x'), cV('y'), aV('y'), aV('x')}, 1.0, 0.0},
      {{cU('x'), cV('y'), aV('y'), aU('x')}, 2.0, 0.0},
  };
  return t;
}

const std::vector<Term>& i2_terms() {
  static const std::vector<Term> t = {
      {{cU('x'), cU('y'), cV('y'), cV('x')}, 1.0, 2.0},
      {{cU('x'), cU('y'), cV('y'), aU('x')}, 1.0, 1.0},
      {{cU('x'), cV('y'), cV('x'), aV('y')}, 1.0, 1.0},
      {{cU('x'), cU('y'), cV('x'), aU('y')}, 1.0, 1.0},
      {{cU('y'), cV('y'), cV('x'), aV('x')}, 1.0, 1.0},
  };
  return t;
}

const std::vector<Term>& i3_terms() {
  static const std::vector<Term> t = {
      {{cU('x'), cU('y'), cV('y')}, 1.0, 3.0},
      {{cU('x'), cU('y'), aU('y')}, 1.0, 1.0},
      {{cU('x'), cV('y'), aV('y')}, 1.0, 1.0},
      {{cU('y'), cV('y'), aV('x')}, 1.0, 1.0},
      {{cV('y'), aV('x'), aV('y')}, 1.0, -1.0},
      {{cU('x'), aV('y'), aU('y')}, 1.0, -1.0},
      {{cU('y'), aV('x'), aU('y')}, 1.0, -1.0},
      {{aV('x'), aV('y'), aU('y')}, 1.0, -3.0},
  };
  return t;
}

BogoliubovBlocks random_symplectic(int m, double scale, std::uint64_t seed) {
  require(m >= 1, "random_symplectic needs m >= 1");
  const long n = 2L * m;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  cmat A(n, n), B(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      A(i, j) = cplx(g(rng), g(rng));
      B(i, j) = cplx(g(rng), g(rng));
    }
  A = (0.5 * (A + A.adjoint())).eval();
  B = (0.5 * (B + B.transpose())).eval();
  cmat K(2 * n, 2 * n);
  K << A, B.conjugate(), B, A.conjugate();
  cmat SK = K;
  SK.bottomRows(n) *= -1.0;
  const cmat nu = (cplx(0.0, -1.0) * SK).exp();
  return {nu.topLeftCorner(n, n), nu.bottomLeftCorner(n, n)};
}

BogoliubovBlocks blocks_from_gamma(const cmat& gamma) {
  const long m = gamma.rows();
  require(gamma.cols() == m, "gamma must be square");
  const cmat u = hermitian_sqrt(cmat(cmat::Identity(m, m) + gamma));
  const cmat v = hermitian_sqrt(gamma);
  BogoliubovBlocks b;
  b.U = cmat::Zero(2 * m, 2 * m);
  b.V = cmat::Zero(2 * m, 2 * m);
  b.U.topLeftCorner(m, m) = u;
  b.U.bottomRightCorner(m, m) = u.conjugate();
  b.V.topRightCorner(m, m) = v.conjugate();
  b.V.bottomLeftCorner(m, m) = v;
  return b;
}

GeneratorInput random_generator_input(int m, std::uint64_t seed, double N_scale) {
  require(m >= 1, "random_generator_input needs m >= 1");
  std::mt19937_64 rng(seed ^ 0x5851f42d4c957f2dULL);
  std::normal_distribution<double> g;
  GeneratorInput in;
  in.v = rmat(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) in.v(i, j) = in.v(j, i) = g(rng);
  in.phi = cvec(m);
  for (int i = 0; i < m; ++i) in.phi(i) = 0.5 * cplx(g(rng), g(rng));
  in.kinetic = 2.0 * rmat::Identity(m, m);
  in.N_scale = N_scale;
  return in;
}

double symplectic_defect(const BogoliubovBlocks& b) {
  const long n = b.U.rows();
  cmat nu(2 * n, 2 * n);
  nu << b.U, b.V.conjugate(), b.V, b.U.conjugate();
  cmat S = cmat::Identity(2 * n, 2 * n);
  S.bottomRightCorner(n, n) *= -1.0;
  const double d1 = (nu.adjoint() * S * nu - S).cwiseAbs().maxCoeff();
  const double d2 = (nu * S * nu.adjoint() - S).cwiseAbs().maxCoeff();
  return std::max(d1, d2);
}

double hermiticity_defect(const cmat& a) {
  return a.size() ? (a - a.adjoint()).cwiseAbs().maxCoeff() : 0.0;
}

GeneratorBlocks assemble_generator(const FockSpace& space, const FockOperators& ops,
                                   const BogoliubovBlocks& b, const GeneratorInput& in,
                                   double herm_tol) {
  require(space.doubled(), "the generator acts on the doubled Fock space");
  const long m = space.modes();
  const long slots = 2 * m;
  const long dim = space.dim();
  require(b.U.rows() == slots && b.U.cols() == slots && b.V.rows() == slots && b.V.cols() == slots,
          "U and V must be 2m x 2m");
  require(in.v.rows() == m && in.v.cols() == m, "v must be m x m");
  require((in.v - in.v.transpose()).cwiseAbs().maxCoeff() == 0.0, "v must be symmetric");
  require(in.phi.size() == m, "phi must have m entries");
  require(in.kinetic.size() == 0 || (in.kinetic.rows() == m && in.kinetic.cols() == m),
          "kinetic must be m x m");
  require(in.N_scale > 0.0, "N_scale must be positive");

  Smeared s;
  for (long x = 0; x < slots; ++x) {
    const cvec u = b.U.col(x);
    const cvec vb = b.V.col(x).conjugate();
    s.aU.push_back(ops.annihilate(u));
    s.aUd.push_back(ops.create(u));
    s.aV.push_back(ops.annihilate(vb));
    s.aVd.push_back(ops.create(vb));
  }
  const cvec phi2 = doubled_shift(in.phi);
  auto vv = [&](long x, long y) -> double {
    const bool lx = x < m, ly = y < m;
    if (lx != ly) return 0.0;
    const double val = in.v(x % m, y % m);
    return lx ? val : -val;
  };
  auto w_plain = [&](long x, long y) { return cplx(vv(x, y)); };
  auto w_phi = [&](long x, long y) { return vv(x, y) * phi2(x); };
  auto coeff = [](const Term& t) { return t.coeff; };
  auto comm = [](const Term& t) { return t.commutator; };

  rvec chi = rvec::Ones(dim);
  if (in.cutoff) {
    const rvec n = ops.n_total();
    for (long k = 0; k < dim; ++k) chi(k) = n(k) + 5.0 <= *in.cutoff ? 1.0 : 0.0;
  }
  const auto cut = [&](cmat a) {
    if (in.cutoff) a = a * chi.asDiagonal();
    return a;
  };

  const double inv = 1.0 / in.N_scale;
  GeneratorBlocks g;
  g.cutoff = in.cutoff;
  g.I1 = (0.5 * inv) * cut(accumulate(s, i1_terms(), slots, dim, w_plain, coeff));
  const cmat p2 = cut(accumulate(s, i2_terms(), slots, dim, w_plain, coeff));
  const cmat p3 = cut(accumulate(s, i3_terms(), slots, dim, w_phi, coeff));
  g.I2 = (0.5 * inv) * (p2 + p2.adjoint());
  g.I3 = inv * (p3 + p3.adjoint());
  const cmat c2 = cut(accumulate(s, i2_terms(), slots, dim, w_plain, comm));
  const cmat c3 = cut(accumulate(s, i3_terms(), slots, dim, w_phi, comm));
  g.I2_comm = -inv * (c2 - c2.adjoint());
  g.I3_comm = -inv * (c3 - c3.adjoint());

  cmat L = cmat::Zero(slots, slots);
  if (in.kinetic.size()) {
    L.topLeftCorner(m, m) = in.kinetic.cast<cplx>();
    L.bottomRightCorner(m, m) = -in.kinetic.cast<cplx>();
  }
  double quartic = 0.0;
  for (long x = 0; x < slots; ++x)
    for (long y = 0; y < slots; ++y) quartic += vv(x, y) * std::norm(phi2(x)) * std::norm(phi2(y));
  g.I4 = (b.V * L * b.V.adjoint()).trace().real() + 0.5 * inv * quartic;

  g.G = g.I1 + g.I2 + g.I3;
  g.G.diagonal().array() += g.I4;

  const double h = std::max({hermiticity_defect(g.I1), hermiticity_defect(g.I2),
                             hermiticity_defect(g.I3), hermiticity_defect(g.G)});
  if (h > herm_tol)
    throw InvariantError("assembled generator is not Hermitian (defect " + std::to_string(h) + ")");
  return g;
}

CommutatorReport verify_commutator_identity(const GeneratorBlocks& g, const FockOperators& ops,
                                            double tol) {
  CommutatorReport rep;
  rep.tolerance = tol;
  const long dim = g.G.rows();
  const rvec n0 = ops.n_total();
  const rvec n5 = n0.array() + static_cast<double>(g.number_shift);
  // [G, N]_{ij} = G_ij (N_j - N_i); the integer difference is exact.
  cmat c(dim, dim), c0(dim, dim);
  for (long j = 0; j < dim; ++j)
    for (long i = 0; i < dim; ++i) {
      c(i, j) = g.G(i, j) * (n5(j) - n5(i));
      c0(i, j) = g.G(i, j) * (n0(j) - n0(i));
    }
  const cmat shifted = g.G * 5.0 - 5.0 * g.G;
  rep.constant_shift_exact = (c.array() == c0.array()).all() && (shifted.array() == cplx(0.0)).all();
  rep.max_commutator = dim ? c.cwiseAbs().maxCoeff() : 0.0;
  const cmat diff = c - (g.I2_comm + g.I3_comm);
  for (long j = 0; j < dim; ++j)
    for (long i = 0; i < dim; ++i)
      if (std::abs(diff(i, j)) > rep.max_deviation || rep.worst_row < 0) {
        rep.max_deviation = std::abs(diff(i, j));
        rep.worst_row = i;
        rep.worst_col = j;
      }
  rep.hermiticity = std::max({hermiticity_defect(g.I1), hermiticity_defect(g.I2),
                              hermiticity_defect(g.I3), hermiticity_defect(g.G)});
  rep.passed = rep.max_deviation <= tol && rep.constant_shift_exact;
  return rep;
}

}  // namespace bose
