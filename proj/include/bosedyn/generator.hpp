#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bosedyn/fock.hpp"

namespace bose {

// One factor a^#(F_arg) of a normal-ordered monomial; F is U or conj(V) evaluated at x or y.
struct TermFactor {
  bool dagger;
  char field;  // 'U' or 'V' (the latter meaning conj V)
  char arg;    // 'x' or 'y'
};

struct Term {
  std::vector<TermFactor> factors;
  double coeff;        // prefactor inside the generator sum
  double commutator;   // prefactor of the same monomial in [G, N]
};

// Summand groups of the fluctuation generator: quartic number conserving (5), quartic
// pairing (5, plus h.c.), cubic condensate (8, plus h.c.).
const std::vector<Term>& i1_terms();
const std::vector<Term>& i2_terms();
const std::vector<Term>& i3_terms();

// Doubled Bogoliubov blocks nu = ((U, conj V), (V, conj U)) on h + h (2m x 2m each).
struct BogoliubovBlocks {
  cmat U;
  cmat V;
};

// exp(-i S K) with K = ((A, conj B), (B, conj A)), A Hermitian and B symmetric, entries of size scale.
BogoliubovBlocks random_symplectic(int m, double scale, std::uint64_t seed);
// U = diag(sqrt(1 + gamma), conj sqrt(1 + gamma)), V = ((0, conj sqrt(gamma)), (sqrt(gamma), 0)).
BogoliubovBlocks blocks_from_gamma(const cmat& gamma);
// max(|nu* S nu - S|, |nu S nu* - S|).
double symplectic_defect(const BogoliubovBlocks& b);

struct GeneratorInput {
  rmat v;                   // m x m real symmetric overlap; v(x,y) on l-l, -v(x,y) on r-r, 0 across
  cvec phi;                 // m entries; the doubled field is (phi, conj phi)
  rmat kinetic;             // m x m; L = diag(kinetic, -kinetic). Empty means zero.
  double N_scale = 1.0;
  std::optional<int> cutoff;  // keep states with N_l + N_r + 5 <= cutoff
};

// Random symmetric v, phi of size ~0.5, kinetic 2 * identity; deterministic in the seed.
GeneratorInput random_generator_input(int m, std::uint64_t seed, double N_scale = 10.0);

struct GeneratorBlocks {
  cmat I1, I2, I3;
  double I4 = 0.0;
  cmat G;
  cmat I2_comm, I3_comm;  // displayed right-hand side of [G, N]
  int number_shift = 5;
  std::optional<int> cutoff;
};

// Builds every summand as a matrix; throws InvariantError when an assembled block departs from
// Hermiticity by more than herm_tol.
GeneratorBlocks assemble_generator(const FockSpace& space, const FockOperators& ops,
                                   const BogoliubovBlocks& b, const GeneratorInput& in,
                                   double herm_tol = 1e-10);

struct CommutatorReport {
  double max_deviation = 0.0;
  long worst_row = -1;
  long worst_col = -1;
  double max_commutator = 0.0;
  double hermiticity = 0.0;       // largest |A - A*| over I1, I2, I3, G
  bool constant_shift_exact = false;
  double tolerance = 0.0;
  bool passed = false;
};

// [G, N] with N = N_l + N_r + 5 against I2_comm + I3_comm, entrywise.
CommutatorReport verify_commutator_identity(const GeneratorBlocks& g, const FockOperators& ops,
                                            double tol = 1e-10);

double hermiticity_defect(const cmat& a);

}  // namespace bose
