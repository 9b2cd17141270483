#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Sparse>

#include "bosedyn/types.hpp"

namespace bose {

using spmat = Eigen::SparseMatrix<cplx>;

enum class FockCap { total, per_slot };

// Truncated bosonic Fock space over `modes` one-particle states, doubled into l and r sectors
// (slot index = sector * modes + x) unless `doubled` is false. Basis: occupation tuples with
// total <= n_max (FockCap::total) or every slot <= n_max (FockCap::per_slot), lexicographic.
class FockSpace {
public:
  FockSpace(int modes, int n_max, FockCap cap = FockCap::total, bool doubled = true,
            long budget = 20000);

  int modes() const { return modes_; }
  int slots() const { return slots_; }
  int n_max() const { return n_max_; }
  FockCap cap() const { return cap_; }
  bool doubled() const { return doubled_; }
  long dim() const { return static_cast<long>(basis_.size()); }

  const std::vector<int>& occupation(long k) const { return basis_[k]; }
  int total(long k) const;
  // True when every creation operator acts without truncation on this state.
  bool interior(long k) const;
  // -1 when the tuple lies outside the truncated space.
  long index(const std::vector<int>& occ) const;

  // Number of basis states the constructor would enumerate.
  static long count(int slots, int n_max, FockCap cap);

private:
  std::uint64_t key(const std::vector<int>& occ) const;

  int modes_;
  int slots_;
  int n_max_;
  FockCap cap_;
  bool doubled_;
  std::vector<std::vector<int>> basis_;
  std::unordered_map<std::uint64_t, long> lookup_;
};

struct FockOperators {
  std::vector<spmat> a;       // annihilators per slot
  std::vector<spmat> adag;    // exact adjoints
  rvec n_left;                // N_l diagonal
  rvec n_right;               // N_r diagonal (zero for an undoubled space)

  rvec n_total() const { return n_left + n_right; }
  // a(f) = sum conj(f_z) a_z and a*(f) = sum f_z a*_z over slots.
  spmat annihilate(const cvec& f) const;
  spmat create(const cvec& f) const;
};

FockOperators build_operators(const FockSpace& space);

// exp(A) v by scaled Taylor series; A is anti-Hermitian in all uses here.
cvec expm_action(const spmat& A, const cvec& v);

struct CheckReport {
  std::string name;
  double max_deviation = 0.0;
  double tolerance = 0.0;
  double truncation_estimate = 0.0;
  bool passed = false;
  std::string detail;
};

// [a_i, a*_j] - delta_ij and [a_i, a_j] on interior basis states.
CheckReport verify_ccr(const FockSpace& space, const FockOperators& ops, double tol = 1e-12);

// Generators of W(phi) = exp(a*_l(phi) + a*_r(conj phi) - h.c.) and
// T(gamma) = exp(sum k(i,j) a*_{l,i} a*_{r,j} - h.c.), k = arcsinh(sqrt(gamma)).
spmat weyl_generator(const FockOperators& ops, const cvec& phi);
spmat bogoliubov_generator(const FockOperators& ops, const cmat& gamma);
cmat arcsinh_sqrt(const cmat& gamma);
cmat hermitian_sqrt(const cmat& gamma);

// Shift of each slot under W(phi): phi on l slots, conj phi on r slots.
cvec doubled_shift(const cvec& phi);

// Amplitude a displaced number state |q> carries above `level` for a shift of norm `amplitude`:
// sum_{k > level} sqrt(k!/q!) / (k - q)! amplitude^(k - q).
double coherent_tail_estimate(double amplitude, int level, int q = 0);
// Thermal tail sum_j (lambda_j / (1 + lambda_j))^(level + 1) with the level set by the cap.
double thermal_tail_estimate(const FockSpace& space, const cmat& gamma);

// W(phi)* a_i W(phi) = a_i + phi_i on basis states with occupation <= test_occupation, and the
// coherent occupancy <W Omega, a*_i a_i W Omega> = |phi_i|^2.
CheckReport verify_weyl_shift(const FockSpace& space, const FockOperators& ops, const cvec& phi,
                              double tol, int test_occupation = 4);

struct ToyQuasiFree {
  cmat gamma;
  cmat k;
  cvec phi;          // empty or zero for no condensate
  cvec state;        // W(phi) T(gamma) Omega
  double truncation_estimate = 0.0;
  double norm_defect = 0.0;
};

ToyQuasiFree quasi_free_state(const FockSpace& space, const FockOperators& ops, const cmat& gamma,
                              const cvec& phi);

// l-sector 1-pdm = phi phi* + gamma, r-sector = conj of it, and the pairing
// <a_{l,x} a_{r,y}> = (sqrt(1 + gamma) sqrt(gamma))(x, y) + phi(x) conj(phi(y)).
CheckReport verify_bogoliubov_pdm(const FockSpace& space, const FockOperators& ops,
                                  const cmat& gamma, const cvec& phi, double tol);

// Four-point functions of shift-centered operators against the pairing sum, all 16
// creation/annihilation patterns on `samples` random slot choices each.
CheckReport verify_wick(const FockSpace& space, const FockOperators& ops, const cvec& state,
                        const cvec& shift, double tol, std::uint64_t seed, int samples = 4);

cplx expectation(const cvec& state, const spmat& op);

}  // namespace bose
