#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pathsim/linalg.hpp"
#include "pathsim/query_counter.hpp"

namespace pathsim {

struct TrotterSchedule;

// A Pauli word with a real coefficient, e.g. {"ZX", 0.5}.
struct PauliTerm {
  std::string word;
  double coeff = 1.0;
};

// How the eigenbasis of each term is ordered.
enum class BasisConvention {
  // hermitian_eig order: ascending eigenvalues with the deterministic gauge.
  kSorted,
  // Tensor-product order for Pauli words: bit k of the index selects the
  // +1 (bit 0) or -1 (bit 1) eigenvector of the k-th letter, the first letter
  // being the most significant bit. Identity letters use |0>, |1>.
  kPauliProduct,
};

// H = sum_l H_l with the eigensystem of every term. Term 0 must be diagonal in
// the computational basis.
class HamiltonianDecomposition {
 public:
  static HamiltonianDecomposition build(std::vector<CMatrix> terms, double zero_tol = 1e-12);
  static HamiltonianDecomposition build_pauli(const std::vector<PauliTerm>& terms,
                                              BasisConvention basis = BasisConvention::kSorted,
                                              double zero_tol = 1e-12);

  int n() const { return n_; }
  Eigen::Index dim() const { return Eigen::Index{1} << n_; }
  int num_terms() const { return static_cast<int>(terms_.size()); }
  const CMatrix& term(int l) const { return terms_.at(static_cast<std::size_t>(l)); }
  const EigenSystem& eigensystem(int l) const { return eigen_.at(static_cast<std::size_t>(l)); }
  double zero_tol() const { return zero_tol_; }
  BasisConvention basis_convention() const { return basis_; }
  CMatrix hamiltonian() const;

  // Overlap matrix with entry (q, j) = <chi_q^(to) | chi_j^(from)>.
  CMatrix overlap(int from, int to) const;

 private:
  HamiltonianDecomposition() = default;
  static void check_terms(const std::vector<CMatrix>& terms, int& n);

  int n_ = 0;
  double zero_tol_ = 1e-12;
  BasisConvention basis_ = BasisConvention::kSorted;
  std::vector<CMatrix> terms_;
  std::vector<EigenSystem> eigen_;
};

// Bipartite partner lists of a transition-weight matrix. weights(q, j) is the
// amplitude from state j on side 0 to state q on side 1. Genuine partners
// (|weight| > zero_tol) are listed first in ascending order, followed by
// padding entries with weight 0 so every list has exactly `degree` entries.
struct PartnerTable {
  CMatrix weights;
  int degree = 0;
  std::vector<std::vector<int>> forward;   // forward[j][p]: partner q of side-0 state j
  std::vector<std::vector<int>> backward;  // backward[q][p]: partner j of side-1 state q
  std::vector<int> forward_genuine;        // number of genuine entries of forward[j]
  std::vector<int> backward_genuine;
  // True when every padding entry is listed on both sides.
  bool reciprocal = true;

  int partner(int b, int j, int p) const;
  bool genuine(int b, int j, int p) const;
};

// Maximum number of entries above zero_tol in any row or column.
int max_degree(const CMatrix& weights, double zero_tol);

// Padding is greedy in ascending index order: each missing slot of side-0
// state j takes the smallest q not yet listed for j whose own list still has
// room, so padded pairs appear on both sides. When no such q exists the slot
// takes the smallest unlisted index without a matching back-reference and the
// table is marked non-reciprocal.
PartnerTable make_partner_table(const CMatrix& weights, int degree, double zero_tol);

// Overlap structure of every adjacent pair (l_m, l_{m+1}) of a schedule. The
// final factor m = M-1 is paired with its own basis.
class OverlapTable {
 public:
  OverlapTable(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule);

  int d() const { return d_; }
  int steps() const { return static_cast<int>(step_pair_.size()); }
  std::pair<int, int> terms_at(int m) const;
  const PartnerTable& table(int m) const;

  // Index function: partner q of state j on side b for slot p in [0, d).
  int f_ind(int m, int b, int j, int p) const;
  // <chi_q^(l_{m+1}) | chi_j^(l_m)>.
  cplx overlap(int m, int j, int q) const;

 private:
  int d_ = 1;
  std::vector<std::pair<int, int>> step_pair_;
  std::map<std::pair<int, int>, PartnerTable> tables_;
};

// Overlap sparsity d of a decomposition under a schedule.
int sparsity(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule);

// round-to-nearest(2^bits * x), ties to even, clamped to [0, 2^bits - 1].
std::uint64_t encode_magnitude(double x, int bits);

// Simulated oracles of the short-time algorithm. Every call to a public oracle
// method increments the suite's counter. The *_matrix methods build the
// induced permutation or diagonal matrix on the oracle registers without
// counting.
class OracleSuite {
 public:
  OracleSuite(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule, int bits);

  int bits() const { return bits_; }
  int d() const { return table_.d(); }
  Eigen::Index dim() const { return dim_; }
  int steps() const { return table_.steps(); }
  const OverlapTable& table() const { return table_; }

  // O_ind: f_ind(m, b, j, p).
  int ind(int m, int b, int j, int p) const;
  // O_C: whether vertex (b, j) belongs to colour class (c1, c2). Realised with
  // eight O_ind calls (compute and uncompute for both sides of the register).
  bool color_member(int m, int b, int j, int c1, int c2) const;
  // O_IM: [2^B |<chi_q^(l_{m+1}) | chi_j^(l_m)>|]_B.
  std::uint64_t im(int m, int j, int q) const;
  // O_IP: exp(i arg <chi_q^(l_{m+1}) | chi_j^(l_m)>); 1 for a zero overlap.
  cplx ip(int m, int j, int q) const;
  // O_EP: exp(-i lambda_j^(l_m) tau_m t / r).
  cplx ep(int m, int j) const;

  // Uncounted lookups used to build reference operators.
  double step_time(int m) const { return step_time_.at(static_cast<std::size_t>(m)); }
  double eigenvalue(int m, int j) const;
  int term_at(int m) const { return table_.terms_at(m).first; }
  double zero_tol() const;
  // Overlap with entries at or below zero_tol treated as exactly zero.
  cplx overlap(int m, int j, int q) const;

  // Register matrices. ind_matrix acts on |b>|j>|p>|c>, im_matrix on
  // |j>|q>|c> with a B-bit c, ip_matrix on |j>|q>, ep_matrix on |j>.
  CMatrix ind_matrix(int m) const;
  CMatrix im_matrix(int m) const;
  CMatrix ip_matrix(int m) const;
  CMatrix ep_matrix(int m) const;

  QueryCounter& counter() const { return counter_; }

 private:
  const HamiltonianDecomposition* decomp_;
  OverlapTable table_;
  int bits_;
  Eigen::Index dim_;
  std::vector<double> step_time_;
  mutable QueryCounter counter_;
};

}  // namespace pathsim
