#pragma once

#include <cstdint>
#include <vector>

#include "pathsim/ham_decomp.hpp"
#include "pathsim/linalg.hpp"
#include "pathsim/query_counter.hpp"
#include "pathsim/trotter.hpp"

namespace pathsim {

// Explicit sum over all (2^n)^M eigenstate paths, in the computational basis.
// Capped at (2^n)^M <= 2^20.
CMatrix path_sum_propagator(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule);

// Transition operator of step m in eigen-index form: entry (q, j) is
// <chi_q^(l_{m+1}) | chi_j^(l_m)> exp(-i lambda_j^(l_m) tau_m t / r). The last
// step maps into its own basis, so prod_m A_m conjugated by the endpoint
// eigenvector matrices equals trotter_unitary.
CMatrix transition_operator(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule, int m);

// V_{l_{M-1}} (prod_m A_m) V_{l_0}^dagger.
CMatrix compose_transitions(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule,
                            const std::vector<CMatrix>& steps);

struct ColoredEdge {
  int j = 0;   // side-0 state
  int q = 0;   // side-1 state
  int c1 = 0;  // slot of q in the list of j
  int c2 = 0;  // slot of j in the list of q
  bool genuine = false;
};

// Bipartite transition graph of one step with its (c1, c2) edge colouring.
struct ColoredTransitionGraph {
  int m = 0;
  int dim = 0;
  int d = 1;
  std::vector<ColoredEdge> edges;
  // slot_edge[b][j][c] = edge at vertex (b, j) using slot c on side b, or -1.
  std::vector<std::vector<std::vector<int>>> slot_edge;

  bool member(int b, int j, int c1, int c2) const;
  // Throws InvariantViolation unless no two edges at one vertex share a colour.
  void validate() const;
};

ColoredTransitionGraph color_graph(const OverlapTable& table, int m);
ColoredTransitionGraph color_graph(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule, int m);

// Signed permutation U_{m,b,c1,c2} on flag (x) system, index flag * 2^n + j.
// Colour classes c >= d are empty.
CMatrix signed_permutation(const OracleSuite& oracles, int m, int b, int c1, int c2);
CMatrix signed_permutation(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule, int m, int b,
                           int c1, int c2, int bits);

// sum_{b < 2^B} sum_{c1, c2 < d} 2^-B (X (x) I) U_{m,b,c1,c2} on flag (x) system.
// Requires d^2 2^B <= 2^20.
CMatrix alternating_sum(const OracleSuite& oracles, int m);
CMatrix alternating_sum(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule, int m, int bits);

// Top-left block (flag 0 to flag 0) of a flag (x) system operator.
CMatrix flag_zero_block(const CMatrix& op);

// Unitary W on ancilla (x) system with a distinguished zero-ancilla subspace
// Pi = span{embed(j)} so that Pi W Pi = A / subnormalization on the system.
class BlockEncoding {
 public:
  virtual ~BlockEncoding() = default;

  virtual Eigen::Index system_dim() const = 0;
  virtual Eigen::Index total_dim() const = 0;
  virtual double subnormalization() const = 0;
  virtual int ancilla_qubits() const = 0;
  // Index of |0...0>_anc |j>_sys.
  virtual Eigen::Index embed(Eigen::Index j) const = 0;
  // Oracle calls made by one application of W or W^dagger.
  virtual QueryCounter sel_budget() const = 0;

  // In-place W or W^dagger on a state of size total_dim(). Each call adds
  // sel_budget() to counter().
  void apply(Eigen::Ref<CVector> state) const;
  void apply_adjoint(Eigen::Ref<CVector> state) const;

  // Pi W Pi restricted to the system.
  CMatrix block() const;
  // Full W; total_dim() must not exceed the dense cap.
  CMatrix dense() const;

  QueryCounter& counter() const { return counter_; }

 protected:
  virtual void apply_impl(Eigen::Ref<CVector> state, bool adjoint) const = 0;

 private:
  mutable QueryCounter counter_;
};

// LCU block encoding of one short-time step. Register layout, slowest index
// first: side bit s, system j, then the ancilla a = (b, c1, c2) with b in
// [0, 2^B) and c1, c2 in [0, d_pad). PREP is a Hadamard on every ancilla
// qubit and SEL follows the oracle register plan: membership, partner index,
// magnitude comparison, phase oracles, swap, and the uncompute chain.
class StepBlockEncoding : public BlockEncoding {
 public:
  StepBlockEncoding(const OracleSuite& oracles, int m);

  Eigen::Index system_dim() const override { return n_; }
  Eigen::Index total_dim() const override { return 2 * n_ * anc_; }
  double subnormalization() const override { return static_cast<double>(d_pad_) * d_pad_; }
  int ancilla_qubits() const override;
  Eigen::Index embed(Eigen::Index j) const override { return j * anc_; }
  QueryCounter sel_budget() const override { return budget_; }

  int padded_d() const { return d_pad_; }

 protected:
  void apply_impl(Eigen::Ref<CVector> state, bool adjoint) const override;

 private:
  void build_select(const OracleSuite& oracles, int m);

  Eigen::Index n_;
  Eigen::Index anc_;
  int bits_;
  int d_pad_;
  std::vector<std::int32_t> target_;
  std::vector<cplx> phase_;
  QueryCounter budget_;
};

// Per-SEL oracle budget of the short-time register plan.
QueryCounter step_select_budget();

struct AmplifiedBlock {
  CMatrix block;                  // Pi R^p W' Pi on the system
  int rounds = 0;                 // p
  double padded_subnormalization = 1.0;
  double min_success_weight = 0;  // smallest squared singular value of block
  int w_calls = 0;                // W' or W'^dagger applications per column, 2p + 1
  QueryCounter queries;           // oracle calls for one application to a state
};

// Rounds p: smallest integer with sin(pi / (2(2p+1))) <= 1/a.
int roaa_rounds(double subnormalization);

// Amplitude amplification with one extra flag qubit that pads the
// subnormalization up to 1/sin(pi/(2(2p+1))), so p rounds rotate exactly
// onto the target when the encoded block is unitary.
AmplifiedBlock roaa(const BlockEncoding& be);

struct SimulationReport {
  CMatrix unitary;
  double error = 0.0;           // ||result - exp(-iHt)||
  double trotter_error = 0.0;   // ||trotter_unitary - exp(-iHt)||
  double rounding_term = 0.0;   // L 5^k r d^2 / 2^B
  double trotter_term = 0.0;    // product-formula bound
  double bound = 0.0;           // rounding_term + trotter_term
  int d = 1;
  int M = 0;
  int rounds = 0;               // largest p over the steps
  QueryCounter queries;
};

SimulationReport simulate(const HamiltonianDecomposition& decomp, int k, int r, double t, int bits);

}  // namespace pathsim
