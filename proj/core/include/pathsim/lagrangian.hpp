#pragma once

#include <functional>
#include <string>

#include "pathsim/linalg.hpp"
#include "pathsim/query_counter.hpp"

namespace pathsim {

// Lattice of 2^n positions q dx, q = 0..2^n - 1, with dx = x_max / 2^n. The
// timestep is bound to the lattice: tau = m x_max dx / (2 pi), and the total
// time is r tau.
struct LatticeConfig {
  int n = 4;
  double x_max = 1.0;
  double mass = 1.0;
  int r = 1;

  // Throws ContractError unless 1 <= n <= 10, r >= 1 and x_max, mass > 0.
  void validate() const;

  Eigen::Index size() const { return Eigen::Index{1} << n; }
  double dx() const { return x_max / static_cast<double>(size()); }
  double tau() const;
  double total_time() const { return r * tau(); }
  // Spacing of the momentum eigenvalues, 2 pi / x_max.
  double dp() const;

  // Configuration whose r steps span total_time: the mass is set to
  // 2 pi total_time 2^n / (r x_max^2).
  static LatticeConfig for_total_time(int n, double x_max, int r, double total_time);
};

// Real potential on positions in [0, x_max) with a declared bound v_max.
struct Potential {
  std::string name;
  std::function<double(double)> v;
  double v_max = 0.0;

  double operator()(double x) const { return v(x); }
  // Throws ContractError if |V(q dx)| > v_max anywhere on the lattice.
  void validate(const LatticeConfig& cfg) const;

  static Potential zero();
  static Potential constant(double c);
  // (1/2) m omega^2 (x - x0)^2, bounded on [0, x_max).
  static Potential harmonic(double mass, double omega, double x0, double x_max);
  // -depth on [left, right), 0 elsewhere.
  static Potential square_well(double left, double right, double depth);
};

// diag(q dx).
CMatrix position_op(const LatticeConfig& cfg);
// (2 pi / (x_max dx)) QFT X QFT^dagger; QFT|q> has eigenvalue 2 pi q / x_max.
CMatrix momentum_op(const LatticeConfig& cfg);
// diag(V(q dx)).
CMatrix potential_op(const LatticeConfig& cfg, const Potential& v);

// Phase oracle O_S(q_k, q_next) = exp(i m (x_next - x_k)^2 / (2 tau) - i tau V(x_k)).
class ActionOracle {
 public:
  ActionOracle(const LatticeConfig& cfg, const Potential& v);

  // One counted query.
  cplx operator()(Eigen::Index q_k, Eigen::Index q_next) const;
  // The oracle as a diagonal on the doubled register, index q_k 2^n + q_next.
  // Uncounted.
  CVector diagonal() const;
  // Uncounted value of one phase, for classical bookkeeping.
  cplx phase(Eigen::Index q_k, Eigen::Index q_next) const;

  QueryCounter& counter() const { return counter_; }

 private:
  Eigen::Index size_;
  RVector potential_;
  mutable QueryCounter counter_;
};

// Phase g carried by one step: lagrangian_step = g exp(-i P^2 tau / 2m) exp(-i V tau)
// with g = exp(i pi / 4) exp(-i tau V(0)).
cplx step_global_phase(const LatticeConfig& cfg, const Potential& v);

// One timestep on the columns of `states`: O_S(q, 0), inverse QFT, O_S(0, q').
// The oracle is queried twice and the inverse QFT applied once, whatever the
// number of columns. Throws ContractError if a column is not normalised.
void lagrangian_step(const LatticeConfig& cfg, const ActionOracle& oracle, Eigen::Ref<CMatrix> states);
CVector lagrangian_step(const LatticeConfig& cfg, const Potential& v, const CVector& state);

// r steps applied to the identity with the accumulated phase g^r removed, so
// the result equals (exp(-i P^2 tau / 2m) exp(-i V tau))^r.
CMatrix lagrangian_propagator(const LatticeConfig& cfg, const Potential& v, QueryCounter* queries = nullptr);

// The same operator as an explicit sum over all interior paths
// q_1 .. q_{r-1} of exp(i sum_k L(x_{k+1}, x_k) tau) with the prefactor
// (exp(-i pi / 4) / sqrt(2^n))^r. Capped at (2^n)^(r-1) <= 2^16.
CMatrix lagrangian_path_sum(const LatticeConfig& cfg, const Potential& v);

// (exp(-i P^2 tau / 2m) exp(-i V tau))^r from matrix exponentials.
CMatrix split_step_reference(const LatticeConfig& cfg, const Potential& v);

struct GaussSum {
  cplx lhs;
  cplx rhs;
};

// Both sides of the reciprocity identity for generalised Gauss sums.
// Requires a c != 0 and a c + b even.
GaussSum gauss_sum_check(long long a, long long b, long long c);

// Projector onto momentum modes k with 2 pi k / x_max <= p_max.
CMatrix momentum_cutoff_projector(const LatticeConfig& cfg, double p_max);

// Normalised Gaussian exp(-(x - x0)^2 / (4 sigma^2) + i k0 x) on the lattice.
CVector gaussian_packet(const LatticeConfig& cfg, double x0, double sigma, double k0);

// steps (2 tau^2 V_max p_max^2 / m) sqrt(p_max x_max / 2 pi + 1).
double feasible_bound(const LatticeConfig& cfg, const Potential& v, double p_max, int steps);

struct FeasibleErrorReport {
  double measured = 0.0;  // max POVM discrepancy after r steps
  double bound = 0.0;
  double outside_cutoff = 0.0;  // norm of psi beyond p_max
};

// Largest |<M>_exact - <M>_stepped| over every rank-1 position and momentum
// projector, where exact is exp(-i H r tau) and stepped is the r-step
// Lagrangian propagator, against feasible_bound(cfg, v, p_max, r).
// Throws ContractError if psi has norm above 1e-10 beyond p_max.
FeasibleErrorReport feasible_error_check(const LatticeConfig& cfg, const Potential& v, double p_max,
                                         const CVector& psi);

}  // namespace pathsim
