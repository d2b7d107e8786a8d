#pragma once

#include <vector>

#include "pathsim/ham_decomp.hpp"
#include "pathsim/linalg.hpp"

namespace pathsim {

// One exponential exp(-i H_term * weight * t / r) of a product formula.
struct TrotterFactor {
  int term = 0;
  double weight = 1.0;
};

// Expanded product formula. Factor 0 is applied first. k = 0 is the
// first-order formula; k >= 1 is the symmetric formula of order 2k.
struct TrotterSchedule {
  int num_terms = 1;
  int k = 0;
  int r = 1;
  double t = 0.0;
  std::vector<TrotterFactor> factors;

  int M() const { return static_cast<int>(factors.size()); }
  double step_time(int m) const { return factors.at(static_cast<std::size_t>(m)).weight * t / r; }
};

// Recursion weight of the order-2k formula, 1 / (4 - 4^(1/(2k-1))).
double suzuki_weight(int k);

// Factors in exact recursion order, never merged. M = L r for k = 0 and
// 2 L 5^(k-1) r for k >= 1.
TrotterSchedule make_schedule(int num_terms, int k, int r, double t);

// prod_m exp(-i H_{l_m} tau_m t / r), later factors on the left.
CMatrix trotter_unitary(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule);

// Sum over all (2k+1)-tuples of the nested-commutator spectral norm.
// Requires 1 <= k <= 2 and L <= 4.
double alpha_comm(const HamiltonianDecomposition& decomp, int k);

// Product-formula error bound: t^2/(2r) sum_{l<k} ||[H_k, H_l]|| for k = 0,
// alpha_comm t^(2k+1) / r^(2k) for k >= 1.
double error_bound(const HamiltonianDecomposition& decomp, int k, double t, int r);

}  // namespace pathsim
