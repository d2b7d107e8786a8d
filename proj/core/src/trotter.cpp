#include "pathsim/trotter.hpp"

#include <cmath>
#include <map>
#include <string>
#include <utility>

#include "pathsim/errors.hpp"

namespace pathsim {
namespace {

constexpr const char* kModule = "trotter";
constexpr int kMaxOrder = 3;

// Factor sequence of U_{2k}(1) for one step.
std::vector<TrotterFactor> step_factors(int num_terms, int k) {
  std::vector<TrotterFactor> out;
  if (k == 0) {
    for (int l = 0; l < num_terms; ++l) out.push_back({l, 1.0});
    return out;
  }
  if (k == 1) {
    for (int l = num_terms - 1; l >= 0; --l) out.push_back({l, 0.5});
    for (int l = 0; l < num_terms; ++l) out.push_back({l, 0.5});
    return out;
  }
  const std::vector<TrotterFactor> inner = step_factors(num_terms, k - 1);
  const double s = suzuki_weight(k);
  const double scale[5] = {s, s, 1.0 - 4.0 * s, s, s};
  for (double c : scale) {
    for (const auto& f : inner) out.push_back({f.term, f.weight * c});
  }
  return out;
}

}  // namespace

double suzuki_weight(int k) {
  if (k < 2) throw ContractError(kModule, "recursion weight is defined for k >= 2");
  return 1.0 / (4.0 - std::pow(4.0, 1.0 / (2.0 * k - 1.0)));
}

TrotterSchedule make_schedule(int num_terms, int k, int r, double t) {
  if (num_terms < 1) throw ContractError(kModule, "need at least one term");
  if (r < 1) throw ContractError(kModule, "step count r must be positive");
  if (k < 0) throw ContractError(kModule, "half-order k must be non-negative");
  if (k > kMaxOrder) throw CapExceeded(kModule, "half-order k=" + std::to_string(k) + " exceeds cap 3");
  if (!std::isfinite(t)) throw ContractError(kModule, "time must be finite");
  TrotterSchedule s;
  s.num_terms = num_terms;
  s.k = k;
  s.r = r;
  s.t = t;
  const std::vector<TrotterFactor> one = step_factors(num_terms, k);
  s.factors.reserve(one.size() * static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) s.factors.insert(s.factors.end(), one.begin(), one.end());
  return s;
}

CMatrix trotter_unitary(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule) {
  if (schedule.num_terms != decomp.num_terms()) {
    throw ContractError(kModule, "schedule and decomposition disagree on the number of terms");
  }
  std::map<std::pair<int, double>, CMatrix> cache;
  CMatrix u = CMatrix::Identity(decomp.dim(), decomp.dim());
  for (int m = 0; m < schedule.M(); ++m) {
    const auto& f = schedule.factors[static_cast<std::size_t>(m)];
    const auto key = std::make_pair(f.term, f.weight);
    auto it = cache.find(key);
    if (it == cache.end()) {
      const EigenSystem& es = decomp.eigensystem(f.term);
      const CVector ph = (es.values.cast<cplx>() * cplx(0.0, -schedule.step_time(m))).array().exp();
      it = cache.emplace(key, es.vectors * ph.asDiagonal() * es.vectors.adjoint()).first;
    }
    u = it->second * u;
  }
  return u;
}

double alpha_comm(const HamiltonianDecomposition& decomp, int k) {
  const int L = decomp.num_terms();
  if (k < 1) throw ContractError(kModule, "alpha_comm needs k >= 1");
  if (k > 2 || L > 4) {
    throw CapExceeded(kModule, "alpha_comm is capped at k <= 2 and L <= 4 (got k=" + std::to_string(k) +
                                   ", L=" + std::to_string(L) + ")");
  }
  const int depth = 2 * k + 1;
  double total = 0.0;
  // Builds [H_{j_i}, ...] from the innermost pair outwards.
  auto recurse = [&](auto&& self, const CMatrix& inner, int remaining) -> void {
    if (remaining == 0) {
      total += spectral_norm(inner);
      return;
    }
    for (int j = 0; j < L; ++j) self(self, commutator(decomp.term(j), inner), remaining - 1);
  };
  for (int a = 0; a < L; ++a) {
    for (int b = 0; b < L; ++b) recurse(recurse, commutator(decomp.term(a), decomp.term(b)), depth - 2);
  }
  return total;
}

double error_bound(const HamiltonianDecomposition& decomp, int k, double t, int r) {
  if (r < 1) throw ContractError(kModule, "step count r must be positive");
  if (k == 0) {
    double sum = 0.0;
    for (int l = 0; l < decomp.num_terms(); ++l) {
      for (int j = l + 1; j < decomp.num_terms(); ++j) {
        sum += spectral_norm(commutator(decomp.term(j), decomp.term(l)));
      }
    }
    return t * t / (2.0 * r) * sum;
  }
  return alpha_comm(decomp, k) * std::pow(std::abs(t), 2 * k + 1) / std::pow(static_cast<double>(r), 2 * k);
}

}  // namespace pathsim
