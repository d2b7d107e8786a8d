#include <cmath>
#include <numbers>
#include <random>
#include <map>
#include <set>

#include "doctest.h"
#include "pathsim/errors.hpp"
#include "pathsim/short_path.hpp"
#include "systems.hpp"

using namespace pathsim;
using pathsim::testing::max_abs;
using pathsim::testing::random_decomposition;

namespace {

HamiltonianDecomposition zz_zx() {
  return HamiltonianDecomposition::build_pauli({{"ZZ", 1.0}, {"ZX", 1.0}}, BasisConvention::kPauliProduct);
}

// (X (x) I) on a flag (x) system operator: swap the two row blocks.
CMatrix flip_flag(const CMatrix& u) {
  const Eigen::Index n = u.rows() / 2;
  CMatrix out(u.rows(), u.cols());
  out.topRows(n) = u.bottomRows(n);
  out.bottomRows(n) = u.topRows(n);
  return out;
}

// Two diagonal terms sharing the computational basis.
HamiltonianDecomposition commuting_pair() {
  return HamiltonianDecomposition::build_pauli({{"ZI", 1.0}, {"IZ", 0.5}}, BasisConvention::kPauliProduct);
}

}  // namespace

TEST_SUITE("short_path") {
  TEST_CASE("path sum of a single diagonal term is the phase matrix") {
    const auto dec = HamiltonianDecomposition::build_pauli({{"ZI", 1.0}});
    const auto sch = make_schedule(1, 0, 3, 0.8);
    CHECK(max_abs(path_sum_propagator(dec, sch) - exp_unitary(dec.hamiltonian(), 0.8)) < 1e-12);
  }

  TEST_CASE("path sum equals the product formula") {
    const auto dec = zz_zx();
    const auto sch = make_schedule(2, 1, 1, 0.7);
    CHECK(spectral_norm(path_sum_propagator(dec, sch) - trotter_unitary(dec, sch)) < 1e-10);
    const auto zx = HamiltonianDecomposition::build_pauli({{"Z", 1.0}, {"X", 1.0}});
    const auto sch2 = make_schedule(2, 0, 2, 1.0);
    CHECK(spectral_norm(path_sum_propagator(zx, sch2) - trotter_unitary(zx, sch2)) < 1e-10);
  }

  TEST_CASE("path sum cap") {
    CHECK_THROWS_AS(path_sum_propagator(zz_zx(), make_schedule(2, 1, 3, 1.0)), CapExceeded);
  }

  TEST_CASE("transition operators") {
    const auto diag = HamiltonianDecomposition::build_pauli({{"ZZ", 1.0}, {"IZ", 0.3}}, BasisConvention::kPauliProduct);
    const CMatrix a = transition_operator(diag, make_schedule(2, 0, 1, 1.0), 0);
    CHECK(max_abs(a - CMatrix(a.diagonal().asDiagonal())) < 1e-14);

    const auto dec = zz_zx();
    const auto sch = make_schedule(2, 0, 1, 0.0);
    CHECK(max_abs(transition_operator(dec, sch, 0) - dec.overlap(0, 1)) < 1e-14);

    std::mt19937_64 rng(31);
    const auto rnd = random_decomposition(rng, 2, 3);
    const auto rs = make_schedule(3, 1, 2, 0.9);
    std::vector<CMatrix> steps;
    for (int m = 0; m < rs.M(); ++m) {
      steps.push_back(transition_operator(rnd, rs, m));
      CHECK(unitarity_defect(steps.back()) < 1e-10);
    }
    CHECK(spectral_norm(compose_transitions(rnd, rs, steps) - trotter_unitary(rnd, rs)) < 1e-10);
  }

  TEST_CASE("colouring of the worked example") {
    const auto g = color_graph(zz_zx(), make_schedule(2, 0, 1, 1.0), 0);
    CHECK(g.d == 2);
    CHECK_NOTHROW(g.validate());
    int found = 0;
    for (const auto& e : g.edges) {
      if (e.j == 2 && e.q == 2) {
        CHECK((e.c1 == 0 && e.c2 == 0));
        ++found;
      }
      if (e.j == 2 && e.q == 3) {
        CHECK((e.c1 == 1 && e.c2 == 0));
        ++found;
      }
      if (e.j == 3 && e.q == 3) {
        CHECK((e.c1 == 1 && e.c2 == 1));
        ++found;
      }
    }
    CHECK(found == 3);
  }

  TEST_CASE("d = 1 graph has the single colour (0, 0)") {
    const auto dec = commuting_pair();
    const auto g = color_graph(dec, make_schedule(2, 0, 1, 1.0), 0);
    CHECK(g.d == 1);
    for (const auto& e : g.edges) {
      CHECK(e.j == e.q);
      CHECK((e.c1 == 0 && e.c2 == 0));
    }
  }

  TEST_CASE("random three-qubit colourings are partial matchings") {
    std::mt19937_64 rng(32);
    const auto dec = random_decomposition(rng, 3, 2);
    const auto sch = make_schedule(2, 0, 1, 1.0);
    const auto g = color_graph(dec, sch, 0);
    CHECK_NOTHROW(g.validate());
    std::set<std::pair<int, int>> classes;
    std::map<std::pair<int, int>, std::set<int>> left, right;
    for (const auto& e : g.edges) {
      classes.insert({e.c1, e.c2});
      CHECK(left[{e.c1, e.c2}].insert(e.j).second);
      CHECK(right[{e.c1, e.c2}].insert(e.q).second);
    }
    CHECK(static_cast<int>(classes.size()) <= g.d * g.d);
  }

  TEST_CASE("signed permutations") {
    const auto dec = zz_zx();
    const auto sch = make_schedule(2, 0, 1, 0.6);
    const OracleSuite o(dec, sch, 4);
    const int n = 4;
    for (int b : {0, 5, 15}) {
      for (int c1 = 0; c1 < 2; ++c1) {
        for (int c2 = 0; c2 < 2; ++c2) {
          const CMatrix u = signed_permutation(o, 0, b, c1, c2);
          CHECK(unitarity_defect(u) < 1e-12);
          const auto g = color_graph(o.table(), 0);
          for (int j = 0; j < n; ++j) {
            if (!g.member(0, j, c1, c2)) CHECK(std::abs(u(j, j) - cplx(b % 2 ? -1.0 : 1.0)) < 1e-14);
          }
        }
      }
    }
    // b = 0 on the genuine edge 2 -> 3.
    const CMatrix u = signed_permutation(o, 0, 0, 1, 0);
    const cplx ov = dec.overlap(0, 1)(3, 2);
    const double lambda = dec.eigensystem(0).values(2);
    const cplx expected = ov / std::abs(ov) * std::polar(1.0, -lambda * 0.6);
    CHECK(std::abs(u(n + 3, 2) - expected) < 1e-14);
  }

  TEST_CASE("alternating sum is the weighted sum of signed permutations") {
    const auto dec = zz_zx();
    const auto sch = make_schedule(2, 1, 1, 0.4);
    const OracleSuite o(dec, sch, 3);
    CMatrix direct = CMatrix::Zero(8, 8);
    for (int b = 0; b < 8; ++b)
      for (int c1 = 0; c1 < 2; ++c1)
        for (int c2 = 0; c2 < 2; ++c2) direct += flip_flag(signed_permutation(o, 1, b, c1, c2)) / 8.0;
    CHECK(max_abs(alternating_sum(o, 1) - direct) < 1e-14);
  }

  TEST_CASE("rounding defect of the alternating sum is within 2 d^2 / 2^B") {
    const auto dec = zz_zx();
    const auto sch = make_schedule(2, 1, 1, 1.0);
    for (int bits : {4, 6, 8, 10}) {
      const OracleSuite o(dec, sch, bits);
      for (int m = 0; m < sch.M(); ++m) {
        const double defect =
            spectral_norm(flag_zero_block(alternating_sum(o, m)) - transition_operator(dec, sch, m));
        CHECK(defect <= 2.0 * o.d() * o.d() / std::ldexp(1.0, bits));
      }
    }
  }

  TEST_CASE("block encoding of the worked example") {
    const auto dec = zz_zx();
    const auto sch = make_schedule(2, 1, 1, 1.0);
    const OracleSuite o(dec, sch, 4);
    for (int m = 0; m < sch.M(); ++m) {
      const StepBlockEncoding be(o, m);
      CHECK(be.subnormalization() == 4.0);
      CHECK(be.ancilla_qubits() == 1 + 4 + 2);
      CHECK(max_abs(be.block() - flag_zero_block(alternating_sum(o, m)) / 4.0) < 1e-10);
    }
    const StepBlockEncoding be(o, 0);
    CHECK(unitarity_defect(be.dense()) < 1e-10);
  }

  TEST_CASE("d = 1 block is the phase matrix scaled by the clamped magnitude") {
    // |overlap| = 1 encodes as 2^B - 1 (odd), and the alternating tail leaves
    // one -1, so every genuine edge carries (2^B - 2) / 2^B.
    const auto dec = commuting_pair();
    const auto sch = make_schedule(2, 0, 1, 0.7);
    for (int bits : {1, 4}) {
      const OracleSuite o(dec, sch, bits);
      const StepBlockEncoding be(o, 0);
      const double scale = (std::ldexp(1.0, bits) - 2.0) / std::ldexp(1.0, bits);
      CHECK(max_abs(be.block() - scale * transition_operator(dec, sch, 0)) < 1e-12);
    }
  }

  TEST_CASE("one SEL costs a fixed budget whatever the system size") {
    const QueryCounter budget = step_select_budget();
    CHECK(budget.count(Oracle::kIndex) == 18u);
    CHECK(budget.count(Oracle::kMagnitude) == 2u);
    CHECK(budget.count(Oracle::kPhase) == 1u);
    CHECK(budget.count(Oracle::kEigenPhase) == 1u);
    std::mt19937_64 rng(33);
    for (int n : {1, 2, 3}) {
      const auto dec = random_decomposition(rng, n, 2);
      const OracleSuite o(dec, make_schedule(2, 0, 1, 1.0), 2);
      const StepBlockEncoding be(o, 0);
      CVector state = CVector::Zero(be.total_dim());
      state(be.embed(0)) = 1.0;
      be.apply(state);
      CHECK(be.counter() == budget);
      CHECK(state.norm() == doctest::Approx(1.0));
    }
  }

  TEST_CASE("amplification rounds") {
    CHECK(roaa_rounds(1.0) == 0);
    int p = 0;
    while (std::sin(std::numbers::pi / (2.0 * (2 * p + 1))) > 0.25) ++p;
    CHECK(p == 3);
    CHECK(roaa_rounds(4.0) == p);
  }

  TEST_CASE("d = 1 amplification returns the block") {
    const auto dec = commuting_pair();
    const auto sch = make_schedule(2, 0, 1, 0.7);
    const OracleSuite o(dec, sch, 2);
    const StepBlockEncoding be(o, 0);
    const auto amp = roaa(be);
    CHECK(amp.rounds == 0);
    CHECK(amp.w_calls == 1);
    CHECK(max_abs(amp.block - be.block()) < 1e-14);
  }

  TEST_CASE("amplified worked-example step is close to unitary") {
    const auto dec = zz_zx();
    const auto sch = make_schedule(2, 1, 1, 1.0);
    const OracleSuite o(dec, sch, 8);
    const StepBlockEncoding be(o, 0);
    const auto amp = roaa(be);
    CHECK(amp.rounds == 3);
    CHECK(amp.w_calls == 7);
    const double eps = 16.0 / 256.0;
    CHECK(spectral_norm(amp.block - transition_operator(dec, sch, 0)) <= 16.0 * 4.0 / 256.0);
    CHECK(amp.min_success_weight >= 1.0 - 64.0 * eps * eps);
  }

  TEST_CASE("commuting decomposition is limited by rounding only") {
    const auto dec = commuting_pair();
    const auto rep = simulate(dec, 1, 2, 1.0, 6);
    CHECK(rep.trotter_term == 0.0);
    CHECK(rep.error <= rep.rounding_term);
  }

  TEST_CASE("queries per step do not depend on r or t") {
    const auto dec = HamiltonianDecomposition::build_pauli({{"Z", 1.0}, {"X", 1.0}});
    const auto a = simulate(dec, 1, 2, 1.0, 6);
    const auto b = simulate(dec, 1, 4, 2.5, 6);
    CHECK(b.M == 2 * a.M);
    CHECK(b.queries.total() == 2 * a.queries.total());
    for (int o = 0; o < static_cast<int>(Oracle::kCount); ++o)
      CHECK(b.queries.count(Oracle(o)) == 2 * a.queries.count(Oracle(o)));
  }
}
