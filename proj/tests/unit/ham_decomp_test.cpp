#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "doctest.h"
#include "pathsim/decomp_json.hpp"
#include "pathsim/errors.hpp"
#include "pathsim/ham_decomp.hpp"
#include "pathsim/trotter.hpp"
#include "systems.hpp"

using namespace pathsim;
using pathsim::testing::max_abs;
using pathsim::testing::random_decomposition;

namespace {

HamiltonianDecomposition zz_zx() {
  return HamiltonianDecomposition::build_pauli({{"ZZ", 1.0}, {"ZX", 1.0}}, BasisConvention::kPauliProduct);
}

// Nonzero overlaps counted directly from the eigenvector matrices.
int direct_degree(const HamiltonianDecomposition& dec, int from, int to) {
  const CMatrix ov = dec.eigensystem(to).vectors.adjoint() * dec.eigensystem(from).vectors;
  int d = 0;
  for (Eigen::Index i = 0; i < ov.rows(); ++i) {
    int row = 0, col = 0;
    for (Eigen::Index j = 0; j < ov.cols(); ++j) {
      row += std::abs(ov(i, j)) > 1e-12;
      col += std::abs(ov(j, i)) > 1e-12;
    }
    d = std::max({d, row, col});
  }
  return d;
}

}  // namespace

TEST_SUITE("ham_decomp") {
  TEST_CASE("ZZ/ZX eigenbases in tensor-product order") {
    const auto dec = zz_zx();
    CHECK(max_abs(dec.eigensystem(0).vectors - CMatrix::Identity(4, 4)) < 1e-14);
    const double h = 1.0 / std::sqrt(2.0);
    CMatrix expected(4, 4);
    expected << h, h, 0, 0,   //
        h, -h, 0, 0,          //
        0, 0, h, h,           //
        0, 0, h, -h;
    CHECK(max_abs(dec.eigensystem(1).vectors - expected) < 1e-14);
    const double signs[] = {1.0, -1.0, -1.0, 1.0};
    for (int j = 0; j < 4; ++j) CHECK(dec.eigensystem(1).values(j) == doctest::Approx(signs[j]));
  }

  TEST_CASE("sorted convention spans the same eigenspaces") {
    const auto dec = HamiltonianDecomposition::build_pauli({{"ZZ", 1.0}, {"ZX", 1.0}});
    for (int l = 0; l < 2; ++l) {
      const auto& e = dec.eigensystem(l);
      CHECK(max_abs(dec.term(l) * e.vectors - e.vectors * e.values.cast<cplx>().asDiagonal().toDenseMatrix()) <
            1e-12);
    }
  }

  TEST_CASE("single diagonal term has sparsity 1") {
    const auto dec = HamiltonianDecomposition::build_pauli({{"Z", 1.0}});
    CHECK(sparsity(dec, make_schedule(1, 0, 2, 1.0)) == 1);
  }

  TEST_CASE("Z, X, Y on one qubit has sparsity 2") {
    const auto dec = HamiltonianDecomposition::build_pauli({{"Z", 1.0}, {"X", 1.0}, {"Y", 1.0}});
    CHECK(sparsity(dec, make_schedule(3, 1, 1, 1.0)) == 2);
    const CMatrix ov = dec.overlap(1, 2);
    CHECK(ov.cwiseAbs().minCoeff() == doctest::Approx(1.0 / std::sqrt(2.0)));
  }

  TEST_CASE("sparsity of the worked example and of ZZ/XX") {
    CHECK(sparsity(zz_zx(), make_schedule(2, 1, 1, 1.0)) == 2);
    const auto zzxx =
        HamiltonianDecomposition::build_pauli({{"ZZ", 1.0}, {"XX", 1.0}}, BasisConvention::kPauliProduct);
    CHECK(direct_degree(zzxx, 0, 1) == 4);
    CHECK(sparsity(zzxx, make_schedule(2, 0, 1, 1.0)) == 4);
    // The sorted gauge picks Bell states inside the degenerate XX eigenspaces.
    const auto bell = HamiltonianDecomposition::build_pauli({{"ZZ", 1.0}, {"XX", 1.0}});
    CHECK(direct_degree(bell, 0, 1) == 2);
    CHECK(sparsity(bell, make_schedule(2, 0, 1, 1.0)) == 2);
  }

  TEST_CASE("commuting diagonal terms have sparsity 1") {
    const auto dec = HamiltonianDecomposition::build_pauli({{"ZI", 1.0}, {"IZ", 0.5}});
    CHECK(sparsity(dec, make_schedule(2, 1, 2, 1.0)) == 1);
  }

  TEST_CASE("index function of the worked example") {
    const auto dec = zz_zx();
    const auto sch = make_schedule(2, 0, 1, 1.0);
    const OverlapTable table(dec, sch);
    REQUIRE(table.terms_at(0) == std::pair<int, int>{0, 1});
    CHECK(table.f_ind(0, 0, 2, 0) == 2);
    CHECK(table.f_ind(0, 0, 2, 1) == 3);
    CHECK_THROWS_AS(table.f_ind(0, 0, 2, 2), ContractError);
  }

  TEST_CASE("d = 1 index function is the identity") {
    const auto dec =
        HamiltonianDecomposition::build_pauli({{"ZI", 1.0}, {"IZ", 0.5}}, BasisConvention::kPauliProduct);
    const auto sch = make_schedule(2, 0, 1, 1.0);
    const OverlapTable table(dec, sch);
    for (int m = 0; m < table.steps(); ++m)
      for (int b = 0; b < 2; ++b)
        for (int j = 0; j < 4; ++j) CHECK(table.f_ind(m, b, j, 0) == j);
  }

  TEST_CASE("padding takes the smallest free partner on both sides") {
    CMatrix w = CMatrix::Identity(4, 4);
    w(1, 0) = 0.5;
    const auto t = make_partner_table(w, 2, 1e-12);
    CHECK(t.forward[0] == std::vector<int>{0, 1});
    CHECK(t.forward[1] == std::vector<int>{1, 0});
    CHECK(t.forward[2] == std::vector<int>{2, 3});
    CHECK(t.forward[3] == std::vector<int>{3, 2});
    CHECK(t.backward[0] == std::vector<int>{0, 1});
    CHECK(t.forward_genuine == std::vector<int>{2, 1, 1, 1});
    CHECK(t.reciprocal);
    CHECK(t.genuine(0, 0, 1));
    CHECK_FALSE(t.genuine(0, 1, 1));
  }

  TEST_CASE("random tables: injective colour slots, round trip, unitary overlaps") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
      const auto dec = random_decomposition(rng, 2, 3);
      const auto sch = make_schedule(3, 1, 1, 1.0);
      const OverlapTable table(dec, sch);
      for (int m = 0; m < table.steps(); ++m) {
        const auto [from, to] = table.terms_at(m);
        CHECK(unitarity_defect(dec.overlap(from, to)) < 1e-10);
        const auto& pt = table.table(m);
        // Within one colour class (c1, c2), distinct members have distinct partners.
        for (int c1 = 0; c1 < table.d(); ++c1) {
          for (int c2 = 0; c2 < table.d(); ++c2) {
            std::set<int> seen;
            int members = 0;
            for (int j = 0; j < 4; ++j) {
              const int q = table.f_ind(m, 0, j, c1);
              if (table.f_ind(m, 1, q, c2) != j) continue;
              ++members;
              seen.insert(q);
            }
            CHECK(static_cast<int>(seen.size()) == members);
          }
        }
        for (int j = 0; j < 4; ++j) {
          for (int p = 0; p < table.d(); ++p) {
            if (!pt.genuine(0, j, p)) continue;
            const int q = table.f_ind(m, 0, j, p);
            bool back = false;
            for (int pp = 0; pp < table.d(); ++pp) back = back || table.f_ind(m, 1, q, pp) == j;
            CHECK(back);
          }
        }
      }
    }
  }

  TEST_CASE("term 0 must be diagonal and the error names the entry") {
    try {
      HamiltonianDecomposition::build({pauli('X'), pauli('Z')});
      FAIL("expected ContractError");
    } catch (const ContractError& e) {
      CHECK(std::string(e.what()).find("(1, 0)") != std::string::npos);
    }
    CHECK_THROWS_AS(HamiltonianDecomposition::build({pauli('Z'), pauli_string("XX")}), ContractError);
  }

  TEST_CASE("magnitude encoding rounds to nearest, ties to even") {
    CHECK(encode_magnitude(1.0 / std::sqrt(2.0), 8) == 181u);
    CHECK(encode_magnitude(1.0, 4) == 15u);
    CHECK(encode_magnitude(0.0, 4) == 0u);
    CHECK(encode_magnitude(2.5 / 16.0, 4) == 2u);
    CHECK(encode_magnitude(3.5 / 16.0, 4) == 4u);
  }

  TEST_CASE("oracle suite values and counting") {
    const auto dec = zz_zx();
    const OracleSuite o(dec, make_schedule(2, 0, 1, 1.0), 8);
    CHECK(o.im(0, 2, 3) == 181u);
    CHECK(std::abs(o.ip(0, 2, 2) - cplx(1.0)) < 1e-14);
    CHECK(o.ind(0, 0, 2, 1) == 3);
    CHECK(o.counter().count(Oracle::kMagnitude) == 1u);
    CHECK(o.counter().count(Oracle::kPhase) == 1u);
    CHECK(o.counter().count(Oracle::kIndex) == 1u);
    const OracleSuite small(dec, make_schedule(2, 0, 1, 1.0), 2);
    CHECK(unitarity_defect(small.ind_matrix(0)) < 1e-12);
    CHECK(unitarity_defect(small.im_matrix(0)) < 1e-12);
    CHECK(unitarity_defect(small.ip_matrix(0)) < 1e-12);
  }

  TEST_CASE("eigenvalue phase oracle gives -1 at phase pi") {
    const auto dec = HamiltonianDecomposition::build_pauli({{"Z", 1.0}});
    const OracleSuite o(dec, make_schedule(1, 0, 1, std::numbers::pi), 4);
    REQUIRE(o.eigenvalue(0, 1) == doctest::Approx(1.0));
    CHECK(std::abs(o.ep(0, 1) + 1.0) < 1e-14);
    CHECK(o.counter().count(Oracle::kEigenPhase) == 1u);
  }

  TEST_CASE("decomposition JSON with matrices and Pauli words") {
    const auto dec = parse_decomposition(R"({"n": 1, "terms": [
        [[[1, 0], [0, 0]], [[0, 0], [-1, 0]]],
        {"pauli": "X", "coeff": 0.5}], "zero_tol": 1e-10})");
    CHECK(dec.num_terms() == 2);
    CHECK(dec.zero_tol() == doctest::Approx(1e-10));
    CHECK(max_abs(dec.term(0) - pauli('Z')) < 1e-15);
    CHECK(max_abs(dec.term(1) - 0.5 * pauli('X')) < 1e-15);
    CHECK_THROWS_AS(parse_decomposition(R"({"n": 1, "terms": [{"pauli": "XX"}]})"), ContractError);
    CHECK_THROWS_AS(parse_decomposition(R"({"n": 1, "terms": [], "extra": 1})"), ContractError);
  }
}
