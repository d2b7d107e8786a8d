#include <cmath>
#include <random>

#include "doctest.h"
#include "pathsim/errors.hpp"
#include "pathsim/trotter.hpp"
#include "systems.hpp"

using namespace pathsim;
using pathsim::testing::loglog_slope;
using pathsim::testing::random_decomposition;

namespace {

HamiltonianDecomposition z_x(double c = 1.0) {
  return HamiltonianDecomposition::build_pauli({{"Z", c}, {"X", c}});
}

double measured_error(const HamiltonianDecomposition& dec, int k, int r, double t) {
  return spectral_norm(exp_unitary(dec.hamiltonian(), t) - trotter_unitary(dec, make_schedule(dec.num_terms(), k, r, t)));
}

}  // namespace

TEST_SUITE("trotter") {
  TEST_CASE("second-order schedule of two terms") {
    const auto s = make_schedule(2, 1, 1, 1.0);
    REQUIRE(s.M() == 4);
    const int terms[] = {1, 0, 0, 1};
    for (int m = 0; m < 4; ++m) {
      CHECK(s.factors[m].term == terms[m]);
      CHECK(s.factors[m].weight == doctest::Approx(0.5));
    }
  }

  TEST_CASE("first-order schedule of one term") {
    const auto s = make_schedule(1, 0, 3, 1.0);
    REQUIRE(s.M() == 3);
    for (const auto& f : s.factors) {
      CHECK(f.term == 0);
      CHECK(f.weight == 1.0);
    }
  }

  TEST_CASE("fourth-order schedule weights") {
    const double s2 = 1.0 / (4.0 - std::cbrt(4.0));
    CHECK(suzuki_weight(2) == doctest::Approx(s2));
    const auto s = make_schedule(2, 2, 1, 1.0);
    REQUIRE(s.M() == 20);
    int outer = 0, middle = 0;
    for (const auto& f : s.factors) {
      if (std::abs(f.weight - s2 / 2) < 1e-14) ++outer;
      if (std::abs(f.weight - (1 - 4 * s2) / 2) < 1e-14) ++middle;
    }
    CHECK(outer == 16);
    CHECK(middle == 4);
  }

  TEST_CASE("factor count and per-term weights telescope") {
    for (int L = 1; L <= 3; ++L) {
      for (int k = 0; k <= 3; ++k) {
        const int r = 3;
        const auto s = make_schedule(L, k, r, 2.0);
        const int expected = k == 0 ? L * r : 2 * L * static_cast<int>(std::pow(5, k - 1)) * r;
        CHECK(s.M() == expected);
        std::vector<double> total(static_cast<std::size_t>(L), 0.0);
        for (int m = 0; m < s.M(); ++m) total[static_cast<std::size_t>(s.factors[m].term)] += s.step_time(m);
        for (double v : total) CHECK(v == doctest::Approx(2.0).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("commuting terms are reproduced exactly") {
    const auto dec = HamiltonianDecomposition::build_pauli({{"ZI", 1.0}, {"IZ", 0.7}});
    for (int k = 0; k <= 2; ++k) {
      for (int r : {1, 3}) {
        CHECK(measured_error(dec, k, r, 1.3) < 1e-10);
        if (k >= 1) CHECK(error_bound(dec, k, 1.3, r) == 0.0);
      }
    }
    CHECK(error_bound(dec, 0, 1.0, 1) == 0.0);
  }

  TEST_CASE("first-order bound for X and Z") {
    CHECK(error_bound(z_x(), 0, 1.0, 10) == doctest::Approx(0.1));
  }

  TEST_CASE("alpha_comm for X and Z by direct commutators") {
    const auto dec = z_x();
    double expected = 0.0;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          const CMatrix inner = dec.term(b) * dec.term(c) - dec.term(c) * dec.term(b);
          expected += spectral_norm(dec.term(a) * inner - inner * dec.term(a));
        }
    CHECK(expected == doctest::Approx(16.0));
    CHECK(alpha_comm(dec, 1) == doctest::Approx(expected));
  }

  TEST_CASE("alpha_comm is homogeneous of degree 2k+1") {
    for (int k = 1; k <= 2; ++k)
      CHECK(alpha_comm(z_x(0.5), k) == doctest::Approx(std::pow(0.5, 2 * k + 1) * alpha_comm(z_x(), k)));
  }

  TEST_CASE("alpha_comm caps") {
    CHECK_THROWS_AS(alpha_comm(z_x(), 3), CapExceeded);
    CHECK_THROWS_AS(alpha_comm(z_x(), 0), ContractError);
  }

  TEST_CASE("measured error of X + Z is within the bound") {
    CHECK(measured_error(z_x(), 1, 8, 1.0) <= error_bound(z_x(), 1, 1.0, 8));
  }

  TEST_CASE("second order converges as r^-2") {
    std::vector<double> rs, errs;
    for (int r : {4, 8, 16, 32, 64}) {
      rs.push_back(r);
      errs.push_back(measured_error(z_x(), 1, r, 1.0));
    }
    CHECK(loglog_slope(rs, errs) == doctest::Approx(-2.0).epsilon(0.15));
  }

  TEST_CASE("bound dominates on random instances") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      const auto dec = random_decomposition(rng, 2, 2 + trial % 2);
      for (int k : {0, 1})
        for (int r : {1, 4}) CHECK(measured_error(dec, k, r, 1.0) <= error_bound(dec, k, 1.0, r));
    }
  }

  TEST_CASE("product formulas are unitary") {
    std::mt19937_64 rng(22);
    const auto dec = random_decomposition(rng, 2, 3);
    for (int k = 0; k <= 3; ++k)
      CHECK(unitarity_defect(trotter_unitary(dec, make_schedule(3, k, 2, 0.9))) < 1e-10);
  }
}
