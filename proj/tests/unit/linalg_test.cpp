#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "pathsim/errors.hpp"
#include "pathsim/linalg.hpp"
#include "systems.hpp"

using namespace pathsim;
using pathsim::testing::max_abs;
using pathsim::testing::random_hermitian;
using pathsim::testing::random_matrix;

TEST_SUITE("linalg") {
  TEST_CASE("identity eigensystem uses the computational basis") {
    const auto e = hermitian_eig(CMatrix::Identity(2, 2));
    CHECK(e.values(0) == doctest::Approx(1.0));
    CHECK(e.values(1) == doctest::Approx(1.0));
    CHECK(max_abs(e.vectors - CMatrix::Identity(2, 2)) < 1e-14);
  }

  TEST_CASE("Pauli Z eigensystem is sorted with basis vectors") {
    const auto e = hermitian_eig(pauli('Z'));
    CHECK(e.values(0) == doctest::Approx(-1.0));
    CHECK(e.values(1) == doctest::Approx(1.0));
    CHECK(std::abs(e.vectors(1, 0) - cplx(1.0)) < 1e-14);
    CHECK(std::abs(e.vectors(0, 1) - cplx(1.0)) < 1e-14);
  }

  TEST_CASE("random Hermitian eigensystem residual and orthonormality") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 10; ++trial) {
      const CMatrix h = random_hermitian(rng, 4);
      const auto e = hermitian_eig(h);
      const double scale = spectral_norm(h);
      for (int j = 0; j < 4; ++j) {
        CHECK((h * e.vectors.col(j) - e.values(j) * e.vectors.col(j)).norm() <= 1e-10 * scale);
        if (j > 0) CHECK(e.values(j) >= e.values(j - 1));
      }
      CHECK(max_abs(e.vectors.adjoint() * e.vectors - CMatrix::Identity(4, 4)) < 1e-10);
    }
  }

  TEST_CASE("gauge puts the largest entry of every column on the positive real axis") {
    std::mt19937_64 rng(2);
    const auto e = hermitian_eig(random_hermitian(rng, 8));
    for (int j = 0; j < 8; ++j) {
      Eigen::Index i = 0;
      e.vectors.col(j).cwiseAbs().maxCoeff(&i);
      CHECK(std::abs(e.vectors(i, j).imag()) < 1e-14);
      CHECK(e.vectors(i, j).real() > 0.0);
    }
  }

  TEST_CASE("degenerate cluster is fixed deterministically") {
    // Rotate a doubly degenerate spectrum by a random unitary: the cluster
    // basis must not depend on the eigensolver's internal choice.
    std::mt19937_64 rng(3);
    const CMatrix u = exp_unitary(random_hermitian(rng, 3), 1.0);
    CMatrix d = CMatrix::Zero(3, 3);
    d(0, 0) = 1.0;
    d(1, 1) = 1.0;
    d(2, 2) = 2.0;
    const CMatrix h = u * d * u.adjoint();
    const auto a = hermitian_eig(h);
    const auto b = hermitian_eig(h);
    CHECK(a.vectors == b.vectors);
    CHECK(a.values == b.values);
    // The first cluster vector has no component orthogonal to span{e_0, cluster}.
    const CMatrix cluster = a.vectors.leftCols(2);
    const CVector e0 = CVector::Unit(3, 0);
    const CVector proj = cluster * (cluster.adjoint() * e0);
    CHECK(std::abs(a.vectors.col(0).dot(proj) / proj.norm()) == doctest::Approx(1.0).epsilon(1e-10));
  }

  TEST_CASE("non-square and non-Hermitian input is rejected") {
    CHECK_THROWS_AS(hermitian_eig(CMatrix::Zero(2, 3)), ContractError);
    CMatrix h = pauli('X');
    h(0, 1) = cplx(1.0, 0.5);
    CHECK_THROWS_AS(hermitian_eig(h), ContractError);
    CHECK_THROWS_AS(exp_unitary(h, 1.0), ContractError);
  }

  TEST_CASE("exp_unitary special values") {
    CHECK(max_abs(exp_unitary(CMatrix::Zero(4, 4), 3.7) - CMatrix::Identity(4, 4)) < 1e-15);
    CHECK(max_abs(exp_unitary(pauli('Z'), std::numbers::pi) + CMatrix::Identity(2, 2)) < 1e-12);
  }

  TEST_CASE("exp_unitary inverse and semigroup identities") {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
      const CMatrix h = random_hermitian(rng, 8);
      const CMatrix u = exp_unitary(h, 0.7);
      CHECK(unitarity_defect(u) < 1e-10);
      CHECK(max_abs(u * exp_unitary(h, -0.7) - CMatrix::Identity(8, 8)) < 1e-10);
      CHECK(max_abs(exp_unitary(h, 1.3) - exp_unitary(h, 0.6) * exp_unitary(h, 0.7)) < 1e-9);
    }
  }

  TEST_CASE("exp_unitary matches the Taylor series") {
    std::mt19937_64 rng(5);
    const CMatrix h = random_hermitian(rng, 4, 0.2);
    CMatrix term = CMatrix::Identity(4, 4), series = term;
    for (int k = 1; k < 30; ++k) {
      term = term * (cplx(0.0, -1.0) * h) / static_cast<double>(k);
      series += term;
    }
    CHECK(max_abs(exp_unitary(h, 1.0) - series) < 1e-12);
  }

  TEST_CASE("QFT of one qubit is the Hadamard") {
    CMatrix had(2, 2);
    had << 1, 1, 1, -1;
    had /= std::sqrt(2.0);
    CHECK(max_abs(qft_matrix(1) - had) < 1e-15);
  }

  TEST_CASE("QFT is unitary") {
    for (int n = 1; n <= 8; ++n) CHECK(unitarity_defect(qft_matrix(n)) < 1e-10);
  }

  TEST_CASE("QFT column 2 on three qubits matches the Fourier formula") {
    const CMatrix f = qft_matrix(3);
    for (int k = 0; k < 8; ++k) {
      const cplx expected = std::polar(1.0 / std::sqrt(8.0), 2.0 * std::numbers::pi * 2.0 * k / 8.0);
      CHECK(std::abs(f(k, 2) - expected) < 1e-14);
    }
  }

  TEST_CASE("QFT qubit range is enforced") {
    CHECK_THROWS_AS(qft_matrix(0), ContractError);
    CHECK_THROWS_AS(qft_matrix(13), ContractError);
  }

  TEST_CASE("spectral norm") {
    CHECK(spectral_norm(CMatrix::Identity(3, 3)) == doctest::Approx(1.0));
    CMatrix d = CMatrix::Zero(2, 2);
    d(0, 0) = 3.0;
    d(1, 1) = cplx(0.0, -4.0);
    CHECK(spectral_norm(d) == doctest::Approx(4.0));
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 5; ++trial) {
      const CMatrix a = random_matrix(rng, 5, 5);
      const CMatrix gram = a.adjoint() * a;
      Eigen::SelfAdjointEigenSolver<CMatrix> es(gram);
      CHECK(spectral_norm(a) == doctest::Approx(std::sqrt(es.eigenvalues().maxCoeff())).epsilon(1e-10));
    }
  }

  TEST_CASE("Pauli strings put the first letter on the most significant qubit") {
    const CMatrix zx = pauli_string("ZX");
    CHECK(max_abs(zx - kron(pauli('Z'), pauli('X'))) < 1e-15);
    CHECK(std::abs(zx(1, 0) - cplx(1.0)) < 1e-15);
    CHECK(std::abs(zx(3, 2) - cplx(-1.0)) < 1e-15);
    CHECK_THROWS_AS(pauli_string("ZQ"), ContractError);
  }

  TEST_CASE("time-ordered propagator of a constant H") {
    std::mt19937_64 rng(7);
    const CMatrix h = random_hermitian(rng, 2);
    const CMatrix u = time_ordered_propagator([&](double) { return h; }, 1.3, 256);
    CHECK(spectral_norm(u - exp_unitary(h, 1.3)) < 1e-8);
  }

  TEST_CASE("time-ordered propagator of a commuting family") {
    const CMatrix z = pauli('Z');
    const CMatrix u = time_ordered_propagator([&](double s) { return CMatrix(s * z); }, 1.0, 64);
    CHECK(spectral_norm(u - exp_unitary(z, 0.5)) < 1e-12);
  }

  TEST_CASE("time-ordered propagator converges at second order") {
    const CMatrix z = pauli('Z'), x = pauli('X');
    const HamiltonianFn h = [&](double s) -> CMatrix { return z + std::sin(2.0 * s) * x; };
    CHECK(richardson_ratio(h, 2.0, 64) >= 3.0);
    CHECK_THROWS_AS(time_ordered_propagator(h, 1.0, 0), ContractError);
  }
}
