#pragma once

#include <complex>
#include <functional>
#include <string_view>

#include <Eigen/Dense>

namespace pathsim {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

// Largest matrix dimension any dense routine accepts.
inline constexpr int kMaxDim = 1 << 12;

// Eigenpairs of a Hermitian matrix. values are ascending and column j of
// vectors is the eigenvector paired with values[j].
struct EigenSystem {
  RVector values;
  CMatrix vectors;
};

// Hermitian eigendecomposition with a deterministic gauge: eigenvalues are
// sorted ascending, every degenerate cluster (gap < 1e-9 * ||H||) is
// re-orthonormalised by Gram-Schmidt against e_0, e_1, ... in index order,
// and each column is rotated so that its largest-magnitude entry (first one
// on ties) is real and positive.
EigenSystem hermitian_eig(const CMatrix& h);

// Rotates column `col` so that its largest-magnitude entry is real positive.
void fix_column_phase(CMatrix& v, Eigen::Index col);

// exp(-i H t) through the eigendecomposition of H.
CMatrix exp_unitary(const CMatrix& h, double t);

// Quantum Fourier transform on n qubits: entry (k, j) = exp(2 pi i jk/N)/sqrt(N).
CMatrix qft_matrix(int n);

// Largest singular value.
double spectral_norm(const CMatrix& a);

// max |(U^dagger U - I)_{ij}|.
double unitarity_defect(const CMatrix& u);
bool is_unitary(const CMatrix& u, double tol = 1e-10);

// max |H_ij - conj(H_ji)|.
double hermiticity_defect(const CMatrix& h);

CMatrix commutator(const CMatrix& a, const CMatrix& b);
CMatrix kron(const CMatrix& a, const CMatrix& b);

// Single-qubit Pauli matrix for one of 'I', 'X', 'Y', 'Z'.
CMatrix pauli(char p);
// Tensor product of single-qubit Paulis; the first character acts on the most
// significant qubit.
CMatrix pauli_string(std::string_view word);

using HamiltonianFn = std::function<CMatrix(double)>;

// Midpoint-rule time-ordered product prod_j exp(-i H((j+1/2)/steps) T/steps),
// later times on the left. Reference for T exp(-i T int_0^1 H(s) ds).
CMatrix time_ordered_propagator(const HamiltonianFn& h, double total_time, int steps);

// ||U_{steps} - U_{steps/2}|| / ||U_{2 steps} - U_{steps}||. A second-order
// rule on a smooth H gives a ratio close to 4.
double richardson_ratio(const HamiltonianFn& h, double total_time, int steps);

}  // namespace pathsim
