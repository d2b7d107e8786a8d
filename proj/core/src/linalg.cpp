#include "pathsim/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "pathsim/errors.hpp"

namespace pathsim {
namespace {

constexpr const char* kModule = "linalg_core";

void require_square(const CMatrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw ContractError(kModule, std::string(what) + ": matrix must be square and non-empty, got " +
                                     std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
  if (m.rows() > kMaxDim) {
    throw CapExceeded(kModule, std::string(what) + ": dimension " + std::to_string(m.rows()) +
                                   " exceeds cap " + std::to_string(kMaxDim));
  }
  if (!m.allFinite()) throw ContractError(kModule, std::string(what) + ": non-finite entry");
}

CMatrix symmetrized(const CMatrix& h, const char* what) {
  require_square(h, what);
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if (hermiticity_defect(h) > 1e-12 * scale) {
    throw ContractError(kModule, std::string(what) + ": matrix is not Hermitian (defect " +
                                     std::to_string(hermiticity_defect(h)) + ")");
  }
  return (h + h.adjoint()) * 0.5;
}

// exp(-i H tau) for a 2x2 Hermitian H written as m I + x X + y Y + z Z.
CMatrix exp_2x2(const CMatrix& h, double tau) {
  const double m = 0.5 * (h(0, 0).real() + h(1, 1).real());
  const double z = 0.5 * (h(0, 0).real() - h(1, 1).real());
  const double x = 0.5 * (h(0, 1).real() + h(1, 0).real());
  const double y = 0.5 * (h(1, 0).imag() - h(0, 1).imag());
  const double w = std::sqrt(x * x + y * y + z * z);
  const double c = std::cos(w * tau);
  const double s = (w > 0.0) ? std::sin(w * tau) / w : tau;
  const cplx i(0.0, 1.0);
  const cplx g = std::exp(-i * (m * tau));
  CMatrix u(2, 2);
  u(0, 0) = g * (c - i * s * z);
  u(1, 1) = g * (c + i * s * z);
  u(0, 1) = g * (-i * s * cplx(x, -y));
  u(1, 0) = g * (-i * s * cplx(x, y));
  return u;
}

CMatrix exp_step(const CMatrix& h, double tau) {
  if (h.rows() == 2) return exp_2x2(h, tau);
  Eigen::SelfAdjointEigenSolver<CMatrix> es((h + h.adjoint()) * 0.5);
  const CVector phases = (es.eigenvalues().cast<cplx>() * cplx(0.0, -tau)).array().exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

double hermiticity_defect(const CMatrix& h) {
  if (h.rows() != h.cols()) return INFINITY;
  return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

void fix_column_phase(CMatrix& v, Eigen::Index col) {
  const auto column = v.col(col);
  const double top = column.cwiseAbs().maxCoeff();
  if (top == 0.0) return;
  Eigen::Index pivot = 0;
  for (Eigen::Index i = 0; i < column.size(); ++i) {
    if (std::abs(column(i)) >= top - 1e-10) {
      pivot = i;
      break;
    }
  }
  const cplx rot = std::conj(column(pivot)) / std::abs(column(pivot));
  v.col(col) *= rot;
  v(pivot, col) = cplx(std::abs(v(pivot, col)), 0.0);
}

EigenSystem hermitian_eig(const CMatrix& h) {
  const CMatrix hs = symmetrized(h, "hermitian_eig");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hs);
  if (es.info() != Eigen::Success) throw InvariantViolation(kModule, "eigensolver did not converge");

  EigenSystem out{es.eigenvalues(), es.eigenvectors()};
  const Eigen::Index n = hs.rows();
  const double norm = std::max(std::abs(out.values(0)), std::abs(out.values(n - 1)));
  const double gap_tol = 1e-9 * std::max(norm, 1e-300);

  Eigen::Index start = 0;
  while (start < n) {
    Eigen::Index stop = start + 1;
    while (stop < n && out.values(stop) - out.values(stop - 1) < gap_tol) ++stop;
    const Eigen::Index k = stop - start;
    if (k > 1) {
      const CMatrix span = out.vectors.middleCols(start, k);
      CMatrix basis(n, k);
      Eigen::Index found = 0;
      for (Eigen::Index i = 0; i < n && found < k; ++i) {
        CVector v = span * span.row(i).adjoint();
        for (int pass = 0; pass < 2; ++pass) {
          for (Eigen::Index c = 0; c < found; ++c) v -= basis.col(c) * basis.col(c).dot(v);
        }
        const double len = v.norm();
        if (len > 1e-8) basis.col(found++) = v / len;
      }
      if (found != k) throw InvariantViolation(kModule, "degenerate cluster re-orthonormalisation failed");
      out.vectors.middleCols(start, k) = basis;
      // Degenerate values are set equal so the cluster carries one eigenvalue.
      const double mean = out.values.segment(start, k).mean();
      out.values.segment(start, k).setConstant(mean);
    }
    start = stop;
  }
  for (Eigen::Index c = 0; c < n; ++c) fix_column_phase(out.vectors, c);
  return out;
}

CMatrix exp_unitary(const CMatrix& h, double t) {
  const CMatrix hs = symmetrized(h, "exp_unitary");
  Eigen::SelfAdjointEigenSolver<CMatrix> es(hs);
  if (es.info() != Eigen::Success) throw InvariantViolation(kModule, "eigensolver did not converge");
  const CVector phases = (es.eigenvalues().cast<cplx>() * cplx(0.0, -t)).array().exp();
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

CMatrix qft_matrix(int n) {
  if (n < 1 || n > 12) throw ContractError(kModule, "qft_matrix: n must lie in [1, 12], got " + std::to_string(n));
  const std::int64_t dim = std::int64_t{1} << n;
  const double norm = 1.0 / std::sqrt(static_cast<double>(dim));
  CMatrix q(dim, dim);
  for (std::int64_t k = 0; k < dim; ++k) {
    for (std::int64_t j = 0; j < dim; ++j) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>((j * k) % dim) / static_cast<double>(dim);
      q(k, j) = std::polar(norm, angle);
    }
  }
  return q;
}

double spectral_norm(const CMatrix& a) {
  if (a.size() == 0) return 0.0;
  if (std::max(a.rows(), a.cols()) > kMaxDim) throw CapExceeded(kModule, "spectral_norm: dimension exceeds cap");
  Eigen::BDCSVD<CMatrix> svd(a);
  return svd.singularValues()(0);
}

double unitarity_defect(const CMatrix& u) {
  if (u.rows() != u.cols()) return INFINITY;
  return (u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

bool is_unitary(const CMatrix& u, double tol) { return unitarity_defect(u) <= tol; }

CMatrix commutator(const CMatrix& a, const CMatrix& b) { return a * b - b * a; }

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

CMatrix pauli(char p) {
  CMatrix m = CMatrix::Zero(2, 2);
  switch (p) {
    case 'I': m(0, 0) = 1.0; m(1, 1) = 1.0; break;
    case 'X': m(0, 1) = 1.0; m(1, 0) = 1.0; break;
    case 'Y': m(0, 1) = cplx(0.0, -1.0); m(1, 0) = cplx(0.0, 1.0); break;
    case 'Z': m(0, 0) = 1.0; m(1, 1) = -1.0; break;
    default: throw ContractError(kModule, std::string("unknown Pauli letter '") + p + "'");
  }
  return m;
}

CMatrix pauli_string(std::string_view word) {
  if (word.empty()) throw ContractError(kModule, "empty Pauli string");
  if (word.size() > 12) throw CapExceeded(kModule, "Pauli string longer than 12 qubits");
  CMatrix out = pauli(word[0]);
  for (std::size_t i = 1; i < word.size(); ++i) out = kron(out, pauli(word[i]));
  return out;
}

CMatrix time_ordered_propagator(const HamiltonianFn& h, double total_time, int steps) {
  if (steps <= 0) throw ContractError(kModule, "time_ordered_propagator: steps must be positive");
  const double dt = total_time / steps;
  CMatrix u;
  for (int j = 0; j < steps; ++j) {
    const CMatrix hj = h((j + 0.5) / steps);
    if (j == 0) {
      require_square(hj, "time_ordered_propagator");
      u = CMatrix::Identity(hj.rows(), hj.cols());
    }
    u = exp_step(hj, dt) * u;
  }
  return u;
}

double richardson_ratio(const HamiltonianFn& h, double total_time, int steps) {
  if (steps < 2 || steps % 2 != 0) throw ContractError(kModule, "richardson_ratio: steps must be even and >= 2");
  const CMatrix coarse = time_ordered_propagator(h, total_time, steps / 2);
  const CMatrix mid = time_ordered_propagator(h, total_time, steps);
  const CMatrix fine = time_ordered_propagator(h, total_time, 2 * steps);
  return spectral_norm(mid - coarse) / spectral_norm(fine - mid);
}

}  // namespace pathsim
