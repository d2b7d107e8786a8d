#pragma once

#include <cmath>

#include "pathsim/linalg.hpp"

namespace pathsim::detail {

inline int next_pow2(int d) {
  int p = 1;
  while (p < d) p *= 2;
  return p;
}

inline int log2_int(Eigen::Index v) {
  int k = 0;
  while ((Eigen::Index{1} << k) < v) ++k;
  return k;
}

inline double sign_of(int b) { return (b & 1) ? -1.0 : 1.0; }

// Normalised Walsh-Hadamard transform on every contiguous block of v.
inline void hadamard_rows(CVector& v, Eigen::Index block) {
  const double norm = 1.0 / std::sqrt(static_cast<double>(block));
  cplx* data = v.data();
  for (Eigen::Index base = 0; base < v.size(); base += block) {
    cplx* x = data + base;
    for (Eigen::Index h = 1; h < block; h *= 2) {
      for (Eigen::Index i = 0; i < block; i += 2 * h) {
        for (Eigen::Index k = i; k < i + h; ++k) {
          const cplx a = x[k];
          const cplx c = x[k + h];
          x[k] = a + c;
          x[k + h] = a - c;
        }
      }
    }
    for (Eigen::Index k = 0; k < block; ++k) x[k] *= norm;
  }
}

}  // namespace pathsim::detail
