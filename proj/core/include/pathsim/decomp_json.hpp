#pragma once

#include <string>
#include <string_view>

#include "pathsim/ham_decomp.hpp"

namespace pathsim {

// Reads a decomposition document:
//   {"n": 2,
//    "terms": [ <term>, ... ],
//    "zero_tol": 1e-12,            (optional)
//    "basis": "sorted" | "pauli-product"}   (optional, default "sorted")
// A term is either a matrix, given as rows of [re, im] pairs or as a flat
// row-major list of 4^n pairs, or a Pauli word {"pauli": "ZX", "coeff": 0.5}.
// "pauli-product" requires every term to be a Pauli word.
HamiltonianDecomposition parse_decomposition(std::string_view text);
HamiltonianDecomposition load_decomposition(const std::string& path);

}  // namespace pathsim
