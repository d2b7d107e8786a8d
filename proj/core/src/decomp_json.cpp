#include "pathsim/decomp_json.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pathsim/errors.hpp"

namespace pathsim {
namespace {

constexpr const char* kModule = "ham_decomp";
using nlohmann::json;

cplx read_entry(const json& e) {
  if (e.is_number()) return {e.get<double>(), 0.0};
  if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
    return {e[0].get<double>(), e[1].get<double>()};
  }
  throw ContractError(kModule, "matrix entry must be a number or a [re, im] pair, got " + e.dump());
}

CMatrix read_matrix(const json& j, Eigen::Index dim, std::size_t index) {
  const std::string where = "term " + std::to_string(index);
  if (!j.is_array()) throw ContractError(kModule, where + ": expected an array");
  CMatrix m(dim, dim);
  const bool nested = !j.empty() && j[0].is_array() && !j[0].empty() && j[0][0].is_array();
  if (nested) {
    if (static_cast<Eigen::Index>(j.size()) != dim) {
      throw ContractError(kModule, where + ": expected " + std::to_string(dim) + " rows");
    }
    for (Eigen::Index r = 0; r < dim; ++r) {
      const json& row = j[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != dim) {
        throw ContractError(kModule, where + ": row " + std::to_string(r) + " must have " + std::to_string(dim) +
                                         " entries");
      }
      for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = read_entry(row[static_cast<std::size_t>(c)]);
    }
  } else {
    if (static_cast<Eigen::Index>(j.size()) != dim * dim) {
      throw ContractError(kModule, where + ": flat matrix must have " + std::to_string(dim * dim) + " entries");
    }
    for (Eigen::Index r = 0; r < dim; ++r) {
      for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = read_entry(j[static_cast<std::size_t>(r * dim + c)]);
    }
  }
  return m;
}

}  // namespace

HamiltonianDecomposition parse_decomposition(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ContractError(kModule, std::string("invalid decomposition JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ContractError(kModule, "decomposition document must be an object");
  for (const auto& [key, value] : doc.items()) {
    if (key != "n" && key != "terms" && key != "zero_tol" && key != "basis") {
      throw ContractError(kModule, "unknown field '" + key + "' in decomposition document");
    }
  }
  if (!doc.contains("n") || !doc["n"].is_number_integer()) throw ContractError(kModule, "field 'n' must be an integer");
  if (!doc.contains("terms") || !doc["terms"].is_array() || doc["terms"].empty()) {
    throw ContractError(kModule, "field 'terms' must be a non-empty array");
  }
  const int n = doc["n"].get<int>();
  if (n < 1) throw ContractError(kModule, "field 'n' must be positive");
  if (n > 12) throw CapExceeded(kModule, "n=" + std::to_string(n) + " exceeds cap 12");
  const double zero_tol = doc.value("zero_tol", 1e-12);
  const std::string basis = doc.value("basis", std::string("sorted"));
  if (basis != "sorted" && basis != "pauli-product") {
    throw ContractError(kModule, "field 'basis' must be \"sorted\" or \"pauli-product\"");
  }

  const Eigen::Index dim = Eigen::Index{1} << n;
  std::vector<PauliTerm> paulis;
  std::vector<CMatrix> mats;
  bool all_pauli = true;
  for (std::size_t i = 0; i < doc["terms"].size(); ++i) {
    const json& t = doc["terms"][i];
    if (t.is_object()) {
      if (!t.contains("pauli") || !t["pauli"].is_string()) {
        throw ContractError(kModule, "term " + std::to_string(i) + ": object terms need a string 'pauli'");
      }
      for (const auto& [key, value] : t.items()) {
        if (key != "pauli" && key != "coeff") {
          throw ContractError(kModule, "term " + std::to_string(i) + ": unknown field '" + key + "'");
        }
      }
      PauliTerm p{t["pauli"].get<std::string>(), t.value("coeff", 1.0)};
      if (static_cast<int>(p.word.size()) != n) {
        throw ContractError(kModule, "term " + std::to_string(i) + ": Pauli word length differs from n");
      }
      mats.push_back(p.coeff * pauli_string(p.word));
      paulis.push_back(std::move(p));
    } else {
      all_pauli = false;
      mats.push_back(read_matrix(t, dim, i));
    }
  }
  if (basis == "pauli-product") {
    if (!all_pauli) throw ContractError(kModule, "basis \"pauli-product\" requires every term to be a Pauli word");
    return HamiltonianDecomposition::build_pauli(paulis, BasisConvention::kPauliProduct, zero_tol);
  }
  return HamiltonianDecomposition::build(std::move(mats), zero_tol);
}

HamiltonianDecomposition load_decomposition(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError(kModule, "cannot open decomposition file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_decomposition(buf.str());
}

}  // namespace pathsim
