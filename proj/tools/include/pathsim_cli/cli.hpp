#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

namespace pathsim::cli {

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds = {"trotter-error", "short-sim", "long-sim", "lagrangian-sim",
                                                 "gauss-check"};
  return kinds;
}

// One experiment: kind, kind-specific parameters, seed and output path.
// Serialised as {"kind", "params", "seed", "output"}; unknown fields are
// rejected at every level.
struct ExperimentSpec {
  std::string kind;
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::string output;
};

nlohmann::json to_json(const ExperimentSpec& spec);
// Throws ContractError on a missing or unknown field or a bad parameter.
ExperimentSpec spec_from_json(const nlohmann::json& doc);

// Validates and completes params with defaults. Throws ContractError.
nlohmann::json normalised_params(const std::string& kind, const nlohmann::json& params);

// 64-bit FNV-1a of the canonical JSON of the spec, as 16 hex digits.
std::string spec_hash(const ExperimentSpec& spec);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const;
};

// Runs the experiment with up to `jobs` sweep points in flight. Rows come
// back in sweep order whatever the completion order.
Table run_experiment(const ExperimentSpec& spec, int jobs = 1);

// Writes the CSV to spec.output and the manifest to spec.output + ".manifest.json".
void write_outputs(const ExperimentSpec& spec, const Table& table, double wall_clock_seconds);

// Command-line entry point. Exit codes: 0 success, 2 spec error, 3 cap
// exceeded, 4 invariant violation, 1 anything else. Errors are printed to
// `err` as one JSON line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pathsim::cli
