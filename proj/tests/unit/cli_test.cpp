#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "pathsim/errors.hpp"
#include "pathsim_cli/cli.hpp"

using nlohmann::json;
using namespace pathsim::cli;

namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pathsim_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "pathsim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  return cells;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("spec round-trips through JSON") {
    ExperimentSpec spec;
    spec.kind = "gauss-check";
    spec.params = normalised_params("gauss-check", json{{"count", 5}});
    spec.seed = 0xfedcba9876543210ULL;
    spec.output = "x.csv";
    const ExperimentSpec back = spec_from_json(json::parse(to_json(spec).dump()));
    CHECK(back.kind == spec.kind);
    CHECK(back.params == spec.params);
    CHECK(back.seed == spec.seed);
    CHECK(back.output == spec.output);
    CHECK(spec_hash(back) == spec_hash(spec));
    CHECK(spec_hash(spec).size() == 16u);
  }

  TEST_CASE("unknown fields are rejected at every level") {
    CHECK_THROWS_AS(spec_from_json(json{{"kind", "gauss-check"}, {"params", json::object()}, {"seed", 1},
                                        {"output", "a.csv"}, {"extra", 1}}),
                    pathsim::ContractError);
    CHECK_THROWS_AS(spec_from_json(json{{"kind", "nope"}, {"params", json::object()}, {"seed", 1}, {"output", "a"}}),
                    pathsim::ContractError);
    CHECK_THROWS_AS(normalised_params("gauss-check", json{{"count", 3}, {"bogus", 1}}), pathsim::ContractError);
    CHECK_THROWS_AS(normalised_params("lagrangian-sim", json{{"potential", {{"name", "harmonic"}, {"w", 1}}}}),
                    pathsim::ContractError);
  }

  TEST_CASE("defaults are filled in") {
    const json p = normalised_params("short-sim", json::object());
    CHECK(p["k"] == 1);
    CHECK(p["bits"] == json::array({12}));
    CHECK(p["r"] == json::array({4, 8, 16, 32}));
    for (const auto& kind : experiment_kinds()) CHECK_NOTHROW(normalised_params(kind, json::object()));
  }

  TEST_CASE("gauss-check rows satisfy reciprocity") {
    const fs::path dir = scratch_dir("gauss");
    const std::string csv = (dir / "g.csv").string();
    const auto o = invoke({"gauss-check", "--seed", "7", "--count", "10", "--out", csv});
    REQUIRE(o.code == 0);
    std::istringstream in(slurp(csv));
    std::string line;
    std::getline(in, line);
    const auto header = split(line);
    REQUIRE(header.size() == 9u);
    CHECK(header[7] == "abs_diff");
    int rows = 0;
    while (std::getline(in, line)) {
      const auto cells = split(line);
      CHECK(std::stod(cells[7]) <= std::stod(cells[8]));
      ++rows;
    }
    CHECK(rows == 10);
    const json manifest = json::parse(slurp(csv + ".manifest.json"));
    CHECK(manifest["rows"] == 10);
    CHECK(manifest["spec"]["seed"] == 7);
    CHECK(manifest.contains("spec_hash"));
    CHECK(manifest.contains("version"));
    CHECK(manifest.contains("wall_clock_seconds"));
  }

  TEST_CASE("short-sim sweeps bits major over r") {
    const fs::path dir = scratch_dir("sweep");
    std::ofstream(dir / "d.json") << R"({"n": 1, "terms": [{"pauli": "Z"}, {"pauli": "X"}]})";
    const std::string csv = (dir / "s.csv").string();
    const auto o = invoke({"short-sim", "--decomp", (dir / "d.json").string(), "--r", "1", "2", "--sweep", "bits:4,6",
                           "--out", csv});
    REQUIRE(o.code == 0);
    std::istringstream in(slurp(csv));
    std::string line;
    std::getline(in, line);
    std::vector<std::pair<std::string, std::string>> points;
    while (std::getline(in, line)) {
      const auto cells = split(line);
      points.emplace_back(cells[3], cells[0]);
    }
    const std::vector<std::pair<std::string, std::string>> expected = {{"4", "1"}, {"4", "2"}, {"6", "1"}, {"6", "2"}};
    CHECK(points == expected);
  }

  TEST_CASE("short-sim on commuting terms stays within the rounding envelope") {
    const fs::path dir = scratch_dir("short");
    std::ofstream(dir / "d.json") << R"({"n": 2, "terms": [{"pauli": "ZI", "coeff": 1.0}, {"pauli": "IZ", "coeff": 0.5}]})";
    const std::string csv = (dir / "s.csv").string();
    const auto o = invoke({"short-sim", "--decomp", (dir / "d.json").string(), "--r", "2", "4", "--bits", "8", "--out", csv});
    REQUIRE(o.code == 0);
    std::istringstream in(slurp(csv));
    std::string line;
    std::getline(in, line);
    const auto header = split(line);
    const auto col = [&](const std::string& name) {
      return static_cast<std::size_t>(std::find(header.begin(), header.end(), name) - header.begin());
    };
    int rows = 0;
    while (std::getline(in, line)) {
      const auto cells = split(line);
      CHECK(std::stod(cells[col("measured_error")]) <= std::stod(cells[col("rounding_term")]));
      ++rows;
    }
    CHECK(rows == 2);
  }

  TEST_CASE("the same spec and seed give identical bytes") {
    const fs::path dir = scratch_dir("det");
    const std::string a = (dir / "a.csv").string(), b = (dir / "b.csv").string();
    REQUIRE(invoke({"trotter-error", "--random", "3", "--seed", "11", "--jobs", "2", "--out", a}).code == 0);
    REQUIRE(invoke({"trotter-error", "--random", "3", "--seed", "11", "--jobs", "1", "--out", b}).code == 0);
    CHECK(slurp(a) == slurp(b));
    REQUIRE(invoke({"trotter-error", "--random", "3", "--seed", "12", "--out", b}).code == 0);
    CHECK(slurp(a) != slurp(b));
  }

  TEST_CASE("spec files drive a run and must match the subcommand") {
    const fs::path dir = scratch_dir("spec");
    const std::string csv = (dir / "out.csv").string();
    std::ofstream(dir / "spec.json") << json{{"kind", "gauss-check"},
                                            {"params", {{"count", 4}}},
                                            {"seed", 3},
                                            {"output", csv}}
                                            .dump();
    CHECK(invoke({"gauss-check", "--spec", (dir / "spec.json").string()}).code == 0);
    CHECK(fs::exists(csv));
    const auto bad = invoke({"long-sim", "--spec", (dir / "spec.json").string()});
    CHECK(bad.code == 2);
  }

  TEST_CASE("errors exit with a code and one JSON line") {
    const fs::path dir = scratch_dir("err");
    const auto bad_count = invoke({"gauss-check", "--count", "0", "--out", (dir / "x.csv").string()});
    CHECK(bad_count.code == 2);
    const json line = json::parse(bad_count.err);
    CHECK(line["error"] == "spec");
    CHECK(line.contains("module"));
    CHECK(line.contains("message"));
    CHECK(bad_count.err.find('\n') == bad_count.err.size() - 1);

    CHECK(invoke({"gauss-check", "--no-such-flag"}).code == 2);
    CHECK(invoke({"long-sim", "--T-sweep", "0.01", "--r", "8", "--out", (dir / "l.csv").string()}).code == 2);

    CHECK(invoke({"short-sim", "--bits", "30", "--out", (dir / "c.csv").string()}).code == 2);
    CHECK(invoke({"short-sim", "--sweep", "t:1,2", "--out", (dir / "c.csv").string()}).code == 2);
    CHECK(invoke({"short-sim", "--sweep", "bits:4,x", "--out", (dir / "c.csv").string()}).code == 2);
    std::ofstream(dir / "d.json") << R"({"n": 2, "terms": [{"pauli": "ZZ"}, {"pauli": "XX"}], "basis": "pauli-product"})";
    const auto cap = invoke(
        {"short-sim", "--decomp", (dir / "d.json").string(), "--bits", "16", "--r", "1", "--out", (dir / "c.csv").string()});
    CHECK(cap.code == 3);
    CHECK(json::parse(cap.err)["error"] == "cap");
  }
}
