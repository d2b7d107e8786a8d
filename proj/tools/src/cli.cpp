#include "pathsim_cli/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "pathsim/decomp_json.hpp"
#include "pathsim/errors.hpp"
#include "pathsim/ham_decomp.hpp"
#include "pathsim/lagrangian.hpp"
#include "pathsim/long_path.hpp"
#include "pathsim/short_path.hpp"
#include "pathsim/trotter.hpp"

#ifndef PATHSIM_VERSION
#define PATHSIM_VERSION "0.0.0"
#endif

namespace pathsim::cli {
namespace {

using nlohmann::json;

constexpr const char* kModule = "cli";

[[noreturn]] void spec_error(const std::string& what) { throw ContractError(kModule, what); }

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string num(long long x) { return std::to_string(x); }
std::string num(int x) { return std::to_string(x); }
std::string num(std::uint64_t x) { return std::to_string(x); }

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent stream for sweep point `index` of an experiment seeded by `seed`.
std::mt19937_64 point_rng(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(index + 1)));
}

// ---- parameter schema ------------------------------------------------------

void reject_unknown(const json& obj, const std::vector<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) spec_error(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      spec_error("unknown field '" + key + "' in " + where);
    }
  }
}

template <typename T>
T get_as(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    spec_error("field '" + key + "' in " + where + " is missing or has the wrong type");
  }
}

void fill_default(json& obj, const std::string& key, json value) {
  if (!obj.contains(key)) obj[key] = std::move(value);
}

json as_list(const json& v) { return v.is_array() ? v : json::array({v}); }

json default_decomposition() {
  return json{{"n", 1},
              {"terms", json::array({json{{"pauli", "Z"}, {"coeff", 1.0}}, json{{"pauli", "X"}, {"coeff", 1.0}}})}};
}

json normalise_trotter(json p) {
  reject_unknown(p, {"decomposition", "random", "k", "r", "t"}, "trotter-error params");
  if (p.contains("decomposition") && p.contains("random")) spec_error("give either decomposition or random, not both");
  if (!p.contains("decomposition")) {
    fill_default(p, "random", json::object());
    json& rnd = p["random"];
    reject_unknown(rnd, {"count", "n", "terms"}, "trotter-error random");
    fill_default(rnd, "count", 20);
    fill_default(rnd, "n", 2);
    fill_default(rnd, "terms", 3);
    const int count = get_as<int>(rnd, "count", "random");
    const int n = get_as<int>(rnd, "n", "random");
    const int terms = get_as<int>(rnd, "terms", "random");
    if (count < 1 || count > 10000) spec_error("random.count must lie in [1, 10000]");
    if (n < 1 || n > 6) spec_error("random.n must lie in [1, 6]");
    if (terms < 2 || terms > 4) spec_error("random.terms must lie in [2, 4]");
  }
  fill_default(p, "k", json::array({0, 1}));
  fill_default(p, "r", json::array({1, 2, 4, 8}));
  fill_default(p, "t", 1.0);
  p["k"] = as_list(p["k"]);
  p["r"] = as_list(p["r"]);
  for (const auto& k : p["k"]) {
    if (!k.is_number_integer() || k.get<int>() < 0 || k.get<int>() > 2) spec_error("k entries must be 0, 1 or 2");
  }
  for (const auto& r : p["r"]) {
    if (!r.is_number_integer() || r.get<int>() < 1) spec_error("r entries must be positive integers");
  }
  if (!p["t"].is_number()) spec_error("t must be a number");
  return p;
}

json normalise_short(json p) {
  reject_unknown(p, {"decomposition", "k", "r", "t", "bits"}, "short-sim params");
  fill_default(p, "decomposition", default_decomposition());
  fill_default(p, "k", 1);
  fill_default(p, "r", json::array({4, 8, 16, 32}));
  fill_default(p, "t", 1.0);
  fill_default(p, "bits", 12);
  p["r"] = as_list(p["r"]);
  p["bits"] = as_list(p["bits"]);
  const int k = get_as<int>(p, "k", "short-sim params");
  if (k < 0 || k > 2) spec_error("k must lie in [0, 2]");
  for (const auto& b : p["bits"]) {
    if (!b.is_number_integer() || b.get<int>() < 1 || b.get<int>() > 16) spec_error("bits must lie in [1, 16]");
  }
  for (const auto& r : p["r"]) {
    if (!r.is_number_integer() || r.get<int>() < 1) spec_error("r entries must be positive integers");
  }
  if (!p["t"].is_number()) spec_error("t must be a number");
  return p;
}

json builtin_system(const std::string& name) {
  if (name == "sweep-linear") return json{{"family", "sweep"}, {"shape", "linear"}, {"a", 1.0}, {"b", 0.5}};
  if (name == "sweep-sine") return json{{"family", "sweep"}, {"shape", "sine"}, {"a", 1.0}, {"b", 0.5}};
  spec_error("unknown built-in system '" + name + "' (expected sweep-linear or sweep-sine)");
}

json normalise_long(json p) {
  reject_unknown(p, {"system", "T", "r", "form"}, "long-sim params");
  fill_default(p, "system", "sweep-linear");
  if (p["system"].is_string()) p["system"] = builtin_system(p["system"].get<std::string>());
  json& sys = p["system"];
  const std::string family = get_as<std::string>(sys, "family", "system");
  if (family == "sweep") {
    reject_unknown(sys, {"family", "shape", "a", "b"}, "sweep system");
    fill_default(sys, "shape", "linear");
    fill_default(sys, "a", 1.0);
    fill_default(sys, "b", 0.5);
    const std::string shape = get_as<std::string>(sys, "shape", "sweep system");
    if (shape != "linear" && shape != "sine") spec_error("sweep shape must be linear or sine");
    get_as<double>(sys, "a", "sweep system");
    get_as<double>(sys, "b", "sweep system");
  } else if (family == "interaction-frame") {
    reject_unknown(sys, {"family", "A", "B"}, "interaction-frame system");
    for (const char* key : {"A", "B"}) {
      if (!sys.contains(key) || !sys[key].is_array() || sys[key].empty()) {
        spec_error(std::string("interaction-frame system needs a nonempty Pauli list ") + key);
      }
      for (const auto& term : sys[key]) {
        reject_unknown(term, {"pauli", "coeff"}, std::string("interaction-frame ") + key + " term");
        get_as<std::string>(term, "pauli", "Pauli term");
        get_as<double>(term, "coeff", "Pauli term");
      }
    }
  } else {
    spec_error("system family must be sweep or interaction-frame");
  }
  fill_default(p, "T", json::array({20.0, 40.0, 80.0, 160.0}));
  fill_default(p, "r", 16384);
  fill_default(p, "form", "corrected");
  p["T"] = as_list(p["T"]);
  for (const auto& t : p["T"]) {
    if (!t.is_number() || !(t.get<double>() > 0.0)) spec_error("T entries must be positive numbers");
  }
  const int r = get_as<int>(p, "r", "long-sim params");
  if (r < 4 || r > (1 << 20)) spec_error("r must lie in [4, 2^20]");
  const std::string form = get_as<std::string>(p, "form", "long-sim params");
  if (form != "corrected" && form != "as-written") spec_error("form must be corrected or as-written");
  return p;
}

json parse_potential_text(const std::string& text) {
  if (!text.empty() && text.front() == '{') {
    try {
      return json::parse(text);
    } catch (const json::exception& e) {
      spec_error(std::string("potential JSON does not parse: ") + e.what());
    }
  }
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  std::vector<double> args;
  if (colon != std::string::npos) {
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        args.push_back(std::stod(item));
      } catch (const std::exception&) {
        spec_error("potential argument '" + item + "' is not a number");
      }
    }
  }
  auto need = [&](std::size_t k) {
    if (args.size() != k) spec_error("potential " + name + " takes " + std::to_string(k) + " arguments");
  };
  if (name == "zero") return need(0), json{{"name", "zero"}};
  if (name == "constant") return need(1), json{{"name", "constant"}, {"value", args[0]}};
  if (name == "harmonic") return need(2), json{{"name", "harmonic"}, {"omega", args[0]}, {"x0", args[1]}};
  if (name == "square_well") {
    need(3);
    return json{{"name", "square_well"}, {"left", args[0]}, {"right", args[1]}, {"depth", args[2]}};
  }
  spec_error("unknown potential '" + name + "'");
}

json parse_initial_text(const std::string& text) {
  if (!text.empty() && text.front() == '{') {
    try {
      return json::parse(text);
    } catch (const json::exception& e) {
      spec_error(std::string("initial-state JSON does not parse: ") + e.what());
    }
  }
  const auto colon = text.find(':');
  if (colon == std::string::npos) spec_error("initial state must be gaussian:x0,sigma,k0 or basis:q");
  const std::string kind = text.substr(0, colon);
  std::vector<double> args;
  std::stringstream ss(text.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      args.push_back(std::stod(item));
    } catch (const std::exception&) {
      spec_error("initial-state argument '" + item + "' is not a number");
    }
  }
  if (kind == "gaussian" && args.size() == 3) {
    return json{{"kind", "gaussian"}, {"x0", args[0]}, {"sigma", args[1]}, {"k0", args[2]}};
  }
  if (kind == "basis" && args.size() == 1) return json{{"kind", "basis"}, {"q", static_cast<int>(args[0])}};
  spec_error("initial state must be gaussian:x0,sigma,k0 or basis:q");
}

json normalise_lagrangian(json p) {
  reject_unknown(p, {"n", "x_max", "mass", "r", "potential", "initial", "p_max"}, "lagrangian-sim params");
  fill_default(p, "n", 6);
  fill_default(p, "x_max", 20.0);
  fill_default(p, "mass", 1.0);
  fill_default(p, "r", 16);
  fill_default(p, "potential", json{{"name", "harmonic"}, {"omega", 0.5}, {"x0", 10.0}});
  fill_default(p, "initial", json{{"kind", "gaussian"}, {"x0", 10.0}, {"sigma", 1.5}, {"k0", 2.0}});
  if (p["potential"].is_string()) p["potential"] = parse_potential_text(p["potential"].get<std::string>());
  if (p["initial"].is_string()) p["initial"] = parse_initial_text(p["initial"].get<std::string>());
  LatticeConfig cfg;
  cfg.n = get_as<int>(p, "n", "lagrangian-sim params");
  cfg.x_max = get_as<double>(p, "x_max", "lagrangian-sim params");
  cfg.mass = get_as<double>(p, "mass", "lagrangian-sim params");
  cfg.r = get_as<int>(p, "r", "lagrangian-sim params");
  cfg.validate();
  if (cfg.r > 100000) spec_error("r must not exceed 100000");
  json& pot = p["potential"];
  const std::string name = get_as<std::string>(pot, "name", "potential");
  if (name == "zero") {
    reject_unknown(pot, {"name"}, "zero potential");
  } else if (name == "constant") {
    reject_unknown(pot, {"name", "value"}, "constant potential");
    get_as<double>(pot, "value", "constant potential");
  } else if (name == "harmonic") {
    reject_unknown(pot, {"name", "omega", "x0"}, "harmonic potential");
    get_as<double>(pot, "omega", "harmonic potential");
    get_as<double>(pot, "x0", "harmonic potential");
  } else if (name == "square_well") {
    reject_unknown(pot, {"name", "left", "right", "depth"}, "square-well potential");
    get_as<double>(pot, "left", "square-well potential");
    get_as<double>(pot, "right", "square-well potential");
    get_as<double>(pot, "depth", "square-well potential");
  } else {
    spec_error("unknown potential '" + name + "'");
  }
  json& init = p["initial"];
  const std::string kind = get_as<std::string>(init, "kind", "initial");
  if (kind == "gaussian") {
    reject_unknown(init, {"kind", "x0", "sigma", "k0"}, "gaussian initial state");
    get_as<double>(init, "x0", "gaussian initial state");
    if (!(get_as<double>(init, "sigma", "gaussian initial state") > 0.0)) spec_error("sigma must be positive");
    get_as<double>(init, "k0", "gaussian initial state");
  } else if (kind == "basis") {
    reject_unknown(init, {"kind", "q"}, "basis initial state");
    const int q = get_as<int>(init, "q", "basis initial state");
    if (q < 0 || q >= cfg.size()) spec_error("basis index q out of range");
  } else {
    spec_error("initial state kind must be gaussian or basis");
  }
  // null selects the largest lattice momentum, so every state is admissible.
  fill_default(p, "p_max", nullptr);
  if (!p["p_max"].is_null() && (!p["p_max"].is_number() || !(p["p_max"].get<double>() >= 0.0))) {
    spec_error("p_max must be null or nonnegative");
  }
  return p;
}

json normalise_gauss(json p) {
  reject_unknown(p, {"count", "max_coeff"}, "gauss-check params");
  fill_default(p, "count", 200);
  fill_default(p, "max_coeff", 64);
  const int count = get_as<int>(p, "count", "gauss-check params");
  const int max_coeff = get_as<int>(p, "max_coeff", "gauss-check params");
  if (count < 1 || count > 1000000) spec_error("count must lie in [1, 10^6]");
  if (max_coeff < 1 || max_coeff > 4096) spec_error("max_coeff must lie in [1, 4096]");
  return p;
}

// ---- sweeps ----------------------------------------------------------------

// Evaluates fn(i) for i in [0, count) on up to `jobs` threads and
// concatenates the rows in index order.
Table sweep(std::vector<std::string> columns, std::size_t count, int jobs,
            const std::function<std::vector<std::vector<std::string>>(std::size_t)>& fn) {
  std::vector<std::vector<std::vector<std::string>>> parts(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        parts[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || count <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  Table table;
  table.columns = std::move(columns);
  for (auto& part : parts) {
    for (auto& row : part) table.rows.push_back(std::move(row));
  }
  return table;
}

HamiltonianDecomposition random_decomposition(std::mt19937_64& rng, int n, int terms) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Eigen::Index dim = Eigen::Index{1} << n;
  std::vector<CMatrix> list;
  CMatrix diag = CMatrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) diag(i, i) = gauss(rng);
  list.push_back(diag);
  for (int l = 1; l < terms; ++l) {
    CMatrix a(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
      for (Eigen::Index j = 0; j < dim; ++j) a(i, j) = cplx(gauss(rng), gauss(rng));
    }
    list.push_back((a + a.adjoint()) * 0.25);
  }
  return HamiltonianDecomposition::build(std::move(list));
}

Table run_trotter(const ExperimentSpec& spec, int jobs) {
  const json& p = spec.params;
  const std::vector<int> ks = p["k"].get<std::vector<int>>();
  const std::vector<int> rs = p["r"].get<std::vector<int>>();
  const double t = p["t"].get<double>();
  std::vector<HamiltonianDecomposition> decomps;
  if (p.contains("decomposition")) {
    decomps.push_back(parse_decomposition(p["decomposition"].dump()));
  } else {
    const json& rnd = p["random"];
    const int count = rnd["count"].get<int>();
    for (int i = 0; i < count; ++i) {
      auto rng = point_rng(spec.seed, static_cast<std::uint64_t>(i));
      decomps.push_back(random_decomposition(rng, rnd["n"].get<int>(), rnd["terms"].get<int>()));
    }
  }
  const std::size_t per = ks.size() * rs.size();
  return sweep({"instance", "k", "r", "t", "measured_error", "bound"}, decomps.size() * per, jobs,
               [&](std::size_t idx) -> std::vector<std::vector<std::string>> {
                 const std::size_t inst = idx / per;
                 const int k = ks[(idx % per) / rs.size()];
                 const int r = rs[idx % rs.size()];
                 const auto& d = decomps[inst];
                 const TrotterSchedule s = make_schedule(d.num_terms(), k, r, t);
                 const double err = spectral_norm(trotter_unitary(d, s) - exp_unitary(d.hamiltonian(), t));
                 return {{num(static_cast<long long>(inst)), num(k), num(r), num(t), num(err),
                          num(error_bound(d, k, t, r))}};
               });
}

Table run_short(const ExperimentSpec& spec, int jobs) {
  const json& p = spec.params;
  const HamiltonianDecomposition d = parse_decomposition(p["decomposition"].dump());
  const int k = p["k"].get<int>();
  const double t = p["t"].get<double>();
  const std::vector<int> rs = p["r"].get<std::vector<int>>();
  const std::vector<int> all_bits = p["bits"].get<std::vector<int>>();
  // Sweep points run bits-major: (bits[0], r[0]), (bits[0], r[1]), ...
  return sweep({"r", "k", "t", "bits", "d", "M", "rounds", "measured_error", "trotter_error", "rounding_term",
                "trotter_term", "bound", "queries"},
               rs.size() * all_bits.size(), jobs, [&](std::size_t i) -> std::vector<std::vector<std::string>> {
                 const int r = rs[i % rs.size()];
                 const int bits = all_bits[i / rs.size()];
                 const SimulationReport rep = simulate(d, k, r, t, bits);
                 return {{num(r), num(k), num(t), num(bits), num(rep.d), num(rep.M), num(rep.rounds),
                          num(rep.error), num(rep.trotter_error), num(rep.rounding_term), num(rep.trotter_term),
                          num(rep.bound), num(rep.queries.total())}};
               });
}

CMatrix pauli_sum(const json& list, int& n) {
  CMatrix out;
  for (const auto& term : list) {
    const std::string word = term["pauli"].get<std::string>();
    if (out.size() == 0) {
      n = static_cast<int>(word.size());
      if (n < 1 || n > 6) spec_error("Pauli words must have 1 to 6 letters");
      out = CMatrix::Zero(Eigen::Index{1} << n, Eigen::Index{1} << n);
    }
    if (static_cast<int>(word.size()) != n) spec_error("Pauli words in one list must have equal length");
    out += term["coeff"].get<double>() * pauli_string(word);
  }
  return out;
}

TimeDependentHamiltonian make_system(const json& sys, double total_time) {
  if (sys["family"] == "sweep") {
    const SweepShape shape = sys["shape"] == "linear" ? SweepShape::kLinear : SweepShape::kSine;
    return two_level_sweep(sys["a"].get<double>(), sys["b"].get<double>(), shape);
  }
  int na = 0, nb = 0;
  const CMatrix a = pauli_sum(sys["A"], na);
  const CMatrix b = pauli_sum(sys["B"], nb);
  if (na != nb) spec_error("A and B act on different numbers of qubits");
  return interaction_frame(a, b, total_time);
}

// Bound on the norm of all paths with three or more jumps.
double jump_tail_bound(const AdiabaticBounds& b, double total_time) {
  if (b.max_d1 == 0.0) return 0.0;
  const double x = b.aleph / (b.gamma_min * total_time);
  const double odd_factor = b.aleph / (b.max_d1 * total_time);
  return jump_bounds(b, total_time, 1).second + (std::expm1(x) - x) * (1.0 + odd_factor);
}

Table run_long(const ExperimentSpec& spec, int jobs) {
  const json& p = spec.params;
  const std::vector<double> ts = p["T"].get<std::vector<double>>();
  const int r = p["r"].get<int>();
  const OneJumpForm form = p["form"] == "corrected" ? OneJumpForm::kCorrected : OneJumpForm::kAsWritten;
  return sweep({"T", "r", "form", "gamma_min", "Gamma", "measured_error", "order_term", "jump_tail_bound"}, ts.size(),
               jobs, [&](std::size_t i) -> std::vector<std::vector<std::string>> {
                 const double T = ts[i];
                 const TimeDependentHamiltonian h = make_system(p["system"], T);
                 h.validate();
                 const AdiabaticBounds b = adiabatic_bounds(h);
                 const double err = longtime_error(h, T, r, form);
                 const double order = std::pow(b.Gamma, 4) / (b.gamma_min * b.gamma_min * T * T);
                 return {{num(T), num(r), p["form"].get<std::string>(), num(b.gamma_min), num(b.Gamma), num(err),
                          num(order), num(jump_tail_bound(b, T))}};
               });
}

Potential make_potential(const json& pot, const LatticeConfig& cfg) {
  const std::string name = pot["name"].get<std::string>();
  if (name == "zero") return Potential::zero();
  if (name == "constant") return Potential::constant(pot["value"].get<double>());
  if (name == "harmonic") {
    return Potential::harmonic(cfg.mass, pot["omega"].get<double>(), pot["x0"].get<double>(), cfg.x_max);
  }
  return Potential::square_well(pot["left"].get<double>(), pot["right"].get<double>(), pot["depth"].get<double>());
}

Table run_lagrangian(const ExperimentSpec& spec) {
  const json& p = spec.params;
  LatticeConfig cfg;
  cfg.n = p["n"].get<int>();
  cfg.x_max = p["x_max"].get<double>();
  cfg.mass = p["mass"].get<double>();
  cfg.r = p["r"].get<int>();
  const Potential v = make_potential(p["potential"], cfg);
  v.validate(cfg);
  const double p_max =
      p["p_max"].is_null() ? static_cast<double>(cfg.size() - 1) * cfg.dp() : p["p_max"].get<double>();
  CVector psi;
  if (p["initial"]["kind"] == "gaussian") {
    const json& g = p["initial"];
    psi = gaussian_packet(cfg, g["x0"].get<double>(), g["sigma"].get<double>(), g["k0"].get<double>());
  } else {
    psi = CVector::Zero(cfg.size());
    psi(p["initial"]["q"].get<int>()) = 1.0;
  }
  const double outside = (psi - momentum_cutoff_projector(cfg, p_max) * psi).norm();
  if (outside > 1e-10) spec_error("initial state has weight " + num(outside) + " beyond p_max");

  const CMatrix mom = momentum_op(cfg);
  const CMatrix h = mom * mom / (2.0 * cfg.mass) + potential_op(cfg, v);
  const EigenSystem eh = hermitian_eig(h);
  const CVector psi_eig = eh.vectors.adjoint() * psi;
  const CMatrix split = exp_unitary(mom * mom / (2.0 * cfg.mass), cfg.tau()) * exp_unitary(potential_op(cfg, v), cfg.tau());
  const CMatrix f = qft_matrix(cfg.n);
  const ActionOracle oracle(cfg, v);
  RVector xs(cfg.size()), ps(cfg.size());
  for (Eigen::Index q = 0; q < cfg.size(); ++q) {
    xs(q) = static_cast<double>(q) * cfg.dx();
    ps(q) = static_cast<double>(q) * cfg.dp();
  }

  Table table;
  table.columns = {"step", "time", "norm", "fidelity_vs_trotter", "x_expect", "p_expect", "povm_discrepancy",
                   "feasible_bound", "action_queries"};
  CMatrix state = psi;
  CVector reference = psi;
  for (int step = 0; step <= cfg.r; ++step) {
    if (step > 0) {
      lagrangian_step(cfg, oracle, state);
      reference = split * reference;
    }
    const double time = step * cfg.tau();
    const CVector exact =
        eh.vectors * (psi_eig.array() * (eh.values.cast<cplx>() * cplx(0.0, -time)).array().exp()).matrix();
    const CVector cur = state.col(0);
    const RVector pos = cur.cwiseAbs2();
    const RVector mpos = (f.adjoint() * cur).cwiseAbs2();
    const double d_pos = (exact.cwiseAbs2() - pos).cwiseAbs().maxCoeff();
    const double d_mom = ((f.adjoint() * exact).cwiseAbs2() - mpos).cwiseAbs().maxCoeff();
    table.rows.push_back({num(step), num(time), num(cur.norm()), num(std::norm(reference.dot(cur))),
                          num(pos.dot(xs)), num(mpos.dot(ps)), num(std::max(d_pos, d_mom)),
                          num(feasible_bound(cfg, v, p_max, step)),
                          num(oracle.counter().count(Oracle::kAction))});
  }
  return table;
}

Table run_gauss(const ExperimentSpec& spec, int jobs) {
  const int count = spec.params["count"].get<int>();
  const int max_coeff = spec.params["max_coeff"].get<int>();
  return sweep({"a", "b", "c", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "abs_diff", "tolerance"},
               static_cast<std::size_t>(count), jobs, [&](std::size_t i) -> std::vector<std::vector<std::string>> {
                 auto rng = point_rng(spec.seed, i);
                 std::uniform_int_distribution<long long> coef(-max_coeff, max_coeff);
                 long long a = 0, c = 0;
                 while (a == 0) a = coef(rng);
                 while (c == 0) c = coef(rng);
                 long long b = coef(rng);
                 if ((a * c + b) % 2 != 0) b += b < max_coeff ? 1 : -1;
                 const GaussSum g = gauss_sum_check(a, b, c);
                 const double tol = 1e-9 * std::sqrt(std::abs(static_cast<double>(c)));
                 return {{num(a), num(b), num(c), num(g.lhs.real()), num(g.lhs.imag()), num(g.rhs.real()),
                          num(g.rhs.imag()), num(std::abs(g.lhs - g.rhs)), num(tol)}};
               });
}

// ---- command line ----------------------------------------------------------

struct Inline {
  std::string spec_file;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 1;
  json params = json::object();
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) spec_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    spec_error(what + " does not parse: " + e.what());
  }
}

void print_error(std::ostream& err, const std::string& kind, const std::string& module, const std::string& what) {
  err << json{{"error", kind}, {"module", module}, {"message", what}}.dump() << '\n';
}

}  // namespace

json to_json(const ExperimentSpec& spec) {
  return json{{"kind", spec.kind}, {"params", spec.params}, {"seed", spec.seed}, {"output", spec.output}};
}

ExperimentSpec spec_from_json(const json& doc) {
  reject_unknown(doc, {"kind", "params", "seed", "output"}, "experiment spec");
  ExperimentSpec spec;
  spec.kind = get_as<std::string>(doc, "kind", "experiment spec");
  if (doc.contains("params")) spec.params = doc["params"];
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0)) {
      spec_error("seed must be a nonnegative integer");
    }
    spec.seed = doc["seed"].get<std::uint64_t>();
  }
  if (doc.contains("output")) spec.output = get_as<std::string>(doc, "output", "experiment spec");
  spec.params = normalised_params(spec.kind, spec.params);
  return spec;
}

json normalised_params(const std::string& kind, const json& params) {
  if (!params.is_object()) spec_error("params must be an object");
  if (kind == "trotter-error") return normalise_trotter(params);
  if (kind == "short-sim") return normalise_short(params);
  if (kind == "long-sim") return normalise_long(params);
  if (kind == "lagrangian-sim") return normalise_lagrangian(params);
  if (kind == "gauss-check") return normalise_gauss(params);
  spec_error("unknown experiment kind '" + kind + "'");
}

std::string spec_hash(const ExperimentSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(spec).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string Table::csv() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  };
  line(columns);
  for (const auto& row : rows) line(row);
  return out;
}

Table run_experiment(const ExperimentSpec& spec, int jobs) {
  const ExperimentSpec checked = spec_from_json(to_json(spec));
  if (checked.kind == "trotter-error") return run_trotter(checked, jobs);
  if (checked.kind == "short-sim") return run_short(checked, jobs);
  if (checked.kind == "long-sim") return run_long(checked, jobs);
  if (checked.kind == "lagrangian-sim") return run_lagrangian(checked);
  return run_gauss(checked, jobs);
}

void write_outputs(const ExperimentSpec& spec, const Table& table, double wall_clock_seconds) {
  if (spec.output.empty()) spec_error("no output path");
  {
    std::ofstream out(spec.output, std::ios::binary);
    if (!out) spec_error("cannot write '" + spec.output + "'");
    out << table.csv();
  }
  const json manifest{{"spec", to_json(spec)},
                      {"spec_hash", spec_hash(spec)},
                      {"version", PATHSIM_VERSION},
                      {"columns", table.columns},
                      {"rows", table.rows.size()},
                      {"wall_clock_seconds", wall_clock_seconds}};
  std::ofstream out(spec.output + ".manifest.json", std::ios::binary);
  if (!out) spec_error("cannot write the manifest next to '" + spec.output + "'");
  out << manifest.dump(2) << '\n';
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Path-integral simulation experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", PATHSIM_VERSION);
  Inline opt;

  auto common = [&opt](CLI::App* sub) {
    sub->add_option("--spec", opt.spec_file, "experiment spec JSON file");
    sub->add_option("--seed", opt.seed, "64-bit seed");
    sub->add_option("--out", opt.out, "output CSV path");
    sub->add_option("--jobs", opt.jobs, "sweep points run in parallel")->check(CLI::Range(1, 256));
  };
  std::string decomp_file;
  std::vector<int> ks, rs_list, bits_list;
  std::string sweep_opt;
  std::optional<int> random_count, k_single, r_single, n_opt, count, max_coeff;
  std::optional<double> t_opt, xmax, mass, p_max;
  std::vector<double> t_sweep;
  std::string system, form, potential, initial;

  CLI::App* trotter = app.add_subcommand("trotter-error", "product-formula error against its bound");
  common(trotter);
  trotter->add_option("--decomp", decomp_file, "decomposition JSON file");
  trotter->add_option("--random", random_count, "number of random decompositions");
  trotter->add_option("--k", ks, "formula orders");
  trotter->add_option("--r", rs_list, "step counts");
  trotter->add_option("--t", t_opt, "evolution time");

  CLI::App* shortsim = app.add_subcommand("short-sim", "short-time path-integral simulation");
  common(shortsim);
  shortsim->add_option("--decomp", decomp_file, "decomposition JSON file");
  shortsim->add_option("--k", k_single, "formula order");
  shortsim->add_option("--r", rs_list, "step counts");
  shortsim->add_option("--t", t_opt, "evolution time");
  shortsim->add_option("--bits", bits_list, "magnitude bits B");
  shortsim->add_option("--sweep", sweep_opt, "r:<list> or bits:<list>, comma separated");

  CLI::App* longsim = app.add_subcommand("long-sim", "long-time near-adiabatic path integral");
  common(longsim);
  longsim->add_option("--system", system, "sweep-linear, sweep-sine or a JSON system");
  longsim->add_option("--T-sweep", t_sweep, "total times");
  longsim->add_option("--r", r_single, "grid steps");
  longsim->add_option("--form", form, "one-jump form: corrected or as-written");

  CLI::App* lagr = app.add_subcommand("lagrangian-sim", "discrete Lagrangian path integral");
  common(lagr);
  lagr->add_option("--n", n_opt, "qubits");
  lagr->add_option("--xmax", xmax, "box length");
  lagr->add_option("--mass", mass, "particle mass");
  lagr->add_option("--r", r_single, "timesteps");
  lagr->add_option("--potential", potential, "zero | constant:c | harmonic:omega,x0 | square_well:l,r,depth | JSON");
  lagr->add_option("--initial", initial, "gaussian:x0,sigma,k0 | basis:q | JSON");
  lagr->add_option("--p-max", p_max, "momentum cutoff");

  CLI::App* gauss = app.add_subcommand("gauss-check", "generalised Gauss sum reciprocity");
  common(gauss);
  gauss->add_option("--count", count, "number of random triples");
  gauss->add_option("--max-coeff", max_coeff, "largest |a|, |b|, |c|");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    print_error(err, "spec", kModule, e.what());
    return 2;
  }

  try {
    const CLI::App* sub = app.get_subcommands().front();
    ExperimentSpec spec;
    spec.kind = sub->get_name();
    if (!opt.spec_file.empty()) {
      spec = spec_from_json(parse_json_text(read_file(opt.spec_file), "spec file"));
      if (spec.kind != sub->get_name()) spec_error("spec kind '" + spec.kind + "' does not match the subcommand");
    }
    json& p = spec.params;
    auto set = [&p](const char* key, json value) { p[key] = std::move(value); };
    if (spec.kind == "trotter-error") {
      if (!decomp_file.empty()) {
        p.erase("random");
        set("decomposition", parse_json_text(read_file(decomp_file), "decomposition file"));
      }
      if (random_count) {
        p.erase("decomposition");
        json rnd = p.contains("random") ? p["random"] : json::object();
        rnd["count"] = *random_count;
        set("random", rnd);
      }
      if (!ks.empty()) set("k", ks);
    } else if (spec.kind == "short-sim") {
      if (!decomp_file.empty()) set("decomposition", parse_json_text(read_file(decomp_file), "decomposition file"));
      if (k_single) set("k", *k_single);
      if (!bits_list.empty()) set("bits", bits_list);
      if (!sweep_opt.empty()) {
        const auto colon = sweep_opt.find(':');
        const std::string key = sweep_opt.substr(0, colon);
        if (colon == std::string::npos || (key != "r" && key != "bits")) {
          spec_error("--sweep expects r:<list> or bits:<list>");
        }
        json values = json::array();
        std::stringstream items(sweep_opt.substr(colon + 1));
        for (std::string item; std::getline(items, item, ',');) {
          try {
            std::size_t used = 0;
            values.push_back(std::stoi(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
          } catch (const std::logic_error&) {
            spec_error("--sweep value '" + item + "' is not an integer");
          }
        }
        if (values.empty()) spec_error("--sweep list is empty");
        set(key.c_str(), values);
      }
    } else if (spec.kind == "long-sim") {
      if (!system.empty()) {
        set("system", system.front() == '{' ? parse_json_text(system, "system JSON") : json(system));
      }
      if (!t_sweep.empty()) set("T", t_sweep);
      if (r_single) set("r", *r_single);
      if (!form.empty()) set("form", form);
    } else if (spec.kind == "lagrangian-sim") {
      if (n_opt) set("n", *n_opt);
      if (xmax) set("x_max", *xmax);
      if (mass) set("mass", *mass);
      if (r_single) set("r", *r_single);
      if (!potential.empty()) set("potential", parse_potential_text(potential));
      if (!initial.empty()) set("initial", parse_initial_text(initial));
      if (p_max) set("p_max", *p_max);
    } else if (spec.kind == "gauss-check") {
      if (count) set("count", *count);
      if (max_coeff) set("max_coeff", *max_coeff);
    }
    if ((spec.kind == "trotter-error" || spec.kind == "short-sim") && !rs_list.empty()) set("r", rs_list);
    if ((spec.kind == "trotter-error" || spec.kind == "short-sim") && t_opt) set("t", *t_opt);
    if (opt.seed) spec.seed = *opt.seed;
    if (!opt.out.empty()) spec.output = opt.out;
    if (spec.output.empty()) spec.output = spec.kind + ".csv";
    spec.params = normalised_params(spec.kind, spec.params);

    const auto start = std::chrono::steady_clock::now();
    const Table table = run_experiment(spec, opt.jobs);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_outputs(spec, table, wall);
    out << spec.output << ": " << table.rows.size() << " rows\n";
    return 0;
  } catch (const ContractError& e) {
    print_error(err, "spec", e.module(), e.what());
    return 2;
  } catch (const CapExceeded& e) {
    print_error(err, "cap", e.module(), e.what());
    return 3;
  } catch (const InvariantViolation& e) {
    print_error(err, "invariant", e.module(), e.what());
    return 4;
  } catch (const std::exception& e) {
    print_error(err, "internal", kModule, e.what());
    return 1;
  }
}

}  // namespace pathsim::cli
