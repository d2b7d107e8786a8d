#include "pathsim/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "pathsim/errors.hpp"

namespace pathsim {
namespace {

constexpr const char* kModule = "lagrangian";
constexpr double kPi = std::numbers::pi;
constexpr std::int64_t kPathSumCap = std::int64_t{1} << 16;

// exp(i pi k / n) with k reduced mod 2n first.
cplx pi_phase(std::int64_t k, std::int64_t n) {
  const std::int64_t period = 2 * n;
  const std::int64_t red = ((k % period) + period) % period;
  return std::polar(1.0, kPi * static_cast<double>(red) / static_cast<double>(n));
}

// Kinetic phase m (dq dx)^2 / (2 tau) = pi dq^2 / 2^n, exact in the integers.
cplx kinetic_phase(std::int64_t dq, std::int64_t size) { return pi_phase(dq * dq, size); }

RVector sampled(const LatticeConfig& cfg, const Potential& v) {
  RVector out(cfg.size());
  for (Eigen::Index q = 0; q < cfg.size(); ++q) out(q) = v(static_cast<double>(q) * cfg.dx());
  return out;
}

void check_normalised(const Eigen::Ref<const CMatrix>& states) {
  for (Eigen::Index c = 0; c < states.cols(); ++c) {
    const double norm = states.col(c).norm();
    if (std::abs(norm - 1.0) > 1e-10) {
      throw ContractError(kModule, "state column " + std::to_string(c) + " has norm " + std::to_string(norm));
    }
  }
}

}  // namespace

void LatticeConfig::validate() const {
  if (n < 1 || n > 10) throw ContractError(kModule, "n must lie in [1, 10], got " + std::to_string(n));
  if (r < 1) throw ContractError(kModule, "r must be positive, got " + std::to_string(r));
  if (!(x_max > 0.0) || !std::isfinite(x_max)) throw ContractError(kModule, "x_max must be positive and finite");
  if (!(mass > 0.0) || !std::isfinite(mass)) throw ContractError(kModule, "mass must be positive and finite");
}

double LatticeConfig::tau() const { return mass * x_max * dx() / (2.0 * kPi); }

double LatticeConfig::dp() const { return 2.0 * kPi / x_max; }

LatticeConfig LatticeConfig::for_total_time(int n, double x_max, int r, double total_time) {
  if (!(total_time > 0.0)) throw ContractError(kModule, "total time must be positive");
  LatticeConfig cfg;
  cfg.n = n;
  cfg.x_max = x_max;
  cfg.r = r;
  cfg.mass = 1.0;
  cfg.validate();
  cfg.mass = 2.0 * kPi * total_time * static_cast<double>(cfg.size()) / (r * x_max * x_max);
  cfg.validate();
  return cfg;
}

void Potential::validate(const LatticeConfig& cfg) const {
  if (!v) throw ContractError(kModule, "potential '" + name + "' has no function");
  const RVector s = sampled(cfg, *this);
  for (Eigen::Index q = 0; q < s.size(); ++q) {
    if (!std::isfinite(s(q)) || std::abs(s(q)) > v_max * (1.0 + 1e-12) + 1e-300) {
      throw ContractError(kModule, "potential '" + name + "' exceeds its declared bound at q=" + std::to_string(q));
    }
  }
}

Potential Potential::zero() { return {"zero", [](double) { return 0.0; }, 0.0}; }

Potential Potential::constant(double c) { return {"constant", [c](double) { return c; }, std::abs(c)}; }

Potential Potential::harmonic(double mass, double omega, double x0, double x_max) {
  if (!(mass > 0.0) || !(x_max > 0.0)) throw ContractError(kModule, "harmonic potential needs mass, x_max > 0");
  const double k = 0.5 * mass * omega * omega;
  const double reach = std::max(std::abs(x0), std::abs(x_max - x0));
  return {"harmonic", [k, x0](double x) { return k * (x - x0) * (x - x0); }, k * reach * reach};
}

Potential Potential::square_well(double left, double right, double depth) {
  if (!(left < right)) throw ContractError(kModule, "square well needs left < right");
  return {"square_well", [=](double x) { return (x >= left && x < right) ? -depth : 0.0; }, std::abs(depth)};
}

CMatrix position_op(const LatticeConfig& cfg) {
  cfg.validate();
  CMatrix x = CMatrix::Zero(cfg.size(), cfg.size());
  for (Eigen::Index q = 0; q < cfg.size(); ++q) x(q, q) = static_cast<double>(q) * cfg.dx();
  return x;
}

CMatrix momentum_op(const LatticeConfig& cfg) {
  const CMatrix f = qft_matrix(cfg.n);
  const CMatrix p = (2.0 * kPi / (cfg.x_max * cfg.dx())) * (f * position_op(cfg) * f.adjoint());
  return 0.5 * (p + p.adjoint());
}

CMatrix potential_op(const LatticeConfig& cfg, const Potential& v) {
  cfg.validate();
  return sampled(cfg, v).cast<cplx>().asDiagonal();
}

ActionOracle::ActionOracle(const LatticeConfig& cfg, const Potential& v) : size_(cfg.size()) {
  cfg.validate();
  v.validate(cfg);
  potential_ = sampled(cfg, v) * cfg.tau();
}

cplx ActionOracle::phase(Eigen::Index q_k, Eigen::Index q_next) const {
  return kinetic_phase(q_next - q_k, size_) * std::polar(1.0, -potential_(q_k));
}

cplx ActionOracle::operator()(Eigen::Index q_k, Eigen::Index q_next) const {
  if (q_k < 0 || q_next < 0 || q_k >= size_ || q_next >= size_) {
    throw ContractError(kModule, "action oracle index out of range");
  }
  counter_.add(Oracle::kAction);
  return phase(q_k, q_next);
}

CVector ActionOracle::diagonal() const {
  CVector d(size_ * size_);
  for (Eigen::Index a = 0; a < size_; ++a) {
    for (Eigen::Index b = 0; b < size_; ++b) d(a * size_ + b) = phase(a, b);
  }
  return d;
}

cplx step_global_phase(const LatticeConfig& cfg, const Potential& v) {
  cfg.validate();
  return std::polar(1.0, kPi / 4.0 - cfg.tau() * v(0.0));
}

void lagrangian_step(const LatticeConfig& cfg, const ActionOracle& oracle, Eigen::Ref<CMatrix> states) {
  const Eigen::Index size = cfg.size();
  if (states.rows() != size) throw ContractError(kModule, "state has the wrong dimension");
  check_normalised(states);
  // The first oracle call acts with its second register held at 0, the
  // second with its first register held at 0; one query each acts on every
  // basis component in superposition.
  CVector first(size), second(size);
  for (Eigen::Index q = 0; q < size; ++q) {
    first(q) = oracle.phase(q, 0);
    second(q) = oracle.phase(0, q);
  }
  oracle.counter().add(Oracle::kAction, 2);
  oracle.counter().add(Oracle::kFourier);
  states = first.asDiagonal() * states;
  states = qft_matrix(cfg.n).adjoint() * states;
  states = second.asDiagonal() * states;
}

CVector lagrangian_step(const LatticeConfig& cfg, const Potential& v, const CVector& state) {
  const ActionOracle oracle(cfg, v);
  CMatrix m = state;
  lagrangian_step(cfg, oracle, m);
  return m.col(0);
}

CMatrix lagrangian_propagator(const LatticeConfig& cfg, const Potential& v, QueryCounter* queries) {
  const ActionOracle oracle(cfg, v);
  const Eigen::Index size = cfg.size();
  if (static_cast<double>(cfg.r) * static_cast<double>(size) > static_cast<double>(1 << 20)) {
    throw CapExceeded(kModule, "r 2^n exceeds 2^20");
  }
  CVector first(size), second(size);
  for (Eigen::Index q = 0; q < size; ++q) {
    first(q) = oracle.phase(q, 0);
    second(q) = oracle.phase(0, q);
  }
  const CMatrix step = second.asDiagonal() * qft_matrix(cfg.n).adjoint() * first.asDiagonal();
  CMatrix u = CMatrix::Identity(size, size);
  for (int k = 0; k < cfg.r; ++k) {
    u = step * u;
    oracle.counter().add(Oracle::kAction, 2);
    oracle.counter().add(Oracle::kFourier);
  }
  if (queries) *queries += oracle.counter();
  return std::pow(std::conj(step_global_phase(cfg, v)), cfg.r) * u;
}

CMatrix lagrangian_path_sum(const LatticeConfig& cfg, const Potential& v) {
  cfg.validate();
  v.validate(cfg);
  const std::int64_t size = cfg.size();
  std::int64_t interior = 1;
  for (int k = 1; k < cfg.r; ++k) {
    interior *= size;
    if (interior > kPathSumCap) throw CapExceeded(kModule, "path sum over (2^n)^(r-1) paths exceeds 2^16");
  }
  const RVector pot = sampled(cfg, v) * cfg.tau();
  const cplx prefactor = std::pow(std::polar(1.0 / std::sqrt(static_cast<double>(size)), -kPi / 4.0), cfg.r);
  CMatrix u = CMatrix::Zero(size, size);
  std::vector<std::int64_t> path(static_cast<std::size_t>(cfg.r) + 1);
  for (std::int64_t a = 0; a < size; ++a) {
    for (std::int64_t b = 0; b < size; ++b) {
      cplx total = 0.0;
      for (std::int64_t idx = 0; idx < interior; ++idx) {
        path.front() = a;
        path.back() = b;
        std::int64_t rest = idx;
        for (int k = 1; k < cfg.r; ++k) {
          path[static_cast<std::size_t>(k)] = rest % size;
          rest /= size;
        }
        cplx amp = 1.0;
        for (int k = 0; k < cfg.r; ++k) {
          const std::int64_t from = path[static_cast<std::size_t>(k)];
          const std::int64_t to = path[static_cast<std::size_t>(k) + 1];
          amp *= kinetic_phase(to - from, size) * std::polar(1.0, -pot(from));
        }
        total += amp;
      }
      u(b, a) = prefactor * total;
    }
  }
  return u;
}

CMatrix split_step_reference(const LatticeConfig& cfg, const Potential& v) {
  cfg.validate();
  const CMatrix p = momentum_op(cfg);
  const CMatrix kinetic = exp_unitary(p * p / (2.0 * cfg.mass), cfg.tau());
  const CMatrix step = kinetic * exp_unitary(potential_op(cfg, v), cfg.tau());
  CMatrix u = CMatrix::Identity(cfg.size(), cfg.size());
  for (int k = 0; k < cfg.r; ++k) u = step * u;
  return u;
}

GaussSum gauss_sum_check(long long a, long long b, long long c) {
  if (a == 0 || c == 0) throw ContractError(kModule, "gauss_sum_check: a c must be nonzero");
  if ((a * c + b) % 2 != 0) throw ContractError(kModule, "gauss_sum_check: a c + b must be even");
  if (std::llabs(a) > (1LL << 20) || std::llabs(c) > (1LL << 20) || std::llabs(b) > (1LL << 20)) {
    throw CapExceeded(kModule, "gauss_sum_check: coefficients exceed 2^20");
  }
  // exp(i pi k / d) for k / d with d possibly negative.
  auto ratio_phase = [](std::int64_t k, std::int64_t d) { return d > 0 ? pi_phase(k, d) : pi_phase(-k, -d); };
  GaussSum out{0.0, 0.0};
  for (long long j = 0; j < std::llabs(c); ++j) out.lhs += ratio_phase(a * j * j + b * j, c);
  cplx tail = 0.0;
  for (long long j = 0; j < std::llabs(a); ++j) tail += ratio_phase(-(c * j * j + b * j), a);
  const long long ac = a * c;
  const double sgn = ac > 0 ? 1.0 : -1.0;
  // exp(i pi / 4 (sgn - b^2 / ac)) = exp(i pi (sgn ac - b^2) / (4 ac)).
  const cplx front = ratio_phase(static_cast<std::int64_t>(sgn) * ac - b * b, 4 * ac);
  out.rhs = std::sqrt(std::abs(static_cast<double>(c) / static_cast<double>(a))) * front * tail;
  return out;
}

CMatrix momentum_cutoff_projector(const LatticeConfig& cfg, double p_max) {
  cfg.validate();
  const CMatrix f = qft_matrix(cfg.n);
  CVector keep = CVector::Zero(cfg.size());
  for (Eigen::Index k = 0; k < cfg.size(); ++k) {
    if (static_cast<double>(k) * cfg.dp() <= p_max * (1.0 + 1e-12)) keep(k) = 1.0;
  }
  return f * keep.asDiagonal() * f.adjoint();
}

CVector gaussian_packet(const LatticeConfig& cfg, double x0, double sigma, double k0) {
  cfg.validate();
  if (!(sigma > 0.0)) throw ContractError(kModule, "gaussian width must be positive");
  CVector psi(cfg.size());
  for (Eigen::Index q = 0; q < cfg.size(); ++q) {
    const double x = static_cast<double>(q) * cfg.dx();
    psi(q) = std::polar(std::exp(-(x - x0) * (x - x0) / (4.0 * sigma * sigma)), k0 * x);
  }
  const double norm = psi.norm();
  if (!(norm > 0.0)) throw ContractError(kModule, "gaussian packet vanishes on the lattice");
  return psi / norm;
}

double feasible_bound(const LatticeConfig& cfg, const Potential& v, double p_max, int steps) {
  cfg.validate();
  const double tau = cfg.tau();
  return steps * (2.0 * tau * tau * v.v_max * p_max * p_max / cfg.mass) *
         std::sqrt(p_max * cfg.x_max / (2.0 * kPi) + 1.0);
}

FeasibleErrorReport feasible_error_check(const LatticeConfig& cfg, const Potential& v, double p_max,
                                         const CVector& psi) {
  cfg.validate();
  v.validate(cfg);
  if (psi.size() != cfg.size()) throw ContractError(kModule, "psi has the wrong dimension");
  if (std::abs(psi.norm() - 1.0) > 1e-10) throw ContractError(kModule, "psi is not normalised");
  if (!(p_max >= 0.0)) throw ContractError(kModule, "p_max must be nonnegative");
  FeasibleErrorReport rep;
  rep.outside_cutoff = (psi - momentum_cutoff_projector(cfg, p_max) * psi).norm();
  if (rep.outside_cutoff > 1e-10) {
    throw ContractError(kModule, "psi has weight " + std::to_string(rep.outside_cutoff) + " beyond p_max");
  }
  const CMatrix p = momentum_op(cfg);
  const CMatrix h = p * p / (2.0 * cfg.mass) + potential_op(cfg, v);
  const CVector exact = exp_unitary(h, cfg.total_time()) * psi;
  const CVector stepped = lagrangian_propagator(cfg, v) * psi;
  const CMatrix f = qft_matrix(cfg.n);
  const RVector pos = (exact.cwiseAbs2() - stepped.cwiseAbs2()).cwiseAbs();
  const RVector mom = ((f.adjoint() * exact).cwiseAbs2() - (f.adjoint() * stepped).cwiseAbs2()).cwiseAbs();
  rep.measured = std::max(pos.maxCoeff(), mom.maxCoeff());
  rep.bound = feasible_bound(cfg, v, p_max, cfg.r);
  return rep;
}

}  // namespace pathsim
