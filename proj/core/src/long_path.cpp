#include "pathsim/long_path.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "detail.hpp"
#include "pathsim/errors.hpp"
#include "pathsim/ham_decomp.hpp"

namespace pathsim {
namespace {

constexpr const char* kModule = "long_path";
constexpr Eigen::Index kMaxStateDim = Eigen::Index{1} << 22;
constexpr double kEigTol = 1e-9;
constexpr int kMaxReferenceSteps = 1 << 22;

using detail::log2_int;
using detail::next_pow2;
using detail::sign_of;

double scale_of(const CMatrix& h) { return std::max(1.0, h.cwiseAbs().maxCoeff()); }

// Smallest adjacent gap of a sorted spectrum.
double min_gap(const RVector& sorted) {
  double g = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 1; i < sorted.size(); ++i) g = std::min(g, sorted(i) - sorted(i - 1));
  return g;
}

double min_pair_gap(const RVector& v) {
  double g = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    for (Eigen::Index k = i + 1; k < v.size(); ++k) g = std::min(g, std::abs(v(i) - v(k)));
  }
  return g;
}

RVector sorted_spectrum(const CMatrix& h) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es((h + h.adjoint()) * 0.5, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

// Reorders and rephases `next` to follow `prev`: column j of the result has
// the largest overlap with column j of prev, and that overlap is real positive.
void align(const EigenSystem& prev, EigenSystem& next, double s0, double s1) {
  const Eigen::Index n = prev.values.size();
  const CMatrix ov = prev.vectors.adjoint() * next.vectors;
  std::vector<Eigen::Index> pick(static_cast<std::size_t>(n));
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::Index best = 0;
    ov.row(j).cwiseAbs().maxCoeff(&best);
    if (used[static_cast<std::size_t>(best)] || std::norm(ov(j, best)) <= 0.5) {
      throw ContractError(kModule, "eigenvector tracking is ambiguous between s=" + std::to_string(s0) +
                                       " and s=" + std::to_string(s1) + "; refine the grid or check the gap");
    }
    used[static_cast<std::size_t>(best)] = 1;
    pick[static_cast<std::size_t>(j)] = best;
  }
  EigenSystem out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index k = pick[static_cast<std::size_t>(j)];
    const cplx o = ov(j, k);
    out.values(j) = next.values(k);
    out.vectors.col(j) = next.vectors.col(k) * (std::conj(o) / std::abs(o));
  }
  next = std::move(out);
}

EigenSystem checked_eig(const TimeDependentHamiltonian& h, double s) {
  const CMatrix hs = h.H(s);
  EigenSystem e = hermitian_eig(hs);
  if (min_pair_gap(e.values) <= 10.0 * kEigTol * scale_of(hs)) {
    throw ContractError(kModule, "spectral gap collapses at s=" + std::to_string(s));
  }
  return e;
}

// Transports along grid, keeping every `keep`-th point (and the last).
EigenPath transport(const TimeDependentHamiltonian& h, const std::vector<double>& grid, int keep) {
  if (grid.empty()) throw ContractError(kModule, "empty s grid");
  EigenPath out;
  EigenSystem cur = checked_eig(h, grid[0]);
  out.s.push_back(grid[0]);
  out.eig.push_back(cur);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    EigenSystem next = checked_eig(h, grid[i]);
    align(cur, next, grid[i - 1], grid[i]);
    cur = std::move(next);
    if (i % static_cast<std::size_t>(keep) == 0 || i + 1 == grid.size()) {
      out.s.push_back(grid[i]);
      out.eig.push_back(cur);
    }
  }
  return out;
}

cplx unit_phase(cplx z) { return z == 0.0 ? cplx(1.0, 0.0) : z / std::abs(z); }

// Magnitude the alternating-sign sum realises: an odd code loses its last unit.
double effective_magnitude(double x, int bits) {
  const std::uint64_t v = encode_magnitude(x, bits);
  return std::ldexp(static_cast<double>(v - (v & 1U)), -bits);
}

cplx quantize(cplx z, int bits) {
  if (z == 0.0) return 0.0;
  return effective_magnitude(std::abs(z), bits) * unit_phase(z);
}

CMatrix midpoint_product(const TimeDependentHamiltonian& h, double total_time, int steps) {
  return time_ordered_propagator(h.H, total_time, steps);
}

}  // namespace

void TimeDependentHamiltonian::validate() const {
  if (dim <= 0 || !H || !dH) throw ContractError(kModule, "time-dependent Hamiltonian needs dim, H and dH");
  if (dim > kMaxDim) throw CapExceeded(kModule, "dimension " + std::to_string(dim) + " exceeds cap");
  if (grid < 2) throw ContractError(kModule, "sample grid needs at least 2 points");
  for (int i = 0; i < grid; ++i) {
    const double s = static_cast<double>(i) / (grid - 1);
    const CMatrix hs = H(s);
    if (hs.rows() != dim || hs.cols() != dim) throw ContractError(kModule, "H(s) has the wrong shape");
    if (hermiticity_defect(hs) > 1e-10 * scale_of(hs)) {
      throw ContractError(kModule, "H(s) is not Hermitian at s=" + std::to_string(s));
    }
    const double g = min_gap(sorted_spectrum(hs));
    if (g <= 10.0 * kEigTol * scale_of(hs)) {
      throw ContractError(kModule, "degenerate spectrum at s=" + std::to_string(s));
    }
  }
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double step = 1e-4;
  for (int i = 0; i < 5; ++i) {
    const double s = u(rng);
    const CMatrix fd = (H(s + step) - H(s - step)) / (2.0 * step);
    const double err = spectral_norm(fd - dH(s));
    if (err > 1e-4) {
      throw ContractError(kModule, "dH disagrees with central differences of H at s=" + std::to_string(s) +
                                       " (" + std::to_string(err) + ")");
    }
  }
}

CMatrix TimeDependentHamiltonian::second_derivative(double s) const {
  if (d2H) return d2H(s);
  const double step = 1e-4;
  return (dH(s + step) - dH(s - step)) / (2.0 * step);
}

CMatrix TimeDependentHamiltonian::third_derivative(double s) const {
  if (d3H) return d3H(s);
  const double step = 1e-3;
  return (dH(s + step) - 2.0 * dH(s) + dH(s - step)) / (step * step);
}

TimeDependentHamiltonian interaction_frame(const CMatrix& a, const CMatrix& b, double total_time) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
    throw ContractError(kModule, "interaction_frame: A and B must be square and of equal size");
  }
  if (hermiticity_defect(a) > 1e-10 * scale_of(a) || hermiticity_defect(b) > 1e-10 * scale_of(b)) {
    throw ContractError(kModule, "interaction_frame: A and B must be Hermitian");
  }
  if (a.rows() > kMaxDim) throw CapExceeded(kModule, "interaction_frame: dimension exceeds cap");
  if (min_gap(sorted_spectrum(b)) <= 10.0 * kEigTol * scale_of(b)) {
    throw ContractError(kModule, "interaction_frame: B is degenerate");
  }
  const EigenSystem ea = hermitian_eig(a);
  const CMatrix c1 = commutator(a, b);
  const CMatrix c2 = commutator(a, c1);
  const CMatrix c3 = commutator(a, c2);
  const double T = total_time;
  auto frame = [ea, T](const CMatrix& x, double s, cplx factor) -> CMatrix {
    const CVector ph = (ea.values.cast<cplx>() * cplx(0.0, s * T)).array().exp();
    const CMatrix u = ea.vectors * ph.asDiagonal() * ea.vectors.adjoint();
    return factor * (u * x * u.adjoint());
  };
  TimeDependentHamiltonian h;
  h.dim = a.rows();
  h.H = [frame, b](double s) { return frame(b, s, 1.0); };
  h.dH = [frame, c1, T](double s) { return frame(c1, s, cplx(0.0, T)); };
  h.d2H = [frame, c2, T](double s) { return frame(c2, s, cplx(-T * T, 0.0)); };
  h.d3H = [frame, c3, T](double s) { return frame(c3, s, cplx(0.0, -T * T * T)); };
  return h;
}

TimeDependentHamiltonian two_level_sweep(double a, double b, SweepShape shape) {
  const CMatrix z = pauli('Z');
  const CMatrix x = pauli('X');
  constexpr double w = std::numbers::pi / 2.0;
  TimeDependentHamiltonian h;
  h.dim = 2;
  if (shape == SweepShape::kLinear) {
    h.H = [=](double s) -> CMatrix { return a * z + (b * s) * x; };
    h.dH = [=](double) -> CMatrix { return b * x; };
    h.d2H = [=](double) -> CMatrix { return CMatrix::Zero(2, 2); };
    h.d3H = h.d2H;
  } else {
    h.H = [=](double s) -> CMatrix { return a * z + (b * std::sin(w * s)) * x; };
    h.dH = [=](double s) -> CMatrix { return (b * w * std::cos(w * s)) * x; };
    h.d2H = [=](double s) -> CMatrix { return (-b * w * w * std::sin(w * s)) * x; };
    h.d3H = [=](double s) -> CMatrix { return (-b * w * w * w * std::cos(w * s)) * x; };
  }
  return h;
}

double gap_min(const TimeDependentHamiltonian& h, int samples) {
  if (samples < 2) throw ContractError(kModule, "gap_min needs at least 2 samples");
  double g = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) g = std::min(g, min_gap(sorted_spectrum(h.H(static_cast<double>(i) / (samples - 1)))));
  return g;
}

EigenPath smooth_eigensystem(const TimeDependentHamiltonian& h, const std::vector<double>& s_grid) {
  return transport(h, s_grid, 1);
}

EigenPath sample_path(const TimeDependentHamiltonian& h, int r, int min_points) {
  if (r < 1) throw ContractError(kModule, "sample_path: r must be positive");
  const int sub = std::max(1, (min_points + r - 1) / r);
  const long long points = static_cast<long long>(r) * sub + 1;
  if (points > (1LL << 24)) throw CapExceeded(kModule, "sample_path: transport grid exceeds 2^24 points");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (long long i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / (points - 1);
  return transport(h, grid, sub);
}

cplx beta(const EigenSystem& e, const CMatrix& dh, int j, int k) {
  const Eigen::Index n = e.values.size();
  if (j < 0 || k < 0 || j >= n || k >= n) throw ContractError(kModule, "beta: level index out of range");
  if (j == k) throw ContractError(kModule, "beta is undefined for j == k; the gauge fixes the diagonal to 0");
  const double g = e.values(j) - e.values(k);
  if (std::abs(g) <= kEigTol) throw ContractError(kModule, "beta: levels are degenerate");
  return e.vectors.col(j).dot(dh * e.vectors.col(k)) / g;
}

cplx beta(const TimeDependentHamiltonian& h, double s, int j, int k) {
  if (s < 0.0 || s > 1.0) throw ContractError(kModule, "beta: s must lie in [0, 1]");
  const int steps = std::max(16, static_cast<int>(std::ceil(4096.0 * s)));
  std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) grid[static_cast<std::size_t>(i)] = s * i / steps;
  const EigenPath p = transport(h, grid, steps);
  return beta(p.eig.back(), h.dH(s), j, k);
}

cplx transport_rate(const TimeDependentHamiltonian& h, double s, int j, int k, double step) {
  if (!(step > 0.0)) throw ContractError(kModule, "transport_rate: step must be positive");
  const EigenSystem e0 = checked_eig(h, s);
  EigenSystem ep = checked_eig(h, s + step);
  EigenSystem em = checked_eig(h, s - step);
  align(e0, ep, s, s + step);
  align(e0, em, s, s - step);
  const Eigen::Index n = e0.values.size();
  if (j < 0 || k < 0 || j >= n || k >= n) throw ContractError(kModule, "transport_rate: level index out of range");
  return (ep.vectors.col(j).dot(e0.vectors.col(k)) - em.vectors.col(j).dot(e0.vectors.col(k))) / (2.0 * step);
}

AdiabaticBounds adiabatic_bounds(const TimeDependentHamiltonian& h, int samples) {
  const int count = samples > 0 ? samples : h.grid;
  if (count < 2) throw ContractError(kModule, "adiabatic_bounds needs at least 2 samples");
  AdiabaticBounds b;
  b.gamma_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) {
    const double s = static_cast<double>(i) / (count - 1);
    const EigenSystem e = hermitian_eig(h.H(s));
    const CMatrix d1 = h.dH(s);
    const CMatrix d2 = h.second_derivative(s);
    b.max_d1 = std::max(b.max_d1, spectral_norm(d1));
    b.max_d2 = std::max(b.max_d2, spectral_norm(d2));
    b.max_d3 = std::max(b.max_d3, spectral_norm(h.third_derivative(s)));
    b.gamma_min = std::min(b.gamma_min, min_pair_gap(e.values));
    const CMatrix m1 = e.vectors.adjoint() * d1 * e.vectors;
    const CMatrix m2 = e.vectors.adjoint() * d2 * e.vectors;
    for (Eigen::Index j = 0; j < e.values.size(); ++j) {
      double curv = m2(j, j).real();
      for (Eigen::Index k = 0; k < e.values.size(); ++k) {
        if (k != j) curv += 2.0 * std::norm(m1(k, j)) / (e.values(j) - e.values(k));
      }
      b.Lambda = std::max(b.Lambda, std::abs(curv));
    }
  }
  if (!(b.gamma_min > 0.0)) throw ContractError(kModule, "adiabatic_bounds: spectrum is degenerate");
  const double g = b.gamma_min;
  b.Gamma = std::max({b.max_d1, b.max_d2, b.max_d3}) / g;
  b.aleph = 6.0 * std::pow(b.max_d1, 3) / std::pow(g, 3) + (b.max_d1 * b.max_d2 + 2.0 * b.max_d1 * b.max_d1) / (g * g);
  return b;
}

std::pair<double, double> jump_bounds(const AdiabaticBounds& bounds, double total_time, int m) {
  if (m < 1) throw ContractError(kModule, "jump_bounds: m must be at least 1");
  if (!(total_time > 0.0)) throw ContractError(kModule, "jump_bounds: T must be positive");
  const double even = std::pow(bounds.aleph, m) / (std::tgamma(m + 1.0) * std::pow(bounds.gamma_min * total_time, m));
  const double odd = bounds.max_d1 > 0.0 ? even * bounds.aleph / (bounds.max_d1 * total_time) : 0.0;
  return {even, odd};
}

LongTimeAmplitudes::LongTimeAmplitudes(const TimeDependentHamiltonian& h, double total_time, int r, OneJumpForm form,
                                       double zero_tol)
    : dim_(h.dim), r_(r), T_(total_time), form_(form), zero_tol_(zero_tol) {
  if (r < 4) throw ContractError(kModule, "grid r must be at least 4");
  if (!(total_time > 0.0)) throw ContractError(kModule, "T must be positive");
  path_ = sample_path(h, r);
  beta_.resize(static_cast<std::size_t>(r) + 1);
  nbr_.assign(static_cast<std::size_t>(r) + 1, std::vector<std::vector<int>>(static_cast<std::size_t>(dim_)));
  phase_ = RVector::Zero(dim_);
  for (int l = 0; l <= r; ++l) {
    const EigenSystem& e = path_.eig[static_cast<std::size_t>(l)];
    const CMatrix m = e.vectors.adjoint() * h.dH(static_cast<double>(l) / r) * e.vectors;
    CMatrix& bl = beta_[static_cast<std::size_t>(l)];
    bl = CMatrix::Zero(dim_, dim_);
    for (Eigen::Index j = 0; j < dim_; ++j) {
      for (Eigen::Index k = 0; k < dim_; ++k) {
        if (j != k) bl(j, k) = m(j, k) / (e.values(j) - e.values(k));
      }
    }
    for (Eigen::Index j = 0; j < dim_; ++j) {
      auto& list = nbr_[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)];
      for (Eigen::Index k = 0; k < dim_; ++k) {
        if (k != j && std::abs(bl(j, k)) > zero_tol_) list.push_back(static_cast<int>(k));
      }
      d_ = std::max(d_, static_cast<int>(list.size()));
    }
    const double w = (l == 0 || l == r) ? 0.5 : 1.0;
    phase_ += (w * T_ / r) * e.values;
  }
}

cplx LongTimeAmplitudes::beta(int l, int j, int k) const { return beta_[static_cast<std::size_t>(l)](j, k); }

double LongTimeAmplitudes::gap(int l, int j0, int j1) const {
  const RVector& v = path_.eig[static_cast<std::size_t>(l)].values;
  return v(j1) - v(j0);
}

int LongTimeAmplitudes::gap_phase_step() const { return form_ == OneJumpForm::kCorrected ? 0 : r_; }

cplx LongTimeAmplitudes::eta(int l, int j0, int j1) const {
  if (j0 == j1 || (l != 0 && l != r_)) return 0.0;
  const cplx v = cplx(0.0, 1.0) * beta(l, j1, j0) / (T_ * gap(l, j0, j1));
  const bool start_positive = form_ == OneJumpForm::kCorrected;
  return (l == 0) == start_positive ? v : -v;
}

cplx LongTimeAmplitudes::zeta(int l, int j0, int j1) const {
  if (j0 == j1) return 0.0;
  const double w = (l == 0 || l == r_) ? 0.5 : 1.0;
  return w / r_ * beta(l, j0, j1) * beta(l, j1, j0) / (cplx(0.0, 1.0) * T_ * gap(l, j0, j1));
}

const std::vector<int>& LongTimeAmplitudes::neighbours(int l, int j) const {
  if (l < 0 || l > r_ || j < 0 || j >= dim_) throw ContractError(kModule, "neighbours: index out of range");
  return nbr_[static_cast<std::size_t>(l)][static_cast<std::size_t>(j)];
}

int LongTimeAmplitudes::partner(int l, int j, int p) const {
  const auto& list = neighbours(l, j);
  return p >= 0 && p < static_cast<int>(list.size()) ? list[static_cast<std::size_t>(p)] : j;
}

bool LongTimeAmplitudes::member(int l, int side, int j, int c1, int c2) const {
  const int mine = side == 0 ? c1 : c2;
  const int theirs = side == 0 ? c2 : c1;
  const auto& list = neighbours(l, j);
  if (mine < 0 || mine >= static_cast<int>(list.size())) return false;
  const int q = list[static_cast<std::size_t>(mine)];
  const auto& back = neighbours(l, q);
  return theirs >= 0 && theirs < static_cast<int>(back.size()) && back[static_cast<std::size_t>(theirs)] == j;
}

namespace {

CMatrix assemble(const LongTimeAmplitudes& a, int bits) {
  const Eigen::Index n = a.dim();
  const int r = a.r();
  auto q = [bits](cplx z) { return bits > 0 ? quantize(z, bits) : z; };
  CMatrix v = CMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const cplx ph = std::polar(1.0, -a.total_phase(static_cast<int>(j)));
    cplx diag = 1.0;
    for (int l = 0; l <= r; ++l) {
      for (int k : a.neighbours(l, static_cast<int>(j))) diag += q(a.zeta(l, static_cast<int>(j), k));
    }
    v(j, j) += ph * diag;
    for (int l : {0, r}) {
      for (int k : a.neighbours(l, static_cast<int>(j))) {
        cplx amp = q(a.eta(l, static_cast<int>(j), k));
        if (l == a.gap_phase_step()) amp *= std::polar(1.0, -a.gap_phase(static_cast<int>(j), k));
        v(k, j) += ph * amp;
      }
    }
  }
  return v;
}

}  // namespace

CMatrix LongTimeAmplitudes::bar_V() const { return assemble(*this, 0); }

CMatrix LongTimeAmplitudes::bar_V_rounded(int bits) const {
  if (bits < 1 || bits > 40) throw ContractError(kModule, "bits must lie in [1, 40]");
  return assemble(*this, bits);
}

CMatrix LongTimeAmplitudes::to_computational(const CMatrix& eigen_form) const {
  return path_.eig.back().vectors * eigen_form * path_.eig.front().vectors.adjoint();
}

CMatrix bar_V(const TimeDependentHamiltonian& h, double total_time, int r, OneJumpForm form) {
  return LongTimeAmplitudes(h, total_time, r, form).bar_V();
}

CMatrix bar_U(const TimeDependentHamiltonian& h, double total_time, int r, OneJumpForm form) {
  const LongTimeAmplitudes a(h, total_time, r, form);
  return a.to_computational(a.bar_V());
}

CMatrix reference_propagator(const TimeDependentHamiltonian& h, double total_time, double tol) {
  int steps = 64;
  CMatrix coarse = midpoint_product(h, total_time, steps);
  CMatrix prev;
  while (2 * steps <= kMaxReferenceSteps) {
    const CMatrix fine = midpoint_product(h, total_time, 2 * steps);
    const CMatrix extrap = (4.0 * fine - coarse) / 3.0;
    if (prev.size() != 0 && spectral_norm(extrap - prev) < tol) return extrap;
    prev = extrap;
    coarse = fine;
    steps *= 2;
  }
  throw InvariantViolation(kModule, "reference propagator did not converge to " + std::to_string(tol) + " within " +
                                        std::to_string(kMaxReferenceSteps) + " steps");
}

double longtime_error(const TimeDependentHamiltonian& h, double total_time, int r, OneJumpForm form) {
  const AdiabaticBounds b = adiabatic_bounds(h);
  const double validity = std::pow(b.Gamma, 4) / (b.gamma_min * b.gamma_min * total_time * total_time);
  if (!(validity < 0.5)) {
    throw ContractError(kModule, "T=" + std::to_string(total_time) + " is too short: Gamma^4/(gamma^2 T^2) = " +
                                     std::to_string(validity) + " >= 0.5");
  }
  return spectral_norm(reference_propagator(h, total_time) - bar_U(h, total_time, r, form));
}

std::vector<CMatrix> jump_contributions(const TimeDependentHamiltonian& h, double total_time, int max_jumps,
                                        int steps) {
  if (max_jumps < 0) throw ContractError(kModule, "jump_contributions: max_jumps must be nonnegative");
  if (steps < 2) throw ContractError(kModule, "jump_contributions: need at least 2 steps");
  std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
  for (int i = 0; i <= steps; ++i) grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / steps;
  const EigenPath path = transport(h, grid, 1);
  const Eigen::Index n = h.dim;
  const double ds = 1.0 / steps;

  std::vector<CMatrix> kernel(static_cast<std::size_t>(steps) + 1);
  RVector theta = RVector::Zero(n);
  for (int i = 0; i <= steps; ++i) {
    const EigenSystem& e = path.eig[static_cast<std::size_t>(i)];
    if (i > 0) theta += 0.5 * ds * (e.values + path.eig[static_cast<std::size_t>(i) - 1].values);
    const CMatrix m = e.vectors.adjoint() * h.dH(grid[static_cast<std::size_t>(i)]) * e.vectors;
    CMatrix k = CMatrix::Zero(n, n);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        if (a == b) continue;
        k(a, b) = m(a, b) / (e.values(a) - e.values(b)) * std::polar(1.0, total_time * (theta(a) - theta(b)));
      }
    }
    kernel[static_cast<std::size_t>(i)] = std::move(k);
  }

  std::vector<CMatrix> out;
  std::vector<CMatrix> prev(static_cast<std::size_t>(steps) + 1, CMatrix::Identity(n, n));
  out.push_back(CMatrix::Identity(n, n));
  for (int p = 1; p <= max_jumps; ++p) {
    std::vector<CMatrix> cur(static_cast<std::size_t>(steps) + 1);
    cur[0] = CMatrix::Zero(n, n);
    for (int i = 0; i < steps; ++i) {
      const auto a = static_cast<std::size_t>(i);
      cur[a + 1] = cur[a] + 0.5 * ds * (kernel[a + 1] * prev[a + 1] + kernel[a] * prev[a]);
    }
    out.push_back(cur.back());
    prev = std::move(cur);
  }
  return out;
}

QueryCounter long_select_budget() {
  QueryCounter q;
  q.add(Oracle::kIndexTD, 27);
  q.add(Oracle::kEtaMagnitude, 2);
  q.add(Oracle::kZetaMagnitude, 2);
  q.add(Oracle::kTotalPhase, 1);
  q.add(Oracle::kEtaPhase, 1);
  q.add(Oracle::kGapPhase, 1);
  q.add(Oracle::kZetaPhase, 1);
  return q;
}

namespace {

struct LongSelectOutcome {
  int side;
  int j;
  cplx amp;
};

// One basis-state pass through the long-time SEL register plan. Registers:
// r0 step l, r1 side, r2 system, r3 jump count p, r4 b, r5 c1, r6 c2,
// r7 membership, r8 partner, r9 magnitude, r10 comparison. Controlled
// oracles are counted whether or not their controls fire.
LongSelectOutcome run_long_select(const LongTimeAmplitudes& a, int bits, int l, int p, int side, int j, int b, int c1,
                                  int c2, QueryCounter& qc) {
  const bool boundary = l == 0 || l == a.r();
  const bool colour_two = p == 2;
  const bool colour_one = p == 1 && boundary;
  const auto ub = static_cast<std::uint64_t>(b);
  int r1 = side, r2 = j, r7 = 0, r8 = 0, r10 = 0;
  std::uint64_t r9 = 0;
  cplx amp = 1.0;
  auto slot = [&](int s) { return s == 0 ? c1 : c2; };

  qc.add(Oracle::kIndexTD, 8);  // O_C on two-jump branch
  if (colour_two) r7 ^= a.member(l, r1, r2, c1, c2) ? 1 : 0;
  qc.add(Oracle::kIndexTD, 8);  // O_C on one-jump boundary branch
  if (colour_one) r7 ^= a.member(l, r1, r2, c1, c2) ? 1 : 0;
  qc.add(Oracle::kIndexTD);
  if (r7) r8 ^= a.partner(l, r2, slot(r1));
  qc.add(Oracle::kEtaMagnitude);
  if (r7 && r1 == 0 && p == 1) r9 ^= encode_magnitude(std::abs(a.eta(l, r2, r8)), bits);
  qc.add(Oracle::kZetaMagnitude);
  if (r7 && r1 == 0 && p == 2) r9 ^= encode_magnitude(std::abs(a.zeta(l, r2, r8)), bits);
  if (p == 1 || p == 2) r10 ^= (r9 <= ub) ? 1 : 0;
  qc.add(Oracle::kTotalPhase);
  if (p == 0 || r7) amp *= std::polar(1.0, -a.total_phase(r2));
  qc.add(Oracle::kEtaPhase);
  if (r7 && r1 == 0 && p == 1) amp *= unit_phase(a.eta(l, r2, r8));
  qc.add(Oracle::kGapPhase);
  if (r7 && r1 == 0 && p == 1 && l == a.gap_phase_step()) amp *= std::polar(1.0, -a.gap_phase(r2, r8));
  qc.add(Oracle::kZetaPhase);
  if (r7 && r1 == 0 && p == 2) amp *= unit_phase(a.zeta(l, r2, r8));
  if (r7 && p == 1) {
    std::swap(r2, r8);
    r1 ^= 1;
  }
  if (r10) amp *= sign_of(b);
  if (p == 1 || p == 2) r10 ^= (r9 <= ub) ? 1 : 0;
  qc.add(Oracle::kEtaMagnitude);
  if (r7 && r1 == 1 && p == 1) r9 ^= encode_magnitude(std::abs(a.eta(l, r8, r2)), bits);
  qc.add(Oracle::kZetaMagnitude);
  if (r7 && r1 == 0 && p == 2) r9 ^= encode_magnitude(std::abs(a.zeta(l, r2, r8)), bits);
  qc.add(Oracle::kIndexTD);
  if (r7 && p == 1) r8 ^= a.partner(l, r2, slot(r1));
  qc.add(Oracle::kIndexTD);
  if (r7 && p == 2) r8 ^= a.partner(l, r2, slot(r1));
  qc.add(Oracle::kIndexTD, 8);  // O_C uncompute
  if (colour_two || colour_one) r7 ^= a.member(l, r1, r2, c1, c2) ? 1 : 0;
  if (p == 1) r1 ^= 1;
  if (r7 != 0 || r8 != 0 || r9 != 0 || r10 != 0) {
    throw InvariantViolation(kModule, "long-time SEL left work registers dirty at l=" + std::to_string(l));
  }
  return {r1, r2, amp};
}

}  // namespace

LongTimeBlockEncoding::LongTimeBlockEncoding(const LongTimeAmplitudes& amps, int bits)
    : n_(amps.dim()), r_(amps.r()), bits_(bits), d_pad_(next_pow2(std::max(1, amps.d()))),
      budget_(long_select_budget()) {
  if (bits < 1 || bits > 20) throw ContractError(kModule, "bits must lie in [1, 20]");
  low_ = (Eigen::Index{1} << bits_) * d_pad_ * d_pad_;
  anc_ = static_cast<Eigen::Index>(r_ + 1) * 4 * low_;
  if (total_dim() > kMaxStateDim) {
    throw CapExceeded(kModule, "long-time block encoding of dimension " + std::to_string(total_dim()) +
                                   " exceeds cap 2^22");
  }
  const double w = static_cast<double>(r_ + 1) * d_pad_ * d_pad_;
  const double total = 1.0 + 2.0 * w;
  prep_ = RVector::Zero(4 * (r_ + 1));
  for (int l = 0; l <= r_; ++l) {
    prep_(4 * l + 0) = std::sqrt(1.0 / total / (r_ + 1));
    prep_(4 * l + 1) = std::sqrt(w / total / (r_ + 1));
    prep_(4 * l + 2) = std::sqrt(w / total / (r_ + 1));
  }
  build_select(amps);
}

double LongTimeBlockEncoding::subnormalization() const {
  return 1.0 + 2.0 * static_cast<double>(r_ + 1) * d_pad_ * d_pad_;
}

int LongTimeBlockEncoding::ancilla_qubits() const {
  return 1 + log2_int(4 * (r_ + 1)) + bits_ + 2 * log2_int(d_pad_);
}

void LongTimeBlockEncoding::build_select(const LongTimeAmplitudes& amps) {
  const Eigen::Index total = total_dim();
  target_.assign(static_cast<std::size_t>(total), -1);
  phase_.assign(static_cast<std::size_t>(total), cplx(0.0, 0.0));
  std::vector<char> hit(static_cast<std::size_t>(total), 0);
  const int levels = 1 << bits_;
  QueryCounter qc;
  for (int side = 0; side < 2; ++side) {
    for (Eigen::Index j = 0; j < n_; ++j) {
      for (int l = 0; l <= r_; ++l) {
        for (int p = 0; p < 4; ++p) {
          for (int b = 0; b < levels; ++b) {
            for (int c1 = 0; c1 < d_pad_; ++c1) {
              for (int c2 = 0; c2 < d_pad_; ++c2) {
                const QueryCounter before = qc;
                const LongSelectOutcome out =
                    run_long_select(amps, bits_, l, p, side, static_cast<int>(j), b, c1, c2, qc);
                if (!(qc - before == budget_)) {
                  throw InvariantViolation(kModule, "SEL pass used a query count different from its budget");
                }
                const Eigen::Index a = (static_cast<Eigen::Index>(l) * 4 + p) * low_ +
                                       (static_cast<Eigen::Index>(b) * d_pad_ + c1) * d_pad_ + c2;
                const Eigen::Index in = (side * n_ + j) * anc_ + a;
                const Eigen::Index to = (out.side * n_ + out.j) * anc_ + a;
                if (hit[static_cast<std::size_t>(to)]) throw InvariantViolation(kModule, "SEL is not a permutation");
                hit[static_cast<std::size_t>(to)] = 1;
                target_[static_cast<std::size_t>(in)] = static_cast<std::int32_t>(to);
                phase_[static_cast<std::size_t>(in)] = out.amp;
              }
            }
          }
        }
      }
    }
  }
}

// PREP is real, symmetric and self-inverse: a Householder reflection taking
// |0> to prep_ on (l, p), and Hadamards on (b, c1, c2).
void LongTimeBlockEncoding::prepare(CVector& v) const {
  detail::hadamard_rows(v, low_);
  RVector u = -prep_;
  u(0) += 1.0;
  const double uu = u.squaredNorm();
  if (uu == 0.0) return;
  const Eigen::Index rows = prep_.size();
  for (Eigen::Index base = 0; base < v.size(); base += anc_) {
    for (Eigen::Index t = 0; t < low_; ++t) {
      cplx dot = 0.0;
      for (Eigen::Index i = 0; i < rows; ++i) dot += u(i) * v(base + i * low_ + t);
      const cplx f = 2.0 * dot / uu;
      for (Eigen::Index i = 0; i < rows; ++i) v(base + i * low_ + t) -= f * u(i);
    }
  }
}

void LongTimeBlockEncoding::apply_impl(Eigen::Ref<CVector> state, bool adjoint) const {
  CVector v = state;
  prepare(v);
  CVector w(v.size());
  const std::size_t total = target_.size();
  if (!adjoint) {
    for (std::size_t i = 0; i < total; ++i) w(target_[i]) = phase_[i] * v(static_cast<Eigen::Index>(i));
  } else {
    for (std::size_t i = 0; i < total; ++i) w(static_cast<Eigen::Index>(i)) = std::conj(phase_[i]) * v(target_[i]);
  }
  prepare(w);
  state = w;
}

}  // namespace pathsim
