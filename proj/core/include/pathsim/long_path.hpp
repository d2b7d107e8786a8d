#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pathsim/linalg.hpp"
#include "pathsim/query_counter.hpp"
#include "pathsim/short_path.hpp"

namespace pathsim {

// H(s) on s in [0, 1] with its analytic derivative. d2H and d3H are optional;
// when empty they are estimated by central differences of dH.
struct TimeDependentHamiltonian {
  Eigen::Index dim = 0;
  HamiltonianFn H;
  HamiltonianFn dH;
  HamiltonianFn d2H;
  HamiltonianFn d3H;
  int grid = 256;  // samples used for gap and derivative-norm scans

  // Throws ContractError on a non-Hermitian sample, a gap at or below
  // 10 * eigensolver tolerance, or a dH that disagrees with central
  // differences of H by more than 1e-4 at five seeded random points.
  void validate() const;

  CMatrix second_derivative(double s) const;
  CMatrix third_derivative(double s) const;
};

// e^{i A s T} B e^{-i A s T} with analytic derivatives. B must have a
// non-degenerate spectrum.
TimeDependentHamiltonian interaction_frame(const CMatrix& a, const CMatrix& b, double total_time);

enum class SweepShape { kLinear, kSine };

// a Z + b f(s) X with f(s) = s or sin(pi s / 2).
TimeDependentHamiltonian two_level_sweep(double a, double b, SweepShape shape);

// Smallest |lambda_j(s) - lambda_k(s)|, j != k, over `samples` evenly spaced s.
double gap_min(const TimeDependentHamiltonian& h, int samples);

struct EigenPath {
  std::vector<double> s;
  std::vector<EigenSystem> eig;  // eigenvalues in tracked (not sorted) order
};

// Eigensystems along s_grid in the discrete parallel-transport gauge: the
// first point uses hermitian_eig, each later column is matched to the
// previous one by largest overlap and rotated so <chi_j(s_i)|chi_j(s_{i+1})>
// is real positive. Throws ContractError if matching is ambiguous or the gap
// collapses.
EigenPath smooth_eigensystem(const TimeDependentHamiltonian& h, const std::vector<double>& s_grid);

// Transported eigensystems at l/r, l = 0..r, using at least `min_points`
// intermediate grid points for the transport.
EigenPath sample_path(const TimeDependentHamiltonian& h, int r, int min_points = 4096);

// <chi_j|dH|chi_k> / (lambda_j - lambda_k). Throws ContractError for j == k.
cplx beta(const EigenSystem& e, const CMatrix& dh, int j, int k);
// Same, in the frame transported from s = 0.
cplx beta(const TimeDependentHamiltonian& h, double s, int j, int k);

// Central difference in delta of <chi_j(s + delta)|chi_k(s)> with the frame
// transported locally from s; approximates beta_jk for j != k and the
// diagonal connection for j == k.
cplx transport_rate(const TimeDependentHamiltonian& h, double s, int j, int k, double step = 1e-5);

struct AdiabaticBounds {
  double gamma_min = 0.0;
  double max_d1 = 0.0;  // max ||dH||
  double max_d2 = 0.0;
  double max_d3 = 0.0;
  double Gamma = 0.0;   // max(max_d1, max_d2, max_d3) / gamma_min
  double Lambda = 0.0;  // max_j max_s |lambda_j''(s)|
  double aleph = 0.0;   // 6 d1^3 / g^3 + (d1 d2 + 2 d1^2) / g^2
};

AdiabaticBounds adiabatic_bounds(const TimeDependentHamiltonian& h, int samples = 0);

// Bounds on the 2m- and (2m+1)-jump sums. m >= 1.
std::pair<double, double> jump_bounds(const AdiabaticBounds& bounds, double total_time, int m);

// Sign convention of the one-jump boundary term. kCorrected attaches the
// accumulated gap phase to the s = 0 jump (the path spends the whole time on
// the new level); kAsWritten attaches it to the s = 1 jump.
enum class OneJumpForm { kCorrected, kAsWritten };

// Amplitudes of the truncated long-time operator on the grid l/r, l = 0..r.
class LongTimeAmplitudes {
 public:
  LongTimeAmplitudes(const TimeDependentHamiltonian& h, double total_time, int r,
                     OneJumpForm form = OneJumpForm::kCorrected, double zero_tol = 1e-12);

  Eigen::Index dim() const { return dim_; }
  int r() const { return r_; }
  double total_time() const { return T_; }
  OneJumpForm form() const { return form_; }
  // Largest number of nonzero beta per state over the grid (0 if none).
  int d() const { return d_; }
  const EigenPath& path() const { return path_; }

  cplx beta(int l, int j, int k) const;
  double gap(int l, int j0, int j1) const;  // lambda_j1 - lambda_j0 at l/r
  // (T/r) trapezoid of lambda_j.
  double total_phase(int j) const { return phase_(j); }
  // (T/r) trapezoid of lambda_j1 - lambda_j0.
  double gap_phase(int j0, int j1) const { return phase_(j1) - phase_(j0); }
  // Grid point whose one-jump term carries exp(-i gap_phase).
  int gap_phase_step() const;
  // One-jump amplitude j0 -> j1 at step l; zero unless l is 0 or r.
  cplx eta(int l, int j0, int j1) const;
  // Two-jump return amplitude j0 -> j1 -> j0 at step l, trapezoid weight included.
  cplx zeta(int l, int j0, int j1) const;

  // Ascending list of j1 with nonzero beta_{j0 j1} at step l.
  const std::vector<int>& neighbours(int l, int j) const;
  // p-th neighbour, or j itself when p is past the end.
  int partner(int l, int j, int p) const;
  // Whether (side, j) has an edge of colour (c1, c2) at step l.
  bool member(int l, int side, int j, int c1, int c2) const;

  // Truncated operator in eigen-index form and mapped to the computational
  // basis through the endpoint frames.
  CMatrix bar_V() const;
  CMatrix bar_V_rounded(int bits) const;
  CMatrix to_computational(const CMatrix& eigen_form) const;

 private:
  Eigen::Index dim_;
  int r_;
  double T_;
  OneJumpForm form_;
  double zero_tol_;
  int d_ = 0;
  EigenPath path_;
  std::vector<CMatrix> beta_;  // beta_[l](j, k)
  RVector phase_;
  std::vector<std::vector<std::vector<int>>> nbr_;  // nbr_[l][j]
};

CMatrix bar_V(const TimeDependentHamiltonian& h, double total_time, int r,
              OneJumpForm form = OneJumpForm::kCorrected);
CMatrix bar_U(const TimeDependentHamiltonian& h, double total_time, int r,
              OneJumpForm form = OneJumpForm::kCorrected);

// T exp(-i T int_0^1 H(s) ds) by Richardson-extrapolated midpoint products,
// doubling the step count until successive extrapolants differ by < tol.
// Throws InvariantViolation if 2^22 steps do not reach tol.
CMatrix reference_propagator(const TimeDependentHamiltonian& h, double total_time, double tol = 1e-9);

// ||reference_propagator - bar_U||. Requires Gamma^4 / (gamma_min^2 T^2) < 0.5.
double longtime_error(const TimeDependentHamiltonian& h, double total_time, int r,
                      OneJumpForm form = OneJumpForm::kCorrected);

// C_0 .. C_max_jumps at s = 1 in the adiabatic frame, where the propagator is
// V(1) diag(exp(-i T int lambda)) (sum_p C_p) V(0)^dagger. Nested trapezoid
// quadrature on `steps` intervals.
std::vector<CMatrix> jump_contributions(const TimeDependentHamiltonian& h, double total_time, int max_jumps,
                                        int steps);

// LCU block encoding of the rounded truncated operator. Ancilla, slowest
// first: step l in [0, r], jump count p in [0, 4), b in [0, 2^B), c1, c2 in
// [0, d_pad); the system carries a side bit ahead of j. PREP loads weights
// 1 : (r+1) d_pad^2 : (r+1) d_pad^2 on p = 0, 1, 2 (uniform in l) and
// Hadamards on b, c1, c2; the block is bar_V_rounded / subnormalization.
class LongTimeBlockEncoding : public BlockEncoding {
 public:
  LongTimeBlockEncoding(const LongTimeAmplitudes& amps, int bits);

  Eigen::Index system_dim() const override { return n_; }
  Eigen::Index total_dim() const override { return 2 * n_ * anc_; }
  double subnormalization() const override;
  int ancilla_qubits() const override;
  Eigen::Index embed(Eigen::Index j) const override { return j * anc_; }
  QueryCounter sel_budget() const override { return budget_; }

  int padded_d() const { return d_pad_; }
  int bits() const { return bits_; }

 protected:
  void apply_impl(Eigen::Ref<CVector> state, bool adjoint) const override;

 private:
  void build_select(const LongTimeAmplitudes& amps);
  void prepare(CVector& v) const;

  Eigen::Index n_;
  int r_;
  int bits_;
  int d_pad_;
  Eigen::Index low_;  // 2^B d_pad^2
  Eigen::Index anc_;
  RVector prep_;      // PREP column over (l, p)
  std::vector<std::int32_t> target_;
  std::vector<cplx> phase_;
  QueryCounter budget_;
};

// Per-SEL oracle budget of the long-time register plan.
QueryCounter long_select_budget();

}  // namespace pathsim
