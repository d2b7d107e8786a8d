#include "pathsim/short_path.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <tuple>

#include <Eigen/SVD>

#include "detail.hpp"
#include "pathsim/errors.hpp"

namespace pathsim {
namespace {

constexpr const char* kModule = "short_path";
using detail::hadamard_rows;
using detail::log2_int;
using detail::next_pow2;
using detail::sign_of;

// Largest state vector handled by the block encodings (flag included).
constexpr Eigen::Index kMaxStateDim = Eigen::Index{1} << 22;

// Adds weight * (flip ? X (x) I : I) U_{m,b,c1,c2} into out.
void accumulate_signed_permutation(const OracleSuite& o, int m, int b, int c1, int c2, cplx weight, bool flip,
                                   CMatrix& out) {
  const int n = static_cast<int>(o.dim());
  const int d = o.d();
  const OverlapTable& tab = o.table();
  const double sb = sign_of(b);
  auto row = [&](int flag, int j) { return (flip ? 1 - flag : flag) * n + j; };
  auto member = [&](int side, int j) {
    if (c1 >= d || c2 >= d) return false;
    const int q = tab.f_ind(m, side, j, side == 0 ? c1 : c2);
    return tab.f_ind(m, 1 - side, q, side == 0 ? c2 : c1) == j;
  };
  for (int j = 0; j < n; ++j) {
    if (member(0, j)) {
      const int q = tab.f_ind(m, 0, j, c1);
      const cplx ov = o.overlap(m, j, q);
      const auto v = encode_magnitude(std::abs(ov), o.bits());
      const double g = static_cast<std::uint64_t>(b) < v ? 1.0 : sb;
      const cplx ph = (ov != 0.0 ? ov / std::abs(ov) : cplx(1.0, 0.0)) *
                      std::polar(1.0, -o.eigenvalue(m, j) * o.step_time(m));
      out(row(1, q), j) += weight * g * ph;
      out(row(0, j), n + q) += weight * sb;
    } else {
      out(row(0, j), j) += weight * sb;
    }
  }
  for (int q = 0; q < n; ++q) {
    if (!member(1, q)) out(row(1, q), n + q) += weight * sb;
  }
}

struct SelectOutcome {
  int side;
  int j;
  cplx amp;
};

// One basis-state pass through the SEL register plan. Registers: r1 side,
// r2 system, r3 b, r4 c1, r5 c2, r6 membership, r7 partner, r8 magnitude,
// r9 comparison. Controlled oracles are invoked (and counted) whether or not
// their controls fire.
SelectOutcome run_select(const OracleSuite& o, int m, int side, int j, int b, int c1, int c2) {
  QueryCounter& qc = o.counter();
  int r1 = side, r2 = j, r6 = 0, r7 = 0, r9 = 0;
  std::uint64_t r8 = 0;
  cplx amp = 1.0;
  auto slot = [&](int s) { return s == 0 ? c1 : c2; };
  const auto ub = static_cast<std::uint64_t>(b);

  r6 ^= o.color_member(m, r1, r2, c1, c2) ? 1 : 0;  // O_C
  if (r6) {
    r7 ^= o.ind(m, r1, r2, slot(r1));
  } else {
    qc.add(Oracle::kIndex);
  }
  if (r6 && r1 == 0) {
    r8 ^= o.im(m, r2, r7);
  } else {
    qc.add(Oracle::kMagnitude);
  }
  r9 ^= (r8 <= ub) ? 1 : 0;
  if (r6 && r1 == 0) {
    amp *= o.ip(m, r2, r7);
    amp *= o.ep(m, r2);
  } else {
    qc.add(Oracle::kPhase);
    qc.add(Oracle::kEigenPhase);
  }
  if (r6) {
    std::swap(r2, r7);
    r1 ^= 1;
  }
  if (r9) amp *= sign_of(b);
  r9 ^= (r8 <= ub) ? 1 : 0;
  if (r6 && r1 == 1) {
    r8 ^= o.im(m, r7, r2);
  } else {
    qc.add(Oracle::kMagnitude);
  }
  if (r6) {
    r7 ^= o.ind(m, r1, r2, slot(r1));
  } else {
    qc.add(Oracle::kIndex);
  }
  r6 ^= o.color_member(m, r1, r2, c1, c2) ? 1 : 0;  // O_C uncompute
  r1 ^= 1;
  if (r6 != 0 || r7 != 0 || r8 != 0 || r9 != 0) {
    throw InvariantViolation(kModule, "SEL left work registers dirty at step " + std::to_string(m));
  }
  return {r1, r2, amp};
}

}  // namespace

CMatrix path_sum_propagator(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule) {
  const int M = schedule.M();
  const int n = decomp.n();
  if (static_cast<long long>(n) * M > 20) {
    throw CapExceeded(kModule, "path sum over (2^" + std::to_string(n) + ")^" + std::to_string(M) +
                                   " paths exceeds cap 2^20");
  }
  if (schedule.num_terms != decomp.num_terms()) {
    throw ContractError(kModule, "schedule and decomposition disagree on the number of terms");
  }
  const int N = static_cast<int>(decomp.dim());
  std::vector<CMatrix> ov(static_cast<std::size_t>(M));
  std::vector<CVector> ph(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    const int l = schedule.factors[m].term;
    if (m + 1 < M) ov[m] = decomp.overlap(l, schedule.factors[m + 1].term);
    ph[m] = (decomp.eigensystem(l).values.cast<cplx>() * cplx(0.0, -schedule.step_time(m))).array().exp();
  }
  CMatrix kernel = CMatrix::Zero(N, N);
  std::vector<int> path(static_cast<std::size_t>(M), 0);
  const long long total = 1LL << (n * M);
  for (long long idx = 0; idx < total; ++idx) {
    long long rest = idx;
    for (int m = 0; m < M; ++m) {
      path[m] = static_cast<int>(rest % N);
      rest /= N;
    }
    cplx amp = ph[0](path[0]);
    for (int m = 1; m < M && amp != 0.0; ++m) amp *= ov[m - 1](path[m], path[m - 1]) * ph[m](path[m]);
    kernel(path[M - 1], path[0]) += amp;
  }
  const CMatrix& first = decomp.eigensystem(schedule.factors.front().term).vectors;
  const CMatrix& last = decomp.eigensystem(schedule.factors.back().term).vectors;
  return last * kernel * first.adjoint();
}

CMatrix transition_operator(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule, int m) {
  if (m < 0 || m >= schedule.M()) throw ContractError(kModule, "step index out of range");
  const int from = schedule.factors[m].term;
  const int to = m + 1 < schedule.M() ? schedule.factors[m + 1].term : from;
  const CVector ph = (decomp.eigensystem(from).values.cast<cplx>() * cplx(0.0, -schedule.step_time(m))).array().exp();
  if (to == from) return ph.asDiagonal();
  return decomp.overlap(from, to) * ph.asDiagonal();
}

CMatrix compose_transitions(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule,
                            const std::vector<CMatrix>& steps) {
  if (static_cast<int>(steps.size()) != schedule.M()) throw ContractError(kModule, "one operator per step required");
  CMatrix acc = CMatrix::Identity(decomp.dim(), decomp.dim());
  for (const CMatrix& a : steps) acc = a * acc;
  const CMatrix& first = decomp.eigensystem(schedule.factors.front().term).vectors;
  const CMatrix& last = decomp.eigensystem(schedule.factors.back().term).vectors;
  return last * acc * first.adjoint();
}

bool ColoredTransitionGraph::member(int b, int j, int c1, int c2) const {
  if (c1 >= d || c2 >= d) return false;
  const int e = slot_edge[b][j][b == 0 ? c1 : c2];
  if (e < 0) return false;
  const ColoredEdge& edge = edges[static_cast<std::size_t>(e)];
  return edge.c1 == c1 && edge.c2 == c2;
}

void ColoredTransitionGraph::validate() const {
  std::vector<std::map<std::pair<int, int>, int>> seen(2 * static_cast<std::size_t>(dim));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const ColoredEdge& edge = edges[e];
    const auto colour = std::make_pair(edge.c1, edge.c2);
    for (int v : {edge.j, dim + edge.q}) {
      auto [it, fresh] = seen[static_cast<std::size_t>(v)].emplace(colour, static_cast<int>(e));
      if (!fresh) {
        throw InvariantViolation(kModule, "colour (" + std::to_string(edge.c1) + ", " + std::to_string(edge.c2) +
                                              ") used twice at one vertex in step " + std::to_string(m));
      }
    }
  }
}

ColoredTransitionGraph color_graph(const OverlapTable& table, int m) {
  const PartnerTable& pt = table.table(m);
  ColoredTransitionGraph g;
  g.m = m;
  g.dim = static_cast<int>(pt.forward.size());
  g.d = table.d();
  g.slot_edge.assign(2, std::vector<std::vector<int>>(static_cast<std::size_t>(g.dim),
                                                      std::vector<int>(static_cast<std::size_t>(g.d), -1)));
  for (int j = 0; j < g.dim; ++j) {
    for (int c1 = 0; c1 < g.d; ++c1) {
      const int q = pt.partner(0, j, c1);
      int c2 = -1;
      for (int c = 0; c < g.d; ++c) {
        if (pt.partner(1, q, c) == j) c2 = c;
      }
      const bool genuine = pt.genuine(0, j, c1);
      if (c2 < 0) {
        if (genuine) {
          throw InvariantViolation(kModule, "genuine partner " + std::to_string(q) + " of state " + std::to_string(j) +
                                                " lacks a back-reference in step " + std::to_string(m));
        }
        continue;
      }
      const int e = static_cast<int>(g.edges.size());
      g.edges.push_back({j, q, c1, c2, genuine});
      g.slot_edge[0][j][c1] = e;
      g.slot_edge[1][q][c2] = e;
    }
  }
  g.validate();
  return g;
}

ColoredTransitionGraph color_graph(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule, int m) {
  return color_graph(OverlapTable(decomp, schedule), m);
}

CMatrix signed_permutation(const OracleSuite& oracles, int m, int b, int c1, int c2) {
  if (b < 0 || b >= (1 << oracles.bits())) throw ContractError(kModule, "b must lie in [0, 2^B)");
  const Eigen::Index n = oracles.dim();
  if (2 * n > kMaxDim) throw CapExceeded(kModule, "signed_permutation: dimension exceeds cap");
  CMatrix u = CMatrix::Zero(2 * n, 2 * n);
  accumulate_signed_permutation(oracles, m, b, c1, c2, 1.0, false, u);
  return u;
}

CMatrix signed_permutation(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule, int m, int b,
                           int c1, int c2, int bits) {
  return signed_permutation(OracleSuite(decomp, schedule, bits), m, b, c1, c2);
}

CMatrix alternating_sum(const OracleSuite& oracles, int m) {
  const int d = oracles.d();
  const long long terms = static_cast<long long>(d) * d << oracles.bits();
  if (terms > (1LL << 20)) throw CapExceeded(kModule, "alternating_sum: d^2 2^B exceeds 2^20");
  const Eigen::Index n = oracles.dim();
  if (2 * n > kMaxDim) throw CapExceeded(kModule, "alternating_sum: dimension exceeds cap");
  CMatrix out = CMatrix::Zero(2 * n, 2 * n);
  const int levels = 1 << oracles.bits();
  const double w = 1.0 / levels;
  for (int b = 0; b < levels; ++b) {
    for (int c1 = 0; c1 < d; ++c1) {
      for (int c2 = 0; c2 < d; ++c2) accumulate_signed_permutation(oracles, m, b, c1, c2, w, true, out);
    }
  }
  return out;
}

CMatrix alternating_sum(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule, int m, int bits) {
  return alternating_sum(OracleSuite(decomp, schedule, bits), m);
}

CMatrix flag_zero_block(const CMatrix& op) {
  if (op.rows() % 2 != 0 || op.rows() != op.cols()) throw ContractError(kModule, "flag operator must be square, even");
  const Eigen::Index n = op.rows() / 2;
  return op.topLeftCorner(n, n);
}

void BlockEncoding::apply(Eigen::Ref<CVector> state) const {
  if (state.size() != total_dim()) throw ContractError(kModule, "state size does not match the block encoding");
  apply_impl(state, false);
  counter_ += sel_budget();
}

void BlockEncoding::apply_adjoint(Eigen::Ref<CVector> state) const {
  if (state.size() != total_dim()) throw ContractError(kModule, "state size does not match the block encoding");
  apply_impl(state, true);
  counter_ += sel_budget();
}

CMatrix BlockEncoding::block() const {
  const Eigen::Index n = system_dim();
  CMatrix out(n, n);
  CVector v(total_dim());
  for (Eigen::Index j = 0; j < n; ++j) {
    v.setZero();
    v(embed(j)) = 1.0;
    apply(v);
    for (Eigen::Index i = 0; i < n; ++i) out(i, j) = v(embed(i));
  }
  return out;
}

CMatrix BlockEncoding::dense() const {
  const Eigen::Index dim = total_dim();
  if (dim > kMaxDim) throw CapExceeded(kModule, "dense block encoding of dimension " + std::to_string(dim));
  CMatrix out(dim, dim);
  CVector v(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    v.setZero();
    v(j) = 1.0;
    apply(v);
    out.col(j) = v;
  }
  return out;
}

QueryCounter step_select_budget() {
  QueryCounter q;
  q.add(Oracle::kIndex, 18);
  q.add(Oracle::kMagnitude, 2);
  q.add(Oracle::kPhase, 1);
  q.add(Oracle::kEigenPhase, 1);
  return q;
}

StepBlockEncoding::StepBlockEncoding(const OracleSuite& oracles, int m)
    : n_(oracles.dim()), bits_(oracles.bits()), d_pad_(next_pow2(oracles.d())), budget_(step_select_budget()) {
  if (m < 0 || m >= oracles.steps()) throw ContractError(kModule, "step index out of range");
  if (bits_ > 20) throw CapExceeded(kModule, "bit width above 20 for a block encoding");
  anc_ = (Eigen::Index{1} << bits_) * d_pad_ * d_pad_;
  if (2 * total_dim() > kMaxStateDim) {
    throw CapExceeded(kModule, "block-encoding state of dimension " + std::to_string(total_dim()) + " exceeds cap");
  }
  build_select(oracles, m);
}

int StepBlockEncoding::ancilla_qubits() const { return 1 + bits_ + 2 * log2_int(d_pad_); }

void StepBlockEncoding::build_select(const OracleSuite& oracles, int m) {
  const Eigen::Index total = total_dim();
  target_.assign(static_cast<std::size_t>(total), -1);
  phase_.assign(static_cast<std::size_t>(total), cplx(0.0, 0.0));
  std::vector<char> hit(static_cast<std::size_t>(total), 0);
  const int levels = 1 << bits_;
  for (int side = 0; side < 2; ++side) {
    for (Eigen::Index j = 0; j < n_; ++j) {
      for (int b = 0; b < levels; ++b) {
        for (int c1 = 0; c1 < d_pad_; ++c1) {
          for (int c2 = 0; c2 < d_pad_; ++c2) {
            const QueryCounter before = oracles.counter();
            const SelectOutcome out = run_select(oracles, m, side, static_cast<int>(j), b, c1, c2);
            if (!(oracles.counter() - before == budget_)) {
              throw InvariantViolation(kModule, "SEL pass used a query count different from its budget");
            }
            const Eigen::Index a = (static_cast<Eigen::Index>(b) * d_pad_ + c1) * d_pad_ + c2;
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

void StepBlockEncoding::apply_impl(Eigen::Ref<CVector> state, bool adjoint) const {
  CVector v = state;
  hadamard_rows(v, anc_);
  CVector w(v.size());
  const std::size_t total = target_.size();
  if (!adjoint) {
    for (std::size_t i = 0; i < total; ++i) w(target_[i]) = phase_[i] * v(static_cast<Eigen::Index>(i));
  } else {
    for (std::size_t i = 0; i < total; ++i) w(static_cast<Eigen::Index>(i)) = std::conj(phase_[i]) * v(target_[i]);
  }
  hadamard_rows(w, anc_);
  state = w;
}

int roaa_rounds(double subnormalization) {
  if (!(subnormalization >= 1.0)) throw ContractError(kModule, "subnormalization must be >= 1");
  int p = 0;
  while (std::sin(std::numbers::pi / (2.0 * (2 * p + 1))) > 1.0 / subnormalization + 1e-15) {
    ++p;
    if (p > 1000000) throw CapExceeded(kModule, "amplification rounds exceed cap");
  }
  return p;
}

AmplifiedBlock roaa(const BlockEncoding& be) {
  AmplifiedBlock out;
  const double a = be.subnormalization();
  out.rounds = roaa_rounds(a);
  out.padded_subnormalization = 1.0 / std::sin(std::numbers::pi / (2.0 * (2 * out.rounds + 1)));
  out.w_calls = 2 * out.rounds + 1;
  const double c = std::min(1.0, a / out.padded_subnormalization);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));

  const Eigen::Index T = be.total_dim();
  const Eigen::Index n = be.system_dim();
  CVector v(2 * T);
  auto rotate = [&](double sn) {
    for (Eigen::Index i = 0; i < T; ++i) {
      const cplx x0 = v(i), x1 = v(T + i);
      v(i) = c * x0 - sn * x1;
      v(T + i) = sn * x0 + c * x1;
    }
  };
  auto w_prime = [&] {
    rotate(s);
    be.apply(v.head(T));
  };
  auto w_prime_adj = [&] {
    be.apply_adjoint(v.head(T));
    rotate(-s);
  };
  auto reflect = [&] {
    for (Eigen::Index i = 0; i < n; ++i) v(be.embed(i)) = -v(be.embed(i));
  };

  out.block.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const QueryCounter before = be.counter();
    v.setZero();
    v(be.embed(j)) = 1.0;
    w_prime();
    for (int round = 0; round < out.rounds; ++round) {
      reflect();
      w_prime_adj();
      reflect();
      w_prime();
      v = -v;
    }
    for (Eigen::Index i = 0; i < n; ++i) out.block(i, j) = v(be.embed(i));
    if (j == 0) out.queries = be.counter() - before;
  }
  Eigen::JacobiSVD<CMatrix> svd(out.block);
  const double smin = svd.singularValues()(n - 1);
  out.min_success_weight = smin * smin;
  return out;
}

SimulationReport simulate(const HamiltonianDecomposition& decomp, int k, int r, double t, int bits) {
  const TrotterSchedule schedule = make_schedule(decomp.num_terms(), k, r, t);
  const OracleSuite oracles(decomp, schedule, bits);
  SimulationReport rep;
  rep.d = oracles.d();
  rep.M = schedule.M();

  std::map<std::tuple<int, int, double>, AmplifiedBlock> cache;
  std::vector<CMatrix> steps;
  steps.reserve(static_cast<std::size_t>(rep.M));
  for (int m = 0; m < rep.M; ++m) {
    const auto [from, to] = oracles.table().terms_at(m);
    const auto key = std::make_tuple(from, to, schedule.step_time(m));
    auto it = cache.find(key);
    if (it == cache.end()) {
      const StepBlockEncoding be(oracles, m);
      it = cache.emplace(key, roaa(be)).first;
    }
    steps.push_back(it->second.block);
    rep.queries += it->second.queries;
    rep.rounds = std::max(rep.rounds, it->second.rounds);
  }
  rep.unitary = compose_transitions(decomp, schedule, steps);
  const CMatrix exact = exp_unitary(decomp.hamiltonian(), t);
  rep.error = spectral_norm(rep.unitary - exact);
  rep.trotter_error = spectral_norm(trotter_unitary(decomp, schedule) - exact);
  rep.rounding_term = decomp.num_terms() * std::pow(5.0, k) * r * rep.d * rep.d / std::ldexp(1.0, bits);
  rep.trotter_term = error_bound(decomp, k, t, r);
  rep.bound = rep.rounding_term + rep.trotter_term;
  return rep;
}

}  // namespace pathsim
