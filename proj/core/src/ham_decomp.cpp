#include "pathsim/ham_decomp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <string>

#include "pathsim/errors.hpp"
#include "pathsim/trotter.hpp"

namespace pathsim {
namespace {

constexpr const char* kModule = "ham_decomp";

int log2_exact(Eigen::Index dim) {
  int n = 0;
  while ((Eigen::Index{1} << n) < dim) ++n;
  return (Eigen::Index{1} << n) == dim ? n : -1;
}

// Eigenvector of one Pauli letter: bit 0 selects the +1 eigenvector.
void letter_vector(char p, int bit, cplx& a, cplx& b) {
  const double h = 1.0 / std::numbers::sqrt2;
  switch (p) {
    case 'I':
    case 'Z':
      a = bit == 0 ? 1.0 : 0.0;
      b = bit == 0 ? 0.0 : 1.0;
      return;
    case 'X':
      a = h;
      b = bit == 0 ? h : -h;
      return;
    case 'Y':
      a = h;
      b = bit == 0 ? cplx(0.0, h) : cplx(0.0, -h);
      return;
    default:
      throw ContractError(kModule, std::string("unknown Pauli letter '") + p + "'");
  }
}

EigenSystem pauli_product_eigensystem(const PauliTerm& term) {
  const int n = static_cast<int>(term.word.size());
  const Eigen::Index dim = Eigen::Index{1} << n;
  EigenSystem es{RVector(dim), CMatrix(dim, dim)};
  for (Eigen::Index idx = 0; idx < dim; ++idx) {
    CVector v = CVector::Ones(1);
    double sign = 1.0;
    for (int k = 0; k < n; ++k) {
      const int bit = static_cast<int>((idx >> (n - 1 - k)) & 1);
      const char p = term.word[static_cast<std::size_t>(k)];
      if (p != 'I' && bit == 1) sign = -sign;
      cplx a, b;
      letter_vector(p, bit, a, b);
      CVector next(v.size() * 2);
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        next(2 * i) = v(i) * a;
        next(2 * i + 1) = v(i) * b;
      }
      v = next;
    }
    es.values(idx) = term.coeff * sign;
    es.vectors.col(idx) = v;
  }
  return es;
}

}  // namespace

void HamiltonianDecomposition::check_terms(const std::vector<CMatrix>& terms, int& n) {
  if (terms.empty()) throw ContractError(kModule, "decomposition needs at least one term");
  const Eigen::Index dim = terms[0].rows();
  n = log2_exact(dim);
  if (n < 1) throw ContractError(kModule, "term dimension must be a power of two >= 2, got " + std::to_string(dim));
  if (dim > kMaxDim) throw CapExceeded(kModule, "dimension " + std::to_string(dim) + " exceeds cap");
  for (std::size_t l = 0; l < terms.size(); ++l) {
    const CMatrix& h = terms[l];
    if (h.rows() != dim || h.cols() != dim) {
      throw ContractError(kModule, "term " + std::to_string(l) + " has shape " + std::to_string(h.rows()) + "x" +
                                       std::to_string(h.cols()) + ", expected " + std::to_string(dim) + "x" +
                                       std::to_string(dim));
    }
  }
  const CMatrix& h0 = terms[0];
  for (Eigen::Index j = 0; j < dim; ++j) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (i != j && std::abs(h0(i, j)) > 1e-12) {
        throw ContractError(kModule, "term 0 is not diagonal: entry (" + std::to_string(i) + ", " + std::to_string(j) +
                                         ") has magnitude " + std::to_string(std::abs(h0(i, j))));
      }
    }
  }
}

HamiltonianDecomposition HamiltonianDecomposition::build(std::vector<CMatrix> terms, double zero_tol) {
  if (!(zero_tol >= 0.0)) throw ContractError(kModule, "zero_tol must be non-negative");
  HamiltonianDecomposition out;
  check_terms(terms, out.n_);
  out.zero_tol_ = zero_tol;
  out.eigen_.reserve(terms.size());
  for (const CMatrix& h : terms) out.eigen_.push_back(hermitian_eig(h));
  out.terms_ = std::move(terms);
  return out;
}

HamiltonianDecomposition HamiltonianDecomposition::build_pauli(const std::vector<PauliTerm>& terms,
                                                               BasisConvention basis, double zero_tol) {
  std::vector<CMatrix> mats;
  mats.reserve(terms.size());
  for (const PauliTerm& t : terms) mats.push_back(t.coeff * pauli_string(t.word));
  if (basis == BasisConvention::kSorted) return build(std::move(mats), zero_tol);

  if (!(zero_tol >= 0.0)) throw ContractError(kModule, "zero_tol must be non-negative");
  HamiltonianDecomposition out;
  check_terms(mats, out.n_);
  out.zero_tol_ = zero_tol;
  out.basis_ = basis;
  for (const PauliTerm& t : terms) out.eigen_.push_back(pauli_product_eigensystem(t));
  out.terms_ = std::move(mats);
  return out;
}

CMatrix HamiltonianDecomposition::hamiltonian() const {
  CMatrix h = CMatrix::Zero(dim(), dim());
  for (const CMatrix& t : terms_) h += t;
  return h;
}

CMatrix HamiltonianDecomposition::overlap(int from, int to) const {
  return eigensystem(to).vectors.adjoint() * eigensystem(from).vectors;
}

int PartnerTable::partner(int b, int j, int p) const {
  const auto& lists = b == 0 ? forward : backward;
  return lists.at(static_cast<std::size_t>(j)).at(static_cast<std::size_t>(p));
}

bool PartnerTable::genuine(int b, int j, int p) const {
  const auto& counts = b == 0 ? forward_genuine : backward_genuine;
  return p < counts.at(static_cast<std::size_t>(j));
}

int max_degree(const CMatrix& weights, double zero_tol) {
  const auto nz = (weights.cwiseAbs().array() > zero_tol).cast<int>();
  return std::max(nz.rowwise().sum().maxCoeff(), nz.colwise().sum().maxCoeff());
}

PartnerTable make_partner_table(const CMatrix& weights, int degree, double zero_tol) {
  const int n = static_cast<int>(weights.cols());
  if (weights.rows() != n) throw ContractError(kModule, "partner table needs a square weight matrix");
  if (degree < max_degree(weights, zero_tol) || degree > n) {
    throw ContractError(kModule, "degree " + std::to_string(degree) + " outside [max row/column count, dimension]");
  }
  PartnerTable t;
  t.weights = weights;
  t.degree = degree;
  t.forward.assign(static_cast<std::size_t>(n), {});
  t.backward.assign(static_cast<std::size_t>(n), {});
  std::vector<std::set<int>> fwd_set(static_cast<std::size_t>(n)), bwd_set(static_cast<std::size_t>(n));

  for (int j = 0; j < n; ++j) {
    for (int q = 0; q < n; ++q) {
      if (std::abs(weights(q, j)) > zero_tol) {
        t.forward[j].push_back(q);
        t.backward[q].push_back(j);
        fwd_set[j].insert(q);
        bwd_set[q].insert(j);
      }
    }
  }
  t.forward_genuine.resize(static_cast<std::size_t>(n));
  t.backward_genuine.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    t.forward_genuine[j] = static_cast<int>(t.forward[j].size());
    t.backward_genuine[j] = static_cast<int>(t.backward[j].size());
  }

  // Reciprocal padding: pair j with the smallest free q whose list has room.
  for (int j = 0; j < n; ++j) {
    for (int q = 0; q < n && static_cast<int>(t.forward[j].size()) < degree; ++q) {
      if (fwd_set[j].count(q) || static_cast<int>(t.backward[q].size()) >= degree) continue;
      t.forward[j].push_back(q);
      t.backward[q].push_back(j);
      fwd_set[j].insert(q);
      bwd_set[q].insert(j);
    }
  }
  // One-sided padding for whatever is left.
  auto fill = [&](std::vector<std::vector<int>>& lists, std::vector<std::set<int>>& sets) {
    for (int j = 0; j < n; ++j) {
      for (int q = 0; q < n && static_cast<int>(lists[j].size()) < degree; ++q) {
        if (sets[j].count(q)) continue;
        lists[j].push_back(q);
        sets[j].insert(q);
        t.reciprocal = false;
      }
    }
  };
  fill(t.forward, fwd_set);
  fill(t.backward, bwd_set);
  return t;
}

OverlapTable::OverlapTable(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule) {
  if (schedule.num_terms != decomp.num_terms()) {
    throw ContractError(kModule, "schedule has " + std::to_string(schedule.num_terms) +
                                     " terms but decomposition has " + std::to_string(decomp.num_terms()));
  }
  const int steps = schedule.M();
  step_pair_.reserve(static_cast<std::size_t>(steps));
  for (int m = 0; m < steps; ++m) {
    const int from = schedule.factors[m].term;
    const int to = m + 1 < steps ? schedule.factors[m + 1].term : from;
    step_pair_.emplace_back(from, to);
  }
  std::map<std::pair<int, int>, CMatrix> overlaps;
  d_ = 1;
  for (const auto& key : step_pair_) {
    if (overlaps.count(key)) continue;
    CMatrix ov = decomp.overlap(key.first, key.second);
    d_ = std::max(d_, max_degree(ov, decomp.zero_tol()));
    overlaps.emplace(key, std::move(ov));
  }
  for (auto& [key, ov] : overlaps) tables_.emplace(key, make_partner_table(ov, d_, decomp.zero_tol()));
}

std::pair<int, int> OverlapTable::terms_at(int m) const {
  if (m < 0 || m >= steps()) throw ContractError(kModule, "step index " + std::to_string(m) + " out of range");
  return step_pair_[static_cast<std::size_t>(m)];
}

const PartnerTable& OverlapTable::table(int m) const { return tables_.at(terms_at(m)); }

int OverlapTable::f_ind(int m, int b, int j, int p) const {
  if (p < 0 || p >= d_) {
    throw ContractError(kModule, "partner slot p=" + std::to_string(p) + " must lie in [0, " + std::to_string(d_) + ")");
  }
  if (b != 0 && b != 1) throw ContractError(kModule, "side b must be 0 or 1");
  return table(m).partner(b, j, p);
}

cplx OverlapTable::overlap(int m, int j, int q) const { return table(m).weights(q, j); }

int sparsity(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule) {
  return OverlapTable(decomp, schedule).d();
}

std::uint64_t encode_magnitude(double x, int bits) {
  if (bits < 1 || bits > 40) throw ContractError(kModule, "bit width must lie in [1, 40]");
  if (!std::isfinite(x)) throw ContractError(kModule, "cannot encode a non-finite magnitude");
  const double top = std::ldexp(1.0, bits) - 1.0;
  const double v = std::nearbyint(std::ldexp(x, bits));
  return static_cast<std::uint64_t>(std::clamp(v, 0.0, top));
}

OracleSuite::OracleSuite(const HamiltonianDecomposition& decomp, const TrotterSchedule& schedule, int bits)
    : decomp_(&decomp), table_(decomp, schedule), bits_(bits), dim_(decomp.dim()) {
  if (bits < 1 || bits > 40) throw ContractError(kModule, "bit width must lie in [1, 40]");
  step_time_.reserve(schedule.factors.size());
  for (const auto& f : schedule.factors) step_time_.push_back(f.weight * schedule.t / schedule.r);
}

int OracleSuite::ind(int m, int b, int j, int p) const {
  counter_.add(Oracle::kIndex);
  return table_.f_ind(m, b, j, p);
}

bool OracleSuite::color_member(int m, int b, int j, int c1, int c2) const {
  counter_.add(Oracle::kIndex, 8);
  if (c1 >= d() || c2 >= d()) return false;
  const int cb = b == 0 ? c1 : c2;
  const int co = b == 0 ? c2 : c1;
  const int q = table_.f_ind(m, b, j, cb);
  return table_.f_ind(m, 1 - b, q, co) == j;
}

std::uint64_t OracleSuite::im(int m, int j, int q) const {
  counter_.add(Oracle::kMagnitude);
  return encode_magnitude(std::abs(overlap(m, j, q)), bits_);
}

cplx OracleSuite::ip(int m, int j, int q) const {
  counter_.add(Oracle::kPhase);
  const cplx ov = overlap(m, j, q);
  return ov != 0.0 ? ov / std::abs(ov) : cplx(1.0, 0.0);
}

cplx OracleSuite::ep(int m, int j) const {
  counter_.add(Oracle::kEigenPhase);
  return std::polar(1.0, -eigenvalue(m, j) * step_time(m));
}

double OracleSuite::eigenvalue(int m, int j) const { return decomp_->eigensystem(term_at(m)).values(j); }

double OracleSuite::zero_tol() const { return decomp_->zero_tol(); }

cplx OracleSuite::overlap(int m, int j, int q) const {
  const cplx ov = table_.overlap(m, j, q);
  return std::abs(ov) > decomp_->zero_tol() ? ov : cplx(0.0, 0.0);
}

namespace {

void require_cap(Eigen::Index size, const char* what) {
  if (size > kMaxDim) {
    throw CapExceeded(kModule, std::string(what) + ": register dimension " + std::to_string(size) + " exceeds cap");
  }
}

int padded(int d) {
  int p = 1;
  while (p < d) p *= 2;
  return p;
}

}  // namespace

CMatrix OracleSuite::ind_matrix(int m) const {
  const Eigen::Index n = dim_;
  const int dp = padded(d());
  const Eigen::Index size = 2 * n * dp * n;
  require_cap(size, "ind_matrix");
  CMatrix out = CMatrix::Zero(size, size);
  for (int b = 0; b < 2; ++b) {
    for (Eigen::Index j = 0; j < n; ++j) {
      for (int p = 0; p < dp; ++p) {
        const Eigen::Index f = p < d() ? table_.f_ind(m, b, static_cast<int>(j), p) : 0;
        for (Eigen::Index c = 0; c < n; ++c) {
          const Eigen::Index base = ((b * n + j) * dp + p) * n;
          out(base + (c ^ f), base + c) = 1.0;
        }
      }
    }
  }
  return out;
}

CMatrix OracleSuite::im_matrix(int m) const {
  const Eigen::Index n = dim_;
  const Eigen::Index levels = Eigen::Index{1} << bits_;
  const Eigen::Index size = n * n * levels;
  require_cap(size, "im_matrix");
  CMatrix out = CMatrix::Zero(size, size);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index q = 0; q < n; ++q) {
      const double mag = std::abs(table_.overlap(m, static_cast<int>(j), static_cast<int>(q)));
      const auto v = static_cast<Eigen::Index>(encode_magnitude(mag > decomp_->zero_tol() ? mag : 0.0, bits_));
      for (Eigen::Index c = 0; c < levels; ++c) {
        const Eigen::Index base = (j * n + q) * levels;
        out(base + (c ^ v), base + c) = 1.0;
      }
    }
  }
  return out;
}

CMatrix OracleSuite::ip_matrix(int m) const {
  const Eigen::Index n = dim_;
  require_cap(n * n, "ip_matrix");
  CMatrix out = CMatrix::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index q = 0; q < n; ++q) {
      const cplx ov = table_.overlap(m, static_cast<int>(j), static_cast<int>(q));
      const double mag = std::abs(ov);
      out(j * n + q, j * n + q) = mag > decomp_->zero_tol() ? ov / mag : cplx(1.0, 0.0);
    }
  }
  return out;
}

CMatrix OracleSuite::ep_matrix(int m) const {
  CMatrix out = CMatrix::Zero(dim_, dim_);
  for (Eigen::Index j = 0; j < dim_; ++j) {
    out(j, j) = std::polar(1.0, -eigenvalue(m, static_cast<int>(j)) * step_time(m));
  }
  return out;
}

}  // namespace pathsim
