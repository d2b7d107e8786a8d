#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace pathsim {

// Oracles whose invocations are tallied.
enum class Oracle : int {
  kIndex,          // O_ind: p-th nonzero overlap partner
  kMagnitude,      // O_IM: B-bit overlap magnitude
  kPhase,          // O_IP: overlap phase
  kEigenPhase,     // O_EP: eigenvalue phase of one Trotter factor
  kIndexTD,        // time-dependent partner index
  kEtaMagnitude,   // one-jump amplitude magnitude
  kEtaPhase,       // one-jump amplitude phase
  kZetaMagnitude,  // two-jump amplitude magnitude
  kZetaPhase,      // two-jump amplitude phase
  kTotalPhase,     // accumulated eigenvalue phase over the whole sweep
  kGapPhase,       // accumulated gap phase over the whole sweep
  kAction,         // O_S of the Lagrangian stepper
  kFourier,        // one application of the inverse QFT
  kCount
};

std::string_view oracle_name(Oracle o);

// Per-run tally of oracle invocations. Single writer: do not share one
// counter between concurrent runs.
class QueryCounter {
 public:
  void add(Oracle o, std::uint64_t n = 1) { counts_[static_cast<int>(o)] += n; }
  std::uint64_t count(Oracle o) const { return counts_[static_cast<int>(o)]; }
  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }
  void reset() { counts_.fill(0); }

  QueryCounter& operator+=(const QueryCounter& other) {
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
  }
  // Adds `times` copies of `other`.
  void add_scaled(const QueryCounter& other, std::uint64_t times) {
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i] * times;
  }
  friend QueryCounter operator-(QueryCounter a, const QueryCounter& b) {
    for (std::size_t i = 0; i < a.counts_.size(); ++i) a.counts_[i] -= b.counts_[i];
    return a;
  }
  friend bool operator==(const QueryCounter&, const QueryCounter&) = default;

 private:
  std::array<std::uint64_t, static_cast<int>(Oracle::kCount)> counts_{};
};

inline std::string_view oracle_name(Oracle o) {
  switch (o) {
    case Oracle::kIndex: return "O_ind";
    case Oracle::kMagnitude: return "O_IM";
    case Oracle::kPhase: return "O_IP";
    case Oracle::kEigenPhase: return "O_EP";
    case Oracle::kIndexTD: return "O_ind_TD";
    case Oracle::kEtaMagnitude: return "O_eta_M";
    case Oracle::kEtaPhase: return "O_eta_P";
    case Oracle::kZetaMagnitude: return "O_zeta_M";
    case Oracle::kZetaPhase: return "O_zeta_P";
    case Oracle::kTotalPhase: return "O_TEP";
    case Oracle::kGapPhase: return "O_gamma";
    case Oracle::kAction: return "O_S";
    case Oracle::kFourier: return "QFT";
    case Oracle::kCount: break;
  }
  return "?";
}

}  // namespace pathsim
