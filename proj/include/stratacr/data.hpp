#ifndef STRATACR_DATA_HPP
#define STRATACR_DATA_HPP

#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stratacr {

using Matrix = std::vector<std::vector<double>>;  // row-major, rows = strata

enum class Abundance { Poisson, DCM };
enum class Detection { M0, Mb };
enum class Constraint { DerivedPsi, FreePsi };

inline std::string to_string(Abundance a) { return a == Abundance::Poisson ? "poisson" : "dcm"; }
inline std::string to_string(Detection d) { return d == Detection::M0 ? "m0" : "mb"; }
inline std::string to_string(Constraint c) { return c == Constraint::DerivedPsi ? "derived-psi" : "free-psi"; }

// Observed capture data for S strata sampled over K occasions.
// Strata are 0-based internally (1-based in files).
struct EncounterData {
  int K = 0;
  int S = 0;
  std::vector<std::vector<std::uint8_t>> histories;  // n x K, empty in frequency-only data
  std::vector<int> freq;                             // y_i = capture count, always populated
  std::vector<int> strata_of;                        // g_i in {0..S-1}

  int n_individuals() const { return static_cast<int>(freq.size()); }

  bool has_histories() const { return !histories.empty(); }

  std::vector<int> stratum_counts() const {
    std::vector<int> n(S, 0);
    for (int g : strata_of) n[g]++;
    return n;
  }

  long total_captures() const { return std::accumulate(freq.begin(), freq.end(), 0L); }

  void validate() const {
    if (K < 1) throw std::invalid_argument("K must be >= 1");
    if (S < 1) throw std::invalid_argument("S must be >= 1");
    if (freq.size() != strata_of.size())
      throw std::invalid_argument("frequency/stratum length mismatch");
    if (has_histories() && histories.size() != freq.size())
      throw std::invalid_argument("history/frequency length mismatch");
    for (std::size_t i = 0; i < freq.size(); ++i) {
      if (freq[i] < 1 || freq[i] > K)
        throw std::invalid_argument("individual " + std::to_string(i + 1) +
                                    ": capture frequency outside 1.." + std::to_string(K));
      if (strata_of[i] < 0 || strata_of[i] >= S)
        throw std::invalid_argument("individual " + std::to_string(i + 1) +
                                    ": stratum label out of range");
      if (has_histories()) {
        if (static_cast<int>(histories[i].size()) != K)
          throw std::invalid_argument("individual " + std::to_string(i + 1) +
                                      ": history length != K");
        int y = 0;
        for (auto h : histories[i]) y += h;
        if (y != freq[i])
          throw std::invalid_argument("individual " + std::to_string(i + 1) +
                                      ": frequency does not match history row sum");
      }
    }
  }
};

struct ModelSpec {
  Abundance abundance = Abundance::Poisson;
  Detection detection = Detection::M0;
  Constraint constraint = Constraint::DerivedPsi;
  int M = 0;          // augmentation size
  Matrix design;      // S x P
  int K = 0;          // occasions, copied from data at setup

  int P() const { return design.empty() ? 0 : static_cast<int>(design[0].size()); }
  int S() const { return static_cast<int>(design.size()); }

  bool has_intercept_column() const {
    for (int j = 0; j < P(); ++j) {
      bool ones = true;
      for (const auto& row : design)
        if (row[j] != 1.0) { ones = false; break; }
      if (ones) return true;
    }
    return false;
  }

  void validate(const EncounterData& data) const {
    if (static_cast<int>(design.size()) != data.S)
      throw std::invalid_argument("design matrix rows != S");
    for (const auto& row : design)
      if (static_cast<int>(row.size()) != P())
        throw std::invalid_argument("ragged design matrix");
    if (M <= data.n_individuals())
      throw std::invalid_argument("augmentation size M must exceed n_T");
    if (constraint == Constraint::DerivedPsi && !has_intercept_column())
      throw std::invalid_argument("derived-psi constraint requires an intercept column");
    if (constraint == Constraint::FreePsi && has_intercept_column())
      throw std::invalid_argument("free-psi constraint forbids an intercept column");
    if (detection == Detection::Mb && !data.has_histories())
      throw std::invalid_argument("Mb detection requires full capture histories");
    if (abundance == Abundance::DCM && constraint != Constraint::FreePsi)
      throw std::invalid_argument("DCM abundance requires the free-psi constraint");
  }
};

// Current parameter values. Detection under M0 is the probability p
// itself; under Mb it is (alpha0, alpha1) on the logit scale.
struct ParamState {
  std::vector<double> beta;
  double p = 0.5;
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double psi = 0.5;
  std::vector<double> eta;  // DCM gamma noise, length S
  double a = 1.0;           // DCM gamma shape; rate fixed at 1
};

}  // namespace stratacr

#endif
