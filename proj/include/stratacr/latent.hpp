#ifndef STRATACR_LATENT_HPP
#define STRATACR_LATENT_HPP

#include <cassert>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "stratacr/data.hpp"
#include "stratacr/model.hpp"
#include "stratacr/rng.hpp"

namespace stratacr {

// Augmented individual-level state. Captured individuals occupy the
// first n_obs slots with z fixed to 1 and g fixed to the recorded
// stratum; only slots >= n_obs are ever resampled. Stratum counts are
// maintained incrementally.
struct AugmentedState {
  int n_obs = 0;
  std::vector<std::uint8_t> z;  // length M
  std::vector<int> g;           // length M, values in 0..S-1
  std::vector<long> N;          // per-stratum real-individual counts
  long N_T = 0;

  int M() const { return static_cast<int>(z.size()); }
  int S() const { return static_cast<int>(N.size()); }

  void set(int i, std::uint8_t z_new, int g_new) {
    if (i < n_obs) throw std::logic_error("attempt to update a captured individual");
    if (z[i]) { N[g[i]]--; N_T--; }
    z[i] = z_new;
    g[i] = g_new;
    if (z_new) { N[g_new]++; N_T++; }
  }

  // Full recount, used for the periodic consistency assertion and by tests.
  std::pair<std::vector<long>, long> recount() const {
    std::vector<long> n(N.size(), 0);
    long t = 0;
    for (std::size_t i = 0; i < z.size(); ++i)
      if (z[i]) { n[g[i]]++; t++; }
    return {n, t};
  }

  void check_counts() const {
    auto [n, t] = recount();
    if (n != N || t != N_T) throw std::logic_error("incremental stratum counts out of sync");
  }
};

inline std::pair<std::vector<long>, long> counts(const AugmentedState& state) {
  return state.recount();
}

inline AugmentedState init_state(const EncounterData& data, const ModelSpec& spec,
                                 std::uint64_t seed) {
  if (spec.M <= data.n_individuals())
    throw std::invalid_argument("augmentation size M must exceed n_T");
  AugmentedState st;
  st.n_obs = data.n_individuals();
  st.z.assign(spec.M, 0);
  st.g.assign(spec.M, 0);
  st.N.assign(data.S, 0);
  for (int i = 0; i < st.n_obs; ++i) {
    st.z[i] = 1;
    st.g[i] = data.strata_of[i];
    st.N[st.g[i]]++;
    st.N_T++;
  }
  Rng rng(seed);
  for (int i = st.n_obs; i < spec.M; ++i) {
    st.z[i] = rng.bernoulli(0.5) ? 1 : 0;
    st.g[i] = data.S == 1 ? 0 : static_cast<int>(rng.uniform() * data.S);
    if (st.g[i] >= data.S) st.g[i] = data.S - 1;
    if (st.z[i]) { st.N[st.g[i]]++; st.N_T++; }
  }
  return st;
}

// Exact joint full conditional of (z_i, g_i) for an uncaptured
// pseudo-individual, as a normalized 2S-vector laid out
// [z=0: s=0..S-1][z=1: s=0..S-1].
inline std::vector<double> full_conditional_zg(const AugmentedState& state, int i,
                                               const ParamState& params, const ModelSpec& spec) {
  if (i < state.n_obs)
    throw std::invalid_argument("full_conditional_zg: individual is captured data");
  std::vector<double> lam = lambda_of(params.beta, spec.design);
  CellProbs cp = cell_probs(lam, spec.abundance == Abundance::DCM ? &params.eta : nullptr);
  double p_zero = std::exp(log_prob_all_zero(params, spec));
  int S = spec.S();
  std::vector<double> w(2 * S);
  double total = 0.0;
  for (int s = 0; s < S; ++s) {
    w[s] = (1.0 - params.psi) * cp.pi[s];
    w[S + s] = params.psi * cp.pi[s] * p_zero;
    total += w[s] + w[S + s];
  }
  for (auto& v : w) v /= total;
  return w;
}

}  // namespace stratacr

#endif
