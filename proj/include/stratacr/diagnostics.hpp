#ifndef STRATACR_DIAGNOSTICS_HPP
#define STRATACR_DIAGNOSTICS_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "stratacr/data.hpp"
#include "stratacr/latent.hpp"
#include "stratacr/model.hpp"
#include "stratacr/rng.hpp"
#include "stratacr/stats.hpp"

namespace stratacr {

// Retained posterior draws, one matrix per chain, shared column layout.
struct DrawsMatrix {
  std::vector<std::string> columns;
  std::vector<Matrix> chains;  // [chain][row][col]
  std::vector<std::string> warnings;

  int column(const std::string& name) const {
    for (std::size_t j = 0; j < columns.size(); ++j)
      if (columns[j] == name) return static_cast<int>(j);
    throw std::invalid_argument("unknown draws column: " + name);
  }

  std::vector<double> pooled(int col) const {
    std::vector<double> out;
    for (const auto& ch : chains)
      for (const auto& row : ch) out.push_back(row[col]);
    return out;
  }

  std::vector<std::vector<double>> per_chain(int col) const {
    std::vector<std::vector<double>> out(chains.size());
    for (std::size_t c = 0; c < chains.size(); ++c) {
      out[c].reserve(chains[c].size());
      for (const auto& row : chains[c]) out[c].push_back(row[col]);
    }
    return out;
  }
};

// Pearson fit statistic sum_s (n_s - n_total pi_s)^2 / (n_total pi_s).
// A degenerate replicate (n_total = 0) scores 0; the caller logs it.
inline double pearson_stat(const std::vector<long>& n, long n_total,
                           const std::vector<double>& pi) {
  if (n.size() != pi.size()) throw std::invalid_argument("pearson_stat: length mismatch");
  if (n_total == 0) return 0.0;
  double x = 0.0;
  for (std::size_t s = 0; s < n.size(); ++s) {
    if (pi[s] <= 0.0) throw std::invalid_argument("pearson_stat: pi must be strictly positive");
    double e = static_cast<double>(n_total) * pi[s];
    double d = static_cast<double>(n[s]) - e;
    x += d * d / e;
  }
  return x;
}

// Posterior-predictive capture counts: each real individual is captured
// in the replicate iff its simulated K-occasion history is nonzero.
// Whether an individual is ever captured depends only on the
// never-captured detection probability, so the per-stratum count is an
// exact Binom(N_s, 1 - Pr(all-zero)) draw.
inline std::pair<std::vector<long>, long> posterior_predictive_counts(
    const AugmentedState& state, const ParamState& params, const ModelSpec& spec, Rng& rng) {
  double p_capture = -std::expm1(log_prob_all_zero(params, spec));
  std::vector<long> n_sim(state.S(), 0);
  long total = 0;
  for (int s = 0; s < state.S(); ++s) {
    n_sim[s] = rng.binomial(state.N[s], p_capture);
    total += n_sim[s];
  }
  return {n_sim, total};
}

struct GofResult {
  std::vector<double> x_obs;
  std::vector<double> x_sim;
};

inline double bayesian_p(const GofResult& gof) {
  if (gof.x_obs.empty() || gof.x_obs.size() != gof.x_sim.size())
    throw std::invalid_argument("bayesian_p: need matched, nonempty statistic draws");
  double hits = 0.0;
  for (std::size_t m = 0; m < gof.x_obs.size(); ++m)
    if (gof.x_sim[m] >= gof.x_obs[m]) hits += 1.0;
  return hits / static_cast<double>(gof.x_obs.size());
}

// Gelman-Rubin potential scale reduction on retained draws.
inline double rhat(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("rhat: need >= 2 chains");
  std::size_t n = chains[0].size();
  if (n < 2) throw std::invalid_argument("rhat: need >= 2 draws per chain");
  for (const auto& c : chains)
    if (c.size() != n) throw std::invalid_argument("rhat: unequal chain lengths");

  std::vector<double> means(chains.size());
  double w = 0.0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    means[c] = mean(chains[c]);
    w += variance(chains[c]);
  }
  w /= static_cast<double>(chains.size());
  double b_over_n = variance(means);
  if (w == 0.0) {
    if (b_over_n == 0.0) return 1.0;  // all chains constant and equal
    return std::numeric_limits<double>::infinity();
  }
  double nn = static_cast<double>(n);
  double var_plus = (nn - 1.0) / nn * w + b_over_n;
  double r = std::sqrt(var_plus / w);
  return r < 1.0 ? 1.0 : r;
}

struct SummaryRow {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
  double rhat = std::numeric_limits<double>::quiet_NaN();  // NaN when unavailable
};

inline std::vector<SummaryRow> summarize(const DrawsMatrix& draws) {
  std::vector<SummaryRow> rows;
  bool multi = draws.chains.size() >= 2;
  for (std::size_t j = 0; j < draws.columns.size(); ++j) {
    SummaryRow r;
    r.name = draws.columns[j];
    std::vector<double> x = draws.pooled(static_cast<int>(j));
    r.mean = mean(x);
    r.sd = sd(x);
    r.q025 = quantile_type7(x, 0.025);
    r.q50 = quantile_type7(x, 0.50);
    r.q975 = quantile_type7(x, 0.975);
    if (multi) r.rhat = rhat(draws.per_chain(static_cast<int>(j)));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace stratacr

#endif
