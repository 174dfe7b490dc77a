#ifndef STRATACR_ORACLE_HPP
#define STRATACR_ORACLE_HPP

#include <cmath>
#include <stdexcept>
#include <vector>

#include "stratacr/data.hpp"
#include "stratacr/model.hpp"
#include "stratacr/stats.hpp"

namespace stratacr {

// Parameter treatment for the exact posterior: single-element vectors
// pin a parameter, longer vectors are a uniform-prior grid. beta is
// always fixed.
struct OracleGrid {
  std::vector<double> p_values{0.5};
  std::vector<double> psi_values{0.5};
  std::vector<double> beta;
};

struct ExactPosterior {
  std::vector<double> ntotal_pmf;  // index = N_T, length M+1
  std::vector<double> p_values, p_marginal;
  std::vector<double> psi_values, psi_marginal;
};

struct OracleReport {
  double tv = 0.0;
  bool pass = false;
};

// Brute-force posterior on a tiny instance by enumerating every latent
// (z, g) configuration of the uncaptured pseudo-individuals, with
// log-sum-exp accumulation throughout.
inline ExactPosterior exact_posterior(const EncounterData& data, const ModelSpec& spec,
                                      const OracleGrid& grid) {
  data.validate();
  int n_t = data.n_individuals();
  int u = spec.M - n_t;
  int S = data.S;
  if (spec.M > 12 || S > 3 || data.K > 3 || u < 0)
    throw std::invalid_argument("oracle instance exceeds bounds (M<=12, S<=3, K<=3)");
  if (grid.p_values.size() > 50 || grid.psi_values.size() > 50)
    throw std::invalid_argument("oracle grid exceeds 50 points per dimension");
  double terms = static_cast<double>(grid.p_values.size()) * grid.psi_values.size() *
                 std::pow(2.0 * S, u);
  if (terms > 1e7) throw std::invalid_argument("oracle enumeration exceeds 1e7 terms");

  std::vector<double> lam = lambda_of(grid.beta, spec.design);
  CellProbs cp = cell_probs(lam);

  std::vector<double> log_nt(spec.M + 1, neg_inf);
  std::vector<double> log_p(grid.p_values.size(), neg_inf);
  std::vector<double> log_psi(grid.psi_values.size(), neg_inf);

  ModelSpec node_spec = spec;
  node_spec.K = data.K;
  for (std::size_t ip = 0; ip < grid.p_values.size(); ++ip) {
    for (std::size_t iq = 0; iq < grid.psi_values.size(); ++iq) {
      ParamState params;
      params.beta = grid.beta;
      params.p = grid.p_values[ip];
      params.psi = grid.psi_values[iq];
      double psi = params.psi;

      double obs_ll = 0.0;
      for (int i = 0; i < n_t; ++i) {
        obs_ll += std::log(cp.pi[data.strata_of[i]]) + std::log(psi);
        if (data.has_histories())
          obs_ll += log_detection(data.histories[i], params, 1, node_spec);
        else
          obs_ll += log_detection(data.freq[i], params, 1, node_spec);
      }

      double lp0 = log_prob_all_zero(params, node_spec);
      std::vector<double> cell(2 * S);  // digit d: z = d >= S, stratum = d % S
      for (int s = 0; s < S; ++s) {
        cell[s] = std::log1p(-psi) + std::log(cp.pi[s]);
        cell[S + s] = std::log(psi) + std::log(cp.pi[s]) + lp0;
      }

      std::vector<int> digit(u, 0);
      std::vector<double> node_nt(spec.M + 1, neg_inf);
      while (true) {
        double lw = obs_ll;
        int extra = 0;
        for (int d : digit) {
          lw += cell[d];
          if (d >= S) extra++;
        }
        node_nt[n_t + extra] = logaddexp(node_nt[n_t + extra], lw);
        // odometer
        int pos = 0;
        while (pos < u) {
          if (++digit[pos] < 2 * S) break;
          digit[pos] = 0;
          pos++;
        }
        if (pos == u || u == 0) break;
      }

      double node_total = neg_inf;
      for (int k = 0; k <= spec.M; ++k) {
        log_nt[k] = logaddexp(log_nt[k], node_nt[k]);
        node_total = logaddexp(node_total, node_nt[k]);
      }
      log_p[ip] = logaddexp(log_p[ip], node_total);
      log_psi[iq] = logaddexp(log_psi[iq], node_total);
    }
  }

  double log_z = neg_inf;
  for (double v : log_nt) log_z = logaddexp(log_z, v);
  if (log_z == neg_inf) throw std::runtime_error("oracle: zero total probability");

  ExactPosterior out;
  out.ntotal_pmf.resize(spec.M + 1);
  for (int k = 0; k <= spec.M; ++k) out.ntotal_pmf[k] = std::exp(log_nt[k] - log_z);
  out.p_values = grid.p_values;
  out.psi_values = grid.psi_values;
  for (double v : log_p) out.p_marginal.push_back(std::exp(v - log_z));
  for (double v : log_psi) out.psi_marginal.push_back(std::exp(v - log_z));
  return out;
}

// Total-variation distance between the exact N_T pmf and the empirical
// pmf of MCMC draws.
inline OracleReport compare_to_mcmc(const ExactPosterior& exact,
                                    const std::vector<double>& ntotal_draws,
                                    double tolerance = 0.02) {
  if (ntotal_draws.empty()) throw std::invalid_argument("compare_to_mcmc: no draws");
  std::vector<double> emp(exact.ntotal_pmf.size(), 0.0);
  for (double d : ntotal_draws) {
    long k = std::lround(d);
    if (k < 0 || k >= static_cast<long>(emp.size()))
      throw std::invalid_argument("compare_to_mcmc: draw outside 0..M");
    emp[k] += 1.0;
  }
  for (auto& v : emp) v /= static_cast<double>(ntotal_draws.size());
  OracleReport r;
  for (std::size_t k = 0; k < emp.size(); ++k)
    r.tv += std::abs(emp[k] - exact.ntotal_pmf[k]);
  r.tv *= 0.5;
  r.pass = r.tv <= tolerance;
  return r;
}

}  // namespace stratacr

#endif
