#ifndef STRATACR_SIMULATE_HPP
#define STRATACR_SIMULATE_HPP

#include <cstdint>
#include <vector>

#include "stratacr/data.hpp"
#include "stratacr/model.hpp"
#include "stratacr/rng.hpp"
#include "stratacr/stats.hpp"

namespace stratacr {

// Ground truth saved alongside a simulated dataset.
struct SimTruth {
  std::vector<long> N;
  ParamState params;
};

// Draw true stratum abundances. Poisson: N_s ~ Pois(lambda_s).
// DCM: eta_s ~ Gamma(a,1), N_s ~ Pois(lambda_s eta_s); the drawn eta
// are written back into params for the truth record.
inline std::vector<long> simulate_abundance(const ModelSpec& spec, ParamState& params,
                                            Rng& rng) {
  std::vector<double> lam = lambda_of(params.beta, spec.design);
  std::vector<long> N(lam.size());
  if (spec.abundance == Abundance::DCM) {
    params.eta.resize(lam.size());
    for (std::size_t s = 0; s < lam.size(); ++s) {
      params.eta[s] = rng.gamma(params.a);
      N[s] = rng.poisson(lam[s] * params.eta[s]);
    }
  } else {
    for (std::size_t s = 0; s < lam.size(); ++s) N[s] = rng.poisson(lam[s]);
  }
  return N;
}

// Simulate K-occasion histories for every real individual and drop the
// uncaptured ones, so the returned data never contain all-zero rows.
inline EncounterData simulate_detection(const std::vector<long>& N, const ModelSpec& spec,
                                        const ParamState& params, Rng& rng) {
  EncounterData data;
  data.K = spec.K;
  data.S = static_cast<int>(N.size());
  for (int s = 0; s < data.S; ++s) {
    for (long i = 0; i < N[s]; ++i) {
      std::vector<std::uint8_t> h(spec.K, 0);
      int y = 0;
      if (spec.detection == Detection::M0) {
        for (int k = 0; k < spec.K; ++k)
          if (rng.bernoulli(params.p)) { h[k] = 1; y++; }
      } else {
        bool before = false;
        for (int k = 0; k < spec.K; ++k) {
          double pk = logistic(params.alpha0 + (before ? params.alpha1 : 0.0));
          if (rng.bernoulli(pk)) { h[k] = 1; y++; before = true; }
        }
      }
      if (y == 0) continue;
      data.histories.push_back(std::move(h));
      data.freq.push_back(y);
      data.strata_of.push_back(s);
    }
  }
  return data;
}

}  // namespace stratacr

#endif
