#ifndef STRATACR_SAMPLER_HPP
#define STRATACR_SAMPLER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stratacr/data.hpp"
#include "stratacr/diagnostics.hpp"
#include "stratacr/latent.hpp"
#include "stratacr/model.hpp"
#include "stratacr/rng.hpp"
#include "stratacr/stats.hpp"

namespace stratacr {

struct SamplerConfig {
  int chains = 3;
  long iterations = 4000;
  long burnin = -1;  // -1 -> iterations / 2
  int thin = 1;
  std::uint64_t seed = 1;
  int adapt_window = 50;
  double target_accept = 0.40;
  double step_beta = 0.2;
  double step_alpha = 0.2;
  double step_eta = 0.8;
  double step_a = 0.5;

  // Pin a parameter to validate other blocks in isolation (oracle gate).
  std::optional<double> fix_p;
  std::optional<double> fix_psi;
  std::optional<double> fix_alpha1;
  std::optional<double> fix_a;
  std::optional<std::vector<double>> fix_beta;

  long effective_burnin() const { return burnin < 0 ? iterations / 2 : burnin; }

  void validate() const {
    if (chains < 1) throw std::invalid_argument("need at least one chain");
    if (thin < 1) throw std::invalid_argument("thin must be >= 1");
    long b = effective_burnin();
    if (b >= iterations) throw std::invalid_argument("no retained draws: burnin >= iterations");
    if (!(target_accept > 0.0 && target_accept < 1.0))
      throw std::invalid_argument("target_accept must be in (0,1)");
  }
};

// Robbins-Monro step-size update toward the target acceptance rate;
// the gain decays with the adaptation round k so the scale settles.
inline double adapt_step(double acceptance_rate, double step, double target, int round) {
  double s = step * std::exp((acceptance_rate - target) / std::max(1, round));
  return std::clamp(s, 1e-6, 1e3);
}

// Rough pooled-data abundance guess used to size the augmented list.
// History data use a Chapman two-sample estimate (first half of the
// occasions vs the rest); frequency-only data use the M0 moment
// estimate n_T / (1 - (1 - ybar/K)^K).
inline int default_augmentation(const EncounterData& data, double factor = 5.0) {
  int n_t = data.n_individuals();
  double n_hat;
  if (data.has_histories() && data.K >= 2) {
    int half = data.K / 2;
    long n1 = 0, n2 = 0, both = 0;
    for (const auto& h : data.histories) {
      bool a = false, b = false;
      for (int k = 0; k < data.K; ++k) {
        if (h[k] && k < half) a = true;
        if (h[k] && k >= half) b = true;
      }
      if (a) n1++;
      if (b) n2++;
      if (a && b) both++;
    }
    n_hat = (n1 + 1.0) * (n2 + 1.0) / (both + 1.0) - 1.0;
  } else {
    double ybar = static_cast<double>(data.total_captures()) / std::max(1, n_t);
    double p_cap = -std::expm1(data.K * std::log1p(-ybar / data.K));
    n_hat = p_cap > 0.0 ? n_t / p_cap : n_t;
  }
  long m = std::lround(factor * std::max(n_hat, static_cast<double>(n_t)));
  return static_cast<int>(std::max<long>(m, n_t + 20));
}

class GibbsSampler {
 public:
  GibbsSampler(EncounterData data, ModelSpec spec, SamplerConfig config)
      : data_(std::move(data)), spec_(std::move(spec)), cfg_(config) {
    data_.validate();
    spec_.K = data_.K;
    spec_.validate(data_);
    cfg_.validate();
    n_obs_ = data_.n_individuals();
    n_s_obs_.assign(data_.S, 0);
    for (int g : data_.strata_of) n_s_obs_[g]++;
    obs_captures_ = data_.total_captures();
    if (spec_.detection == Detection::Mb) {
      for (const auto& h : data_.histories) {
        int first = 0;
        while (!h[first]) ++first;  // validated: at least one capture
        long y = 0;
        for (auto v : h) y += v;
        mb_trials0_ += first + 1;
        mb_capt0_ += 1;
        mb_trials1_ += data_.K - (first + 1);
        mb_capt1_ += y - 1;
      }
    }
  }

  const ModelSpec& spec() const { return spec_; }

  ParamState init_params(Rng& rng) const {
    ParamState p;
    p.beta.assign(spec_.P(), 0.0);
    if (spec_.abundance == Abundance::DCM) {
      p.eta.resize(spec_.S());
      for (auto& e : p.eta) e = std::max(rng.gamma(1.0), 1e-6);
      p.a = cfg_.fix_a ? *cfg_.fix_a : std::exp(rng.uniform(-1.0, 2.0));
    }
    if (cfg_.fix_beta) {
      p.beta = *cfg_.fix_beta;
    } else if (spec_.P() > 0) {
      // prior draws, resampled until the implied state is legal
      std::vector<double> lam;
      for (int attempt = 0; attempt < 500; ++attempt) {
        for (auto& b : p.beta) b = rng.normal(0.0, std::sqrt(10.0));
        if (!try_lambda_of(p.beta, spec_.design, lam)) continue;
        if (spec_.constraint == Constraint::DerivedPsi &&
            !derived_psi_checked(lam, spec_.M))
          continue;
        break;
      }
      if (!try_lambda_of(p.beta, spec_.design, lam)) p.beta.assign(spec_.P(), 0.0);
    }
    p.p = cfg_.fix_p ? *cfg_.fix_p : rng.uniform();
    p.alpha0 = rng.normal(0.0, 1.0);
    p.alpha1 = cfg_.fix_alpha1 ? *cfg_.fix_alpha1 : rng.normal(0.0, 1.0);
    if (spec_.constraint == Constraint::DerivedPsi) {
      std::vector<double> lam = lambda_of(p.beta, spec_.design);
      p.psi = derived_psi(lam, spec_.M);
    } else {
      p.psi = cfg_.fix_psi ? *cfg_.fix_psi : rng.uniform();
    }
    return p;
  }

  // One full Metropolis-within-Gibbs cycle:
  // (z,g) -> beta -> detection -> psi -> eta -> a.
  void sweep(AugmentedState& state, ParamState& params, Rng& rng, bool adapting = false) {
    update_latent(state, params, rng);
    update_beta(state, params, rng, adapting);
    update_detection(state, params, rng, adapting);
    update_psi(state, params, rng);
    if (spec_.abundance == Abundance::DCM) {
      update_eta(state, params, rng, adapting);
      update_shape(params, rng, adapting);
    }
    ++sweep_count_;
#ifndef NDEBUG
    if (sweep_count_ % 1000 == 0) state.check_counts();
#endif
    if (adapting && sweep_count_ % cfg_.adapt_window == 0) adapt_all();
  }

  DrawsMatrix run() {
    long burnin = cfg_.effective_burnin();
    long retained = (cfg_.iterations - burnin) / cfg_.thin;
    if (retained <= 0) throw std::invalid_argument("no retained draws: burnin >= iterations");

    DrawsMatrix out;
    out.columns = column_names();
    if (cfg_.chains == 1)
      out.warnings.push_back("single chain: R-hat unavailable");

    long boundary_hits = 0, total_rows = 0;
    bool degenerate_seen = false;
    for (int c = 0; c < cfg_.chains; ++c) {
      Rng rng = Rng::stream(cfg_.seed, static_cast<std::uint64_t>(c));
      AugmentedState state =
          init_state(data_, spec_, splitmix64(cfg_.seed) ^ splitmix64(1000 + c));
      ParamState params = init_params(rng);
      reset_adaptation();
      Matrix rows;
      rows.reserve(retained);
      for (long it = 0; it < cfg_.iterations; ++it) {
        bool adapting = it < burnin;
        sweep(state, params, rng, adapting);
        if (it >= burnin && (it - burnin) % cfg_.thin == 0) {
          rows.push_back(record_row(state, params, rng, degenerate_seen));
          if (state.N_T > 0.95 * spec_.M) boundary_hits++;
          total_rows++;
        }
      }
      out.chains.push_back(std::move(rows));
    }
    if (static_cast<double>(boundary_hits) / total_rows > 0.01)
      out.warnings.push_back(
          "M too small: posterior mass piles up near the augmentation bound");
    if (degenerate_seen)
      out.warnings.push_back("degenerate posterior-predictive replicate (zero captures)");
    return out;
  }

  std::vector<std::string> column_names() const {
    std::vector<std::string> cols;
    for (int j = 0; j < spec_.P(); ++j) {
      if (static_cast<int>(beta_names_.size()) == spec_.P())
        cols.push_back("beta_" + beta_names_[j]);
      else
        cols.push_back("beta_" + std::to_string(j + 1));
    }
    if (spec_.detection == Detection::M0) {
      cols.push_back("p");
    } else {
      cols.push_back("alpha0");
      cols.push_back("alpha1");
    }
    cols.push_back("psi");
    if (spec_.abundance == Abundance::DCM) cols.push_back("a");
    cols.push_back("N_T");
    for (int s = 0; s < spec_.S(); ++s) cols.push_back("N_" + std::to_string(s + 1));
    for (int s = 0; s < spec_.S(); ++s) cols.push_back("pi_" + std::to_string(s + 1));
    cols.push_back("X_obs");
    cols.push_back("X_sim");
    return cols;
  }

  void set_beta_names(std::vector<std::string> names) { beta_names_ = std::move(names); }

 private:
  void update_latent(AugmentedState& state, ParamState& params, Rng& rng) {
    std::vector<double> lam = lambda_of(params.beta, spec_.design);
    CellProbs cp = cell_probs(lam, spec_.abundance == Abundance::DCM ? &params.eta : nullptr);
    double p0 = std::exp(log_prob_all_zero(params, spec_));
    // All uncaptured pseudo-individuals share the all-zero history and
    // the detection model is stratum-constant, so the joint 2S-cell
    // full conditional factorizes: z ~ Bern(q), g ~ Cat(pi).
    double w1 = params.psi * p0;
    double q = w1 / (w1 + (1.0 - params.psi));
    std::vector<double> cdf(cp.pi.size());
    double acc = 0.0;
    for (std::size_t s = 0; s < cp.pi.size(); ++s) {
      acc += cp.pi[s];
      cdf[s] = acc;
    }
    for (int i = n_obs_; i < spec_.M; ++i) {
      std::uint8_t z = rng.bernoulli(q) ? 1 : 0;
      int g = rng.categorical_cdf(cdf);
      state.set(i, z, g);
    }
  }

  double log_post_beta(const std::vector<double>& beta, const AugmentedState& state,
                       const ParamState& params) const {
    std::vector<double> lam;
    if (!try_lambda_of(beta, spec_.design, lam)) return neg_inf;
    CellProbs cp;
    try {
      cp = cell_probs(lam, spec_.abundance == Abundance::DCM ? &params.eta : nullptr);
    } catch (const std::exception&) {
      return neg_inf;
    }
    double lp = 0.0;
    for (int s = 0; s < spec_.S(); ++s)
      if (state.N[s] > 0) lp += state.N[s] * std::log(cp.pi[s]);
    if (spec_.constraint == Constraint::DerivedPsi) {
      auto psi = derived_psi_checked(lam, spec_.M);
      if (!psi) return neg_inf;  // reject proposals implying psi >= 1
      lp += state.N_T * std::log(*psi) + (spec_.M - state.N_T) * std::log1p(-*psi);
    }
    for (double b : beta) lp += log_normal_pdf(b, 0.0, 10.0);
    return lp;
  }

  void update_beta(const AugmentedState& state, ParamState& params, Rng& rng, bool adapting) {
    if (spec_.P() == 0 || cfg_.fix_beta) {
      sync_derived_psi(params);
      return;
    }
    double lp0 = log_post_beta(params.beta, state, params);
    if (!std::isfinite(lp0)) throw_diagnostic("beta", params, state);
    if (spec_.P() <= 8) {
      std::vector<double> prop = params.beta;
      for (auto& b : prop) b += step_beta_ * rng.normal();
      double lp1 = log_post_beta(prop, state, params);
      bool accept = std::log(rng.uniform()) < lp1 - lp0;
      if (accept) params.beta = prop;
      beta_accept_ += accept;
      beta_tries_ += 1;
    } else {
      for (int j = 0; j < spec_.P(); ++j) {
        std::vector<double> prop = params.beta;
        prop[j] += step_beta_ * rng.normal();
        double lp1 = log_post_beta(prop, state, params);
        bool accept = std::log(rng.uniform()) < lp1 - lp0;
        if (accept) {
          params.beta = prop;
          lp0 = lp1;
        }
        beta_accept_ += accept;
        beta_tries_ += 1;
      }
    }
    sync_derived_psi(params);
    (void)adapting;
  }

  void sync_derived_psi(ParamState& params) const {
    if (spec_.constraint == Constraint::DerivedPsi) {
      std::vector<double> lam = lambda_of(params.beta, spec_.design);
      params.psi = derived_psi(lam, spec_.M);
    }
  }

  double loglik_mb(double a0, double a1, long n_t) const {
    double p0 = logistic(a0);
    double p1 = logistic(a0 + a1);
    double lp = mb_capt0_ * std::log(p0) + (mb_trials0_ - mb_capt0_) * std::log1p(-p0) +
                mb_capt1_ * std::log(p1) + (mb_trials1_ - mb_capt1_) * std::log1p(-p1) +
                (n_t - n_obs_) * spec_.K * std::log1p(-p0);
    lp += log_normal_pdf(a0, 0.0, 10.0) + log_normal_pdf(a1, 0.0, 10.0);
    return lp;
  }

  void update_detection(const AugmentedState& state, ParamState& params, Rng& rng,
                        bool adapting) {
    if (spec_.detection == Detection::M0) {
      if (cfg_.fix_p) {
        params.p = *cfg_.fix_p;
      } else {
        double a = 1.0 + obs_captures_;
        double b = 1.0 + static_cast<double>(spec_.K) * state.N_T - obs_captures_;
        params.p = rng.beta(a, b);
      }
      return;
    }
    double lp0 = loglik_mb(params.alpha0, params.alpha1, state.N_T);
    if (!std::isfinite(lp0)) throw_diagnostic("alpha", params, state);
    double a0 = params.alpha0 + step_alpha_ * rng.normal();
    double a1 = cfg_.fix_alpha1 ? *cfg_.fix_alpha1
                                : params.alpha1 + step_alpha_ * rng.normal();
    double lp1 = loglik_mb(a0, a1, state.N_T);
    bool accept = std::log(rng.uniform()) < lp1 - lp0;
    if (accept) {
      params.alpha0 = a0;
      params.alpha1 = a1;
    }
    alpha_accept_ += accept;
    alpha_tries_ += 1;
    (void)adapting;
  }

  void update_psi(const AugmentedState& state, ParamState& params, Rng& rng) {
    if (spec_.constraint != Constraint::FreePsi) return;
    if (cfg_.fix_psi) {
      params.psi = *cfg_.fix_psi;
      return;
    }
    params.psi = rng.beta(1.0 + state.N_T, 1.0 + spec_.M - state.N_T);
  }

  void update_eta(const AugmentedState& state, ParamState& params, Rng& rng, bool adapting) {
    std::vector<double> lam = lambda_of(params.beta, spec_.design);
    double denom = 0.0;
    for (int s = 0; s < spec_.S(); ++s) denom += params.eta[s] * lam[s];
    for (int s = 0; s < spec_.S(); ++s) {
      double eta_new = params.eta[s] * std::exp(step_eta_ * rng.normal());
      double denom_new = denom + (eta_new - params.eta[s]) * lam[s];
      if (denom_new <= 0.0) continue;
      // Gamma(a,1) prior with the log-scale Jacobian folded in:
      // (a-1) log eta + log eta = a log eta.
      double dlp = state.N[s] * (std::log(eta_new) - std::log(params.eta[s])) -
                   state.N_T * (std::log(denom_new) - std::log(denom)) +
                   params.a * (std::log(eta_new) - std::log(params.eta[s])) -
                   (eta_new - params.eta[s]);
      bool accept = std::log(rng.uniform()) < dlp;
      if (accept) {
        params.eta[s] = eta_new;
        denom = denom_new;
      }
      eta_accept_ += accept;
      eta_tries_ += 1;
    }
    (void)adapting;
  }

  void update_shape(ParamState& params, Rng& rng, bool adapting) {
    if (cfg_.fix_a) {
      params.a = *cfg_.fix_a;
      return;
    }
    double a_new = params.a * std::exp(step_a_ * rng.normal());
    if (a_new > 0.0 && a_new <= 1000.0) {
      double sum_log_eta = 0.0;
      for (double e : params.eta) sum_log_eta += std::log(e);
      double dlp = (a_new - params.a) * sum_log_eta -
                   spec_.S() * (std::lgamma(a_new) - std::lgamma(params.a)) +
                   (std::log(a_new) - std::log(params.a));
      if (std::log(rng.uniform()) < dlp) {
        params.a = a_new;
        a_accept_ += 1;
      }
    }
    a_tries_ += 1;
    (void)adapting;
  }

  std::vector<double> record_row(const AugmentedState& state, const ParamState& params,
                                 Rng& rng, bool& degenerate_seen) {
    std::vector<double> lam = lambda_of(params.beta, spec_.design);
    CellProbs cp = cell_probs(lam, spec_.abundance == Abundance::DCM ? &params.eta : nullptr);
    std::vector<double> row;
    row.reserve(column_names().size());
    for (double b : params.beta) row.push_back(b);
    if (spec_.detection == Detection::M0) {
      row.push_back(params.p);
    } else {
      row.push_back(params.alpha0);
      row.push_back(params.alpha1);
    }
    row.push_back(params.psi);
    if (spec_.abundance == Abundance::DCM) row.push_back(params.a);
    row.push_back(static_cast<double>(state.N_T));
    for (int s = 0; s < spec_.S(); ++s) row.push_back(static_cast<double>(state.N[s]));
    for (int s = 0; s < spec_.S(); ++s) row.push_back(cp.pi[s]);
    double x_obs = pearson_stat(std::vector<long>(n_s_obs_.begin(), n_s_obs_.end()),
                                n_obs_, cp.pi);
    auto [n_sim, tot_sim] = posterior_predictive_counts(state, params, spec_, rng);
    if (tot_sim == 0) degenerate_seen = true;
    double x_sim = pearson_stat(n_sim, tot_sim, cp.pi);
    row.push_back(x_obs);
    row.push_back(x_sim);
    return row;
  }

  void reset_adaptation() {
    step_beta_ = cfg_.step_beta;
    step_alpha_ = cfg_.step_alpha;
    step_eta_ = cfg_.step_eta;
    step_a_ = cfg_.step_a;
    beta_accept_ = beta_tries_ = 0;
    alpha_accept_ = alpha_tries_ = 0;
    eta_accept_ = eta_tries_ = 0;
    a_accept_ = a_tries_ = 0;
    adapt_round_ = 0;
    sweep_count_ = 0;
  }

  void adapt_all() {
    ++adapt_round_;
    if (beta_tries_ > 0) {
      step_beta_ = adapt_step(static_cast<double>(beta_accept_) / beta_tries_, step_beta_,
                              cfg_.target_accept, adapt_round_);
      beta_accept_ = beta_tries_ = 0;
    }
    if (alpha_tries_ > 0) {
      step_alpha_ = adapt_step(static_cast<double>(alpha_accept_) / alpha_tries_, step_alpha_,
                               cfg_.target_accept, adapt_round_);
      alpha_accept_ = alpha_tries_ = 0;
    }
    if (eta_tries_ > 0) {
      step_eta_ = adapt_step(static_cast<double>(eta_accept_) / eta_tries_, step_eta_,
                             cfg_.target_accept, adapt_round_);
      eta_accept_ = eta_tries_ = 0;
    }
    if (a_tries_ > 0) {
      step_a_ = adapt_step(static_cast<double>(a_accept_) / a_tries_, step_a_,
                           cfg_.target_accept, adapt_round_);
      a_accept_ = a_tries_ = 0;
    }
  }

  [[noreturn]] void throw_diagnostic(const std::string& block, const ParamState& params,
                                     const AugmentedState& state) const {
    std::ostringstream os;
    os << "non-finite log posterior in " << block << " block; state dump:";
    os << " N_T=" << state.N_T << " psi=" << params.psi << " p=" << params.p << " beta=(";
    for (double b : params.beta) os << b << ",";
    os << ") alpha=(" << params.alpha0 << "," << params.alpha1 << ") a=" << params.a;
    throw std::runtime_error(os.str());
  }

  EncounterData data_;
  ModelSpec spec_;
  SamplerConfig cfg_;
  std::vector<std::string> beta_names_;

  int n_obs_ = 0;
  std::vector<int> n_s_obs_;
  long obs_captures_ = 0;
  long mb_trials0_ = 0, mb_capt0_ = 0, mb_trials1_ = 0, mb_capt1_ = 0;

  double step_beta_ = 0.2, step_alpha_ = 0.2, step_eta_ = 0.8, step_a_ = 0.5;
  long beta_accept_ = 0, beta_tries_ = 0;
  long alpha_accept_ = 0, alpha_tries_ = 0;
  long eta_accept_ = 0, eta_tries_ = 0;
  long a_accept_ = 0, a_tries_ = 0;
  int adapt_round_ = 0;
  long sweep_count_ = 0;
};

}  // namespace stratacr

#endif
