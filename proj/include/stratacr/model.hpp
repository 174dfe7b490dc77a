#ifndef STRATACR_MODEL_HPP
#define STRATACR_MODEL_HPP

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stratacr/data.hpp"
#include "stratacr/stats.hpp"

namespace stratacr {

// Stratum cell probabilities pi_s = lambda_s / sum(lambda) (Poisson) or
// eta_s lambda_s / sum(eta lambda) (DCM). The extended form appends the
// "not a member of any stratum" cell.
struct CellProbs {
  std::vector<double> pi;

  std::vector<double> extended(double psi) const {
    std::vector<double> plus(pi.size() + 1);
    for (std::size_t s = 0; s < pi.size(); ++s) plus[s] = pi[s] * psi;
    plus.back() = 1.0 - psi;
    return plus;
  }
};

// lambda_s = exp(x(s)' beta), log link in both abundance families.
inline std::vector<double> lambda_of(const std::vector<double>& beta, const Matrix& design) {
  std::vector<double> lam(design.size());
  for (std::size_t s = 0; s < design.size(); ++s) {
    if (design[s].size() != beta.size())
      throw std::invalid_argument("design/beta dimension mismatch");
    double lin = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) lin += design[s][j] * beta[j];
    lam[s] = std::exp(lin);
    if (!std::isfinite(lam[s]) || lam[s] <= 0.0)
      throw std::overflow_error("link overflow in stratum " + std::to_string(s + 1));
  }
  return lam;
}

// Non-throwing variant for MH proposals; false means "reject".
inline bool try_lambda_of(const std::vector<double>& beta, const Matrix& design,
                          std::vector<double>& lam) {
  lam.resize(design.size());
  for (std::size_t s = 0; s < design.size(); ++s) {
    double lin = 0.0;
    for (std::size_t j = 0; j < beta.size(); ++j) lin += design[s][j] * beta[j];
    lam[s] = std::exp(lin);
    if (!std::isfinite(lam[s]) || lam[s] <= 0.0) return false;
  }
  return true;
}

inline CellProbs cell_probs(const std::vector<double>& lambda,
                            const std::vector<double>* eta = nullptr) {
  CellProbs cp;
  cp.pi.resize(lambda.size());
  double denom = 0.0;
  for (std::size_t s = 0; s < lambda.size(); ++s) {
    if (lambda[s] <= 0.0) throw std::invalid_argument("cell_probs: lambda must be positive");
    double w = lambda[s];
    if (eta) {
      if (eta->size() != lambda.size())
        throw std::invalid_argument("cell_probs: eta length mismatch");
      if ((*eta)[s] <= 0.0) throw std::invalid_argument("cell_probs: eta must be positive");
      w *= (*eta)[s];
    }
    cp.pi[s] = w;
    denom += w;
  }
  if (denom <= 0.0 || !std::isfinite(denom))
    throw std::runtime_error("cell_probs: degenerate denominator");
  for (auto& v : cp.pi) v /= denom;
  return cp;
}

// psi = sum(lambda)/M, the identifiability constraint E[N_T] = psi M.
inline double derived_psi(const std::vector<double>& lambda, int M) {
  if (M <= 0) throw std::invalid_argument("derived_psi: M must be positive");
  double s = 0.0;
  for (double l : lambda) s += l;
  double psi = s / static_cast<double>(M);
  if (psi >= 1.0)
    throw std::domain_error("augmentation size M too small for current lambda");
  return psi;
}

// Proposal-safe variant: nullopt means the proposal must be rejected.
inline std::optional<double> derived_psi_checked(const std::vector<double>& lambda, int M) {
  double s = 0.0;
  for (double l : lambda) s += l;
  double psi = s / static_cast<double>(M);
  if (!(psi > 0.0) || psi >= 1.0) return std::nullopt;
  return psi;
}

// Negative binomial pmf from the Gamma-Poisson mixture with rate fixed
// at 1: Pr(G=g) = Gamma(a+g)/(Gamma(a) g!) lambda^g / (1+lambda)^(g+a).
inline double nb_pmf(long g, double a, double lambda) {
  if (g < 0) throw std::invalid_argument("nb_pmf: g must be nonnegative");
  if (a <= 0.0 || lambda <= 0.0) throw std::invalid_argument("nb_pmf: a, lambda must be positive");
  double lp = std::lgamma(a + g) - std::lgamma(a) - std::lgamma(g + 1.0) +
              g * std::log(lambda) - (g + a) * std::log1p(lambda);
  return std::exp(lp);
}

namespace detail {
inline bool all_zero(const std::vector<std::uint8_t>& h) {
  for (auto v : h)
    if (v) return false;
  return true;
}
}  // namespace detail

// log Pr(history | z) for a full K-occasion history. Under Mb the
// behavioral covariate is "captured at any earlier occasion".
inline double log_detection(const std::vector<std::uint8_t>& history, const ParamState& params,
                            int z, const ModelSpec& spec) {
  if (z == 0) return detail::all_zero(history) ? 0.0 : neg_inf;
  if (spec.detection == Detection::M0) {
    long y = 0;
    for (auto v : history) y += v;
    return log_binom_pmf(y, static_cast<long>(history.size()), params.p);
  }
  double lp = 0.0;
  bool captured_before = false;
  for (auto v : history) {
    double pk = logistic(params.alpha0 + (captured_before ? params.alpha1 : 0.0));
    lp += v ? std::log(pk) : std::log1p(-pk);
    if (v) captured_before = true;
  }
  return lp;
}

// Frequency-only overload; sufficient under M0, rejected under Mb.
inline double log_detection(int y, const ParamState& params, int z, const ModelSpec& spec) {
  if (spec.detection == Detection::Mb)
    throw std::invalid_argument("Mb detection requires full histories, not frequencies");
  if (z == 0) return y == 0 ? 0.0 : neg_inf;
  return log_binom_pmf(y, spec.K, params.p);
}

// log Pr(all-zero history | z=1). Stratum-constant for both M0 and Mb,
// where an uncaptured individual never triggers the behavioral term.
inline double log_prob_all_zero(const ParamState& params, const ModelSpec& spec) {
  if (spec.detection == Detection::M0) {
    if (params.p >= 1.0) return neg_inf;
    return spec.K * std::log1p(-params.p);
  }
  double p0 = logistic(params.alpha0);
  if (p0 >= 1.0) return neg_inf;
  return spec.K * std::log1p(-p0);
}

// Sum of log prior densities for the free parameters of the model.
inline double log_abundance_prior(const ParamState& params, const ModelSpec& spec) {
  double lp = 0.0;
  for (double b : params.beta) lp += log_normal_pdf(b, 0.0, 10.0);
  if (spec.detection == Detection::M0) {
    if (params.p < 0.0 || params.p > 1.0) return neg_inf;
  } else {
    lp += log_normal_pdf(params.alpha0, 0.0, 10.0);
    lp += log_normal_pdf(params.alpha1, 0.0, 10.0);
  }
  if (spec.constraint == Constraint::FreePsi) {
    if (params.psi < 0.0 || params.psi > 1.0) return neg_inf;
  }
  if (spec.abundance == Abundance::DCM) {
    if (params.a <= 0.0 || params.a > 1000.0) return neg_inf;
    lp += -std::log(1000.0);
    for (double e : params.eta) {
      if (e <= 0.0) return neg_inf;
      lp += (params.a - 1.0) * std::log(e) - e - std::lgamma(params.a);
    }
  }
  return lp;
}

}  // namespace stratacr

#endif
