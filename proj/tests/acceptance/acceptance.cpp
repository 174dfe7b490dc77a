// End-to-end acceptance checks. Each criterion prints one PASS/FAIL
// line; the process exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "stratacr/stratacr.hpp"

using namespace stratacr;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("%s: criterion %d (%s) %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
              detail.c_str());
  std::fflush(stdout);
  if (!pass) failures++;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- 1
// Sampler vs exact posterior on a fully enumerable instance.
void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();

  ModelSpec spec;
  spec.detection = Detection::M0;
  spec.constraint = Constraint::FreePsi;
  spec.M = 8;
  spec.K = 2;
  spec.design.assign(2, std::vector<double>{});

  ParamState truth;
  truth.p = 0.5;
  Rng gen(20240801);
  std::vector<long> N{2, 2};
  auto data = simulate_detection(N, spec, truth, gen);
  data.S = 2;

  SamplerConfig cfg;
  cfg.chains = 1;
  cfg.burnin = 2000;
  cfg.iterations = cfg.burnin + 200000;
  cfg.seed = 11;
  cfg.fix_p = 0.5;
  cfg.fix_psi = 0.5;
  GibbsSampler sampler(data, spec, cfg);
  auto draws = sampler.run();

  OracleGrid grid;
  grid.p_values = {0.5};
  grid.psi_values = {0.5};
  auto exact = exact_posterior(data, spec, grid);
  auto rep = compare_to_mcmc(exact, draws.pooled(draws.column("N_T")), 0.02);

  double secs = elapsed_s(t0);
  std::ostringstream os;
  os << "tv=" << rep.tv << " tol=0.02, " << secs << "s";
  report(1, "oracle gate", rep.pass && secs < 60.0, os.str());
}

// ---------------------------------------------------------------- 2
// Intercept-only Poisson data: fitting with the derived inclusion
// probability or with a free one must give the same N_T posterior.
void criterion_2() {
  ModelSpec gen;
  gen.detection = Detection::M0;
  gen.constraint = Constraint::DerivedPsi;
  gen.K = 5;
  gen.design.assign(4, std::vector<double>{1.0});
  ParamState truth;
  truth.beta = {std::log(30.0)};
  truth.p = 0.3;
  Rng rng(7);
  auto N = simulate_abundance(gen, truth, rng);
  auto data = simulate_detection(N, gen, truth, rng);

  SamplerConfig cfg;
  cfg.chains = 6;
  cfg.iterations = 8000;
  cfg.seed = 21;

  ModelSpec derived = gen;
  derived.M = 400;
  GibbsSampler s1(data, derived, cfg);
  auto d1 = s1.run();

  ModelSpec free = gen;
  free.constraint = Constraint::FreePsi;
  free.design.assign(4, std::vector<double>{});
  free.M = 400;
  GibbsSampler s2(data, free, cfg);
  auto d2 = s2.run();

  // per-chain means/sds give honest Monte Carlo SEs for both moments
  auto moments = [](const DrawsMatrix& d) {
    auto chains = d.per_chain(d.column("N_T"));
    std::vector<double> means, sds;
    for (const auto& c : chains) {
      means.push_back(mean(c));
      sds.push_back(sd(c));
    }
    double n = static_cast<double>(chains.size());
    return std::array<double, 4>{mean(means), sd(means) / std::sqrt(n), mean(sds),
                                 sd(sds) / std::sqrt(n)};
  };
  auto m1 = moments(d1);
  auto m2 = moments(d2);
  double se_mean = std::sqrt(m1[1] * m1[1] + m2[1] * m2[1]);
  double se_sd = std::sqrt(m1[3] * m1[3] + m2[3] * m2[3]);
  bool mean_ok = std::abs(m1[0] - m2[0]) < 3.0 * se_mean;
  bool sd_ok = std::abs(m1[2] - m2[2]) < 3.0 * se_sd;

  std::ostringstream os;
  os << "mean " << m1[0] << " vs " << m2[0] << " (3se=" << 3 * se_mean << "), sd " << m1[2]
     << " vs " << m2[2] << " (3se=" << 3 * se_sd << ")";
  report(2, "confounding equivalence", mean_ok && sd_ok, os.str());
}

// ------------------------------------------------------------- 3, 6
// Recovery at application scale: 48 strata, 10 occasions, treatment
// dummy. Criterion 3 checks 95% interval coverage of the treatment
// effect; criterion 6 checks R-hat on the structural parameters.
void criteria_3_and_6() {
  auto t0 = std::chrono::steady_clock::now();
  const int reps = 100, S = 48, K = 10;
  const double beta0 = 1.7, beta1 = 0.835, p_true = 0.25;

  ModelSpec spec;
  spec.detection = Detection::M0;
  spec.constraint = Constraint::DerivedPsi;
  spec.K = K;
  spec.design.assign(S, std::vector<double>{1.0, 0.0});
  for (int s = S / 2; s < S; ++s) spec.design[s][1] = 1.0;  // treated half
  spec.M = 1400;

  int covered = 0, converged = 0;
  for (int r = 0; r < reps; ++r) {
    Rng rng(90000 + r);
    ParamState truth;
    truth.beta = {beta0, beta1};
    truth.p = p_true;
    auto N = simulate_abundance(spec, truth, rng);
    auto data = simulate_detection(N, spec, truth, rng);
    data.S = S;

    SamplerConfig cfg;
    cfg.chains = 3;
    cfg.iterations = 3000;
    cfg.seed = 500 + r;
    GibbsSampler sampler(data, spec, cfg);
    auto draws = sampler.run();

    auto b1 = draws.pooled(draws.column("beta_2"));
    double lo = quantile_type7(b1, 0.025), hi = quantile_type7(b1, 0.975);
    if (lo <= beta1 && beta1 <= hi) covered++;

    bool ok = true;
    for (const auto& row : summarize(draws)) {
      bool structural = row.name.rfind("N_", 0) != 0 && row.name.rfind("pi_", 0) != 0 &&
                        row.name.rfind("X_", 0) != 0;
      if (structural && std::isfinite(row.rhat) && row.rhat >= 1.1) ok = false;
    }
    if (ok) converged++;
  }

  double secs = elapsed_s(t0);
  std::ostringstream os3;
  os3 << "coverage " << covered << "/100 (target 90-99), " << secs << "s";
  report(3, "recovery calibration", covered >= 90 && covered <= 99 && secs <= 7200.0,
         os3.str());
  std::ostringstream os6;
  os6 << "R-hat<1.1 in " << converged << "/100 replicates (need >=95)";
  report(6, "convergence reporting", converged >= 95, os6.str());
}

// ---------------------------------------------------------------- 4
// Goodness-of-fit power: overdispersed (Gamma-Poisson) data must be
// rejected by the Poisson fit but accepted by the matching fit.
void criterion_4() {
  auto t0 = std::chrono::steady_clock::now();
  const int reps = 50, S = 24, K = 5;
  int poisson_reject = 0, dcm_calibrated = 0;

  for (int r = 0; r < reps; ++r) {
    Rng rng(40000 + r);
    ModelSpec gen;
    gen.abundance = Abundance::DCM;
    gen.detection = Detection::M0;
    gen.constraint = Constraint::FreePsi;
    gen.K = K;
    gen.design.assign(S, std::vector<double>{1.0});
    ParamState truth;
    truth.beta = {std::log(8.0)};
    truth.a = 1.0;
    truth.p = 0.3;
    auto N = simulate_abundance(gen, truth, rng);
    auto data = simulate_detection(N, gen, truth, rng);
    data.S = S;
    if (data.n_individuals() < S) continue;  // vanishingly rare at this scale

    ModelSpec fit;
    fit.detection = Detection::M0;
    fit.constraint = Constraint::FreePsi;
    fit.K = K;
    fit.design.assign(S, std::vector<double>{});
    fit.M = std::max(default_augmentation(data), 3 * data.n_individuals());

    SamplerConfig cfg;
    cfg.chains = 2;
    cfg.iterations = 3000;
    cfg.seed = 600 + r;

    fit.abundance = Abundance::Poisson;
    GibbsSampler sp(data, fit, cfg);
    double p_pois = bayesian_p(gof_from_draws(sp.run()));
    if (p_pois < 0.05) poisson_reject++;

    fit.abundance = Abundance::DCM;
    GibbsSampler sd_(data, fit, cfg);
    double p_dcm = bayesian_p(gof_from_draws(sd_.run()));
    if (p_dcm > 0.05 && p_dcm < 0.95) dcm_calibrated++;
  }

  std::ostringstream os;
  os << "poisson p<0.05 in " << poisson_reject << "/50, dcm p in (0.05,0.95) in "
     << dcm_calibrated << "/50 (need >=40 each), " << elapsed_s(t0) << "s";
  report(4, "gof power contrast", poisson_reject >= 40 && dcm_calibrated >= 40, os.str());
}

// ---------------------------------------------------------------- 5
// Bernoulli thinning of a Poisson count is Poisson.
void criterion_5() {
  const double a_lam = 20.0, psi = 0.3, mu = a_lam * psi;
  Rng rng(55);
  std::vector<long> draws(100000);
  for (auto& d : draws) d = rng.binomial(rng.poisson(a_lam), psi);
  auto gof = chi_square_gof(
      draws, [&](long k) { return std::exp(-mu + k * std::log(mu) - std::lgamma(k + 1.0)); },
      0.01);
  std::ostringstream os;
  os << "chi2=" << gof.statistic << " df=" << gof.df << " crit(1%)=" << gof.critical;
  report(5, "thinning closure", gof.pass, os.str());
}

// ---------------------------------------------------------------- 7
// Byte-identical outputs for identical seed and configuration.
void criterion_7() {
  namespace fs = std::filesystem;
  ModelSpec gen;
  gen.detection = Detection::M0;
  gen.constraint = Constraint::DerivedPsi;
  gen.K = 5;
  gen.design.assign(3, std::vector<double>{1.0});
  ParamState truth;
  truth.beta = {std::log(20.0)};
  truth.p = 0.35;
  Rng rng(77);
  auto N = simulate_abundance(gen, truth, rng);
  auto data = simulate_detection(N, gen, truth, rng);
  data.S = 3;

  ModelSpec spec = gen;
  spec.M = 250;
  SamplerConfig cfg;
  cfg.chains = 2;
  cfg.iterations = 1000;
  cfg.seed = 404;

  fs::path base = fs::temp_directory_path() / "stratacr_acceptance";
  fs::remove_all(base);
  auto read_all = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  };
  for (const char* d : {"a", "b"}) {
    GibbsSampler s(data, spec, cfg);
    write_outputs(s.run(), (base / d).string());
  }
  bool ok = read_all(base / "a/draws.csv") == read_all(base / "b/draws.csv") &&
            read_all(base / "a/summary.csv") == read_all(base / "b/summary.csv");
  fs::remove_all(base);
  report(7, "determinism", ok, "draws.csv and summary.csv byte-identical across reruns");
}

// ---------------------------------------------------------------- 8
// Key randomized properties, re-run here at full width; the rest of
// the example-level checks live in the unit suite (ctest: unit).
void criterion_8() {
  Rng rng(88);
  bool ok = true;
  std::string detail = "cell_probs normalization x1000, nb_pmf tail sum";

  for (int rep = 0; rep < 1000 && ok; ++rep) {
    int S = 1 + static_cast<int>(rng.uniform() * 6);
    int P = 1 + static_cast<int>(rng.uniform() * 3);
    Matrix design(S);
    std::vector<double> beta(P);
    for (auto& b : beta) b = rng.normal(0.0, 1.0);
    for (auto& row : design) {
      row.resize(P);
      for (auto& v : row) v = rng.normal(0.0, 1.0);
    }
    std::vector<double> eta(S);
    for (auto& e : eta) e = rng.gamma(1.0) + 1e-8;
    auto lam = lambda_of(beta, design);
    bool use_eta = rng.bernoulli(0.5);
    auto cp = cell_probs(lam, use_eta ? &eta : nullptr);
    double sum = 0.0;
    for (double v : cp.pi) {
      if (v <= 0.0) ok = false;
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) ok = false;
  }
  if (!ok) detail = "cell_probs normalization violated";

  for (int rep = 0; rep < 1000 && ok; ++rep) {
    double a = std::exp(rng.normal(0.0, 1.0));
    double lam = std::exp(rng.normal(0.5, 1.0));
    double tail = 1.0;
    double em = 0.0;
    for (long g = 0; g < 4000; ++g) {
      double q = nb_pmf(g, a, lam);
      tail -= q;
      em += g * q;
    }
    if (std::abs(tail) > 1e-8 || std::abs(em - a * lam) > 1e-5 * (1.0 + a * lam)) {
      ok = false;
      detail = "nb_pmf tail/mean violated";
    }
  }
  report(8, "property suites", ok, detail);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criteria_3_and_6();
  criterion_4();
  criterion_5();
  criterion_7();
  criterion_8();
  std::printf("%s (%d failure%s)\n", failures == 0 ? "ALL CRITERIA PASSED" : "FAILURES",
              failures, failures == 1 ? "" : "s");
  return failures == 0 ? 0 : 1;
}
