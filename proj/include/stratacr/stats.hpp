#ifndef STRATACR_STATS_HPP
#define STRATACR_STATS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

namespace stratacr {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logaddexp(double a, double b) {
  if (a == neg_inf) return b;
  if (b == neg_inf) return a;
  double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

inline double log_choose(long n, long k) {
  if (k < 0 || k > n) return neg_inf;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// log Binom(y | n, p), safe at p = 0 and p = 1
inline double log_binom_pmf(long y, long n, double p) {
  if (y < 0 || y > n) return neg_inf;
  if (p <= 0.0) return y == 0 ? 0.0 : neg_inf;
  if (p >= 1.0) return y == n ? 0.0 : neg_inf;
  return log_choose(n, y) + y * std::log(p) + (n - y) * std::log1p(-p);
}

inline double log_normal_pdf(double x, double mean, double var) {
  double d = x - mean;
  return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * d * d / var;
}

inline double mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

inline double sd(const std::vector<double>& x) { return std::sqrt(variance(x)); }

// Type-7 quantile (linear interpolation between order statistics).
inline double quantile_type7(std::vector<double> x, double q) {
  if (x.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(x.begin(), x.end());
  double h = (static_cast<double>(x.size()) - 1.0) * q;
  std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= x.size()) return x.back();
  return x[lo] + (h - lo) * (x[lo + 1] - x[lo]);
}

// Monte Carlo standard error of the mean by non-overlapping batch means.
inline double mcse_batch_means(const std::vector<double>& x) {
  std::size_t n = x.size();
  if (n < 4) return std::numeric_limits<double>::quiet_NaN();
  std::size_t b = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  std::size_t nb = n / b;
  std::vector<double> bm(nb);
  for (std::size_t j = 0; j < nb; ++j) {
    double s = 0.0;
    for (std::size_t i = j * b; i < (j + 1) * b; ++i) s += x[i];
    bm[j] = s / static_cast<double>(b);
  }
  return std::sqrt(variance(bm) / static_cast<double>(nb));
}

struct ChiSquareGof {
  double statistic = 0.0;
  int df = 0;
  double critical = 0.0;  // upper quantile at the requested level
  bool pass = false;
};

// Goodness of fit of integer samples against a pmf. Cells with expected
// count below min_expected are merged into the upper tail.
template <typename Pmf>
ChiSquareGof chi_square_gof(const std::vector<long>& samples, Pmf pmf,
                            double alpha = 0.01, double min_expected = 5.0) {
  long lo = *std::min_element(samples.begin(), samples.end());
  long hi = *std::max_element(samples.begin(), samples.end());
  double n = static_cast<double>(samples.size());

  std::vector<double> expected;
  std::vector<long> cell_hi;  // inclusive upper bound of each cell
  double acc = 0.0;
  double used_mass = 0.0;
  for (long k = lo; k <= hi; ++k) {
    double pk = pmf(k);
    acc += n * pk;
    used_mass += pk;
    if (acc >= min_expected) {
      expected.push_back(acc);
      cell_hi.push_back(k);
      acc = 0.0;
    }
  }
  // tail above hi plus any leftover partial cell folded into the last cell
  double tail = n * (1.0 - used_mass) + acc;
  if (expected.empty()) throw std::runtime_error("chi_square_gof: too few samples");
  expected.back() += tail;
  cell_hi.back() = std::numeric_limits<long>::max();

  std::vector<double> observed(expected.size(), 0.0);
  for (long s : samples) {
    std::size_t c = 0;
    while (s > cell_hi[c]) ++c;
    observed[c] += 1.0;
  }

  ChiSquareGof r;
  for (std::size_t c = 0; c < expected.size(); ++c) {
    double d = observed[c] - expected[c];
    r.statistic += d * d / expected[c];
  }
  r.df = static_cast<int>(expected.size()) - 1;
  if (r.df < 1) throw std::runtime_error("chi_square_gof: not enough cells");
  boost::math::chi_squared dist(r.df);
  r.critical = boost::math::quantile(dist, 1.0 - alpha);
  r.pass = r.statistic < r.critical;
  return r;
}

}  // namespace stratacr

#endif
