#ifndef STRATACR_RNG_HPP
#define STRATACR_RNG_HPP

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace stratacr {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic RNG stream. Chains get disjoint streams derived from
// (seed, stream index) so multi-worker and single-worker runs draw the
// same per-chain sequences.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(seed) ^ splitmix64(index + 1));
  }

  double uniform() { return unif_(eng_); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unif_(eng_); }

  double normal() { return norm_(eng_); }

  double normal(double mean, double sd) { return mean + sd * norm_(eng_); }

  bool bernoulli(double p) { return unif_(eng_) < p; }

  long poisson(double mean) {
    std::poisson_distribution<long> d(mean);
    return d(eng_);
  }

  long binomial(long n, double p) {
    if (n <= 0) return 0;
    std::binomial_distribution<long> d(n, p);
    return d(eng_);
  }

  double gamma(double shape, double scale = 1.0) {
    std::gamma_distribution<double> d(shape, scale);
    return d(eng_);
  }

  double beta(double a, double b) {
    double x = gamma(a);
    double y = gamma(b);
    return x / (x + y);
  }

  // Draw index from cumulative probabilities (last entry ~ 1).
  int categorical_cdf(const std::vector<double>& cdf) {
    double u = unif_(eng_) * cdf.back();
    int lo = 0, hi = static_cast<int>(cdf.size()) - 1;
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (cdf[mid] < u)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  }

  int categorical(const std::vector<double>& probs) {
    double u = unif_(eng_);
    double acc = 0.0;
    for (std::size_t s = 0; s < probs.size(); ++s) {
      acc += probs[s];
      if (u < acc) return static_cast<int>(s);
    }
    return static_cast<int>(probs.size()) - 1;
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
  std::uniform_real_distribution<double> unif_{0.0, 1.0};
  std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace stratacr

#endif
