#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

#include "dtameta/math.hpp"

namespace dtameta {

// Deterministic random source. The engine is std::mt19937_64 (its output
// stream is pinned by the standard), and all distributions are generated
// from the raw uniform stream here rather than through std::*_distribution,
// whose algorithms are implementation-defined. Same seed, same draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  // combine a base seed with a stream index into an independent seed
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    return splitmix(splitmix(seed) ^ (stream * 0x9E3779B97F4A7C15ULL + 0x2545F4914F6CDD1DULL));
  }

  std::uint64_t next_u64() { return engine_(); }

  // uniform on the open interval (0, 1); never returns 0 or 1 exactly
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller, second value cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * kPi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Binomial(n, p). Inversion when n*p is small, otherwise Hoermann's
  // transformed-rejection sampler with the exact lgamma acceptance test.
  long binomial(long n, double p) {
    if (n < 0) throw std::invalid_argument("binomial: negative n");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("binomial: p outside [0,1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    if (p > 0.5) return n - binomial_small_p(n, 1.0 - p);
    return binomial_small_p(n, p);
  }

 private:
  long binomial_small_p(long n, double p) {
    const double np = static_cast<double>(n) * p;
    if (np < 10.0) return binomial_inversion(n, p);
    return binomial_btrs(n, p);
  }

  // sequential CDF inversion; expected O(n*p) steps, safe since n*p < 10
  long binomial_inversion(long n, double p) {
    const double logq = std::log1p(-p);
    const double s = p / (1.0 - p);
    double f = std::exp(static_cast<double>(n) * logq);
    double u = uniform();
    long k = 0;
    while (u > f) {
      u -= f;
      if (k >= n) return n;  // guards accumulated round-off
      f *= s * static_cast<double>(n - k) / static_cast<double>(k + 1);
      ++k;
    }
    return k;
  }

  // Hoermann (1993) transformed rejection, valid for p <= 0.5 and n*p >= 10
  long binomial_btrs(long n, double p) {
    const double nd = static_cast<double>(n);
    const double q = 1.0 - p;
    const double spq = std::sqrt(nd * p * q);
    const double b = 1.15 + 2.53 * spq;
    const double a = -0.0873 + 0.0248 * b + 0.01 * p;
    const double c = nd * p + 0.5;
    const double alpha = (2.83 + 5.1 / b) * spq;
    const double lpq = std::log(p / q);
    const long m = static_cast<long>(std::floor((nd + 1.0) * p));
    const double h = log_gamma(static_cast<double>(m) + 1.0) +
                     log_gamma(static_cast<double>(n - m) + 1.0);
    for (;;) {
      const double u = uniform() - 0.5;
      double v = uniform();
      const double us = 0.5 - std::abs(u);
      const long k = static_cast<long>(std::floor((2.0 * a / us + b) * u + c));
      if (k < 0 || k > n) continue;
      v = std::log(v * alpha / (a / (us * us) + b));
      const double accept = h - log_gamma(static_cast<double>(k) + 1.0) -
                            log_gamma(static_cast<double>(n - k) + 1.0) +
                            static_cast<double>(k - m) * lpq;
      if (v <= accept) return k;
    }
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dtameta
