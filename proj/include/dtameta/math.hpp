#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#if defined(__GLIBC__)
#include <math.h>
#endif

namespace dtameta {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline double invlogit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)), stable for large |x|
inline double log1pexp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

// thread-safe lgamma (glibc's lgamma writes the global signgam)
inline double log_gamma(double x) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(x, &sign);
#else
  return std::lgamma(x);
#endif
}

inline double log_choose(long n, long k) {
  return log_gamma(static_cast<double>(n) + 1.0) -
         log_gamma(static_cast<double>(k) + 1.0) -
         log_gamma(static_cast<double>(n - k) + 1.0);
}

// 2x2 symmetric (covariance) matrix: aa = Var[A], bb = Var[B], ab = Cov[A,B].
struct Sym2 {
  double aa = 0.0;
  double ab = 0.0;
  double bb = 0.0;

  double det() const { return aa * bb - ab * ab; }

  // x' S^{-1} x for x = (xa, xb); caller guards invertibility
  double quad_form(double xa, double xb) const {
    return (bb * xa * xa - 2.0 * ab * xa * xb + aa * xb * xb) / det();
  }

  // det must clear a relative floor so the quadratic form cannot explode
  bool invertible(double rel_tol = 1e-12) const {
    return aa > 0.0 && bb > 0.0 && det() > rel_tol * aa * bb;
  }
};

// Welford accumulator, univariate
struct RunningMoments {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double sd() const { return std::sqrt(variance()); }
};

// Welford accumulator, bivariate (means + covariance)
struct RunningMoments2 {
  long n = 0;
  double mean_a = 0.0;
  double mean_b = 0.0;
  double m2_a = 0.0;
  double m2_b = 0.0;
  double m2_ab = 0.0;

  void add(double a, double b) {
    ++n;
    const double da = a - mean_a;
    const double db = b - mean_b;
    mean_a += da / static_cast<double>(n);
    mean_b += db / static_cast<double>(n);
    m2_a += da * (a - mean_a);
    m2_b += db * (b - mean_b);
    m2_ab += da * (b - mean_b);
  }
  Sym2 covariance() const {
    if (n < 2) return {};
    const double d = static_cast<double>(n - 1);
    return {m2_a / d, m2_ab / d, m2_b / d};
  }
};

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("mean_of: empty vector");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sd_of(const std::vector<double>& v) {
  RunningMoments m;
  for (double x : v) m.add(x);
  return m.sd();
}

// type-7 quantile on a pre-sorted vector
inline double quantile_sorted(const std::vector<double>& s, double q) {
  if (s.empty()) throw std::invalid_argument("quantile_sorted: empty vector");
  const double h = static_cast<double>(s.size() - 1) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  return quantile_sorted(v, q);
}

namespace detail {

inline double gamma_p_series(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::abs(del) < std::abs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - log_gamma(a)) * h;
}

}  // namespace detail

// regularized lower incomplete gamma P(a, x)
inline double gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw std::invalid_argument("gamma_p: bad arguments");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return detail::gamma_p_series(a, x);
  return 1.0 - detail::gamma_q_contfrac(a, x);
}

inline double gamma_q(double a, double x) { return 1.0 - gamma_p(a, x); }

inline double chi2_cdf(double x, double dof) { return gamma_p(dof / 2.0, x / 2.0); }
inline double chi2_sf(double x, double dof) { return gamma_q(dof / 2.0, x / 2.0); }

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// one-sample KS statistic against U(0,1)
inline double ks_statistic_uniform(std::vector<double> sample) {
  if (sample.empty()) throw std::invalid_argument("ks_statistic_uniform: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double cdf = std::clamp(sample[i], 0.0, 1.0);
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - cdf));
    d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
  }
  return d;
}

// asymptotic KS p-value with Stephens' small-sample correction; the two
// series expansions cover small and large arguments
inline double ks_pvalue(double d, std::size_t n) {
  const double en = std::sqrt(static_cast<double>(n));
  const double lambda = (en + 0.12 + 0.11 / en) * d;
  if (lambda < 1e-6) return 1.0;
  if (lambda < 1.18) {
    const double t = std::exp(-kPi * kPi / (8.0 * lambda * lambda));
    const double cdf = std::sqrt(2.0 * kPi) / lambda *
                       (t + std::pow(t, 9.0) + std::pow(t, 25.0) + std::pow(t, 49.0));
    return std::clamp(1.0 - cdf, 0.0, 1.0);
  }
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    sign = -sign;
    if (std::abs(term) < 1e-12) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

// chi-square goodness-of-fit p-value for observed counts vs expected counts
inline double chi2_gof_pvalue(const std::vector<double>& observed,
                              const std::vector<double>& expected) {
  if (observed.size() != expected.size() || observed.size() < 2)
    throw std::invalid_argument("chi2_gof_pvalue: size mismatch");
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (expected[i] <= 0.0) throw std::invalid_argument("chi2_gof_pvalue: non-positive expected count");
    const double d = observed[i] - expected[i];
    stat += d * d / expected[i];
  }
  return chi2_sf(stat, static_cast<double>(observed.size() - 1));
}

}  // namespace dtameta
