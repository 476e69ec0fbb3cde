#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dtameta/data.hpp"
#include "dtameta/mcmc.hpp"
#include "dtameta/params.hpp"
#include "dtameta/rng.hpp"

namespace dtameta {

class SingularCovError : public std::runtime_error {
 public:
  explicit SingularCovError(double det)
      : std::runtime_error("predictive covariance is near-singular (det = " +
                           std::to_string(det) + ")"),
        det_(det) {}
  double det() const { return det_; }

 private:
  double det_;
};

// One posterior-predictive replicate on the observed-logit scale. The same
// zero-cell correction as for observed data applies, so both logits are
// always finite.
struct PredictiveReplicate {
  double y_a = 0.0;
  double y_b = 0.0;
  long source_draw = -1;

  double log_dor() const { return y_a - y_b; }
};

// Empirical predictive moments on the observed-logit scale, plus the
// log-DOR scale moments.
struct PredictiveMoments {
  double mean_a = 0.0;
  double mean_b = 0.0;
  Sym2 cov;
  double mean_log_dor = 0.0;
  double var_log_dor = 0.0;
  long n_replicates = 0;
};

namespace detail {

inline double logit_plain(long k, long n) {
  return std::log(static_cast<double>(k) / static_cast<double>(n - k));
}
inline double logit_corrected(long k, long n) {
  return std::log((static_cast<double>(k) + 0.5) / (static_cast<double>(n - k) + 0.5));
}

}  // namespace detail

// Replicate logits from a replicate 2x2 table, with the same all-cells
// correction rule as observed data: any margin at 0 or n corrects both.
inline PredictiveReplicate replicate_from_counts(long tp, long n_a, long fp, long n_b) {
  const bool corrected = tp == 0 || tp == n_a || fp == 0 || fp == n_b;
  PredictiveReplicate rep;
  rep.y_a = corrected ? detail::logit_corrected(tp, n_a) : detail::logit_plain(tp, n_a);
  rep.y_b = corrected ? detail::logit_corrected(fp, n_b) : detail::logit_plain(fp, n_b);
  return rep;
}

// Draws one replicate study from a fixed random-effect pair:
// TP* ~ Bin(n_a, invlogit(theta_a)), FP* ~ Bin(n_b, invlogit(theta_b)).
inline PredictiveReplicate draw_replicate_given_theta(double theta_a, double theta_b, long n_a,
                                                      long n_b, Rng& rng) {
  if (n_a < 1 || n_b < 1) throw std::invalid_argument("draw_replicate: sizes must be >= 1");
  const long tp = rng.binomial(n_a, invlogit(theta_a));
  const long fp = rng.binomial(n_b, invlogit(theta_b));
  return replicate_from_counts(tp, n_a, fp, n_b);
}

// Draws one replicate study for a new random effect: theta* ~ N(mu, Sigma),
// then the binomial counts and corrected logits.
inline PredictiveReplicate draw_replicate(const ModelParams& params, long n_a, long n_b,
                                          Rng& rng) {
  if (!params.valid()) throw std::invalid_argument("draw_replicate: invalid ModelParams");
  const double z1 = rng.normal();
  const double z2 = rng.normal();
  const double theta_a = params.mu_a + params.sigma_a * z1;
  const double theta_b = params.mu_b + params.rho * params.sigma_b * z1 +
                         params.sigma_b * std::sqrt(1.0 - params.rho * params.rho) * z2;
  return draw_replicate_given_theta(theta_a, theta_b, n_a, n_b, rng);
}

// Posterior-predictive moments for a future study of the given sizes, from
// the pooled draws of a (leave-one-out) fit: reps_per_draw replicates per
// retained xi draw, accumulated into empirical moments.
inline PredictiveMoments loo_predictive_moments(const std::vector<PosteriorChain>& chains,
                                                long n_a, long n_b, int reps_per_draw,
                                                Rng& rng) {
  if (reps_per_draw < 1)
    throw std::invalid_argument("loo_predictive_moments: reps_per_draw must be >= 1");
  std::size_t total = 0;
  for (const auto& c : chains) total += c.draws();
  if (total * static_cast<std::size_t>(reps_per_draw) < 100)
    throw std::invalid_argument("loo_predictive_moments: fewer than 100 replicates");

  RunningMoments2 mom;
  RunningMoments dor;
  long draw_index = 0;
  for (const auto& c : chains) {
    for (const auto& p : c.params) {
      for (int r = 0; r < reps_per_draw; ++r) {
        auto rep = draw_replicate(p, n_a, n_b, rng);
        rep.source_draw = draw_index;
        mom.add(rep.y_a, rep.y_b);
        dor.add(rep.log_dor());
      }
      ++draw_index;
    }
  }
  PredictiveMoments out;
  out.mean_a = mom.mean_a;
  out.mean_b = mom.mean_b;
  out.cov = mom.covariance();
  out.mean_log_dor = dor.mean;
  out.var_log_dor = dor.variance();
  out.n_replicates = mom.n;
  return out;
}

// Predictive moments conditional on a fixed xi, estimated by inner Monte
// Carlo; used inside the discrepancy-based p-values.
inline PredictiveMoments conditional_moments_given_xi(const ModelParams& params, long n_a,
                                                      long n_b, int inner_reps, Rng& rng) {
  if (inner_reps < 50)
    throw std::invalid_argument("conditional_moments_given_xi: inner_reps must be >= 50");
  RunningMoments2 mom;
  RunningMoments dor;
  for (int r = 0; r < inner_reps; ++r) {
    const auto rep = draw_replicate(params, n_a, n_b, rng);
    mom.add(rep.y_a, rep.y_b);
    dor.add(rep.log_dor());
  }
  PredictiveMoments out;
  out.mean_a = mom.mean_a;
  out.mean_b = mom.mean_b;
  out.cov = mom.covariance();
  out.mean_log_dor = dor.mean;
  out.var_log_dor = dor.variance();
  out.n_replicates = mom.n;
  return out;
}

namespace detail {

// unnormalized pmf-weighted sums of the plain/corrected logits over one
// binomial margin at success probability invlogit(theta)
struct MarginMoments {
  double w_bdy = 0.0;              // P(k == 0 or k == n)
  double b5 = 0.0, b5sq = 0.0;     // corrected logit over the boundary cells
  double i0 = 0.0, i0sq = 0.0;     // plain logit over interior cells
  double i5 = 0.0, i5sq = 0.0;     // corrected logit over interior cells
};

inline const std::vector<double>& log_choose_table(long n) {
  thread_local std::vector<std::vector<double>> cache;
  thread_local std::vector<long> cached_n;
  for (std::size_t i = 0; i < cached_n.size(); ++i)
    if (cached_n[i] == n) return cache[i];
  std::vector<double> table(n + 1);
  for (long k = 0; k <= n; ++k) table[k] = log_choose(n, k);
  cache.push_back(std::move(table));
  cached_n.push_back(n);
  return cache.back();
}

inline MarginMoments margin_moments(double theta, long n) {
  MarginMoments m;
  const double lp = -log1pexp(-theta);  // log p
  const double lq = -log1pexp(theta);   // log (1-p)
  const double p = std::exp(lp);
  const double mean = static_cast<double>(n) * p;
  const double sd = std::sqrt(std::max(mean * std::exp(lq), 1e-300));

  // boundary cells exactly, whatever the summation window below
  const double p0 = std::exp(static_cast<double>(n) * lq);
  const double pn = std::exp(static_cast<double>(n) * lp);
  m.w_bdy = p0 + pn;
  const double g50 = logit_corrected(0, n);
  const double g5n = logit_corrected(n, n);
  m.b5 = p0 * g50 + pn * g5n;
  m.b5sq = p0 * g50 * g50 + pn * g5n * g5n;

  // interior cells; for huge n restrict to a window holding all but ~1e-30
  // of the mass
  long lo = 1, hi = n - 1;
  const bool windowed = n > 4096;
  if (windowed) {
    lo = std::max(1L, static_cast<long>(std::floor(mean - 12.0 * sd)) - 2);
    hi = std::min(n - 1, static_cast<long>(std::ceil(mean + 12.0 * sd)) + 2);
  }
  const std::vector<double>* table = windowed ? nullptr : &log_choose_table(n);
  for (long k = lo; k <= hi; ++k) {
    const double lc = table ? (*table)[k] : log_choose(n, k);
    const double w = std::exp(lc + static_cast<double>(k) * lp +
                              static_cast<double>(n - k) * lq);
    const double g0 = logit_plain(k, n);
    const double g5 = logit_corrected(k, n);
    m.i0 += w * g0;
    m.i0sq += w * g0 * g0;
    m.i5 += w * g5;
    m.i5sq += w * g5 * g5;
  }
  return m;
}

}  // namespace detail

// Exact replicate moments for fixed random effects: expectations of the
// corrected logits under the two binomials, including the (small) cross
// covariance induced by the joint correction rule. Deterministic; the
// n_replicates field is 0 to mark an analytic result.
inline PredictiveMoments conditional_moments_given_theta(double theta_a, double theta_b,
                                                         long n_a, long n_b) {
  if (n_a < 1 || n_b < 1)
    throw std::invalid_argument("conditional_moments_given_theta: sizes must be >= 1");
  const auto a = detail::margin_moments(theta_a, n_a);
  const auto b = detail::margin_moments(theta_b, n_b);
  const double qa = a.w_bdy;
  const double qb = b.w_bdy;

  const double mean_a = a.b5 + qb * a.i5 + (1.0 - qb) * a.i0;
  const double sq_a = a.b5sq + qb * a.i5sq + (1.0 - qb) * a.i0sq;
  const double mean_b = b.b5 + qa * b.i5 + (1.0 - qa) * b.i0;
  const double sq_b = b.b5sq + qa * b.i5sq + (1.0 - qa) * b.i0sq;

  // E[y_a y_b] split by which margins hit a boundary (independent given theta)
  const double cross = a.b5 * b.b5 + a.b5 * b.i5 + a.i5 * b.b5 + a.i0 * b.i0;

  PredictiveMoments out;
  out.mean_a = mean_a;
  out.mean_b = mean_b;
  out.cov.aa = std::max(sq_a - mean_a * mean_a, 0.0);
  out.cov.bb = std::max(sq_b - mean_b * mean_b, 0.0);
  out.cov.ab = cross - mean_a * mean_b;
  out.mean_log_dor = mean_a - mean_b;
  out.var_log_dor = std::max(out.cov.aa + out.cov.bb - 2.0 * out.cov.ab, 0.0);
  out.n_replicates = 0;
  return out;
}

// (y - m)^2 / v
inline double discrepancy_marginal(double y, double m, double v) {
  if (!(v > 0.0)) throw std::invalid_argument("discrepancy_marginal: non-positive variance");
  const double d = y - m;
  return d * d / v;
}

// (y - m)' cov^{-1} (y - m); throws when cov is near-singular
inline double discrepancy_synthetic(const std::array<double, 2>& y,
                                    const std::array<double, 2>& m, const Sym2& cov) {
  if (!cov.invertible()) throw SingularCovError(cov.det());
  return cov.quad_form(y[0] - m[0], y[1] - m[1]);
}

// sum of the two marginal discrepancies
inline double discrepancy_average(const std::array<double, 2>& y,
                                  const std::array<double, 2>& m, double v_a, double v_b) {
  return discrepancy_marginal(y[0], m[0], v_a) + discrepancy_marginal(y[1], m[1], v_b);
}

}  // namespace dtameta
