#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dtameta/data.hpp"
#include "dtameta/params.hpp"

namespace dtameta {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log Bin(k | n, invlogit(theta)) without the binomial coefficient; this is
// the only part that varies while the data are fixed
inline double binomial_loglik_kernel(long k, long n, double theta) {
  // log p = -log(1 + e^-theta), log(1-p) = -log(1 + e^theta)
  return -static_cast<double>(k) * log1pexp(-theta) -
         static_cast<double>(n - k) * log1pexp(theta);
}

inline double binomial_logpmf_logit(long k, long n, double theta) {
  return log_choose(n, k) + binomial_loglik_kernel(k, n, theta);
}

// log N((ta, tb) | mu, Sigma); the caller-supplied log normalizing constant
// lets hyperparameter updates hoist it out of per-study loops
inline double bvnorm_logconst(const ModelParams& p) {
  const double one_minus_r2 = 1.0 - p.rho * p.rho;
  return -std::log(2.0 * kPi) - std::log(p.sigma_a) - std::log(p.sigma_b) -
         0.5 * std::log(one_minus_r2);
}

inline double bvnorm_quadform(const ModelParams& p, double ta, double tb) {
  const double za = (ta - p.mu_a) / p.sigma_a;
  const double zb = (tb - p.mu_b) / p.sigma_b;
  const double one_minus_r2 = 1.0 - p.rho * p.rho;
  return (za * za - 2.0 * p.rho * za * zb + zb * zb) / one_minus_r2;
}

inline double bvnorm_logpdf(const ModelParams& p, double ta, double tb) {
  return bvnorm_logconst(p) - 0.5 * bvnorm_quadform(p, ta, tb);
}

// both study-level binomial kernels for one study at its random effect
inline double study_loglik_kernel(const StudyRecord& s, double theta_a, double theta_b) {
  return binomial_loglik_kernel(s.tp, s.n_diseased(), theta_a) +
         binomial_loglik_kernel(s.fp, s.n_nondiseased(), theta_b);
}

// log prior density of the hyperparameters; -inf outside the support
inline double log_prior(const ModelParams& p, const PriorSpec& prior) {
  if (!prior.in_support(p)) return kNegInf;
  const double za = (p.mu_a - prior.mu_mean) / prior.mu_sd;
  const double zb = (p.mu_b - prior.mu_mean) / prior.mu_sd;
  double lp = -std::log(2.0 * kPi) - 2.0 * std::log(prior.mu_sd) - 0.5 * (za * za + zb * zb);
  lp += -2.0 * std::log(prior.sigma_upper);
  lp += -std::log(prior.rho_upper - prior.rho_lower);
  return lp;
}

// Full log joint density of data, random effects, and hyperparameters:
// sum of binomial log-pmfs (coefficients included), the bivariate-normal
// random-effects density, and the priors. -inf outside the prior support.
inline double log_joint(const Dataset& d, const ModelParams& params,
                        const RandomEffects& effects, const PriorSpec& prior) {
  if (effects.size() != d.size())
    throw std::invalid_argument("log_joint: effects/studies dimension mismatch");
  const double lp = log_prior(params, prior);
  if (lp == kNegInf) return kNegInf;
  double total = lp;
  const double re_const = bvnorm_logconst(params);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& s = d.studies()[i];
    const double ta = effects.theta[i][0];
    const double tb = effects.theta[i][1];
    if (!std::isfinite(ta) || !std::isfinite(tb)) return kNegInf;
    total += log_choose(s.n_diseased(), s.tp) + log_choose(s.n_nondiseased(), s.fp);
    total += study_loglik_kernel(s, ta, tb);
    total += re_const - 0.5 * bvnorm_quadform(params, ta, tb);
  }
  return total;
}

}  // namespace dtameta
