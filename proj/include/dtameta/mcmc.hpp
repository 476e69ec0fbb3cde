#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtameta/data.hpp"
#include "dtameta/model.hpp"
#include "dtameta/parallel.hpp"
#include "dtameta/params.hpp"
#include "dtameta/rng.hpp"

namespace dtameta {

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct McmcConfig {
  long iterations = 120000;
  long burn_in = 20000;
  int thin = 10;
  int chains = 3;
  std::uint64_t seed = 1;
  int adapt_window = 50;

  long retained_per_chain() const { return (iterations - burn_in) / thin; }

  void validate() const {
    if (iterations <= 0) throw std::invalid_argument("McmcConfig: iterations must be positive");
    if (burn_in < 0 || burn_in >= iterations)
      throw std::invalid_argument("McmcConfig: need 0 <= burn_in < iterations");
    if (thin < 1) throw std::invalid_argument("McmcConfig: thin must be >= 1");
    if (chains < 1) throw std::invalid_argument("McmcConfig: chains must be >= 1");
    if (adapt_window < 10) throw std::invalid_argument("McmcConfig: adapt_window must be >= 10");
    if (retained_per_chain() < 500)
      throw std::invalid_argument("McmcConfig: fewer than 500 retained draws per chain");
  }

  // reduced-cost profile for CI and smoke runs
  static McmcConfig fast_profile() {
    McmcConfig c;
    c.iterations = 12000;
    c.burn_in = 2000;
    c.thin = 10;
    c.chains = 2;
    return c;
  }
};

// Retained draws of one chain: hyperparameters plus the study-level random
// effects, post-burn-in and post-thinning only.
struct PosteriorChain {
  int chain_index = 0;
  std::size_t n_studies = 0;
  std::vector<ModelParams> params;              // one entry per retained draw
  std::vector<std::array<double, 2>> effects;   // draw-major, stride n_studies

  // post-burn-in acceptance rates per update block
  std::vector<double> accept_theta;
  double accept_mu = 0.0;
  double accept_sigma_a = 0.0;
  double accept_sigma_b = 0.0;
  double accept_rho = 0.0;

  std::size_t draws() const { return params.size(); }
  const std::array<double, 2>& effect(std::size_t draw, std::size_t study) const {
    return effects[draw * n_studies + study];
  }
};

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  double r_hat = 1.0;
  double ess = 0.0;
};

struct PosteriorSummary {
  std::vector<ParameterSummary> parameters;
  std::vector<std::string> warnings;

  const ParameterSummary& by_name(const std::string& name) const {
    for (const auto& p : parameters)
      if (p.name == name) return p;
    throw std::invalid_argument("PosteriorSummary: unknown parameter " + name);
  }
};

struct IntervalEstimate {
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

// Back-transformed pooled quantities. Point estimates are plug-in transforms
// of the posterior means of mu; intervals are central posterior quantiles of
// the per-draw transformed values.
struct PooledEstimates {
  IntervalEstimate sensitivity;  // invlogit(mu_a)
  IntervalEstimate fpr;          // invlogit(mu_b)
  IntervalEstimate dor;
  IntervalEstimate lr_pos;
  IntervalEstimate lr_neg;
  double mean_mu_a = 0.0;
  double mean_mu_b = 0.0;
};

// Scalar step size with batch-wise Robbins-Monro adaptation toward a target
// acceptance rate. Adaptation happens only while the caller keeps invoking
// maybe_adapt (burn-in); afterwards the scale is frozen.
struct AdaptiveScale {
  double log_step;
  long accepts = 0;
  long attempts = 0;
  long batch = 0;

  explicit AdaptiveScale(double initial_step) : log_step(std::log(initial_step)) {}

  double step() const { return std::exp(log_step); }
  void record(bool accepted) {
    ++attempts;
    if (accepted) ++accepts;
  }
  void maybe_adapt(double target, int window) {
    if (attempts < window) return;
    ++batch;
    const double rate = static_cast<double>(accepts) / static_cast<double>(attempts);
    const double delta = std::min(0.25, 1.0 / std::sqrt(static_cast<double>(batch)));
    log_step += (rate > target) ? delta : -delta;
    log_step = std::clamp(log_step, -6.0, 3.0);
    accepts = 0;
    attempts = 0;
  }
};

namespace detail {

// sums of theta over studies, kept incrementally so hyperparameter updates
// evaluate the random-effects density in O(1)
struct ThetaStats {
  double s_a = 0.0, s_b = 0.0, s_aa = 0.0, s_bb = 0.0, s_ab = 0.0;
  long n = 0;

  void add(double a, double b) {
    s_a += a;
    s_b += b;
    s_aa += a * a;
    s_bb += b * b;
    s_ab += a * b;
    ++n;
  }
  void replace(double old_a, double old_b, double new_a, double new_b) {
    s_a += new_a - old_a;
    s_b += new_b - old_b;
    s_aa += new_a * new_a - old_a * old_a;
    s_bb += new_b * new_b - old_b * old_b;
    s_ab += new_a * new_b - old_a * old_b;
  }
  // sum over studies of the bivariate-normal quadratic form at params p
  double sum_quadform(const ModelParams& p) const {
    const double nd = static_cast<double>(n);
    const double ca = s_aa - 2.0 * p.mu_a * s_a + nd * p.mu_a * p.mu_a;
    const double cb = s_bb - 2.0 * p.mu_b * s_b + nd * p.mu_b * p.mu_b;
    const double cab = s_ab - p.mu_a * s_b - p.mu_b * s_a + nd * p.mu_a * p.mu_b;
    const double va = p.sigma_a * p.sigma_a;
    const double vb = p.sigma_b * p.sigma_b;
    return (ca / va - 2.0 * p.rho * cab / (p.sigma_a * p.sigma_b) + cb / vb) /
           (1.0 - p.rho * p.rho);
  }
};

}  // namespace detail

// One adaptive random-walk Metropolis-within-Gibbs chain. Update blocks:
// each study's (theta_a, theta_b) pair jointly, the mu pair jointly, then
// sigma_a and sigma_b on the log scale and rho on the Fisher-z scale (with
// the corresponding Jacobians). Step sizes adapt during burn-in toward
// acceptance 0.30 for the 2-d blocks and 0.44 for the scalar blocks, and are
// frozen afterwards. Fully deterministic given (config.seed, chain_index).
inline PosteriorChain run_chain(const Dataset& d, const PriorSpec& prior,
                                const McmcConfig& cfg, int chain_index) {
  cfg.validate();
  prior.validate();
  const std::size_t n = d.size();
  if (n < 2) throw FitError("run_chain: need at least 2 studies");

  Rng rng(Rng::mix(cfg.seed, 0x636861696EULL + static_cast<std::uint64_t>(chain_index)));

  // initial state: theta at corrected observed logits, mu at their mean,
  // sigmas at empirical SDs floored at 0.1, rho at 0
  std::vector<std::array<double, 2>> theta(n);
  RunningMoments2 init_mom;
  for (std::size_t i = 0; i < n; ++i) {
    const auto y = observed_logits(d.studies()[i]);
    theta[i] = {y.y_a, y.y_b};
    init_mom.add(y.y_a, y.y_b);
  }
  ModelParams p;
  p.mu_a = init_mom.mean_a;
  p.mu_b = init_mom.mean_b;
  const auto init_cov = init_mom.covariance();
  auto init_sigma = [&](double var) {
    double s = std::sqrt(std::max(var, 0.0));
    if (!std::isfinite(s) || s < 0.1) s = 0.1;
    const double cap = 0.9 * prior.sigma_upper;
    if (s > cap) s = cap;
    if (!(s > 0.0)) s = 0.5 * prior.sigma_upper;
    return s;
  };
  p.sigma_a = init_sigma(init_cov.aa);
  p.sigma_b = init_sigma(init_cov.bb);
  p.rho = (prior.rho_lower < 0.0 && prior.rho_upper > 0.0)
              ? 0.0
              : 0.5 * (prior.rho_lower + prior.rho_upper);

  {
    RandomEffects re{theta};
    int attempt = 0;
    while (!std::isfinite(log_joint(d, p, re, prior))) {
      if (++attempt > 100)
        throw FitError("run_chain: non-finite log joint at initialization after 100 restarts");
      for (auto& t : re.theta) {
        t[0] += rng.normal(0.0, 0.5);
        t[1] += rng.normal(0.0, 0.5);
      }
      p.mu_a += rng.normal(0.0, 0.5);
      p.mu_b += rng.normal(0.0, 0.5);
    }
    theta = re.theta;
  }

  // cached per-study binomial kernels and the theta sufficient stats
  std::vector<double> study_ll(n);
  detail::ThetaStats stats;
  for (std::size_t i = 0; i < n; ++i) {
    study_ll[i] = study_loglik_kernel(d.studies()[i], theta[i][0], theta[i][1]);
    stats.add(theta[i][0], theta[i][1]);
  }
  double log_const = bvnorm_logconst(p);
  double sum_quad = stats.sum_quadform(p);

  std::vector<AdaptiveScale> sc_theta(n, AdaptiveScale(0.6));
  AdaptiveScale sc_mu(0.3), sc_sa(0.4), sc_sb(0.4), sc_rho(0.4);

  const double nd = static_cast<double>(n);
  auto mu_logprior = [&](double mu_a, double mu_b) {
    const double za = (mu_a - prior.mu_mean) / prior.mu_sd;
    const double zb = (mu_b - prior.mu_mean) / prior.mu_sd;
    return -0.5 * (za * za + zb * zb);
  };

  PosteriorChain out;
  out.chain_index = chain_index;
  out.n_studies = n;
  const long n_draws = cfg.retained_per_chain();
  out.params.reserve(n_draws);
  out.effects.reserve(static_cast<std::size_t>(n_draws) * n);

  std::vector<long> post_acc_theta(n, 0);
  long post_acc_mu = 0, post_acc_sa = 0, post_acc_sb = 0, post_acc_rho = 0;
  long post_sweeps = 0;

  for (long t = 1; t <= cfg.iterations; ++t) {
    const bool adapting = t <= cfg.burn_in;

    // block 1: per-study random effects
    for (std::size_t i = 0; i < n; ++i) {
      const double s = sc_theta[i].step();
      const double ta = theta[i][0] + s * rng.normal();
      const double tb = theta[i][1] + s * rng.normal();
      const double ll_new = study_loglik_kernel(d.studies()[i], ta, tb);
      const double q_old = bvnorm_quadform(p, theta[i][0], theta[i][1]);
      const double q_new = bvnorm_quadform(p, ta, tb);
      const double dlog = (ll_new - study_ll[i]) - 0.5 * (q_new - q_old);
      const bool accept = std::log(rng.uniform()) < dlog;
      if (accept) {
        stats.replace(theta[i][0], theta[i][1], ta, tb);
        sum_quad += q_new - q_old;
        theta[i] = {ta, tb};
        study_ll[i] = ll_new;
        if (!adapting) ++post_acc_theta[i];
      }
      if (adapting) sc_theta[i].record(accept);
    }

    // block 2: mu pair
    {
      const double s = sc_mu.step();
      ModelParams cand = p;
      cand.mu_a = p.mu_a + s * rng.normal();
      cand.mu_b = p.mu_b + s * rng.normal();
      const double quad_new = stats.sum_quadform(cand);
      const double dlog = -0.5 * (quad_new - sum_quad) + mu_logprior(cand.mu_a, cand.mu_b) -
                          mu_logprior(p.mu_a, p.mu_b);
      const bool accept = std::log(rng.uniform()) < dlog;
      if (accept) {
        p = cand;
        sum_quad = quad_new;
        if (!adapting) ++post_acc_mu;
      }
      if (adapting) sc_mu.record(accept);
    }

    // blocks 3-4: sigma_a, sigma_b via log-scale random walk (Jacobian: log sigma)
    for (int which = 0; which < 2; ++which) {
      AdaptiveScale& sc = which == 0 ? sc_sa : sc_sb;
      const double cur = which == 0 ? p.sigma_a : p.sigma_b;
      const double cand_sigma = cur * std::exp(sc.step() * rng.normal());
      bool accept = false;
      if (cand_sigma < prior.sigma_upper && cand_sigma > 0.0) {
        ModelParams cand = p;
        (which == 0 ? cand.sigma_a : cand.sigma_b) = cand_sigma;
        const double const_new = bvnorm_logconst(cand);
        const double quad_new = stats.sum_quadform(cand);
        const double dlog = nd * (const_new - log_const) - 0.5 * (quad_new - sum_quad) +
                            std::log(cand_sigma) - std::log(cur);
        accept = std::log(rng.uniform()) < dlog;
        if (accept) {
          p = cand;
          log_const = const_new;
          sum_quad = quad_new;
          if (!adapting) (which == 0 ? ++post_acc_sa : ++post_acc_sb);
        }
      } else {
        rng.uniform();  // keep the draw count fixed regardless of support
      }
      if (adapting) sc.record(accept);
    }

    // block 5: rho via Fisher-z random walk (Jacobian: log(1 - rho^2))
    {
      const double z = std::atanh(p.rho);
      const double z_new = z + sc_rho.step() * rng.normal();
      const double cand_rho = std::tanh(z_new);
      bool accept = false;
      if (cand_rho > prior.rho_lower && cand_rho < prior.rho_upper &&
          std::abs(cand_rho) < 1.0) {
        ModelParams cand = p;
        cand.rho = cand_rho;
        const double const_new = bvnorm_logconst(cand);
        const double quad_new = stats.sum_quadform(cand);
        const double dlog = nd * (const_new - log_const) - 0.5 * (quad_new - sum_quad) +
                            std::log1p(-cand_rho * cand_rho) - std::log1p(-p.rho * p.rho);
        accept = std::log(rng.uniform()) < dlog;
        if (accept) {
          p = cand;
          log_const = const_new;
          sum_quad = quad_new;
          if (!adapting) ++post_acc_rho;
        }
      } else {
        rng.uniform();
      }
      if (adapting) sc_rho.record(accept);
    }

    if (adapting && t % cfg.adapt_window == 0) {
      for (auto& sc : sc_theta) sc.maybe_adapt(0.30, cfg.adapt_window);
      sc_mu.maybe_adapt(0.30, cfg.adapt_window);
      sc_sa.maybe_adapt(0.44, cfg.adapt_window);
      sc_sb.maybe_adapt(0.44, cfg.adapt_window);
      sc_rho.maybe_adapt(0.44, cfg.adapt_window);
    }

    if (!adapting) {
      ++post_sweeps;
      if ((t - cfg.burn_in) % cfg.thin == 0) {
        out.params.push_back(p);
        out.effects.insert(out.effects.end(), theta.begin(), theta.end());
      }
    }
  }

  out.accept_theta.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.accept_theta[i] = static_cast<double>(post_acc_theta[i]) / static_cast<double>(post_sweeps);
  out.accept_mu = static_cast<double>(post_acc_mu) / static_cast<double>(post_sweeps);
  out.accept_sigma_a = static_cast<double>(post_acc_sa) / static_cast<double>(post_sweeps);
  out.accept_sigma_b = static_cast<double>(post_acc_sb) / static_cast<double>(post_sweeps);
  out.accept_rho = static_cast<double>(post_acc_rho) / static_cast<double>(post_sweeps);
  return out;
}

// --- convergence diagnostics -------------------------------------------

// split-half R-hat over same-length chains of one scalar parameter
inline double split_r_hat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::pair<const double*, std::size_t>> segs;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    if (half < 2) return 1.0;
    segs.emplace_back(c.data(), half);
    segs.emplace_back(c.data() + half, half);
  }
  const double seg_len = static_cast<double>(segs.front().second);
  RunningMoments between;
  double w = 0.0;
  for (const auto& [ptr, len] : segs) {
    RunningMoments m;
    for (std::size_t i = 0; i < len; ++i) m.add(ptr[i]);
    between.add(m.mean);
    w += m.variance();
  }
  w /= static_cast<double>(segs.size());
  const double b_over_n = between.variance();  // B/n in the usual notation
  const double var_plus = (seg_len - 1.0) / seg_len * w + b_over_n;
  if (w <= 0.0) return b_over_n > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  return std::sqrt(var_plus / w);
}

// effective sample size via split chains and Geyer's initial monotone
// positive sequence on the combined autocorrelation estimate
inline double effective_sample_size(const std::vector<std::vector<double>>& chains) {
  std::vector<std::vector<double>> segs;
  for (const auto& c : chains) {
    const std::size_t half = c.size() / 2;
    if (half < 4) return 0.0;
    segs.emplace_back(c.begin(), c.begin() + half);
    segs.emplace_back(c.begin() + half, c.begin() + 2 * half);
  }
  const std::size_t m = segs.size();
  const std::size_t len = segs.front().size();
  const double total = static_cast<double>(m * len);

  std::vector<double> means(m);
  double w = 0.0;
  RunningMoments between;
  for (std::size_t j = 0; j < m; ++j) {
    RunningMoments mom;
    for (double x : segs[j]) mom.add(x);
    means[j] = mom.mean;
    w += mom.variance();
    between.add(mom.mean);
  }
  w /= static_cast<double>(m);
  const double var_plus =
      (static_cast<double>(len) - 1.0) / static_cast<double>(len) * w + between.variance();
  if (var_plus <= 0.0) return 0.0;

  auto autocov = [&](std::size_t j, std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < len; ++i)
      s += (segs[j][i] - means[j]) * (segs[j][i + lag] - means[j]);
    return s / static_cast<double>(len);
  };

  double tau = 1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t lag = 1; lag + 1 < len; lag += 2) {
    double rho_even = 0.0, rho_odd = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      rho_even += autocov(j, lag);
      rho_odd += autocov(j, lag + 1);
    }
    rho_even = 1.0 - (w - rho_even / static_cast<double>(m)) / var_plus;
    rho_odd = 1.0 - (w - rho_odd / static_cast<double>(m)) / var_plus;
    double pair = rho_even + rho_odd;
    if (pair < 0.0) break;
    pair = std::min(pair, prev_pair);  // enforce monotone decrease
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  return std::min(total / tau, total);
}

namespace detail {

inline void append_summary(PosteriorSummary& summary, const std::string& name,
                           const std::vector<std::vector<double>>& per_chain) {
  ParameterSummary ps;
  ps.name = name;
  std::vector<double> pooled;
  for (const auto& c : per_chain) pooled.insert(pooled.end(), c.begin(), c.end());
  RunningMoments m;
  for (double x : pooled) m.add(x);
  ps.mean = m.mean;
  ps.sd = m.sd();
  std::sort(pooled.begin(), pooled.end());
  ps.q025 = quantile_sorted(pooled, 0.025);
  ps.q975 = quantile_sorted(pooled, 0.975);
  ps.r_hat = split_r_hat(per_chain);
  ps.ess = effective_sample_size(per_chain);
  summary.parameters.push_back(std::move(ps));
}

}  // namespace detail

inline PosteriorSummary summarize_chains(const std::vector<PosteriorChain>& chains,
                                         const Dataset& d) {
  if (chains.empty()) throw FitError("summarize_chains: no chains");
  PosteriorSummary summary;
  const std::size_t n_chains = chains.size();

  auto hyper = [&](const std::string& name, auto getter) {
    std::vector<std::vector<double>> per_chain(n_chains);
    for (std::size_t c = 0; c < n_chains; ++c) {
      per_chain[c].reserve(chains[c].draws());
      for (const auto& p : chains[c].params) per_chain[c].push_back(getter(p));
    }
    detail::append_summary(summary, name, per_chain);
  };
  hyper("mu_A", [](const ModelParams& p) { return p.mu_a; });
  hyper("mu_B", [](const ModelParams& p) { return p.mu_b; });
  hyper("sigma_A", [](const ModelParams& p) { return p.sigma_a; });
  hyper("sigma_B", [](const ModelParams& p) { return p.sigma_b; });
  hyper("rho", [](const ModelParams& p) { return p.rho; });

  for (std::size_t i = 0; i < d.size(); ++i) {
    for (int coord = 0; coord < 2; ++coord) {
      std::vector<std::vector<double>> per_chain(n_chains);
      for (std::size_t c = 0; c < n_chains; ++c) {
        per_chain[c].reserve(chains[c].draws());
        for (std::size_t t = 0; t < chains[c].draws(); ++t)
          per_chain[c].push_back(chains[c].effect(t, i)[coord]);
      }
      const std::string name = std::string(coord == 0 ? "theta_A[" : "theta_B[") +
                               std::to_string(d.studies()[i].id) + "]";
      detail::append_summary(summary, name, per_chain);
    }
  }

  for (const auto& ps : summary.parameters) {
    if (ps.r_hat > 1.05)
      summary.warnings.push_back("R-hat for " + ps.name + " is " + std::to_string(ps.r_hat) +
                                 " (> 1.05); chains may not have converged");
  }
  return summary;
}

struct FitResult {
  std::vector<PosteriorChain> chains;
  PosteriorSummary summary;
};

// Runs config.chains independent chains (distinct derived sub-seeds) and
// pools them into a summary with split R-hat and ESS per parameter.
inline FitResult run_mcmc(const Dataset& d, const PriorSpec& prior, const McmcConfig& cfg) {
  cfg.validate();
  FitResult result;
  result.chains.resize(cfg.chains);
  parallel_for(static_cast<std::size_t>(cfg.chains), [&](std::size_t c) {
    result.chains[c] = run_chain(d, prior, cfg, static_cast<int>(c));
  });
  result.summary = summarize_chains(result.chains, d);
  return result;
}

// Plug-in pooled estimates from pooled draws. lr_pos/lr_neg/dor are exact
// transforms of the back-transformed point estimates, so dor equals
// lr_pos/lr_neg identically.
inline PooledEstimates pooled_estimates(const std::vector<PosteriorChain>& chains) {
  std::size_t total = 0;
  for (const auto& c : chains) total += c.draws();
  if (total == 0) throw FitError("pooled_estimates: empty chains");

  std::vector<double> sens, fpr, dor, lrp, lrn;
  sens.reserve(total);
  fpr.reserve(total);
  dor.reserve(total);
  lrp.reserve(total);
  lrn.reserve(total);
  double sum_a = 0.0, sum_b = 0.0;
  for (const auto& c : chains) {
    for (const auto& p : c.params) {
      sum_a += p.mu_a;
      sum_b += p.mu_b;
      const double ea = invlogit(p.mu_a);
      const double eb = invlogit(p.mu_b);
      sens.push_back(ea);
      fpr.push_back(eb);
      dor.push_back(std::exp(p.mu_a - p.mu_b));
      lrp.push_back(ea / eb);
      lrn.push_back((1.0 - ea) / (1.0 - eb));
    }
  }
  PooledEstimates out;
  out.mean_mu_a = sum_a / static_cast<double>(total);
  out.mean_mu_b = sum_b / static_cast<double>(total);
  const double ea = invlogit(out.mean_mu_a);
  const double eb = invlogit(out.mean_mu_b);
  out.sensitivity.value = ea;
  out.fpr.value = eb;
  out.lr_pos.value = ea / eb;
  out.lr_neg.value = (1.0 - ea) / (1.0 - eb);
  out.dor.value = out.lr_pos.value / out.lr_neg.value;

  auto interval = [](std::vector<double>& v, IntervalEstimate& e) {
    std::sort(v.begin(), v.end());
    e.lo = quantile_sorted(v, 0.025);
    e.hi = quantile_sorted(v, 0.975);
  };
  interval(sens, out.sensitivity);
  interval(fpr, out.fpr);
  interval(dor, out.dor);
  interval(lrp, out.lr_pos);
  interval(lrn, out.lr_neg);
  return out;
}

// posterior-mean hyperparameters from pooled draws (the plug-in xi-hat)
inline ModelParams posterior_mean_params(const std::vector<PosteriorChain>& chains) {
  std::size_t total = 0;
  ModelParams m;
  m.mu_a = m.mu_b = m.sigma_a = m.sigma_b = m.rho = 0.0;
  for (const auto& c : chains) {
    for (const auto& p : c.params) {
      m.mu_a += p.mu_a;
      m.mu_b += p.mu_b;
      m.sigma_a += p.sigma_a;
      m.sigma_b += p.sigma_b;
      m.rho += p.rho;
      ++total;
    }
  }
  if (total == 0) throw FitError("posterior_mean_params: empty chains");
  const double nd = static_cast<double>(total);
  m.mu_a /= nd;
  m.mu_b /= nd;
  m.sigma_a /= nd;
  m.sigma_b /= nd;
  m.rho /= nd;
  return m;
}

}  // namespace dtameta
