#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "dtameta/data.hpp"
#include "dtameta/mcmc.hpp"
#include "dtameta/parallel.hpp"
#include "dtameta/rng.hpp"

namespace dtameta {

struct ValidationCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;

  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return !checks.empty();
  }
};

namespace detail {

// adaptive 2-d random-walk Metropolis on an arbitrary log-density; the
// break_kernel switch force-rejects every proposal (negative control)
template <typename LogPdf>
inline std::vector<std::array<double, 2>> sample_2d_metropolis(LogPdf&& logpdf,
                                                               std::array<double, 2> init,
                                                               long burn, long keep, Rng& rng,
                                                               bool break_kernel) {
  AdaptiveScale scale(1.0);
  std::array<double, 2> state = init;
  double lp = logpdf(state[0], state[1]);
  std::vector<std::array<double, 2>> draws;
  draws.reserve(keep);
  for (long t = 1; t <= burn + keep; ++t) {
    const double s = scale.step();
    const std::array<double, 2> cand{state[0] + s * rng.normal(), state[1] + s * rng.normal()};
    const double lpc = logpdf(cand[0], cand[1]);
    const bool accept = !break_kernel && std::log(rng.uniform()) < lpc - lp;
    if (accept) {
      state = cand;
      lp = lpc;
    }
    if (t <= burn) {
      scale.record(accept);
      if (t % 50 == 0) scale.maybe_adapt(0.30, 50);
    } else {
      draws.push_back(state);
    }
  }
  return draws;
}

inline std::string format_check(double value, double truth, double tol) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "estimate %.4f vs truth %.4f (tolerance %.4f)", value, truth,
                tol);
  return buf;
}

}  // namespace detail

// Sampler correctness harness.
//
// (a) Runs the adaptive Metropolis kernel on an analytic 2-d Gaussian
//     N((1,2), diag(4,1)) and checks the recovered mean and covariance
//     against the truth within 3 Monte Carlo standard errors.
// (b) Simulation-based calibration: repeatedly draws hyperparameters from
//     a prior, simulates a dataset, refits it with the same prior, and
//     ranks the truth within the thinned posterior draws; each parameter's
//     rank histogram must be uniform (chi-square p > 0.01).
//
// break_kernel forces the analytic-target kernel to reject everything, as a
// negative control that must trip the fail flags.
inline ValidationReport validate_sampler(std::uint64_t seed, int sbc_reps = 100,
                                         bool break_kernel = false) {
  ValidationReport report;

  // (a) analytic Gaussian target
  {
    const double true_mean_a = 1.0, true_mean_b = 2.0;
    const double true_var_a = 4.0, true_var_b = 1.0, true_cov = 0.0;
    auto logpdf = [&](double x, double y) {
      const double da = x - true_mean_a;
      const double db = y - true_mean_b;
      return -0.5 * (da * da / true_var_a + db * db / true_var_b);
    };
    Rng rng(Rng::mix(seed, 0xA11A));
    const auto draws =
        detail::sample_2d_metropolis(logpdf, {0.0, 0.0}, 5000, 40000, rng, break_kernel);

    RunningMoments2 mom;
    std::vector<double> col_a, col_b;
    col_a.reserve(draws.size());
    col_b.reserve(draws.size());
    for (const auto& d : draws) {
      mom.add(d[0], d[1]);
      col_a.push_back(d[0]);
      col_b.push_back(d[1]);
    }
    const auto cov = mom.covariance();
    double ess_a = effective_sample_size({col_a});
    double ess_b = effective_sample_size({col_b});
    ess_a = std::max(ess_a, 4.0);
    ess_b = std::max(ess_b, 4.0);
    const double ess_min = std::min(ess_a, ess_b);

    auto add_check = [&](const std::string& name, double value, double truth, double se) {
      ValidationCheck c;
      c.name = name;
      c.passed = std::abs(value - truth) < 3.0 * se;
      c.detail = detail::format_check(value, truth, 3.0 * se);
      report.checks.push_back(std::move(c));
    };
    add_check("analytic_mean_a", mom.mean_a, true_mean_a, std::sqrt(cov.aa / ess_a));
    add_check("analytic_mean_b", mom.mean_b, true_mean_b, std::sqrt(cov.bb / ess_b));
    add_check("analytic_var_a", cov.aa, true_var_a, cov.aa * std::sqrt(2.0 / ess_a));
    add_check("analytic_var_b", cov.bb, true_var_b, cov.bb * std::sqrt(2.0 / ess_b));
    add_check("analytic_cov_ab", cov.ab, true_cov,
              std::sqrt((cov.aa * cov.bb + cov.ab * cov.ab) / ess_min));
  }

  // (b) simulation-based calibration of the full sampler
  {
    PriorSpec prior;
    prior.mu_mean = 0.0;
    prior.mu_sd = 1.0;
    prior.sigma_upper = 1.0;
    prior.rho_lower = -1.0;
    prior.rho_upper = 1.0;

    const std::vector<std::pair<long, long>> sizes = {
        {40, 60}, {60, 40}, {80, 100}, {50, 50},  {120, 150}, {30, 70},
        {90, 60}, {70, 90}, {100, 40}, {45, 55},  {65, 85},   {55, 45}};

    McmcConfig fit_cfg;
    fit_cfg.iterations = 12000;
    fit_cfg.burn_in = 2000;
    fit_cfg.thin = 10;
    fit_cfg.chains = 1;

    constexpr int kRankDraws = 19;  // ranks take values 0..19
    const int reps = sbc_reps;
    std::vector<std::array<int, 5>> ranks(reps);

    parallel_for(static_cast<std::size_t>(reps), [&](std::size_t r) {
      Rng prior_rng(Rng::mix(seed, 0x5BC0ULL + r));
      ModelParams truth;
      truth.mu_a = prior_rng.normal(prior.mu_mean, prior.mu_sd);
      truth.mu_b = prior_rng.normal(prior.mu_mean, prior.mu_sd);
      truth.sigma_a = prior_rng.uniform(0.0, prior.sigma_upper);
      truth.sigma_b = prior_rng.uniform(0.0, prior.sigma_upper);
      truth.rho = prior_rng.uniform(prior.rho_lower, prior.rho_upper);
      // degenerate corner draws would make the simulation itself invalid
      truth.sigma_a = std::max(truth.sigma_a, 1e-6);
      truth.sigma_b = std::max(truth.sigma_b, 1e-6);
      truth.rho = std::clamp(truth.rho, -0.999999, 0.999999);

      const Dataset data = simulate_dataset(truth, sizes, Rng::mix(seed, 0xD47AULL + r));
      McmcConfig cfg = fit_cfg;
      cfg.seed = Rng::mix(seed, 0xF17ULL + r);
      const PosteriorChain chain = run_chain(data, prior, cfg, 0);

      const std::size_t total = chain.draws();
      std::array<double, 5> true_vals{truth.mu_a, truth.mu_b, truth.sigma_a, truth.sigma_b,
                                      truth.rho};
      for (int pidx = 0; pidx < 5; ++pidx) {
        int rank = 0;
        for (int j = 0; j < kRankDraws; ++j) {
          const std::size_t idx = static_cast<std::size_t>(
              static_cast<double>(j) * static_cast<double>(total) / kRankDraws);
          const ModelParams& p = chain.params[idx];
          const double v = pidx == 0   ? p.mu_a
                           : pidx == 1 ? p.mu_b
                           : pidx == 2 ? p.sigma_a
                           : pidx == 3 ? p.sigma_b
                                       : p.rho;
          if (v < true_vals[pidx]) ++rank;
        }
        ranks[r][pidx] = rank;
      }
    });

    const char* names[5] = {"mu_a", "mu_b", "sigma_a", "sigma_b", "rho"};
    constexpr int kBins = 10;  // 20 rank values, 2 per bin
    for (int pidx = 0; pidx < 5; ++pidx) {
      std::vector<double> observed(kBins, 0.0);
      for (int r = 0; r < reps; ++r) observed[std::min(ranks[r][pidx] / 2, kBins - 1)] += 1.0;
      const std::vector<double> expected(kBins, static_cast<double>(reps) / kBins);
      const double p = chi2_gof_pvalue(observed, expected);
      ValidationCheck c;
      c.name = std::string("sbc_rank_uniformity_") + names[pidx];
      c.passed = p > 0.01;
      char buf[96];
      std::snprintf(buf, sizeof(buf), "chi-square p = %.4f over %d replications", p, reps);
      c.detail = buf;
      report.checks.push_back(std::move(c));
    }
  }

  return report;
}

}  // namespace dtameta
