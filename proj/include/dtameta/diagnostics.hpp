#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dtameta/data.hpp"
#include "dtameta/mcmc.hpp"
#include "dtameta/parallel.hpp"
#include "dtameta/predictive.hpp"
#include "dtameta/sroc.hpp"

namespace dtameta {

// Cut-offs for the outlier/influence flags. ssr's default is the upper 10th
// percentile of the chi-square distribution with 2 degrees of freedom.
struct Thresholds {
  double srd = 0.05;
  double ssr = 4.61;
  double p_value = 0.15;
  double delta_auc = 0.02;
  double rd_dor = 0.05;

  void validate() const {
    if (!(srd > 0.0 && ssr > 0.0 && delta_auc > 0.0 && rd_dor > 0.0))
      throw std::invalid_argument("Thresholds: all thresholds must be positive");
    if (!(p_value > 0.0 && p_value < 1.0))
      throw std::invalid_argument("Thresholds: p_value threshold must be in (0,1)");
  }
};

struct PValueConfig {
  int outer_draws = 2000;  // posterior draws thinned from the pooled full-data fit
  int inner_reps = 200;    // replicates per draw when marginalizing the random effect

  // Replicate conditioning. true: replicates use the study's own fitted
  // random-effect draw (exact binomial moments, the standard per-study
  // posterior predictive check; reproduces the case study). false:
  // replicates draw a fresh random effect from N(mu, Sigma) at each
  // retained xi (moments by inner Monte Carlo); this is the variant whose
  // null p-values are approximately uniform.
  bool study_conditional = true;

  void validate() const {
    if (outer_draws < 100) throw std::invalid_argument("PValueConfig: outer_draws must be >= 100");
    if (inner_reps < 50) throw std::invalid_argument("PValueConfig: inner_reps must be >= 50");
  }
};

struct RelativeDistances {
  double rd_a = 0.0;
  double rd_b = 0.0;
  double srd = 0.0;
  double ard = 0.0;
  double rd_dor = 0.0;
};

struct StandardizedResiduals {
  double sr_a = 0.0;
  double sr_b = 0.0;
  double sr_dor = 0.0;
  double asr = 0.0;
  std::optional<double> ssr;  // missing when the predictive covariance is singular
};

struct StudyPValues {
  double p_a = 0.0;
  double p_b = 0.0;
  double p_ad = 0.0;
  double p_dor = 0.0;
  std::optional<double> p_sd;
};

struct InfluenceFlags {
  bool srd = false;
  bool ssr = false;
  bool p_value = false;
  bool rd_dor = false;
  bool delta_auc = false;
};

// All per-study diagnostics plus the classification flags.
struct InfluenceRecord {
  int study_id = 0;
  std::string label;
  ObservedLogits observed;
  RelativeDistances rd;
  StandardizedResiduals sr;
  StudyPValues pv;
  double delta_auc = 0.0;
  InfluenceFlags flags;
  std::vector<std::string> notes;
  bool complete = false;  // false when the leave-one-out fit failed
};

struct LooFitSummary {
  int study_id = 0;
  PooledEstimates pooled;
  double auc = 0.0;
  bool ok = false;
  std::string error;
};

struct RunMetadata {
  McmcConfig mcmc;
  PriorSpec prior;
  Thresholds thresholds;
  PValueConfig pvalue;
  AucRange auc_range = AucRange::full;
  std::vector<std::pair<std::string, std::uint64_t>> seeds;
  double wall_seconds = 0.0;  // informational only; never serialized
};

struct AnalysisResult {
  Dataset dataset;
  PooledEstimates pooled;
  PosteriorSummary summary;
  SrocCurve sroc;
  IntervalEstimate auc;
  std::vector<LooFitSummary> loo;
  std::vector<InfluenceRecord> influence;
  RunMetadata meta;
  std::vector<std::string> errors;
};

// Relative changes of the back-transformed pooled estimates under deletion:
// marginal distances, their Euclidean synthesis, their average, and the
// DOR version.
inline RelativeDistances relative_distances(const PooledEstimates& full,
                                            const PooledEstimates& loo) {
  const double ea = full.sensitivity.value;
  const double eb = full.fpr.value;
  const double da = ea - loo.sensitivity.value;
  const double db = eb - loo.fpr.value;
  RelativeDistances rd;
  rd.rd_a = std::abs(da / ea);
  rd.rd_b = std::abs(db / eb);
  rd.srd = std::sqrt(da * da + db * db) / std::sqrt(ea * ea + eb * eb);
  rd.ard = 0.5 * (rd.rd_a + rd.rd_b);
  rd.rd_dor = std::abs((full.dor.value - loo.dor.value) / full.dor.value);
  return rd;
}

// Observed logits standardized by the leave-one-out predictive spread; ssr
// is the covariance-weighted quadratic form and goes missing (rather than
// exploding) when the predictive covariance is near-singular.
inline StandardizedResiduals standardized_residuals(const ObservedLogits& y, double log_dor_obs,
                                                    const PredictiveMoments& m) {
  if (!(m.cov.aa > 0.0 && m.cov.bb > 0.0 && m.var_log_dor > 0.0))
    throw std::invalid_argument("standardized_residuals: predictive variances must be positive");
  StandardizedResiduals sr;
  sr.sr_a = (y.y_a - m.mean_a) / std::sqrt(m.cov.aa);
  sr.sr_b = (y.y_b - m.mean_b) / std::sqrt(m.cov.bb);
  sr.sr_dor = (log_dor_obs - m.mean_log_dor) / std::sqrt(m.var_log_dor);
  sr.asr = 0.5 * (std::abs(sr.sr_a) + std::abs(sr.sr_b));
  if (m.cov.invertible()) {
    sr.ssr = discrepancy_synthetic({y.y_a, y.y_b}, {m.mean_a, m.mean_b}, m.cov);
  }
  return sr;
}

// Posterior-predictive p-values over the full-data posterior: for each
// thinned posterior draw, the observed discrepancies are compared against
// one replicate's, and each p-value is the fraction of draws where the
// replicate discrepancy is strictly larger. study_index locates the
// study's random-effect column within the chains.
inline StudyPValues bayesian_pvalues(const StudyRecord& study, std::size_t study_index,
                                     const std::vector<PosteriorChain>& chains,
                                     const PValueConfig& cfg, Rng& rng) {
  cfg.validate();
  struct DrawRef {
    const PosteriorChain* chain;
    std::size_t t;
  };
  std::vector<DrawRef> pooled;
  for (const auto& c : chains) {
    if (cfg.study_conditional && c.effects.size() != c.draws() * c.n_studies)
      throw FitError("bayesian_pvalues: chains lack stored random effects");
    if (cfg.study_conditional && study_index >= c.n_studies)
      throw FitError("bayesian_pvalues: study index out of range");
    for (std::size_t t = 0; t < c.draws(); ++t) pooled.push_back({&c, t});
  }
  if (pooled.empty()) throw FitError("bayesian_pvalues: empty chains");

  std::vector<DrawRef> outer;
  if (pooled.size() <= static_cast<std::size_t>(cfg.outer_draws)) {
    outer = pooled;
  } else {
    outer.reserve(cfg.outer_draws);
    for (int j = 0; j < cfg.outer_draws; ++j) {
      const std::size_t idx =
          static_cast<std::size_t>(static_cast<double>(j) * static_cast<double>(pooled.size()) /
                                   static_cast<double>(cfg.outer_draws));
      outer.push_back(pooled[idx]);
    }
  }

  const auto y = observed_logits(study);
  const double ld_obs = y.log_dor();
  const long n_a = study.n_diseased();
  const long n_b = study.n_nondiseased();

  long gt_a = 0, used_a = 0;
  long gt_b = 0, used_b = 0;
  long gt_ad = 0, used_ad = 0;
  long gt_dor = 0, used_dor = 0;
  long gt_sd = 0, used_sd = 0;

  for (const DrawRef& ref : outer) {
    PredictiveMoments mom;
    PredictiveReplicate rep;
    if (cfg.study_conditional) {
      const auto& th = ref.chain->effect(ref.t, study_index);
      mom = conditional_moments_given_theta(th[0], th[1], n_a, n_b);
      rep = draw_replicate_given_theta(th[0], th[1], n_a, n_b, rng);
    } else {
      const ModelParams& xi = ref.chain->params[ref.t];
      mom = conditional_moments_given_xi(xi, n_a, n_b, cfg.inner_reps, rng);
      rep = draw_replicate(xi, n_a, n_b, rng);
    }

    const bool va_ok = mom.cov.aa > 0.0;
    const bool vb_ok = mom.cov.bb > 0.0;
    if (va_ok) {
      ++used_a;
      if (discrepancy_marginal(rep.y_a, mom.mean_a, mom.cov.aa) >
          discrepancy_marginal(y.y_a, mom.mean_a, mom.cov.aa))
        ++gt_a;
    }
    if (vb_ok) {
      ++used_b;
      if (discrepancy_marginal(rep.y_b, mom.mean_b, mom.cov.bb) >
          discrepancy_marginal(y.y_b, mom.mean_b, mom.cov.bb))
        ++gt_b;
    }
    if (va_ok && vb_ok) {
      ++used_ad;
      if (discrepancy_average({rep.y_a, rep.y_b}, {mom.mean_a, mom.mean_b}, mom.cov.aa,
                              mom.cov.bb) >
          discrepancy_average({y.y_a, y.y_b}, {mom.mean_a, mom.mean_b}, mom.cov.aa, mom.cov.bb))
        ++gt_ad;
    }
    if (mom.var_log_dor > 0.0) {
      ++used_dor;
      if (discrepancy_marginal(rep.log_dor(), mom.mean_log_dor, mom.var_log_dor) >
          discrepancy_marginal(ld_obs, mom.mean_log_dor, mom.var_log_dor))
        ++gt_dor;
    }
    if (mom.cov.invertible()) {
      ++used_sd;
      if (discrepancy_synthetic({rep.y_a, rep.y_b}, {mom.mean_a, mom.mean_b}, mom.cov) >
          discrepancy_synthetic({y.y_a, y.y_b}, {mom.mean_a, mom.mean_b}, mom.cov))
        ++gt_sd;
    }
  }

  if (used_a == 0 || used_b == 0 || used_ad == 0 || used_dor == 0)
    throw FitError("bayesian_pvalues: no usable draws for study " + std::to_string(study.id));
  StudyPValues pv;
  pv.p_a = static_cast<double>(gt_a) / static_cast<double>(used_a);
  pv.p_b = static_cast<double>(gt_b) / static_cast<double>(used_b);
  pv.p_ad = static_cast<double>(gt_ad) / static_cast<double>(used_ad);
  pv.p_dor = static_cast<double>(gt_dor) / static_cast<double>(used_dor);
  if (used_sd > 0) pv.p_sd = static_cast<double>(gt_sd) / static_cast<double>(used_sd);
  return pv;
}

// Flag rules: strict inequalities except delta_auc, which includes the
// boundary. The p-value flag uses the smallest of the synthetic p-values
// (p_sd, p_ad, p_dor). Missing statistics leave their flag unset and add a
// note.
inline InfluenceFlags classify(InfluenceRecord& rec, const Thresholds& th) {
  InfluenceFlags flags;
  if (!rec.complete) {
    rec.notes.push_back("leave-one-out statistics unavailable; flags limited to p-values");
  } else {
    flags.srd = rec.rd.srd > th.srd;
    flags.rd_dor = rec.rd.rd_dor > th.rd_dor;
    flags.delta_auc = std::abs(rec.delta_auc) >= th.delta_auc;
    if (rec.sr.ssr.has_value()) {
      flags.ssr = *rec.sr.ssr > th.ssr;
    } else {
      rec.notes.push_back("ssr missing (singular predictive covariance); ssr flag not set");
    }
  }
  double min_p = std::min(rec.pv.p_ad, rec.pv.p_dor);
  if (rec.pv.p_sd.has_value()) {
    min_p = std::min(min_p, *rec.pv.p_sd);
  } else {
    rec.notes.push_back("p_sd missing (singular predictive covariance); p-value flag uses p_ad/p_dor only");
  }
  flags.p_value = min_p < th.p_value;
  rec.flags = flags;
  return flags;
}

// Full influence analysis: the all-data fit plus one leave-one-out fit per
// study (N+1 fits, each with its own derived seed), every Section-style
// diagnostic, and the classification flags. Deterministic given config.seed
// independent of scheduling; individual leave-one-out failures are recorded
// and leave partial results in place.
inline AnalysisResult run_full_analysis(const Dataset& d, const PriorSpec& prior,
                                        const McmcConfig& cfg, const Thresholds& thresholds,
                                        const PValueConfig& pvcfg = {},
                                        AucRange auc_range_mode = AucRange::full) {
  cfg.validate();
  prior.validate();
  thresholds.validate();
  pvcfg.validate();
  if (d.size() < 3) throw std::invalid_argument("run_full_analysis: need at least 3 studies");

  const std::size_t n = d.size();
  struct FitSlot {
    Dataset data;
    std::uint64_t seed = 0;
    std::vector<PosteriorChain> chains;
    std::vector<std::string> errors;
  };
  std::vector<FitSlot> fits(n + 1);
  fits[0].data = d;
  fits[0].seed = cfg.seed;
  for (std::size_t k = 0; k < n; ++k) {
    const int id = d.studies()[k].id;
    fits[k + 1].data = leave_one_out(d, id);
    fits[k + 1].seed = cfg.seed + 1000ULL * static_cast<std::uint64_t>(id);
  }
  for (auto& f : fits) f.chains.resize(cfg.chains);

  // one task per (fit, chain); leave-one-out chains drop their stored random
  // effects immediately (nothing downstream reads them) to bound memory
  const std::size_t n_tasks = fits.size() * static_cast<std::size_t>(cfg.chains);
  std::vector<std::string> task_errors(n_tasks);
  parallel_for(n_tasks, [&](std::size_t t) {
    const std::size_t f = t / static_cast<std::size_t>(cfg.chains);
    const int c = static_cast<int>(t % static_cast<std::size_t>(cfg.chains));
    McmcConfig local = cfg;
    local.seed = fits[f].seed;
    try {
      fits[f].chains[c] = run_chain(fits[f].data, prior, local, c);
      if (f > 0) {
        fits[f].chains[c].effects.clear();
        fits[f].chains[c].effects.shrink_to_fit();
      }
    } catch (const std::exception& e) {
      task_errors[t] = e.what();
    }
  });

  AnalysisResult result;
  result.dataset = d;
  result.meta.mcmc = cfg;
  result.meta.prior = prior;
  result.meta.thresholds = thresholds;
  result.meta.pvalue = pvcfg;
  result.meta.auc_range = auc_range_mode;
  result.meta.seeds.emplace_back("full_fit", fits[0].seed);
  for (std::size_t k = 0; k < n; ++k)
    result.meta.seeds.emplace_back("loo_study_" + std::to_string(d.studies()[k].id),
                                   fits[k + 1].seed);

  for (std::size_t f = 0; f < fits.size(); ++f) {
    for (int c = 0; c < cfg.chains; ++c) {
      const std::string& err = task_errors[f * cfg.chains + c];
      if (!err.empty()) fits[f].errors.push_back(err);
    }
  }
  if (!fits[0].errors.empty())
    throw FitError("full-data fit failed: " + fits[0].errors.front());

  const auto range = auc_range_for(auc_range_mode, d);
  result.pooled = pooled_estimates(fits[0].chains);
  result.summary = summarize_chains(fits[0].chains, d);
  result.sroc = make_sroc_curve(posterior_mean_params(fits[0].chains), 1000, range);
  result.auc = auc_with_interval(fits[0].chains, range);

  result.loo.resize(n);
  result.influence.resize(n);
  parallel_for(n, [&](std::size_t k) {
    const auto& study = d.studies()[k];
    auto& loo = result.loo[k];
    auto& rec = result.influence[k];
    loo.study_id = study.id;
    rec.study_id = study.id;
    rec.label = study.label;
    rec.observed = observed_logits(study);

    const auto& slot = fits[k + 1];
    if (slot.errors.empty()) {
      loo.pooled = pooled_estimates(slot.chains);
      loo.auc = make_sroc_curve(posterior_mean_params(slot.chains), 1000, range).auc;
      loo.ok = true;
      rec.rd = relative_distances(result.pooled, loo.pooled);
      Rng moments_rng(Rng::mix(cfg.seed, 0x6D6F6DULL + static_cast<std::uint64_t>(study.id)));
      const auto moments = loo_predictive_moments(slot.chains, study.n_diseased(),
                                                  study.n_nondiseased(), 1, moments_rng);
      rec.sr = standardized_residuals(rec.observed, rec.observed.log_dor(), moments);
      rec.delta_auc = delta_auc(result.sroc.auc, loo.auc);
      rec.complete = true;
    } else {
      loo.ok = false;
      loo.error = slot.errors.front();
      rec.notes.push_back("leave-one-out fit failed: " + slot.errors.front());
    }

    Rng pv_rng(Rng::mix(cfg.seed, 0x505641ULL + static_cast<std::uint64_t>(study.id)));
    rec.pv = bayesian_pvalues(study, k, fits[0].chains, pvcfg, pv_rng);
    classify(rec, thresholds);
  });

  for (std::size_t f = 1; f < fits.size(); ++f)
    for (const auto& e : fits[f].errors)
      result.errors.push_back("leave-one-out fit (study " +
                              std::to_string(d.studies()[f - 1].id) + "): " + e);
  return result;
}

// One sensitivity-analysis refit: the model refit on the dataset with one
// flagging method's flagged set removed. Methods with empty flag sets are
// not refitted and carry the full-fit results.
struct MethodRefit {
  std::string method;        // srd | ssr | p_value | rd_dor | delta_auc
  std::string method_label;  // display name
  std::vector<int> removed;
  PooledEstimates pooled;
  IntervalEstimate auc;
  SrocCurve sroc;
  bool refitted = false;
};

inline std::vector<int> flagged_ids(const AnalysisResult& result, const std::string& method) {
  std::vector<int> ids;
  for (const auto& rec : result.influence) {
    const auto& f = rec.flags;
    const bool on = method == "srd"         ? f.srd
                    : method == "ssr"       ? f.ssr
                    : method == "p_value"   ? f.p_value
                    : method == "rd_dor"    ? f.rd_dor
                    : method == "delta_auc" ? f.delta_auc
                                            : throw std::invalid_argument("unknown method " + method);
    if (on) ids.push_back(rec.study_id);
  }
  return ids;
}

// Refits once per flagging method with that method's flagged set removed,
// in the fixed method order used throughout the reports.
inline std::vector<MethodRefit> compute_method_refits(const AnalysisResult& result) {
  const auto& cfg = result.meta.mcmc;
  const auto& prior = result.meta.prior;
  const auto range = auc_range_for(result.meta.auc_range, result.dataset);

  const std::vector<std::pair<std::string, std::string>> methods = {
      {"srd", "Relative distance"},
      {"ssr", "Standardized residual"},
      {"p_value", "Bayesian p-value"},
      {"rd_dor", "Diagnostic odds ratio"},
      {"delta_auc", "AUC influence"},
  };

  std::vector<MethodRefit> refits(methods.size());
  std::vector<Dataset> reduced(methods.size());
  for (std::size_t m = 0; m < methods.size(); ++m) {
    refits[m].method = methods[m].first;
    refits[m].method_label = methods[m].second;
    refits[m].removed = flagged_ids(result, methods[m].first);
    if (refits[m].removed.empty()) {
      refits[m].pooled = result.pooled;
      refits[m].auc = result.auc;
      refits[m].sroc = result.sroc;
      continue;
    }
    std::vector<StudyRecord> rest;
    for (const auto& s : result.dataset.studies()) {
      if (std::find(refits[m].removed.begin(), refits[m].removed.end(), s.id) ==
          refits[m].removed.end())
        rest.push_back(s);
    }
    if (rest.size() < 2) {
      refits[m].pooled = result.pooled;
      refits[m].auc = result.auc;
      refits[m].sroc = result.sroc;
      continue;
    }
    reduced[m] = Dataset(std::move(rest), result.dataset.name() + " (" + methods[m].first +
                                              "-flagged removed)");
    refits[m].refitted = true;
  }

  // flatten (method, chain) into independent deterministic tasks
  std::vector<std::vector<PosteriorChain>> chains(methods.size());
  std::vector<std::size_t> active;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    if (refits[m].refitted) {
      chains[m].resize(cfg.chains);
      active.push_back(m);
    }
  }
  parallel_for(active.size() * static_cast<std::size_t>(cfg.chains), [&](std::size_t t) {
    const std::size_t m = active[t / static_cast<std::size_t>(cfg.chains)];
    const int c = static_cast<int>(t % static_cast<std::size_t>(cfg.chains));
    McmcConfig local = cfg;
    local.seed = Rng::mix(cfg.seed, 0x8EF17ULL + m);
    chains[m][c] = run_chain(reduced[m], prior, local, c);
  });
  for (const std::size_t m : active) {
    refits[m].pooled = pooled_estimates(chains[m]);
    refits[m].sroc = make_sroc_curve(posterior_mean_params(chains[m]), 1000, range);
    refits[m].auc = auc_with_interval(chains[m], range);
  }
  return refits;
}

}  // namespace dtameta
