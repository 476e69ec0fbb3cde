#pragma once

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dtameta/diagnostics.hpp"
#include "dtameta/svg.hpp"
#include "dtameta/validation.hpp"

namespace dtameta {

struct RunConfig {
  std::string input_path;
  std::string out_dir;
  McmcConfig mcmc;
  PriorSpec prior;
  Thresholds thresholds;
  PValueConfig pvalue;
  AucRange auc_range = AucRange::full;
  bool figures = false;
  bool fast = false;
  bool dump_chains = false;
};

// What cmd_analyze wrote: file name -> SHA-256, as recorded in manifest.json.
struct ReportBundle {
  std::string out_dir;
  std::map<std::string, std::string> files;
};

inline std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw std::runtime_error("sha256: cannot allocate digest context");
  if (EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256: digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

namespace detail {

inline std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

inline nlohmann::ordered_json json_interval(const IntervalEstimate& e) {
  return {{"value", e.value}, {"lo", e.lo}, {"hi", e.hi}};
}

inline nlohmann::ordered_json json_pooled(const PooledEstimates& p) {
  return {{"sensitivity", json_interval(p.sensitivity)},
          {"fpr", json_interval(p.fpr)},
          {"dor", json_interval(p.dor)},
          {"lr_pos", json_interval(p.lr_pos)},
          {"lr_neg", json_interval(p.lr_neg)},
          {"mean_mu_a", p.mean_mu_a},
          {"mean_mu_b", p.mean_mu_b}};
}

}  // namespace detail

inline nlohmann::ordered_json analysis_to_json(const AnalysisResult& result,
                                               const std::vector<MethodRefit>& refits) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema"] = 1;

  ordered_json studies = ordered_json::array();
  for (const auto& s : result.dataset.studies()) {
    studies.push_back({{"id", s.id},
                       {"label", s.label},
                       {"tp", s.tp},
                       {"fp", s.fp},
                       {"fn", s.fn},
                       {"tn", s.tn}});
  }
  j["dataset"] = {{"name", result.dataset.name()}, {"studies", studies}};

  const auto& m = result.meta;
  j["config"] = {
      {"mcmc",
       {{"iterations", m.mcmc.iterations},
        {"burn_in", m.mcmc.burn_in},
        {"thin", m.mcmc.thin},
        {"chains", m.mcmc.chains},
        {"seed", m.mcmc.seed},
        {"adapt_window", m.mcmc.adapt_window}}},
      {"prior",
       {{"mu_mean", m.prior.mu_mean},
        {"mu_sd", m.prior.mu_sd},
        {"sigma_upper", m.prior.sigma_upper},
        {"rho_lower", m.prior.rho_lower},
        {"rho_upper", m.prior.rho_upper}}},
      {"thresholds",
       {{"srd", m.thresholds.srd},
        {"ssr", m.thresholds.ssr},
        {"p_value", m.thresholds.p_value},
        {"delta_auc", m.thresholds.delta_auc},
        {"rd_dor", m.thresholds.rd_dor}}},
      {"pvalue", {{"outer_draws", m.pvalue.outer_draws}, {"inner_reps", m.pvalue.inner_reps}}},
      {"auc_range", m.auc_range == AucRange::full ? "full" : "observed"}};

  ordered_json seeds = ordered_json::object();
  for (const auto& [name, seed] : m.seeds) seeds[name] = seed;
  j["seeds"] = seeds;

  j["pooled"] = detail::json_pooled(result.pooled);

  ordered_json summary = ordered_json::array();
  for (const auto& p : result.summary.parameters) {
    summary.push_back({{"name", p.name},
                       {"mean", p.mean},
                       {"sd", p.sd},
                       {"q025", p.q025},
                       {"q975", p.q975},
                       {"r_hat", p.r_hat},
                       {"ess", p.ess}});
  }
  j["posterior_summary"] = summary;

  j["sroc"] = {{"intercept", result.sroc.intercept},
               {"slope", result.sroc.slope},
               {"auc", detail::json_interval(result.auc)},
               {"range", {result.sroc.range.first, result.sroc.range.second}},
               {"grid_size", result.sroc.grid.size()}};

  ordered_json loo = ordered_json::array();
  for (const auto& l : result.loo) {
    ordered_json e = {{"study_id", l.study_id}, {"ok", l.ok}};
    if (l.ok) {
      e["pooled"] = detail::json_pooled(l.pooled);
      e["auc"] = l.auc;
    } else {
      e["error"] = l.error;
    }
    loo.push_back(std::move(e));
  }
  j["loo_fits"] = loo;

  ordered_json influence = ordered_json::array();
  for (const auto& rec : result.influence) {
    ordered_json e = {{"study_id", rec.study_id},
                      {"label", rec.label},
                      {"y_a", rec.observed.y_a},
                      {"y_b", rec.observed.y_b},
                      {"corrected", rec.observed.corrected},
                      {"complete", rec.complete}};
    if (rec.complete) {
      e["rd"] = {{"rd_a", rec.rd.rd_a},
                 {"rd_b", rec.rd.rd_b},
                 {"srd", rec.rd.srd},
                 {"ard", rec.rd.ard},
                 {"rd_dor", rec.rd.rd_dor}};
      e["sr"] = {{"sr_a", rec.sr.sr_a},
                 {"sr_b", rec.sr.sr_b},
                 {"sr_dor", rec.sr.sr_dor},
                 {"asr", rec.sr.asr},
                 {"ssr", rec.sr.ssr.has_value() ? nlohmann::ordered_json(*rec.sr.ssr)
                                                : nlohmann::ordered_json(nullptr)}};
      e["delta_auc"] = rec.delta_auc;
    }
    e["pv"] = {{"p_a", rec.pv.p_a},
               {"p_b", rec.pv.p_b},
               {"p_sd", rec.pv.p_sd.has_value() ? nlohmann::ordered_json(*rec.pv.p_sd)
                                                : nlohmann::ordered_json(nullptr)},
               {"p_ad", rec.pv.p_ad},
               {"p_dor", rec.pv.p_dor}};
    e["flags"] = {{"srd", rec.flags.srd},
                  {"ssr", rec.flags.ssr},
                  {"p_value", rec.flags.p_value},
                  {"rd_dor", rec.flags.rd_dor},
                  {"delta_auc", rec.flags.delta_auc}};
    e["notes"] = rec.notes;
    influence.push_back(std::move(e));
  }
  j["influence"] = influence;

  ordered_json refits_json = ordered_json::array();
  for (const auto& r : refits) {
    refits_json.push_back({{"method", r.method},
                           {"label", r.method_label},
                           {"removed", r.removed},
                           {"refitted", r.refitted},
                           {"pooled", detail::json_pooled(r.pooled)},
                           {"auc", detail::json_interval(r.auc)},
                           {"sroc", {{"intercept", r.sroc.intercept}, {"slope", r.sroc.slope}}}});
  }
  j["refits"] = refits_json;

  j["warnings"] = result.summary.warnings;
  j["errors"] = result.errors;
  return j;
}

inline std::string diagnostics_csv(const AnalysisResult& result) {
  std::string out =
      "id,label,sens_obs,fpr_obs,y_a,y_b,corrected,rd_a,rd_b,srd,ard,rd_dor,"
      "sr_a,sr_b,sr_dor,ssr,asr,p_a,p_b,p_sd,p_ad,p_dor,delta_auc,"
      "flag_srd,flag_ssr,flag_pvalue,flag_rd_dor,flag_dauc\n";
  using detail::csv_num;
  for (std::size_t i = 0; i < result.dataset.size(); ++i) {
    const auto& s = result.dataset.studies()[i];
    const auto& rec = result.influence[i];
    const auto [sens, fpr] = observed_proportions(s);
    out += std::to_string(s.id) + ',' + csv_quote(s.label) + ',';
    out += csv_num(sens) + ',' + csv_num(fpr) + ',';
    out += csv_num(rec.observed.y_a) + ',' + csv_num(rec.observed.y_b) + ',';
    out += rec.observed.corrected ? "1," : "0,";
    if (rec.complete) {
      out += csv_num(rec.rd.rd_a) + ',' + csv_num(rec.rd.rd_b) + ',' + csv_num(rec.rd.srd) +
             ',' + csv_num(rec.rd.ard) + ',' + csv_num(rec.rd.rd_dor) + ',';
      out += csv_num(rec.sr.sr_a) + ',' + csv_num(rec.sr.sr_b) + ',' + csv_num(rec.sr.sr_dor) +
             ',';
      out += (rec.sr.ssr.has_value() ? csv_num(*rec.sr.ssr) : std::string()) + ',';
      out += csv_num(rec.sr.asr) + ',';
    } else {
      out += ",,,,,,,,,,";
    }
    out += csv_num(rec.pv.p_a) + ',' + csv_num(rec.pv.p_b) + ',';
    out += (rec.pv.p_sd.has_value() ? csv_num(*rec.pv.p_sd) : std::string()) + ',';
    out += csv_num(rec.pv.p_ad) + ',' + csv_num(rec.pv.p_dor) + ',';
    out += (rec.complete ? csv_num(rec.delta_auc) : std::string()) + ',';
    out += std::string(rec.flags.srd ? "1" : "0") + ',' + (rec.flags.ssr ? "1" : "0") + ',' +
           (rec.flags.p_value ? "1" : "0") + ',' + (rec.flags.rd_dor ? "1" : "0") + ',' +
           (rec.flags.delta_auc ? "1" : "0") + '\n';
  }
  return out;
}

inline std::string pooled_csv(const AnalysisResult& result,
                              const std::vector<MethodRefit>& refits) {
  using detail::csv_num;
  std::string out =
      "analysis,removed_studies,sensitivity,sens_lo,sens_hi,fpr,fpr_lo,fpr_hi,"
      "auc,auc_lo,auc_hi,dor,dor_lo,dor_hi\n";
  auto row = [&](const std::string& name, const std::string& removed,
                 const PooledEstimates& p, const IntervalEstimate& auc) {
    out += csv_quote(name) + ',' + csv_quote(removed) + ',';
    out += csv_num(p.sensitivity.value) + ',' + csv_num(p.sensitivity.lo) + ',' +
           csv_num(p.sensitivity.hi) + ',';
    out += csv_num(p.fpr.value) + ',' + csv_num(p.fpr.lo) + ',' + csv_num(p.fpr.hi) + ',';
    out += csv_num(auc.value) + ',' + csv_num(auc.lo) + ',' + csv_num(auc.hi) + ',';
    out += csv_num(p.dor.value) + ',' + csv_num(p.dor.lo) + ',' + csv_num(p.dor.hi) + '\n';
  };
  row("all studies", "", result.pooled, result.auc);
  for (const auto& r : refits) {
    if (!r.refitted) continue;
    std::string removed;
    for (std::size_t i = 0; i < r.removed.size(); ++i) {
      if (i) removed += ' ';
      removed += std::to_string(r.removed[i]);
    }
    row("without " + r.method_label, removed, r.pooled, r.auc);
  }
  return out;
}

inline std::string sroc_curve_csv(const SrocCurve& curve) {
  std::string out = "fpr,sens\n";
  for (const auto& [fpr, sens] : curve.grid)
    out += detail::csv_num(fpr) + ',' + detail::csv_num(sens) + '\n';
  return out;
}

// chain dump in the exchange format `param,draw_index,chain,value`
inline std::string hyper_chains_csv(const std::vector<PosteriorChain>& chains) {
  std::string out = "param,draw_index,chain,value\n";
  const char* names[5] = {"mu_A", "mu_B", "sigma_A", "sigma_B", "rho"};
  for (const auto& c : chains) {
    for (std::size_t t = 0; t < c.draws(); ++t) {
      const auto& p = c.params[t];
      const double vals[5] = {p.mu_a, p.mu_b, p.sigma_a, p.sigma_b, p.rho};
      for (int k = 0; k < 5; ++k) {
        out += std::string(names[k]) + ',' + std::to_string(t) + ',' +
               std::to_string(c.chain_index) + ',' + detail::csv_num(vals[k]) + '\n';
      }
    }
  }
  return out;
}

// Runs the full analysis plus the per-method sensitivity refits and writes
// the whole bundle. Nothing is written until every artifact has been
// computed, so a failed run leaves no partial bundle.
// Exit codes: 0 success, 2 input/validation error, 3 fit failure.
inline int cmd_analyze(RunConfig cfg, std::ostream& log, ReportBundle* bundle_out = nullptr) {
  namespace fs = std::filesystem;
  if (cfg.fast) {
    const auto fast = McmcConfig::fast_profile();
    cfg.mcmc.iterations = fast.iterations;
    cfg.mcmc.burn_in = fast.burn_in;
    cfg.mcmc.chains = fast.chains;
  }

  AnalysisResult result;
  std::vector<MethodRefit> refits;
  std::vector<PosteriorChain> full_chains_for_dump;
  try {
    const Dataset data = load_csv(cfg.input_path);
    const auto t0 = std::chrono::steady_clock::now();
    result = run_full_analysis(data, cfg.prior, cfg.mcmc, cfg.thresholds, cfg.pvalue,
                               cfg.auc_range);
    refits = compute_method_refits(result);
    result.meta.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  } catch (const DataError& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  } catch (const FitError& e) {
    log << "fit error: " << e.what() << "\n";
    return 3;
  }

  // chain dump re-runs the (deterministic) full fit only when asked to
  std::map<std::string, std::string> contents;
  contents["analysis.json"] = analysis_to_json(result, refits).dump(2) + "\n";
  contents["diagnostics.csv"] = diagnostics_csv(result);
  contents["pooled.csv"] = pooled_csv(result, refits);
  contents["sroc_curve.csv"] = sroc_curve_csv(result.sroc);
  if (cfg.dump_chains) {
    std::vector<PosteriorChain> chains(cfg.mcmc.chains);
    for (int c = 0; c < cfg.mcmc.chains; ++c)
      chains[c] = run_chain(result.dataset, cfg.prior, cfg.mcmc, c);
    contents["chains.csv"] = hyper_chains_csv(chains);
  }

  try {
    fs::create_directories(cfg.out_dir);
    ReportBundle bundle;
    bundle.out_dir = cfg.out_dir;
    auto write_file = [&](const std::string& name, const std::string& bytes) {
      const std::string path = cfg.out_dir + "/" + name;
      std::ofstream out(path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + path);
      out << bytes;
      if (!out) throw std::runtime_error("write failed: " + path);
      bundle.files[name] = sha256_hex(bytes);
    };
    for (const auto& [name, bytes] : contents) write_file(name, bytes);
    if (cfg.figures) {
      for (const auto& name : render_figures(result, refits, cfg.out_dir)) {
        std::ifstream in(cfg.out_dir + "/" + name, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        bundle.files[name] = sha256_hex(ss.str());
      }
    }
    nlohmann::json manifest;  // alphabetical keys, deterministic bytes
    manifest["schema"] = 1;
    nlohmann::json files = nlohmann::json::object();
    for (const auto& [name, sha] : bundle.files) files[name] = sha;
    manifest["files"] = files;
    {
      const std::string path = cfg.out_dir + "/manifest.json";
      std::ofstream out(path, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + path);
      out << manifest.dump(2) << "\n";
    }
    if (bundle_out) *bundle_out = bundle;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  }

  log << "analysis complete in " << detail::csv_num(result.meta.wall_seconds) << " s; bundle in "
      << cfg.out_dir << "\n";
  for (const auto& w : result.summary.warnings) log << "warning: " << w << "\n";
  for (const auto& e : result.errors) log << "warning: " << e << "\n";
  return 0;
}

// Writes a synthetic dataset CSV in the ingestion format.
inline int cmd_simulate(const ModelParams& params, const std::vector<std::pair<long, long>>& sizes,
                        std::uint64_t seed, const std::string& out_path, std::ostream& log) {
  try {
    const Dataset d = simulate_dataset(params, sizes, seed);
    save_csv(d, out_path);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  }
  log << "wrote " << sizes.size() << " studies to " << out_path << "\n";
  return 0;
}

// Runs the sampler validation suite and writes validation.json.
// Exit codes: 0 all checks passed, 1 a check failed, 2 usage error.
inline int cmd_validate_sampler(std::uint64_t seed, int reps, const std::string& out_path,
                                std::ostream& log, bool break_kernel = false) {
  if (reps < 20) {
    log << "error: reps must be >= 20\n";
    return 2;
  }
  const ValidationReport report = validate_sampler(seed, reps, break_kernel);
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["seed"] = seed;
  j["reps"] = reps;
  nlohmann::ordered_json checks = nlohmann::ordered_json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    log << (c.passed ? "[pass] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
  }
  j["checks"] = checks;
  j["all_passed"] = report.all_passed();
  if (!out_path.empty()) {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
      log << "error: cannot write " << out_path << "\n";
      return 2;
    }
    out << j.dump(2) << "\n";
  }
  return report.all_passed() ? 0 : 1;
}

}  // namespace dtameta
