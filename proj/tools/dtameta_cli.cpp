// Command-line front end for the DTA meta-analysis influence toolkit:
//   analyze          fit the bivariate model and write the full report bundle
//   simulate         draw a synthetic dataset from the generative model
//   validate-sampler run the sampler correctness suite

#include <cstdint>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "dtameta/dtameta.hpp"

namespace {

// parses "na:nb,na:nb,..." into study sizes
std::vector<std::pair<long, long>> parse_sizes(const std::string& text) {
  std::vector<std::pair<long, long>> sizes;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string item = text.substr(pos, comma - pos);
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos)
      throw CLI::ValidationError("--sizes", "expected na:nb pairs, got '" + item + "'");
    sizes.emplace_back(std::stol(item.substr(0, colon)), std::stol(item.substr(colon + 1)));
    pos = comma + 1;
  }
  return sizes;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian bivariate meta-analysis of diagnostic test accuracy with "
               "outlier and influence diagnostics"};
  app.require_subcommand(1);

  // --- analyze ---
  dtameta::RunConfig cfg;
  std::string auc_range = "full";
  auto* analyze = app.add_subcommand("analyze", "run the full influence analysis");
  analyze->add_option("--input", cfg.input_path, "input CSV (id,label,tp,fp,fn,tn)")
      ->required();
  analyze->add_option("--out", cfg.out_dir, "output directory for the report bundle")
      ->required();
  analyze->add_option("--iters", cfg.mcmc.iterations, "MCMC iterations per chain");
  analyze->add_option("--burnin", cfg.mcmc.burn_in, "burn-in iterations");
  analyze->add_option("--thin", cfg.mcmc.thin, "thinning interval");
  analyze->add_option("--chains", cfg.mcmc.chains, "number of chains");
  analyze->add_option("--seed", cfg.mcmc.seed, "master seed");
  analyze->add_option("--outer", cfg.pvalue.outer_draws, "outer xi draws for p-values");
  analyze->add_option("--inner", cfg.pvalue.inner_reps, "inner replicates per xi draw");
  analyze->add_option("--thr-srd", cfg.thresholds.srd, "SRD flag threshold");
  analyze->add_option("--thr-ssr", cfg.thresholds.ssr, "SSR flag threshold");
  analyze->add_option("--thr-pval", cfg.thresholds.p_value, "Bayesian p-value flag threshold");
  analyze->add_option("--thr-dauc", cfg.thresholds.delta_auc, "|delta AUC| flag threshold");
  analyze->add_option("--thr-rddor", cfg.thresholds.rd_dor, "RD(DOR) flag threshold");
  analyze->add_option("--auc-range", auc_range, "AUC integration range: full|observed")
      ->check(CLI::IsMember({"full", "observed"}));
  analyze->add_flag("--figures", cfg.figures, "also render the SVG figures");
  analyze->add_flag("--fast", cfg.fast, "reduced-cost profile (12000 iters, 2000 burn-in, 2 chains)");
  analyze->add_flag("--dump-chains", cfg.dump_chains, "also write the hyperparameter chain dump");

  // --- simulate ---
  dtameta::ModelParams sim_params;
  std::string sim_sizes_text;
  long sim_studies = 0, sim_na = 100, sim_nb = 100;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "draw a synthetic dataset");
  simulate->add_option("--out", sim_out, "output CSV path")->required();
  simulate->add_option("--mu-a", sim_params.mu_a, "mean logit sensitivity");
  simulate->add_option("--mu-b", sim_params.mu_b, "mean logit FPR");
  simulate->add_option("--sigma-a", sim_params.sigma_a, "between-study SD (logit sensitivity)");
  simulate->add_option("--sigma-b", sim_params.sigma_b, "between-study SD (logit FPR)");
  simulate->add_option("--rho", sim_params.rho, "between-study correlation");
  simulate->add_option("--sizes", sim_sizes_text, "per-study sizes as na:nb,na:nb,...");
  simulate->add_option("--studies", sim_studies, "number of studies (with --na/--nb)");
  simulate->add_option("--na", sim_na, "diseased subjects per study");
  simulate->add_option("--nb", sim_nb, "non-diseased subjects per study");
  simulate->add_option("--seed", sim_seed, "seed");

  // --- validate-sampler ---
  std::uint64_t val_seed = 1;
  int val_reps = 100;
  std::string val_out = "validation.json";
  bool val_break = false;
  auto* validate = app.add_subcommand("validate-sampler", "run the sampler correctness suite");
  validate->add_option("--seed", val_seed, "seed");
  validate->add_option("--reps", val_reps, "simulation-based-calibration replications (>= 20)");
  validate->add_option("--out", val_out, "validation report path");
  validate->add_flag("--break-kernel", val_break,
                     "negative control: force-reject all proposals (must fail)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) {
      cfg.auc_range = auc_range == "full" ? dtameta::AucRange::full : dtameta::AucRange::observed;
      return dtameta::cmd_analyze(cfg, std::cerr);
    }
    if (simulate->parsed()) {
      std::vector<std::pair<long, long>> sizes;
      if (!sim_sizes_text.empty()) {
        sizes = parse_sizes(sim_sizes_text);
      } else if (sim_studies > 0) {
        sizes.assign(static_cast<std::size_t>(sim_studies), {sim_na, sim_nb});
      } else {
        std::cerr << "error: give either --sizes or --studies\n";
        return 2;
      }
      return dtameta::cmd_simulate(sim_params, sizes, sim_seed, sim_out, std::cerr);
    }
    if (validate->parsed()) {
      return dtameta::cmd_validate_sampler(val_seed, val_reps, val_out, std::cerr, val_break);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
