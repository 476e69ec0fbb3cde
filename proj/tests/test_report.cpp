#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "dtameta/report.hpp"

using namespace dtameta;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string temp_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  return dir.string();
}

RunConfig tiny_run(const std::string& input, const std::string& out) {
  RunConfig cfg;
  cfg.input_path = input;
  cfg.out_dir = out;
  cfg.mcmc.iterations = 3500;
  cfg.mcmc.burn_in = 1000;
  cfg.mcmc.thin = 5;
  cfg.mcmc.chains = 1;
  cfg.mcmc.seed = 42;
  cfg.pvalue.outer_draws = 120;
  cfg.pvalue.inner_reps = 60;
  return cfg;
}

std::string make_input(std::uint64_t seed) {
  ModelParams p;
  p.mu_a = -0.3;
  p.mu_b = -1.3;
  p.sigma_a = 0.5;
  p.sigma_b = 0.5;
  p.rho = 0.3;
  const auto path = (fs::temp_directory_path() / ("report_input_" + std::to_string(seed) + ".csv"))
                        .string();
  save_csv(simulate_dataset(p, std::vector<std::pair<long, long>>(6, {100, 140}), seed), path);
  return path;
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text)
    if (c == '\n') ++n;
  return n;
}

}  // namespace

TEST_CASE("simulate command round-trips through the loader") {
  const auto out1 = (fs::temp_directory_path() / "sim1.csv").string();
  const auto out2 = (fs::temp_directory_path() / "sim2.csv").string();
  ModelParams p;
  p.mu_a = 0.0;
  p.mu_b = 0.0;
  p.sigma_a = 0.01;
  p.sigma_b = 0.01;
  std::ostringstream log;
  const std::vector<std::pair<long, long>> sizes(10, {100000, 100000});
  REQUIRE(cmd_simulate(p, sizes, 9, out1, log) == 0);
  REQUIRE(cmd_simulate(p, sizes, 9, out2, log) == 0);
  CHECK(slurp(out1) == slurp(out2));

  const Dataset d = load_csv(out1);
  REQUIRE(d.size() == 10);
  for (const auto& s : d.studies()) {
    const auto [sens, fpr] = observed_proportions(s);
    CHECK_THAT(sens, Catch::Matchers::WithinAbs(0.5, 0.01));
    CHECK_THAT(fpr, Catch::Matchers::WithinAbs(0.5, 0.01));
  }

  ModelParams bad;
  bad.sigma_a = -2.0;
  CHECK(cmd_simulate(bad, sizes, 9, out1, log) == 2);
}

TEST_CASE("analyze command writes a complete deterministic bundle") {
  const std::string input = make_input(314);
  const std::string dir1 = temp_dir("bundle1");
  const std::string dir2 = temp_dir("bundle2");

  std::ostringstream log;
  RunConfig cfg = tiny_run(input, dir1);
  cfg.figures = true;
  ReportBundle bundle;
  REQUIRE(cmd_analyze(cfg, log, &bundle) == 0);

  const std::vector<std::string> expected = {
      "analysis.json", "diagnostics.csv", "pooled.csv",
      "sroc_curve.csv", "fig1_scatter.svg", "fig2_distances.svg",
      "fig3_dauc.svg",  "fig4_sroc_panels.svg"};
  for (const auto& name : expected) {
    INFO(name);
    REQUIRE(fs::exists(fs::path(dir1) / name));
    CHECK(fs::file_size(fs::path(dir1) / name) > 0);
    REQUIRE(bundle.files.count(name) == 1);
    // manifest hash matches the bytes on disk
    CHECK(bundle.files.at(name) == sha256_hex(slurp(dir1 + "/" + name)));
  }
  REQUIRE(fs::exists(fs::path(dir1) / "manifest.json"));

  // manifest agrees with the returned bundle
  const auto manifest = nlohmann::json::parse(slurp(dir1 + "/manifest.json"));
  CHECK(manifest.at("schema") == 1);
  CHECK(manifest.at("files").size() == bundle.files.size());

  // analysis.json parses, round-trips byte-identically, and is consistent
  const std::string analysis_bytes = slurp(dir1 + "/analysis.json");
  const auto analysis = nlohmann::ordered_json::parse(analysis_bytes);
  CHECK(analysis.at("schema") == 1);
  CHECK(analysis.dump(2) + "\n" == analysis_bytes);
  CHECK(analysis.at("influence").size() == 6);
  CHECK(analysis.at("loo_fits").size() == 6);

  // diagnostics.csv has one row per study
  CHECK(count_lines(slurp(dir1 + "/diagnostics.csv")) == 1 + 6);

  // pooled.csv has the all-studies row plus one per non-empty flag set
  int non_empty = 0;
  for (const auto& r : analysis.at("refits"))
    if (r.at("refitted").get<bool>()) ++non_empty;
  CHECK(count_lines(slurp(dir1 + "/pooled.csv")) == 1 + 1 + non_empty);

  // same seed, second directory: byte-identical outputs
  RunConfig cfg2 = tiny_run(input, dir2);
  cfg2.figures = true;
  REQUIRE(cmd_analyze(cfg2, log) == 0);
  for (const auto& name : expected) CHECK(slurp(dir1 + "/" + name) == slurp(dir2 + "/" + name));
  CHECK(slurp(dir1 + "/manifest.json") == slurp(dir2 + "/manifest.json"));
}

TEST_CASE("analyze exit codes") {
  std::ostringstream log;
  SECTION("missing input file") {
    RunConfig cfg = tiny_run("/nonexistent/input.csv", temp_dir("bundle_missing"));
    CHECK(cmd_analyze(cfg, log) == 2);
    CHECK_FALSE(fs::exists(cfg.out_dir));
  }
  SECTION("malformed input leaves no partial bundle") {
    const auto path = (fs::temp_directory_path() / "malformed.csv").string();
    std::ofstream out(path);
    out << "id,label,tp,fp,fn,tn\n1,x,3,-4,5,6\n2,y,1,1,1,1\n3,z,1,1,1,1\n";
    out.close();
    RunConfig cfg = tiny_run(path, temp_dir("bundle_malformed"));
    CHECK(cmd_analyze(cfg, log) == 2);
    CHECK_FALSE(fs::exists(cfg.out_dir));
  }
  SECTION("invalid mcmc settings") {
    RunConfig cfg = tiny_run(make_input(5), temp_dir("bundle_badcfg"));
    cfg.mcmc.thin = 0;
    CHECK(cmd_analyze(cfg, log) == 2);
  }
}

TEST_CASE("figures are deterministic and structurally sane") {
  const std::string input = make_input(271);
  const std::string dir = temp_dir("bundle_figs");
  RunConfig cfg = tiny_run(input, dir);
  cfg.figures = true;
  std::ostringstream log;
  REQUIRE(cmd_analyze(cfg, log) == 0);
  const std::string svg1 = slurp(dir + "/fig1_scatter.svg");
  CHECK(svg1.find("<svg") == 0);
  CHECK(svg1.find("circle") != std::string::npos);
  const std::string svg2 = slurp(dir + "/fig2_distances.svg");
  CHECK(svg2.find("(c) SRD") != std::string::npos);
  CHECK(svg2.find("(h) SSR") != std::string::npos);
  const std::string svg4 = slurp(dir + "/fig4_sroc_panels.svg");
  CHECK(svg4.find("All studies") != std::string::npos);
  CHECK(svg4.find("polyline") != std::string::npos);
}

TEST_CASE("validate-sampler usage error") {
  std::ostringstream log;
  CHECK(cmd_validate_sampler(1, 10, "", log) == 2);
}

TEST_CASE("chain dump format") {
  PosteriorChain c;
  c.chain_index = 1;
  ModelParams p;
  p.mu_a = 0.25;
  c.params.push_back(p);
  const std::string csv = hyper_chains_csv({c});
  CHECK(csv.rfind("param,draw_index,chain,value\n", 0) == 0);
  CHECK(csv.find("mu_A,0,1,0.25") != std::string::npos);
  CHECK(count_lines(csv) == 1 + 5);
}
