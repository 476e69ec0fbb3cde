#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dtameta/rng.hpp"
#include "dtameta/sroc.hpp"

using namespace dtameta;

namespace {

ModelParams params(double mu_a, double mu_b, double sa, double sb, double rho) {
  ModelParams p;
  p.mu_a = mu_a;
  p.mu_b = mu_b;
  p.sigma_a = sa;
  p.sigma_b = sb;
  p.rho = rho;
  return p;
}

// brute-force area: uniform FPR samples through the same line
double mc_auc(const SrocLine& line, int n, std::uint64_t seed) {
  Rng rng(seed);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double fpr = rng.uniform();
    sum += invlogit(line.intercept + line.slope * logit(fpr));
  }
  return sum / n;
}

}  // namespace

TEST_CASE("sroc line") {
  const auto l0 = sroc_line(params(0.7, -1.0, 1.0, 1.0, 0.0));
  CHECK(l0.slope == 0.0);
  CHECK(l0.intercept == 0.7);

  const auto l1 = sroc_line(params(0.0, 0.0, 1.5, 1.5, 1.0));
  CHECK_THAT(l1.slope, Catch::Matchers::WithinAbs(1.0, 1e-15));
  CHECK_THAT(l1.intercept, Catch::Matchers::WithinAbs(0.0, 1e-15));

  const auto l2 = sroc_line(params(1.0, -1.0, 2.0, 1.0, 0.5));
  CHECK_THAT(l2.slope, Catch::Matchers::WithinAbs(1.0, 1e-15));
  CHECK_THAT(l2.intercept, Catch::Matchers::WithinAbs(2.0, 1e-15));

  CHECK_THROWS_AS(sroc_line(params(0, 0, 1, 0, 0)), std::invalid_argument);
}

TEST_CASE("sroc points") {
  const auto flat = sroc_points({0.0, 0.0}, 11, {0.0, 1.0});
  REQUIRE(flat.size() == 11);
  for (const auto& [fpr, sens] : flat) CHECK(sens == 0.5);

  const auto ident = sroc_points({0.0, 1.0}, 101, {0.0, 1.0});
  for (const auto& [fpr, sens] : ident) CHECK_THAT(sens, Catch::Matchers::WithinAbs(fpr, 1e-9));

  // middle of a symmetric range around 0.5: sens = invlogit(2 + logit(0.5))
  const auto shifted = sroc_points({2.0, 1.0}, 3, {0.4, 0.6});
  CHECK_THAT(shifted[1].second, Catch::Matchers::WithinAbs(0.8807970779778823, 1e-6));

  // monotone when the slope is positive
  const auto up = sroc_points({0.3, 0.8}, 200, {0.0, 1.0});
  for (std::size_t i = 1; i < up.size(); ++i) CHECK(up[i].second > up[i - 1].second);

  CHECK_THROWS_AS(sroc_points({0, 1}, 1, {0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(sroc_points({0, 1}, 10, {0.9, 0.1}), std::invalid_argument);
}

TEST_CASE("auc of flat and identity curves") {
  for (double s : {0.2, 0.5, 0.9}) {
    const auto grid = sroc_points({logit(s), 0.0}, 1000, {0.0, 1.0});
    CHECK_THAT(auc(grid), Catch::Matchers::WithinAbs(s, 1e-9));
  }
  const auto ident = sroc_points({0.0, 1.0}, 1000, {0.0, 1.0});
  CHECK_THAT(auc(ident), Catch::Matchers::WithinAbs(0.5, 1e-3));
}

TEST_CASE("auc rejects a non-monotone grid") {
  std::vector<std::pair<double, double>> bad{{0.1, 0.2}, {0.5, 0.4}, {0.3, 0.6}};
  CHECK_THROWS_AS(auc(bad), std::invalid_argument);
  std::vector<std::pair<double, double>> tiny{{0.2, 0.3}};
  CHECK_THROWS_AS(auc(tiny), std::invalid_argument);
}

TEST_CASE("auc converges in grid size and matches brute force") {
  Rng rng(404);
  for (int trial = 0; trial < 10; ++trial) {
    SrocLine line{rng.uniform(-3.0, 3.0), rng.uniform(-2.0, 2.0)};
    const double a1000 = auc(sroc_points(line, 1000, {0.0, 1.0}));
    const double a2000 = auc(sroc_points(line, 2000, {0.0, 1.0}));
    CHECK_THAT(a2000, Catch::Matchers::WithinAbs(a1000, 1e-4));
    const double brute = mc_auc(line, 200000, 1234 + trial);
    CHECK_THAT(a1000, Catch::Matchers::WithinAbs(brute, 2e-3 + 3.0 * 0.5 / std::sqrt(200000.0)));
  }
}

TEST_CASE("delta auc") {
  CHECK(delta_auc(0.6, 0.6) == 0.0);
  CHECK_THAT(delta_auc(0.588, 0.624), Catch::Matchers::WithinAbs(-0.036, 1e-12));
  CHECK(std::abs(delta_auc(1.0, 0.0)) <= 1.0);
}

TEST_CASE("make_sroc_curve assembles a consistent bundle") {
  const auto p = params(0.2, -1.2, 0.8, 1.1, 0.6);
  const SrocCurve c = make_sroc_curve(p, 500, {0.0, 1.0});
  CHECK(c.grid.size() == 500);
  CHECK(c.auc >= 0.0);
  CHECK(c.auc <= 1.0);
  CHECK_THAT(c.slope, Catch::Matchers::WithinAbs(0.6 * 0.8 / 1.1, 1e-12));
  for (const auto& [fpr, sens] : c.grid) {
    CHECK(sens > 0.0);
    CHECK(sens < 1.0);
  }
}

TEST_CASE("observed fpr range") {
  std::vector<StudyRecord> studies;
  auto mk = [](int id, long tp, long fp, long fn, long tn) {
    StudyRecord s;
    s.id = id;
    s.tp = tp;
    s.fp = fp;
    s.fn = fn;
    s.tn = tn;
    return s;
  };
  studies.push_back(mk(1, 5, 1, 5, 9));   // fpr 0.1
  studies.push_back(mk(2, 5, 6, 5, 4));   // fpr 0.6
  studies.push_back(mk(3, 5, 3, 5, 7));   // fpr 0.3
  const Dataset d(studies, "t");
  const auto r = observed_fpr_range(d);
  CHECK_THAT(r.first, Catch::Matchers::WithinAbs(0.1, 1e-12));
  CHECK_THAT(r.second, Catch::Matchers::WithinAbs(0.6, 1e-12));
  CHECK(auc_range_for(AucRange::full, d).first == 0.0);
  CHECK(auc_range_for(AucRange::observed, d).second == r.second);
}

TEST_CASE("restricted-range auc equals full-range auc for a flat curve") {
  const SrocLine line{logit(0.7), 0.0};
  const auto grid = sroc_points(line, 400, {0.2, 0.8});
  CHECK_THAT(auc(grid, {0.2, 0.8}), Catch::Matchers::WithinAbs(0.7, 1e-9));
}
