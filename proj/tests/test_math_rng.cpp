#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dtameta/math.hpp"
#include "dtameta/rng.hpp"

using namespace dtameta;

TEST_CASE("logit and invlogit") {
  CHECK(logit(0.5) == 0.0);
  CHECK(invlogit(0.0) == 0.5);
  CHECK_THAT(invlogit(2.0), Catch::Matchers::WithinAbs(0.8807970779778823, 1e-15));
  for (double x : {-15.0, -3.0, -0.5, 0.0, 0.7, 4.0, 15.0}) {
    CHECK_THAT(logit(invlogit(x)), Catch::Matchers::WithinAbs(x, 1e-9));
  }
  // beyond ~|x|=20 the round trip degrades with the precision of 1-p
  CHECK_THAT(logit(invlogit(25.0)), Catch::Matchers::WithinAbs(25.0, 1e-4));
  // saturates without producing NaN/inf
  CHECK(invlogit(-800.0) >= 0.0);
  CHECK(invlogit(800.0) <= 1.0);
}

TEST_CASE("log1pexp stable at extremes") {
  CHECK_THAT(log1pexp(0.0), Catch::Matchers::WithinAbs(std::log(2.0), 1e-15));
  CHECK_THAT(log1pexp(-800.0), Catch::Matchers::WithinAbs(0.0, 1e-300));
  CHECK_THAT(log1pexp(800.0), Catch::Matchers::WithinAbs(800.0, 1e-9));
  CHECK_THAT(log1pexp(3.0), Catch::Matchers::WithinAbs(std::log1p(std::exp(3.0)), 1e-12));
}

TEST_CASE("Sym2 quadratic form and guards") {
  const Sym2 id{1.0, 0.0, 1.0};
  CHECK(id.det() == 1.0);
  CHECK_THAT(id.quad_form(1.0, 0.0), Catch::Matchers::WithinAbs(1.0, 1e-15));
  const Sym2 diag{4.0, 0.0, 1.0};
  CHECK_THAT(diag.quad_form(2.0, 1.0), Catch::Matchers::WithinAbs(2.0, 1e-15));
  const Sym2 singular{1.0, 1.0, 1.0};
  CHECK_FALSE(singular.invertible());
  CHECK(diag.invertible());
}

TEST_CASE("quantiles, type 7") {
  std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 4.0);
  CHECK_THAT(quantile(v, 0.5), Catch::Matchers::WithinAbs(2.5, 1e-15));
  CHECK_THAT(quantile(v, 0.25), Catch::Matchers::WithinAbs(1.75, 1e-15));
}

TEST_CASE("chi-square tail against the exact dof-2 form") {
  // for 2 degrees of freedom the survival function is exactly exp(-x/2)
  for (double x : {0.1, 1.0, 2.5, 4.61, 9.0, 20.0}) {
    CHECK_THAT(chi2_sf(x, 2.0), Catch::Matchers::WithinAbs(std::exp(-0.5 * x), 1e-10));
  }
  // 4.61 sits at the upper 10th percentile of chi2(2)
  CHECK_THAT(chi2_sf(4.61, 2.0), Catch::Matchers::WithinAbs(0.0998, 5e-4));
  CHECK_THAT(chi2_cdf(4.61, 2.0) + chi2_sf(4.61, 2.0), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("normal cdf") {
  CHECK(normal_cdf(0.0) == 0.5);
  CHECK_THAT(normal_cdf(1.959963984540054), Catch::Matchers::WithinAbs(0.975, 1e-9));
  CHECK_THAT(normal_cdf(-1.0) + normal_cdf(1.0), Catch::Matchers::WithinAbs(1.0, 1e-12));
}

TEST_CASE("KS p-value endpoints") {
  CHECK(ks_pvalue(0.0, 100) == 1.0);
  CHECK(ks_pvalue(0.9, 100) < 1e-8);
  // uniform sample has small D
  std::vector<double> u;
  for (int i = 0; i < 1000; ++i) u.push_back((i + 0.5) / 1000.0);
  CHECK(ks_statistic_uniform(u) < 0.001);
}

TEST_CASE("rng determinism and stream separation") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  CHECK(Rng::mix(1, 2) != Rng::mix(1, 3));
  CHECK(Rng::mix(1, 2) != Rng::mix(2, 2));
  (void)c;
}

TEST_CASE("uniform stays inside the open interval") {
  Rng rng(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("normal sampler moments and distribution") {
  Rng rng(11);
  RunningMoments m;
  double sum3 = 0.0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    m.add(z);
    sum3 += z * z * z;
  }
  CHECK_THAT(m.mean, Catch::Matchers::WithinAbs(0.0, 0.006));
  CHECK_THAT(m.variance(), Catch::Matchers::WithinAbs(1.0, 0.01));
  CHECK_THAT(sum3 / n, Catch::Matchers::WithinAbs(0.0, 0.02));

  // KS of Phi(z) against uniform
  std::vector<double> u;
  Rng rng2(12);
  for (int i = 0; i < 20000; ++i) u.push_back(normal_cdf(rng2.normal()));
  const double d = ks_statistic_uniform(u);
  CHECK(ks_pvalue(d, u.size()) > 1e-3);
}

namespace {

double binom_pmf(long n, long k, double p) {
  return std::exp(log_choose(n, k) + static_cast<double>(k) * std::log(p) +
                  static_cast<double>(n - k) * std::log1p(-p));
}

// chi-square goodness of fit of sampled counts against the exact pmf,
// pooling cells until each expected count is at least 10
double binomial_gof_pvalue(long n, double p, int draws, std::uint64_t seed) {
  Rng rng(seed);
  const double mean = n * p;
  const double sd = std::sqrt(n * p * (1.0 - p));
  const long lo = std::max(0L, static_cast<long>(std::floor(mean - 8.0 * sd)) - 2);
  const long hi = std::min(n, static_cast<long>(std::ceil(mean + 8.0 * sd)) + 2);
  std::vector<long> counts(hi - lo + 1, 0);
  long below = 0, above = 0;
  for (int i = 0; i < draws; ++i) {
    const long k = rng.binomial(n, p);
    REQUIRE(k >= 0);
    REQUIRE(k <= n);
    if (k < lo)
      ++below;
    else if (k > hi)
      ++above;
    else
      ++counts[k - lo];
  }
  REQUIRE(below + above < draws / 1000 + 10);

  std::vector<double> observed, expected;
  double acc_obs = 0.0, acc_exp = 0.0;
  for (long k = lo; k <= hi; ++k) {
    acc_obs += counts[k - lo];
    acc_exp += binom_pmf(n, k, p) * draws;
    if (acc_exp >= 10.0) {
      observed.push_back(acc_obs);
      expected.push_back(acc_exp);
      acc_obs = acc_exp = 0.0;
    }
  }
  if (acc_exp > 0.0 && !expected.empty()) {
    observed.back() += acc_obs;
    expected.back() += acc_exp;
  }
  if (observed.size() < 3) return 1.0;  // nearly-degenerate pmf; nothing to test
  return chi2_gof_pvalue(observed, expected);
}

}  // namespace

TEST_CASE("binomial sampler matches the exact pmf across regimes") {
  // covers inversion (small n*p) and the transformed-rejection path
  struct Case {
    long n;
    double p;
  };
  const Case cases[] = {{50, 0.3},   {500, 0.007}, {1000, 0.5},
                        {505, 0.88}, {40, 0.02},   {200, 0.97}};
  std::uint64_t seed = 1000;
  for (const auto& c : cases) {
    const double pval = binomial_gof_pvalue(c.n, c.p, 100000, seed++);
    INFO("n=" << c.n << " p=" << c.p << " gof p=" << pval);
    CHECK(pval > 1e-4);
  }
}

TEST_CASE("binomial sampler edge cases and large n moments") {
  Rng rng(2024);
  CHECK(rng.binomial(10, 0.0) == 0);
  CHECK(rng.binomial(10, 1.0) == 10);
  CHECK(rng.binomial(0, 0.3) == 0);
  RunningMoments m;
  const long n = 1000000;
  for (int i = 0; i < 2000; ++i) m.add(static_cast<double>(rng.binomial(n, 0.5)) / n);
  CHECK_THAT(m.mean, Catch::Matchers::WithinAbs(0.5, 5e-5));
  CHECK_THAT(m.sd() * std::sqrt(static_cast<double>(n)), Catch::Matchers::WithinAbs(0.5, 0.05));
}

TEST_CASE("chi2 gof helper rejects garbage and accepts uniform counts") {
  std::vector<double> obs{10, 10, 10, 10};
  std::vector<double> exp{10, 10, 10, 10};
  CHECK(chi2_gof_pvalue(obs, exp) == 1.0);
  std::vector<double> bad{40, 0, 0, 0};
  CHECK(chi2_gof_pvalue(bad, exp) < 1e-10);
}
