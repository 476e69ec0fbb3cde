#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "dtameta/model.hpp"
#include "dtameta/rng.hpp"

using namespace dtameta;

namespace {

StudyRecord study(int id, long tp, long fp, long fn, long tn) {
  StudyRecord s;
  s.id = id;
  s.label = "s" + std::to_string(id);
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.tn = tn;
  return s;
}

// independent re-derivation of the joint density, written the pedestrian
// way (explicit pmf, explicit 2x2 inverse) so it shares no code with the
// implementation it checks
double oracle_log_joint(const Dataset& d, const ModelParams& p, const RandomEffects& re,
                        const PriorSpec& prior) {
  if (!(p.sigma_a > 0.0 && p.sigma_b > 0.0 && std::abs(p.rho) < 1.0)) return kNegInf;
  if (!(p.sigma_a < prior.sigma_upper && p.sigma_b < prior.sigma_upper)) return kNegInf;
  if (!(p.rho > prior.rho_lower && p.rho < prior.rho_upper)) return kNegInf;

  auto dbinom = [](long k, long n, double prob) {
    return log_gamma(n + 1.0) - log_gamma(k + 1.0) - log_gamma(n - k + 1.0) +
           k * std::log(prob) + (n - k) * std::log(1.0 - prob);
  };
  auto dnorm = [](double x, double mean, double sd) {
    const double z = (x - mean) / sd;
    return -0.5 * std::log(2.0 * kPi) - std::log(sd) - 0.5 * z * z;
  };

  const double va = p.sigma_a * p.sigma_a;
  const double vb = p.sigma_b * p.sigma_b;
  const double cab = p.rho * p.sigma_a * p.sigma_b;
  const double det = va * vb - cab * cab;

  double total = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& s = d.studies()[i];
    const double ta = re.theta[i][0];
    const double tb = re.theta[i][1];
    total += dbinom(s.tp, s.n_diseased(), invlogit(ta));
    total += dbinom(s.fp, s.n_nondiseased(), invlogit(tb));
    const double da = ta - p.mu_a;
    const double db = tb - p.mu_b;
    const double quad = (vb * da * da - 2.0 * cab * da * db + va * db * db) / det;
    total += -std::log(2.0 * kPi) - 0.5 * std::log(det) - 0.5 * quad;
  }
  total += dnorm(p.mu_a, prior.mu_mean, prior.mu_sd) + dnorm(p.mu_b, prior.mu_mean, prior.mu_sd);
  total += -2.0 * std::log(prior.sigma_upper) - std::log(prior.rho_upper - prior.rho_lower);
  return total;
}

}  // namespace

TEST_CASE("binomial log-pmf on the logit scale") {
  // tp=1 of n=2 at theta=0: log C(2,1) + 2 log(1/2) = log(1/2)
  CHECK_THAT(binomial_logpmf_logit(1, 2, 0.0),
             Catch::Matchers::WithinAbs(std::log(0.5), 1e-12));
  // extreme theta stays finite
  CHECK(std::isfinite(binomial_loglik_kernel(3, 10, -800.0)));
  CHECK(std::isfinite(binomial_loglik_kernel(3, 10, 800.0)));
}

TEST_CASE("log joint: outside the prior support") {
  const Dataset d({study(1, 3, 4, 5, 6), study(2, 5, 2, 7, 9), study(3, 4, 4, 4, 4)}, "t");
  RandomEffects re{{{0.1, -0.2}, {0.0, 0.0}, {-0.3, 0.4}}};
  PriorSpec prior;
  ModelParams p;
  p.rho = 1.5;
  CHECK(log_joint(d, p, re, prior) == kNegInf);
  p.rho = 0.0;
  p.sigma_a = 11.0;  // above sigma_upper
  CHECK(log_joint(d, p, re, prior) == kNegInf);
  p.sigma_a = -1.0;
  CHECK(log_joint(d, p, re, prior) == kNegInf);
}

TEST_CASE("log joint agrees with an independent oracle") {
  Rng rng(314);
  PriorSpec prior;
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<StudyRecord> studies;
    const int n = 2 + static_cast<int>(rng.uniform() * 5);
    for (int i = 0; i < n; ++i) {
      studies.push_back(study(i + 1, 1 + rng.binomial(40, 0.4), 1 + rng.binomial(60, 0.2),
                              1 + rng.binomial(40, 0.5), 1 + rng.binomial(60, 0.7)));
    }
    const Dataset d(studies, "t");
    RandomEffects re;
    for (int i = 0; i < n; ++i)
      re.theta.push_back({rng.normal(0.0, 1.5), rng.normal(-1.0, 1.5)});
    ModelParams p;
    p.mu_a = rng.normal(0.0, 1.0);
    p.mu_b = rng.normal(-1.0, 1.0);
    p.sigma_a = rng.uniform(0.05, 3.0);
    p.sigma_b = rng.uniform(0.05, 3.0);
    p.rho = rng.uniform(-0.95, 0.95);

    const double got = log_joint(d, p, re, prior);
    const double want = oracle_log_joint(d, p, re, prior);
    CHECK_THAT(got, Catch::Matchers::WithinAbs(want, 1e-8));
  }
}

TEST_CASE("log joint: more data sharpens the likelihood") {
  PriorSpec prior;
  ModelParams p;
  p.mu_a = 0.0;
  p.mu_b = -1.0;
  p.sigma_a = 1.0;
  p.sigma_b = 1.0;
  p.rho = 0.3;

  auto make = [&](long scale) {
    std::vector<StudyRecord> studies = {study(1, 12 * scale, 9 * scale, 8 * scale, 21 * scale),
                                        study(2, 7 * scale, 11 * scale, 13 * scale, 29 * scale),
                                        study(3, 15 * scale, 6 * scale, 5 * scale, 24 * scale)};
    return Dataset(studies, "t");
  };
  const Dataset d1 = make(1), d10 = make(10);

  // place theta at each study's observed logits; shifting it away must cost
  // more log-likelihood under the 10x counts
  RandomEffects at, off;
  for (const auto& s : d1.studies()) {
    const auto y = observed_logits(s);
    at.theta.push_back({y.y_a, y.y_b});
    off.theta.push_back({y.y_a + 0.4, y.y_b - 0.4});
  }
  const double drop1 = log_joint(d1, p, at, prior) - log_joint(d1, p, off, prior);
  const double drop10 = log_joint(d10, p, at, prior) - log_joint(d10, p, off, prior);
  CHECK(drop1 > 0.0);
  CHECK(drop10 > 5.0 * drop1);
}

TEST_CASE("log joint invariant under study permutation") {
  PriorSpec prior;
  ModelParams p;
  p.mu_a = 0.2;
  p.mu_b = -0.8;
  p.sigma_a = 0.7;
  p.sigma_b = 1.1;
  p.rho = -0.4;
  std::vector<StudyRecord> studies = {study(1, 3, 4, 5, 6), study(2, 8, 1, 2, 19),
                                      study(3, 4, 9, 9, 2), study(4, 10, 10, 10, 10)};
  RandomEffects re{{{0.1, -0.7}, {1.0, -2.1}, {-0.4, 1.2}, {0.0, 0.0}}};

  const Dataset d(studies, "t");
  const double base = log_joint(d, p, re, prior);

  const std::vector<std::size_t> perm{2, 0, 3, 1};
  std::vector<StudyRecord> studies_p;
  RandomEffects re_p;
  for (auto k : perm) {
    studies_p.push_back(studies[k]);
    re_p.theta.push_back(re.theta[k]);
  }
  const double permuted = log_joint(Dataset(studies_p, "t"), p, re_p, prior);
  CHECK_THAT(permuted, Catch::Matchers::WithinAbs(base, 1e-10));
}

TEST_CASE("log joint rejects dimension mismatch") {
  const Dataset d({study(1, 3, 4, 5, 6), study(2, 5, 2, 7, 9), study(3, 1, 1, 1, 1)}, "t");
  RandomEffects re{{{0.0, 0.0}}};
  CHECK_THROWS_AS(log_joint(d, ModelParams{}, re, PriorSpec{}), std::invalid_argument);
}
