#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "dtameta/math.hpp"

namespace dtameta {

// Hyperparameters of the bivariate random-effects model: means of the
// logit sensitivity / logit FPR pair, their between-study SDs, and the
// correlation. Valid iff both SDs are positive and |rho| < 1.
struct ModelParams {
  double mu_a = 0.0;
  double mu_b = 0.0;
  double sigma_a = 1.0;
  double sigma_b = 1.0;
  double rho = 0.0;

  bool valid() const {
    return std::isfinite(mu_a) && std::isfinite(mu_b) && sigma_a > 0.0 &&
           sigma_b > 0.0 && rho > -1.0 && rho < 1.0;
  }

  Sym2 covariance() const {
    return {sigma_a * sigma_a, rho * sigma_a * sigma_b, sigma_b * sigma_b};
  }
};

// Study-level random effects, one (theta_a, theta_b) pair per study,
// on the logit scale.
struct RandomEffects {
  std::vector<std::array<double, 2>> theta;

  std::size_t size() const { return theta.size(); }
};

// Priors: independent normals on the two means, uniforms on the SDs and
// the correlation.
struct PriorSpec {
  double mu_mean = 0.0;
  double mu_sd = 10.0;
  double sigma_upper = 10.0;
  double rho_lower = -1.0;
  double rho_upper = 1.0;

  void validate() const {
    if (!(mu_sd > 0.0)) throw std::invalid_argument("PriorSpec: mu_sd must be positive");
    if (!(sigma_upper > 0.0)) throw std::invalid_argument("PriorSpec: sigma_upper must be positive");
    if (!(rho_lower >= -1.0 && rho_lower < rho_upper && rho_upper <= 1.0))
      throw std::invalid_argument("PriorSpec: need -1 <= rho_lower < rho_upper <= 1");
  }

  bool in_support(const ModelParams& p) const {
    return p.valid() && p.sigma_a < sigma_upper && p.sigma_b < sigma_upper &&
           p.rho > rho_lower && p.rho < rho_upper;
  }
};

}  // namespace dtameta
