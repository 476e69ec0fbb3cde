#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dtameta/data.hpp"
#include "dtameta/mcmc.hpp"
#include "dtameta/params.hpp"

namespace dtameta {

struct SrocLine {
  double intercept = 0.0;
  double slope = 0.0;
};

enum class AucRange { full, observed };

// Summary ROC curve: the logit-scale regression line of Y_A on Y_B, its
// back-transformed grid over the FPR range, and the area under it.
struct SrocCurve {
  double intercept = 0.0;
  double slope = 0.0;
  std::vector<std::pair<double, double>> grid;  // (fpr, sensitivity), monotone in fpr
  double auc = 0.0;
  std::pair<double, double> range{0.0, 1.0};
};

// Regression line of the logit sensitivity on the logit FPR implied by the
// bivariate normal: slope = rho * sigma_a / sigma_b.
inline SrocLine sroc_line(const ModelParams& p) {
  if (!(p.sigma_b > 0.0)) throw std::invalid_argument("sroc_line: sigma_b must be positive");
  SrocLine line;
  line.slope = p.rho * p.sigma_a / p.sigma_b;
  line.intercept = p.mu_a - line.slope * p.mu_b;
  return line;
}

// Back-transformed curve on an equispaced FPR grid over `range`, endpoints
// pulled in by eps = 1e-6 so the logit stays finite.
inline std::vector<std::pair<double, double>> sroc_points(const SrocLine& line, int grid_size,
                                                          std::pair<double, double> range) {
  if (grid_size < 2) throw std::invalid_argument("sroc_points: grid_size must be >= 2");
  if (!(range.first >= 0.0 && range.second <= 1.0 && range.first < range.second))
    throw std::invalid_argument("sroc_points: invalid range");
  constexpr double eps = 1e-6;
  const double lo = std::max(range.first, 0.0) + eps;
  const double hi = std::min(range.second, 1.0) - eps;
  if (!(lo < hi)) throw std::invalid_argument("sroc_points: range too narrow");
  std::vector<std::pair<double, double>> grid;
  grid.reserve(grid_size);
  for (int k = 0; k < grid_size; ++k) {
    const double fpr = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(grid_size - 1);
    grid.emplace_back(fpr, invlogit(line.intercept + line.slope * logit(fpr)));
  }
  return grid;
}

// Trapezoidal area of sensitivity over FPR across the closed range; the
// boundary strips carry the sensitivity of the nearest grid point. The
// result is normalized by the range width so it stays within [0, 1] for
// restricted ranges too (and is the plain area when the range is (0, 1)).
inline double auc(const std::vector<std::pair<double, double>>& grid,
                  std::pair<double, double> range = {0.0, 1.0}) {
  if (grid.size() < 2) throw std::invalid_argument("auc: grid must have at least 2 points");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i].first > grid[i - 1].first))
      throw std::invalid_argument("auc: grid must be strictly increasing in fpr");
  double area = grid.front().second * (grid.front().first - range.first);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    area += 0.5 * (grid[i].second + grid[i - 1].second) * (grid[i].first - grid[i - 1].first);
  }
  area += grid.back().second * (range.second - grid.back().first);
  area /= (range.second - range.first);
  return std::clamp(area, 0.0, 1.0);
}

inline double delta_auc(double full_auc, double loo_auc) { return full_auc - loo_auc; }

// observed FPR range of a dataset (uncorrected proportions)
inline std::pair<double, double> observed_fpr_range(const Dataset& d) {
  double lo = 1.0, hi = 0.0;
  for (const auto& s : d.studies()) {
    const double fpr = observed_proportions(s).second;
    lo = std::min(lo, fpr);
    hi = std::max(hi, fpr);
  }
  // degenerate spans (all studies at one FPR) fall back to the full range
  if (!(lo < hi)) return {0.0, 1.0};
  return {lo, hi};
}

inline std::pair<double, double> auc_range_for(AucRange mode, const Dataset& d) {
  return mode == AucRange::full ? std::pair<double, double>{0.0, 1.0} : observed_fpr_range(d);
}

inline SrocCurve make_sroc_curve(const ModelParams& p, int grid_size = 1000,
                                 std::pair<double, double> range = {0.0, 1.0}) {
  const SrocLine line = sroc_line(p);
  SrocCurve curve;
  curve.intercept = line.intercept;
  curve.slope = line.slope;
  curve.range = range;
  curve.grid = sroc_points(line, grid_size, range);
  curve.auc = auc(curve.grid, range);
  return curve;
}

// AUC point estimate at the posterior-mean parameters plus a credible
// interval from the per-draw AUCs. A coarser grid is enough for the
// interval; the point estimate uses the full grid.
inline IntervalEstimate auc_with_interval(const std::vector<PosteriorChain>& chains,
                                          std::pair<double, double> range,
                                          int point_grid = 1000, int draw_grid = 200) {
  IntervalEstimate est;
  est.value = make_sroc_curve(posterior_mean_params(chains), point_grid, range).auc;
  std::vector<double> draws;
  for (const auto& c : chains) {
    for (const auto& p : c.params) {
      draws.push_back(make_sroc_curve(p, draw_grid, range).auc);
    }
  }
  if (draws.empty()) throw FitError("auc_with_interval: empty chains");
  std::sort(draws.begin(), draws.end());
  est.lo = quantile_sorted(draws, 0.025);
  est.hi = quantile_sorted(draws, 0.975);
  return est;
}

}  // namespace dtameta
