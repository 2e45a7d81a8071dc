#pragma once

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fairalloc/core.hpp"
#include "fairalloc/utility.hpp"

namespace fairalloc::oracle {

/// Analytic constants of the resource recursion for one task set.
struct BoundSet {
  std::size_t n = 0;
  double lambda_min = 0.0;  // smallest weight
  double c_max = 0.0;       // largest declared utility bound
  double alpha_star = 0.0;  // starvation level lambda_min / (n c_max)
  double beta_star = 0.0;   // balance level c_max / (n lambda_min)
  double safe_epsilon = 0.0;
  double theorem1_kappa = 0.0;  // eps mu(eps) gamma
};

inline double max_bound_c(const std::vector<TaskSpec>& specs) {
  double c = -std::numeric_limits<double>::infinity();
  for (const auto& t : specs) c = std::max(c, t.utility->bound_c());
  return c;
}

/// Step size below which both boundary-pointing conditions of the
/// feasibility argument hold, with the O(eta^2) slack taken as 2 eta^2.
inline double safe_epsilon(std::size_t n, double lambda_min, double c_max, double eta_bar) {
  const double nd = static_cast<double>(n);
  const double slack = 1.0 + 2.0 * eta_bar * eta_bar;
  const double lower_edge = lambda_min / (c_max * nd * nd * slack);
  if (n == 1) return lower_edge;
  const double g = lambda_min * (nd - 1.0) / c_max;
  const double upper_edge = g / (nd * (1.0 + g) * slack);
  return std::min(lower_edge, upper_edge);
}

inline BoundSet bounds(const std::vector<TaskSpec>& specs, const EngineConfig& cfg) {
  if (specs.empty()) throw std::invalid_argument("bounds: no tasks");
  BoundSet b;
  b.n = specs.size();
  const double nd = static_cast<double>(b.n);
  b.lambda_min = min_weight(specs);
  b.c_max = max_bound_c(specs);
  b.alpha_star = b.lambda_min / (nd * b.c_max);
  b.beta_star = b.c_max / (nd * b.lambda_min);
  b.safe_epsilon = safe_epsilon(b.n, b.lambda_min, b.c_max, cfg.eta_bar);
  b.theorem1_kappa = cfg.kappa();
  return b;
}

}  // namespace fairalloc::oracle
