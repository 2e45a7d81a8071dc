#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairalloc/dynamics.hpp"
#include "fairalloc/oracle.hpp"
#include "fairalloc/properties.hpp"
#include "fairalloc/scenario.hpp"

namespace fairalloc {

struct VerifyItem {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyItem> items;
  bool breach = false;

  bool all_pass() const {
    return std::all_of(items.begin(), items.end(), [](const VerifyItem& i) { return i.pass; });
  }
};

inline constexpr double kTrackingHorizon = 2.0;
inline constexpr double kTrackingTolerance = 0.05;
inline constexpr double kCrossOracleTolerance = 1e-3;
inline constexpr double kLimitResidual = 1e-6;
inline constexpr int kMultiStarts = 8;
inline constexpr double kClusterRadius = 1e-3;

struct LimitSetReport {
  std::vector<std::vector<double>> clusters;  // representative of each cluster
  double max_residual = 0.0;
  bool all_converged = true;
};

/// Integrates the slow ODE from `starts` random simplex points and groups the
/// endpoints greedily at `radius` in the sup norm.
inline LimitSetReport multi_start_limit_points(std::span<const TaskSpec> specs, std::span<const double> d,
                                               std::uint64_t seed, int starts = kMultiStarts,
                                               double radius = kClusterRadius) {
  LimitSetReport rep;
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> expo(1.0);
  const std::vector<double> dv(d.begin(), d.end());
  for (int k = 0; k < starts; ++k) {
    std::vector<double> v(specs.size());
    double total = 0.0;
    for (auto& x : v) total += (x = expo(rng));
    for (auto& x : v) x /= total;
    const auto lp = oracle::find_limit_point(specs, v, dv);
    rep.max_residual = std::max(rep.max_residual, lp.residual);
    rep.all_converged = rep.all_converged && lp.converged;
    bool placed = false;
    for (const auto& c : rep.clusters) {
      double g = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i) g = std::max(g, std::abs(c[i] - lp.v[i]));
      if (g <= radius) {
        placed = true;
        break;
      }
    }
    if (!placed) rep.clusters.push_back(lp.v);
  }
  return rep;
}

/// Running-minimum threshold for sum Phi^2 with frozen levels.
inline double fairness_recurrence_threshold(const EngineConfig& cfg) {
  return 10.0 * (cfg.epsilon + cfg.eta_bar * cfg.eta_bar);
}

/// Minimum of sum_i Phi_i^2 over a run with levels held at s_init.
inline double frozen_level_min_phi_sq(const Scenario& sc) {
  EngineConfig cfg = sc.cfg;
  cfg.freeze_levels = true;
  double best = initial_snapshot(sc.specs, cfg).phi_sq_sum;
  const auto st = run(sc.specs, cfg, [&](const StepRecord& r) { best = std::min(best, r.phi_sq_sum); });
  if (st.breach) throw *st.breach;
  return best;
}

/// The full property suite over one scenario.
inline VerifyReport verify_scenario(const Scenario& sc) {
  VerifyReport rep;
  auto add = [&](std::string name, bool pass, double value, double threshold, std::string detail) {
    rep.items.push_back({std::move(name), pass, value, threshold, std::move(detail)});
  };
  auto fmt = [](auto&&... parts) {
    std::ostringstream os;
    os.precision(6);
    (os << ... << parts);
    return os.str();
  };

  const auto main = run_scenario(sc, std::max<std::int64_t>(1, sc.cfg.horizon / 20000));
  const auto& v = *main.result.verdicts;
  rep.breach = main.status.breach.has_value();
  {
    oracle::PropertyMonitor probe(sc.specs, sc.cfg);
    const auto& b = probe.bound_set();

    add("simplex", v.feasibility, v.max_simplex_error, 1e-9,
        rep.breach ? std::string(main.status.breach->what())
                   : fmt("max |sum v - 1| = ", v.max_simplex_error));
    add("prop2_bounds", !rep.breach && v.prop2_violations == 0, static_cast<double>(v.prop2_violations), 0,
        fmt(v.prop2_violations, " steps outside the fairness-increment bounds"));
    add("starvation_window", !rep.breach && v.starvation, static_cast<double>(v.starvation_failures), 0,
        fmt("alpha* = ", b.alpha_star, ", window ", probe.window(), " steps, ", v.starvation_failures,
            " failing gaps"));
    add("balance_window", !rep.breach && v.balance, static_cast<double>(v.balance_failures), 0,
        v.balance_vacuous ? fmt("vacuous: beta* = ", b.beta_star, " >= 1")
                          : fmt("beta = ", probe.balance_level(), ", ", v.balance_failures, " failing gaps"));
    add("s_optimality", !rep.breach && v.s_optimality, v.min_optimality_fraction, kOptimalityFraction,
        fmt("min fraction of tail steps within 0.05 of argmax: ", v.min_optimality_fraction));
    add("fairness_residual", !rep.breach && v.fairness_residual, v.max_tail_abs_f, kResidualThreshold,
        fmt("max zone-tail mean |F_i| = ", v.max_tail_abs_f));
  }

  try {
    const double m = frozen_level_min_phi_sq(sc);
    const double thr = fairness_recurrence_threshold(sc.cfg);
    add("fairness_recurrence", m < thr, m, thr, fmt("min sum Phi^2 with frozen levels = ", m));
  } catch (const FeasibilityBreach& e) {
    add("fairness_recurrence", false, 0, 0, e.what());
  }

  try {
    EngineConfig quiet = sc.cfg;
    quiet.eta_bar = 0.0;
    quiet.zeta_bar = 0.0;
    const double t_end = std::min(kTrackingHorizon, sc.cfg.epsilon * static_cast<double>(sc.cfg.horizon));
    const auto tr = oracle::tracking_gap(sc.specs, quiet, t_end);
    add("ode_tracking", tr.sup_gap <= kTrackingTolerance, tr.sup_gap, kTrackingTolerance,
        fmt("sup |v - v_ode| over t in [0,", t_end, "] = ", tr.sup_gap));
  } catch (const std::exception& e) {
    add("ode_tracking", false, 0, kTrackingTolerance, e.what());
  }

  {
    const auto d = demands_at(sc.specs, 0);
    const std::vector<double> uniform(sc.specs.size(), 1.0 / static_cast<double>(sc.specs.size()));
    const auto lp = oracle::find_limit_point(sc.specs, uniform, d);
    const auto fp = oracle::fair_efficient_fixed_point(sc.specs, d);
    double gap = 0.0;
    for (std::size_t i = 0; i < lp.v.size(); ++i) gap = std::max(gap, std::abs(lp.v[i] - fp.v[i]));
    const bool ok = fp.converged && gap <= kCrossOracleTolerance && lp.residual <= kLimitResidual;
    add("cross_oracle", ok, gap, kCrossOracleTolerance,
        fmt("limit-point residual ", lp.residual, ", fixed-point ", fp.converged ? "converged" : "NOT converged",
            ", sup gap ", gap));

    const auto ls = multi_start_limit_points(sc.specs, d, sc.cfg.seed);
    add("limit_set", ls.max_residual <= kLimitResidual, ls.max_residual, kLimitResidual,
        fmt(kMultiStarts, " starts, ", ls.clusters.size(), " cluster(s) at radius ", kClusterRadius,
            ", max residual ", ls.max_residual));
  }
  return rep;
}

inline nlohmann::json verify_to_json(const VerifyReport& rep) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& i : rep.items)
    items.push_back({{"name", i.name},
                     {"pass", i.pass},
                     {"value", i.value},
                     {"threshold", i.threshold},
                     {"detail", i.detail}});
  return {{"all_pass", rep.all_pass()}, {"breach", rep.breach}, {"properties", items}};
}

}  // namespace fairalloc
