#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairalloc/core.hpp"
#include "fairalloc/dynamics.hpp"
#include "fairalloc/properties.hpp"
#include "fairalloc/utility.hpp"

namespace fairalloc {

struct Scenario {
  std::string name;
  std::vector<TaskSpec> specs;
  EngineConfig cfg;
};

inline constexpr std::int64_t kDefaultZoneLength = 40000;
inline constexpr int kValidationGrid = 33;

/// Home-energy constants used for the identical-task study.
inline HomeEnergyModel::Params identical_task_params() {
  HomeEnergyModel::Params p;
  p.a = 2.0;
  p.b = 1.0;
  p.c = 2.0;
  p.kappa = 1.0;
  p.h = 1.0;
  return p;
}

inline EngineConfig reference_engine_defaults() {
  EngineConfig cfg;
  cfg.epsilon = 5e-4;
  cfg.mu_exponent = 1.0 / 20.0;
  cfg.gamma = 100.0;
  cfg.eta_bar = 1e-3;
  cfg.zeta_bar = 1e-3;
  cfg.s_init = 0.5;
  cfg.seed = 1;
  return cfg;
}

inline ValidationDomain demand_domain(const DemandSchedule& d, int grid_n = kValidationGrid) {
  ValidationDomain dom;
  dom.d_lo = d.min_value();
  dom.d_hi = d.max_value();
  dom.grid_n = grid_n;
  return dom;
}

/// Three demand zones: e1 at `base`, e2 at `factor * base` for the boosted
/// tasks, e3 back at `base`.
inline DemandSchedule three_zone_demand(double base, bool boosted, std::int64_t zone_length,
                                        double factor = 2.0) {
  return DemandSchedule({{0, base},
                         {zone_length, boosted ? factor * base : base},
                         {2 * zone_length, base}});
}

/// Four identical normalised home-energy tasks; tasks 1-2 double their demand
/// in the middle zone.
inline Scenario build_identical_four(std::int64_t zone_length = kDefaultZoneLength) {
  Scenario sc;
  sc.name = "paper-fig5";
  sc.cfg = reference_engine_defaults();
  sc.cfg.horizon = 3 * zone_length;
  const double base = 0.4;
  const auto raw = std::make_shared<HomeEnergyModel>(identical_task_params());
  ValidationDomain dom;
  dom.d_lo = base;
  dom.d_hi = 2.0 * base;
  dom.grid_n = kValidationGrid;
  const UtilityModelRef model = fit_normalizer(raw, dom);
  for (int i = 0; i < 4; ++i) {
    TaskSpec t;
    t.id = i;
    t.weight = 1.0;
    t.utility = model;
    t.demand = three_zone_demand(base, i < 2, zone_length);
    sc.specs.push_back(std::move(t));
  }
  return sc;
}

enum class ModelMix { home_energy, cpu_bandwidth, mixed };

inline std::string to_string(ModelMix m) {
  switch (m) {
    case ModelMix::home_energy: return "home_energy";
    case ModelMix::cpu_bandwidth: return "cpu_bandwidth";
    case ModelMix::mixed: return "mixed";
  }
  return "home_energy";
}

inline ModelMix model_mix_from_string(const std::string& s) {
  if (s == "home_energy") return ModelMix::home_energy;
  if (s == "cpu_bandwidth") return ModelMix::cpu_bandwidth;
  if (s == "mixed") return ModelMix::mixed;
  throw ConfigError("unknown model mix '" + s + "'");
}

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// n random tasks; weights in [0.2, 1], e1 demands in [0.2, 0.8], the first
/// n/2 tasks double their demand in e2. Each model is normalised over its own
/// demand range and must pass validate_assumptions.
inline Scenario build_random(std::size_t n, std::uint64_t seed, ModelMix mix = ModelMix::home_energy,
                             std::int64_t zone_length = kDefaultZoneLength) {
  if (n < 1) throw ConfigError("build_random: n must be >= 1");
  Scenario sc;
  sc.name = "random";
  sc.cfg = reference_engine_defaults();
  sc.cfg.seed = seed;
  sc.cfg.horizon = 3 * zone_length;

  std::mt19937_64 rng(seed);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  for (std::size_t i = 0; i < n; ++i) {
    TaskSpec t;
    t.id = static_cast<int>(i);
    t.weight = uni(0.2, 1.0);
    t.demand = three_zone_demand(uni(0.2, 0.8), i < n / 2, zone_length);
    const bool cpu = mix == ModelMix::cpu_bandwidth || (mix == ModelMix::mixed && i % 2 == 1);
    bool accepted = false;
    for (int attempt = 0; attempt < 100 && !accepted; ++attempt) {
      UtilityModelRef raw;
      if (cpu) {
        CpuBandwidthModel::Params p;
        p.a = uni(0.5, 2.0);
        p.b = uni(1.0, 3.0);
        p.h = uni(0.5, 1.0);
        p.theta = uni(0.5, 1.0);
        raw = std::make_shared<CpuBandwidthModel>(p);
      } else {
        HomeEnergyModel::Params p;
        p.a = uni(1.0, 3.0);
        p.b = uni(0.5, 1.5);
        p.c = uni(1.0, 3.0);
        p.kappa = uni(0.5, 1.5);
        p.h = uni(0.2, 1.0);
        raw = std::make_shared<HomeEnergyModel>(p);
      }
      const auto dom = demand_domain(t.demand);
      UtilityModelRef model = fit_normalizer(raw, dom);
      if (validate_assumptions(*model, dom).ok()) {
        t.utility = std::move(model);
        accepted = true;
      }
    }
    if (!accepted) {
      std::ostringstream os;
      os << "build_random: task " << i << " failed assumption checks after 100 attempts";
      throw GenerationError(os.str());
    }
    sc.specs.push_back(std::move(t));
  }
  return sc;
}

// ---------------------------------------------------------------------------
// Summaries

struct Stat {
  double mean = 0.0;
  double stdev = 0.0;
};

inline Stat mean_stdev(const std::vector<double>& xs) {
  Stat s;
  if (xs.empty()) return s;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - m) * (x - m);
  s.mean = m;
  s.stdev = xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
  return s;
}

inline constexpr double kTailFraction = 0.25;
inline constexpr std::size_t kMinTailRecords = 40;
inline constexpr double kAdaptationBand = 0.02;

struct ZoneSummary {
  std::size_t index = 0;
  std::int64_t start = 0;
  std::int64_t end = 0;  // exclusive
  bool completed = false;
  bool insufficient_data = true;
  std::size_t tail_records = 0;
  std::vector<Stat> v, s, f, abs_f;
  Stat phi_sq;
  /// Steps after the zone start until every share stays within the band of
  /// its tail mean; empty if the zone ends outside the band.
  std::optional<std::int64_t> adaptation_steps;
};

struct Verdicts {
  bool feasibility = false;
  bool starvation = false;
  bool balance = false;
  bool balance_vacuous = false;
  bool fairness_residual = false;
  bool s_optimality = false;
  double max_simplex_error = 0.0;
  std::int64_t prop2_violations = 0;
  std::int64_t starvation_failures = 0;
  std::int64_t balance_failures = 0;
  double max_tail_abs_f = 0.0;
  double min_optimality_fraction = 0.0;
};

struct ScenarioResult {
  std::vector<ZoneSummary> zones;
  std::optional<Verdicts> verdicts;
  std::int64_t steps_completed = 0;
  std::optional<std::string> breach;
};

/// Zone starts shared by the task set: the union of every schedule's zone
/// starts that fall inside the horizon.
inline std::vector<std::int64_t> zone_starts(const std::vector<TaskSpec>& specs, std::int64_t horizon) {
  std::set<std::int64_t> starts{0};
  for (const auto& t : specs)
    for (const auto& z : t.demand.zones())
      if (z.start < horizon) starts.insert(z.start);
  return {starts.begin(), starts.end()};
}

/// Per-zone tail statistics over the records. `steps_completed` marks how far
/// the run got; zones past it are not summarised.
inline std::vector<ZoneSummary> summarize(const std::vector<StepRecord>& records,
                                          const std::vector<std::int64_t>& starts,
                                          std::int64_t horizon, std::int64_t steps_completed) {
  std::vector<ZoneSummary> out;
  for (std::size_t z = 0; z < starts.size(); ++z) {
    ZoneSummary zs;
    zs.index = z;
    zs.start = starts[z];
    zs.end = z + 1 < starts.size() ? starts[z + 1] : horizon;
    zs.completed = steps_completed >= zs.end;
    const std::int64_t len = zs.end - zs.start;
    const std::int64_t tail_start = zs.end - static_cast<std::int64_t>(std::floor(kTailFraction * len));

    std::vector<const StepRecord*> zone_recs, tail;
    for (const auto& r : records) {
      if (r.step < zs.start || r.step >= zs.end) continue;
      zone_recs.push_back(&r);
      if (r.step >= tail_start) tail.push_back(&r);
    }
    zs.tail_records = tail.size();
    zs.insufficient_data = !zs.completed || tail.size() < kMinTailRecords;
    if (zs.insufficient_data) {
      out.push_back(std::move(zs));
      continue;
    }
    const std::size_t n = tail.front()->v.size();
    auto column = [&](auto field, std::size_t i) {
      std::vector<double> xs;
      xs.reserve(tail.size());
      for (const auto* r : tail) xs.push_back(field(*r, i));
      return mean_stdev(xs);
    };
    for (std::size_t i = 0; i < n; ++i) {
      zs.v.push_back(column([](const StepRecord& r, std::size_t k) { return r.v[k]; }, i));
      zs.s.push_back(column([](const StepRecord& r, std::size_t k) { return r.s[k]; }, i));
      zs.f.push_back(column([](const StepRecord& r, std::size_t k) { return r.f[k]; }, i));
      zs.abs_f.push_back(column([](const StepRecord& r, std::size_t k) { return std::abs(r.f[k]); }, i));
    }
    zs.phi_sq = column([](const StepRecord& r, std::size_t) { return r.phi_sq_sum; }, 0);

    std::optional<std::int64_t> last_outside;
    for (const auto* r : zone_recs) {
      for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(r->v[i] - zs.v[i].mean) > kAdaptationBand) {
          last_outside = r->step;
          break;
        }
      }
    }
    if (!last_outside) {
      zs.adaptation_steps = 0;
    } else if (*last_outside < zone_recs.back()->step) {
      zs.adaptation_steps = *last_outside + 1 - zs.start;
    }
    out.push_back(std::move(zs));
  }
  return out;
}

inline constexpr double kResidualThreshold = 0.02;
inline constexpr double kOptimalityFraction = 0.9;

struct ScenarioRun {
  std::vector<StepRecord> records;  // thinned by the stride
  ScenarioResult result;
  RunStatus status;
};

/// Runs the scenario once, feeding every step to a PropertyMonitor and
/// keeping every `stride`-th record for the summary and the trace.
inline ScenarioRun run_scenario(const Scenario& sc, std::int64_t stride = 1) {
  if (stride < 1) throw std::invalid_argument("run_scenario: stride must be >= 1");
  ScenarioRun out;
  oracle::PropertyMonitor monitor(sc.specs, sc.cfg);
  out.status = run(sc.specs, sc.cfg, [&](const StepRecord& r) {
    monitor(r);
    if ((r.step + 1) % stride == 0) out.records.push_back(r);
  });
  monitor.finish();

  auto& res = out.result;
  res.steps_completed = out.status.steps_completed;
  if (out.status.breach) res.breach = out.status.breach->what();
  res.zones = summarize(out.records, zone_starts(sc.specs, sc.cfg.horizon), sc.cfg.horizon,
                        out.status.steps_completed);

  Verdicts v;
  v.max_simplex_error = monitor.max_simplex_error();
  v.feasibility = !out.status.breach && monitor.simplex_ok();
  v.prop2_violations = monitor.prop2_violations();
  v.starvation = monitor.starvation().pass();
  v.starvation_failures = monitor.starvation().total_failures();
  v.balance_vacuous = monitor.balance_vacuous();
  v.balance = v.balance_vacuous || monitor.balance().pass();
  v.balance_failures = monitor.balance().total_failures();
  bool residual_ok = true;
  bool any_zone = false;
  for (const auto& z : res.zones) {
    if (z.insufficient_data) continue;
    any_zone = true;
    for (const auto& af : z.abs_f) {
      v.max_tail_abs_f = std::max(v.max_tail_abs_f, af.mean);
      residual_ok = residual_ok && af.mean < kResidualThreshold;
    }
  }
  v.fairness_residual = any_zone && residual_ok;
  v.min_optimality_fraction = monitor.min_optimality_fraction();
  v.s_optimality = v.min_optimality_fraction > kOptimalityFraction;
  res.verdicts = v;
  return out;
}

}  // namespace fairalloc
