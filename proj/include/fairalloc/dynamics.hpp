#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairalloc/core.hpp"
#include "fairalloc/utility.hpp"

namespace fairalloc {

/// Raised when a resource update leaves [0,1]; the step size is too large
/// for the task set.
class FeasibilityBreach : public std::runtime_error {
 public:
  FeasibilityBreach(std::int64_t step, std::size_t task, double value)
      : std::runtime_error(format(step, task, value)), step_(step), task_(task), value_(value) {}

  std::int64_t step() const { return step_; }
  std::size_t task() const { return task_; }
  double value() const { return value_; }

  FeasibilityBreach at_step(std::int64_t step) const { return {step, task_, value_}; }

 private:
  static std::string format(std::int64_t step, std::size_t task, double value) {
    std::ostringstream os;
    os.precision(17);
    os << "feasibility breach at step " << step << ": task " << task << " share " << value
       << " outside [0,1]";
    return os.str();
  }

  std::int64_t step_;
  std::size_t task_;
  double value_;
};

struct FairnessVector {
  std::vector<double> phi;    // exact, from noise-free utilities
  std::vector<double> f_obs;  // from measurements
};

// ---------------------------------------------------------------------------
// Fairness measures

/// (1 - v_i) w_i - v_i sum_{j != i} w_j with w_j = lambda_j / u_j, written as
/// w_i - v_i sum_j w_j.
inline std::vector<double> fairness_from_utilities(std::span<const TaskSpec> specs,
                                                   std::span<const double> u,
                                                   std::span<const double> v) {
  const std::size_t n = specs.size();
  std::vector<double> w(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = specs[i].weight / u[i];
    total += w[i];
  }
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) f[i] = w[i] - v[i] * total;
  return f;
}

inline std::vector<double> noise_free_utilities(std::span<const TaskSpec> specs,
                                                std::span<const double> s,
                                                std::span<const double> v,
                                                std::span<const double> d) {
  std::vector<double> u(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) u[i] = specs[i].utility->eval(s[i], v[i], d[i]);
  return u;
}

/// Exact fairness measure Phi(s, v, d).
inline std::vector<double> phi(std::span<const TaskSpec> specs, std::span<const double> s,
                               std::span<const double> v, std::span<const double> d) {
  const auto u = noise_free_utilities(specs, s, v, d);
  return fairness_from_utilities(specs, u, v);
}

/// Observed fairness index F from measured utilities.
inline std::vector<double> observed_fairness(std::span<const TaskSpec> specs,
                                             std::span<const double> measured,
                                             std::span<const double> v) {
  for (std::size_t i = 0; i < measured.size(); ++i) {
    if (!(measured[i] > 0.0)) {
      std::ostringstream os;
      os << "task " << i << ": non-positive utility measurement " << measured[i];
      throw std::domain_error(os.str());
    }
  }
  return fairness_from_utilities(specs, measured, v);
}

inline double sum_of_squares(std::span<const double> x) {
  double acc = 0.0;
  for (double e : x) acc += e * e;
  return acc;
}

// ---------------------------------------------------------------------------
// Recursions

/// v' = v + eps F. No projection: leaving [0,1] raises FeasibilityBreach.
inline std::vector<double> step_resources(std::span<const double> v, std::span<const double> f,
                                          double epsilon) {
  std::vector<double> next(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    next[i] = v[i] + epsilon * f[i];
    if (!(next[i] >= 0.0 && next[i] <= 1.0)) throw FeasibilityBreach(-1, i, next[i]);
  }
  return next;
}

inline constexpr double kRatioGuard = 1e-12;

/// tanh(U/S) with the S ~ 0 case mapped to 0 (no direction estimate yet).
inline double guarded_tanh_ratio(double num, double den) {
  if (std::abs(den) < kRatioGuard) return 0.0;
  return std::tanh(num / den);
}

/// One update of (s, rho, sigma) from the measurement `measured` and the
/// dither draw `zeta`. The resource share is carried through unchanged.
inline TaskState step_operation_level(const TaskState& x, double measured, double zeta,
                                      const EngineConfig& cfg) {
  const double step = cfg.level_step();
  const double du = cfg.gamma * (measured - x.rho);
  const double ds = cfg.gamma * (x.s - x.sigma);
  TaskState next = x;
  next.s = std::clamp(x.s + step * guarded_tanh_ratio(du, ds) + step * zeta, 0.0, 1.0);
  next.rho = x.rho + step * du;
  next.sigma = x.sigma + step * ds;
  return next;
}

// ---------------------------------------------------------------------------
// Engine

struct EngineSnapshot {
  std::int64_t k = 0;
  std::vector<TaskState> states;
  std::vector<double> measurements;  // u~ used by the step that produced this snapshot
  FairnessVector fairness;
  double phi_sq_sum = 0.0;

  std::vector<double> allocation() const {
    std::vector<double> v(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) v[i] = states[i].v;
    return v;
  }
  std::vector<double> levels() const {
    std::vector<double> s(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) s[i] = states[i].s;
    return s;
  }
};

/// Per-step output row.
struct StepRecord {
  std::int64_t step = 0;
  std::vector<double> v;
  std::vector<double> s;
  std::vector<double> u;  // measurements
  std::vector<double> f;  // observed fairness
  std::vector<double> phi;
  double phi_sq_sum = 0.0;
};

inline std::vector<double> demands_at(std::span<const TaskSpec> specs, std::int64_t k) {
  std::vector<double> d(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) d[i] = specs[i].demand.at(k);
  return d;
}

inline constexpr double kSigmaOffset = 1e-3;

/// State at k = 0: v from cfg.v_init (uniform otherwise), s = s_init,
/// rho = noise-free u, sigma = s - 1e-3.
inline EngineSnapshot initial_snapshot(std::span<const TaskSpec> specs, const EngineConfig& cfg) {
  const std::size_t n = specs.size();
  EngineSnapshot snap;
  snap.k = 0;
  snap.states.resize(n);
  const auto d = demands_at(specs, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto& x = snap.states[i];
    x.v = cfg.v_init ? (*cfg.v_init)[i] : 1.0 / static_cast<double>(n);
    x.s = cfg.s_init;
    x.rho = specs[i].utility->eval(x.s, x.v, d[i]);
    x.sigma = x.s - kSigmaOffset;
  }
  const auto v = snap.allocation();
  const auto s = snap.levels();
  snap.measurements = noise_free_utilities(specs, s, v, d);
  snap.fairness.phi = fairness_from_utilities(specs, snap.measurements, v);
  snap.fairness.f_obs = snap.fairness.phi;
  snap.phi_sq_sum = sum_of_squares(snap.fairness.phi);
  return snap;
}

/// One synchronous update of every task from the pre-step snapshot.
inline EngineSnapshot engine_step(const EngineSnapshot& snap, std::span<const TaskSpec> specs,
                                  const EngineConfig& cfg, const NoiseSource& noise) {
  const std::size_t n = specs.size();
  const std::int64_t k = snap.k;
  const auto d = demands_at(specs, k);
  const auto v = snap.allocation();

  std::vector<double> measured(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& x = snap.states[i];
    measured[i] = specs[i].utility->eval(x.s, x.v, d[i]) + noise.measurement(k, i);
  }
  auto f = observed_fairness(specs, measured, v);

  std::vector<double> v_next;
  try {
    v_next = step_resources(v, f, cfg.epsilon);
  } catch (const FeasibilityBreach& b) {
    throw b.at_step(k);
  }

  EngineSnapshot next;
  next.k = k + 1;
  next.states.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    next.states[i] = cfg.freeze_levels
                         ? snap.states[i]
                         : step_operation_level(snap.states[i], measured[i], noise.dither(k, i), cfg);
    next.states[i].v = v_next[i];
  }
  next.measurements = std::move(measured);
  next.fairness.f_obs = std::move(f);
  next.fairness.phi = phi(specs, next.levels(), v_next, d);
  next.phi_sq_sum = sum_of_squares(next.fairness.phi);
  return next;
}

inline StepRecord make_record(const EngineSnapshot& snap) {
  StepRecord r;
  r.step = snap.k - 1;
  r.v = snap.allocation();
  r.s = snap.levels();
  r.u = snap.measurements;
  r.f = snap.fairness.f_obs;
  r.phi = snap.fairness.phi;
  r.phi_sq_sum = snap.phi_sq_sum;
  return r;
}

struct RunStatus {
  std::int64_t steps_completed = 0;
  std::optional<FeasibilityBreach> breach;
  EngineSnapshot final_snapshot;

  bool ok() const { return !breach.has_value(); }
};

/// Steps the engine for cfg.horizon steps, handing every record to `sink`.
/// A breach stops the run; records emitted before it remain valid.
template <class Sink>
  requires std::invocable<Sink&, const StepRecord&>
RunStatus run(std::span<const TaskSpec> specs, const EngineConfig& cfg, Sink&& sink) {
  for (const auto& t : specs) check_task(t);
  cfg.check(specs.size());
  const NoiseSource noise(cfg);
  RunStatus status;
  EngineSnapshot snap = initial_snapshot(specs, cfg);
  for (std::int64_t k = 0; k < cfg.horizon; ++k) {
    try {
      snap = engine_step(snap, specs, cfg, noise);
    } catch (const FeasibilityBreach& b) {
      status.breach = b;
      break;
    }
    sink(make_record(snap));
    status.steps_completed = k + 1;
  }
  status.final_snapshot = std::move(snap);
  return status;
}

struct RunOutcome {
  std::vector<StepRecord> records;
  RunStatus status;
};

/// Collecting variant; keeps every `stride`-th record (steps stride-1,
/// 2*stride-1, ...).
inline RunOutcome run(std::span<const TaskSpec> specs, const EngineConfig& cfg,
                      std::int64_t stride = 1) {
  if (stride < 1) throw std::invalid_argument("run: stride must be >= 1");
  RunOutcome out;
  if (cfg.horizon > 0) out.records.reserve(static_cast<std::size_t>(cfg.horizon / stride + 1));
  out.status = run(specs, cfg, [&](const StepRecord& r) {
    if ((r.step + 1) % stride == 0) out.records.push_back(r);
  });
  return out;
}

}  // namespace fairalloc
