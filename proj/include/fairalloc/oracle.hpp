#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "fairalloc/bounds.hpp"
#include "fairalloc/core.hpp"
#include "fairalloc/dynamics.hpp"
#include "fairalloc/utility.hpp"

namespace fairalloc::oracle {

/// Sampled solution on the interpolated timescale t = eps * k.
struct OdeTrajectory {
  std::vector<double> times;
  std::vector<std::vector<TaskState>> states;

  const std::vector<TaskState>& terminal() const { return states.back(); }
  std::vector<double> terminal_allocation() const {
    std::vector<double> v;
    for (const auto& x : states.back()) v.push_back(x.v);
    return v;
  }
};

namespace detail {

using Flat = std::vector<double>;  // [v_0 s_0 rho_0 sigma_0 v_1 ...]

inline Flat flatten(const std::vector<TaskState>& xs) {
  Flat f;
  f.reserve(4 * xs.size());
  for (const auto& x : xs) {
    f.push_back(x.v);
    f.push_back(x.s);
    f.push_back(x.rho);
    f.push_back(x.sigma);
  }
  return f;
}

inline std::vector<TaskState> unflatten(const Flat& f) {
  std::vector<TaskState> xs(f.size() / 4);
  for (std::size_t i = 0; i < xs.size(); ++i)
    xs[i] = TaskState{f[4 * i], f[4 * i + 1], f[4 * i + 2], f[4 * i + 3]};
  return xs;
}

inline Flat axpy(const Flat& x, double a, const Flat& k) {
  Flat y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + a * k[i];
  return y;
}

/// Classical RK4 step of y' = field(y).
template <class Field>
Flat rk4_step(const Flat& y, double dt, Field&& field) {
  const Flat k1 = field(y);
  const Flat k2 = field(axpy(y, 0.5 * dt, k1));
  const Flat k3 = field(axpy(y, 0.5 * dt, k2));
  const Flat k4 = field(axpy(y, dt, k3));
  Flat out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

inline void require_finite(const Flat& y, double t) {
  for (double e : y) {
    if (!std::isfinite(e)) {
      std::ostringstream os;
      os << "ODE state became non-finite at t = " << t;
      throw std::runtime_error(os.str());
    }
  }
}

}  // namespace detail

/// Right-hand side of the coupled (v, s, rho, sigma) system with demand d.
inline detail::Flat full_field(std::span<const TaskSpec> specs, const EngineConfig& cfg,
                               std::span<const double> d, const detail::Flat& y) {
  const std::size_t n = specs.size();
  const double mu = cfg.mu();
  std::vector<double> v(n), s(n), u(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = y[4 * i];
    s[i] = y[4 * i + 1];
    u[i] = specs[i].utility->eval(s[i], v[i], d[i]);
  }
  const auto ph = fairness_from_utilities(specs, u, v);
  detail::Flat dy(y.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double rho = y[4 * i + 2];
    const double sigma = y[4 * i + 3];
    const double du = cfg.gamma * (u[i] - rho);
    const double ds = cfg.gamma * (s[i] - sigma);
    dy[4 * i] = ph[i];
    dy[4 * i + 1] = cfg.freeze_levels ? 0.0 : mu * guarded_tanh_ratio(du, ds);
    dy[4 * i + 2] = cfg.freeze_levels ? 0.0 : mu * du;
    dy[4 * i + 3] = cfg.freeze_levels ? 0.0 : mu * ds;
  }
  return dy;
}

/// Fixed-step RK4 of the coupled ODE from `init` over [0, t_end]. The
/// operation level is clamped to [0,1] after every step. Demand is read from
/// each task's schedule at step floor(t / eps). Every `record_every`-th
/// step is stored, plus t = 0.
inline OdeTrajectory integrate_full_ode(std::span<const TaskSpec> specs, const EngineConfig& cfg,
                                        const std::vector<TaskState>& init, double t_end,
                                        double dt, std::int64_t record_every = 1) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_full_ode: dt must be positive");
  if (record_every < 1) throw std::invalid_argument("integrate_full_ode: record_every < 1");
  const auto steps = static_cast<std::int64_t>(std::llround(t_end / dt));
  OdeTrajectory traj;
  detail::Flat y = detail::flatten(init);
  traj.times.push_back(0.0);
  traj.states.push_back(init);
  for (std::int64_t m = 0; m < steps; ++m) {
    const double t = static_cast<double>(m) * dt;
    const auto k = static_cast<std::int64_t>(std::floor(t / cfg.epsilon + 1e-9));
    const auto d = demands_at(specs, k);
    y = detail::rk4_step(y, dt, [&](const detail::Flat& x) { return full_field(specs, cfg, d, x); });
    for (std::size_t i = 0; i < specs.size(); ++i) y[4 * i + 1] = std::clamp(y[4 * i + 1], 0.0, 1.0);
    detail::require_finite(y, t + dt);
    if ((m + 1) % record_every == 0 || m + 1 == steps) {
      traj.times.push_back(static_cast<double>(m + 1) * dt);
      traj.states.push_back(detail::unflatten(y));
    }
  }
  return traj;
}

// ---------------------------------------------------------------------------

inline constexpr double kArgmaxTol = 1e-12;

/// s*(v, d) for every task.
inline std::vector<double> efficient_levels(std::span<const TaskSpec> specs,
                                            std::span<const double> v,
                                            std::span<const double> d) {
  std::vector<double> s(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i)
    s[i] = argmax_s(*specs[i].utility, v[i], d[i], kArgmaxTol);
  return s;
}

/// Phi(s*(v, d), v, d): the slow vector field once levels are equilibrated.
inline std::vector<double> limiting_field(std::span<const TaskSpec> specs,
                                          std::span<const double> v, std::span<const double> d) {
  return phi(specs, efficient_levels(specs, v, d), v, d);
}

/// RK4 of dv/dt = Phi(s*(v, d), v, d) with the maximiser recomputed at every
/// stage. States carry s = s*(v, d); rho and sigma are unused (0).
inline OdeTrajectory integrate_limiting_ode(std::span<const TaskSpec> specs,
                                            const std::vector<double>& v_init,
                                            const std::vector<double>& d, double t_end, double dt,
                                            std::int64_t record_every = 1) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_limiting_ode: dt must be positive");
  if (!on_simplex(v_init, 1e-9))
    throw std::invalid_argument("integrate_limiting_ode: v_init is not on the simplex");
  const std::size_t n = specs.size();
  auto pack = [&](const detail::Flat& v) {
    const auto s = efficient_levels(specs, v, d);
    std::vector<TaskState> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = TaskState{v[i], s[i], 0.0, 0.0};
    return xs;
  };
  const auto steps = static_cast<std::int64_t>(std::llround(t_end / dt));
  OdeTrajectory traj;
  detail::Flat v = v_init;
  traj.times.push_back(0.0);
  traj.states.push_back(pack(v));
  for (std::int64_t m = 0; m < steps; ++m) {
    v = detail::rk4_step(v, dt, [&](const detail::Flat& x) { return limiting_field(specs, x, d); });
    detail::require_finite(v, (m + 1) * dt);
    if ((m + 1) % record_every == 0 || m + 1 == steps) {
      traj.times.push_back(static_cast<double>(m + 1) * dt);
      traj.states.push_back(pack(v));
    }
  }
  return traj;
}

/// Overload taking the engine config for interface symmetry with the full ODE.
inline OdeTrajectory integrate_limiting_ode(std::span<const TaskSpec> specs, const EngineConfig&,
                                            const std::vector<double>& v_init,
                                            const std::vector<double>& d, double t_end, double dt,
                                            std::int64_t record_every = 1) {
  return integrate_limiting_ode(specs, v_init, d, t_end, dt, record_every);
}

struct LimitPoint {
  std::vector<double> v;
  std::vector<double> s;
  double residual = 0.0;  // max_i |Phi_i(s*(v), v, d)|
  double t = 0.0;
  bool converged = false;
};

/// Integrates the limiting ODE from `v_init` in chunks until the residual
/// drops below `tol` or t exceeds `t_max`. The step is 0.5 / sum(lambda),
/// inside RK4's stability region for the linearised field.
inline LimitPoint find_limit_point(std::span<const TaskSpec> specs, const std::vector<double>& v_init,
                                   const std::vector<double>& d, double tol = 1e-10,
                                   double t_max = 2000.0) {
  double weight_sum = 0.0;
  for (const auto& t : specs) weight_sum += t.weight;
  const double dt = std::min(0.1, 0.5 / weight_sum);
  const double chunk = 200.0 * dt;
  LimitPoint lp;
  lp.v = v_init;
  auto residual = [&](const std::vector<double>& v) {
    double r = 0.0;
    for (double e : limiting_field(specs, v, d)) r = std::max(r, std::abs(e));
    return r;
  };
  lp.residual = residual(lp.v);
  while (lp.residual >= tol && lp.t < t_max) {
    const auto traj = integrate_limiting_ode(specs, lp.v, d, chunk, dt, 200);
    lp.v = traj.terminal_allocation();
    lp.t += chunk;
    lp.residual = residual(lp.v);
  }
  lp.converged = lp.residual < tol;
  lp.s = efficient_levels(specs, lp.v, d);
  return lp;
}

// ---------------------------------------------------------------------------

struct FixedPointResult {
  std::vector<double> v;
  std::vector<double> s;  // levels used at the returned point
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;  // max_i |Phi_i|
};

inline constexpr double kRelaxation = 0.5;

namespace detail {

template <class Levels>
FixedPointResult fixed_point_iteration(std::span<const TaskSpec> specs, std::span<const double> d,
                                       double tol, int max_iter, Levels&& levels_for) {
  if (!(tol > 0.0)) throw std::invalid_argument("fair_fixed_point: tol must be positive");
  const std::size_t n = specs.size();
  FixedPointResult r;
  r.v.assign(n, 1.0 / static_cast<double>(n));
  for (int it = 1; it <= max_iter; ++it) {
    const auto s = levels_for(r.v);
    std::vector<double> w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = specs[i].weight / specs[i].utility->eval(s[i], r.v[i], d[i]);
      total += w[i];
    }
    double change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double target = w[i] / total;
      const double next = (1.0 - kRelaxation) * r.v[i] + kRelaxation * target;
      change = std::max(change, std::abs(next - r.v[i]));
      r.v[i] = next;
    }
    r.iterations = it;
    if (change < tol) {
      r.converged = true;
      break;
    }
  }
  r.s = levels_for(r.v);
  const auto ph = phi(specs, r.s, r.v, d);
  for (double e : ph) r.residual = std::max(r.residual, std::abs(e));
  return r;
}

}  // namespace detail

/// Fair allocation for fixed levels `s`: iterates
/// v <- (1 - w) v + w normalize(lambda_i / u_i(s_i, v_i, d_i)) with w = 1/2.
/// Non-convergence is reported through `converged`, never thrown.
inline FixedPointResult fair_fixed_point(std::span<const TaskSpec> specs, std::span<const double> s,
                                         std::span<const double> d, double tol = 1e-12,
                                         int max_iter = 10000) {
  const std::vector<double> levels(s.begin(), s.end());
  return detail::fixed_point_iteration(specs, d, tol, max_iter,
                                       [&](const std::vector<double>&) { return levels; });
}

/// Same iteration with levels re-optimised, s = s*(v, d), at every iterate.
inline FixedPointResult fair_efficient_fixed_point(std::span<const TaskSpec> specs,
                                                   std::span<const double> d, double tol = 1e-12,
                                                   int max_iter = 10000) {
  return detail::fixed_point_iteration(
      specs, d, tol, max_iter,
      [&](const std::vector<double>& v) { return efficient_levels(specs, v, d); });
}

// ---------------------------------------------------------------------------

struct TrackingResult {
  double sup_gap = 0.0;  // max over k of |v(k) - v_ode(eps k)|_inf
  double t_end = 0.0;
  std::int64_t steps = 0;
  std::int64_t substeps = 0;  // RK4 steps per engine step
};

/// Runs the engine and the coupled ODE from the same initial state and
/// compares the allocation on the grid t = eps k, k = 0..t_end/eps.
inline TrackingResult tracking_gap(std::span<const TaskSpec> specs, EngineConfig cfg, double t_end,
                                   double dt_max = 1e-4) {
  TrackingResult res;
  res.t_end = t_end;
  res.steps = static_cast<std::int64_t>(std::llround(t_end / cfg.epsilon));
  res.substeps = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(cfg.epsilon / dt_max - 1e-9)));
  cfg.horizon = res.steps;

  const auto init = initial_snapshot(specs, cfg);
  const auto traj = integrate_full_ode(specs, cfg, init.states, t_end,
                                       cfg.epsilon / static_cast<double>(res.substeps),
                                       res.substeps);
  double gap = 0.0;
  for (std::size_t i = 0; i < specs.size(); ++i)
    gap = std::max(gap, std::abs(init.states[i].v - traj.states[0][i].v));

  const auto status = run(specs, cfg, [&](const StepRecord& r) {
    const auto idx = static_cast<std::size_t>(r.step + 1);
    if (idx >= traj.states.size()) return;
    for (std::size_t i = 0; i < specs.size(); ++i)
      gap = std::max(gap, std::abs(r.v[i] - traj.states[idx][i].v));
  });
  if (status.breach) throw *status.breach;
  res.sup_gap = gap;
  return res;
}

}  // namespace fairalloc::oracle
