#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fairalloc/bounds.hpp"
#include "fairalloc/core.hpp"
#include "fairalloc/dynamics.hpp"
#include "fairalloc/utility.hpp"

namespace fairalloc::oracle {

/// Window length ceil(5 / (eps lambda_min / c_max)) for the recurrence checks.
inline std::int64_t recurrence_window(const BoundSet& b, double epsilon) {
  return static_cast<std::int64_t>(std::ceil(5.0 / (epsilon * b.lambda_min / b.c_max)));
}

/// Tracks, per task, the longest stretch of steps without a "hit". Every
/// window of `window` consecutive steps in [start, end] must contain a hit;
/// this holds iff every gap between consecutive hits, with virtual hits at
/// start - 1 and end + 1, is at most `window`.
class RecurrenceTracker {
 public:
  RecurrenceTracker() = default;
  RecurrenceTracker(std::size_t n, std::int64_t start, std::int64_t window)
      : start_(start), window_(window), last_hit_(n, start - 1), max_gap_(n, 0), failures_(n, 0) {}

  void observe(std::size_t task, std::int64_t step, bool hit) {
    if (step < start_ || !hit) return;
    close_gap(task, step);
  }

  /// `end` is the last step observed.
  void finish(std::int64_t end) {
    if (finished_) return;
    finished_ = true;
    end_ = end;
    for (std::size_t i = 0; i < last_hit_.size(); ++i) close_gap(i, end + 1);
  }

  /// False when fewer than `window` steps follow the burn-in: no window fits.
  bool applicable() const { return end_ - start_ + 1 >= window_; }
  std::int64_t max_gap(std::size_t task) const { return max_gap_[task]; }
  std::int64_t failed_gaps(std::size_t task) const { return failures_[task]; }
  std::int64_t total_failures() const {
    std::int64_t t = 0;
    for (auto f : failures_) t += f;
    return t;
  }
  std::int64_t window() const { return window_; }
  bool pass() const { return !applicable() || total_failures() == 0; }

 private:
  void close_gap(std::size_t task, std::int64_t step) {
    const std::int64_t gap = step - last_hit_[task];
    max_gap_[task] = std::max(max_gap_[task], gap);
    if (gap > window_) ++failures_[task];
    last_hit_[task] = step;
  }

  std::int64_t start_ = 0;
  std::int64_t window_ = 1;
  std::int64_t end_ = -1;
  bool finished_ = false;
  std::vector<std::int64_t> last_hit_;
  std::vector<std::int64_t> max_gap_;
  std::vector<std::int64_t> failures_;
};

struct MonitorOptions {
  double burn_in_fraction = 0.10;
  double optimality_tail_fraction = 0.20;
  double optimality_radius = 0.05;
  double balance_margin = 0.05;
  double simplex_tol = 1e-9;
  double zero_sum_tol = 1e-12;
};

/// Consumes every StepRecord of a run (stride 1) and evaluates the per-step
/// invariants of the resource and level recursions.
class PropertyMonitor {
 public:
  PropertyMonitor(std::span<const TaskSpec> specs, const EngineConfig& cfg,
                  MonitorOptions opt = {})
      : specs_(specs.begin(), specs.end()),
        cfg_(cfg),
        opt_(opt),
        bounds_(bounds(specs_, cfg)),
        prev_v_(initial_snapshot(specs_, cfg).allocation()) {
    const std::size_t n = specs_.size();
    const auto burn = static_cast<std::int64_t>(std::ceil(opt_.burn_in_fraction * cfg.horizon));
    window_ = recurrence_window(bounds_, cfg.epsilon);
    beta_ = std::min(1.0, bounds_.beta_star + opt_.balance_margin);
    starvation_ = RecurrenceTracker(n, burn, window_);
    balance_ = RecurrenceTracker(n, burn, window_);
    tail_start_ = cfg.horizon -
                  static_cast<std::int64_t>(std::floor(opt_.optimality_tail_fraction * cfg.horizon));
    near_opt_.assign(n, 0);
    slack_ = 2.0 * cfg.eta_bar * cfg.eta_bar + 1e-12;
  }

  void operator()(const StepRecord& r) {
    const std::size_t n = specs_.size();
    const double nd = static_cast<double>(n);
    last_step_ = r.step;

    double sum = 0.0;
    double f_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      sum += r.v[i];
      f_sum += r.f[i];
      if (!(r.v[i] >= 0.0 && r.v[i] <= 1.0) || !(r.s[i] >= 0.0 && r.s[i] <= 1.0)) ++box_violations_;
      // Bounds on F are stated in terms of the pre-step share.
      const double vi = prev_v_[i];
      const double lo = bounds_.lambda_min / bounds_.c_max - vi * nd;
      const double hi = 1.0 - vi * nd * bounds_.lambda_min / bounds_.c_max;
      if (r.f[i] < lo - slack_ || r.f[i] > hi + slack_) ++prop2_violations_;
      starvation_.observe(i, r.step, r.v[i] > bounds_.alpha_star);
      balance_.observe(i, r.step, r.v[i] < beta_);
    }
    max_simplex_error_ = std::max(max_simplex_error_, std::abs(sum - 1.0));
    max_zero_sum_ = std::max(max_zero_sum_, std::abs(f_sum));
    min_phi_sq_ = std::min(min_phi_sq_, r.phi_sq_sum);

    if (r.step >= tail_start_) {
      ++tail_steps_;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = specs_[i].demand.at(r.step);
        const double target = argmax_s(*specs_[i].utility, r.v[i], d, 1e-9);
        if (std::abs(r.s[i] - target) < opt_.optimality_radius) ++near_opt_[i];
      }
    }
    prev_v_ = r.v;
  }

  void finish() {
    starvation_.finish(last_step_);
    balance_.finish(last_step_);
  }

  const BoundSet& bound_set() const { return bounds_; }
  std::int64_t window() const { return window_; }
  double balance_level() const { return beta_; }

  bool simplex_ok() const { return max_simplex_error_ <= opt_.simplex_tol && box_violations_ == 0; }
  double max_simplex_error() const { return max_simplex_error_; }
  std::int64_t box_violations() const { return box_violations_; }
  double max_zero_sum() const { return max_zero_sum_; }
  bool zero_sum_ok() const { return max_zero_sum_ <= opt_.zero_sum_tol; }
  std::int64_t prop2_violations() const { return prop2_violations_; }
  const RecurrenceTracker& starvation() const { return starvation_; }
  const RecurrenceTracker& balance() const { return balance_; }
  /// Balance is vacuous when beta* >= 1: no share can exceed it.
  bool balance_vacuous() const { return bounds_.beta_star >= 1.0; }
  double min_phi_sq() const { return min_phi_sq_; }

  /// Fraction of tail steps where task i sat within the radius of argmax_s.
  double optimality_fraction(std::size_t i) const {
    return tail_steps_ == 0 ? 0.0 : static_cast<double>(near_opt_[i]) / static_cast<double>(tail_steps_);
  }
  double min_optimality_fraction() const {
    double m = 1.0;
    for (std::size_t i = 0; i < specs_.size(); ++i) m = std::min(m, optimality_fraction(i));
    return m;
  }

 private:
  std::vector<TaskSpec> specs_;
  EngineConfig cfg_;
  MonitorOptions opt_;
  BoundSet bounds_;
  std::vector<double> prev_v_;
  std::int64_t window_ = 0;
  double beta_ = 1.0;
  double slack_ = 0.0;
  RecurrenceTracker starvation_;
  RecurrenceTracker balance_;
  std::int64_t tail_start_ = 0;
  std::int64_t tail_steps_ = 0;
  std::vector<std::int64_t> near_opt_;
  std::int64_t last_step_ = -1;
  double max_simplex_error_ = 0.0;
  double max_zero_sum_ = 0.0;
  double min_phi_sq_ = std::numeric_limits<double>::infinity();
  std::int64_t box_violations_ = 0;
  std::int64_t prop2_violations_ = 0;
};

}  // namespace fairalloc::oracle
