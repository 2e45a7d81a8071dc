#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fairalloc/core.hpp"

namespace fairalloc {

/// Performance function u_i(s, v, d) with a declared ceiling c_i.
///
/// Implementations are immutable; eval must be pure so that repeated calls
/// with the same arguments are bitwise identical.
class UtilityModel {
 public:
  virtual ~UtilityModel() = default;

  virtual double eval(double s, double v, double d) const = 0;
  /// Declared bound c_i of (U1): 1 <= u < c_i.
  virtual double bound_c() const = 0;
  /// d u / d s when the model knows it in closed form.
  virtual std::optional<double> grad_s(double s, double v, double d) const {
    (void)s, (void)v, (void)d;
    return std::nullopt;
  }
  virtual std::string kind() const = 0;
};

// ---------------------------------------------------------------------------

/// u = a (kappa - (s - d)^2) + b (v - h s) + c
class HomeEnergyModel final : public UtilityModel {
 public:
  struct Params {
    double a = 2.0;
    double b = 1.0;
    double c = 2.0;
    double kappa = 1.0;
    double h = 1.0;
    std::optional<double> bound_c;
  };

  explicit HomeEnergyModel(Params p) : p_(p) {
    bound_ = p_.bound_c ? *p_.bound_c : p_.a * p_.kappa + p_.b + p_.c + 1e-6;
  }

  double eval(double s, double v, double d) const override {
    const double dev = s - d;
    return p_.a * (p_.kappa - dev * dev) + p_.b * (v - p_.h * s) + p_.c;
  }
  double bound_c() const override { return bound_; }
  std::optional<double> grad_s(double s, double, double d) const override {
    return -2.0 * p_.a * (s - d) - p_.b * p_.h;
  }
  std::string kind() const override { return "home_energy"; }

  const Params& params() const { return p_; }

 private:
  Params p_;
  double bound_;
};

/// u = -a (h - theta s / v)^2 + b, with v clamped below at v_floor.
class CpuBandwidthModel final : public UtilityModel {
 public:
  struct Params {
    double a = 1.0;
    double b = 2.0;
    double h = 1.0;      // soft deadline D_i
    double theta = 1.0;  // execution time per unit level
    double v_floor = 1e-3;
    std::optional<double> bound_c;
  };

  explicit CpuBandwidthModel(Params p) : p_(p) {
    if (!(p_.v_floor > 0.0)) throw ConfigError("cpu_bandwidth: v_floor must be positive");
    bound_ = p_.bound_c ? *p_.bound_c : p_.b + 1e-6;
  }

  double effective_v(double v) const { return std::max(v, p_.v_floor); }

  /// R = theta s / v.
  double response_time(double s, double v) const { return p_.theta * s / effective_v(v); }

  double eval(double s, double v, double) const override {
    const double gap = p_.h - response_time(s, v);
    return -p_.a * gap * gap + p_.b;
  }
  double bound_c() const override { return bound_; }
  std::optional<double> grad_s(double s, double v, double) const override {
    const double ve = effective_v(v);
    return 2.0 * p_.a * (p_.h - p_.theta * s / ve) * (p_.theta / ve);
  }
  std::string kind() const override { return "cpu_bandwidth"; }

  const Params& params() const { return p_; }

 private:
  Params p_;
  double bound_;
};

/// alpha * inner + beta. Preserves concavity and the s-maximiser of inner.
class AffineNormalizer final : public UtilityModel {
 public:
  AffineNormalizer(UtilityModelRef inner, double scale, double shift, double bound_c)
      : inner_(std::move(inner)), scale_(scale), shift_(shift), bound_(bound_c) {
    if (!inner_) throw ConfigError("affine normalizer: missing inner model");
    if (!(scale_ > 0.0)) throw ConfigError("affine normalizer: scale must be positive");
  }

  double eval(double s, double v, double d) const override {
    return scale_ * inner_->eval(s, v, d) + shift_;
  }
  double bound_c() const override { return bound_; }
  std::optional<double> grad_s(double s, double v, double d) const override {
    auto g = inner_->grad_s(s, v, d);
    if (!g) return std::nullopt;
    return scale_ * *g;
  }
  std::string kind() const override { return "affine"; }

  const UtilityModelRef& inner() const { return inner_; }
  double scale() const { return scale_; }
  double shift() const { return shift_; }

 private:
  UtilityModelRef inner_;
  double scale_;
  double shift_;
  double bound_;
};

// ---------------------------------------------------------------------------
// Assumption checks

/// Box over which a model is validated. s always spans [0,1].
struct ValidationDomain {
  double v_lo = 0.0;
  double v_hi = 1.0;
  double d_lo = 0.0;
  double d_hi = 0.0;
  int grid_n = 33;

  double s_at(int i) const { return static_cast<double>(i) / (grid_n - 1); }
  double v_at(int j) const { return v_lo + (v_hi - v_lo) * j / (grid_n - 1); }
  double d_at(int l) const {
    return grid_n == 1 || d_hi == d_lo ? d_lo : d_lo + (d_hi - d_lo) * l / (grid_n - 1);
  }
};

struct LatticePoint {
  double s = 0.0;
  double v = 0.0;
  double d = 0.0;
  double value = 0.0;
};

struct AssumptionReport {
  bool bounds_ok = true;     // (U1)
  bool concavity_ok = true;  // (U2)
  bool gradient_ok = true;   // analytic vs finite difference, when available
  bool gradient_checked = false;
  std::optional<LatticePoint> first_bounds_violation;
  std::optional<LatticePoint> first_concavity_violation;
  std::optional<LatticePoint> first_gradient_violation;
  double min_value = 0.0;
  double max_value = 0.0;

  bool ok() const { return bounds_ok && concavity_ok && gradient_ok; }

  std::string describe() const {
    std::ostringstream os;
    os << "U1 " << (bounds_ok ? "ok" : "FAIL") << ", U2 " << (concavity_ok ? "ok" : "FAIL")
       << ", gradient " << (!gradient_checked ? "n/a" : gradient_ok ? "ok" : "FAIL")
       << ", range [" << min_value << ", " << max_value << "]";
    auto at = [&](const char* tag, const std::optional<LatticePoint>& p) {
      if (p)
        os << "; " << tag << " at (s=" << p->s << ", v=" << p->v << ", d=" << p->d
           << ") value " << p->value;
    };
    at("U1 violated", first_bounds_violation);
    at("U2 violated", first_concavity_violation);
    at("gradient mismatch", first_gradient_violation);
    return os.str();
  }
};

inline constexpr double kConcavityTol = 1e-8;
inline constexpr double kFiniteDiffStep = 1e-5;

inline double central_diff_s(const UtilityModel& m, double s, double v, double d,
                             double h = kFiniteDiffStep) {
  return (m.eval(s + h, v, d) - m.eval(s - h, v, d)) / (2.0 * h);
}

inline AssumptionReport validate_assumptions(const UtilityModel& m, const ValidationDomain& dom) {
  if (dom.grid_n < 3) throw std::invalid_argument("validate_assumptions: grid_n must be >= 3");
  AssumptionReport r;
  r.min_value = std::numeric_limits<double>::infinity();
  r.max_value = -std::numeric_limits<double>::infinity();
  const double c = m.bound_c();
  const int n = dom.grid_n;
  const double hs = 1.0 / (n - 1);

  for (int l = 0; l < n; ++l) {
    const double d = dom.d_at(l);
    for (int j = 0; j < n; ++j) {
      const double v = dom.v_at(j);
      for (int i = 0; i < n; ++i) {
        const double s = dom.s_at(i);
        const double u = m.eval(s, v, d);
        r.min_value = std::min(r.min_value, u);
        r.max_value = std::max(r.max_value, u);
        if (!(u >= 1.0 && u < c) && r.bounds_ok) {
          r.bounds_ok = false;
          r.first_bounds_violation = LatticePoint{s, v, d, u};
        }
        if (i > 0 && i < n - 1 && r.concavity_ok) {
          const double second = m.eval(s + hs, v, d) - 2.0 * u + m.eval(s - hs, v, d);
          if (second > kConcavityTol) {
            r.concavity_ok = false;
            r.first_concavity_violation = LatticePoint{s, v, d, second};
          }
        }
        if (auto g = m.grad_s(s, v, d)) {
          r.gradient_checked = true;
          const double fd = central_diff_s(m, s, v, d);
          if (std::abs(fd - *g) > 1e-6 * (1.0 + std::abs(*g)) && r.gradient_ok) {
            r.gradient_ok = false;
            r.first_gradient_violation = LatticePoint{s, v, d, fd - *g};
          }
        }
      }
    }
  }
  return r;
}

inline AssumptionReport validate_assumptions(const UtilityModel& m, double d_lo, double d_hi,
                                             int grid_n = 33) {
  ValidationDomain dom;
  dom.d_lo = d_lo;
  dom.d_hi = d_hi;
  dom.grid_n = grid_n;
  return validate_assumptions(m, dom);
}

/// Fits an AffineNormalizer mapping the model's range over `dom` (padded by
/// 1% on each side) onto [1, c_target].
inline std::shared_ptr<const AffineNormalizer> fit_normalizer(UtilityModelRef inner,
                                                              const ValidationDomain& dom,
                                                              double c_target = 2.0) {
  if (!(c_target > 1.0)) throw ConfigError("normalizer: c_target must exceed 1");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int l = 0; l < dom.grid_n; ++l)
    for (int j = 0; j < dom.grid_n; ++j)
      for (int i = 0; i < dom.grid_n; ++i) {
        const double u = inner->eval(dom.s_at(i), dom.v_at(j), dom.d_at(l));
        lo = std::min(lo, u);
        hi = std::max(hi, u);
      }
  if (!(hi > lo)) throw ConfigError("normalizer: model is constant over its domain");
  const double pad = 0.01 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double scale = (c_target - 1.0) / (hi - lo);
  const double shift = 1.0 - scale * lo;
  return std::make_shared<AffineNormalizer>(std::move(inner), scale, shift, c_target);
}

// ---------------------------------------------------------------------------

/// Golden-section search for argmax_{s in [0,1]} u(s, v, d). Valid for models
/// that are concave in s; boundary optima come out at the interval edge.
inline double argmax_s(const UtilityModel& m, double v, double d, double tol = 1e-10) {
  if (!(tol > 0.0)) throw std::invalid_argument("argmax_s: tol must be positive");
  constexpr double inv_phi = 0.6180339887498948482;
  double lo = 0.0;
  double hi = 1.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = m.eval(x1, v, d);
  double f2 = m.eval(x2, v, d);
  while (hi - lo > tol) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = m.eval(x2, v, d);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = m.eval(x1, v, d);
    }
  }
  double best = 0.5 * (lo + hi);
  // Value comparisons stall near sqrt(machine eps) on a flat top; with a
  // gradient the sign change can be bracketed to full precision.
  if (m.grad_s(best, v, d)) {
    double a = std::max(0.0, best - 1e-6);
    double b = std::min(1.0, best + 1e-6);
    if (*m.grad_s(a, v, d) > 0.0 && *m.grad_s(b, v, d) < 0.0) {
      for (int it = 0; it < 64 && b - a > 0.0; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) break;
        (*m.grad_s(mid, v, d) > 0.0 ? a : b) = mid;
      }
      best = 0.5 * (a + b);
    }
  }
  double fbest = m.eval(best, v, d);
  // The bracket never contains the endpoints exactly; compare against them.
  for (double edge : {0.0, 1.0}) {
    const double fe = m.eval(edge, v, d);
    if (fe > fbest) {
      best = edge;
      fbest = fe;
    }
  }
  return best;
}

}  // namespace fairalloc
