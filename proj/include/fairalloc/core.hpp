#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace fairalloc {

class UtilityModel;
using UtilityModelRef = std::shared_ptr<const UtilityModel>;

/// Thrown when an engine configuration or a task description is unusable.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Demand schedules

/// Piecewise-constant demand over the step index. Zones are (start_step, value)
/// pairs with strictly increasing starts, the first starting at 0.
class DemandSchedule {
 public:
  struct Zone {
    std::int64_t start;
    double value;
  };

  DemandSchedule() : zones_{{0, 0.0}} {}
  explicit DemandSchedule(double constant) : zones_{{0, constant}} {}
  explicit DemandSchedule(std::vector<Zone> zones) : zones_(std::move(zones)) {
    if (zones_.empty()) throw ConfigError("demand schedule has no zones");
    if (zones_.front().start != 0)
      throw ConfigError("first demand zone must start at step 0");
    for (std::size_t z = 1; z < zones_.size(); ++z) {
      if (zones_[z].start <= zones_[z - 1].start)
        throw ConfigError("demand zone starts must be strictly increasing");
    }
    for (const auto& z : zones_) {
      if (!std::isfinite(z.value)) throw ConfigError("demand value is not finite");
    }
  }

  double at(std::int64_t step) const {
    double d = zones_.front().value;
    for (const auto& z : zones_) {
      if (z.start > step) break;
      d = z.value;
    }
    return d;
  }

  double min_value() const {
    double m = zones_.front().value;
    for (const auto& z : zones_) m = std::min(m, z.value);
    return m;
  }
  double max_value() const {
    double m = zones_.front().value;
    for (const auto& z : zones_) m = std::max(m, z.value);
    return m;
  }

  const std::vector<Zone>& zones() const { return zones_; }

 private:
  std::vector<Zone> zones_;
};

// ---------------------------------------------------------------------------
// Tasks and state

struct TaskSpec {
  int id = 0;
  double weight = 1.0;  // lambda_i in (0,1]
  UtilityModelRef utility;
  DemandSchedule demand;
};

inline void check_task(const TaskSpec& t) {
  if (!(t.weight > 0.0 && t.weight <= 1.0)) {
    std::ostringstream os;
    os << "task " << t.id << ": weight " << t.weight << " outside (0,1]";
    throw ConfigError(os.str());
  }
  if (!t.utility) {
    std::ostringstream os;
    os << "task " << t.id << ": missing utility model";
    throw ConfigError(os.str());
  }
}

/// x_i = (v_i, s_i, rho_i, sigma_i).
struct TaskState {
  double v = 0.0;      // resource share
  double s = 0.0;      // operation level
  double rho = 0.0;    // low-pass filter of measured utility
  double sigma = 0.0;  // low-pass filter of the operation level
};

inline double min_weight(const std::vector<TaskSpec>& specs) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& t : specs) m = std::min(m, t.weight);
  return m;
}

// ---------------------------------------------------------------------------
// Engine configuration

struct EngineConfig {
  double epsilon = 5e-4;
  double mu_exponent = 1.0 / 20.0;  // mu(eps) = eps^{-p}
  double gamma = 100.0;
  double eta_bar = 0.0;
  double zeta_bar = 0.0;
  std::int64_t horizon = 0;
  std::uint64_t seed = 0;
  double s_init = 0.5;
  std::optional<std::vector<double>> v_init;
  bool freeze_levels = false;

  double mu() const { return std::pow(epsilon, -mu_exponent); }
  /// Effective step of the operation-level recursion, eps * mu(eps).
  double level_step() const { return epsilon * mu(); }
  /// kappa = eps * mu(eps) * gamma; the filters contract iff kappa < 1.
  double kappa() const { return level_step() * gamma; }

  /// Throws ConfigError on any hard violation. Soft findings are left to
  /// validate_config.
  void check(std::size_t n) const;
};

inline bool on_simplex(const std::vector<double>& v, double tol) {
  double sum = 0.0;
  for (double x : v) {
    if (!(x >= -tol && x <= 1.0 + tol)) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

inline void EngineConfig::check(std::size_t n) const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (n == 0) fail("no tasks");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) fail("epsilon must be positive");
  if (!(mu_exponent > 0.0 && mu_exponent < 1.0)) fail("mu_exponent must lie in (0,1)");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) fail("gamma must be positive");
  if (!(eta_bar >= 0.0)) fail("eta_bar must be non-negative");
  if (!(zeta_bar >= 0.0)) fail("zeta_bar must be non-negative");
  if (eta_bar >= 1.0) fail("eta_bar must be below 1");
  if (horizon < 0) fail("horizon must be non-negative");
  if (!(s_init >= 0.0 && s_init <= 1.0)) fail("s_init must lie in [0,1]");
  if (!(kappa() < 1.0)) {
    std::ostringstream os;
    os << "step condition eps*mu(eps) < 1/gamma violated: eps*mu(eps)*gamma = " << kappa();
    fail(os.str());
  }
  if (v_init) {
    if (v_init->size() != n) fail("v_init length does not match task count");
    if (!on_simplex(*v_init, 1e-12)) fail("v_init does not lie on the unit simplex");
  }
}

// ---------------------------------------------------------------------------
// Counter-based noise

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

enum class NoiseChannel : std::uint64_t { measurement = 1, dither = 2 };

/// Stateless keyed generator: every draw is a pure function of
/// (seed, channel, task, step), so results do not depend on evaluation order.
class NoiseSource {
 public:
  NoiseSource(std::uint64_t seed, double eta_bar, double zeta_bar)
      : seed_(seed), eta_bar_(eta_bar), zeta_bar_(zeta_bar) {}

  explicit NoiseSource(const EngineConfig& cfg)
      : NoiseSource(cfg.seed, cfg.eta_bar, cfg.zeta_bar) {}

  /// Uniform on [0,1) with 53 random bits.
  double uniform01(NoiseChannel ch, std::int64_t step, std::size_t task) const {
    std::uint64_t h = detail::splitmix64(seed_);
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(ch));
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(task));
    h = detail::splitmix64(h ^ static_cast<std::uint64_t>(step));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  }

  double measurement(std::int64_t step, std::size_t task) const {
    return symmetric(eta_bar_, uniform01(NoiseChannel::measurement, step, task));
  }
  double dither(std::int64_t step, std::size_t task) const {
    return symmetric(zeta_bar_, uniform01(NoiseChannel::dither, step, task));
  }

  double eta_bar() const { return eta_bar_; }
  double zeta_bar() const { return zeta_bar_; }

 private:
  static double symmetric(double bound, double u01) {
    if (bound == 0.0) return 0.0;
    return bound * (2.0 * u01 - 1.0);
  }

  std::uint64_t seed_;
  double eta_bar_;
  double zeta_bar_;
};

inline double draw_measurement_noise(const NoiseSource& src, std::int64_t step, std::size_t task) {
  return src.measurement(step, task);
}

}  // namespace fairalloc
