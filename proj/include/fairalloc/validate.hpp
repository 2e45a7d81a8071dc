#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "fairalloc/bounds.hpp"
#include "fairalloc/core.hpp"
#include "fairalloc/utility.hpp"

namespace fairalloc {

enum class Severity { warning, error };

struct Finding {
  Severity severity;
  std::string code;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool has_errors() const {
    for (const auto& f : findings)
      if (f.severity == Severity::error) return true;
    return false;
  }
  bool has(const std::string& code) const {
    for (const auto& f : findings)
      if (f.code == code) return true;
    return false;
  }
};

/// Collects every configuration problem instead of stopping at the first.
/// `specs` may be empty, in which case the step-size feasibility warning is
/// skipped (it needs weights and utility bounds).
inline ValidationReport validate_config(const EngineConfig& cfg, std::size_t n,
                                        const std::vector<TaskSpec>& specs = {}) {
  ValidationReport rep;
  auto add = [&](Severity s, std::string code, std::string msg) {
    rep.findings.push_back({s, std::move(code), std::move(msg)});
  };
  if (n < 1) add(Severity::error, "no_tasks", "at least one task is required");
  if (!(cfg.epsilon > 0.0)) add(Severity::error, "epsilon", "epsilon must be positive");
  if (!(cfg.mu_exponent > 0.0 && cfg.mu_exponent < 1.0))
    add(Severity::error, "mu_exponent", "mu_exponent must lie in (0,1)");
  if (!(cfg.gamma > 0.0)) add(Severity::error, "gamma", "gamma must be positive");
  if (cfg.epsilon > 0.0 && cfg.gamma > 0.0 && !(cfg.kappa() < 1.0)) {
    std::ostringstream os;
    os << "eps*mu(eps) = " << cfg.level_step() << " is not below 1/gamma = " << 1.0 / cfg.gamma;
    add(Severity::error, "theorem1_step", os.str());
  }
  if (cfg.eta_bar < 0.0) add(Severity::error, "eta_bar", "eta_bar must be non-negative");
  if (cfg.eta_bar >= 1.0)
    add(Severity::error, "eta_bar",
        "eta_bar >= 1: the inverse-utility expansion no longer converges");
  if (cfg.zeta_bar < 0.0) add(Severity::error, "zeta_bar", "zeta_bar must be non-negative");
  if (cfg.horizon < 0) add(Severity::error, "horizon", "horizon must be non-negative");
  if (!(cfg.s_init >= 0.0 && cfg.s_init <= 1.0))
    add(Severity::error, "s_init", "s_init must lie in [0,1]");
  if (cfg.v_init) {
    if (cfg.v_init->size() != n)
      add(Severity::error, "v_init", "v_init length does not match task count");
    else if (!on_simplex(*cfg.v_init, 1e-12))
      add(Severity::error, "v_init", "v_init is not on the unit simplex");
  }
  if (!specs.empty() && cfg.epsilon > 0.0) {
    bool usable = true;
    for (const auto& t : specs) usable = usable && t.utility && t.weight > 0.0;
    if (usable) {
      const double safe = oracle::safe_epsilon(specs.size(), min_weight(specs),
                                               oracle::max_bound_c(specs), cfg.eta_bar);
      if (cfg.epsilon > safe) {
        std::ostringstream os;
        os << "epsilon " << cfg.epsilon << " exceeds the conservative feasibility bound " << safe;
        add(Severity::warning, "safe_epsilon", os.str());
      }
    }
  }
  return rep;
}

}  // namespace fairalloc
