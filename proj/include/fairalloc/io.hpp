#pragma once

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fairalloc/core.hpp"
#include "fairalloc/dynamics.hpp"
#include "fairalloc/scenario.hpp"
#include "fairalloc/utility.hpp"

namespace fairalloc::io {

using nlohmann::json;

/// Scenario document problem, tagged with the JSON path that caused it.
class ScenarioError : public ConfigError {
 public:
  ScenarioError(const std::string& path, const std::string& what)
      : ConfigError(path + ": " + what), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

namespace detail {

inline const json& member(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ScenarioError(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ScenarioError(path + "/" + key, "missing required field");
  return *it;
}

inline double number(const json& j, const std::string& key, const std::string& path) {
  const auto& v = member(j, key, path);
  if (!v.is_number()) throw ScenarioError(path + "/" + key, "expected a number");
  return v.get<double>();
}

inline double number_or(const json& j, const std::string& key, const std::string& path, double fallback) {
  if (!j.contains(key)) return fallback;
  return number(j, key, path);
}

inline std::optional<double> optional_number(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) return std::nullopt;
  return number(j, key, path);
}

inline std::int64_t integer(const json& j, const std::string& key, const std::string& path) {
  const auto& v = member(j, key, path);
  if (!v.is_number_integer()) throw ScenarioError(path + "/" + key, "expected an integer");
  return v.get<std::int64_t>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Models

inline json model_to_json(const UtilityModel& m) {
  if (const auto* he = dynamic_cast<const HomeEnergyModel*>(&m)) {
    const auto& p = he->params();
    return {{"type", "home_energy"}, {"a", p.a},     {"b", p.b},
            {"c", p.c},              {"kappa", p.kappa}, {"h", p.h},
            {"bound_c", he->bound_c()}};
  }
  if (const auto* cpu = dynamic_cast<const CpuBandwidthModel*>(&m)) {
    const auto& p = cpu->params();
    return {{"type", "cpu_bandwidth"}, {"a", p.a}, {"b", p.b}, {"h", p.h}, {"theta", p.theta},
            {"v_floor", p.v_floor},    {"bound_c", cpu->bound_c()}};
  }
  if (const auto* af = dynamic_cast<const AffineNormalizer*>(&m)) {
    return {{"type", "affine"},
            {"scale", af->scale()},
            {"shift", af->shift()},
            {"bound_c", af->bound_c()},
            {"inner", model_to_json(*af->inner())}};
  }
  throw std::invalid_argument("model_to_json: unsupported model kind " + m.kind());
}

/// `domain` is used when the document asks for a fitted normaliser.
inline UtilityModelRef model_from_json(const json& j, const std::string& path,
                                       const ValidationDomain& domain) {
  const auto& type_node = detail::member(j, "type", path);
  if (!type_node.is_string()) throw ScenarioError(path + "/type", "expected a string");
  const auto type = type_node.get<std::string>();
  UtilityModelRef model;
  if (type == "home_energy") {
    HomeEnergyModel::Params p;
    p.a = detail::number(j, "a", path);
    p.b = detail::number(j, "b", path);
    p.c = detail::number(j, "c", path);
    p.kappa = detail::number(j, "kappa", path);
    p.h = detail::number(j, "h", path);
    p.bound_c = detail::optional_number(j, "bound_c", path);
    model = std::make_shared<HomeEnergyModel>(p);
  } else if (type == "cpu_bandwidth") {
    CpuBandwidthModel::Params p;
    p.a = detail::number(j, "a", path);
    p.b = detail::number(j, "b", path);
    p.h = detail::number(j, "h", path);
    p.theta = detail::number(j, "theta", path);
    p.v_floor = detail::number_or(j, "v_floor", path, p.v_floor);
    p.bound_c = detail::optional_number(j, "bound_c", path);
    try {
      model = std::make_shared<CpuBandwidthModel>(p);
    } catch (const ConfigError& e) {
      throw ScenarioError(path, e.what());
    }
  } else if (type == "affine") {
    auto inner = model_from_json(detail::member(j, "inner", path), path + "/inner", domain);
    try {
      model = std::make_shared<AffineNormalizer>(inner, detail::number(j, "scale", path),
                                                 detail::number(j, "shift", path),
                                                 detail::number(j, "bound_c", path));
    } catch (const ConfigError& e) {
      throw ScenarioError(path, e.what());
    }
  } else {
    throw ScenarioError(path + "/type", "unknown model type '" + type + "'");
  }
  if (j.contains("normalize")) {
    const auto& nj = j.at("normalize");
    const std::string npath = path + "/normalize";
    double c_target = 2.0;
    ValidationDomain dom = domain;
    if (nj.is_object()) {
      c_target = detail::number_or(nj, "c_target", npath, c_target);
      dom.grid_n = static_cast<int>(detail::number_or(nj, "grid_n", npath, dom.grid_n));
    } else if (!nj.is_boolean()) {
      throw ScenarioError(npath, "expected an object or a boolean");
    }
    if (!nj.is_boolean() || nj.get<bool>()) {
      try {
        model = fit_normalizer(model, dom, c_target);
      } catch (const ConfigError& e) {
        throw ScenarioError(npath, e.what());
      }
    }
  }
  return model;
}

// ---------------------------------------------------------------------------
// Engine config

inline json config_to_json(const EngineConfig& cfg) {
  json j = {{"epsilon", cfg.epsilon},   {"mu_exponent", cfg.mu_exponent},
            {"gamma", cfg.gamma},       {"eta_bar", cfg.eta_bar},
            {"zeta_bar", cfg.zeta_bar}, {"horizon", cfg.horizon},
            {"seed", cfg.seed},         {"s_init", cfg.s_init},
            {"freeze_levels", cfg.freeze_levels}};
  if (cfg.v_init) j["v_init"] = *cfg.v_init;
  return j;
}

inline EngineConfig config_from_json(const json& j, const std::string& path) {
  EngineConfig cfg;
  if (!j.is_object()) throw ScenarioError(path, "expected an object");
  cfg.epsilon = detail::number(j, "epsilon", path);
  cfg.mu_exponent = detail::number_or(j, "mu_exponent", path, cfg.mu_exponent);
  cfg.gamma = detail::number_or(j, "gamma", path, cfg.gamma);
  cfg.eta_bar = detail::number_or(j, "eta_bar", path, cfg.eta_bar);
  cfg.zeta_bar = detail::number_or(j, "zeta_bar", path, cfg.zeta_bar);
  cfg.horizon = detail::integer(j, "horizon", path);
  if (j.contains("seed")) {
    const auto& s = j.at("seed");
    if (!s.is_number_integer()) throw ScenarioError(path + "/seed", "expected an integer");
    cfg.seed = s.is_number_unsigned() ? s.get<std::uint64_t>()
                                      : static_cast<std::uint64_t>(s.get<std::int64_t>());
  }
  cfg.s_init = detail::number_or(j, "s_init", path, cfg.s_init);
  if (j.contains("freeze_levels")) {
    if (!j.at("freeze_levels").is_boolean())
      throw ScenarioError(path + "/freeze_levels", "expected a boolean");
    cfg.freeze_levels = j.at("freeze_levels").get<bool>();
  }
  if (j.contains("v_init") && !j.at("v_init").is_null()) {
    const auto& vj = j.at("v_init");
    if (!vj.is_array()) throw ScenarioError(path + "/v_init", "expected an array");
    std::vector<double> v;
    for (std::size_t i = 0; i < vj.size(); ++i) {
      if (!vj[i].is_number())
        throw ScenarioError(path + "/v_init/" + std::to_string(i), "expected a number");
      v.push_back(vj[i].get<double>());
    }
    cfg.v_init = std::move(v);
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Scenarios

inline json scenario_to_json(const Scenario& sc) {
  json tasks = json::array();
  for (const auto& t : sc.specs) {
    json zones = json::array();
    for (const auto& z : t.demand.zones()) zones.push_back({z.start, z.value});
    tasks.push_back({{"weight", t.weight}, {"model", model_to_json(*t.utility)}, {"demand_zones", zones}});
  }
  return {{"name", sc.name}, {"tasks", tasks}, {"engine", config_to_json(sc.cfg)}};
}

inline Scenario scenario_from_json(const json& doc) {
  Scenario sc;
  if (!doc.is_object()) throw ScenarioError("", "scenario document must be an object");
  sc.name = doc.value("name", std::string("scenario"));
  const auto& tasks = detail::member(doc, "tasks", "");
  if (!tasks.is_array() || tasks.empty()) throw ScenarioError("/tasks", "expected a non-empty array");
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::string tpath = "/tasks/" + std::to_string(i);
    const auto& tj = tasks[i];
    TaskSpec t;
    t.id = static_cast<int>(i);
    t.weight = detail::number(tj, "weight", tpath);
    if (!(t.weight > 0.0 && t.weight <= 1.0)) throw ScenarioError(tpath + "/weight", "must lie in (0,1]");

    const auto& zj = detail::member(tj, "demand_zones", tpath);
    if (!zj.is_array() || zj.empty())
      throw ScenarioError(tpath + "/demand_zones", "expected a non-empty array");
    std::vector<DemandSchedule::Zone> zones;
    for (std::size_t z = 0; z < zj.size(); ++z) {
      const std::string zpath = tpath + "/demand_zones/" + std::to_string(z);
      const auto& pair = zj[z];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number())
        throw ScenarioError(zpath, "expected [start_step, demand]");
      zones.push_back({pair[0].get<std::int64_t>(), pair[1].get<double>()});
    }
    try {
      t.demand = DemandSchedule(std::move(zones));
    } catch (const ConfigError& e) {
      throw ScenarioError(tpath + "/demand_zones", e.what());
    }
    t.utility = model_from_json(detail::member(tj, "model", tpath), tpath + "/model",
                                demand_domain(t.demand));
    sc.specs.push_back(std::move(t));
  }
  sc.cfg = config_from_json(detail::member(doc, "engine", ""), "/engine");
  return sc;
}

/// Applies `key=value`; dotted keys address nested members ("engine.gamma"),
/// bare keys address engine fields. Values are parsed as JSON when possible.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  if (key.find('.') == std::string::npos) key = "engine." + key;
  std::string pointer;
  std::stringstream ks(key);
  for (std::string part; std::getline(ks, part, '.');) pointer += "/" + part;
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  doc[json::json_pointer(pointer)] = value;
}

// ---------------------------------------------------------------------------
// Trace CSV

inline std::string trace_header(std::size_t n) {
  std::string h = "step";
  for (std::size_t i = 1; i <= n; ++i) {
    const auto k = std::to_string(i);
    h += ",v_" + k + ",s_" + k + ",u_" + k + ",F_" + k + ",Phi_" + k;
  }
  h += ",phi_sq_sum";
  return h;
}

inline void write_number(std::ostream& os, double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  os << buf;
}

inline void write_trace_row(std::ostream& os, const StepRecord& r) {
  os << r.step;
  for (std::size_t i = 0; i < r.v.size(); ++i) {
    for (double x : {r.v[i], r.s[i], r.u[i], r.f[i], r.phi[i]}) {
      os << ',';
      write_number(os, x);
    }
  }
  os << ',';
  write_number(os, r.phi_sq_sum);
  os << '\n';
}

inline void write_trace_csv(std::ostream& os, const std::vector<StepRecord>& records, std::size_t n) {
  os << trace_header(n) << '\n';
  for (const auto& r : records) write_trace_row(os, r);
}

inline std::vector<StepRecord> read_trace_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("trace: missing header");
  std::size_t columns = 1;
  for (char c : line) columns += c == ',';
  if (columns < 7 || (columns - 2) % 5 != 0) throw std::runtime_error("trace: malformed header");
  const std::size_t n = (columns - 2) / 5;
  if (line != trace_header(n)) throw std::runtime_error("trace: unexpected header");

  std::vector<StepRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (cells.size() != columns) throw std::runtime_error("trace: wrong column count");
    StepRecord r;
    r.step = std::stoll(cells[0]);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t b = 1 + 5 * i;
      r.v.push_back(std::stod(cells[b]));
      r.s.push_back(std::stod(cells[b + 1]));
      r.u.push_back(std::stod(cells[b + 2]));
      r.f.push_back(std::stod(cells[b + 3]));
      r.phi.push_back(std::stod(cells[b + 4]));
    }
    r.phi_sq_sum = std::stod(cells.back());
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Summary

inline json stats_json(const std::vector<Stat>& xs) {
  json mean = json::array(), sd = json::array();
  for (const auto& s : xs) {
    mean.push_back(s.mean);
    sd.push_back(s.stdev);
  }
  return {{"mean", mean}, {"stdev", sd}};
}

inline json result_to_json(const ScenarioResult& res) {
  json zones = json::array();
  for (const auto& z : res.zones) {
    json zj = {{"index", z.index},         {"start", z.start},
               {"end", z.end},             {"completed", z.completed},
               {"tail_records", z.tail_records}, {"insufficient_data", z.insufficient_data}};
    if (!z.insufficient_data) {
      zj["v"] = stats_json(z.v);
      zj["s"] = stats_json(z.s);
      zj["F"] = stats_json(z.f);
      zj["abs_F"] = stats_json(z.abs_f);
      zj["phi_sq_sum"] = {{"mean", z.phi_sq.mean}, {"stdev", z.phi_sq.stdev}};
      zj["adaptation_steps"] = z.adaptation_steps ? json(*z.adaptation_steps) : json(nullptr);
    }
    zones.push_back(std::move(zj));
  }
  json j = {{"zones", zones}, {"steps_completed", res.steps_completed}};
  j["breach"] = res.breach ? json(*res.breach) : json(nullptr);
  if (res.verdicts) {
    const auto& v = *res.verdicts;
    j["verdicts"] = {{"feasibility", v.feasibility},
                     {"starvation", v.starvation},
                     {"balance", v.balance},
                     {"balance_vacuous", v.balance_vacuous},
                     {"fairness_residual", v.fairness_residual},
                     {"s_optimality", v.s_optimality},
                     {"max_simplex_error", v.max_simplex_error},
                     {"prop2_violations", v.prop2_violations},
                     {"starvation_failures", v.starvation_failures},
                     {"balance_failures", v.balance_failures},
                     {"max_tail_abs_F", v.max_tail_abs_f},
                     {"min_optimality_fraction", v.min_optimality_fraction}};
  }
  return j;
}

}  // namespace fairalloc::io
