#pragma once

#include <memory>
#include <vector>

#include "fairalloc/core.hpp"
#include "fairalloc/utility.hpp"

namespace testkit {

using namespace fairalloc;

/// u(s, v, d) = value everywhere.
class ConstantModel final : public UtilityModel {
 public:
  explicit ConstantModel(double value, double bound = 10.0) : value_(value), bound_(bound) {}
  double eval(double, double, double) const override { return value_; }
  double bound_c() const override { return bound_; }
  std::string kind() const override { return "constant"; }

 private:
  double value_;
  double bound_;
};

inline TaskSpec task(int id, double weight, UtilityModelRef m, double demand = 0.4) {
  TaskSpec t;
  t.id = id;
  t.weight = weight;
  t.utility = std::move(m);
  t.demand = DemandSchedule({{0, demand}});
  return t;
}

inline UtilityModelRef home(double a, double b, double c, double kappa, double h) {
  HomeEnergyModel::Params p;
  p.a = a;
  p.b = b;
  p.c = c;
  p.kappa = kappa;
  p.h = h;
  return std::make_shared<HomeEnergyModel>(p);
}

inline UtilityModelRef cpu(double a, double b, double h, double theta) {
  CpuBandwidthModel::Params p;
  p.a = a;
  p.b = b;
  p.h = h;
  p.theta = theta;
  return std::make_shared<CpuBandwidthModel>(p);
}

inline EngineConfig quiet_config(std::int64_t horizon = 100) {
  EngineConfig cfg;
  cfg.epsilon = 5e-4;
  cfg.gamma = 100.0;
  cfg.horizon = horizon;
  cfg.seed = 1;
  return cfg;
}

}  // namespace testkit
