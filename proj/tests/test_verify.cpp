#include <gtest/gtest.h>

#include "fairalloc/verify.hpp"
#include "helpers.hpp"

using namespace fairalloc;

namespace {

const VerifyItem& item(const VerifyReport& r, const std::string& name) {
  for (const auto& i : r.items)
    if (i.name == name) return i;
  throw std::out_of_range(name);
}

}  // namespace

TEST(Verify, IdenticalFourWithoutMeasurementNoiseAllPass) {
  auto sc = build_identical_four();
  sc.cfg.eta_bar = 0.0;
  const auto rep = verify_scenario(sc);
  for (const auto& i : rep.items) EXPECT_TRUE(i.pass) << i.name << ": " << i.detail;
  EXPECT_TRUE(rep.all_pass());
  const auto j = verify_to_json(rep);
  EXPECT_TRUE(j["all_pass"].get<bool>());
  EXPECT_EQ(j["properties"].size(), rep.items.size());
}

TEST(Verify, SingleTaskBalanceIsVacuousPass) {
  Scenario sc;
  sc.name = "one";
  sc.specs.push_back(testkit::task(0, 1.0, testkit::home(2, 1, 2, 1, 0.5), 0.4));
  sc.specs[0].utility = fit_normalizer(sc.specs[0].utility, demand_domain(sc.specs[0].demand));
  sc.cfg = reference_engine_defaults();
  sc.cfg.horizon = 4000;
  const auto rep = verify_scenario(sc);
  const auto& bal = item(rep, "balance_window");
  EXPECT_TRUE(bal.pass);
  EXPECT_NE(bal.detail.find("vacuous"), std::string::npos);
  EXPECT_TRUE(item(rep, "simplex").pass);
}

TEST(Verify, BreachIsReported) {
  auto sc = build_random(30, 1);
  sc.cfg.epsilon = 0.1;
  sc.cfg.gamma = 5.0;
  std::vector<double> v(30, 0.5 / 29);
  v[0] = 0.5;
  sc.cfg.v_init = v;
  sc.cfg.horizon = 2000;
  const auto rep = verify_scenario(sc);
  EXPECT_TRUE(rep.breach);
  EXPECT_FALSE(item(rep, "simplex").pass);
  EXPECT_FALSE(rep.all_pass());
}

TEST(LimitSet, ClustersMultiStartEndpoints) {
  const auto sc = build_random(4, 6, ModelMix::mixed, 100);
  const auto d = demands_at(sc.specs, 0);
  const auto ls = multi_start_limit_points(sc.specs, d, 3);
  EXPECT_GE(ls.clusters.size(), 1u);
  EXPECT_LE(ls.max_residual, 1e-6);
}
