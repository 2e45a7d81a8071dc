#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fairalloc/bounds.hpp"
#include "fairalloc/validate.hpp"
#include "helpers.hpp"

using namespace fairalloc;
using namespace testkit;

namespace {

std::vector<TaskSpec> uniform_specs(std::size_t n, double lambda, double c) {
  std::vector<TaskSpec> specs;
  for (std::size_t i = 0; i < n; ++i)
    specs.push_back(task(static_cast<int>(i), lambda, std::make_shared<ConstantModel>(1.5, c)));
  return specs;
}

}  // namespace

TEST(Bounds, HandEvaluationFourTasks) {
  const auto b = oracle::bounds(uniform_specs(4, 1.0, 2.0), quiet_config());
  EXPECT_DOUBLE_EQ(b.alpha_star, 0.125);
  EXPECT_DOUBLE_EQ(b.beta_star, 0.5);
  EXPECT_DOUBLE_EQ(b.lambda_min, 1.0);
  EXPECT_DOUBLE_EQ(b.c_max, 2.0);
  EXPECT_NEAR(b.theorem1_kappa, 100 * std::pow(5e-4, 0.95), 1e-15);
}

TEST(Bounds, SingleTaskBalanceIsVacuous) {
  const auto b = oracle::bounds(uniform_specs(1, 0.5, 2.0), quiet_config());
  EXPECT_DOUBLE_EQ(b.alpha_star, 0.25);
  EXPECT_DOUBLE_EQ(b.beta_star, 4.0);
  EXPECT_GE(b.beta_star, 1.0);
  // Only the lower-edge condition applies to one task.
  EXPECT_DOUBLE_EQ(b.safe_epsilon, 0.5 / 2.0);
}

TEST(Bounds, BetaTimesNApproachesRatio) {
  auto specs = uniform_specs(1000, 1.0, 2.0);
  specs[7].weight = 0.4;
  const auto b = oracle::bounds(specs, quiet_config());
  EXPECT_NEAR(b.beta_star * 1000.0, 2.0 / 0.4, 1e-9);
}

TEST(Bounds, EmptyThrows) {
  EXPECT_THROW(oracle::bounds({}, quiet_config()), std::invalid_argument);
}

TEST(Bounds, SafeEpsilonFormula) {
  // n = 4, lambda = 1, c = 2, eta = 0.1: first term 1/(2*16*1.02), second
  // g = 1.5, 1.5/(4*2.5*1.02).
  const double got = oracle::safe_epsilon(4, 1.0, 2.0, 0.1);
  EXPECT_NEAR(got, std::min(1.0 / (32 * 1.02), 1.5 / (10 * 1.02)), 1e-15);
}

TEST(Bounds, OrderingSandwichesUniform) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> L(0.1, 1.0), C(1.0, 5.0);
  std::uniform_int_distribution<int> N(1, 40);
  for (int t = 0; t < 500; ++t) {
    const int n = N(rng);
    std::vector<TaskSpec> specs;
    for (int i = 0; i < n; ++i) specs.push_back(task(i, L(rng), std::make_shared<ConstantModel>(1.0, C(rng))));
    const auto b = oracle::bounds(specs, quiet_config());
    EXPECT_LE(b.alpha_star, 1.0 / n + 1e-15);
    EXPECT_GE(b.beta_star, 1.0 / n - 1e-15);
    EXPECT_GT(b.safe_epsilon, 0.0);
  }
}

TEST(ValidateConfig, WarnsAboveSafeEpsilon) {
  auto cfg = quiet_config();
  cfg.epsilon = 0.05;
  cfg.gamma = 1.0;
  const auto specs = uniform_specs(4, 1.0, 2.0);
  const auto rep = validate_config(cfg, 4, specs);
  EXPECT_TRUE(rep.has("safe_epsilon"));
  EXPECT_FALSE(rep.has_errors());
  cfg.epsilon = 1e-3;
  EXPECT_FALSE(validate_config(cfg, 4, specs).has("safe_epsilon"));
}
