#include <gtest/gtest.h>

#include <cmath>

#include "fairalloc/core.hpp"
#include "fairalloc/validate.hpp"

using namespace fairalloc;

namespace {

EngineConfig base_config() {
  EngineConfig cfg;
  cfg.epsilon = 5e-4;
  cfg.mu_exponent = 1.0 / 20.0;
  cfg.gamma = 100.0;
  cfg.eta_bar = 1e-3;
  cfg.zeta_bar = 1e-3;
  cfg.horizon = 100;
  return cfg;
}

}  // namespace

TEST(EngineConfig, LevelStepMatchesHandValue) {
  const auto cfg = base_config();
  // 0.0005^0.95 evaluated independently.
  EXPECT_NEAR(cfg.level_step(), std::exp(0.95 * std::log(5e-4)), 1e-15);
  EXPECT_NEAR(cfg.level_step(), 7.3117e-4, 1e-7);
  EXPECT_NEAR(cfg.mu(), std::pow(5e-4, -0.05), 1e-12);
  EXPECT_LT(cfg.kappa(), 1.0);
  EXPECT_NO_THROW(cfg.check(4));
}

TEST(EngineConfig, RejectsCoupledStepViolation) {
  auto cfg = base_config();
  cfg.epsilon = 0.1;
  EXPECT_NEAR(cfg.level_step(), 0.11220, 1e-4);
  EXPECT_THROW(cfg.check(4), ConfigError);
}

TEST(EngineConfig, RejectsBadExponentAndInitialAllocation) {
  auto cfg = base_config();
  cfg.mu_exponent = 1.0;
  EXPECT_THROW(cfg.check(2), ConfigError);
  cfg = base_config();
  cfg.v_init = std::vector<double>{0.5, 0.4};
  EXPECT_THROW(cfg.check(2), ConfigError);
  cfg.v_init = std::vector<double>{0.5, 0.5};
  EXPECT_NO_THROW(cfg.check(2));
  EXPECT_THROW(cfg.check(3), ConfigError);
}

TEST(ValidateConfig, ReferenceDefaultsAreClean) {
  const auto rep = validate_config(base_config(), 4);
  EXPECT_FALSE(rep.has_errors());
  EXPECT_FALSE(rep.has("theorem1_step"));
}

TEST(ValidateConfig, LargeEpsilonFlagsStepCondition) {
  auto cfg = base_config();
  cfg.epsilon = 0.1;
  const auto rep = validate_config(cfg, 4);
  EXPECT_TRUE(rep.has_errors());
  EXPECT_TRUE(rep.has("theorem1_step"));
}

TEST(ValidateConfig, ZeroNoiseHasNoNoiseFindings) {
  auto cfg = base_config();
  cfg.eta_bar = 0.0;
  cfg.zeta_bar = 0.0;
  const auto rep = validate_config(cfg, 4);
  EXPECT_FALSE(rep.has("eta_bar"));
  EXPECT_FALSE(rep.has("zeta_bar"));
  EXPECT_FALSE(rep.has_errors());
}

TEST(ValidateConfig, NoiseAtOneIsAnError) {
  auto cfg = base_config();
  cfg.eta_bar = 1.0;
  const auto rep = validate_config(cfg, 4);
  EXPECT_TRUE(rep.has("eta_bar"));
  EXPECT_TRUE(rep.has_errors());
}

TEST(ValidateConfig, ReportsEveryProblem) {
  EngineConfig cfg;
  cfg.epsilon = -1.0;
  cfg.gamma = 0.0;
  cfg.s_init = 2.0;
  cfg.horizon = -1;
  const auto rep = validate_config(cfg, 0);
  for (const char* code : {"no_tasks", "epsilon", "gamma", "s_init", "horizon"}) EXPECT_TRUE(rep.has(code)) << code;
}

TEST(Demand, PiecewiseConstantLookup) {
  DemandSchedule d({{0, 0.4}, {10, 0.8}, {20, 0.4}});
  EXPECT_DOUBLE_EQ(d.at(0), 0.4);
  EXPECT_DOUBLE_EQ(d.at(9), 0.4);
  EXPECT_DOUBLE_EQ(d.at(10), 0.8);
  EXPECT_DOUBLE_EQ(d.at(19), 0.8);
  EXPECT_DOUBLE_EQ(d.at(1000000), 0.4);
  EXPECT_DOUBLE_EQ(d.min_value(), 0.4);
  EXPECT_DOUBLE_EQ(d.max_value(), 0.8);
}

TEST(Demand, RejectsMalformedZones) {
  EXPECT_THROW(DemandSchedule({{1, 0.4}}), ConfigError);
  EXPECT_THROW(DemandSchedule({{0, 0.4}, {0, 0.5}}), ConfigError);
  EXPECT_THROW(DemandSchedule({{0, 0.4}, {5, 0.5}, {3, 0.2}}), ConfigError);
}

TEST(Noise, ZeroBoundIsAlwaysZero) {
  NoiseSource src(7, 0.0, 0.0);
  for (std::int64_t k = 0; k < 1000; ++k) {
    EXPECT_EQ(draw_measurement_noise(src, k, 0), 0.0);
    EXPECT_EQ(src.dither(k, 3), 0.0);
  }
}

TEST(Noise, DrawsStayInsideBound) {
  NoiseSource src(42, 1e-3, 2e-3);
  for (std::int64_t k = 0; k < 200000; ++k) {
    for (std::size_t i = 0; i < 3; ++i) {
      const double e = src.measurement(k, i);
      const double z = src.dither(k, i);
      ASSERT_LE(std::abs(e), 1e-3);
      ASSERT_LE(std::abs(z), 2e-3);
    }
  }
}

TEST(Noise, EmpiricalMeanIsNearZero) {
  const double bound = 1e-3;
  NoiseSource src(2024, bound, bound);
  const int draws = 1000000;
  double sum = 0.0;
  for (int k = 0; k < draws; ++k) sum += draw_measurement_noise(src, k, 1);
  EXPECT_LE(std::abs(sum / draws), 3.0 * bound / std::sqrt(double(draws)));
}

TEST(Noise, ReplayIsBitIdentical) {
  NoiseSource a(99, 1e-3, 1e-3), b(99, 1e-3, 1e-3), c(100, 1e-3, 1e-3);
  int differ = 0;
  for (std::int64_t k = 0; k < 1000; ++k) {
    EXPECT_EQ(a.measurement(k, 2), b.measurement(k, 2));
    EXPECT_EQ(a.dither(k, 2), b.dither(k, 2));
    differ += a.measurement(k, 2) != c.measurement(k, 2);
  }
  EXPECT_GT(differ, 990);
  // Order independence: querying out of order yields the same values.
  EXPECT_EQ(a.measurement(500, 0), b.measurement(500, 0));
}

TEST(Noise, ChannelsAndTasksAreIndependentStreams) {
  NoiseSource src(5, 1.0, 1.0);
  int same = 0;
  for (std::int64_t k = 0; k < 1000; ++k) {
    same += src.measurement(k, 0) == src.dither(k, 0);
    same += src.measurement(k, 0) == src.measurement(k, 1);
  }
  EXPECT_EQ(same, 0);
}

TEST(Simplex, Tolerance) {
  EXPECT_TRUE(on_simplex({0.25, 0.25, 0.5}, 1e-12));
  EXPECT_FALSE(on_simplex({0.25, 0.25, 0.6}, 1e-12));
  EXPECT_FALSE(on_simplex({-0.1, 0.6, 0.5}, 1e-12));
}
