#include <gtest/gtest.h>

#include "fairalloc/properties.hpp"
#include "fairalloc/scenario.hpp"
#include "helpers.hpp"

using namespace fairalloc;
using namespace testkit;

TEST(Recurrence, WindowFormula) {
  oracle::BoundSet b;
  b.lambda_min = 1.0;
  b.c_max = 2.0;
  EXPECT_EQ(oracle::recurrence_window(b, 5e-4), 20000);
  b.lambda_min = 0.3;
  EXPECT_EQ(oracle::recurrence_window(b, 1e-3), static_cast<std::int64_t>(std::ceil(5.0 / (1e-3 * 0.15))));
}

TEST(Recurrence, GapExactlyWindowPasses) {
  oracle::RecurrenceTracker t(1, 10, 5);
  // Steps 10..29; hits at 14, 19, 24, 29 leave gaps of exactly 5.
  for (std::int64_t k = 0; k < 30; ++k) t.observe(0, k, k >= 14 && (k - 14) % 5 == 0);
  t.finish(29);
  EXPECT_TRUE(t.applicable());
  EXPECT_EQ(t.max_gap(0), 5);
  EXPECT_TRUE(t.pass());
}

TEST(Recurrence, LongGapFails) {
  oracle::RecurrenceTracker t(2, 0, 5);
  for (std::int64_t k = 0; k < 30; ++k) {
    t.observe(0, k, true);
    t.observe(1, k, k == 3 || k == 20);
  }
  t.finish(29);
  EXPECT_EQ(t.failed_gaps(0), 0);
  EXPECT_EQ(t.max_gap(1), 17);
  EXPECT_EQ(t.failed_gaps(1), 2);  // 3 -> 20 and 20 -> end
  EXPECT_FALSE(t.pass());
}

TEST(Recurrence, HitsBeforeBurnInAreIgnored) {
  oracle::RecurrenceTracker t(1, 10, 3);
  for (std::int64_t k = 0; k < 20; ++k) t.observe(0, k, k < 10);
  t.finish(19);
  EXPECT_FALSE(t.pass());
}

TEST(Recurrence, ShortRunIsVacuous) {
  oracle::RecurrenceTracker t(1, 10, 100);
  for (std::int64_t k = 0; k < 50; ++k) t.observe(0, k, false);
  t.finish(49);
  EXPECT_FALSE(t.applicable());
  EXPECT_TRUE(t.pass());
}

TEST(Monitor, CleanOnShortIdenticalRun) {
  auto sc = build_identical_four(2000);
  oracle::PropertyMonitor mon(sc.specs, sc.cfg);
  const auto st = run(sc.specs, sc.cfg, [&](const StepRecord& r) { mon(r); });
  mon.finish();
  EXPECT_TRUE(st.ok());
  EXPECT_TRUE(mon.simplex_ok());
  EXPECT_TRUE(mon.zero_sum_ok());
  EXPECT_EQ(mon.prop2_violations(), 0);
  EXPECT_EQ(mon.box_violations(), 0);
  EXPECT_FALSE(mon.balance_vacuous());
  EXPECT_DOUBLE_EQ(mon.balance_level(), 0.55);
  EXPECT_EQ(mon.window(), 20000);
  // 6000 steps cannot hold a 20000-step window after burn-in.
  EXPECT_FALSE(mon.starvation().applicable());
}

TEST(Monitor, SingleTaskBalanceVacuous) {
  std::vector<TaskSpec> specs{task(0, 1.0, home(2, 1, 2, 1, 0.5), 0.4)};
  auto cfg = quiet_config(100);
  oracle::PropertyMonitor mon(specs, cfg);
  EXPECT_TRUE(mon.balance_vacuous());
}

TEST(Monitor, DetectsOffSimplexRecord) {
  std::vector<TaskSpec> specs{task(0, 1.0, home(2, 1, 2, 1, 0.5), 0.4), task(1, 1.0, home(2, 1, 2, 1, 0.5), 0.4)};
  oracle::PropertyMonitor mon(specs, quiet_config(10));
  StepRecord r;
  r.step = 0;
  r.v = {0.6, 0.6};
  r.s = {0.5, 0.5};
  r.f = {0.0, 0.0};
  r.u = {3.0, 3.0};
  r.phi = {0.0, 0.0};
  mon(r);
  EXPECT_FALSE(mon.simplex_ok());
  EXPECT_NEAR(mon.max_simplex_error(), 0.2, 1e-15);
}
