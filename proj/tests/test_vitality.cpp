#include <gtest/gtest.h>

#include <random>

#include "asim/vitality.hpp"

namespace {

using asim::EnergyStore;
using asim::VitalKind;

EnergyStore store(double charge, double capacity = 10.0, double base_drain = 0.1) {
  EnergyStore s;
  s.charge = charge;
  s.capacity = capacity;
  s.base_drain = base_drain;
  s.action_costs = {{"move", 0.4}, {"turn", 0.05}};
  s.low_threshold = 0.3;
  s.critical_threshold = 0.1;
  asim::validate(s);
  return s;
}

TEST(Drain, SubtractsBaseAndActionCost) {
  EXPECT_DOUBLE_EQ(asim::drain(store(10.0), "move").charge, 9.5);
}

TEST(Drain, ClampsAtZeroAndDies) {
  auto s = asim::drain(store(0.3), "move");
  EXPECT_EQ(s.charge, 0.0);
  EXPECT_TRUE(s.dead);
  EXPECT_NEAR(s.ledger.total_drained, 0.3, 1e-15);
  EXPECT_NEAR(s.ledger.drain_shortfall, 0.2, 1e-15);
}

TEST(Drain, IdleWithoutCostIsIdentity) {
  auto s = store(4.25, 10.0, 0.0);
  EXPECT_EQ(asim::drain(s, asim::kIdleAction).charge, 4.25);
}

TEST(Drain, UnknownActionNamesTheAction) {
  try {
    asim::drain(store(5.0), "dance");
    FAIL() << "expected ConfigError";
  } catch (const asim::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("dance"), std::string::npos);
  }
}

// Reference: the arithmetic written out independently, over random cases.
TEST(Drain, MatchesArithmeticOracleOnRandomCases) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double capacity = 1.0 + 99.0 * u(gen);
    const double charge = capacity * u(gen);
    const double base = u(gen);
    const double cost = 2.0 * u(gen);
    EnergyStore s = store(charge, capacity, base);
    s.action_costs["move"] = cost;
    const double expected = charge - base - cost > 0.0 ? charge - base - cost : 0.0;
    EXPECT_DOUBLE_EQ(asim::drain(s, "move").charge, expected) << "case " << i;
  }
}

TEST(Recharge, AddsRateTimesDuration) {
  EXPECT_DOUBLE_EQ(asim::recharge(store(2.0), 1.0, 3.0).charge, 5.0);
}

TEST(Recharge, ClampsAtCapacity) {
  auto s = asim::recharge(store(9.5), 1.0, 3.0);
  EXPECT_EQ(s.charge, 10.0);
  EXPECT_DOUBLE_EQ(s.ledger.recharge_overflow, 2.5);
}

TEST(Recharge, ZeroRateLeavesChargeUnchanged) {
  EXPECT_EQ(asim::recharge(store(3.3), 0.0, 7.0).charge, 3.3);
}

TEST(Recharge, RejectsNegativeArguments) {
  EXPECT_THROW(asim::recharge(store(1.0), -1.0, 1.0), asim::ArgumentError);
  EXPECT_THROW(asim::recharge(store(1.0), 1.0, -1.0), asim::ArgumentError);
}

TEST(Recharge, EmitsRechargedOnReachingCapacity) {
  auto before = store(9.5);
  auto after = asim::recharge(before, 1.0, 1.0);
  auto events = asim::vital_events(before, after, 12);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0], (asim::VitalEvent{VitalKind::recharged, 12}));
}

TEST(Gain, Boundaries) {
  EXPECT_EQ(asim::gain(store(10.0)), 1.0);
  EXPECT_EQ(asim::gain(store(0.0)), 0.0);
  EXPECT_DOUBLE_EQ(asim::gain(store(5.0)), 0.5);
}

TEST(Gain, KneeShapesTheCurve) {
  auto s = store(2.0);
  s.gain_curve = {0.2, 0.8};
  EXPECT_DOUBLE_EQ(asim::gain(s), 0.8);
  s.charge = 6.0;
  EXPECT_DOUBLE_EQ(asim::gain(s), 0.9);
}

TEST(Gain, MonotoneForRandomKnees) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    asim::GainCurve curve{0.01 + 0.98 * u(gen), u(gen)};
    double prev = curve.at(0.0);
    EXPECT_EQ(prev, 0.0);
    for (int i = 1; i <= 1000; ++i) {
      const double g = curve.at(i / 1000.0);
      EXPECT_GE(g, prev);
      prev = g;
    }
    EXPECT_DOUBLE_EQ(prev, 1.0);
  }
}

TEST(VitalEvents, DownwardLowCrossing) {
  auto before = store(3.0);
  auto after = before;
  after.charge = 2.9;
  auto events = asim::vital_events(before, after, 5);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].kind, VitalKind::power_low);
}

TEST(VitalEvents, UpwardCrossingIsSilent) {
  auto before = store(2.9);
  auto after = before;
  after.charge = 3.1;
  EXPECT_TRUE(asim::vital_events(before, after, 5).empty());
}

TEST(VitalEvents, ReachingZeroDies) {
  auto before = store(0.05);
  auto after = asim::drain(before, asim::kIdleAction);
  auto events = asim::vital_events(before, after, 9);
  ASSERT_FALSE(events.empty());
  EXPECT_EQ(events.back(), (asim::VitalEvent{VitalKind::died, 9}));
}

TEST(VitalEvents, PowerLowerOnlyOnFailedFeedingBelowLow) {
  auto s = store(2.0);
  auto events = asim::vital_events(s, s, 3, true);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].kind, VitalKind::power_lower);
  auto high = store(8.0);
  EXPECT_TRUE(asim::vital_events(high, high, 3, true).empty());
}

// Crossing oracle: walk a sampled trajectory and compare against a direct
// enumeration of the threshold levels each step passes downward through.
TEST(VitalEvents, MatchCrossingEnumerationOnTrajectory) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> step(-1.5, 1.0);
  auto s = store(10.0);
  for (std::uint64_t tick = 0; tick < 2000 && !s.dead; ++tick) {
    auto next = s;
    next.charge = std::clamp(s.charge + step(gen), 0.0, s.capacity);
    if (next.charge == 0.0) next.dead = true;
    std::vector<VitalKind> expected;
    if (s.charge >= 3.0 && next.charge < 3.0) expected.push_back(VitalKind::power_low);
    if (s.charge >= 1.0 && next.charge < 1.0) expected.push_back(VitalKind::power_critical);
    if (next.dead) expected.push_back(VitalKind::died);
    if (s.charge < 10.0 && next.charge == 10.0) expected.push_back(VitalKind::recharged);
    std::vector<VitalKind> got;
    for (const auto& e : asim::vital_events(s, next, tick)) got.push_back(e.kind);
    ASSERT_EQ(got, expected) << "tick " << tick;
    s = next;
  }
}

TEST(VitalEvents, ReproducibleForSameStoreSequence) {
  auto run = [] {
    std::mt19937_64 gen(99);
    std::uniform_int_distribution<int> coin(0, 3);
    auto s = store(10.0);
    std::vector<asim::VitalEvent> all;
    for (std::uint64_t t = 0; !s.dead; ++t) {
      auto next = coin(gen) == 0 ? asim::recharge(s, 0.5, 1) : asim::drain(s, "move");
      auto ev = asim::vital_events(s, next, t);
      all.insert(all.end(), ev.begin(), ev.end());
      s = next;
    }
    return all;
  };
  EXPECT_EQ(run(), run());
}

TEST(DeadStore, RejectsEverything) {
  auto s = asim::drain(store(0.1), "move");
  ASSERT_TRUE(s.dead);
  EXPECT_THROW(asim::drain(s, "move"), asim::DeathError);
  EXPECT_THROW(asim::recharge(s, 1.0, 1.0), asim::DeathError);
  EXPECT_THROW(asim::absorb_percepts(s, 1), asim::DeathError);
}

TEST(Validate, ReportsEveryViolation) {
  EnergyStore s;
  s.capacity = -1.0;
  s.low_threshold = 0.2;
  s.critical_threshold = 0.4;
  s.action_costs["move"] = -0.1;
  try {
    asim::validate(s);
    FAIL();
  } catch (const asim::ConfigError& e) {
    EXPECT_GE(e.messages().size(), 3u);
  }
}

TEST(Ledger, BalancesOverRandomSteps) {
  std::mt19937_64 gen(5);
  std::uniform_int_distribution<int> pick(0, 2);
  auto s = store(10.0, 10.0, 0.01);
  const double initial = s.charge;
  for (int i = 0; i < 20000 && !s.dead; ++i) {
    switch (pick(gen)) {
      case 0: s = asim::drain(s, "move"); break;
      case 1: s = asim::drain(s, asim::kIdleAction); break;
      default: s = asim::recharge(s, 0.3, 1.0); break;
    }
    ASSERT_GE(s.charge, 0.0);
    ASSERT_LE(s.charge, s.capacity);
  }
  EXPECT_NEAR(initial - s.charge, s.ledger.total_drained - s.ledger.total_recharged, 1e-9);
}

}  // namespace
