#include <gtest/gtest.h>

#include <memory>

#include "asim/feeding.hpp"
#include "asim/fsm.hpp"
#include "oracles.hpp"

namespace {

namespace fd = asim::feeding;
using asim::fsm::MachineInstance;
using asim::fsm::StateKind;
using Path = std::vector<std::string>;

std::shared_ptr<const asim::fsm::StateMachine> feeding_machine() {
  static const auto machine = std::make_shared<const asim::fsm::StateMachine>(fd::build_machine());
  return machine;
}

// Feeding context whose junction always takes a fixed guide.
class FixedChoice : public fd::Context {
 public:
  explicit FixedChoice(std::string path) : path_(std::move(path)) {}
  std::string decide(std::string_view, std::span<const asim::fsm::Branch>) override { return path_; }

 private:
  std::string path_;
};

TEST(FeedingMachine, Structure) {
  const auto& m = *feeding_machine();
  int named = 0;
  for (const auto& s : m.states()) named += s.kind != StateKind::exit_point;
  EXPECT_EQ(named, 8);
  EXPECT_EQ(m.exit_points(), (Path{"located", "lost_signal_track"}));
  ASSERT_EQ(m.timers().size(), 1u);
  EXPECT_EQ(m.timers().begin()->first, "waitTimer");
  EXPECT_EQ(m.timers().begin()->second, 50u);
}

TEST(FeedingMachine, TextFormRoundTrips) {
  const auto text = asim::fsm::format_machine(*feeding_machine());
  EXPECT_EQ(asim::fsm::parse_machine(text), *feeding_machine());
}

TEST(Dispatch, FreshInstanceRestsInInitial) {
  MachineInstance m(feeding_machine());
  EXPECT_EQ(m.active_path(), (Path{"root", "Initial"}));
}

TEST(Dispatch, PowerLowStartsTheSearch) {
  MachineInstance m(feeding_machine());
  fd::Context ctx;
  auto fired = m.dispatch("power_low", ctx);
  ASSERT_EQ(fired.size(), 1u);
  EXPECT_EQ(fired[0].source, "Initial");
  EXPECT_EQ(fired[0].target, "locate_food");
  EXPECT_EQ(m.active_path(), (Path{"root", "locate_food"}));
}

TEST(Dispatch, UnhandledEventIsNoOp) {
  MachineInstance m(feeding_machine());
  FixedChoice ctx("signal");
  m.dispatch("power_low", ctx);
  m.dispatch("signal_found", ctx);
  m.dispatch("engage", ctx);
  ASSERT_EQ(m.active_path(), (Path{"root", "recharge"}));
  EXPECT_TRUE(m.dispatch("power_low", ctx).empty());
  EXPECT_TRUE(m.dispatch("no_such_event", ctx).empty());
  EXPECT_EQ(m.active_path(), (Path{"root", "recharge"}));
}

TEST(Dispatch, InsideSignalPursuit) {
  MachineInstance m(feeding_machine());
  FixedChoice ctx("signal");
  m.dispatch("power_low", ctx);
  auto fired = m.dispatch("signal_found", ctx);
  ASSERT_EQ(fired.size(), 2u);
  EXPECT_EQ(fired[1].chosen_path, "signal");
  EXPECT_EQ(m.active_path(), (Path{"root", "find_charging_station", "follow_IR_signal"}));
}

TEST(Dispatch, BothGuidesFailingExitsThroughLostAndLowersPower) {
  MachineInstance m(feeding_machine());
  FixedChoice ctx("signal");
  m.dispatch("power_low", ctx);
  m.dispatch("signal_found", ctx);
  m.dispatch("signal_lost", ctx);
  EXPECT_EQ(m.leaf(), "follow_track_path");
  EXPECT_EQ(ctx.take_power_lower(), 0u);
  auto fired = m.dispatch("track_lost", ctx);
  ASSERT_EQ(fired.size(), 2u);
  EXPECT_EQ(fired[0].target, "lost_signal_track");
  EXPECT_EQ(fired[1].target, "locate_food");
  EXPECT_EQ(ctx.take_power_lower(), 1u);
  EXPECT_EQ(ctx.weights().at("signal").failures, 1u);
  EXPECT_EQ(ctx.weights().at("track").failures, 1u);
}

TEST(Dispatch, EngageRechargesAndTimerFinishes) {
  MachineInstance m(feeding_machine());
  FixedChoice ctx("track");
  m.dispatch("power_low", ctx);
  m.tick_timers(10);
  m.dispatch("track_found", ctx);
  m.dispatch("engage", ctx);
  EXPECT_EQ(m.leaf(), "recharge");
  EXPECT_EQ(ctx.weights().at("track").successes, 1u);
  EXPECT_EQ(m.timer_deadlines().at("waitTimer"), 60u);
  EXPECT_TRUE(m.tick_timers(59).empty());
  EXPECT_EQ(m.tick_timers(60), (Path{"waitTimer_expired"}));
  m.process(ctx);
  EXPECT_EQ(m.leaf(), "Final");
  EXPECT_TRUE(m.timer_deadlines().empty());
}

TEST(Dispatch, DeadAgentIsRejected) {
  MachineInstance m(feeding_machine());
  fd::Context ctx;
  ctx.set_alive(false);
  EXPECT_THROW(m.dispatch("power_low", ctx), asim::DeathError);
}

TEST(Timers, ClockRegressionIsAnError) {
  MachineInstance m(feeding_machine());
  m.tick_timers(5);
  EXPECT_THROW(m.tick_timers(4), asim::ArgumentError);
}

// Two timers armed on the same tick: enumerate both declaration orders and
// both duration orders; expiry order must be by deadline, then by name.
TEST(Timers, SimultaneousExpiriesOrderedByName) {
  for (int swap_decl = 0; swap_decl < 2; ++swap_decl) {
    for (std::uint64_t da : {5u, 7u}) {
      for (std::uint64_t db : {5u, 7u}) {
        asim::fsm::StateMachine sm;
        sm.set_initial("idle");
        sm.add_timer("alpha", da).add_timer("beta", db);
        sm.add_state({"idle", StateKind::simple, "", "", ""});
        sm.add_state({"box", StateKind::composite, "", swap_decl ? "beta" : "alpha", ""});
        sm.add_state({"box.Initial", StateKind::initial, "box", "", ""});
        sm.add_state({"inner", StateKind::simple, "box", swap_decl ? "alpha" : "beta", ""});
        sm.add_transition({"idle", "box", "go", "", "", "", {}});
        sm.add_transition({"box.Initial", "inner", "", "", "", "", {}});
        MachineInstance m(std::make_shared<const asim::fsm::StateMachine>(sm));
        asim::fsm::MachineContext ctx;
        m.dispatch("go", ctx);
        auto fired = m.tick_timers(10);
        Path expected;
        if (da < db) expected = {"alpha_expired", "beta_expired"};
        else if (db < da) expected = {"beta_expired", "alpha_expired"};
        else expected = {"alpha_expired", "beta_expired"};
        EXPECT_EQ(fired, expected) << da << ' ' << db << ' ' << swap_decl;
      }
    }
  }
}

TEST(Validate, ReportsStructuralDefects) {
  asim::fsm::StateMachine sm;
  sm.set_initial("missing");
  sm.add_state({"box", StateKind::composite, "", "", ""});
  sm.add_state({"orphan_exit", StateKind::exit_point, "", "", ""});
  sm.add_transition({"box", "nowhere", "go", "", "", "", {}});
  sm.add_transition({"box", "", "pick", "", "", "p", {{"a", "box"}}});
  try {
    sm.validate();
    FAIL();
  } catch (const asim::ConfigError& e) {
    EXPECT_GE(e.messages().size(), 5u);
  }
}

TEST(TextForm, ReportsPositionedErrors) {
  try {
    asim::fsm::parse_machine("machine.initial = A\nstate.A = weird\nbogus line\n", "m.txt");
    FAIL();
  } catch (const asim::ConfigError& e) {
    ASSERT_EQ(e.messages().size(), 2u);
    EXPECT_EQ(e.messages()[0].rfind("m.txt:3:", 0), 0u);
    EXPECT_EQ(e.messages()[1].rfind("m.txt:2:", 0), 0u);
  }
}

// Every event sequence of length <= 4 against the hand-written flat table.
TEST(Dispatch, MatchesFlatTableOracle) {
  const auto& alphabet = oracle::event_alphabet();
  for (bool prefer_signal : {true, false}) {
    for (int length = 1; length <= 4; ++length) {
      int total = 1;
      for (int i = 0; i < length; ++i) total *= 7;
      for (int code = 0; code < total; ++code) {
        MachineInstance m(feeding_machine());
        FixedChoice ctx(prefer_signal ? "signal" : "track");
        auto flat = oracle::Flat::initial;
        int c = code;
        for (int i = 0; i < length; ++i, c /= 7) {
          const auto& e = alphabet[c % 7];
          const auto step = oracle::flat_step(flat, e, prefer_signal);
          const auto fired = m.dispatch(e, ctx);
          ASSERT_EQ(static_cast<int>(fired.size()), step.fired) << "code " << code << " step " << i;
          ASSERT_EQ(static_cast<int>(ctx.take_power_lower()), step.power_lower);
          flat = step.next;
          ASSERT_EQ(m.active_path(), oracle::flat_path(flat)) << "code " << code << " step " << i;
        }
      }
    }
  }
}

// Runs `episodes` feeding episodes where each guide succeeds with its own
// probability, returning the final table.
asim::WeightTable learn(std::uint64_t seed, int episodes, double p_signal, double p_track) {
  MachineInstance m(feeding_machine());
  fd::Context ctx(asim::init_table(fd::choice_paths()), asim::RandomStream("decision", seed));
  asim::RandomStream world("acquire", seed ^ 0x5eed);
  m.dispatch("power_low", ctx);
  std::uint64_t now = 0;
  while (ctx.episodes() < static_cast<std::uint64_t>(episodes) || m.in("find_charging_station")) {
    const auto& leaf = m.leaf();
    if (leaf == "locate_food") {
      m.dispatch("signal_found", ctx);
    } else if (leaf == "follow_IR_signal") {
      m.dispatch(world.bernoulli(p_signal) ? "engage" : "signal_lost", ctx);
    } else if (leaf == "follow_track_path") {
      m.dispatch(world.bernoulli(p_track) ? "engage" : "track_lost", ctx);
    } else if (leaf == "recharge") {
      now += 50;
      m.tick_timers(now);
      m.process(ctx);
    } else {
      m.dispatch("power_low", ctx);
    }
    if (ctx.episodes() >= static_cast<std::uint64_t>(episodes) && !m.in("find_charging_station")) break;
  }
  return ctx.weights();
}

TEST(Learning, ReliableGuideWinsAfter200Episodes) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto t = learn(seed, 200, 0.9, 0.2);
    wins += asim::score(t.at("signal")) > asim::score(t.at("track"));
  }
  EXPECT_GE(wins, 95);
}

TEST(Dispatch, DeterministicTransitionLogs) {
  auto run = [] {
    MachineInstance m(feeding_machine());
    fd::Context ctx(asim::init_table(fd::choice_paths()), asim::RandomStream("decision", 42));
    const auto& alphabet = oracle::event_alphabet();
    asim::RandomStream pick("events", 1);
    for (int i = 0; i < 500; ++i) m.dispatch(alphabet[pick.index(7)], ctx);
    return std::vector(m.history().begin(), m.history().end());
  };
  EXPECT_EQ(run(), run());
}

TEST(Dispatch, LostExitAlwaysFollowedByOnePowerLower) {
  const auto& alphabet = oracle::event_alphabet();
  asim::RandomStream pick("events", 9);
  MachineInstance m(feeding_machine());
  fd::Context ctx(asim::init_table(fd::choice_paths()), asim::RandomStream("decision", 3));
  for (int i = 0; i < 20000; ++i) {
    const auto fired = m.dispatch(alphabet[pick.index(7)], ctx);
    int lost = 0;
    for (const auto& r : fired) lost += r.target == "lost_signal_track";
    ASSERT_EQ(ctx.take_power_lower(), static_cast<std::uint64_t>(lost));
    if (lost > 0) {
      ASSERT_EQ(fired.back().source, "lost_signal_track");
      ASSERT_EQ(fired.back().target, "locate_food");
    }
  }
}

TEST(History, BoundedRing) {
  MachineInstance m(feeding_machine(), 4);
  FixedChoice ctx("signal");
  for (int i = 0; i < 10; ++i) {
    m.dispatch("power_low", ctx);
    m.dispatch("signal_found", ctx);
    m.dispatch("engage", ctx);
    m.dispatch("waitTimer_expired", ctx);
  }
  EXPECT_EQ(m.history().size(), 4u);
  EXPECT_EQ(m.history().back().target, "Final");
}

}  // namespace
