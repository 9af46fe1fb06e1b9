#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "asim/decision.hpp"
#include "asim/error.hpp"
#include "asim/fsm.hpp"
#include "asim/rng.hpp"

// The power-seeking behavior chart: wait for low power, search for food,
// pick a guide to the charging station (IR beacon or track) by weighted
// choice, fall back to the other guide on failure, recharge until the wait
// timer runs out.
namespace asim::feeding {

namespace state {
inline constexpr std::string_view initial = "Initial";
inline constexpr std::string_view locate_food = "locate_food";
inline constexpr std::string_view find_station = "find_charging_station";
inline constexpr std::string_view find_station_initial = "find_charging_station.Initial";
inline constexpr std::string_view follow_signal = "follow_IR_signal";
inline constexpr std::string_view follow_track = "follow_track_path";
inline constexpr std::string_view located = "located";
inline constexpr std::string_view lost = "lost_signal_track";
inline constexpr std::string_view recharge = "recharge";
inline constexpr std::string_view final_state = "Final";
}  // namespace state

namespace event {
inline constexpr std::string_view power_low = "power_low";
inline constexpr std::string_view signal_found = "signal_found";
inline constexpr std::string_view signal_lost = "signal_lost";
inline constexpr std::string_view track_found = "track_found";
inline constexpr std::string_view track_lost = "track_lost";
inline constexpr std::string_view engage = "engage";
inline constexpr std::string_view wait_expired = "waitTimer_expired";
}  // namespace event

inline constexpr std::string_view kSignal = "signal";
inline constexpr std::string_view kTrack = "track";
inline constexpr std::string_view kDecisionPoint = "feeding";
inline constexpr std::string_view kWaitTimer = "waitTimer";
inline constexpr std::uint64_t kDefaultWaitTicks = 50;

/// The two guides. Hops and goal name the waypoints of each route.
inline std::vector<ChoicePath> choice_paths() {
  return {{std::string(kSignal), {"x1", "x2"}, "z0"}, {std::string(kTrack), {"y1", "y2"}, "z0"}};
}

inline fsm::StateMachine build_machine(std::uint64_t wait_ticks = kDefaultWaitTicks) {
  using fsm::StateKind;
  auto s = [](std::string_view v) { return std::string(v); };
  fsm::StateMachine m;
  m.set_initial(s(state::initial));
  m.add_timer(s(kWaitTimer), wait_ticks);

  m.add_state({s(state::initial), StateKind::simple, "", "", ""});
  m.add_state({s(state::locate_food), StateKind::simple, "", "", ""});
  m.add_state({s(state::find_station), StateKind::composite, "", "", "begin_episode"});
  m.add_state({s(state::find_station_initial), StateKind::initial, s(state::find_station), "", ""});
  m.add_state({s(state::follow_signal), StateKind::simple, s(state::find_station), "", "pursue_signal"});
  m.add_state({s(state::follow_track), StateKind::simple, s(state::find_station), "", "pursue_track"});
  m.add_state({s(state::located), StateKind::exit_point, s(state::find_station), "", ""});
  m.add_state({s(state::lost), StateKind::exit_point, s(state::find_station), "", ""});
  m.add_state({s(state::recharge), StateKind::simple, "", s(kWaitTimer), ""});
  m.add_state({s(state::final_state), StateKind::simple, "", "", ""});

  auto on = [&](std::string_view from, std::string_view to, std::string_view trigger,
                std::string_view guard = {}, std::string_view effect = {}) {
    m.add_transition({s(from), s(to), s(trigger), s(guard), s(effect), "", {}});
  };
  on(state::initial, state::locate_food, event::power_low);
  on(state::final_state, state::locate_food, event::power_low);
  on(state::locate_food, state::find_station, event::signal_found);
  on(state::locate_food, state::find_station, event::track_found);
  // Decision flow junction.
  m.add_transition({s(state::find_station_initial), "", "", "", "", s(kDecisionPoint),
                    {{s(kSignal), s(state::follow_signal)}, {s(kTrack), s(state::follow_track)}}});
  on(state::follow_signal, state::follow_track, event::signal_lost, "alternative_untried", "record_failure");
  on(state::follow_signal, state::lost, event::signal_lost, {}, "record_failure");
  on(state::follow_track, state::follow_signal, event::track_lost, "alternative_untried", "record_failure");
  on(state::follow_track, state::lost, event::track_lost, {}, "record_failure");
  on(state::follow_signal, state::located, event::engage, {}, "record_success");
  on(state::follow_track, state::located, event::engage, {}, "record_success");
  on(state::located, state::recharge, {});
  on(state::lost, state::locate_food, {}, {}, "power_lower");
  on(state::recharge, state::final_state, event::wait_expired);
  m.validate();
  return m;
}

/// Owner-side hooks of the feeding chart: keeps the agent's weight table,
/// tracks which guides were tried in the current episode and collects
/// notifications (decision traces, power_lower) for the world to drain.
class Context : public fsm::MachineContext {
 public:
  Context() : Context(init_table(choice_paths()), RandomStream("decision", 0)) {}
  Context(WeightTable table, RandomStream rng) : table_(std::move(table)), rng_(std::move(rng)) {}

  bool alive() const override { return alive_; }
  void set_alive(bool alive) { alive_ = alive; }

  bool guard(std::string_view name) override {
    if (name == "alternative_untried") {
      return std::any_of(table_.entries.begin(), table_.entries.end(),
                         [&](const auto& kv) { return tried_.count(kv.first) == 0; });
    }
    throw ConfigError("feeding: unknown guard '" + std::string(name) + "'");
  }

  void effect(std::string_view name) override {
    if (name == "record_success") {
      table_ = record_success(std::move(table_), current_);
      outcomes_.push_back({current_, true});
    } else if (name == "record_failure") {
      table_ = record_failure(std::move(table_), current_);
      outcomes_.push_back({current_, false});
    } else if (name == "power_lower") {
      ++power_lower_;
    } else {
      throw ConfigError("feeding: unknown effect '" + std::string(name) + "'");
    }
  }

  void on_entry(std::string_view action) override {
    if (action == "begin_episode") {
      tried_.clear();
      ++episodes_;
    } else if (action == "pursue_signal") {
      pursue(kSignal);
    } else if (action == "pursue_track") {
      pursue(kTrack);
    } else {
      throw ConfigError("feeding: unknown entry action '" + std::string(action) + "'");
    }
  }

  std::string decide(std::string_view /*point*/, std::span<const fsm::Branch> branches) override {
    WeightTable offered;
    offered.tolerance = table_.tolerance;
    offered.precision = table_.precision;
    for (const auto& b : branches) offered.entries.emplace(b.path, table_.at(b.path));
    traces_.push_back(choose(offered, rng_));
    return traces_.back().chosen;
  }

  struct Outcome {
    std::string path;
    bool success;
  };

  const WeightTable& weights() const noexcept { return table_; }
  WeightTable& weights() noexcept { return table_; }
  const std::string& current_path() const noexcept { return current_; }
  std::uint64_t episodes() const noexcept { return episodes_; }
  const RandomStream& rng() const noexcept { return rng_; }

  // Notifications accumulated since the last drain.
  std::vector<DecisionTrace> take_traces() { return std::exchange(traces_, {}); }
  std::vector<Outcome> take_outcomes() { return std::exchange(outcomes_, {}); }
  std::uint64_t take_power_lower() { return std::exchange(power_lower_, 0); }

 protected:
  void pursue(std::string_view path) {
    current_ = std::string(path);
    tried_.insert(current_);
  }

 private:
  WeightTable table_;
  RandomStream rng_;
  std::string current_;
  std::set<std::string, std::less<>> tried_;
  std::vector<DecisionTrace> traces_;
  std::vector<Outcome> outcomes_;
  std::uint64_t power_lower_ = 0;
  std::uint64_t episodes_ = 0;
  bool alive_ = true;
};

}  // namespace asim::feeding
