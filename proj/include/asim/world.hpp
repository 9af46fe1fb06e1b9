#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "asim/decision.hpp"
#include "asim/error.hpp"
#include "asim/feeding.hpp"
#include "asim/fsm.hpp"
#include "asim/rng.hpp"
#include "asim/union_find.hpp"
#include "asim/vitality.hpp"

namespace asim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;

  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

inline Vec2 unit(double angle) { return {std::cos(angle), std::sin(angle)}; }

inline double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a + std::numbers::pi, two_pi);
  if (a < 0) a += two_pi;
  return a - std::numbers::pi;
}

/// Arena boundary: a circle (the corral) or a rectangle, both centered on
/// the origin.
struct Bounds {
  enum class Shape { circle, rectangle };
  Shape shape = Shape::circle;
  double radius = 20.0;
  double width = 40.0;
  double height = 40.0;

  bool contains(Vec2 p) const {
    if (shape == Shape::circle) return p.norm() <= radius * (1.0 + 1e-12);
    return std::abs(p.x) <= width / 2 && std::abs(p.y) <= height / 2;
  }

  /// Clamps `p` into the arena. Returns the heading pointing back inside when
  /// the point had to be moved.
  std::optional<double> clamp(Vec2& p, double heading) const {
    if (contains(p)) return std::nullopt;
    if (shape == Shape::circle) {
      const double r = p.norm();
      p = (radius / r) * p;
      return std::atan2(-p.y, -p.x);
    }
    Vec2 dir = unit(heading);
    if (std::abs(p.x) > width / 2) {
      p.x = std::copysign(width / 2, p.x);
      dir.x = -dir.x;
    }
    if (std::abs(p.y) > height / 2) {
      p.y = std::copysign(height / 2, p.y);
      dir.y = -dir.y;
    }
    return std::atan2(dir.y, dir.x);
  }

  Vec2 random_point(RandomStream& rng) const {
    if (shape == Shape::circle) {
      const double r = radius * std::sqrt(rng.uniform());
      const double a = rng.uniform(-std::numbers::pi, std::numbers::pi);
      return r * unit(a);
    }
    const double x = rng.uniform(-width / 2, width / 2);
    const double y = rng.uniform(-height / 2, height / 2);
    return {x, y};
  }
};

/// Charging source with two guides: an IR beacon and a track laid toward it.
struct Station {
  Vec2 position;
  double ir_range = 10.0;
  double ir_reliability = 1.0;
  std::vector<Vec2> track;  // ends at `position`
  double track_reliability = 1.0;
  double recharge_rate = 1.0;
};

struct Light {
  Vec2 position;
  double intensity = 1.0;
};

enum class Classification { android, robot, automaton, anima };

inline std::string_view to_string(Classification c) {
  switch (c) {
    case Classification::android: return "android";
    case Classification::robot: return "robot";
    case Classification::automaton: return "automaton";
    case Classification::anima: return "anima";
  }
  return "?";
}

enum class PerceptKind { ir_signal, track_mark, light, agent_lamp };

struct Percept {
  PerceptKind kind;
  std::size_t source;  // station, light or agent index, by kind
  double strength;     // decays as 1 / (1 + distance)
  double bearing;      // relative to the agent's heading, in (-pi, pi]
  double distance;
};

struct WorldConfig {
  Bounds bounds;
  double pattern_n_gate = 0.3;
  double light_weight = 1.0;
  double attraction = 0.0;        // steering gain toward the strongest lit lamp, scaled by strength
  double repulsion_radius = 0.5;  // below this, agents push apart
  double repulsion_weight = 4.0;
  double cluster_threshold = 2.0;
  double dock_radius = 0.5;
  // Track marks are floor markings: visible only this close, and within the
  // agent's sensing range.
  double track_range = std::numeric_limits<double>::infinity();
  double max_turn = 0.6;  // radians per tick
  double wander = 0.3;    // amplitude of heading noise, radians per tick
  bool lamp_switching = true;
  std::vector<std::pair<std::uint64_t, double>> corral_schedule;  // (tick, radius)
  std::size_t pursuit_log = 2000;
  std::uint64_t wait_ticks = feeding::kDefaultWaitTicks;
  double tolerance = 0.1;
};

// Energy store whose motion is free; the world drains "move" or "idle" every tick.
inline EnergyStore default_agent_store() {
  EnergyStore store;
  store.action_costs.emplace("move", 0.0);
  return store;
}

struct AgentSpec {
  std::optional<Vec2> position;  // drawn uniformly in the arena when absent
  std::optional<double> heading;
  double base_speed = 1.0;
  double sensor_range = 10.0;
  double sensitivity = 1.0;
  EnergyStore store = default_agent_store();
  Classification classification = Classification::anima;
  bool death_awareness = false;
  std::optional<WeightTable> weights;  // preset experience, default zeroed
};

struct AgentBody {
  std::size_t id = 0;
  Vec2 position;
  double heading = 0.0;
  double base_speed = 1.0;
  double sensor_range = 10.0;
  double sensitivity = 1.0;
  EnergyStore store;
  fsm::MachineInstance machine;
  feeding::Context context;
  Classification classification = Classification::anima;
  bool death_awareness = false;
  bool lamp_on = true;

  std::optional<std::size_t> target_station;
  bool guided = false;
  std::size_t track_vertex = 0;
  std::optional<std::size_t> pursued_agent;
  std::optional<std::uint64_t> died_at;
  RandomStream wander_rng;
  RandomStream acquire_rng;

  bool alive() const noexcept { return !store.dead; }
  const WeightTable& weights() const noexcept { return context.weights(); }
  double effective_speed() const { return base_speed * gain(store); }
};

struct StepRecord {
  std::size_t agent;
  std::uint64_t tick;
  std::variant<VitalEvent, DecisionTrace, fsm::TransitionRecord> what;
};

struct AggregationMetrics {
  double mean_nearest_neighbor = 0.0;
  std::size_t clusters = 0;
  bool flock = false;
};

/// True while the amplifier gain is above the gate: the agent shies away
/// from bright light (and therefore from the lit charging station).
inline bool pattern_n_enabled(const AgentBody& agent, const WorldConfig& config) {
  return gain(agent.store) > config.pattern_n_gate;
}

/// Light avoidance as actually applied. With death awareness a critically
/// low agent overrides pattern N.
inline bool light_avoidance_active(const AgentBody& agent, const WorldConfig& config) {
  if (agent.death_awareness && agent.store.below_critical()) return false;
  return pattern_n_enabled(agent, config);
}

class World {
 public:
  World(WorldConfig config, std::vector<Station> stations, std::vector<Light> lights,
        std::uint64_t seed,
        std::shared_ptr<const fsm::StateMachine> machine = nullptr)
      : config_(std::move(config)),
        stations_(std::move(stations)),
        lights_(std::move(lights)),
        seed_(seed),
        machine_(machine ? std::move(machine)
                         : std::make_shared<const fsm::StateMachine>(
                               feeding::build_machine(config_.wait_ticks))) {
    std::vector<std::string> errors;
    for (std::size_t i = 0; i < stations_.size(); ++i) {
      const auto& s = stations_[i];
      const std::string tag = "station " + std::to_string(i) + ": ";
      if (!(s.ir_range > 0)) errors.push_back(tag + "ir_range must be > 0");
      if (!(s.ir_reliability >= 0 && s.ir_reliability <= 1))
        errors.push_back(tag + "ir_reliability must lie in [0, 1]");
      if (!(s.track_reliability >= 0 && s.track_reliability <= 1))
        errors.push_back(tag + "track_reliability must lie in [0, 1]");
      if (s.track.size() < 2 || !(s.track.back() == s.position))
        errors.push_back(tag + "track needs >= 2 vertices ending at the station");
      if (!(s.recharge_rate >= 0)) errors.push_back(tag + "recharge_rate must be >= 0");
    }
    if (!errors.empty()) throw ConfigError(std::move(errors));
    for (const auto& [tick, radius] : config_.corral_schedule) {
      if (!(radius > 0)) throw ConfigError("corral radius must be > 0");
    }
  }

  std::size_t add_agent(const AgentSpec& spec) {
    validate(spec.store);
    if (!(spec.sensitivity >= 0 && spec.sensitivity <= 1))
      throw ConfigError("agent sensitivity must lie in [0, 1]");
    const std::size_t id = agents_.size();
    RandomStream placement("placement", stream_seed(seed_, "placement", id));
    Vec2 position = spec.position ? *spec.position : config_.bounds.random_point(placement);
    const double heading =
        spec.heading ? *spec.heading : placement.uniform(-std::numbers::pi, std::numbers::pi);
    if (auto turned = config_.bounds.clamp(position, heading)) (void)turned;

    WeightTable table = spec.weights ? *spec.weights
                                     : init_table(feeding::choice_paths(), config_.tolerance);
    table.tolerance = config_.tolerance;
    agents_.push_back(AgentBody{
        id, position, heading, spec.base_speed, spec.sensor_range, spec.sensitivity, spec.store,
        fsm::MachineInstance(machine_),
        feeding::Context(std::move(table), RandomStream("decision", stream_seed(seed_, "decision", id))),
        spec.classification, spec.death_awareness, true, std::nullopt, false, 0, std::nullopt,
        std::nullopt, RandomStream("wander", stream_seed(seed_, "wander", id)),
        RandomStream("acquire", stream_seed(seed_, "acquire", id))});
    return id;
  }

  const WorldConfig& config() const noexcept { return config_; }
  const Bounds& bounds() const noexcept { return config_.bounds; }
  const std::vector<Station>& stations() const noexcept { return stations_; }
  const std::vector<Light>& lights() const noexcept { return lights_; }
  const std::vector<AgentBody>& agents() const noexcept { return agents_; }
  std::vector<AgentBody>& agents() noexcept { return agents_; }
  const AgentBody& agent(std::size_t id) const { return agents_.at(id); }
  std::uint64_t tick() const noexcept { return tick_; }

  /// Percepts within the agent's effective range (sensor_range x sensitivity).
  /// Agent lamps are read from the start-of-tick snapshot during a step.
  std::vector<Percept> sense(const AgentBody& agent) const {
    if (!agent.alive()) throw DeathError("sense on a dead agent");
    const double range = agent.sensor_range * agent.sensitivity;
    std::vector<Percept> out;
    if (!(range > 0)) return out;
    auto add = [&](PerceptKind kind, std::size_t source, Vec2 at, double intensity) {
      const double d = distance(agent.position, at);
      if (d > range) return;
      const Vec2 delta = at - agent.position;
      const double bearing = d > 0 ? wrap_angle(std::atan2(delta.y, delta.x) - agent.heading) : 0.0;
      out.push_back({kind, source, intensity / (1.0 + d), bearing, d});
    };
    for (std::size_t i = 0; i < stations_.size(); ++i) {
      if (distance(agent.position, stations_[i].position) <= stations_[i].ir_range)
        add(PerceptKind::ir_signal, i, stations_[i].position, 1.0);
    }
    for (std::size_t i = 0; i < stations_.size(); ++i) {
      for (const auto& v : stations_[i].track) {
        if (distance(agent.position, v) <= config_.track_range) add(PerceptKind::track_mark, i, v, 1.0);
      }
    }
    for (std::size_t i = 0; i < lights_.size(); ++i)
      add(PerceptKind::light, i, lights_[i].position, lights_[i].intensity);
    for (const auto& other : agents_) {
      if (other.id == agent.id || !other.alive() || !lamp_visible(other)) continue;
      add(PerceptKind::agent_lamp, other.id, other.position, 1.0);
    }
    return out;
  }

  /// One acquisition attempt of a guide toward `station`. Always consumes
  /// exactly one draw of the agent's "acquire" stream; succeeds when the
  /// guide is currently sensed and the draw falls under its reliability.
  bool attempt_acquisition(AgentBody& agent, PerceptKind guide, std::size_t station,
                           const std::vector<Percept>& percepts) const {
    const double reliability = guide == PerceptKind::ir_signal
                                   ? stations_.at(station).ir_reliability
                                   : stations_.at(station).track_reliability;
    const bool draw = agent.acquire_rng.bernoulli(reliability);
    const bool sensed = std::any_of(percepts.begin(), percepts.end(), [&](const Percept& p) {
      return p.kind == guide && p.source == station;
    });
    return sensed && draw;
  }

  std::vector<StepRecord> step() {
    std::vector<StepRecord> records;
    apply_corral_schedule();
    lamp_snapshot_.assign(agents_.size(), false);
    for (const auto& a : agents_) lamp_snapshot_[a.id] = a.alive() && a.lamp_on;
    std::vector<bool> lamp_next(agents_.size(), false);
    std::vector<std::optional<std::size_t>> pursued(agents_.size());

    for (auto& a : agents_) {
      if (!a.alive()) continue;
      const EnergyStore before = a.store;
      const auto percepts = sense(a);
      a.store = absorb_percepts(std::move(a.store), percepts.size());
      lamp_next[a.id] = !config_.lamp_switching ||
                        std::none_of(percepts.begin(), percepts.end(), [](const Percept& p) {
                          return p.kind == PerceptKind::light || p.kind == PerceptKind::agent_lamp;
                        });

      const std::string leaf_before = a.machine.leaf();
      const auto stimuli = stimuli_for(a, percepts);
      a.machine.tick_timers(tick_);
      std::vector<fsm::TransitionRecord> fired;
      for (const auto& e : stimuli) {
        auto f = a.machine.dispatch(e, a.context);
        fired.insert(fired.end(), f.begin(), f.end());
      }
      if (a.machine.pending_events() > 0) {
        auto f = a.machine.process(a.context);
        fired.insert(fired.end(), f.begin(), f.end());
      }
      if (a.machine.leaf() != leaf_before) {
        a.guided = false;
        a.track_vertex = 0;
      }
      for (auto& t : a.context.take_traces()) records.push_back({a.id, tick_, std::move(t)});
      for (auto& t : fired) records.push_back({a.id, tick_, std::move(t)});
      const bool feeding_failed = a.context.take_power_lower() > 0;
      a.context.take_outcomes();

      const bool moved = move(a, percepts, pursued[a.id]);
      a.store = drain(std::move(a.store), moved ? "move" : kIdleAction);
      if (a.alive() && a.machine.leaf() == feeding::state::recharge && a.target_station)
        a.store = recharge(std::move(a.store), stations_[*a.target_station].recharge_rate, 1.0);
      for (const auto& ev : vital_events(before, a.store, tick_, feeding_failed))
        records.push_back({a.id, tick_, ev});
      if (!a.alive()) {
        a.died_at = tick_;
        a.context.set_alive(false);
        a.pursued_agent.reset();
        pursued[a.id].reset();
        lamp_next[a.id] = false;
      }
    }
    for (auto& a : agents_) a.lamp_on = lamp_next[a.id];
    pursuit_log_.push_back(std::move(pursued));
    while (pursuit_log_.size() > config_.pursuit_log) pursuit_log_.pop_front();
    ++tick_;
    return records;
  }

  /// Mean nearest-neighbor distance and connected clusters under
  /// `cluster_threshold`, over every body in the arena (dead ones included).
  AggregationMetrics aggregation_metrics() const {
    if (agents_.size() < 2) throw StateError("aggregation metrics need at least two agents");
    const std::size_t n = agents_.size();
    UnionFind sets(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double d = distance(agents_[i].position, agents_[j].position);
        nearest = std::min(nearest, d);
        if (j > i && d <= config_.cluster_threshold) sets.unite(i, j);
      }
      total += nearest;
    }
    return {total / static_cast<double>(n), sets.sets(), sets.sets() == 1};
  }

  /// The agent whose lamp was pursued by other agents most often over the
  /// last `window` ticks, as seen by an outside observer. None on a tie or
  /// when nobody pursued anyone.
  std::optional<std::size_t> leader_observation(std::uint64_t window) const {
    if (window == 0 || agents_.size() < 2) return std::nullopt;
    std::map<std::size_t, std::uint64_t> counts;
    const std::size_t take = std::min<std::size_t>(window, pursuit_log_.size());
    for (auto it = pursuit_log_.end() - static_cast<std::ptrdiff_t>(take); it != pursuit_log_.end(); ++it) {
      for (std::size_t follower = 0; follower < it->size(); ++follower) {
        const auto& target = (*it)[follower];
        if (target && *target != follower) ++counts[*target];
      }
    }
    std::optional<std::size_t> best;
    std::uint64_t best_count = 0;
    bool tie = false;
    for (const auto& [id, count] : counts) {
      if (count > best_count) {
        best = id;
        best_count = count;
        tie = false;
      } else if (count == best_count) {
        tie = true;
      }
    }
    if (tie || best_count == 0) return std::nullopt;
    return best;
  }

 private:
  bool lamp_visible(const AgentBody& other) const {
    if (other.id < lamp_snapshot_.size()) return lamp_snapshot_[other.id];
    return other.lamp_on;
  }

  void apply_corral_schedule() {
    bool changed = false;
    for (const auto& [tick, radius] : config_.corral_schedule) {
      if (tick == tick_) {
        config_.bounds.radius = radius;
        changed = true;
      }
    }
    if (!changed) return;
    // The wall sweeps every body inward, inert ones included.
    for (auto& a : agents_) {
      if (auto turned = config_.bounds.clamp(a.position, a.heading); turned && a.alive())
        a.heading = *turned;
    }
  }

  std::vector<std::string> stimuli_for(AgentBody& a, const std::vector<Percept>& percepts) const {
    using namespace feeding;
    std::vector<std::string> out;
    const std::string& leaf = a.machine.leaf();
    auto nearest = [&](PerceptKind kind) -> std::optional<std::size_t> {
      const Percept* best = nullptr;
      for (const auto& p : percepts) {
        if (p.kind == kind && (!best || p.distance < best->distance)) best = &p;
      }
      if (!best) return std::nullopt;
      return best->source;
    };

    if (leaf == state::initial || leaf == state::final_state) {
      if (a.store.below_low()) out.emplace_back(event::power_low);
    } else if (leaf == state::locate_food) {
      if (auto s = nearest(PerceptKind::ir_signal)) {
        a.target_station = s;
        out.emplace_back(event::signal_found);
      } else if (auto t = nearest(PerceptKind::track_mark)) {
        a.target_station = t;
        out.emplace_back(event::track_found);
      }
    } else if (leaf == state::follow_signal || leaf == state::follow_track) {
      const bool signal = leaf == state::follow_signal;
      if (!a.target_station) {
        out.emplace_back(signal ? event::signal_lost : event::track_lost);
      } else if (!a.guided) {
        const auto guide = signal ? PerceptKind::ir_signal : PerceptKind::track_mark;
        if (attempt_acquisition(a, guide, *a.target_station, percepts)) {
          a.guided = true;
          if (!signal) a.track_vertex = nearest_vertex(a);
        } else {
          out.emplace_back(signal ? event::signal_lost : event::track_lost);
        }
      } else if (distance(a.position, stations_[*a.target_station].position) <= config_.dock_radius) {
        out.emplace_back(event::engage);
      }
    }
    return out;
  }

  std::size_t nearest_vertex(const AgentBody& a) const {
    const auto& track = stations_[*a.target_station].track;
    std::size_t best = 0;
    for (std::size_t i = 1; i < track.size(); ++i) {
      if (distance(a.position, track[i]) < distance(a.position, track[best])) best = i;
    }
    return best;
  }

  // Returns whether the agent moved.
  bool move(AgentBody& a, const std::vector<Percept>& percepts, std::optional<std::size_t>& pursued) {
    using namespace feeding;
    a.pursued_agent.reset();
    const std::string& leaf = a.machine.leaf();
    const double speed = a.effective_speed();
    if (leaf == state::recharge) return false;

    if (leaf == state::follow_signal || leaf == state::follow_track) {
      if (!a.guided || !a.target_station) return false;
      const Station& st = stations_[*a.target_station];
      Vec2 goal = st.position;
      if (leaf == state::follow_track) {
        while (a.track_vertex + 1 < st.track.size() &&
               distance(a.position, st.track[a.track_vertex]) <= config_.dock_radius) {
          ++a.track_vertex;
        }
        goal = st.track[a.track_vertex];
      }
      const Vec2 delta = goal - a.position;
      const double d = delta.norm();
      if (d <= 0 || speed <= 0) return false;
      a.heading = std::atan2(delta.y, delta.x);
      a.position = a.position + (std::min(speed, d) / d) * delta;
      if (auto turned = config_.bounds.clamp(a.position, a.heading)) a.heading = *turned;
      return true;
    }

    // Free roaming: heading persistence, phototaxis or pattern N, lamp
    // attraction and short-range repulsion, plus wander noise.
    Vec2 steer = unit(a.heading);
    const bool override_active = a.death_awareness && a.store.below_critical();
    const Percept* light = nullptr;
    const Percept* lamp = nullptr;
    for (const auto& p : percepts) {
      if (p.kind == PerceptKind::light && (!light || p.strength > light->strength)) light = &p;
      if (p.kind == PerceptKind::agent_lamp && (!lamp || p.strength > lamp->strength)) lamp = &p;
    }
    if (light) {
      const Vec2 toward = unit(a.heading + light->bearing);
      const double w = override_active ? 3.0 * config_.light_weight : config_.light_weight;
      steer = steer + (light_avoidance_active(a, config_) ? -w : w) * toward;
    }
    if (lamp && config_.attraction > 0 && !override_active) {
      steer = steer + (config_.attraction * lamp->strength) * unit(a.heading + lamp->bearing);
      a.pursued_agent = lamp->source;
      pursued = lamp->source;
    }
    for (const auto& other : agents_) {
      if (other.id == a.id || !other.alive()) continue;
      const Vec2 delta = a.position - other.position;
      const double d = delta.norm();
      if (d < config_.repulsion_radius) {
        const Vec2 away = d > 0 ? (1.0 / d) * delta : unit(a.heading + std::numbers::pi / 2);
        steer = steer + config_.repulsion_weight * away;
      }
    }
    const double desired = std::atan2(steer.y, steer.x);
    const double turn = std::clamp(wrap_angle(desired - a.heading), -config_.max_turn, config_.max_turn);
    a.heading = wrap_angle(a.heading + turn + a.wander_rng.uniform(-config_.wander, config_.wander));
    if (speed <= 0) return false;
    a.position = a.position + speed * unit(a.heading);
    if (auto turned = config_.bounds.clamp(a.position, a.heading)) a.heading = *turned;
    return true;
  }

  WorldConfig config_;
  std::vector<Station> stations_;
  std::vector<Light> lights_;
  std::uint64_t seed_;
  std::shared_ptr<const fsm::StateMachine> machine_;
  std::vector<AgentBody> agents_;
  std::vector<bool> lamp_snapshot_;
  std::deque<std::vector<std::optional<std::size_t>>> pursuit_log_;
  std::uint64_t tick_ = 0;
};

}  // namespace asim
