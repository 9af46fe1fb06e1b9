#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "asim/decision.hpp"
#include "asim/error.hpp"
#include "asim/feeding.hpp"
#include "asim/fsm.hpp"
#include "asim/kv.hpp"
#include "asim/vitality.hpp"
#include "asim/world.hpp"

namespace asim {

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::uint64_t ticks = 1000;
  std::uint64_t replications = 1;
  std::uint64_t stop_after_episodes = 0;   // 0: run all ticks
  std::uint64_t stop_after_decisions = 0;  // 0: run all ticks
  std::uint64_t threads = 0;               // 0: one per hardware thread
  std::uint64_t metrics_interval = 100;
  std::uint64_t leader_window = 500;
  std::string out_dir = "out";

  WorldConfig world;
  std::vector<Station> stations;
  std::vector<Light> lights;

  std::uint64_t agent_count = 1;
  std::vector<double> sensitivities{1.0};  // one value, or one per agent
  double sensor_range = 10.0;
  double base_speed = 1.0;
  bool death_awareness = false;
  Classification classification = Classification::anima;
  EnergyStore energy = default_agent_store();
  std::map<std::string, WeightEntry> preset;  // path -> starting weights
  std::shared_ptr<const fsm::StateMachine> machine;  // null: the feeding chart

  double sensitivity_of(std::size_t agent) const {
    return sensitivities.size() == 1 ? sensitivities.front() : sensitivities.at(agent);
  }
};

namespace config_detail {

inline std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<std::uint64_t> to_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size()) return std::nullopt;
  return v;
}

// Whitespace- or comma-separated numbers.
inline std::optional<std::vector<double>> to_doubles(std::string_view s) {
  std::vector<double> out;
  std::string token;
  auto flush = [&]() -> bool {
    if (token.empty()) return true;
    auto v = to_double(token);
    token.clear();
    if (!v) return false;
    out.push_back(*v);
    return true;
  };
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == ',') {
      if (!flush()) return std::nullopt;
    } else {
      token += c;
    }
  }
  if (!flush()) return std::nullopt;
  return out;
}

}  // namespace config_detail

/// Parses and validates the flat `section.key = value` experiment format.
/// Every violation is collected; a ConfigError lists them with positions.
/// `base_dir` resolves relative file references (agents.machine_file).
inline ExperimentConfig parse_config(std::string_view text, std::string_view origin,
                                     const std::filesystem::path& base_dir = {}) {
  using namespace config_detail;
  const kv::File file = kv::parse(text, origin);
  std::vector<std::string> errors = file.errors;
  ExperimentConfig cfg;
  std::map<std::size_t, std::map<std::string, const kv::Entry*>> station_keys, light_keys;

  for (const auto& e : file.entries) {
    auto fail = [&](const std::string& msg) { errors.push_back(kv::where(origin, e.line) + e.key + ": " + msg); };
    auto number = [&](double& out, double lo, double hi, bool lo_open = false) {
      auto v = to_double(e.value);
      if (!v) return fail("expected a number, got '" + e.value + "'");
      if (*v < lo || *v > hi || (lo_open && *v == lo)) {
        std::ostringstream msg;
        msg << "value " << e.value << " out of range " << (lo_open ? "(" : "[") << lo << ", " << hi << "]";
        return fail(msg.str());
      }
      out = *v;
    };
    auto count = [&](std::uint64_t& out, std::uint64_t lo) {
      auto v = to_u64(e.value);
      if (!v) return fail("expected a non-negative integer, got '" + e.value + "'");
      if (*v < lo) return fail("must be >= " + std::to_string(lo));
      out = *v;
    };
    auto flag = [&](bool& out) {
      if (e.value == "true") out = true;
      else if (e.value == "false") out = false;
      else fail("expected true or false, got '" + e.value + "'");
    };
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::string& k = e.key;

    // Indexed sections: station.<i>.<field>, light.<i>.<field>.
    auto indexed = [&](std::string_view prefix, auto& table) {
      if (k.rfind(prefix, 0) != 0) return false;
      const std::string rest = k.substr(prefix.size());
      const auto dot = rest.find('.');
      auto index = dot == std::string::npos ? std::nullopt : to_u64(rest.substr(0, dot));
      if (!index || *index > 1000) {
        fail("expected " + std::string(prefix) + "<index>.<field>");
        return true;
      }
      table[*index][rest.substr(dot + 1)] = &e;
      return true;
    };
    if (indexed("station.", station_keys) || indexed("light.", light_keys)) continue;

    if (k == "run.seed") count(cfg.seed, 0);
    else if (k == "run.ticks") count(cfg.ticks, 1);
    else if (k == "run.replications") count(cfg.replications, 1);
    else if (k == "run.stop_after_episodes") count(cfg.stop_after_episodes, 0);
    else if (k == "run.stop_after_decisions") count(cfg.stop_after_decisions, 0);
    else if (k == "run.threads") count(cfg.threads, 0);
    else if (k == "run.metrics_interval") count(cfg.metrics_interval, 1);
    else if (k == "run.leader_window") count(cfg.leader_window, 1);
    else if (k == "run.out_dir") {
      if (e.value.empty()) fail("must not be empty");
      cfg.out_dir = e.value;
    } else if (k == "decision.tolerance") number(cfg.world.tolerance, 0, 1);
    else if (k.rfind("decision.preset.", 0) == 0) {
      const std::string path = k.substr(16);
      if (path != feeding::kSignal && path != feeding::kTrack) {
        fail("unknown path '" + path + "' (expected signal or track)");
        continue;
      }
      auto v = to_doubles(e.value);
      if (!v || v->size() != 2) {
        fail("expected '<positive> <negative>'");
        continue;
      }
      if ((*v)[0] < 0 || (*v)[0] > 1 || (*v)[1] < 0 || (*v)[1] > 1) {
        fail("weights must lie in [0, 1]");
        continue;
      }
      cfg.preset[path] = {(*v)[0], (*v)[1], 0, 0};
    } else if (k == "timers.waitTimer") count(cfg.world.wait_ticks, 1);
    else if (k == "world.shape") {
      if (e.value == "circle") cfg.world.bounds.shape = Bounds::Shape::circle;
      else if (e.value == "rectangle") cfg.world.bounds.shape = Bounds::Shape::rectangle;
      else fail("expected circle or rectangle, got '" + e.value + "'");
    } else if (k == "world.radius") number(cfg.world.bounds.radius, 0, inf, true);
    else if (k == "world.width") number(cfg.world.bounds.width, 0, inf, true);
    else if (k == "world.height") number(cfg.world.bounds.height, 0, inf, true);
    else if (k == "world.pattern_n_gate") number(cfg.world.pattern_n_gate, 0, 1);
    else if (k == "world.light_weight") number(cfg.world.light_weight, 0, inf);
    else if (k == "world.attraction") number(cfg.world.attraction, 0, inf);
    else if (k == "world.repulsion_radius") number(cfg.world.repulsion_radius, 0, inf);
    else if (k == "world.repulsion_weight") number(cfg.world.repulsion_weight, 0, inf);
    else if (k == "world.cluster_threshold") number(cfg.world.cluster_threshold, 0, inf, true);
    else if (k == "world.dock_radius") number(cfg.world.dock_radius, 0, inf, true);
    else if (k == "world.track_range") number(cfg.world.track_range, 0, inf);
    else if (k == "world.max_turn") number(cfg.world.max_turn, 0, inf, true);
    else if (k == "world.wander") number(cfg.world.wander, 0, inf);
    else if (k == "world.lamp_switching") flag(cfg.world.lamp_switching);
    else if (k == "world.corral_schedule") {
      // "tick:radius, tick:radius, ..."
      cfg.world.corral_schedule.clear();
      std::stringstream in(e.value);
      std::string item;
      while (std::getline(in, item, ',')) {
        const auto stage = std::string(kv::trim(item));
        if (stage.empty()) continue;
        const auto colon = stage.find(':');
        auto tick = colon == std::string::npos ? std::nullopt : to_u64(kv::trim(std::string_view(stage).substr(0, colon)));
        auto radius = colon == std::string::npos ? std::nullopt : to_double(kv::trim(std::string_view(stage).substr(colon + 1)));
        if (!tick || !radius || !(*radius > 0)) {
          fail("expected 'tick:radius' stages with radius > 0, got '" + stage + "'");
          break;
        }
        cfg.world.corral_schedule.emplace_back(*tick, *radius);
      }
      for (std::size_t i = 1; i < cfg.world.corral_schedule.size(); ++i) {
        if (cfg.world.corral_schedule[i].first <= cfg.world.corral_schedule[i - 1].first) {
          fail("stage ticks must increase");
          break;
        }
      }
    } else if (k == "agents.count") count(cfg.agent_count, 0);
    else if (k == "agents.sensitivities") {
      auto v = to_doubles(e.value);
      if (!v || v->empty()) fail("expected a list of numbers");
      else if (std::any_of(v->begin(), v->end(), [](double s) { return s < 0 || s > 1; }))
        fail("sensitivities must lie in [0, 1]");
      else cfg.sensitivities = *v;
    } else if (k == "agents.sensor_range") number(cfg.sensor_range, 0, inf);
    else if (k == "agents.base_speed") number(cfg.base_speed, 0, inf);
    else if (k == "agents.death_awareness") flag(cfg.death_awareness);
    else if (k == "agents.classification") {
      if (e.value == "android") cfg.classification = Classification::android;
      else if (e.value == "robot") cfg.classification = Classification::robot;
      else if (e.value == "automaton") cfg.classification = Classification::automaton;
      else if (e.value == "anima") cfg.classification = Classification::anima;
      else fail("expected android, robot, automaton or anima");
    } else if (k == "agents.machine_file") {
      const auto path = base_dir / e.value;
      std::ifstream in(path, std::ios::binary);
      if (!in) {
        fail("cannot read '" + path.string() + "'");
        continue;
      }
      std::ostringstream text_in;
      text_in << in.rdbuf();
      try {
        auto machine = fsm::parse_machine(text_in.str(), path.string());
        cfg.machine = std::make_shared<const fsm::StateMachine>(std::move(machine));
      } catch (const ConfigError& err) {
        for (const auto& m : err.messages()) errors.push_back(m);
      }
    } else if (k == "energy.capacity") number(cfg.energy.capacity, 0, inf, true);
    else if (k == "energy.initial_charge") number(cfg.energy.charge, 0, inf);
    else if (k == "energy.base_drain") number(cfg.energy.base_drain, 0, inf);
    else if (k == "energy.low_threshold") number(cfg.energy.low_threshold, 0, 1, true);
    else if (k == "energy.critical_threshold") number(cfg.energy.critical_threshold, 0, 1, true);
    else if (k == "energy.gain_knee_charge") number(cfg.energy.gain_curve.knee_charge, 0, 1, true);
    else if (k == "energy.gain_knee_gain") number(cfg.energy.gain_curve.knee_gain, 0, 1);
    else if (k.rfind("energy.cost.", 0) == 0 && k.size() > 12) {
      double cost = 0.0;
      number(cost, 0, inf);
      cfg.energy.action_costs[k.substr(12)] = cost;
    } else {
      fail("unknown key");
    }
  }

  // Indexed sections must be dense: 0..n-1.
  auto dense = [&](const auto& table, std::string_view what) {
    std::size_t expect = 0;
    for (const auto& [index, fields] : table) {
      if (index != expect) {
        errors.push_back(std::string(origin) + ": " + std::string(what) + " indices must run 0..n-1 (missing " +
                         std::string(what) + "." + std::to_string(expect) + ")");
        return;
      }
      ++expect;
    }
  };
  dense(station_keys, "station");
  dense(light_keys, "light");

  for (const auto& [index, fields] : station_keys) {
    Station s;
    std::optional<std::vector<Vec2>> track;
    for (const auto& [field, e] : fields) {
      auto fail = [&](const std::string& msg) { errors.push_back(kv::where(origin, e->line) + e->key + ": " + msg); };
      auto number = [&](double& out, double lo, double hi, bool lo_open = false) {
        auto v = to_double(e->value);
        if (!v) return fail("expected a number, got '" + e->value + "'");
        if (*v < lo || *v > hi || (lo_open && *v == lo)) return fail("value " + e->value + " out of range");
        out = *v;
      };
      constexpr double inf = std::numeric_limits<double>::infinity();
      if (field == "x") number(s.position.x, -inf, inf);
      else if (field == "y") number(s.position.y, -inf, inf);
      else if (field == "ir_range") number(s.ir_range, 0, inf, true);
      else if (field == "ir_reliability") number(s.ir_reliability, 0, 1);
      else if (field == "track_reliability") number(s.track_reliability, 0, 1);
      else if (field == "recharge_rate") number(s.recharge_rate, 0, inf);
      else if (field == "track") {
        // "x y; x y; ..."
        std::vector<Vec2> points;
        std::stringstream in(e->value);
        std::string item;
        bool ok = true;
        while (std::getline(in, item, ';')) {
          auto v = to_doubles(kv::trim(item));
          if (!v || v->size() != 2) {
            ok = false;
            break;
          }
          points.push_back({(*v)[0], (*v)[1]});
        }
        if (!ok || points.size() < 2) fail("expected at least two 'x y' vertices separated by ';'");
        else track = points;
      } else {
        fail("unknown key");
      }
    }
    if (track) {
      s.track = *track;
      if (!(s.track.back() == s.position))
        errors.push_back(std::string(origin) + ": station." + std::to_string(index) + ".track must end at the station");
    } else {
      // Default guide: a short straight track approaching from below.
      s.track = {{s.position.x, s.position.y - 3.0}, s.position};
    }
    cfg.stations.push_back(s);
  }
  for (const auto& [index, fields] : light_keys) {
    Light l;
    for (const auto& [field, e] : fields) {
      auto v = to_double(e->value);
      auto fail = [&](const std::string& msg) { errors.push_back(kv::where(origin, e->line) + e->key + ": " + msg); };
      if (field != "x" && field != "y" && field != "intensity") {
        fail("unknown key");
        continue;
      }
      if (!v) {
        fail("expected a number, got '" + e->value + "'");
        continue;
      }
      if (field == "x") l.position.x = *v;
      else if (field == "y") l.position.y = *v;
      else if (*v < 0) fail("intensity must be >= 0");
      else l.intensity = *v;
    }
    cfg.lights.push_back(l);
  }

  if (cfg.sensitivities.size() != 1 && cfg.sensitivities.size() != cfg.agent_count)
    errors.push_back(std::string(origin) + ": agents.sensitivities: expected 1 or " +
                     std::to_string(cfg.agent_count) + " values, got " + std::to_string(cfg.sensitivities.size()));
  try {
    validate(cfg.energy);
  } catch (const ConfigError& err) {
    for (const auto& m : err.messages()) errors.push_back(std::string(origin) + ": " + m);
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path.string(), path.parent_path());
}

}  // namespace asim
