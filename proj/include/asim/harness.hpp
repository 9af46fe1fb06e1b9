#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "asim/config.hpp"
#include "asim/decision.hpp"
#include "asim/error.hpp"
#include "asim/feeding.hpp"
#include "asim/rng.hpp"
#include "asim/world.hpp"

namespace asim {

struct DecisionRow {
  std::uint64_t tick;
  std::size_t agent;
  std::string chosen;
  double score_signal;
  double score_track;
  bool tie_broken;
};

struct VitalRow {
  std::uint64_t tick;
  std::size_t agent;
  VitalKind kind;
  double charge;
};

struct TransitionRow {
  std::uint64_t tick;
  std::size_t agent;
  std::string source;
  std::string target;
  std::string trigger;
  std::string chosen_path;
};

struct AggregationRow {
  std::uint64_t tick;
  double radius;
  AggregationMetrics metrics;
};

struct AgentOutcome {
  WeightTable weights;
  std::uint64_t episodes = 0;  // completed feeding episodes
  std::uint64_t survival_ticks = 0;  // tick of death, or ticks run when alive
  bool died = false;
  // Episode after which signal last moved strictly ahead of track; none when
  // the run ended without that preference.
  std::optional<std::uint64_t> preference_episode;
};

struct ReplicationReport {
  std::uint64_t replication = 0;
  std::uint64_t derived_seed = 0;
  std::uint64_t ticks_run = 0;
  std::vector<DecisionRow> decisions;
  std::vector<VitalRow> vitals;
  std::vector<TransitionRow> transitions;
  std::vector<AggregationRow> aggregation;
  std::vector<AgentOutcome> agents;
  std::optional<std::size_t> leader;
};

struct RunReport {
  std::uint64_t seed = 0;
  std::vector<ReplicationReport> replications;
};

struct Summary {
  std::size_t replications = 0;
  std::size_t agents = 0;
  double preference_rate = 0.0;  // share of agents ending with score(signal) > score(track)
  std::optional<double> mean_episodes_to_preference;
  double death_rate = 0.0;
  double mean_survival_ticks = 0.0;
  std::map<std::size_t, std::size_t> leader_counts;  // agent -> replications led
};

inline World build_world(const ExperimentConfig& cfg, std::uint64_t derived_seed) {
  World world(cfg.world, cfg.stations, cfg.lights, derived_seed, cfg.machine);
  WeightTable table = init_table(feeding::choice_paths(), cfg.world.tolerance);
  for (const auto& [path, entry] : cfg.preset) table.entries.at(path) = entry;
  for (std::size_t i = 0; i < cfg.agent_count; ++i) {
    AgentSpec spec;
    spec.base_speed = cfg.base_speed;
    spec.sensor_range = cfg.sensor_range;
    spec.sensitivity = cfg.sensitivity_of(i);
    spec.store = cfg.energy;
    spec.classification = cfg.classification;
    spec.death_awareness = cfg.death_awareness;
    spec.weights = table;
    world.add_agent(spec);
  }
  return world;
}

/// Steps one fresh world for replication `r`. Pure in (cfg, r).
inline ReplicationReport run_replication(const ExperimentConfig& cfg, std::uint64_t r) {
  ReplicationReport rep;
  rep.replication = r;
  rep.derived_seed = replication_seed(cfg.seed, r);
  World world = build_world(cfg, rep.derived_seed);
  const std::size_t n = world.agents().size();
  std::vector<std::uint64_t> decisions(n, 0);
  std::vector<std::uint64_t> completed(n, 0);  // episodes that left the search at an exit
  std::vector<std::optional<std::uint64_t>> preferred_since(n);

  std::vector<std::uint64_t> sample_ticks;
  for (const auto& [tick, radius] : cfg.world.corral_schedule) {
    if (tick > 0) sample_ticks.push_back(tick - 1);  // end of the previous stage
  }
  auto sample_due = [&](std::uint64_t tick, bool last) {
    return last || (tick + 1) % cfg.metrics_interval == 0 ||
           std::find(sample_ticks.begin(), sample_ticks.end(), tick) != sample_ticks.end();
  };

  // Ends the run once every living agent reached the episode/decision
  // targets, or once nobody is left alive.
  const bool targets = cfg.stop_after_episodes > 0 || cfg.stop_after_decisions > 0;
  auto finished = [&] {
    bool any_alive = false;
    bool all_met = true;
    for (const auto& a : world.agents()) {
      if (!a.alive()) continue;
      any_alive = true;
      if (completed[a.id] < cfg.stop_after_episodes || decisions[a.id] < cfg.stop_after_decisions)
        all_met = false;
    }
    if (!any_alive) return n > 0;
    return targets && all_met;
  };

  for (std::uint64_t t = 0; t < cfg.ticks; ++t) {
    const std::uint64_t tick = world.tick();
    for (auto& rec : world.step()) {
      if (auto* v = std::get_if<VitalEvent>(&rec.what)) {
        rep.vitals.push_back({rec.tick, rec.agent, v->kind, world.agent(rec.agent).store.charge});
      } else if (auto* d = std::get_if<DecisionTrace>(&rec.what)) {
        const auto& table = world.agent(rec.agent).weights();
        rep.decisions.push_back({rec.tick, rec.agent, d->chosen, score(table.at(feeding::kSignal)),
                                 score(table.at(feeding::kTrack)), d->tie_broken});
        ++decisions[rec.agent];
      } else if (auto* tr = std::get_if<fsm::TransitionRecord>(&rec.what)) {
        if (tr->source == feeding::state::located || tr->source == feeding::state::lost) ++completed[rec.agent];
        rep.transitions.push_back({rec.tick, rec.agent, tr->source, tr->target, tr->trigger, tr->chosen_path});
      }
    }
    for (const auto& a : world.agents()) {
      const auto& tab = a.weights();
      const bool prefers = score(tab.at(feeding::kSignal)) > score(tab.at(feeding::kTrack));
      if (!prefers) preferred_since[a.id].reset();
      else if (!preferred_since[a.id]) preferred_since[a.id] = completed[a.id];
    }
    rep.ticks_run = t + 1;
    const bool stop = finished();
    const bool last = stop || t + 1 == cfg.ticks;
    if (n >= 2 && sample_due(tick, last)) {
      rep.aggregation.push_back({tick, world.bounds().radius, world.aggregation_metrics()});
    }
    if (stop) break;
  }
  rep.leader = world.leader_observation(cfg.leader_window);
  for (const auto& a : world.agents()) {
    AgentOutcome out;
    out.weights = a.weights();
    out.episodes = completed[a.id];
    out.died = !a.alive();
    out.survival_ticks = a.died_at ? *a.died_at : rep.ticks_run;
    out.preference_episode = preferred_since[a.id];
    rep.agents.push_back(std::move(out));
  }
  return rep;
}

/// Runs every replication, in parallel when allowed. Results are merged in
/// replication order, so the thread count never affects the report.
inline RunReport run_experiment(const ExperimentConfig& cfg) {
  RunReport report;
  report.seed = cfg.seed;
  report.replications.resize(cfg.replications);
  std::uint64_t threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<std::uint64_t>(threads, cfg.replications);
  if (threads <= 1) {
    for (std::uint64_t r = 0; r < cfg.replications; ++r) report.replications[r] = run_replication(cfg, r);
    return report;
  }
  std::vector<std::future<void>> workers;
  for (std::uint64_t w = 0; w < threads; ++w) {
    workers.push_back(std::async(std::launch::async, [&, w] {
      for (std::uint64_t r = w; r < cfg.replications; r += threads) report.replications[r] = run_replication(cfg, r);
    }));
  }
  for (auto& f : workers) f.get();  // rethrows worker exceptions
  return report;
}

inline Summary summarize(const RunReport& report) {
  Summary s;
  s.replications = report.replications.size();
  std::size_t preferring = 0, dead = 0, with_pref = 0;
  double survival = 0.0, to_pref = 0.0;
  for (const auto& rep : report.replications) {
    for (const auto& a : rep.agents) {
      ++s.agents;
      if (score(a.weights.at(feeding::kSignal)) > score(a.weights.at(feeding::kTrack))) ++preferring;
      if (a.died) ++dead;
      survival += static_cast<double>(a.survival_ticks);
      if (a.preference_episode) {
        ++with_pref;
        to_pref += static_cast<double>(*a.preference_episode);
      }
    }
    if (rep.leader) ++s.leader_counts[*rep.leader];
  }
  if (s.agents > 0) {
    const auto n = static_cast<double>(s.agents);
    s.preference_rate = static_cast<double>(preferring) / n;
    s.death_rate = static_cast<double>(dead) / n;
    s.mean_survival_ticks = survival / n;
  }
  if (with_pref > 0) s.mean_episodes_to_preference = to_pref / static_cast<double>(with_pref);
  return s;
}

namespace report_detail {

inline std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v == 0.0 ? 0.0 : v);  // no "-0.000000"
  return buf;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace report_detail

/// Renders every output file in memory: name -> bytes.
inline std::map<std::string, std::string> render_report(const RunReport& report) {
  using report_detail::csv_field;
  using report_detail::fixed;
  const std::string seed = std::to_string(report.seed);
  std::ostringstream decisions, vitals, weights, aggregation, transitions, leaders, summary;
  decisions << "seed,replication,tick,agent,chosen,score_signal,score_track,tie_broken\n";
  vitals << "seed,replication,tick,agent,event,charge\n";
  weights << "seed,replication,agent,path,positive,negative,score,successes,failures\n";
  aggregation << "seed,replication,tick,radius,mean_nearest_neighbor,clusters,flock\n";
  transitions << "seed,replication,tick,agent,source,target,trigger,chosen_path\n";
  leaders << "seed,replication,leader\n";
  for (const auto& rep : report.replications) {
    const std::string prefix = seed + "," + std::to_string(rep.replication) + ",";
    for (const auto& d : rep.decisions) {
      decisions << prefix << d.tick << ',' << d.agent << ',' << csv_field(d.chosen) << ',' << fixed(d.score_signal)
                << ',' << fixed(d.score_track) << ',' << (d.tie_broken ? 1 : 0) << '\n';
    }
    for (const auto& v : rep.vitals)
      vitals << prefix << v.tick << ',' << v.agent << ',' << to_string(v.kind) << ',' << fixed(v.charge) << '\n';
    for (std::size_t i = 0; i < rep.agents.size(); ++i) {
      for (const auto& [path, e] : rep.agents[i].weights.entries) {
        weights << prefix << i << ',' << csv_field(path) << ',' << fixed(e.positive) << ',' << fixed(e.negative) << ','
                << fixed(score(e)) << ',' << e.successes << ',' << e.failures << '\n';
      }
    }
    for (const auto& a : rep.aggregation) {
      aggregation << prefix << a.tick << ',' << fixed(a.radius) << ',' << fixed(a.metrics.mean_nearest_neighbor) << ','
                  << a.metrics.clusters << ',' << (a.metrics.flock ? 1 : 0) << '\n';
    }
    for (const auto& t : rep.transitions) {
      transitions << prefix << t.tick << ',' << t.agent << ',' << csv_field(t.source) << ',' << csv_field(t.target)
                  << ',' << csv_field(t.trigger) << ',' << csv_field(t.chosen_path) << '\n';
    }
    leaders << prefix << (rep.leader ? std::to_string(*rep.leader) : std::string("none")) << '\n';
  }
  const Summary s = summarize(report);
  summary << "seed = " << report.seed << '\n'
          << "replications = " << s.replications << '\n'
          << "agents = " << s.agents << '\n'
          << "preference_rate = " << fixed(s.preference_rate) << '\n'
          << "mean_episodes_to_preference = "
          << (s.mean_episodes_to_preference ? fixed(*s.mean_episodes_to_preference) : std::string("none")) << '\n'
          << "death_rate = " << fixed(s.death_rate) << '\n'
          << "mean_survival_ticks = " << fixed(s.mean_survival_ticks) << '\n';
  summary << "leader_counts =";
  for (const auto& [agent, n] : s.leader_counts) summary << ' ' << agent << ':' << n;
  summary << '\n';
  return {{"decisions.csv", decisions.str()},     {"vitals.csv", vitals.str()},
          {"weights.csv", weights.str()},         {"aggregation.csv", aggregation.str()},
          {"transitions.csv", transitions.str()}, {"leaders.csv", leaders.str()},
          {"summary.txt", summary.str()}};
}

/// Writes the report into `out_dir` (created if needed); returns the paths.
inline std::vector<std::filesystem::path> emit_report(const RunReport& report, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error(out_dir.string() + ": cannot create directory: " + ec.message());
  std::vector<std::filesystem::path> written;
  for (const auto& [name, bytes] : render_report(report)) {
    const auto path = out_dir / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << bytes;
    out.close();
    if (!out) throw std::runtime_error(path.string() + ": write failed");
    written.push_back(path);
  }
  return written;
}

struct Divergence {
  std::string file;
  std::size_t line = 0;
  std::size_t column = 0;
  std::string detail;
};

struct ReplayResult {
  bool passed = true;
  std::optional<Divergence> divergence;
};

/// First difference between `expected` and `actual`, as 1-based line/column.
inline std::optional<std::pair<std::size_t, std::size_t>> first_difference(std::string_view expected,
                                                                           std::string_view actual) {
  std::size_t line = 1, col = 1;
  const std::size_t n = std::min(expected.size(), actual.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (expected[i] != actual[i]) return std::make_pair(line, col);
    if (expected[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  if (expected.size() != actual.size()) return std::make_pair(line, col);
  return std::nullopt;
}

/// Re-runs `cfg` and byte-compares every output against `reference_dir`.
inline ReplayResult replay_check(const ExperimentConfig& cfg, const std::filesystem::path& reference_dir) {
  if (!std::filesystem::is_directory(reference_dir))
    throw ConfigError(reference_dir.string() + ": reference directory not found");
  ReplayResult result;
  for (const auto& [name, bytes] : render_report(run_experiment(cfg))) {
    const auto path = reference_dir / name;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path.string() + ": reference file missing");
    std::ostringstream ref;
    ref << in.rdbuf();
    if (auto diff = first_difference(ref.str(), bytes)) {
      result.passed = false;
      result.divergence = Divergence{name, diff->first, diff->second, "content differs"};
      return result;
    }
  }
  return result;
}

}  // namespace asim
