#pragma once

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "asim/error.hpp"
#include "asim/rng.hpp"

namespace asim {

/// One alternative route to a goal, e.g. following the IR beacon or the track.
struct ChoicePath {
  std::string id;
  std::vector<std::string> hops;
  std::string goal;
};

struct WeightEntry {
  double positive = 0.0;
  double negative = 0.0;
  std::uint64_t successes = 0;
  std::uint64_t failures = 0;

  friend bool operator==(const WeightEntry&, const WeightEntry&) = default;
};

struct WeightTable {
  std::map<std::string, WeightEntry, std::less<>> entries;
  double tolerance = 0.1;
  // Scores are compared as integers in units of `precision`.
  double precision = 1e-9;

  const WeightEntry& at(std::string_view path) const {
    auto it = entries.find(path);
    if (it == entries.end()) throw StateError("unknown choice path: " + std::string(path));
    return it->second;
  }
};

struct DecisionTrace {
  std::string chosen;
  std::map<std::string, double, std::less<>> scores;
  std::vector<std::string> candidates;  // the set the choice was drawn from
  bool tie_broken = false;
  std::uint64_t rng_draws = 0;
};

inline WeightTable init_table(const std::vector<ChoicePath>& paths, double tolerance = 0.1) {
  if (paths.empty()) throw ConfigError("decision: at least one choice path is required");
  if (!(tolerance > 0.0)) throw ConfigError("decision: tolerance must be > 0");
  WeightTable table;
  table.tolerance = tolerance;
  for (const auto& path : paths) {
    if (path.hops.empty()) throw ConfigError("decision: path '" + path.id + "' has no hops");
    if (!table.entries.emplace(path.id, WeightEntry{}).second)
      throw ConfigError("decision: duplicate path id '" + path.id + "'");
  }
  return table;
}

/// Net preference of a path: positive minus negative weight.
constexpr double score(const WeightEntry& entry) noexcept { return entry.positive - entry.negative; }

inline std::int64_t quantize(double value, double precision) {
  return static_cast<std::int64_t>(std::llround(value / precision));
}

/// Paths whose score is within `tolerance` of the best score (closed bound),
/// in table order.
inline std::vector<std::string> tie_set(const WeightTable& table) {
  if (table.entries.empty()) throw StateError("decision: empty weight table");
  std::int64_t best = INT64_MIN;
  for (const auto& [id, entry] : table.entries)
    best = std::max(best, quantize(score(entry), table.precision));
  const std::int64_t margin = quantize(table.tolerance, table.precision);
  std::vector<std::string> ties;
  for (const auto& [id, entry] : table.entries) {
    if (quantize(score(entry), table.precision) >= best - margin) ties.push_back(id);
  }
  return ties;
}

inline bool all_zero(const WeightTable& table) noexcept {
  for (const auto& [id, entry] : table.entries) {
    if (entry.positive != 0.0 || entry.negative != 0.0) return false;
  }
  return true;
}

/// Picks the path to pursue. With no experience at all the pick is uniform
/// over every path; otherwise the best-scoring path wins, and paths within
/// tolerance of it are resolved uniformly. Randomness is only consumed when
/// more than one path is eligible.
inline DecisionTrace choose(const WeightTable& table, RandomStream& rng) {
  if (table.entries.empty()) throw StateError("decision: empty weight table");
  DecisionTrace trace;
  for (const auto& [id, entry] : table.entries) trace.scores.emplace(id, score(entry));

  if (all_zero(table)) {
    for (const auto& [id, entry] : table.entries) trace.candidates.push_back(id);
  } else {
    trace.candidates = tie_set(table);
  }

  if (trace.candidates.size() == 1) {
    trace.chosen = trace.candidates.front();
    return trace;
  }
  const std::uint64_t before = rng.draws();
  trace.chosen = trace.candidates[rng.index(trace.candidates.size())];
  trace.tie_broken = true;
  trace.rng_draws = rng.draws() - before;
  return trace;
}

inline WeightTable record_success(WeightTable table, std::string_view path) {
  auto it = table.entries.find(path);
  if (it == table.entries.end()) throw StateError("unknown choice path: " + std::string(path));
  WeightEntry& e = it->second;
  e.positive = (e.positive + 1.0) / 2.0;
  ++e.successes;
  return table;
}

inline WeightTable record_failure(WeightTable table, std::string_view path) {
  auto it = table.entries.find(path);
  if (it == table.entries.end()) throw StateError("unknown choice path: " + std::string(path));
  WeightEntry& e = it->second;
  e.positive = e.positive / 2.0;
  e.negative = (e.negative + 1.0) / 2.0;
  ++e.failures;
  return table;
}

}  // namespace asim
