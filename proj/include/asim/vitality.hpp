#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "asim/error.hpp"

namespace asim {

inline constexpr std::string_view kIdleAction = "idle";

/// Piecewise-linear gain: (0, 0) -> (knee_charge, knee_gain) -> (1, 1).
/// The default knee lies on the diagonal, i.e. gain equals charge fraction.
struct GainCurve {
  double knee_charge = 0.5;
  double knee_gain = 0.5;

  double at(double fraction) const noexcept {
    fraction = std::clamp(fraction, 0.0, 1.0);
    if (fraction <= knee_charge) return knee_gain * (fraction / knee_charge);
    return knee_gain + (1.0 - knee_gain) * ((fraction - knee_charge) / (1.0 - knee_charge));
  }
};

/// Lifetime counters. Every field only ever grows.
struct MetabolicLedger {
  double total_drained = 0.0;     // energy actually removed
  double total_recharged = 0.0;   // energy actually added
  double drain_shortfall = 0.0;   // requested drain that hit the empty clamp
  double recharge_overflow = 0.0; // offered recharge that hit the full clamp
  std::uint64_t info_inflow = 0;  // percepts absorbed
  std::uint64_t ticks_alive = 0;
};

struct EnergyStore {
  double charge = 1.0;
  double capacity = 1.0;
  double base_drain = 0.0;
  std::map<std::string, double, std::less<>> action_costs;
  double low_threshold = 0.3;
  double critical_threshold = 0.1;
  GainCurve gain_curve;
  MetabolicLedger ledger;
  bool dead = false;

  double fraction() const noexcept { return charge / capacity; }
  bool below_low() const noexcept { return charge < low_threshold * capacity; }
  bool below_critical() const noexcept { return charge < critical_threshold * capacity; }
};

inline void validate(const EnergyStore& store) {
  std::vector<std::string> errors;
  if (!(store.capacity > 0.0)) errors.push_back("energy: capacity must be > 0");
  if (!(store.charge >= 0.0 && store.charge <= store.capacity))
    errors.push_back("energy: charge must lie in [0, capacity]");
  if (!(store.base_drain >= 0.0)) errors.push_back("energy: base_drain must be >= 0");
  if (!(store.low_threshold > 0.0 && store.low_threshold < 1.0))
    errors.push_back("energy: low_threshold must lie in (0, 1)");
  if (!(store.critical_threshold > 0.0 && store.critical_threshold < store.low_threshold))
    errors.push_back("energy: critical_threshold must lie in (0, low_threshold)");
  if (!(store.gain_curve.knee_charge > 0.0 && store.gain_curve.knee_charge < 1.0))
    errors.push_back("energy: gain knee charge must lie in (0, 1)");
  if (!(store.gain_curve.knee_gain >= 0.0 && store.gain_curve.knee_gain <= 1.0))
    errors.push_back("energy: gain knee value must lie in [0, 1]");
  for (const auto& [action, cost] : store.action_costs) {
    if (!(cost >= 0.0)) errors.push_back("energy: cost of action '" + action + "' must be >= 0");
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
}

/// One tick of metabolism: base drain plus the cost of `action`, clamped at
/// empty. Reaching zero marks the store dead; a dead store rejects further use.
inline EnergyStore drain(EnergyStore store, std::string_view action) {
  if (store.dead) throw DeathError("drain on a dead energy store");
  double cost = 0.0;
  if (auto it = store.action_costs.find(action); it != store.action_costs.end()) {
    cost = it->second;
  } else if (action != kIdleAction) {
    throw ConfigError("unknown action kind: " + std::string(action));
  }
  const double requested = store.base_drain + cost;
  const double taken = std::min(store.charge, requested);
  store.charge -= taken;
  store.ledger.total_drained += taken;
  store.ledger.drain_shortfall += requested - taken;
  ++store.ledger.ticks_alive;
  if (store.charge <= 0.0) {
    store.charge = 0.0;
    store.dead = true;
  }
  return store;
}

inline EnergyStore recharge(EnergyStore store, double rate, double dt) {
  if (rate < 0.0) throw ArgumentError("recharge rate must be >= 0");
  if (dt < 0.0) throw ArgumentError("recharge duration must be >= 0");
  if (store.dead) throw DeathError("recharge on a dead energy store");
  const double offered = rate * dt;
  const double added = std::min(store.capacity - store.charge, offered);
  store.charge += added;
  store.ledger.total_recharged += added;
  store.ledger.recharge_overflow += offered - added;
  return store;
}

inline EnergyStore absorb_percepts(EnergyStore store, std::uint64_t count) {
  if (store.dead) throw DeathError("percepts delivered to a dead energy store");
  store.ledger.info_inflow += count;
  return store;
}

/// Amplifier gain in [0, 1]; nondecreasing in charge.
inline double gain(const EnergyStore& store) noexcept {
  return store.gain_curve.at(store.fraction());
}

enum class VitalKind { power_low, power_lower, power_critical, died, recharged };

inline std::string_view to_string(VitalKind kind) noexcept {
  switch (kind) {
    case VitalKind::power_low: return "PowerLow";
    case VitalKind::power_lower: return "PowerLower";
    case VitalKind::power_critical: return "PowerCritical";
    case VitalKind::died: return "Died";
    case VitalKind::recharged: return "Recharged";
  }
  return "?";
}

struct VitalEvent {
  VitalKind kind;
  std::uint64_t tick;

  friend bool operator==(const VitalEvent&, const VitalEvent&) = default;
};

/// Events implied by the transition `before` -> `after`. Only downward
/// threshold crossings are reported. `feeding_cycle_failed` is set by the
/// caller when the feeding machine left through its lost-signal exit during
/// this step; it yields PowerLower while the store sits below the low mark.
inline std::vector<VitalEvent> vital_events(const EnergyStore& before, const EnergyStore& after,
                                            std::uint64_t tick,
                                            bool feeding_cycle_failed = false) {
  std::vector<VitalEvent> events;
  const double low = after.low_threshold * after.capacity;
  const double critical = after.critical_threshold * after.capacity;
  if (before.charge >= low && after.charge < low) events.push_back({VitalKind::power_low, tick});
  if (feeding_cycle_failed && after.charge < low && !after.dead)
    events.push_back({VitalKind::power_lower, tick});
  if (before.charge >= critical && after.charge < critical)
    events.push_back({VitalKind::power_critical, tick});
  if (after.dead && !before.dead) events.push_back({VitalKind::died, tick});
  if (before.charge < before.capacity && after.charge >= after.capacity)
    events.push_back({VitalKind::recharged, tick});
  return events;
}

}  // namespace asim
