#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <iterator>
#include <map>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "asim/error.hpp"
#include "asim/kv.hpp"
#include "asim/log.hpp"

namespace asim::fsm {

inline constexpr std::string_view kRoot = "root";

enum class StateKind { simple, composite, initial, exit_point };

inline std::string_view to_string(StateKind kind) noexcept {
  switch (kind) {
    case StateKind::simple: return "simple";
    case StateKind::composite: return "composite";
    case StateKind::initial: return "initial";
    case StateKind::exit_point: return "exit";
  }
  return "?";
}

struct State {
  std::string name;
  StateKind kind = StateKind::simple;
  std::string parent;        // empty: child of the implicit root
  std::string timer;         // armed on entry, disarmed on exit
  std::string entry_action;  // handed to the context on entry

  bool pseudo() const noexcept {
    return kind == StateKind::initial || kind == StateKind::exit_point;
  }
  friend bool operator==(const State&, const State&) = default;
};

/// One outcome of a decision junction: choosing `path` leads to `target`.
struct Branch {
  std::string path;
  std::string target;
  friend bool operator==(const Branch&, const Branch&) = default;
};

/// An empty trigger marks a completion transition, taken as soon as its
/// source pseudostate is entered. A transition with a decision point has no
/// single target; the context picks among `branches`.
struct Transition {
  std::string source;
  std::string target;
  std::string trigger;
  std::string guard;
  std::string effect;
  std::string decision_point;
  std::vector<Branch> branches;

  bool completion() const noexcept { return trigger.empty(); }
  friend bool operator==(const Transition&, const Transition&) = default;
};

inline std::string expiry_event(std::string_view timer) { return std::string(timer) + "_expired"; }

class StateMachine {
 public:
  StateMachine& add_state(State state) {
    states_.push_back(std::move(state));
    return *this;
  }
  StateMachine& add_transition(Transition transition) {
    transitions_.push_back(std::move(transition));
    return *this;
  }
  StateMachine& add_timer(std::string name, std::uint64_t ticks) {
    timers_[std::move(name)] = ticks;
    return *this;
  }
  StateMachine& set_initial(std::string name) {
    initial_ = std::move(name);
    return *this;
  }

  const std::string& initial() const noexcept { return initial_; }
  const std::vector<State>& states() const noexcept { return states_; }
  const std::vector<Transition>& transitions() const noexcept { return transitions_; }
  const std::map<std::string, std::uint64_t>& timers() const noexcept { return timers_; }

  const State* find(std::string_view name) const noexcept {
    for (const auto& s : states_) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }

  const State& state(std::string_view name) const {
    if (const State* s = find(name)) return *s;
    throw StateError("fsm: no state named '" + std::string(name) + "'");
  }

  /// Exit points of all composites, in declaration order.
  std::vector<std::string> exit_points() const {
    std::vector<std::string> out;
    for (const auto& s : states_) {
      if (s.kind == StateKind::exit_point) out.push_back(s.name);
    }
    return out;
  }

  /// The initial pseudostate of a composite, or the machine's initial for root.
  std::string initial_of(std::string_view composite) const {
    if (composite == kRoot) return initial_;
    for (const auto& s : states_) {
      if (s.parent == composite && s.kind == StateKind::initial) return s.name;
    }
    throw StateError("fsm: composite '" + std::string(composite) + "' has no initial");
  }

  /// Ancestors of `name` from root down to the state itself, root included.
  std::vector<std::string> path_to(std::string_view name) const {
    std::vector<std::string> path;
    std::string cursor(name);
    while (!cursor.empty()) {
      if (path.size() > states_.size()) throw StateError("fsm: parent cycle at '" + cursor + "'");
      path.push_back(cursor);
      cursor = state(cursor).parent;
    }
    path.emplace_back(kRoot);
    std::reverse(path.begin(), path.end());
    return path;
  }

  /// Structural checks; every problem is reported, not just the first.
  void validate() const {
    std::vector<std::string> errors;
    std::map<std::string, int> seen;
    for (const auto& s : states_) {
      if (s.name.empty() || s.name == kRoot) errors.push_back("fsm: invalid state name '" + s.name + "'");
      if (++seen[s.name] == 2) errors.push_back("fsm: duplicate state '" + s.name + "'");
    }
    auto exists = [&](const std::string& n) { return seen.count(n) > 0; };
    for (const auto& s : states_) {
      if (!s.parent.empty()) {
        const State* p = find(s.parent);
        if (p == nullptr) {
          errors.push_back("fsm: state '" + s.name + "' has unknown parent '" + s.parent + "'");
        } else if (p->kind != StateKind::composite) {
          errors.push_back("fsm: parent '" + s.parent + "' of '" + s.name + "' is not composite");
        }
      }
      if (s.kind == StateKind::exit_point && s.parent.empty())
        errors.push_back("fsm: exit point '" + s.name + "' must belong to a composite state");
      if (s.kind == StateKind::initial && s.parent.empty())
        errors.push_back("fsm: initial pseudostate '" + s.name + "' must belong to a composite state");
      if (!s.timer.empty() && timers_.count(s.timer) == 0)
        errors.push_back("fsm: state '" + s.name + "' arms undeclared timer '" + s.timer + "'");
      if (s.kind == StateKind::composite) {
        int initials = 0;
        for (const auto& c : states_) {
          if (c.parent == s.name && c.kind == StateKind::initial) ++initials;
        }
        if (initials != 1)
          errors.push_back("fsm: composite '" + s.name + "' must declare exactly one initial");
      }
      if (s.pseudo()) {
        bool has_completion = false;
        for (const auto& t : transitions_) has_completion |= (t.source == s.name && t.completion());
        if (!has_completion)
          errors.push_back("fsm: pseudostate '" + s.name + "' has no completion transition");
      }
    }
    if (initial_.empty() || !exists(initial_)) {
      errors.push_back("fsm: initial state '" + initial_ + "' does not exist");
    } else if (const State* i = find(initial_); i->pseudo() || !i->parent.empty()) {
      errors.push_back("fsm: initial state '" + initial_ + "' must be a top-level state");
    }
    for (const auto& t : transitions_) {
      if (!exists(t.source)) errors.push_back("fsm: transition from unknown state '" + t.source + "'");
      if (t.decision_point.empty()) {
        if (!exists(t.target)) errors.push_back("fsm: transition to unknown state '" + t.target + "'");
        if (!t.branches.empty())
          errors.push_back("fsm: transition from '" + t.source + "' has branches but no decision point");
      } else {
        if (t.branches.size() < 2)
          errors.push_back("fsm: decision point '" + t.decision_point + "' needs at least two branches");
        for (const auto& b : t.branches) {
          if (!exists(b.target))
            errors.push_back("fsm: decision branch to unknown state '" + b.target + "'");
        }
      }
      if (t.completion()) {
        const State* s = find(t.source);
        if (s != nullptr && !s->pseudo())
          errors.push_back("fsm: completion transition from non-pseudostate '" + t.source + "'");
      }
    }
    if (!errors.empty()) throw ConfigError(std::move(errors));
  }

  friend bool operator==(const StateMachine&, const StateMachine&) = default;

 private:
  std::string initial_;
  std::vector<State> states_;
  std::vector<Transition> transitions_;
  std::map<std::string, std::uint64_t> timers_;
};

/// Hooks through which a machine instance touches its owner. The defaults
/// accept every guard, ignore actions and take the first branch.
class MachineContext {
 public:
  virtual ~MachineContext() = default;
  virtual bool alive() const { return true; }
  virtual bool guard(std::string_view /*name*/) { return true; }
  virtual void effect(std::string_view /*name*/) {}
  virtual void on_entry(std::string_view /*action*/) {}
  virtual std::string decide(std::string_view /*point*/, std::span<const Branch> branches) {
    return branches.front().path;
  }
};

struct TransitionRecord {
  std::uint64_t tick = 0;
  std::string source;
  std::string target;
  std::string trigger;      // empty for completion transitions
  std::string chosen_path;  // set when a decision point was consulted

  friend bool operator==(const TransitionRecord&, const TransitionRecord&) = default;
};

/// Runtime configuration of one machine. Events are processed
/// run-to-completion: each dequeued event, together with every completion
/// transition it triggers, finishes before the next event is looked at.
class MachineInstance {
 public:
  explicit MachineInstance(std::shared_ptr<const StateMachine> machine,
                           std::size_t history_capacity = 256)
      : machine_(std::move(machine)), history_capacity_(history_capacity) {
    machine_->validate();
    MachineContext defaults;
    enter_from(std::string(kRoot), machine_->initial(), defaults, nullptr);
    settle(defaults, "", nullptr);
  }

  const StateMachine& machine() const noexcept { return *machine_; }
  std::uint64_t now() const noexcept { return now_; }
  const std::deque<TransitionRecord>& history() const noexcept { return history_; }
  const std::map<std::string, std::uint64_t>& timer_deadlines() const noexcept { return deadlines_; }
  std::size_t pending_events() const noexcept { return queue_.size(); }

  /// Root-to-leaf configuration. The only inspection channel onto the
  /// machine's state; it never mutates the instance.
  std::vector<std::string> active_path() const {
    std::vector<std::string> out{std::string(kRoot)};
    out.insert(out.end(), configuration_.begin(), configuration_.end());
    return out;
  }

  const std::string& leaf() const { return configuration_.back(); }

  bool in(std::string_view state) const {
    return std::find(configuration_.begin(), configuration_.end(), state) != configuration_.end();
  }

  void enqueue(std::string event) { queue_.push_back(std::move(event)); }

  /// Queues `event` and processes the queue to quiescence.
  std::vector<TransitionRecord> dispatch(std::string event, MachineContext& context) {
    if (!context.alive()) throw DeathError("fsm: event '" + event + "' dispatched to a dead agent");
    queue_.push_back(std::move(event));
    return process(context);
  }

  /// Processes already-queued events (e.g. timer expiries) to quiescence.
  std::vector<TransitionRecord> process(MachineContext& context) {
    if (!context.alive()) throw DeathError("fsm: processing events of a dead agent");
    std::vector<TransitionRecord> fired;
    while (!queue_.empty()) {
      std::string event = std::move(queue_.front());
      queue_.pop_front();
      handle(event, context, fired);
      check_configuration();
    }
    return fired;
  }

  /// Fires every timer due at `now` (deadline <= now), in deadline order and
  /// then by name, and queues their expiry events.
  std::vector<std::string> tick_timers(std::uint64_t now) {
    if (now < now_) throw ArgumentError("fsm: clock moved backwards");
    now_ = now;
    std::vector<std::pair<std::uint64_t, std::string>> due;
    for (const auto& [name, deadline] : deadlines_) {
      if (deadline <= now) due.emplace_back(deadline, name);
    }
    std::sort(due.begin(), due.end());
    std::vector<std::string> events;
    for (const auto& [deadline, name] : due) {
      deadlines_.erase(name);
      events.push_back(expiry_event(name));
      queue_.push_back(events.back());
    }
    return events;
  }

 private:
  void handle(const std::string& event, MachineContext& context,
              std::vector<TransitionRecord>& fired) {
    const Transition* chosen = nullptr;
    for (auto state = configuration_.rbegin(); state != configuration_.rend() && !chosen; ++state) {
      for (const auto& t : machine_->transitions()) {
        if (t.source == *state && t.trigger == event && passes(t, context)) {
          chosen = &t;
          break;
        }
      }
    }
    if (chosen == nullptr) {
      log::debug("fsm: ignored event '", event, "' in state '", configuration_.back(), "'");
      return;
    }
    fire(*chosen, event, context, &fired);
    settle(context, event, &fired);
  }

  bool passes(const Transition& t, MachineContext& context) const {
    return t.guard.empty() || context.guard(t.guard);
  }

  // Takes completion transitions until the leaf is a stable (non-pseudo) state.
  void settle(MachineContext& context, const std::string& cause,
              std::vector<TransitionRecord>* fired) {
    for (;;) {
      const State& leaf_state = machine_->state(configuration_.back());
      if (leaf_state.kind == StateKind::composite) {
        enter_from(leaf_state.name, machine_->initial_of(leaf_state.name), context, nullptr);
        continue;
      }
      if (!leaf_state.pseudo()) return;
      const Transition* next = nullptr;
      for (const auto& t : machine_->transitions()) {
        if (t.source == leaf_state.name && t.completion() && passes(t, context)) {
          next = &t;
          break;
        }
      }
      if (next == nullptr)
        throw StateError("fsm: pseudostate '" + leaf_state.name + "' has no enabled completion");
      fire(*next, cause, context, fired);
    }
  }

  void fire(const Transition& t, const std::string& event, MachineContext& context,
            std::vector<TransitionRecord>* fired) {
    TransitionRecord record{now_, t.source, t.target, t.completion() ? "" : event, ""};
    std::string target = t.target;
    if (!t.decision_point.empty()) {
      record.chosen_path = context.decide(t.decision_point, t.branches);
      auto branch = std::find_if(t.branches.begin(), t.branches.end(),
                                 [&](const Branch& b) { return b.path == record.chosen_path; });
      if (branch == t.branches.end())
        throw StateError("fsm: decision '" + t.decision_point + "' chose unknown path '" +
                         record.chosen_path + "'");
      target = branch->target;
      record.target = target;
    }

    // Exit everything below the innermost composite containing both ends.
    const auto source_path = machine_->path_to(t.source);
    const auto target_path = machine_->path_to(target);
    std::size_t common = 0;
    while (common < source_path.size() && common < target_path.size() &&
           source_path[common] == target_path[common]) {
      ++common;
    }
    if (common == source_path.size() || common == target_path.size()) --common;  // self or nested
    const std::string& domain = source_path[common - 1];

    while (!configuration_.empty() && configuration_.back() != domain) {
      const State& leaving = machine_->state(configuration_.back());
      if (!leaving.timer.empty()) deadlines_.erase(leaving.timer);
      configuration_.pop_back();
    }
    if (!t.effect.empty()) context.effect(t.effect);
    enter_from(domain, target, context, nullptr);

    history_.push_back(record);
    while (history_.size() > history_capacity_) history_.pop_front();
    if (fired != nullptr) fired->push_back(std::move(record));
  }

  // Enters every state strictly below `domain` down to `target`.
  void enter_from(const std::string& domain, const std::string& target, MachineContext& context,
                  std::vector<TransitionRecord>*) {
    const auto path = machine_->path_to(target);
    auto start = std::find(path.begin(), path.end(), domain);
    for (auto it = start + 1; it != path.end(); ++it) {
      const State& s = machine_->state(*it);
      configuration_.push_back(s.name);
      if (!s.timer.empty()) deadlines_[s.timer] = now_ + machine_->timers().at(s.timer);
      if (!s.entry_action.empty()) context.on_entry(s.entry_action);
    }
  }

  void check_configuration() const {
    const auto expected = machine_->path_to(configuration_.back());
    if (active_path() != expected) throw StateError("fsm: configuration is not a root-to-leaf path");
    const State& leaf_state = machine_->state(configuration_.back());
    if (leaf_state.pseudo() || leaf_state.kind == StateKind::composite)
      throw StateError("fsm: run-to-completion left the machine in '" + leaf_state.name + "'");
  }

  std::shared_ptr<const StateMachine> machine_;
  std::vector<std::string> configuration_;
  std::deque<std::string> queue_;
  std::map<std::string, std::uint64_t> deadlines_;
  std::deque<TransitionRecord> history_;
  std::size_t history_capacity_;
  std::uint64_t now_ = 0;
};

// ---------------------------------------------------------------------------
// Declarative text form, in the same `key = value` family as experiment
// configs:
//
//   machine.initial = Initial
//   timer.waitTimer = 50
//   state.<name> = <simple|composite|initial|exit> [in <parent>] [timer <t>] [entry <action>]
//   transition.<n> = <source> -> <target> [on <event>] [when <guard>] [do <effect>]
//   transition.<n> = <source> -> choose <point> <path>:<target> ... [on ...] [when ...] [do ...]

inline std::string format_machine(const StateMachine& machine) {
  std::ostringstream out;
  out << "machine.initial = " << machine.initial() << '\n';
  for (const auto& [name, ticks] : machine.timers()) out << "timer." << name << " = " << ticks << '\n';
  for (const auto& s : machine.states()) {
    out << "state." << s.name << " = " << to_string(s.kind);
    if (!s.parent.empty()) out << " in " << s.parent;
    if (!s.timer.empty()) out << " timer " << s.timer;
    if (!s.entry_action.empty()) out << " entry " << s.entry_action;
    out << '\n';
  }
  std::size_t n = 0;
  for (const auto& t : machine.transitions()) {
    out << "transition." << ++n << " = " << t.source << " -> ";
    if (t.decision_point.empty()) {
      out << t.target;
    } else {
      out << "choose " << t.decision_point;
      for (const auto& b : t.branches) out << ' ' << b.path << ':' << b.target;
    }
    if (!t.trigger.empty()) out << " on " << t.trigger;
    if (!t.guard.empty()) out << " when " << t.guard;
    if (!t.effect.empty()) out << " do " << t.effect;
    out << '\n';
  }
  return out.str();
}

inline StateMachine parse_machine(std::string_view text, std::string_view origin = "<machine>") {
  const auto file = kv::parse(text, origin);
  StateMachine machine;
  std::vector<std::string> errors = file.errors;
  auto fail = [&](const kv::Entry& e, const std::string& msg) {
    errors.push_back(kv::where(origin, e.line) + msg);
  };
  // Transitions keep their numeric order regardless of file order.
  std::map<long, Transition> numbered;

  for (const auto& e : file.entries) {
    std::istringstream words(e.value);
    std::vector<std::string> w{std::istream_iterator<std::string>(words), {}};
    if (e.key == "machine.initial") {
      machine.set_initial(e.value);
    } else if (e.key.rfind("timer.", 0) == 0) {
      try {
        machine.add_timer(e.key.substr(6), std::stoull(e.value));
      } catch (const std::exception&) {
        fail(e, "timer duration must be a non-negative integer");
      }
    } else if (e.key.rfind("state.", 0) == 0) {
      State s;
      s.name = e.key.substr(6);
      if (w.empty()) {
        fail(e, "state kind missing");
        continue;
      }
      if (w[0] == "simple") s.kind = StateKind::simple;
      else if (w[0] == "composite") s.kind = StateKind::composite;
      else if (w[0] == "initial") s.kind = StateKind::initial;
      else if (w[0] == "exit") s.kind = StateKind::exit_point;
      else fail(e, "unknown state kind '" + w[0] + "'");
      for (std::size_t i = 1; i < w.size(); i += 2) {
        if (i + 1 >= w.size()) {
          fail(e, "dangling '" + w[i] + "'");
          break;
        }
        if (w[i] == "in") s.parent = w[i + 1];
        else if (w[i] == "timer") s.timer = w[i + 1];
        else if (w[i] == "entry") s.entry_action = w[i + 1];
        else fail(e, "unknown state attribute '" + w[i] + "'");
      }
      machine.add_state(std::move(s));
    } else if (e.key.rfind("transition.", 0) == 0) {
      long index = 0;
      try {
        index = std::stol(e.key.substr(11));
      } catch (const std::exception&) {
        fail(e, "transition keys must be numbered");
        continue;
      }
      Transition t;
      if (w.size() < 3 || w[1] != "->") {
        fail(e, "expected '<source> -> <target>'");
        continue;
      }
      t.source = w[0];
      std::size_t i = 2;
      if (w[2] == "choose") {
        if (w.size() < 4) {
          fail(e, "choose needs a decision point name");
          continue;
        }
        t.decision_point = w[3];
        for (i = 4; i < w.size() && w[i] != "on" && w[i] != "when" && w[i] != "do"; ++i) {
          const auto colon = w[i].find(':');
          if (colon == std::string::npos) {
            fail(e, "branch '" + w[i] + "' is not <path>:<target>");
            continue;
          }
          t.branches.push_back({w[i].substr(0, colon), w[i].substr(colon + 1)});
        }
      } else {
        t.target = w[2];
        i = 3;
      }
      for (; i < w.size(); i += 2) {
        if (i + 1 >= w.size()) {
          fail(e, "dangling '" + w[i] + "'");
          break;
        }
        if (w[i] == "on") t.trigger = w[i + 1];
        else if (w[i] == "when") t.guard = w[i + 1];
        else if (w[i] == "do") t.effect = w[i + 1];
        else fail(e, "unknown transition attribute '" + w[i] + "'");
      }
      if (!numbered.emplace(index, std::move(t)).second) fail(e, "duplicate transition number");
    } else {
      fail(e, "unknown key '" + e.key + "'");
    }
  }
  for (auto& [index, t] : numbered) machine.add_transition(std::move(t));
  if (!errors.empty()) throw ConfigError(std::move(errors));
  machine.validate();
  return machine;
}

}  // namespace asim::fsm
