#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace asim {

// Invalid configuration or definition (bad key, unknown action kind, duplicate id).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& message)
      : std::runtime_error(message), messages_{message} {}

  explicit ConfigError(std::vector<std::string> messages)
      : std::runtime_error(join(messages)), messages_(std::move(messages)) {}

  const std::vector<std::string>& messages() const noexcept { return messages_; }

 private:
  static std::string join(const std::vector<std::string>& messages) {
    std::string out;
    for (const auto& m : messages) {
      if (!out.empty()) out += '\n';
      out += m;
    }
    return out;
  }

  std::vector<std::string> messages_;
};

// Operation requested against state that cannot honor it (empty table, unknown path).
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Argument outside its domain (negative rate, clock regression).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation attempted on an agent that has already died.
class DeathError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace asim
