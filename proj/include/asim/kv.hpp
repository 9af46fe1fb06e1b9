#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

// Line-oriented `key = value` text shared by experiment configs and machine
// definitions. Blank lines and lines starting with '#' are skipped.
namespace asim::kv {

struct Entry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct File {
  std::vector<Entry> entries;
  std::vector<std::string> errors;  // already positioned
};

inline std::string where(std::string_view origin, std::size_t line) {
  return std::string(origin) + ":" + std::to_string(line) + ": ";
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline File parse(std::string_view text, std::string_view origin) {
  File file;
  std::map<std::string, std::size_t, std::less<>> first_line;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      file.errors.push_back(where(origin, line_no) + "malformed line, expected 'key = value'");
      continue;
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) {
      file.errors.push_back(where(origin, line_no) + "missing key before '='");
      continue;
    }
    if (auto it = first_line.find(key); it != first_line.end()) {
      file.errors.push_back(where(origin, line_no) + "duplicate key '" + std::string(key) +
                            "' (first defined on line " + std::to_string(it->second) + ")");
      continue;
    }
    first_line.emplace(std::string(key), line_no);
    file.entries.push_back({std::string(key), std::string(value), line_no});
  }
  return file;
}

}  // namespace asim::kv
