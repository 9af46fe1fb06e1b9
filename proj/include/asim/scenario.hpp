#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// Scenario coding: a small narrative notation compiled into decision graphs.
// The grammar is described in docs/scenario-grammar.md.
namespace asim::scenario {

struct Position {
  std::size_t line = 1;
  std::size_t column = 1;
  friend bool operator==(const Position&, const Position&) = default;
};

struct Diagnostic {
  enum class Severity { error, warning };
  Severity severity = Severity::error;
  std::string message;
  Position at;
};

inline std::string format(const Diagnostic& d, std::string_view origin) {
  std::ostringstream out;
  out << origin << ':' << d.at.line << ':' << d.at.column << ": "
      << (d.severity == Diagnostic::Severity::error ? "error" : "warning") << ": " << d.message;
  return out.str();
}

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<Diagnostic> diagnostics)
      : std::runtime_error(diagnostics.empty() ? "scenario error" : diagnostics.front().message),
        diagnostics_(std::move(diagnostics)) {}
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

// ---------------------------------------------------------------- tokens

enum class TokenKind { me, quoted, alternative, bracket, header, word, punct };

struct Token {
  TokenKind kind;
  std::string text;                       // normalized content (no delimiters)
  std::vector<std::string> alternatives;  // for `alternative`
  Position at;
  bool line_start = false;  // first token on its source line
};

namespace detail {

inline bool word_byte(unsigned char c) {
  return std::isalnum(c) || c == '_' || c == '-' || c >= 0x80;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string normalize_space(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      pending = !out.empty();
      continue;
    }
    if (pending) out += ' ';
    pending = false;
    out += c;
  }
  return out;
}

inline std::vector<std::string> split_alternatives(const std::string& s) {
  std::vector<std::string> parts;
  std::string current;
  for (char c : s) {
    if (c == '|') {
      parts.push_back(normalize_space(current));
      current.clear();
    } else {
      current += c;
    }
  }
  parts.push_back(normalize_space(current));
  return parts;
}

inline constexpr std::array<std::string_view, 3> kHeaders{"Synopsis", "Scenario", "Explicate"};

}  // namespace detail

/// Splits `text` into tokens. Throws ScenarioError listing every lexical
/// error (empty source, unterminated quote or bracket, control bytes).
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::vector<Diagnostic> errors;
  if (text.empty()) throw ScenarioError({{Diagnostic::Severity::error, "empty source", {1, 1}}});

  std::size_t i = 0, line = 1, col = 1, token_line = 0;
  auto advance = [&] {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++i;
  };
  auto byte = [&](std::size_t k) -> unsigned char { return k < text.size() ? static_cast<unsigned char>(text[k]) : 0; };
  auto push = [&](Token t) {
    t.line_start = t.at.line != token_line;
    token_line = t.at.line;
    tokens.push_back(std::move(t));
  };

  while (i < text.size()) {
    const unsigned char c = byte(i);
    const Position at{line, col};
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      advance();
      continue;
    }
    if (c < 0x20 || c == 0x7f) {
      std::ostringstream msg;
      msg << "unexpected control byte 0x" << std::hex << static_cast<int>(c);
      errors.push_back({Diagnostic::Severity::error, msg.str(), at});
      advance();
      continue;
    }
    if (c == '\'') {
      advance();
      std::string body;
      bool closed = false;
      while (i < text.size()) {
        // An apostrophe between word characters belongs to the term.
        if (text[i] == '\'' && !(i > 0 && detail::word_byte(byte(i - 1)) && detail::word_byte(byte(i + 1)))) {
          advance();
          closed = true;
          break;
        }
        body += text[i];
        advance();
      }
      if (!closed) {
        errors.push_back({Diagnostic::Severity::error, "unterminated quoted term", at});
        break;
      }
      std::string norm = detail::normalize_space(body);
      if (norm.empty()) {
        errors.push_back({Diagnostic::Severity::error, "empty quoted term", at});
        continue;
      }
      Token t{TokenKind::quoted, norm, {}, at};
      if (norm.find('|') != std::string::npos) {
        t.kind = TokenKind::alternative;
        t.alternatives = detail::split_alternatives(norm);
        if (std::any_of(t.alternatives.begin(), t.alternatives.end(), [](const auto& a) { return a.empty(); }))
          errors.push_back({Diagnostic::Severity::error, "empty alternative in '" + norm + "'", at});
      }
      push(std::move(t));
      continue;
    }
    if (c == '[') {
      advance();
      std::string body;
      bool closed = false;
      while (i < text.size()) {
        if (text[i] == ']') {
          advance();
          closed = true;
          break;
        }
        body += text[i];
        advance();
      }
      if (!closed) {
        errors.push_back({Diagnostic::Severity::error, "unterminated bracket term", at});
        break;
      }
      std::string norm = detail::normalize_space(body);
      if (norm.empty()) {
        errors.push_back({Diagnostic::Severity::error, "empty bracket term", at});
        continue;
      }
      push({TokenKind::bracket, std::move(norm), {}, at});
      continue;
    }
    if (detail::word_byte(c)) {
      std::string word;
      while (i < text.size() &&
             (detail::word_byte(byte(i)) ||
              (byte(i) == '\'' && detail::word_byte(byte(i + 1)) && !word.empty()))) {
        word += text[i];
        advance();
      }
      const bool first_on_line = at.line != token_line;
      if (first_on_line && byte(i) == ':' &&
          std::find(detail::kHeaders.begin(), detail::kHeaders.end(), word) != detail::kHeaders.end()) {
        advance();
        push({TokenKind::header, std::move(word), {}, at});
      } else if (word == "ME") {
        push({TokenKind::me, std::move(word), {}, at});
      } else {
        push({TokenKind::word, std::move(word), {}, at});
      }
      continue;
    }
    push({TokenKind::punct, std::string(1, static_cast<char>(c)), {}, at});
    advance();
  }
  if (!errors.empty()) throw ScenarioError(std::move(errors));
  return tokens;
}

// ---------------------------------------------------------------- AST

enum class Verb { awake, think, search, find, see, decide };

inline std::string_view to_string(Verb v) {
  switch (v) {
    case Verb::awake: return "awake";
    case Verb::think: return "think";
    case Verb::search: return "search";
    case Verb::find: return "find";
    case Verb::see: return "see";
    case Verb::decide: return "decide";
  }
  return "?";
}

// A decision either commits to an outcome or only contemplates one (a yes/no
// question such as "do I have to make a decision?").
enum class DecideMode { commit, contemplate };

struct Statement {
  std::vector<Verb> verbs;  // in order of appearance, without repeats
  Verb kind;                // decide > think > first verb
  DecideMode mode = DecideMode::commit;
  std::string text;
  std::vector<std::string> terms;  // quoted terms, as written
  Position at;
};

struct Object {
  std::string name;
  std::string side;  // "left", "right" or empty
  std::vector<std::string> attributes;
  Position at;
};

struct Ast {
  std::string synopsis;
  std::vector<Statement> statements;
  std::vector<Object> objects;
  std::vector<std::string> moves;
  std::vector<std::vector<std::string>> alternatives;
  std::vector<std::string> facilities;
  std::map<std::string, std::string> explications;  // lowercased term -> gloss
  std::size_t degrees_of_freedom = 0;
  std::vector<Diagnostic> warnings;
};

namespace detail {

inline const std::map<std::string, Verb>& verb_words() {
  static const std::map<std::string, Verb> words{
      {"awake", Verb::awake},   {"think", Verb::think},     {"search", Verb::search},
      {"find", Verb::find},     {"see", Verb::see},         {"decide", Verb::decide},
      {"decision", Verb::decide}, {"choose", Verb::decide}};
  return words;
}

inline const std::map<std::string, int>& number_words() {
  static const std::map<std::string, int> words{
      {"zero", 0}, {"one", 1}, {"two", 2},   {"three", 3}, {"four", 4}, {"five", 5},
      {"six", 6},  {"seven", 7}, {"eight", 8}, {"nine", 9}, {"ten", 10}};
  return words;
}

inline bool is_color(const std::string& w) {
  static const std::set<std::string> colors{"red",    "blue",  "green", "yellow", "white", "black",
                                            "orange", "purple", "grey", "gray",   "brown", "pink"};
  return colors.count(w) > 0;
}

inline bool is_auxiliary(const std::string& w) {
  static const std::set<std::string> aux{"do",    "does",   "did",   "is",   "are",  "am",    "was",
                                         "were",  "can",    "could", "should", "shall", "will", "would",
                                         "may",   "might",  "must",  "have", "has"};
  return aux.count(w) > 0;
}

inline bool is_filler(const std::string& w) {
  static const std::set<std::string> filler{"and", "or", "but", "so", "then", "a", "an", "the", "is", "to"};
  return filler.count(w) > 0;
}

inline std::string join_tokens(const std::vector<const Token*>& tokens) {
  std::string out;
  for (const Token* t : tokens) {
    std::string piece;
    switch (t->kind) {
      case TokenKind::quoted:
      case TokenKind::alternative: piece = "'" + t->text + "'"; break;
      case TokenKind::bracket: piece = "[" + t->text + "]"; break;
      default: piece = t->text;
    }
    const bool glue = t->kind == TokenKind::punct && std::string_view(".,;:?!)").find(t->text[0]) != std::string_view::npos;
    if (!out.empty() && !glue && out.back() != '(') out += ' ';
    out += piece;
  }
  return out;
}

}  // namespace detail

/// Builds the AST from tokens. Throws ScenarioError carrying every error.
inline Ast parse(const std::vector<Token>& tokens) {
  using detail::lower;
  Ast ast;
  std::vector<Diagnostic> errors;

  // Partition into sections.
  std::map<std::string, std::vector<const Token*>> sections;
  std::map<std::string, Position> header_at;
  std::string current;
  bool any_header = false;
  std::vector<const Token*> loose;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::header) {
      any_header = true;
      if (header_at.count(t.text)) {
        errors.push_back({Diagnostic::Severity::error, "duplicate section '" + t.text + "'", t.at});
      } else {
        header_at[t.text] = t.at;
      }
      current = t.text;
      sections[current];
      continue;
    }
    if (current.empty()) {
      loose.push_back(&t);
    } else {
      sections[current].push_back(&t);
    }
  }
  if (!any_header) {
    sections["Scenario"] = loose;
  } else if (!loose.empty()) {
    ast.warnings.push_back({Diagnostic::Severity::warning, "text before the first section is ignored", loose.front()->at});
  }
  if (!sections.count("Scenario")) {
    const Position at = tokens.empty() ? Position{} : tokens.front().at;
    errors.push_back({Diagnostic::Severity::error, "missing Scenario section", at});
    throw ScenarioError(std::move(errors));
  }
  ast.synopsis = detail::join_tokens(sections["Synopsis"]);

  // Explications: entries start with a quoted or bracket term at line start.
  {
    std::string key;
    std::vector<const Token*> gloss;
    Position key_at;
    auto flush = [&] {
      if (key.empty()) return;
      if (ast.explications.count(key))
        errors.push_back({Diagnostic::Severity::error, "duplicate explication for '" + key + "'", key_at});
      ast.explications[key] = detail::join_tokens(gloss);
      key.clear();
      gloss.clear();
    };
    for (const Token* t : sections["Explicate"]) {
      const bool term = t->kind == TokenKind::quoted || t->kind == TokenKind::alternative || t->kind == TokenKind::bracket;
      if (term && t->line_start) {
        flush();
        key = lower(t->kind == TokenKind::bracket ? "[" + t->text + "]" : t->text);
        key_at = t->at;
        continue;
      }
      if (key.empty()) {
        errors.push_back({Diagnostic::Severity::error, "explication must start with a quoted or bracket term", t->at});
        key = "\x01";  // swallow the rest of this entry
        key_at = t->at;
      }
      gloss.push_back(t);
    }
    flush();
    ast.explications.erase("\x01");
  }

  // Sentences of the Scenario section.
  std::vector<std::vector<const Token*>> sentences(1);
  for (const Token* t : sections["Scenario"]) {
    sentences.back().push_back(t);
    if (t->kind == TokenKind::punct && (t->text == "." || t->text == "?" || t->text == "!")) sentences.emplace_back();
  }
  if (sentences.back().empty()) sentences.pop_back();

  std::vector<std::pair<std::string, Position>> referenced_moves;
  std::set<std::string> declared_moves;
  for (const auto& sentence : sentences) {
    // Verbs, bound by plain words and by quoted terms alike.
    Statement st{};
    for (const Token* t : sentence) {
      if (t->kind != TokenKind::word && t->kind != TokenKind::quoted) continue;
      auto it = detail::verb_words().find(lower(t->text));
      if (it == detail::verb_words().end()) continue;
      if (std::find(st.verbs.begin(), st.verbs.end(), it->second) == st.verbs.end()) st.verbs.push_back(it->second);
    }

    // Moves, alternatives and facilities.
    for (std::size_t k = 0; k < sentence.size(); ++k) {
      const Token* t = sentence[k];
      if (t->kind == TokenKind::word && lower(t->text) == "move") {
        const Token* next = k + 1 < sentence.size() ? sentence[k + 1] : nullptr;
        if (!next || next->kind != TokenKind::word) {
          errors.push_back({Diagnostic::Severity::error, "expected a move name after 'move'", t->at});
          continue;
        }
        if (declared_moves.insert(next->text).second) ast.moves.push_back(next->text);
        ++k;
      } else if (t->kind == TokenKind::alternative) {
        ast.alternatives.push_back(t->alternatives);
        for (const auto& a : t->alternatives) referenced_moves.emplace_back(a, t->at);
      } else if ((t->kind == TokenKind::word || t->kind == TokenKind::quoted) && lower(t->text) == "facilities") {
        for (std::size_t j = k + 1; j < sentence.size(); ++j) {
          const Token* f = sentence[j];
          if (f->kind != TokenKind::word || detail::is_filler(lower(f->text))) continue;
          if (std::find(ast.facilities.begin(), ast.facilities.end(), f->text) == ast.facilities.end())
            ast.facilities.push_back(f->text);
        }
        break;
      }
    }

    // Objects: "<color> <noun>" phrases, or "<count> objects".
    std::string side;
    std::vector<std::string> sides_after;
    std::vector<Object> found;
    std::size_t counted = 0;
    Position counted_at;
    for (std::size_t k = 0; k < sentence.size(); ++k) {
      const Token* t = sentence[k];
      if (t->kind == TokenKind::quoted && !found.empty()) {
        found.back().attributes.push_back(t->text);
        continue;
      }
      if (t->kind != TokenKind::word) continue;
      const std::string w = lower(t->text);
      if (w == "left" || w == "right") {
        side = w;
        sides_after.push_back(w);
        continue;
      }
      const Token* next = k + 1 < sentence.size() ? sentence[k + 1] : nullptr;
      if (detail::is_color(w) && next && next->kind == TokenKind::word) {
        const std::string noun = lower(next->text);
        if (!detail::is_color(noun) && !detail::is_filler(noun) && !detail::verb_words().count(noun)) {
          found.push_back({w + " " + noun, side, {}, t->at});
          side.clear();
          ++k;
          continue;
        }
      }
      if (next && next->kind == TokenKind::word && lower(next->text) == "objects" && counted == 0) {
        auto n = detail::number_words().find(w);
        if (n != detail::number_words().end() && n->second > 0) {
          counted = static_cast<std::size_t>(n->second);
          counted_at = t->at;
          sides_after.clear();
          ++k;
        }
      }
    }
    if (counted > 0 && found.empty()) {
      for (std::size_t n = 0; n < counted; ++n) {
        found.push_back({"object " + std::to_string(ast.objects.size() + n + 1),
                         n < sides_after.size() ? sides_after[n] : std::string(), {}, counted_at});
      }
    }
    ast.objects.insert(ast.objects.end(), found.begin(), found.end());

    // Degrees of freedom: enumerated number words inside quoted terms.
    for (const Token* t : sentence) {
      if (t->kind != TokenKind::quoted) continue;
      std::string word;
      auto count_word = [&] {
        if (!word.empty() && detail::number_words().count(lower(word))) ++ast.degrees_of_freedom;
        word.clear();
      };
      for (char c : t->text) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
          word += c;
        } else {
          count_word();
        }
      }
      count_word();
    }

    if (st.verbs.empty()) continue;  // narrative filler
    const bool decides = std::find(st.verbs.begin(), st.verbs.end(), Verb::decide) != st.verbs.end();
    const bool thinks = std::find(st.verbs.begin(), st.verbs.end(), Verb::think) != st.verbs.end();
    st.kind = decides ? Verb::decide : thinks ? Verb::think : st.verbs.front();
    st.at = sentence.front()->at;
    st.text = detail::join_tokens(sentence);
    if (decides) {
      std::size_t k = 0;
      while (k < sentence.size() &&
             (sentence[k]->kind == TokenKind::me ||
              (sentence[k]->kind == TokenKind::word &&
               (lower(sentence[k]->text) == "and" || lower(sentence[k]->text) == "so" || lower(sentence[k]->text) == "but"))))
        ++k;
      const bool polar = k < sentence.size() && sentence[k]->kind == TokenKind::word &&
                         detail::is_auxiliary(lower(sentence[k]->text)) && sentence.back()->text == "?";
      st.mode = polar ? DecideMode::contemplate : DecideMode::commit;
    }
    for (const Token* t : sentence) {
      if (t->kind != TokenKind::quoted && t->kind != TokenKind::alternative) continue;
      st.terms.push_back(t->text);
      if (!ast.explications.count(lower(t->text)))
        errors.push_back({Diagnostic::Severity::error, "unexplicated term: " + t->text, t->at});
    }
    ast.statements.push_back(std::move(st));
  }
  for (const auto& [move, at] : referenced_moves) {
    if (!declared_moves.count(move))
      errors.push_back({Diagnostic::Severity::error, "undeclared move: " + move, at});
  }
  if (!errors.empty()) throw ScenarioError(std::move(errors));
  return ast;
}

// ---------------------------------------------------------------- graph

enum class NodeKind { entry, logic, output };

inline std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::entry: return "entry";
    case NodeKind::logic: return "logic";
    case NodeKind::output: return "output";
  }
  return "?";
}

struct Node {
  std::size_t id = 0;
  NodeKind kind = NodeKind::logic;
  std::string label;
  friend bool operator==(const Node&, const Node&) = default;
};

struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
  std::string label;
  std::string table;  // weight-table reference, empty for none
  friend bool operator==(const Edge&, const Edge&) = default;
};

struct DecisionGraph {
  std::vector<Node> nodes;
  std::vector<Edge> edges;

  std::optional<std::size_t> output() const {
    for (const auto& n : nodes) {
      if (n.kind == NodeKind::output) return n.id;
    }
    return std::nullopt;
  }
  friend bool operator==(const DecisionGraph&, const DecisionGraph&) = default;
};

/// Structural checks: ids are 0..n-1 in order, node 0 is the only entry,
/// edges reference existing nodes, and every node is reachable from 0.
inline std::vector<std::string> check(const DecisionGraph& g) {
  std::vector<std::string> errors;
  if (g.nodes.empty()) return {"graph has no nodes"};
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (g.nodes[i].id != i) errors.push_back("node " + std::to_string(g.nodes[i].id) + " out of order");
    if ((g.nodes[i].kind == NodeKind::entry) != (i == 0))
      errors.push_back("node " + std::to_string(i) + ": exactly node 0 must be the entry");
  }
  std::vector<std::vector<std::size_t>> out(g.nodes.size());
  for (const auto& e : g.edges) {
    if (e.from >= g.nodes.size() || e.to >= g.nodes.size()) {
      errors.push_back("edge " + std::to_string(e.from) + " -> " + std::to_string(e.to) + " references a missing node");
      continue;
    }
    out[e.from].push_back(e.to);
  }
  std::vector<bool> seen(g.nodes.size(), false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    for (auto m : out[n]) {
      if (!seen[m]) {
        seen[m] = true;
        stack.push_back(m);
      }
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) errors.push_back("node " + std::to_string(i) + " is unreachable from the entry");
  }
  return errors;
}

/// Entry node 0 records observations. Each think or decide statement gets a
/// logic node, chained in order; observed objects are edges from the entry to
/// the first logic node, backed by the "preference" weight table. A final
/// committed decision adds an output node.
inline DecisionGraph compile(const Ast& ast) {
  if (ast.statements.empty())
    throw ScenarioError({{Diagnostic::Severity::error, "scenario has no statements", {1, 1}}});
  DecisionGraph g;
  g.nodes.push_back({0, NodeKind::entry, "ME"});
  std::vector<const Statement*> logic;
  for (const auto& s : ast.statements) {
    if (s.kind == Verb::think || s.kind == Verb::decide) logic.push_back(&s);
  }
  if (logic.empty()) logic.push_back(&ast.statements.back());
  for (const Statement* s : logic) {
    std::string label(to_string(s->kind));
    if (s->kind == Verb::decide && s->mode == DecideMode::contemplate) label += "?";
    g.nodes.push_back({g.nodes.size(), NodeKind::logic, label});
  }
  if (ast.objects.empty()) {
    g.edges.push_back({0, 1, "next", ""});
  } else {
    for (const auto& o : ast.objects) {
      std::string label = o.name;
      if (!o.side.empty()) label += " (" + o.side + ")";
      g.edges.push_back({0, 1, label, "preference"});
    }
  }
  for (std::size_t i = 1; i + 1 < g.nodes.size(); ++i) g.edges.push_back({i, i + 1, "next", ""});
  const Statement& final = ast.statements.back();
  if (final.kind == Verb::decide && final.mode == DecideMode::commit) {
    const std::size_t id = g.nodes.size();
    g.nodes.push_back({id, NodeKind::output, "manifest"});
    g.edges.push_back({id - 1, id, "output", ""});
  }
  return g;
}

namespace detail {

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

/// Canonical text form, one line per node then one per edge:
///   graph v1
///   node <id> <entry|logic|output> "<label>"
///   edge <from> <to> "<label>" [table=<name>]
inline std::string render(const DecisionGraph& g) {
  std::string out = "graph v1\n";
  for (const auto& n : g.nodes) {
    out += "node " + std::to_string(n.id) + " " + std::string(to_string(n.kind)) + " " + detail::quote(n.label) + "\n";
  }
  for (const auto& e : g.edges) {
    out += "edge " + std::to_string(e.from) + " " + std::to_string(e.to) + " " + detail::quote(e.label);
    if (!e.table.empty()) out += " table=" + e.table;
    out += "\n";
  }
  return out;
}

/// Inverse of render. Throws ScenarioError with positioned diagnostics.
inline DecisionGraph parse_graph(std::string_view text) {
  DecisionGraph g;
  std::vector<Diagnostic> errors;
  std::size_t line_no = 0;
  bool header = false;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.empty()) continue;
    std::size_t p = 0;
    auto fail = [&](const std::string& message) {
      errors.push_back({Diagnostic::Severity::error, message, {line_no, p + 1}});
    };
    auto skip_space = [&] {
      while (p < line.size() && line[p] == ' ') ++p;
    };
    auto word = [&] {
      skip_space();
      const auto start = p;
      while (p < line.size() && line[p] != ' ') ++p;
      return std::string(line.substr(start, p - start));
    };
    auto number = [&]() -> std::optional<std::size_t> {
      skip_space();
      const auto start = p;
      const std::string w = word();
      if (w.empty() || w.size() > 9 || !std::all_of(w.begin(), w.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        p = start;
        return std::nullopt;
      }
      return static_cast<std::size_t>(std::stoul(w));
    };
    auto quoted = [&]() -> std::optional<std::string> {
      skip_space();
      if (p >= line.size() || line[p] != '"') return std::nullopt;
      ++p;
      std::string out;
      while (p < line.size() && line[p] != '"') {
        if (line[p] == '\\' && p + 1 < line.size()) {
          ++p;
          out += line[p] == 'n' ? '\n' : line[p];
        } else {
          out += line[p];
        }
        ++p;
      }
      if (p >= line.size()) return std::nullopt;
      ++p;
      return out;
    };

    const std::string keyword = word();
    if (!header) {
      if (keyword != "graph" || word() != "v1") {
        p = 0;
        fail("expected 'graph v1' header");
        break;
      }
      header = true;
      continue;
    }
    if (keyword == "node") {
      auto id = number();
      if (!id) { fail("expected node id"); continue; }
      const std::string kind = word();
      NodeKind k;
      if (kind == "entry") k = NodeKind::entry;
      else if (kind == "logic") k = NodeKind::logic;
      else if (kind == "output") k = NodeKind::output;
      else { fail("unknown node kind '" + kind + "'"); continue; }
      auto label = quoted();
      if (!label) { fail("expected quoted label"); continue; }
      g.nodes.push_back({*id, k, *label});
    } else if (keyword == "edge") {
      auto from = number();
      auto to = from ? number() : std::nullopt;
      if (!from || !to) { fail("expected edge endpoints"); continue; }
      auto label = quoted();
      if (!label) { fail("expected quoted label"); continue; }
      std::string table;
      skip_space();
      if (p < line.size()) {
        const std::string rest = word();
        if (rest.rfind("table=", 0) != 0 || rest.size() == 6) { fail("expected table=<name>"); continue; }
        table = rest.substr(6);
      }
      g.edges.push_back({*from, *to, *label, table});
    } else {
      p = 0;
      fail("unknown line kind '" + keyword + "'");
      continue;
    }
    skip_space();
    if (p < line.size()) fail("trailing text");
  }
  if (!header && errors.empty()) errors.push_back({Diagnostic::Severity::error, "expected 'graph v1' header", {1, 1}});
  if (errors.empty()) {
    for (const auto& m : check(g)) errors.push_back({Diagnostic::Severity::error, m, {line_no, 1}});
  }
  if (!errors.empty()) throw ScenarioError(std::move(errors));
  return g;
}

/// tokenize, parse and compile in one go.
inline DecisionGraph compile_text(std::string_view text) { return compile(parse(tokenize(text))); }

}  // namespace asim::scenario
