#pragma once

// Action grammar shared by the harness, the trace archive and the simulator.
//
//   Action: click(<x>, <y>)           integer pixel coordinates
//   Action: type("<json string>")
//   Action: scroll(<up|down>[, <steps>])
//   Action: key(<name>[+<name>...])
//   Action: wait([<ms>])
//   Action: stop()
//   Action: score(<0-100>)            assessment turn only

#include <cctype>
#include <charconv>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "uxpipe/error.hpp"

namespace uxpipe {

enum class ScrollDirection { up, down };

struct Click {
  int x = 0, y = 0;
  friend bool operator==(const Click&, const Click&) = default;
};
struct TypeText {
  std::string text;
  friend bool operator==(const TypeText&, const TypeText&) = default;
};
struct Scroll {
  ScrollDirection direction = ScrollDirection::down;
  int amount = 1;
  friend bool operator==(const Scroll&, const Scroll&) = default;
};
struct KeyPress {
  std::vector<std::string> combo;
  friend bool operator==(const KeyPress&, const KeyPress&) = default;
};
struct Wait {
  int ms = 1000;
  friend bool operator==(const Wait&, const Wait&) = default;
};
struct Stop {
  friend bool operator==(const Stop&, const Stop&) = default;
};
struct Score {
  int value = 0;
  friend bool operator==(const Score&, const Score&) = default;
};

using Action = std::variant<Click, TypeText, Scroll, KeyPress, Wait, Stop, Score>;

class ActionParseError : public DataError {
 public:
  enum class Reason { missing, unknown_action, malformed_arguments, out_of_bounds };
  ActionParseError(Reason reason, const std::string& what)
      : DataError(what), reason_(reason) {}
  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

namespace action_detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::optional<int> to_int(std::string_view s) {
  s = trim(s);
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split_args(std::string_view s) {
  std::vector<std::string_view> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == ',') {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

[[noreturn]] inline void malformed(std::string_view line) {
  throw ActionParseError(ActionParseError::Reason::malformed_arguments,
                         "malformed action arguments: " + std::string(line));
}

}  // namespace action_detail

inline std::string format_action(const Action& action) {
  struct Formatter {
    std::string operator()(const Click& a) const {
      return "click(" + std::to_string(a.x) + ", " + std::to_string(a.y) + ")";
    }
    std::string operator()(const TypeText& a) const {
      return "type(" + nlohmann::json(a.text).dump() + ")";
    }
    std::string operator()(const Scroll& a) const {
      return std::string("scroll(") + (a.direction == ScrollDirection::up ? "up" : "down") +
             ", " + std::to_string(a.amount) + ")";
    }
    std::string operator()(const KeyPress& a) const {
      std::string s = "key(";
      for (std::size_t i = 0; i < a.combo.size(); ++i) s += (i ? "+" : "") + a.combo[i];
      return s + ")";
    }
    std::string operator()(const Wait& a) const { return "wait(" + std::to_string(a.ms) + ")"; }
    std::string operator()(const Stop&) const { return "stop()"; }
    std::string operator()(const Score& a) const {
      return "score(" + std::to_string(a.value) + ")";
    }
  };
  return "Action: " + std::visit(Formatter{}, action);
}

struct ScreenBounds {
  int width = 0, height = 0;
};

// Parses one action line ("Action: name(args)").
inline Action parse_action_line(std::string_view raw,
                                std::optional<ScreenBounds> bounds = std::nullopt) {
  using namespace action_detail;
  using R = ActionParseError::Reason;
  std::string_view line = trim(raw);
  constexpr std::string_view kPrefix = "Action:";
  if (line.substr(0, kPrefix.size()) != kPrefix)
    throw ActionParseError(R::missing, "not an action line: " + std::string(line));
  line = trim(line.substr(kPrefix.size()));

  const auto open = line.find('(');
  if (open == std::string_view::npos || line.back() != ')') malformed(raw);
  const std::string_view name = trim(line.substr(0, open));
  const std::string_view body = line.substr(open + 1, line.size() - open - 2);

  if (name == "click") {
    const auto args = split_args(body);
    if (args.size() != 2) malformed(raw);
    const auto x = to_int(args[0]), y = to_int(args[1]);
    if (!x || !y) malformed(raw);
    if (bounds && (*x < 0 || *y < 0 || *x >= bounds->width || *y >= bounds->height))
      throw ActionParseError(R::out_of_bounds,
                             "click outside the screenshot: " + std::string(line));
    return Click{*x, *y};
  }
  if (name == "type") {
    const auto arg = trim(body);
    if (arg.size() < 2 || arg.front() != '"') malformed(raw);
    try {
      auto j = nlohmann::json::parse(arg);
      if (!j.is_string()) malformed(raw);
      return TypeText{j.get<std::string>()};
    } catch (const nlohmann::json::exception&) {
      malformed(raw);
    }
  }
  if (name == "scroll") {
    const auto args = split_args(body);
    if (args.empty() || args.size() > 2) malformed(raw);
    Scroll s;
    if (args[0] == "up") s.direction = ScrollDirection::up;
    else if (args[0] == "down") s.direction = ScrollDirection::down;
    else malformed(raw);
    if (args.size() == 2) {
      const auto n = to_int(args[1]);
      if (!n || *n < 1) malformed(raw);
      s.amount = *n;
    }
    return s;
  }
  if (name == "key") {
    KeyPress k;
    const auto combo = trim(body);
    if (combo.empty()) malformed(raw);
    std::size_t start = 0;
    for (std::size_t i = 0; i <= combo.size(); ++i) {
      if (i == combo.size() || combo[i] == '+') {
        const auto part = trim(combo.substr(start, i - start));
        if (part.empty()) malformed(raw);
        std::string key(part);
        for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        k.combo.push_back(std::move(key));
        start = i + 1;
      }
    }
    return k;
  }
  if (name == "wait") {
    if (trim(body).empty()) return Wait{};
    const auto ms = to_int(body);
    if (!ms || *ms < 0) malformed(raw);
    return Wait{*ms};
  }
  if (name == "stop") {
    if (!trim(body).empty()) malformed(raw);
    return Stop{};
  }
  if (name == "score") {
    const auto n = to_int(body);
    if (!n || *n < 0 || *n > 100) malformed(raw);
    return Score{*n};
  }
  throw ActionParseError(R::unknown_action, "unknown action: " + std::string(name));
}

// A parsed action together with the verbatim line it came from.
struct ActionRecord {
  Action action;
  std::string raw_text;

  ActionRecord() : action(Stop{}), raw_text(format_action(Stop{})) {}
  explicit ActionRecord(Action a) : action(std::move(a)), raw_text(format_action(action)) {}
  ActionRecord(Action a, std::string raw) : action(std::move(a)), raw_text(std::move(raw)) {}

  static ActionRecord parse(std::string_view line,
                            std::optional<ScreenBounds> bounds = std::nullopt) {
    return {parse_action_line(line, bounds), std::string(action_detail::trim(line))};
  }

  template <class T>
  bool is() const noexcept {
    return std::holds_alternative<T>(action);
  }

  friend bool operator==(const ActionRecord&, const ActionRecord&) = default;
};

struct PolicyOutput {
  std::string thought;
  ActionRecord action;
};

// Splits a policy response into thought and action. The action is the last
// line that starts with "Action:"; everything before it is the thought, with
// a leading "Thought:" label removed.
inline PolicyOutput parse_policy_output(std::string_view text,
                                        std::optional<ScreenBounds> bounds = std::nullopt) {
  using action_detail::trim;
  std::size_t line_start = std::string_view::npos;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    if (trim(text.substr(pos, end - pos)).substr(0, 7) == "Action:") line_start = pos;
    if (end == text.size()) break;
    pos = end + 1;
  }
  if (line_start == std::string_view::npos)
    throw ActionParseError(ActionParseError::Reason::missing, "no action line in policy output");
  const auto line_end = std::min(text.find('\n', line_start), text.size());
  PolicyOutput out;
  out.action = ActionRecord::parse(text.substr(line_start, line_end - line_start), bounds);
  auto thought = trim(text.substr(0, line_start));
  if (thought.substr(0, 8) == "Thought:") thought = trim(thought.substr(8));
  out.thought = std::string(thought);
  return out;
}

}  // namespace uxpipe
