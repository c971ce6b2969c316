#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "uxpipe/action.hpp"
#include "uxpipe/error.hpp"
#include "uxpipe/image.hpp"

namespace uxpipe {

inline constexpr int kDefaultBudget = 50;

// One policy step. The observation is the screenshot the policy saw before
// acting.
struct Step {
  int index = 0;  // 1-based
  Screenshot observation;
  std::string thought;
  ActionRecord action;

  friend bool operator==(const Step&, const Step&) = default;
};

struct Assessment {
  std::string issues_text;
  std::optional<int> predicted_score;

  friend bool operator==(const Assessment&, const Assessment&) = default;
};

enum class Termination { stopped, budget_exhausted, environment_error };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::stopped: return "stopped";
    case Termination::budget_exhausted: return "budget_exhausted";
    case Termination::environment_error: return "environment_error";
  }
  return "?";
}

inline Termination termination_from_string(std::string_view s) {
  if (s == "stopped") return Termination::stopped;
  if (s == "budget_exhausted") return Termination::budget_exhausted;
  if (s == "environment_error") return Termination::environment_error;
  throw DataError("unknown termination: " + std::string(s));
}

struct Rollout {
  std::string rollout_id;
  std::string site_id;
  std::string goal;
  int budget = kDefaultBudget;
  std::vector<Step> steps;
  std::optional<Assessment> assessment;
  std::optional<Termination> termination;  // empty while recording

  bool terminated() const noexcept { return termination.has_value(); }

  friend bool operator==(const Rollout&, const Rollout&) = default;
};

inline void append_step(Rollout& rollout, Step step) {
  if (rollout.terminated())
    throw DataError("cannot append to terminated rollout " + rollout.rollout_id);
  const int expected = static_cast<int>(rollout.steps.size()) + 1;
  if (step.index != expected)
    throw DataError("out-of-order step index " + std::to_string(step.index) + ", expected " +
                    std::to_string(expected));
  if (expected > rollout.budget)
    throw DataError("step " + std::to_string(step.index) + " exceeds budget of " +
                    std::to_string(rollout.budget));
  if (step.action.is<Score>())
    throw DataError("score() is only valid in the assessment turn");
  if (const auto* c = std::get_if<Click>(&step.action.action)) {
    const auto& o = step.observation;
    if (c->x < 0 || c->y < 0 || c->x >= o.width || c->y >= o.height)
      throw DataError("click outside the step's screenshot");
  }
  rollout.steps.push_back(std::move(step));
}

inline void terminate(Rollout& rollout, Termination how) {
  if (rollout.terminated()) throw DataError("rollout already terminated");
  if (how == Termination::stopped &&
      (rollout.steps.empty() || !rollout.steps.back().action.is<Stop>()))
    throw DataError("termination 'stopped' requires a final stop() action");
  rollout.termination = how;
}

// Checks every structural invariant of a finished or in-progress rollout.
inline void validate(const Rollout& r) {
  if (r.budget < 1) throw DataError("budget must be >= 1");
  if (static_cast<int>(r.steps.size()) > r.budget) throw DataError("rollout exceeds budget");
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto& s = r.steps[i];
    if (s.index != static_cast<int>(i) + 1) throw DataError("step indices not 1..T");
    if (!s.observation.valid()) throw DataError("invalid screenshot at step " + std::to_string(s.index));
    if (s.action.is<Score>()) throw DataError("score() outside the assessment turn");
  }
  if (r.termination == Termination::stopped &&
      (r.steps.empty() || !r.steps.back().action.is<Stop>()))
    throw DataError("stopped rollout must end with stop()");
  if (r.assessment && r.assessment->predicted_score &&
      (*r.assessment->predicted_score < 0 || *r.assessment->predicted_score > 100))
    throw DataError("predicted score out of range");
}

struct HistoryRecord {
  int t = 0;
  std::string thought_summary;
  std::string action_text;

  friend bool operator==(const HistoryRecord&, const HistoryRecord&) = default;
  NLOHMANN_DEFINE_TYPE_INTRUSIVE(HistoryRecord, t, thought_summary, action_text)
};

inline constexpr std::size_t kThoughtSummaryChars = 300;

// Whitespace-collapsed, truncated on a character boundary.
inline std::string summarize_thought(std::string_view thought,
                                     std::size_t max_chars = kThoughtSummaryChars) {
  std::string out;
  bool pending_space = false;
  for (char c : thought) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  if (out.size() > max_chars) {
    std::size_t cut = max_chars;
    while (cut > 0 && (static_cast<unsigned char>(out[cut]) & 0xC0) == 0x80) --cut;
    out.resize(cut);
    out += "...";
  }
  return out;
}

struct SessionHistory {
  std::vector<HistoryRecord> records;

  // JSON array, one object per completed step.
  std::string to_text(int indent = -1) const { return nlohmann::json(records).dump(indent); }

  static SessionHistory from_text(std::string_view text) {
    SessionHistory h;
    try {
      h.records = nlohmann::json::parse(text).get<std::vector<HistoryRecord>>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed session history: ") + e.what());
    }
    return h;
  }

  friend bool operator==(const SessionHistory&, const SessionHistory&) = default;
};

// History of steps 1..upto (all steps when upto is empty).
inline SessionHistory history_of(const Rollout& r, std::optional<int> upto = std::nullopt) {
  SessionHistory h;
  for (const auto& s : r.steps) {
    if (upto && s.index > *upto) break;
    h.records.push_back({s.index, summarize_thought(s.thought), s.action.raw_text});
  }
  return h;
}

}  // namespace uxpipe
