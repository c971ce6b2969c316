#pragma once

// Navigation-quality metrics over a rollout's screen sequence.
//
// Blank screens are dropped together with the action taken on them. The
// remaining steps are clustered into logical screens: a step reached by a
// scroll inherits the id of the step it scrolled from, every other step joins
// the first earlier representative within the same-screen distance or opens a
// new cluster. Transitions caused by scrolls are left out of both same-screen
// ratios.

#include <optional>
#include <span>
#include <vector>

#include "uxpipe/action.hpp"
#include "uxpipe/error.hpp"
#include "uxpipe/phash.hpp"
#include "uxpipe/trace.hpp"

namespace uxpipe {

struct NavConfig {
  int same_screen_distance = kDefaultSameScreenDistance;
  double blank_epsilon = kDefaultBlankEpsilon;
  double min_s_nav = 0.07;
  int min_steps = 30;
  int min_passing_rollouts = 3;
  bool exclude_scroll_transitions = true;
  bool merge_scrolled_views = true;
};

// What nav-quality needs to know about one step.
struct HashedStep {
  ScreenHash hash;
  bool blank = false;
  Action action = Stop{};
};

struct LogicalScreenSequence {
  std::vector<int> ids;                     // dense 0..K-1, one per kept step
  std::vector<std::size_t> kept;            // raw step positions that survived
  std::vector<ScreenHash> representatives;  // one per logical id

  bool empty() const noexcept { return ids.empty(); }
  int unique_count() const noexcept { return static_cast<int>(representatives.size()); }
};

struct TraceMetrics {
  double same_screen_ratio = 0;
  double same_after_clicks_ratio = 0;
  double unique_screen_ratio = 0;
  int steps = 0;
  double s_nav = 0;

  int logical_length = 0;
  int unique_screens = 0;
  int transitions = 0;        // non-scroll transitions
  int same_transitions = 0;
  int click_transitions = 0;
  int same_click_transitions = 0;
  bool same_ratio_undefined = false;   // no non-scroll transitions
  bool click_ratio_undefined = false;  // no click transitions

  friend bool operator==(const TraceMetrics&, const TraceMetrics&) = default;
};

inline std::vector<HashedStep> hash_steps(const Rollout& r, const NavConfig& cfg = {}) {
  std::vector<HashedStep> out;
  out.reserve(r.steps.size());
  for (const auto& s : r.steps)
    out.push_back({phash(s.observation), is_blank(s.observation, cfg.blank_epsilon), s.action.action});
  return out;
}

inline LogicalScreenSequence logical_screens(std::span<const HashedStep> steps,
                                             const NavConfig& cfg = {}) {
  LogicalScreenSequence seq;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    if (steps[i].blank) continue;
    int id = -1;
    if (cfg.merge_scrolled_views && !seq.kept.empty() &&
        std::holds_alternative<Scroll>(steps[seq.kept.back()].action)) {
      id = seq.ids.back();
    } else {
      for (std::size_t r = 0; r < seq.representatives.size(); ++r)
        if (same_screen(steps[i].hash, seq.representatives[r], cfg.same_screen_distance)) {
          id = static_cast<int>(r);
          break;
        }
      if (id < 0) {
        id = static_cast<int>(seq.representatives.size());
        seq.representatives.push_back(steps[i].hash);
      }
    }
    seq.ids.push_back(id);
    seq.kept.push_back(i);
  }
  return seq;
}

inline LogicalScreenSequence logical_screens(const Rollout& r, const NavConfig& cfg = {}) {
  if (r.steps.empty()) throw DataError("logical_screens: rollout has no steps");
  const auto hashed = hash_steps(r, cfg);
  return logical_screens(hashed, cfg);
}

inline TraceMetrics compute_metrics(std::span<const HashedStep> steps, const NavConfig& cfg = {}) {
  const auto seq = logical_screens(steps, cfg);
  if (seq.empty()) throw DataError("unusable rollout: every screen is blank");

  TraceMetrics m;
  m.steps = static_cast<int>(steps.size());
  m.logical_length = static_cast<int>(seq.ids.size());
  m.unique_screens = seq.unique_count();

  for (std::size_t j = 0; j + 1 < seq.ids.size(); ++j) {
    const auto& action = steps[seq.kept[j]].action;
    if (cfg.exclude_scroll_transitions && std::holds_alternative<Scroll>(action)) continue;
    const bool same = seq.ids[j + 1] == seq.ids[j];
    ++m.transitions;
    m.same_transitions += same;
    if (std::holds_alternative<Click>(action)) {
      ++m.click_transitions;
      m.same_click_transitions += same;
    }
  }

  m.same_ratio_undefined = m.transitions == 0;
  m.click_ratio_undefined = m.click_transitions == 0;
  m.same_screen_ratio =
      m.same_ratio_undefined ? 0.0 : static_cast<double>(m.same_transitions) / m.transitions;
  m.same_after_clicks_ratio =
      m.click_ratio_undefined ? 0.0
                              : static_cast<double>(m.same_click_transitions) / m.click_transitions;
  m.unique_screen_ratio = static_cast<double>(m.unique_screens) / m.logical_length;
  m.s_nav = m.unique_screen_ratio * (1.0 - m.same_screen_ratio) * (1.0 - m.same_after_clicks_ratio);
  return m;
}

inline TraceMetrics compute_metrics(const Rollout& r, const NavConfig& cfg = {}) {
  const auto hashed = hash_steps(r, cfg);
  return compute_metrics(hashed, cfg);
}

inline bool passes_filter(const TraceMetrics& m, const NavConfig& cfg = {}) {
  return m.s_nav >= cfg.min_s_nav && m.steps >= cfg.min_steps;
}

inline int count_passing(std::span<const TraceMetrics> rollouts, const NavConfig& cfg = {}) {
  int n = 0;
  for (const auto& m : rollouts) n += passes_filter(m, cfg);
  return n;
}

// A site is kept only if enough of its rollouts pass the quality filter.
inline bool site_is_usable(std::span<const TraceMetrics> rollouts, const NavConfig& cfg = {}) {
  return count_passing(rollouts, cfg) >= cfg.min_passing_rollouts;
}

}  // namespace uxpipe
