#pragma once

// Observe -> prompt -> act loop for one usability-testing session, followed
// by the scoring turn.

#include <chrono>
#include <ctime>
#include <deque>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "uxpipe/action.hpp"
#include "uxpipe/environment.hpp"
#include "uxpipe/policy.hpp"
#include "uxpipe/prompts.hpp"
#include "uxpipe/reward.hpp"
#include "uxpipe/trace.hpp"

namespace uxpipe {

struct SessionConfig {
  std::string rollout_id = "r0";
  std::string site_id = "site";
  std::string goal{prompts::kUsabilityTestGoal};
  std::string date;  // substituted for {DATE}; empty means today (UTC)
  int budget = kDefaultBudget;
  int window = 5;
  std::string system_prompt{prompts::kGroundingInstruction};
  std::string eval_prompt{prompts::kScoringPrompt};
  int step_delay_ms = 0;  // minimum wall time per step; 0 disables pacing
  bool run_assessment = true;

  void validate() const {
    if (budget < 1) throw UsageError("budget must be >= 1");
    if (window < 1) throw UsageError("window must be >= 1");
  }
};

namespace harness_detail {

inline std::string today_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[16];
  std::strftime(buf, sizeof buf, "%Y-%m-%d", &tm);
  return buf;
}

inline ChatMessage user_turn(std::string text, const std::deque<std::shared_ptr<const Screenshot>>& images) {
  ChatMessage m{"user", {TextPart{std::move(text)}}};
  for (const auto& img : images) m.content.push_back(ImagePart{img});
  return m;
}

// Parses a navigation reply; score() is not a navigation action.
inline std::optional<PolicyOutput> try_parse(const std::string& reply, ScreenBounds bounds) {
  try {
    auto out = parse_policy_output(reply, bounds);
    if (out.action.is<Score>()) return std::nullopt;
    return out;
  } catch (const ActionParseError&) {
    return std::nullopt;
  }
}

}  // namespace harness_detail

// Sends the scoring turn for a finished rollout.
inline Assessment assess(const Rollout& r, Policy& policy, const SessionConfig& cfg) {
  if (!r.terminated()) throw UsageError("assess: rollout " + r.rollout_id + " is not terminated");
  if (r.steps.empty()) throw UsageError("assess: rollout " + r.rollout_id + " has no steps");
  std::deque<std::shared_ptr<const Screenshot>> images;
  const int first = std::max(0, static_cast<int>(r.steps.size()) - cfg.window);
  for (std::size_t i = first; i < r.steps.size(); ++i)
    images.push_back(std::make_shared<const Screenshot>(r.steps[i].observation));
  const std::vector<ChatMessage> messages = {
      ChatMessage::text("system", cfg.system_prompt),
      harness_detail::user_turn(prompts::assessment_text(r.goal, history_of(r), cfg.eval_prompt), images)};
  auto text = policy.generate(messages);
  const auto score = parse_score(text);
  return {std::move(text), score};
}

inline Rollout run_session(Environment& env, Policy& policy, const SessionConfig& cfg) {
  using namespace harness_detail;
  cfg.validate();
  Rollout r;
  r.rollout_id = cfg.rollout_id;
  r.site_id = cfg.site_id;
  r.goal = prompts::substitute_date(cfg.goal, cfg.date.empty() ? today_utc() : cfg.date);
  r.budget = cfg.budget;

  try {
    env.reset();
  } catch (const TransportError&) {
    terminate(r, Termination::environment_error);
    return r;
  }

  std::deque<std::shared_ptr<const Screenshot>> window;
  for (int t = 1; t <= cfg.budget; ++t) {
    const auto started = std::chrono::steady_clock::now();
    std::shared_ptr<const Screenshot> obs;
    try {
      obs = std::make_shared<const Screenshot>(env.observe());
    } catch (const TransportError&) {
      terminate(r, Termination::environment_error);
      break;
    }
    window.push_back(obs);
    if (static_cast<int>(window.size()) > cfg.window) window.pop_front();

    std::vector<ChatMessage> messages = {ChatMessage::text("system", cfg.system_prompt),
                                         user_turn(prompts::step_text(r.goal, history_of(r)), window)};
    const ScreenBounds bounds{obs->width, obs->height};
    auto reply = policy.generate(messages);
    auto parsed = try_parse(reply, bounds);
    if (!parsed) {
      messages.push_back(ChatMessage::text("assistant", reply));
      messages.push_back(ChatMessage::text("user", std::string(prompts::kReprompt)));
      reply = policy.generate(messages);
      parsed = try_parse(reply, bounds);
      if (!parsed) parsed = PolicyOutput{std::string(action_detail::trim(reply)), ActionRecord(Wait{1000})};
    }

    const bool stop = parsed->action.is<Stop>();
    append_step(r, Step{t, *obs, parsed->thought, parsed->action});
    if (stop) {
      terminate(r, Termination::stopped);
      break;
    }
    try {
      env.apply(parsed->action);
    } catch (const TransportError&) {
      terminate(r, Termination::environment_error);
      break;
    }
    if (cfg.step_delay_ms > 0)
      std::this_thread::sleep_until(started + std::chrono::milliseconds(cfg.step_delay_ms));
  }
  if (!r.terminated()) terminate(r, Termination::budget_exhausted);

  if (cfg.run_assessment && !r.steps.empty()) {
    try {
      r.assessment = assess(r, policy, cfg);
    } catch (const TransportError&) {
      r.assessment.reset();
    }
  }
  return r;
}

}  // namespace uxpipe
