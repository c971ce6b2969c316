#pragma once

// Scripted policies for driving simulated sites. They peek at the simulator's
// state to pick targets, but judge outcomes only from the screenshots they
// are shown, like a model would. All of them answer the scoring turn the same
// way: score = round(100 * (1 - same_after_clicks_ratio)) over the session
// they logged themselves, with every dead click quoted as an issue.

#include <cmath>
#include <deque>
#include <memory>
#include <set>
#include <string>

#include "uxpipe/action.hpp"
#include "uxpipe/nav_quality.hpp"
#include "uxpipe/phash.hpp"
#include "uxpipe/policy.hpp"
#include "uxpipe/sim/sim_environment.hpp"

namespace uxpipe::sim {

class ScriptedPolicy : public Policy {
 public:
  explicit ScriptedPolicy(const SimEnvironment& env) : env_(env) {}

  std::string generate(std::span<const ChatMessage> messages) override {
    if (messages.empty()) throw UsageError("scripted policy: empty conversation");
    const auto& last = messages.back();
    const auto text = last.joined_text();
    if (text.find("Action: score(") != std::string::npos) return assess();
    if (text.find("Previous actions:\n[]") != std::string::npos) {
      log_.clear();
      thoughts_.clear();
      begin();
    }
    const Screenshot* img = nullptr;
    for (const auto& part : last.content)
      if (const auto* p = std::get_if<ImagePart>(&part)) img = p->image.get();
    if (!img) throw DataError("scripted policy: no screenshot in the last message");

    const auto hash = phash(*img);
    auto [thought, action] = next(hash);
    log_.push_back({hash, is_blank(*img), action});
    thoughts_.push_back(thought);
    return "Thought: " + thought + "\n" + format_action(action);
  }

 protected:
  struct Move {
    std::string thought;
    Action action;
  };

  virtual void begin() {}
  virtual Move next(ScreenHash current) = 0;

  const SimEnvironment& env() const { return env_; }

  // Scroll needed to bring `w` fully into view, if any.
  std::optional<Move> reach(const Widget& w) const {
    const int top = env_.scroll(), bottom = top + kViewportHeight;
    if (w.rect.y < top) {
      const int n = (top - w.rect.y + kScrollStep - 1) / kScrollStep;
      return Move{"'" + w.label + "' is above the visible area, scrolling up.", Scroll{ScrollDirection::up, n}};
    }
    if (w.rect.bottom() > bottom) {
      const int n = (w.rect.bottom() - bottom + kScrollStep - 1) / kScrollStep;
      return Move{"I need to scroll down to find '" + w.label + "'.", Scroll{ScrollDirection::down, n}};
    }
    return std::nullopt;
  }

  Click click_on(const Widget& w) const { return {w.rect.center_x(), w.rect.center_y() - env_.scroll()}; }

 private:
  std::string assess() const {
    const auto m = compute_metrics(std::span<const HashedStep>(log_));
    const int score = static_cast<int>(std::lround(100.0 * (1.0 - m.same_after_clicks_ratio)));
    std::string out = "Usability problems:\n";
    int issues = 0;
    for (std::size_t i = 1; i < log_.size(); ++i)
      if (std::holds_alternative<Click>(log_[i - 1].action) && same_screen(log_[i - 1].hash, log_[i].hash)) {
        out += "- Major: non-responsive click at step " + std::to_string(i) + ". \"" + thoughts_[i - 1] + "\"\n";
        ++issues;
      }
    if (issues == 0) out += "- None observed.\n";
    out += "Action: score(" + std::to_string(score) + ")";
    return out;
  }

  const SimEnvironment& env_;
  std::vector<HashedStep> log_;
  std::vector<std::string> thoughts_;
};

// Clicks every non-field widget it has not clicked yet, walking to the
// nearest screen that still has one. Starts over once everything is clicked.
class ExplorerPolicy : public ScriptedPolicy {
 public:
  using ScriptedPolicy::ScriptedPolicy;

 protected:
  void begin() override { clicked_.clear(); }

  Move next(ScreenHash) override {
    for (int attempt = 0; attempt < 2; ++attempt) {
      if (const auto* w = target()) {
        if (auto m = reach(*w)) return *m;
        clicked_.insert({env().node(), w->id});
        return {"I will click '" + w->label + "' to see where it leads.", click_on(*w)};
      }
      clicked_.clear();
    }
    return {"There is nothing left to click.", Stop{}};
  }

 private:
  bool fresh(int node, const Widget& w) const {
    return w.kind != WidgetKind::field && !clicked_.count({node, w.id});
  }

  // First unclicked widget here, or the first hop towards the nearest node
  // that has one.
  const Widget* target() const {
    const auto& site = env().site();
    const int here = env().node();
    for (const auto& w : site.node(here).widgets)
      if (fresh(here, w)) return &w;

    std::vector<int> first_hop(site.nodes.size(), -1);
    std::vector<char> seen(site.nodes.size(), 0);
    std::deque<int> queue{here};
    seen[here] = 1;
    while (!queue.empty()) {
      const int at = queue.front();
      queue.pop_front();
      for (const auto& e : site.edges) {
        if (e.from != at || e.gate || seen[e.to] || site.node(at).widgets[e.widget].inert) continue;
        seen[e.to] = 1;
        first_hop[e.to] = at == here ? e.widget : first_hop[at];
        for (const auto& w : site.node(e.to).widgets)
          if (fresh(e.to, w)) return &site.node(here).widgets[first_hop[e.to]];
        queue.push_back(e.to);
      }
    }
    return nullptr;
  }

  std::set<std::pair<int, int>> clicked_;
};

// Clicks the same control forever.
class LooperPolicy : public ScriptedPolicy {
 public:
  using ScriptedPolicy::ScriptedPolicy;

 protected:
  Move next(ScreenHash) override {
    const auto& n = env().site().node(env().node());
    const Widget* w = n.widget_by_role("search-field");
    if (!w) w = n.widget_by_role("nav-home");
    if (!w) return {"I am stuck.", Wait{}};
    if (auto m = reach(*w)) return *m;
    return {"Clicking '" + w->label + "' again.", click_on(*w)};
  }
};

// Executes one named flow, then stops. A click that leaves the screen
// unchanged is retried twice before giving up.
class FlowFollowerPolicy : public ScriptedPolicy {
 public:
  FlowFollowerPolicy(const SimEnvironment& env, std::string flow) : ScriptedPolicy(env), flow_name_(std::move(flow)) {
    env.site().flow(flow_name_);
  }

  static constexpr int kMaxRetries = 2;

 protected:
  void begin() override {
    index_ = 0;
    retries_ = 0;
    pending_.reset();
    done_ = false;
  }

  Move next(ScreenHash current) override {
    const auto& flow = env().site().flow(flow_name_);
    if (pending_) {
      const auto& step = flow.steps[index_];
      const auto& w = env().site().node(step.node).widgets[step.widget];
      if (same_screen(*pending_, current)) {
        if (retries_ < kMaxRetries) {
          ++retries_;
          return {"Nothing happened after clicking '" + w.label + "'. The page appears to be stuck, trying again.",
                  click_on(w)};
        }
        pending_.reset();
        done_ = true;
        return {"Clicking '" + w.label + "' still does nothing. I haven't successfully completed the " + flow_name_ +
                    " flow.",
                Stop{}};
      }
      pending_.reset();
      retries_ = 0;
      ++index_;
    }
    if (done_ || index_ >= flow.steps.size()) {
      done_ = true;
      return {"The " + flow_name_ + " flow is complete.", Stop{}};
    }
    const auto& step = flow.steps[index_];
    if (env().node() != step.node) {
      done_ = true;
      return {"I ended up on an unexpected page and cannot continue the " + flow_name_ + " flow.", Stop{}};
    }
    const auto& w = env().site().node(step.node).widgets[step.widget];
    if (auto m = reach(w)) return *m;
    if (step.text) {
      if (env().view().focused != w.id) return {"I will click the '" + w.label + "' field.", click_on(w)};
      ++index_;
      return {"Typing \"" + *step.text + "\" into '" + w.label + "'.", TypeText{*step.text}};
    }
    pending_ = current;
    return {"I will click '" + w.label + "' to continue the " + flow_name_ + " flow.", click_on(w)};
  }

 private:
  std::string flow_name_;
  std::size_t index_ = 0;
  int retries_ = 0;
  std::optional<ScreenHash> pending_;
  bool done_ = false;
};

// "explorer", "looper" or "flow:<name>".
inline std::unique_ptr<Policy> make_scripted_policy(std::string_view name, const SimEnvironment& env) {
  if (name == "explorer") return std::make_unique<ExplorerPolicy>(env);
  if (name == "looper") return std::make_unique<LooperPolicy>(env);
  if (name.substr(0, 5) == "flow:") return std::make_unique<FlowFollowerPolicy>(env, std::string(name.substr(5)));
  throw UsageError("unknown scripted policy '" + std::string(name) + "' (explorer, looper, flow:<name>)");
}

}  // namespace uxpipe::sim
