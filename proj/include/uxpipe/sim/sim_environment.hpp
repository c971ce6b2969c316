#pragma once

#include <memory>

#include "uxpipe/environment.hpp"
#include "uxpipe/sim/render.hpp"
#include "uxpipe/sim/site.hpp"

namespace uxpipe::sim {

inline constexpr int kScrollStep = 120;     // px per scroll unit
inline constexpr int kActionDuration = 100;  // virtual ms per action

// In-process environment over a simulated site. Time is virtual, so
// observation timestamps are deterministic.
class SimEnvironment : public Environment {
 public:
  explicit SimEnvironment(std::shared_ptr<const SimSite> site) : site_(std::move(site)) {
    if (!site_) throw UsageError("SimEnvironment needs a site");
    reset();
  }
  explicit SimEnvironment(SimSite site) : SimEnvironment(std::make_shared<const SimSite>(std::move(site))) {}

  Screenshot observe() override {
    auto img = render(*site_, node_, scroll_, view_);
    img.captured_at = clock_ms_;
    return img;
  }

  void apply(const ActionRecord& record) override {
    clock_ms_ += kActionDuration;
    std::visit([this](const auto& a) { on(a); }, record.action);
  }

  void reset() override {
    node_ = site_->entry;
    scroll_ = 0;
    view_ = {};
    clock_ms_ = 0;
  }

  const SimSite& site() const noexcept { return *site_; }
  int node() const noexcept { return node_; }
  int scroll() const noexcept { return scroll_; }
  const ViewState& view() const noexcept { return view_; }

  // Topmost widget under a viewport point, if any.
  const Widget* hit(int x, int y) const {
    const auto& n = site_->node(node_);
    for (auto it = n.widgets.rbegin(); it != n.widgets.rend(); ++it)
      if (it->rect.contains(x, y + scroll_)) return &*it;
    return nullptr;
  }

 private:
  void go(int to) {
    node_ = to;
    scroll_ = 0;
    view_ = {};
  }

  void on(const Click& c) {
    const auto* w = hit(c.x, c.y);
    if (!w || w->inert) return;
    if (w->kind == WidgetKind::field) {
      view_.focused = w->id;
      return;
    }
    const auto* e = site_->edge(node_, w->id);
    if (!e) return;
    if (e->gate) {
      const auto it = view_.values.find(e->gate->field);
      if (it == view_.values.end() || it->second != e->gate->value) return;
    }
    if (e->to != node_) go(e->to);
  }

  void on(const TypeText& t) {
    if (view_.focused) view_.values[*view_.focused] += t.text;
  }

  void on(const Scroll& s) {
    const int delta = kScrollStep * s.amount * (s.direction == ScrollDirection::down ? 1 : -1);
    scroll_ = std::clamp(scroll_ + delta, 0, max_scroll(site_->node(node_)));
  }

  void on(const KeyPress& k) {
    if (k.combo == std::vector<std::string>{"alt", "left"}) {
      for (const auto& e : site_->edges)
        if (e.from == node_ && e.kind == EdgeKind::back) {
          go(e.to);
          return;
        }
    }
  }

  void on(const Wait& w) { clock_ms_ += w.ms; }
  void on(const Stop&) {}
  void on(const Score&) {}

  std::shared_ptr<const SimSite> site_;
  int node_ = 0;
  int scroll_ = 0;
  ViewState view_;
  std::int64_t clock_ms_ = 0;
};

}  // namespace uxpipe::sim
