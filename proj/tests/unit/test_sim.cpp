#include <gtest/gtest.h>

#include <unistd.h>

#include <chrono>
#include <functional>
#include <filesystem>
#include <set>

#include "uxpipe/digest.hpp"
#include "uxpipe/harness.hpp"
#include "uxpipe/nav_quality.hpp"
#include "uxpipe/phash.hpp"
#include "uxpipe/sim/defects.hpp"
#include "uxpipe/sim/policies.hpp"
#include "uxpipe/sim/render.hpp"
#include "uxpipe/sim/sim_environment.hpp"
#include "uxpipe/trace_io.hpp"

using namespace uxpipe;
using namespace uxpipe::sim;
namespace fs = std::filesystem;

namespace {

constexpr std::array<Template, 4> kTemplates = {Template::shop, Template::booking, Template::forum, Template::jobs};

SimSite site_for(int i) { return generate_site(100 + i, kTemplates[i % 4]); }

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("uxpipe_sim_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

SessionConfig session(std::string id, const SimSite& site, int budget = 50) {
  SessionConfig c;
  c.rollout_id = std::move(id);
  c.site_id = site.site_id;
  c.date = "2026-01-15";
  c.budget = budget;
  return c;
}

Rollout run_scripted(const SimSite& site, const std::string& policy_name, int budget = 50) {
  SimEnvironment env(site);
  auto policy = make_scripted_policy(policy_name, env);
  return run_session(env, *policy, session("r-" + policy_name, site, budget));
}

// Plain graph walk that only looks at edges, independent of walk_flow.
int follow(const SimSite& s, const Flow& f) {
  int at = s.entry;
  for (const auto& step : f.steps) {
    if (step.text) continue;
    for (const auto& e : s.edges)
      if (e.from == at && e.widget == step.widget) {
        at = e.to;
        break;
      }
  }
  return at;
}

}  // namespace

// ---------------------------------------------------------------- generation

TEST(SimSite, GenerationIsDeterministic) {
  EXPECT_EQ(serialize_site(generate_site(7, Template::shop)), serialize_site(generate_site(7, Template::shop)));
}

TEST(SimSite, DifferentSeedsGiveDifferentGraphs) {
  EXPECT_NE(serialize_site(generate_site(7, Template::shop)), serialize_site(generate_site(8, Template::shop)));
}

TEST(SimSite, ShapeAndFlowsHoldAcrossSeeds) {
  for (int i = 0; i < 40; ++i) {
    const auto s = site_for(i);
    SCOPED_TRACE(s.site_id);
    EXPECT_GE(s.nodes.size(), 8u);
    EXPECT_LE(s.nodes.size(), 20u);
    EXPECT_GE(s.flows.size(), 3u);
    EXPECT_TRUE(is_connected_from_entry(s));
    for (const auto& f : s.flows) {
      EXPECT_EQ(walk_flow(s, f), std::optional<int>(f.terminal)) << f.name;
      EXPECT_EQ(follow(s, f), f.terminal) << f.name;
    }
    for (const auto& n : s.nodes)
      for (const auto& w : n.widgets) {
        EXPECT_FALSE(w.inert);
        EXPECT_NE(s.edge(n.id, w.id), nullptr) << n.name << "/" << w.label;
      }
  }
}

TEST(SimSite, SerializationRoundTrips) {
  const auto s = inject_defect(generate_site(3, Template::booking), DefectPrinciple::memory, 5);
  EXPECT_EQ(deserialize_site(serialize_site(s)), s);
  EXPECT_THROW(deserialize_site("{\"site_id\": 1}"), DataError);
}

TEST(SimSite, UnknownNamesAreRejected) {
  EXPECT_THROW(template_from_string("casino"), UsageError);
  EXPECT_THROW(principle_from_string("beauty"), UsageError);
  EXPECT_EQ(principle_from_string("Feedback"), DefectPrinciple::feedback);
  EXPECT_EQ(kAllPrinciples.size(), 8u);
}

// ---------------------------------------------------------------- defects

TEST(Defects, SignatureHoldsOnlyOnMutatedSite) {
  for (int i = 0; i < 12; ++i) {
    const auto plain = site_for(i);
    for (auto p : kAllPrinciples) {
      SCOPED_TRACE(plain.site_id + " " + to_string(p));
      EXPECT_FALSE(has_signature(plain, p));
      const auto bad = inject_defect(plain, p, 11 + i);
      EXPECT_TRUE(has_signature(bad, p));
      EXPECT_EQ(bad.parent_id, std::optional<std::string>(plain.site_id));
      EXPECT_LE(std::abs(static_cast<int>(bad.nodes.size()) - static_cast<int>(plain.nodes.size())), 2);
      EXPECT_TRUE(is_connected_from_entry(bad));
      EXPECT_EQ(serialize_site(bad), serialize_site(inject_defect(plain, p, 11 + i)));
    }
  }
}

TEST(Defects, DoubleInjectionIsAnError) {
  const auto bad = inject_defect(generate_site(1, Template::forum), DefectPrinciple::reversal, 1);
  EXPECT_THROW(inject_defect(bad, DefectPrinciple::feedback, 1), DataError);
}

TEST(Defects, ReversalLeavesNoBackEdges) {
  const auto bad = inject_defect(generate_site(4, Template::jobs), DefectPrinciple::reversal, 2);
  for (const auto& e : bad.edges) EXPECT_NE(e.kind, EdgeKind::back);
}

TEST(Defects, HierarchyMovesCriticalWidgetBelowTheFold) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto bad = inject_defect(generate_site(seed, Template::shop), DefectPrinciple::hierarchy, seed);
    const auto& w = bad.node(bad.defect->node).widgets.at(bad.defect->widget);
    EXPECT_GE(w.rect.y, kViewportHeight);
    EXPECT_LE(w.rect.bottom(), bad.node(bad.defect->node).page_height);
  }
}

TEST(Defects, FeedbackClickLeavesRenderUnchanged) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto bad = inject_defect(generate_site(seed, Template::booking), DefectPrinciple::feedback, seed);
    const auto& d = *bad.defect;
    SimEnvironment env(bad);
    // drive the flow up to the broken step
    for (const auto& step : bad.flow(d.flow).steps) {
      if (step.node == d.node && step.widget == d.widget) break;
      const auto& w = bad.node(step.node).widgets[step.widget];
      env.apply(ActionRecord(Click{w.rect.center_x(), w.rect.center_y()}));
      if (step.text) env.apply(ActionRecord(TypeText{*step.text}));
    }
    ASSERT_EQ(env.node(), d.node);
    const auto& w = bad.node(d.node).widgets[d.widget];
    const auto before = phash(env.observe());
    env.apply(ActionRecord(Click{w.rect.center_x(), w.rect.center_y()}));
    EXPECT_EQ(hamming_distance(before, phash(env.observe())), 0);
  }
}

TEST(Defects, MemoryGateNeedsTheCode) {
  const auto bad = inject_defect(generate_site(2, Template::shop), DefectPrinciple::memory, 9);
  const auto& flow = bad.flow("transaction");
  EXPECT_EQ(walk_flow(bad, flow), std::optional<int>(flow.terminal));
  auto skipped = flow;
  std::erase_if(skipped.steps, [](const FlowStep& s) { return s.text && s.text->find('-') != std::string::npos; });
  EXPECT_EQ(walk_flow(bad, skipped), std::nullopt);
}

// ---------------------------------------------------------------- render

TEST(Render, IsDeterministicAndScrollShiftsContent) {
  const auto s = generate_site(7, Template::shop);
  EXPECT_EQ(render(s, s.entry), render(s, s.entry));
  EXPECT_NE(render(s, s.entry, 0), render(s, s.entry, 300));
  EXPECT_EQ(render(s, 0).width, 1920);
  EXPECT_EQ(render(s, 0).height, 1080);
  EXPECT_THROW(render(s, 99), DataError);
  EXPECT_THROW(render(s, s.entry, 5000), DataError);
}

TEST(Render, DistinctNodesAreNeverSameScreen) {
  int pairs = 0;
  for (int i = 0; i < 10; ++i) {
    const auto s = site_for(i);
    std::vector<ScreenHash> h;
    for (const auto& n : s.nodes) h.push_back(phash(render(s, n.id)));
    for (std::size_t a = 0; a < h.size(); ++a)
      for (std::size_t b = a + 1; b < h.size(); ++b, ++pairs)
        EXPECT_FALSE(same_screen(h[a], h[b]))
            << s.site_id << " " << s.nodes[a].name << " vs " << s.nodes[b].name << " d=" << hamming_distance(h[a], h[b]);
  }
  EXPECT_GT(pairs, 500);
}

// ---------------------------------------------------------------- environment

TEST(SimEnvironment, ClicksFollowEdgesAndTimeIsVirtual) {
  const auto s = generate_site(5, Template::forum);
  SimEnvironment env(s);
  EXPECT_EQ(env.observe().captured_at, 0);
  const auto* card = s.node(s.entry).widget_by_role("section-link");
  env.apply(ActionRecord(Click{card->rect.center_x(), card->rect.center_y()}));
  EXPECT_EQ(env.node(), s.edge(s.entry, card->id)->to);
  EXPECT_EQ(env.observe().captured_at, kActionDuration);
  env.apply(ActionRecord(KeyPress{{"alt", "left"}}));
  EXPECT_EQ(env.node(), s.entry);
  env.apply(ActionRecord(Click{5, 1075}));  // empty canvas
  EXPECT_EQ(env.node(), s.entry);
  env.apply(ActionRecord(Scroll{ScrollDirection::down, 100}));
  EXPECT_EQ(env.scroll(), max_scroll(s.node(s.entry)));
  env.reset();
  EXPECT_EQ(env.scroll(), 0);
  EXPECT_EQ(env.observe().captured_at, 0);
}

// ---------------------------------------------------------------- scripted policies

TEST(ScriptedPolicies, LooperDegeneratesNavigationScore) {
  const auto s = generate_site(9, Template::shop);
  const auto r = run_scripted(s, "looper");
  ASSERT_EQ(r.steps.size(), 50u);
  const auto m = compute_metrics(r);
  EXPECT_GT(m.same_after_clicks_ratio, 0.95);
  EXPECT_LT(m.s_nav, 0.01);
  EXPECT_FALSE(passes_filter(m));
}

TEST(ScriptedPolicies, ExplorerPassesTheNavigationFilter) {
  for (int i = 0; i < 8; ++i) {
    const auto s = site_for(i);
    const auto r = run_scripted(s, "explorer");
    const auto m = compute_metrics(r);
    SCOPED_TRACE(s.site_id);
    EXPECT_EQ(r.steps.size(), 50u);
    EXPECT_GE(m.unique_screen_ratio, 0.15);
    EXPECT_TRUE(passes_filter(m)) << "s_nav=" << m.s_nav;
  }
}

TEST(ScriptedPolicies, FlowFollowerCompletesPlainFlows) {
  const auto s = generate_site(12, Template::jobs);
  for (const auto& f : s.flows) {
    SimEnvironment env(s);
    FlowFollowerPolicy p(env, f.name);
    const auto r = run_session(env, p, session("ff", s));
    EXPECT_EQ(r.termination, std::optional(Termination::stopped));
    EXPECT_EQ(env.node(), f.terminal) << f.name;
  }
  SimEnvironment env(s);
  EXPECT_THROW(FlowFollowerPolicy(env, "teleport"), DataError);
}

TEST(ScriptedPolicies, FlowFollowerReachesWidgetsBelowTheFold) {
  const auto bad = inject_defect(generate_site(3, Template::shop), DefectPrinciple::hierarchy, 0);
  SimEnvironment env(bad);
  FlowFollowerPolicy p(env, "transaction");
  const auto r = run_session(env, p, session("ff", bad));
  EXPECT_EQ(env.node(), bad.flow("transaction").terminal);
  EXPECT_TRUE(std::any_of(r.steps.begin(), r.steps.end(), [](const Step& st) { return st.action.is<Scroll>(); }));
}

TEST(ScriptedPolicies, FeedbackDefectAddsDeadClicks) {
  for (int i = 0; i < 6; ++i) {
    const auto plain = site_for(i);
    const auto bad = inject_defect(plain, DefectPrinciple::feedback, i);
    const auto mp = compute_metrics(run_scripted(plain, "flow:transaction"));
    const auto rb = run_scripted(bad, "flow:transaction");
    const auto mb = compute_metrics(rb);
    EXPECT_GE(mb.same_click_transitions, 1);
    EXPECT_GT(mb.same_click_transitions, mp.same_click_transitions);
    EXPECT_GT(mb.same_after_clicks_ratio, mp.same_after_clicks_ratio);
  }
}

TEST(ScriptedPolicies, ReflectiveAssessmentQuotesDeadClicks) {
  const auto bad = inject_defect(generate_site(1, Template::shop), DefectPrinciple::feedback, 1);
  const auto r = run_scripted(bad, "flow:transaction");
  ASSERT_TRUE(r.assessment);
  const auto& text = r.assessment->issues_text;
  EXPECT_NE(text.find("non-responsive click"), std::string::npos);
  EXPECT_NE(text.find("Nothing happened after clicking"), std::string::npos);
  EXPECT_EQ(text.substr(text.rfind('\n') + 1, 13), "Action: score");
  const auto m = compute_metrics(r);
  EXPECT_EQ(r.assessment->predicted_score,
            std::optional<int>(static_cast<int>(std::lround(100 * (1 - m.same_after_clicks_ratio)))));
}

// ---------------------------------------------------------------- harness

namespace {

// Replays canned replies and records what it was shown.
class CannedPolicy : public Policy {
 public:
  std::function<std::string(int call, std::span<const ChatMessage>)> reply;
  std::vector<std::vector<std::int64_t>> shown;  // captured_at of images per call
  std::vector<std::size_t> message_counts;
  int calls = 0;

  std::string generate(std::span<const ChatMessage> messages) override {
    std::vector<std::int64_t> ts;
    for (const auto& part : messages.back().content)
      if (const auto* p = std::get_if<ImagePart>(&part)) ts.push_back(p->image->captured_at);
    shown.push_back(ts);
    message_counts.push_back(messages.size());
    return reply(++calls, messages);
  }
};

class BrokenEnvironment : public Environment {
 public:
  int fail_after = 3;
  int applied = 0;
  Screenshot observe() override {
    if (applied >= fail_after) throw TransportError("adapter unreachable");
    return Screenshot(64, 64);
  }
  void apply(const ActionRecord&) override { ++applied; }
  void reset() override { applied = 0; }
};

bool is_assessment(std::span<const ChatMessage> m) {
  return m.back().joined_text().find("Action: score(") != std::string::npos;
}

}  // namespace

TEST(Harness, StopEndsTheSession) {
  const auto s = generate_site(1, Template::shop);
  SimEnvironment env(s);
  CannedPolicy p;
  p.reply = [](int call, auto m) -> std::string {
    if (is_assessment(m)) return "- fine\nAction: score(80)";
    return call == 12 ? "Thought: done\nAction: stop()" : "Thought: look\nAction: wait(10)";
  };
  const auto r = run_session(env, p, session("stop12", s));
  EXPECT_EQ(r.steps.size(), 12u);
  EXPECT_EQ(r.termination, std::optional(Termination::stopped));
  ASSERT_TRUE(r.assessment);
  EXPECT_EQ(r.assessment->predicted_score, std::optional(80));
}

TEST(Harness, BudgetIsNeverExceeded) {
  const auto s = generate_site(1, Template::shop);
  SimEnvironment env(s);
  CannedPolicy p;
  p.reply = [](int, auto m) -> std::string { return is_assessment(m) ? "no score" : "Action: scroll(down)"; };
  const auto r = run_session(env, p, session("budget", s));
  EXPECT_EQ(r.steps.size(), 50u);
  EXPECT_EQ(r.termination, std::optional(Termination::budget_exhausted));
  ASSERT_TRUE(r.assessment);
  EXPECT_EQ(r.assessment->predicted_score, std::nullopt);
}

TEST(Harness, StateWindowHoldsTheLatestImagesInOrder) {
  const auto s = generate_site(1, Template::shop);
  SimEnvironment env(s);
  CannedPolicy p;
  p.reply = [](int, auto m) -> std::string { return is_assessment(m) ? "Action: score(1)" : "Action: wait(0)"; };
  auto cfg = session("window", s, 9);
  run_session(env, p, cfg);
  ASSERT_EQ(p.shown.size(), 10u);
  for (int t = 1; t <= 9; ++t) {
    const auto& ts = p.shown[t - 1];
    ASSERT_EQ(ts.size(), static_cast<std::size_t>(std::min(t, 5)));
    // observation of step k was captured after k-1 actions: (k-1) * 100 ms
    for (std::size_t j = 0; j < ts.size(); ++j)
      EXPECT_EQ(ts[j], (t - static_cast<int>(ts.size()) + static_cast<int>(j)) * kActionDuration);
  }
  EXPECT_EQ(p.shown.back().size(), 5u);
}

TEST(Harness, MalformedReplyIsRepromptedThenLoggedAsWait) {
  const auto s = generate_site(1, Template::shop);
  SimEnvironment env(s);
  CannedPolicy p;
  p.reply = [](int call, auto m) -> std::string {
    if (is_assessment(m)) return "Action: score(3)";
    if (call == 1) return "I am not sure";
    if (call == 2) return "Action: fly()";
    if (call == 3) return "Action: click(10, 5000)";
    if (call == 4) return "Thought: ok\nAction: click(10, 10)";
    return "Action: stop()";
  };
  const auto r = run_session(env, p, session("malformed", s));
  ASSERT_EQ(r.steps.size(), 3u);
  EXPECT_EQ(r.steps[0].action.action, Action(Wait{1000}));
  EXPECT_EQ(p.message_counts[1], 4u);  // system, user, bad reply, re-prompt
  EXPECT_EQ(r.steps[1].action.action, Action(Click{10, 10}));
  EXPECT_EQ(r.steps[1].thought, "ok");
}

TEST(Harness, ScoreDuringNavigationCountsAsMalformed) {
  const auto s = generate_site(1, Template::shop);
  SimEnvironment env(s);
  CannedPolicy p;
  p.reply = [](int call, auto m) -> std::string {
    if (is_assessment(m)) return "Action: score(3)";
    return call <= 2 ? "Action: score(50)" : "Action: stop()";
  };
  const auto r = run_session(env, p, session("score", s));
  EXPECT_EQ(r.steps[0].action.action, Action(Wait{1000}));
}

TEST(Harness, EnvironmentFailureTerminatesTheSession) {
  BrokenEnvironment env;
  CannedPolicy p;
  p.reply = [](int, auto m) -> std::string { return is_assessment(m) ? "Action: score(9)" : "Action: wait(5)"; };
  SessionConfig cfg;
  cfg.date = "2026-01-01";
  const auto r = run_session(env, p, cfg);
  EXPECT_EQ(r.steps.size(), 3u);
  EXPECT_EQ(r.termination, std::optional(Termination::environment_error));
  EXPECT_NO_THROW(validate(r));
}

TEST(Harness, PolicyTransportFailurePropagatesButAssessmentFailureDoesNot) {
  const auto s = generate_site(1, Template::shop);
  SimEnvironment env(s);
  CannedPolicy p;
  p.reply = [](int, auto) -> std::string { throw TransportError("endpoint down"); };
  EXPECT_THROW(run_session(env, p, session("x", s)), TransportError);

  p.calls = 0;
  p.reply = [](int call, auto m) -> std::string {
    if (is_assessment(m)) throw TransportError("endpoint down");
    return call < 3 ? "Action: wait(1)" : "Action: stop()";
  };
  const auto r = run_session(env, p, session("y", s));
  EXPECT_EQ(r.steps.size(), 3u);
  EXPECT_FALSE(r.assessment);
}

TEST(Harness, AssessRequiresAFinishedNonEmptyRollout) {
  CannedPolicy p;
  p.reply = [](int, auto) -> std::string { return "Action: score(1)"; };
  Rollout r;
  r.termination = Termination::budget_exhausted;
  EXPECT_THROW(assess(r, p, {}), UsageError);
}

TEST(Harness, DateIsSubstitutedIntoTheGoal) {
  const auto s = generate_site(1, Template::shop);
  const auto r = run_scripted(s, "flow:browse");
  EXPECT_NE(r.goal.find("Today's date is 2026-01-15."), std::string::npos);
  EXPECT_EQ(r.goal.find("{DATE}"), std::string::npos);
}

TEST(Harness, ReplayProducesIdenticalArchives) {
  const auto s = inject_defect(generate_site(21, Template::booking), DefectPrinciple::feedback, 4);
  const auto dir = scratch("replay");
  for (const char* run : {"a", "b"}) save_rollout(run_scripted(s, "explorer"), dir / run);
  EXPECT_EQ(directory_checksum(dir / "a"), directory_checksum(dir / "b"));
  EXPECT_EQ(load_rollout(dir / "a"), run_scripted(s, "explorer"));
  fs::remove_all(dir);
}

TEST(Harness, SimulatedStepsAreFast) {
  const auto s = generate_site(2, Template::jobs);
  const auto t0 = std::chrono::steady_clock::now();
  const auto r = run_scripted(s, "explorer");
  const auto per_step = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() /
                        static_cast<double>(r.steps.size());
  EXPECT_LT(per_step, 100.0);
}
