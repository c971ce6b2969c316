#pragma once

// One-defect-per-variant mutations of a plain site, and a machine-checkable
// signature per principle. A signature holds on the mutated site and not on
// its plain parent.

#include <array>
#include <map>
#include <set>
#include <string>

#include "uxpipe/sim/site.hpp"

namespace uxpipe::sim {

namespace defect_detail {

// Deletes a node, dropping its outgoing edges and renumbering everything
// that refers to a later node. Incoming edges must already be redirected.
inline void remove_node(SimSite& site, int id) {
  for (const auto& e : site.edges)
    if (e.to == id && e.from != id)
      throw DataError("remove_node: node " + std::to_string(id) + " still has incoming edges");
  std::erase_if(site.edges, [&](const Edge& e) { return e.from == id; });
  site.nodes.erase(site.nodes.begin() + id);
  const auto fix = [&](int& n) {
    if (n > id) --n;
  };
  for (auto& n : site.nodes) fix(n.id);
  for (auto& e : site.edges) {
    fix(e.from);
    fix(e.to);
  }
  for (auto& f : site.flows) {
    for (auto& s : f.steps) fix(s.node);
    fix(f.terminal);
  }
  fix(site.entry);
}

inline int node_with_role(const SimSite& site, NodeRole role) {
  for (const auto& n : site.nodes)
    if (n.role == role) return n.id;
  throw DataError("site " + site.site_id + " has no node with the requested role");
}

inline int widget_with_role(const Node& n, std::string_view role) {
  const auto* w = n.widget_by_role(role);
  if (!w) throw DataError("node " + n.name + " has no widget '" + std::string(role) + "'");
  return w->id;
}

// Target the flow expects after step i.
inline int expected_after(const Flow& f, std::size_t i) {
  return i + 1 < f.steps.size() ? f.steps[i + 1].node : f.terminal;
}

inline bool is_click_step(const SimSite& site, const FlowStep& s) {
  if (s.text) return false;
  const auto* e = site.edge(s.node, s.widget);
  return e && e->to != s.node;
}

// Whether retargeting one edge keeps every node reachable from the entry.
inline bool stays_connected(const SimSite& site, const FlowStep& step, int to) {
  SimSite trial = site;
  trial.edge(step.node, step.widget)->to = to;
  return is_connected_from_entry(trial);
}

}  // namespace defect_detail

inline SimSite inject_defect(const SimSite& plain, DefectPrinciple principle, std::uint64_t defect_seed) {
  using namespace defect_detail;
  if (plain.defect) throw DataError("site " + plain.site_id + " already carries a defect");

  SimSite site = plain;
  Rng rng(defect_seed * 0xD1B54A32D192ED03ull + static_cast<std::uint64_t>(principle) * 7919 + 1);
  Defect d{principle, defect_seed, "", -1, -1};

  switch (principle) {
    case DefectPrinciple::feedback: {
      const auto& flow = site.flow("transaction");
      std::vector<std::size_t> clicks;
      for (std::size_t i = 0; i < flow.steps.size(); ++i)
        if (is_click_step(site, flow.steps[i]) && stays_connected(site, flow.steps[i], flow.steps[i].node))
          clicks.push_back(i);
      const auto& step = flow.steps[clicks[rng.below(static_cast<int>(clicks.size()))]];
      site.edge(step.node, step.widget)->to = step.node;
      d.flow = flow.name;
      d.node = step.node;
      d.widget = step.widget;
      break;
    }
    case DefectPrinciple::consistency: {
      static const std::vector<std::string> labels = {"< Back", "Return", "Go back", "Previous", "<<", "Back"};
      static const std::vector<Rect> spots = {{48, 120, 200, 56}, {1672, 120, 200, 56}, {820, 120, 240, 56},
                                              {48, 980, 200, 56}};
      const int lo = rng.below(static_cast<int>(labels.size()));
      const int so = rng.below(static_cast<int>(spots.size()));
      int i = 0;
      for (auto& n : site.nodes)
        for (auto& w : n.widgets)
          if (w.role == "back") {
            w.label = labels[(lo + i) % labels.size()];
            w.rect = spots[(so + i) % spots.size()];
            ++i;
          }
      d.flow = "";
      break;
    }
    case DefectPrinciple::dialog: {
      const bool tx = rng.below(2) == 0;
      auto& flow = site.flows[tx ? 2 : 3];
      const int victim = flow.terminal;
      const int home = site.entry;
      for (auto& e : site.edges)
        if (e.to == victim && e.from != victim) e.to = home;
      flow.terminal = home;
      d.flow = flow.name;
      d.node = flow.steps.back().node;
      d.widget = flow.steps.back().widget;
      remove_node(site, victim);
      if (d.node > victim) --d.node;
      break;
    }
    case DefectPrinciple::prevention: {
      const int account = node_with_role(site, NodeRole::account);
      const int confirm = node_with_role(site, NodeRole::confirm);
      const int result = node_with_role(site, NodeRole::result);
      const int destroy = widget_with_role(site.node(account), "destroy");
      for (auto& e : site.edges)
        if (e.to == confirm && e.from != confirm) e.to = e.from == account && e.widget == destroy ? result : account;
      auto& flow = site.flows[3];
      std::erase_if(flow.steps, [&](const FlowStep& s) { return s.node == confirm; });
      d.flow = flow.name;
      d.node = account;
      d.widget = destroy;
      remove_node(site, confirm);
      if (d.node > confirm) --d.node;
      break;
    }
    case DefectPrinciple::control: {
      struct Redirect {
        std::size_t flow, step;
        int to;
      };
      std::vector<Redirect> candidates;
      for (std::size_t f = 0; f < site.flows.size(); ++f)
        for (std::size_t i = 1; i < site.flows[f].steps.size(); ++i) {
          const auto& step = site.flows[f].steps[i];
          if (!is_click_step(site, step)) continue;
          const int expected = expected_after(site.flows[f], i);
          for (const auto& n : site.nodes)
            if (n.id != expected && n.id != step.node && stays_connected(site, step, n.id))
              candidates.push_back({f, i, n.id});
        }
      const auto pick = candidates[rng.below(static_cast<int>(candidates.size()))];
      const auto& flow = site.flows[pick.flow];
      const auto& step = flow.steps[pick.step];
      site.edge(step.node, step.widget)->to = pick.to;
      d.flow = flow.name;
      d.node = step.node;
      d.widget = step.widget;
      break;
    }
    case DefectPrinciple::reversal: {
      std::erase_if(site.edges, [](const Edge& e) { return e.kind == EdgeKind::back; });
      for (auto& n : site.nodes)
        for (auto& w : n.widgets)
          if (w.role == "back") w.inert = true;
      break;
    }
    case DefectPrinciple::memory: {
      auto& flow = site.flows[2];
      const int detail = flow.steps[2].node;
      const int review = node_with_role(site, NodeRole::review);
      static constexpr char kLetters[] = "ABCDEFGHJKLMNPQRSTUVWXYZ";
      std::string code;
      code += kLetters[rng.below(24)];
      code += kLetters[rng.below(24)];
      code += "-" + std::to_string(1000 + rng.below(9000));
      site.nodes[detail].text.push_back("Your reference code: " + code);

      auto& rn = site.nodes[review];
      const int commit = widget_with_role(rn, "commit");
      const int field = static_cast<int>(rn.widgets.size());
      rn.widgets.push_back({field, {48, 720, 600, 72}, "Reference code", WidgetKind::field, "code-field", false, false});
      rn.widgets[commit].rect = {48, 840, 480, 88};
      site.edges.push_back({review, field, EdgeKind::click, review, std::nullopt});
      site.edge(review, commit)->gate = Gate{field, code};
      for (std::size_t i = 0; i < flow.steps.size(); ++i)
        if (flow.steps[i].node == review && flow.steps[i].widget == commit) {
          flow.steps.insert(flow.steps.begin() + static_cast<std::ptrdiff_t>(i), FlowStep{review, field, code});
          break;
        }
      d.flow = flow.name;
      d.node = review;
      d.widget = field;
      break;
    }
    case DefectPrinciple::hierarchy: {
      auto& flow = site.flows[2];
      const bool on_detail = rng.below(2) == 0;
      const int node = on_detail ? flow.steps[2].node : node_with_role(site, NodeRole::review);
      auto& n = site.nodes[node];
      const int w = widget_with_role(n, on_detail ? "primary" : "commit");
      n.widgets[w].rect = {48, kViewportHeight + 400, 180, 36};
      n.page_height = std::max(n.page_height, kViewportHeight + 600);
      d.flow = flow.name;
      d.node = node;
      d.widget = w;
      break;
    }
  }

  site.parent_id = plain.site_id;
  site.site_id = plain.site_id + "+" + to_string(principle);
  site.defect = d;
  return site;
}

inline bool has_signature(const SimSite& site, DefectPrinciple principle) {
  using namespace defect_detail;
  switch (principle) {
    case DefectPrinciple::feedback:
      for (const auto& e : site.edges) {
        const auto& w = site.node(e.from).widgets.at(e.widget);
        if (e.kind == EdgeKind::click && e.to == e.from && w.kind != WidgetKind::field) return true;
      }
      return false;
    case DefectPrinciple::consistency: {
      std::map<std::string, std::set<std::pair<std::string, std::array<int, 4>>>> seen;
      for (const auto& n : site.nodes)
        for (const auto& w : n.widgets)
          if (w.role == "back" || w.role == "nav-home" || w.role == "nav-account")
            seen[w.role].insert({w.label, {w.rect.x, w.rect.y, w.rect.w, w.rect.h}});
      for (const auto& [role, variants] : seen)
        if (variants.size() > 1) return true;
      return false;
    }
    case DefectPrinciple::dialog:
      for (const auto& f : site.flows) {
        if (!f.expects_closure) continue;
        const auto role = site.node(f.terminal).role;
        if (role != NodeRole::closure && role != NodeRole::result) return true;
      }
      return false;
    case DefectPrinciple::prevention:
      for (const auto& e : site.edges) {
        const auto& w = site.node(e.from).widgets.at(e.widget);
        if (w.destructive && site.node(e.to).role != NodeRole::confirm) return true;
      }
      return false;
    case DefectPrinciple::control:
      for (const auto& f : site.flows)
        for (std::size_t i = 0; i < f.steps.size(); ++i) {
          if (f.steps[i].text) continue;
          const auto* e = site.edge(f.steps[i].node, f.steps[i].widget);
          if (e && e->to != f.steps[i].node && e->to != expected_after(f, i)) return true;
        }
      return false;
    case DefectPrinciple::reversal:
      return std::none_of(site.edges.begin(), site.edges.end(), [](const Edge& e) { return e.kind == EdgeKind::back; });
    case DefectPrinciple::memory:
      for (const auto& e : site.edges) {
        if (!e.gate) continue;
        const auto shown_on = [&](const Node& n) {
          for (const auto& line : n.text)
            if (line.find(e.gate->value) != std::string::npos) return true;
          for (const auto& w : n.widgets)
            if (w.label.find(e.gate->value) != std::string::npos) return true;
          return false;
        };
        if (shown_on(site.node(e.from))) continue;
        for (const auto& n : site.nodes)
          if (n.id != e.from && shown_on(n)) return true;
      }
      return false;
    case DefectPrinciple::hierarchy:
      for (const auto& f : site.flows)
        for (const auto& s : f.steps)
          if (site.node(s.node).widgets.at(s.widget).rect.y >= kViewportHeight) return true;
      return false;
  }
  return false;
}

}  // namespace uxpipe::sim
