#pragma once

// Deterministic state-graph websites.
//
// A site is a set of screens (nodes) holding widgets, plus click edges keyed
// by (node, widget). Generation is a pure function of (seed, template); the
// RNG is mt19937_64 with hand-rolled bounded draws so that graphs are
// identical across standard libraries.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "uxpipe/error.hpp"
#include "uxpipe/image.hpp"
#include "uxpipe/principles.hpp"
#include "uxpipe/rng.hpp"

namespace uxpipe::sim {

inline constexpr int kViewportWidth = 1920;
inline constexpr int kViewportHeight = 1080;

enum class Template { shop, booking, forum, jobs };
enum class WidgetKind { button, link, field, list_item };
enum class NodeRole { home, section, detail, form, review, closure, account, confirm, result };
enum class EdgeKind { click, back };

NLOHMANN_JSON_SERIALIZE_ENUM(Template, {{Template::shop, "shop"},
                                        {Template::booking, "booking"},
                                        {Template::forum, "forum"},
                                        {Template::jobs, "jobs"}})
NLOHMANN_JSON_SERIALIZE_ENUM(WidgetKind, {{WidgetKind::button, "button"},
                                          {WidgetKind::link, "link"},
                                          {WidgetKind::field, "field"},
                                          {WidgetKind::list_item, "list-item"}})
NLOHMANN_JSON_SERIALIZE_ENUM(NodeRole, {{NodeRole::home, "home"},
                                        {NodeRole::section, "section"},
                                        {NodeRole::detail, "detail"},
                                        {NodeRole::form, "form"},
                                        {NodeRole::review, "review"},
                                        {NodeRole::closure, "closure"},
                                        {NodeRole::account, "account"},
                                        {NodeRole::confirm, "confirm"},
                                        {NodeRole::result, "result"}})
NLOHMANN_JSON_SERIALIZE_ENUM(EdgeKind, {{EdgeKind::click, "click"}, {EdgeKind::back, "back"}})

inline std::string to_string(Template t) { return nlohmann::json(t).get<std::string>(); }

inline Template template_from_string(std::string_view s) {
  for (auto t : {Template::shop, Template::booking, Template::forum, Template::jobs})
    if (to_string(t) == s) return t;
  throw UsageError("unknown template: " + std::string(s));
}

struct Rect {
  int x = 0, y = 0, w = 0, h = 0;

  bool contains(int px, int py) const noexcept {
    return px >= x && px < x + w && py >= y && py < y + h;
  }
  int center_x() const noexcept { return x + w / 2; }
  int center_y() const noexcept { return y + h / 2; }
  int bottom() const noexcept { return y + h; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Widget {
  int id = 0;
  Rect rect;
  std::string label;
  WidgetKind kind = WidgetKind::button;
  std::string role;  // logical identity shared across screens, e.g. "back"
  bool inert = false;
  bool destructive = false;

  friend bool operator==(const Widget&, const Widget&) = default;
};

// Placeholder picture; `code` selects its tile pattern.
struct Picture {
  Rect rect;
  int code = 0;

  friend bool operator==(const Picture&, const Picture&) = default;
};

struct Node {
  int id = 0;
  std::string name;
  std::string title;
  NodeRole role = NodeRole::home;
  std::vector<std::string> text;
  std::vector<Widget> widgets;
  std::vector<Picture> pictures;
  int page_height = kViewportHeight;

  const Widget* widget_by_role(std::string_view r) const {
    for (const auto& w : widgets)
      if (w.role == r) return &w;
    return nullptr;
  }

  friend bool operator==(const Node&, const Node&) = default;
};

// An edge may be gated on a field holding an exact value.
struct Gate {
  int field = 0;
  std::string value;
  friend bool operator==(const Gate&, const Gate&) = default;
};

struct Edge {
  int from = 0;
  int widget = 0;
  EdgeKind kind = EdgeKind::click;
  int to = 0;
  std::optional<Gate> gate;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct FlowStep {
  int node = 0;
  int widget = 0;
  std::optional<std::string> text;  // click the field, then type this

  friend bool operator==(const FlowStep&, const FlowStep&) = default;
};

struct Flow {
  std::string name;
  std::vector<FlowStep> steps;
  int terminal = 0;
  bool expects_closure = false;

  friend bool operator==(const Flow&, const Flow&) = default;
};

struct Defect {
  DefectPrinciple principle = DefectPrinciple::feedback;
  std::uint64_t seed = 0;
  std::string flow;  // flow the mutation targeted, if any
  int node = -1;
  int widget = -1;

  friend bool operator==(const Defect&, const Defect&) = default;
};

struct SimSite {
  std::string site_id;
  std::uint64_t seed = 0;
  Template tmpl = Template::shop;
  std::string brand;
  Rgb accent;
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  int entry = 0;
  std::vector<Flow> flows;
  std::optional<Defect> defect;
  std::optional<std::string> parent_id;

  const Node& node(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes.size()))
      throw DataError("invalid node " + std::to_string(id) + " in site " + site_id);
    return nodes[id];
  }

  const Edge* edge(int from, int widget) const {
    for (const auto& e : edges)
      if (e.from == from && e.widget == widget) return &e;
    return nullptr;
  }
  Edge* edge(int from, int widget) {
    return const_cast<Edge*>(std::as_const(*this).edge(from, widget));
  }

  const Flow& flow(std::string_view name) const {
    for (const auto& f : flows)
      if (f.name == name) return f;
    throw DataError("site " + site_id + " has no flow '" + std::string(name) + "'");
  }

  friend bool operator==(const SimSite&, const SimSite&) = default;
};

// ---------------------------------------------------------------- pictures

// 12-bit codewords (4x3 tiles) with pairwise Hamming distance >= 5, picked
// greedily in numeric order.
inline const std::vector<int>& picture_codes() {
  static const std::vector<int> codes = [] {
    std::vector<int> out;
    for (int c = 0; c < (1 << 12); ++c) {
      bool ok = true;
      for (int o : out)
        if (std::popcount(static_cast<unsigned>(c ^ o)) < 5) {
          ok = false;
          break;
        }
      if (ok) out.push_back(c);
    }
    return out;
  }();
  return codes;
}

// ---------------------------------------------------------------- generation

namespace gen_detail {

struct Vocabulary {
  std::vector<std::string> brand_prefixes;
  std::vector<std::string> brand_suffixes;
  std::vector<std::string> sections;
  std::vector<std::string> items;
  std::string search_hint;
  std::string action;
  std::string form_title;
  std::array<std::string, 2> fields;
  std::array<std::string, 2> field_values;
  std::string submit;
  std::string review_title;
  std::string commit;
  std::string closure_title;
  std::string account_title;
  std::string destroy;
  std::string confirm_title;
  std::string confirm_yes;
  std::string result_title;
  std::string query;
};

inline Vocabulary vocabulary(Template t) {
  switch (t) {
    case Template::shop:
      return {{"Mega", "Blue", "Urban", "Prime", "Bright"},
              {"Mart", "Cart", "Store", "Bazaar", "Shop"},
              {"Electronics", "Books", "Home & Garden", "Toys", "Sports", "Fashion", "Grocery", "Beauty"},
              {"Wireless Headphones", "Desk Lamp", "Travel Mug", "Running Shoes", "Board Game",
               "Cookbook", "Yoga Mat", "Smart Watch", "Backpack", "Coffee Grinder"},
              "Search products",
              "Add to cart",
              "Shipping details",
              {"Full name", "Street address"},
              {"John Doe", "123 Main St"},
              "Continue to review",
              "Review your order",
              "Place order",
              "Order confirmed",
              "Account",
              "Delete account",
              "Delete your account?",
              "Yes, delete",
              "Account deleted",
              "headphones"};
    case Template::booking:
      return {{"Sky", "Sun", "Wander", "Go", "Happy"},
              {"Trips", "Stays", "Travel", "Booker", "Voyage"},
              {"Hotels", "Flights", "Car rentals", "Cruises", "Vacation homes", "Tours"},
              {"Harbor View Hotel", "City Loft", "Mountain Lodge", "Beach Resort", "Airport Inn",
               "Riverside Suites", "Old Town B&B", "Lakeside Cabin", "Desert Camp", "Garden Hostel"},
              "Where are you going?",
              "Book now",
              "Guest details",
              {"Guest name", "Check-in date"},
              {"John Doe", "2026-12-01"},
              "Continue",
              "Review booking",
              "Confirm booking",
              "Booking confirmed",
              "My trips",
              "Cancel reservation",
              "Cancel this reservation?",
              "Yes, cancel it",
              "Reservation cancelled",
              "lisbon"};
    case Template::forum:
      return {{"Open", "Dev", "Maker", "Talk", "Hobby"},
              {"Forum", "Hub", "Board", "Circle", "Commons"},
              {"General", "Announcements", "Help", "Off-topic", "Showcase", "Feedback"},
              {"Welcome thread", "Build log", "Weekly roundup", "Bug report", "Tips and tricks",
               "Introductions", "Show your setup", "Feature request", "Meetup plans", "FAQ"},
              "Search threads",
              "Reply",
              "Write a reply",
              {"Subject", "Message"},
              {"Thanks", "Great post!"},
              "Preview",
              "Preview reply",
              "Post reply",
              "Reply posted",
              "Profile",
              "Delete profile",
              "Delete your profile?",
              "Yes, delete",
              "Profile deleted",
              "setup"};
    case Template::jobs:
      return {{"Career", "Job", "Talent", "Work", "Hire"},
              {"Link", "Board", "Finder", "Path", "Base"},
              {"Engineering", "Design", "Marketing", "Sales", "Operations", "Finance"},
              {"Backend Engineer", "Product Designer", "Growth Marketer", "Account Executive",
               "Data Analyst", "Site Reliability Engineer", "UX Researcher", "Controller",
               "Support Lead", "QA Engineer"},
              "Search jobs",
              "Apply",
              "Application",
              {"Full name", "Email"},
              {"John Doe", "123@demo.com"},
              "Continue",
              "Review application",
              "Submit application",
              "Application submitted",
              "My applications",
              "Withdraw application",
              "Withdraw this application?",
              "Yes, withdraw",
              "Application withdrawn",
              "engineer"};
  }
  throw UsageError("unknown template");
}

inline constexpr std::array<Rgb, 8> kAccents = {{{34, 94, 168},
                                                 {196, 72, 40},
                                                 {30, 130, 76},
                                                 {120, 60, 160},
                                                 {200, 120, 20},
                                                 {20, 120, 140},
                                                 {170, 40, 90},
                                                 {70, 80, 100}}};

class Builder {
 public:
  explicit Builder(SimSite& site) : site_(site) {}

  int add_node(std::string name, std::string title, NodeRole role, std::vector<std::string> text = {}) {
    Node n;
    n.id = static_cast<int>(site_.nodes.size());
    n.name = std::move(name);
    n.title = std::move(title);
    n.role = role;
    n.text = std::move(text);
    n.pictures.push_back({Rect{}, picture_codes().at(n.id % picture_codes().size())});
    site_.nodes.push_back(std::move(n));
    return site_.nodes.back().id;
  }

  int add_widget(int node, Rect rect, std::string label, WidgetKind kind, std::string role,
                 bool destructive = false) {
    auto& n = site_.nodes[node];
    Widget w{static_cast<int>(n.widgets.size()), rect, std::move(label), kind, std::move(role), false, destructive};
    n.widgets.push_back(std::move(w));
    return n.widgets.back().id;
  }

  void link(int from, int widget, int to, EdgeKind kind = EdgeKind::click) {
    site_.edges.push_back({from, widget, kind, to, std::nullopt});
  }

  void picture(int node, Rect rect) { site_.nodes[node].pictures.front().rect = rect; }

 private:
  SimSite& site_;
};

}  // namespace gen_detail

inline SimSite generate_site(std::uint64_t seed, Template tmpl) {
  using namespace gen_detail;
  const auto vocab = vocabulary(tmpl);
  Rng rng(seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(tmpl) + 1);

  SimSite site;
  site.seed = seed;
  site.tmpl = tmpl;
  site.site_id = to_string(tmpl) + "-" + std::to_string(seed);
  site.brand = rng.pick(vocab.brand_prefixes) + rng.pick(vocab.brand_suffixes);
  site.accent = kAccents[rng.below(static_cast<int>(kAccents.size()))];

  auto sections = vocab.sections;
  rng.shuffle(sections);
  sections.resize(2 + rng.below(3));
  auto items = vocab.items;
  rng.shuffle(items);

  Builder b(site);
  const int S = static_cast<int>(sections.size());

  // Screens.
  const int home = b.add_node("home", "Welcome to " + site.brand, NodeRole::home,
                              {"Find what you need in " + std::to_string(S) + " sections."});
  site.nodes[home].page_height = 1700;
  std::vector<int> section_nodes, first_detail;
  std::vector<std::vector<int>> details(S);
  std::size_t next_item = 0;
  for (int s = 0; s < S; ++s) {
    const int count = 1 + rng.below(2);
    section_nodes.push_back(b.add_node("section-" + std::to_string(s), sections[s], NodeRole::section,
                                       {std::to_string(count) + " results"}));
    for (int i = 0; i < count; ++i) {
      const auto& item = items[next_item++ % items.size()];
      const int price = 10 + rng.below(490);
      details[s].push_back(b.add_node("detail-" + std::to_string(s) + "-" + std::to_string(i), item,
                                      NodeRole::detail,
                                      {"Price: $" + std::to_string(price) + ".99", "Available now",
                                       "Rated " + std::to_string(3 + rng.below(3)) + " out of 5"}));
    }
  }
  const int tx_section = rng.below(S);
  const int tx_detail = details[tx_section].front();
  const int form = b.add_node("form", vocab.form_title, NodeRole::form, {"All fields are required."});
  const int review = b.add_node("review", vocab.review_title, NodeRole::review,
                                {"Please check the details below before you continue."});
  const int closure = b.add_node("closure", vocab.closure_title, NodeRole::closure,
                                 {"Thank you! A confirmation has been sent to your email."});
  const int account = b.add_node("account", vocab.account_title, NodeRole::account,
                                 {"Signed in as John Doe", "Member since 2021"});
  const int confirm = b.add_node("confirm", vocab.confirm_title, NodeRole::confirm,
                                 {"This cannot be undone."});
  const int result = b.add_node("result", vocab.result_title, NodeRole::result,
                                {"You can close this page."});
  site.entry = home;

  // Shared chrome.
  const Rect kNavHome{1380, 24, 200, 48}, kNavAccount{1620, 24, 260, 48}, kBack{48, 120, 200, 56};
  for (auto& n : site.nodes) {
    if (n.id != home) b.link(n.id, b.add_widget(n.id, kNavHome, "Home", WidgetKind::link, "nav-home"), home);
    if (n.id != account)
      b.link(n.id, b.add_widget(n.id, kNavAccount, vocab.account_title, WidgetKind::link, "nav-account"), account);
  }
  const auto back = [&](int node, int to) {
    b.link(node, b.add_widget(node, kBack, "< Back", WidgetKind::button, "back"), to, EdgeKind::back);
  };

  // Home.
  const int search_field = b.add_widget(home, {48, 300, 1100, 64}, vocab.search_hint, WidgetKind::field, "search-field");
  b.link(home, search_field, home);
  const int search_go = b.add_widget(home, {1180, 300, 240, 64}, "Search", WidgetKind::button, "search-submit");
  b.link(home, search_go, section_nodes[0]);
  b.picture(home, {48, 400, 1824, 280});
  std::vector<int> cards;
  const int card_w = (1824 - (S - 1) * 24) / S;
  for (int s = 0; s < S; ++s) {
    cards.push_back(b.add_widget(home, {48 + s * (card_w + 24), 720, card_w, 200}, sections[s],
                                 WidgetKind::link, "section-link"));
    b.link(home, cards.back(), section_nodes[s]);
  }

  // Sections and details.
  std::vector<std::vector<int>> item_widgets(S);
  for (int s = 0; s < S; ++s) {
    const int sn = section_nodes[s];
    back(sn, home);
    b.picture(sn, {1300, 300, 572, 600});
    for (std::size_t i = 0; i < details[s].size(); ++i) {
      const int d = details[s][i];
      item_widgets[s].push_back(b.add_widget(sn, {48, 300 + static_cast<int>(i) * 150, 1200, 120},
                                             site.nodes[d].title, WidgetKind::list_item, "item"));
      b.link(sn, item_widgets[s].back(), d);
      back(d, sn);
      b.picture(d, {48, 300, 900, 640});
    }
  }
  std::vector<int> primary_of(site.nodes.size(), -1);
  for (int s = 0; s < S; ++s)
    for (int d : details[s]) {
      primary_of[d] = b.add_widget(d, {1000, 760, 480, 88}, vocab.action, WidgetKind::button, "primary");
      b.link(d, primary_of[d], form);
    }

  // Transaction: form -> review -> closure.
  back(form, tx_detail);
  b.picture(form, {1200, 300, 672, 500});
  const int f0 = b.add_widget(form, {48, 320, 1000, 72}, vocab.fields[0], WidgetKind::field, "field-0");
  const int f1 = b.add_widget(form, {48, 460, 1000, 72}, vocab.fields[1], WidgetKind::field, "field-1");
  b.link(form, f0, form);
  b.link(form, f1, form);
  const int submit = b.add_widget(form, {48, 640, 420, 88}, vocab.submit, WidgetKind::button, "submit");
  b.link(form, submit, review);

  back(review, form);
  b.picture(review, {48, 300, 1400, 360});
  const int commit = b.add_widget(review, {48, 720, 480, 88}, vocab.commit, WidgetKind::button, "commit");
  b.link(review, commit, closure);

  back(closure, home);
  b.picture(closure, {360, 280, 1200, 440});
  b.link(closure, b.add_widget(closure, {760, 820, 400, 64}, "Back to home", WidgetKind::link, "home-cta"), home);

  // Account removal: account -> confirm -> result.
  back(account, home);
  b.picture(account, {48, 300, 300, 300});
  const int destroy = b.add_widget(account, {400, 520, 480, 88}, vocab.destroy, WidgetKind::button, "destroy", true);
  b.link(account, destroy, confirm);

  back(confirm, account);
  b.picture(confirm, {1460, 300, 412, 420});
  const int yes = b.add_widget(confirm, {360, 600, 420, 88}, vocab.confirm_yes, WidgetKind::button, "confirm-yes");
  b.link(confirm, yes, result);
  const int no = b.add_widget(confirm, {860, 600, 360, 88}, "Cancel", WidgetKind::button, "confirm-no");
  b.link(confirm, no, account);

  back(result, home);
  b.picture(result, {900, 260, 972, 520});
  b.link(result, b.add_widget(result, {48, 820, 400, 64}, "Back to home", WidgetKind::link, "home-cta"), home);

  // Flows.
  const auto nav_account = *site.nodes[home].widget_by_role("nav-account");
  site.flows.push_back({"browse", {{home, cards[0], {}}, {section_nodes[0], item_widgets[0][0], {}}},
                        details[0][0], false});
  site.flows.push_back({"search", {{home, search_field, vocab.query}, {home, search_go, {}}}, section_nodes[0], false});
  site.flows.push_back({"transaction",
                        {{home, cards[tx_section], {}},
                         {section_nodes[tx_section], item_widgets[tx_section][0], {}},
                         {tx_detail, primary_of[tx_detail], {}},
                         {form, f0, vocab.field_values[0]},
                         {form, f1, vocab.field_values[1]},
                         {form, submit, {}},
                         {review, commit, {}}},
                        closure,
                        true});
  site.flows.push_back({"account", {{home, nav_account.id, {}}, {account, destroy, {}}, {confirm, yes, {}}}, result, true});
  return site;
}

}  // namespace uxpipe::sim

namespace uxpipe {
inline void to_json(nlohmann::json& j, const Rgb& c) { j = nlohmann::json::array({c.r, c.g, c.b}); }
inline void from_json(const nlohmann::json& j, Rgb& c) {
  c = {j.at(0).get<std::uint8_t>(), j.at(1).get<std::uint8_t>(), j.at(2).get<std::uint8_t>()};
}
}  // namespace uxpipe

namespace uxpipe::sim {

// ---------------------------------------------------------------- serialization

inline void to_json(nlohmann::json& j, const Rect& r) { j = {r.x, r.y, r.w, r.h}; }
inline void from_json(const nlohmann::json& j, Rect& r) {
  r = {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Widget, id, rect, label, kind, role, inert, destructive)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Picture, rect, code)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Node, id, name, title, role, text, widgets, pictures, page_height)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Gate, field, value)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Defect, principle, seed, flow, node, widget)

inline void to_json(nlohmann::json& j, const Edge& e) {
  j = {{"from", e.from}, {"widget", e.widget}, {"kind", e.kind}, {"to", e.to}};
  if (e.gate) j["gate"] = *e.gate;
}
inline void from_json(const nlohmann::json& j, Edge& e) {
  e.from = j.at("from").get<int>();
  e.widget = j.at("widget").get<int>();
  e.kind = j.at("kind").get<EdgeKind>();
  e.to = j.at("to").get<int>();
  e.gate = j.contains("gate") ? std::optional<Gate>(j.at("gate").get<Gate>()) : std::nullopt;
}
inline void to_json(nlohmann::json& j, const FlowStep& s) {
  j = {{"node", s.node}, {"widget", s.widget}};
  if (s.text) j["text"] = *s.text;
}
inline void from_json(const nlohmann::json& j, FlowStep& s) {
  s.node = j.at("node").get<int>();
  s.widget = j.at("widget").get<int>();
  s.text = j.contains("text") ? std::optional<std::string>(j.at("text").get<std::string>()) : std::nullopt;
}
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Flow, name, steps, terminal, expects_closure)

inline void to_json(nlohmann::json& j, const SimSite& s) {
  j = {{"site_id", s.site_id}, {"seed", s.seed},   {"template", s.tmpl}, {"brand", s.brand},
       {"accent", s.accent},   {"nodes", s.nodes}, {"edges", s.edges},   {"entry", s.entry},
       {"flows", s.flows}};
  j["defect"] = s.defect ? nlohmann::json(*s.defect) : nlohmann::json(nullptr);
  j["parent_id"] = s.parent_id ? nlohmann::json(*s.parent_id) : nlohmann::json(nullptr);
}
inline void from_json(const nlohmann::json& j, SimSite& s) {
  s.site_id = j.at("site_id").get<std::string>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.tmpl = j.at("template").get<Template>();
  s.brand = j.at("brand").get<std::string>();
  s.accent = j.at("accent").get<Rgb>();
  s.nodes = j.at("nodes").get<std::vector<Node>>();
  s.edges = j.at("edges").get<std::vector<Edge>>();
  s.entry = j.at("entry").get<int>();
  s.flows = j.at("flows").get<std::vector<Flow>>();
  s.defect = j.at("defect").is_null() ? std::nullopt : std::optional<Defect>(j.at("defect").get<Defect>());
  s.parent_id = j.at("parent_id").is_null() ? std::nullopt
                                            : std::optional<std::string>(j.at("parent_id").get<std::string>());
}

inline std::string serialize_site(const SimSite& s) { return nlohmann::json(s).dump(1) + "\n"; }

inline SimSite deserialize_site(std::string_view text) {
  try {
    return nlohmann::json::parse(text).get<SimSite>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed site file: ") + e.what());
  }
}

// ---------------------------------------------------------------- graph queries

inline std::vector<int> reachable_from(const SimSite& site, int start) {
  std::vector<char> seen(site.nodes.size(), 0);
  std::vector<int> order{start}, queue{start};
  seen[start] = 1;
  for (std::size_t q = 0; q < queue.size(); ++q)
    for (const auto& e : site.edges)
      if (e.from == queue[q] && !seen[e.to]) {
        seen[e.to] = 1;
        queue.push_back(e.to);
        order.push_back(e.to);
      }
  return order;
}

inline bool is_connected_from_entry(const SimSite& site) {
  return reachable_from(site, site.entry).size() == site.nodes.size();
}

// Follows a flow's widget sequence from the entry using graph edges only
// (gates satisfied by the flow's typed text). Returns the final node, or
// nothing if a step is not on the current node or has no edge.
inline std::optional<int> walk_flow(const SimSite& site, const Flow& flow) {
  int at = site.entry;
  std::vector<std::pair<int, std::string>> typed;  // (field, value) on current node
  for (const auto& step : flow.steps) {
    if (step.node != at) return std::nullopt;
    const auto& w = site.node(at).widgets.at(step.widget);
    if (step.text) {
      if (w.kind != WidgetKind::field) return std::nullopt;
      typed.emplace_back(step.widget, *step.text);
      continue;
    }
    const auto* e = site.edge(at, step.widget);
    if (!e || w.inert) return std::nullopt;
    if (e->gate) {
      const bool ok = std::any_of(typed.begin(), typed.end(),
                                  [&](const auto& t) { return t.first == e->gate->field && t.second == e->gate->value; });
      if (!ok) return std::nullopt;
    }
    if (e->to != at) typed.clear();
    at = e->to;
  }
  return at;
}

}  // namespace uxpipe::sim
