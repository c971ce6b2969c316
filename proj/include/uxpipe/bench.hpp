#pragma once

// Preference-pair benchmarks and their metrics: average precision over
// sites, pairwise agreement, mean score gap, Krippendorff's alpha and the
// per-principle critique precision table.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uxpipe/error.hpp"
#include "uxpipe/policy.hpp"
#include "uxpipe/principles.hpp"
#include "uxpipe/reward.hpp"
#include "uxpipe/rng.hpp"

namespace uxpipe {

enum class Side { left, right, tie };
enum class LabelSource { ground_truth, human };

NLOHMANN_JSON_SERIALIZE_ENUM(Side, {{Side::left, "left"}, {Side::right, "right"}, {Side::tie, "tie"}})
NLOHMANN_JSON_SERIALIZE_ENUM(LabelSource, {{LabelSource::ground_truth, "ground_truth"}, {LabelSource::human, "human"}})

struct PreferencePair {
  std::string pair_id;
  std::string left_site;
  std::string right_site;
  Side label = Side::left;
  LabelSource label_source = LabelSource::ground_truth;

  const std::string& chosen() const { return label == Side::left ? left_site : right_site; }
  const std::string& rejected() const { return label == Side::left ? right_site : left_site; }

  friend bool operator==(const PreferencePair&, const PreferencePair&) = default;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PreferencePair, pair_id, left_site, right_site, label, label_source)

// One line of a dataset manifest. Plain sites have no parent.
struct ManifestEntry {
  std::string site_id;
  std::string source;
  std::optional<std::string> parent;
};

using ScoreTable = std::map<std::string, std::optional<double>>;

namespace bench_detail {

template <class F>
void for_each_jsonl(std::string_view text, F&& f) {
  std::istringstream in{std::string(text)};
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      f(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(n) + ": " + e.what());
    }
  }
}

inline std::optional<double> lookup(const ScoreTable& scores, const std::string& site) {
  const auto it = scores.find(site);
  return it == scores.end() ? std::nullopt : it->second;
}

}  // namespace bench_detail

inline std::vector<ManifestEntry> parse_manifest(std::string_view jsonl) {
  std::vector<ManifestEntry> out;
  bench_detail::for_each_jsonl(jsonl, [&](const nlohmann::json& j) {
    ManifestEntry e;
    e.site_id = j.at("site_id").get<std::string>();
    e.source = j.value("source", e.site_id);
    if (j.contains("parent") && !j["parent"].is_null()) e.parent = j["parent"].get<std::string>();
    out.push_back(std::move(e));
  });
  return out;
}

inline std::vector<PreferencePair> parse_pairs(std::string_view jsonl) {
  std::vector<PreferencePair> out;
  bench_detail::for_each_jsonl(jsonl, [&](const nlohmann::json& j) { out.push_back(j.get<PreferencePair>()); });
  for (const auto& p : out)
    if (p.left_site == p.right_site) throw DataError("pair " + p.pair_id + " compares a site with itself");
  return out;
}

inline std::string pairs_to_jsonl(std::span<const PreferencePair> pairs) {
  std::string out;
  for (const auto& p : pairs) out += nlohmann::json(p).dump() + "\n";
  return out;
}

// Records {"site_id", "predicted_score"|"score"}; several records for one site
// are averaged over the scores present.
inline ScoreTable parse_scores(std::string_view jsonl) {
  std::map<std::string, std::pair<double, int>> acc;
  bench_detail::for_each_jsonl(jsonl, [&](const nlohmann::json& j) {
    const auto site = j.at("site_id").get<std::string>();
    auto& [sum, n] = acc[site];
    const auto& v = j.contains("predicted_score") ? j["predicted_score"] : j.value("score", nlohmann::json());
    if (!v.is_null()) {
      sum += v.get<double>();
      ++n;
    }
  });
  ScoreTable out;
  for (const auto& [site, a] : acc)
    out[site] = a.second ? std::optional<double>(a.first / a.second) : std::nullopt;
  return out;
}

// One plain site per source paired against `variants` of its defect
// variants, drawn with the seed; the plain side is randomized.
inline std::vector<PreferencePair> build_benchmark(std::span<const ManifestEntry> manifest, std::uint64_t seed,
                                                   int variants = 4) {
  struct Group {
    std::optional<std::string> plain;
    std::vector<std::string> defects;
  };
  std::map<std::string, Group> groups;
  for (const auto& e : manifest) {
    auto& g = groups[e.source];
    if (e.parent) {
      g.defects.push_back(e.site_id);
    } else {
      if (g.plain) throw DataError("source " + e.source + " has more than one plain site");
      g.plain = e.site_id;
    }
  }
  Rng rng(seed);
  std::vector<PreferencePair> pairs;
  for (auto& [source, g] : groups) {
    if (!g.plain) throw DataError("source " + source + " has no plain site");
    if (static_cast<int>(g.defects.size()) < variants)
      throw DataError("source " + source + " has " + std::to_string(g.defects.size()) + " defect variants, need " +
                      std::to_string(variants));
    std::sort(g.defects.begin(), g.defects.end());
    rng.shuffle(g.defects);
    for (int k = 0; k < variants; ++k) {
      PreferencePair p;
      p.pair_id = source + "#" + std::to_string(k + 1);
      const bool plain_left = rng.below(2) == 0;
      p.left_site = plain_left ? *g.plain : g.defects[k];
      p.right_site = plain_left ? g.defects[k] : *g.plain;
      p.label = plain_left ? Side::left : Side::right;
      pairs.push_back(std::move(p));
    }
  }
  return pairs;
}

inline std::vector<std::string> benchmark_sites(std::span<const PreferencePair> pairs) {
  std::set<std::string> s;
  for (const auto& p : pairs) {
    s.insert(p.left_site);
    s.insert(p.right_site);
  }
  return {s.begin(), s.end()};
}

// The higher score wins; equal scores are wrong, a missing score votes for
// the other side.
inline bool judge_pair(const PreferencePair& pair, std::optional<double> left, std::optional<double> right) {
  if (pair.label == Side::tie) throw DataError("pair " + pair.pair_id + " is labeled tie and cannot be judged");
  Side vote;
  if (left && right) {
    if (*left == *right) return false;
    vote = *left > *right ? Side::left : Side::right;
  } else if (left) {
    vote = Side::left;
  } else if (right) {
    vote = Side::right;
  } else {
    return false;
  }
  return vote == pair.label;
}

inline std::optional<double> agreement_rate(std::span<const PreferencePair> pairs, const ScoreTable& scores) {
  int n = 0, correct = 0;
  for (const auto& p : pairs) {
    if (p.label == Side::tie) continue;
    ++n;
    correct += judge_pair(p, bench_detail::lookup(scores, p.left_site), bench_detail::lookup(scores, p.right_site));
  }
  if (n == 0) return std::nullopt;
  return static_cast<double>(correct) / n;
}

// Mean of chosen minus rejected over pairs where both scores exist.
inline std::optional<double> mean_delta(std::span<const PreferencePair> pairs, const ScoreTable& scores) {
  double sum = 0;
  int n = 0;
  for (const auto& p : pairs) {
    if (p.label == Side::tie) continue;
    const auto c = bench_detail::lookup(scores, p.chosen());
    const auto r = bench_detail::lookup(scores, p.rejected());
    if (!c || !r) continue;
    sum += *c - *r;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

struct ScoredSite {
  std::string site_id;
  std::optional<double> score;
  bool chosen = false;
};

inline constexpr double kMissingScore = -1.0;

// Average precision with chosen sites as positives, ranked by descending
// score. Sites with equal scores form one group whose positives all take the
// group's pooled precision.
inline double average_precision(std::span<const ScoredSite> sites) {
  std::vector<std::pair<double, bool>> v;
  int positives = 0;
  for (const auto& s : sites) {
    v.emplace_back(s.score.value_or(kMissingScore), s.chosen);
    positives += s.chosen;
  }
  if (positives == 0 || positives == static_cast<int>(v.size()))
    throw DataError("average precision needs both chosen and rejected sites");
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double ap = 0;
  int tp_cum = 0, n_cum = 0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    int tp = 0;
    while (j < v.size() && v[j].first == v[i].first) tp += v[j++].second;
    tp_cum += tp;
    n_cum += static_cast<int>(j - i);
    ap += static_cast<double>(tp) / positives * (static_cast<double>(tp_cum) / n_cum);
    i = j;
  }
  return ap;
}

// Sites of the non-tie pairs with their role, each (site, role) once.
inline std::vector<ScoredSite> scored_sites(std::span<const PreferencePair> pairs, const ScoreTable& scores) {
  std::set<std::pair<std::string, bool>> seen;
  std::vector<ScoredSite> out;
  for (const auto& p : pairs) {
    if (p.label == Side::tie) continue;
    for (const auto& [site, chosen] : {std::pair{p.chosen(), true}, std::pair{p.rejected(), false}})
      if (seen.insert({site, chosen}).second) out.push_back({site, bench_detail::lookup(scores, site), chosen});
  }
  return out;
}

inline double auc_pr(std::span<const PreferencePair> pairs, const ScoreTable& scores) {
  const auto sites = scored_sites(pairs, scores);
  return average_precision(sites);
}

// Pair-level variant: one item per pair scored left minus right, positive
// when the left site is the chosen one.
inline double pair_auc_pr(std::span<const PreferencePair> pairs, const ScoreTable& scores) {
  std::vector<ScoredSite> items;
  for (const auto& p : pairs) {
    if (p.label == Side::tie) continue;
    const double l = bench_detail::lookup(scores, p.left_site).value_or(kMissingScore);
    const double r = bench_detail::lookup(scores, p.right_site).value_or(kMissingScore);
    items.push_back({p.pair_id, l - r, p.label == Side::left});
  }
  return average_precision(items);
}

// Nominal Krippendorff's alpha from a rater x item matrix with missing
// entries. Empty when every pairable value is the same category (no
// expected disagreement).
using Rating = std::optional<std::string>;

inline std::optional<double> krippendorff_alpha(const std::vector<std::vector<Rating>>& by_rater) {
  std::size_t items = 0;
  for (const auto& r : by_rater) items = std::max(items, r.size());
  std::map<std::pair<std::string, std::string>, double> o;
  std::map<std::string, double> n_c;
  double n = 0;
  for (std::size_t u = 0; u < items; ++u) {
    std::vector<std::string> values;
    for (const auto& r : by_rater)
      if (u < r.size() && r[u]) values.push_back(*r[u]);
    const auto m = values.size();
    if (m < 2) continue;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        if (i != j) o[{values[i], values[j]}] += 1.0 / static_cast<double>(m - 1);
  }
  if (o.empty()) throw DataError("krippendorff_alpha: no item has two or more ratings");
  for (const auto& [ck, w] : o) {
    n_c[ck.first] += w;
    n += w;
  }
  double observed = 0, expected = 0;
  for (const auto& [ck, w] : o)
    if (ck.first != ck.second) observed += w;
  for (const auto& [c, nc] : n_c)
    for (const auto& [k, nk] : n_c)
      if (c != k) expected += nc * nk;
  if (expected == 0) return std::nullopt;
  return 1.0 - (n - 1) * observed / expected;
}

// ---------------------------------------------------------------- critiques

enum class Verdict { tp, fp };
NLOHMANN_JSON_SERIALIZE_ENUM(Verdict, {{Verdict::tp, "TP"}, {Verdict::fp, "FP"}})

struct CritiqueRecord {
  std::string site_id;
  std::string issue;
  std::optional<DefectPrinciple> category;
  std::optional<Verdict> verified;
};

struct CritiqueCell {
  int tp = 0, fp = 0;

  std::optional<double> precision() const {
    if (tp + fp == 0) return std::nullopt;
    return static_cast<double>(tp) / (tp + fp);
  }
  std::string text() const {
    const auto p = precision();
    return p ? std::to_string(std::lround(*p * 100)) + "%" : "--";
  }
};

// Rows in principle order; column 0 is plain sites, column 1 defect-augmented.
struct CritiqueTable {
  std::array<std::array<CritiqueCell, 2>, 8> cells{};

  CritiqueCell& at(DefectPrinciple p, bool augmented) { return cells[static_cast<int>(p)][augmented]; }
  const CritiqueCell& at(DefectPrinciple p, bool augmented) const { return cells[static_cast<int>(p)][augmented]; }
};

inline CritiqueTable critique_report(std::span<const CritiqueRecord> records) {
  CritiqueTable t;
  for (const auto& r : records) {
    if (!r.category || !r.verified) continue;
    auto& cell = t.at(*r.category, parent_site(r.site_id).has_value());
    (*r.verified == Verdict::tp ? cell.tp : cell.fp) += 1;
  }
  return t;
}

using IssueClassifier = std::function<std::optional<DefectPrinciple>(std::string_view issue)>;

inline const std::array<std::vector<std::string>, 8>& principle_keywords() {
  static const std::array<std::vector<std::string>, 8> k = {{
      {"inconsistent", "consistency", "different label", "changes position", "moved", "renamed", "varies",
       "different place"},
      {"no feedback", "did not change", "does nothing", "did nothing", "non-responsive", "nothing happened",
       "unresponsive", "no response", "not loading", "stuck", "no effect"},
      {"closure", "no success message", "no confirmation page", "never confirmed", "unclear whether",
       "unclear if", "ended abruptly", "back on the home page"},
      {"destructive", "without asking", "no warning", "irreversible", "accidentally", "deleted immediately",
       "without confirmation", "no chance to confirm"},
      {"redirect", "unexpected page", "took me to", "wrong page", "unexpectedly", "lost control"},
      {"back button", "cannot go back", "can't go back", "undo", "no way back", "cannot return", "go back"},
      {"remember", "memorize", "recall", "code", "not displayed", "not shown"},
      {"below the fold", "hard to find", "scroll", "too small", "hidden", "not prominent", "buried", "tiny"},
  }};
  return k;
}

// Picks the principle with the most keyword hits (earlier principle on a
// tie); nothing when no keyword matches.
inline std::optional<DefectPrinciple> keyword_classify(std::string_view issue) {
  std::string lower(issue);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  int best = 0;
  std::optional<DefectPrinciple> out;
  for (auto p : kAllPrinciples) {
    int hits = 0;
    for (const auto& k : principle_keywords()[static_cast<int>(p)])
      for (auto pos = lower.find(k); pos != std::string::npos; pos = lower.find(k, pos + 1)) ++hits;
    if (hits > best) {
      best = hits;
      out = p;
    }
  }
  return out;
}

inline constexpr std::string_view kClassifierPrompt =
    "Classify the usability issue below into exactly one of these interface design principles: "
    "consistency, feedback, dialog, prevention, control, reversal, memory, hierarchy. "
    "Reply with the single principle name.\n\nIssue: ";

// Classifier backed by a chat model; the first principle name in the reply wins.
inline IssueClassifier model_classifier(Policy& model) {
  return [&model](std::string_view issue) -> std::optional<DefectPrinciple> {
    const std::vector<ChatMessage> msgs = {ChatMessage::text("user", std::string(kClassifierPrompt) + std::string(issue))};
    std::string reply = model.generate(msgs);
    for (auto& c : reply) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::optional<DefectPrinciple> best;
    std::size_t best_pos = std::string::npos;
    for (auto p : kAllPrinciples) {
      const auto pos = reply.find(to_string(p));
      if (pos < best_pos) {
        best_pos = pos;
        best = p;
      }
    }
    return best;
  };
}

// Bulleted or numbered lines of an assessment, without the markers.
inline std::vector<std::string> extract_issues(std::string_view assessment) {
  std::vector<std::string> out;
  std::istringstream in{std::string(assessment)};
  std::string line;
  while (std::getline(in, line)) {
    auto s = std::string(action_detail::trim(line));
    if (s.rfind("Action:", 0) == 0) continue;
    std::size_t skip = 0;
    if (s.rfind("- ", 0) == 0 || s.rfind("* ", 0) == 0) {
      skip = 2;
    } else if (s.rfind("\xE2\x80\xA2 ", 0) == 0) {
      skip = 4;
    } else {
      std::size_t d = 0;
      while (d < s.size() && std::isdigit(static_cast<unsigned char>(s[d]))) ++d;
      if (d > 0 && d + 1 < s.size() && (s[d] == '.' || s[d] == ')') && s[d + 1] == ' ') skip = d + 2;
    }
    if (skip == 0) continue;
    auto issue = std::string(action_detail::trim(std::string_view(s).substr(skip)));
    if (!issue.empty()) out.push_back(std::move(issue));
  }
  return out;
}

inline std::vector<CritiqueRecord> parse_critiques(std::string_view jsonl, const IssueClassifier& classify) {
  std::vector<CritiqueRecord> out;
  bench_detail::for_each_jsonl(jsonl, [&](const nlohmann::json& j) {
    CritiqueRecord r;
    r.site_id = j.at("site_id").get<std::string>();
    r.issue = j.value("issue", "");
    if (j.contains("category") && !j["category"].is_null())
      r.category = principle_from_string(j["category"].get<std::string>());
    else if (classify)
      r.category = classify(r.issue);
    if (j.contains("verified") && !j["verified"].is_null()) r.verified = j["verified"].get<Verdict>();
    out.push_back(std::move(r));
  });
  return out;
}

// ---------------------------------------------------------------- report

struct BenchmarkReport {
  std::optional<double> auc_pr;
  std::optional<double> pair_auc_pr;
  std::optional<double> agreement_rate;
  std::optional<double> mean_delta;
  int n_pairs = 0;
  int n_tie = 0;
  int n_sites = 0;
  int n_missing_scores = 0;
  CritiqueTable critiques;
  bool has_critiques = false;
};

inline BenchmarkReport evaluate_benchmark(std::span<const PreferencePair> pairs, const ScoreTable& scores,
                                          std::span<const CritiqueRecord> critiques = {}) {
  BenchmarkReport r;
  for (const auto& p : pairs) (p.label == Side::tie ? r.n_tie : r.n_pairs) += 1;
  const auto sites = benchmark_sites(pairs);
  r.n_sites = static_cast<int>(sites.size());
  for (const auto& s : sites) r.n_missing_scores += !bench_detail::lookup(scores, s).has_value();
  try {
    r.auc_pr = auc_pr(pairs, scores);
    r.pair_auc_pr = pair_auc_pr(pairs, scores);
  } catch (const DataError&) {
    // single-class input: metric undefined
  }
  r.agreement_rate = agreement_rate(pairs, scores);
  r.mean_delta = mean_delta(pairs, scores);
  r.critiques = critique_report(critiques);
  r.has_critiques = !critiques.empty();
  return r;
}

inline std::string format_report(const BenchmarkReport& r) {
  char buf[128];
  const auto num = [&](std::optional<double> v, const char* fmt) -> std::string {
    if (!v) return "n/a";
    std::snprintf(buf, sizeof buf, fmt, *v);
    return buf;
  };
  std::string out;
  out += "Benchmark\n";
  out += "pairs           " + std::to_string(r.n_pairs) + "\n";
  out += "tie pairs       " + std::to_string(r.n_tie) + "\n";
  out += "sites           " + std::to_string(r.n_sites) + "\n";
  out += "missing scores  " + std::to_string(r.n_missing_scores) + "\n";
  out += "\n";
  out += "Model       AUC     Pair AUC  Agreement  Delta\n";
  out += "scores      " + num(r.auc_pr, "%.4f") + "  " + num(r.pair_auc_pr, "%.4f") + "    " +
         num(r.agreement_rate ? std::optional(*r.agreement_rate * 100) : std::nullopt, "%.2f%%") + "    " +
         num(r.mean_delta, "%+.2f") + "\n";
  if (r.has_critiques) {
    out += "\nCritique precision\n";
    out += "Category      Plain TP  Plain FP  Plain  D.A. TP  D.A. FP  D.A.\n";
    for (auto p : kAllPrinciples) {
      const auto& a = r.critiques.at(p, false);
      const auto& b = r.critiques.at(p, true);
      std::snprintf(buf, sizeof buf, "%-12s  %8d  %8d  %5s  %7d  %7d  %4s\n", display_name(p).c_str(), a.tp, a.fp,
                    a.text().c_str(), b.tp, b.fp, b.text().c_str());
      out += buf;
    }
  }
  return out;
}

inline nlohmann::json report_json(const BenchmarkReport& r) {
  const auto opt = [](std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j = {{"n_pairs", r.n_pairs},
                      {"n_tie", r.n_tie},
                      {"n_sites", r.n_sites},
                      {"n_missing_scores", r.n_missing_scores},
                      {"auc_pr", opt(r.auc_pr)},
                      {"pair_auc_pr", opt(r.pair_auc_pr)},
                      {"agreement_rate", opt(r.agreement_rate)},
                      {"mean_delta", opt(r.mean_delta)}};
  if (r.has_critiques) {
    nlohmann::json rows = nlohmann::json::object();
    for (auto p : kAllPrinciples) {
      const auto& a = r.critiques.at(p, false);
      const auto& b = r.critiques.at(p, true);
      rows[to_string(p)] = {{"plain", {{"tp", a.tp}, {"fp", a.fp}, {"precision", a.text()}}},
                            {"defect_augmented", {{"tp", b.tp}, {"fp", b.fp}, {"precision", b.text()}}}};
    }
    j["critique_precision"] = rows;
  }
  return j;
}

}  // namespace uxpipe
