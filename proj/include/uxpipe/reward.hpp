#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uxpipe/error.hpp"
#include "uxpipe/nav_quality.hpp"

namespace uxpipe {

inline constexpr double kDefaultMargin = 15.0;

// Score from the last non-empty line, which must read "Action: score(n)".
inline std::optional<int> parse_score(std::string_view text) {
  std::size_t end = text.size();
  while (end > 0) {
    const auto start = text.rfind('\n', end - 1);
    const auto begin = start == std::string_view::npos ? 0 : start + 1;
    const auto line = action_detail::trim(text.substr(begin, end - begin));
    if (!line.empty()) {
      static const std::regex kScoreLine(R"(^Action:\s*score\(\s*(\d{1,3})\s*\)$)");
      std::match_results<std::string_view::const_iterator> m;
      if (!std::regex_match(line.begin(), line.end(), m, kScoreLine)) return std::nullopt;
      const int n = std::stoi(m[1].str());
      if (n < 0 || n > 100) return std::nullopt;
      return n;
    }
    if (start == std::string_view::npos) break;
    end = start;
  }
  return std::nullopt;
}

// Per-rollout facts the reward stage consumes (one score-traces record).
struct RolloutSummary {
  std::string rollout_id;
  std::string site_id;
  std::string path;
  TraceMetrics metrics;
  bool passes = false;
  std::optional<int> predicted_score;
};

struct ScoreEstimate {
  std::string site_id;
  double mean = 0;
  int n = 0;
};

// Mean over rollouts that pass the nav filter and carry a parseable score.
inline std::optional<ScoreEstimate> estimate_site_score(std::string_view site_id,
                                                        std::span<const RolloutSummary> rollouts) {
  double sum = 0;
  int n = 0;
  for (const auto& r : rollouts) {
    if (r.site_id != site_id || !r.passes || !r.predicted_score) continue;
    sum += *r.predicted_score;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return ScoreEstimate{std::string(site_id), sum / n, n};
}

struct CalibratedTarget {
  double plain_target = 0;
  double defect_target = 0;
  double midpoint = 0;
  double margin = kDefaultMargin;
  bool adjusted = false;
  bool clamped = false;
};

namespace reward_detail {

// Targets are kept on a 2^-40 grid: sums and differences of grid values below
// 2^12 are exact in binary64, so an adjusted pair differs by exactly the
// margin while the midpoint moves by at most 2^-41.
inline constexpr double kGrid = 0x1p-40;
inline double snap(double x) { return std::round(x / kGrid) * kGrid; }

}  // namespace reward_detail

inline CalibratedTarget calibrate(double plain_mean, double defect_mean,
                                  double margin = kDefaultMargin) {
  using reward_detail::snap;
  if (!(margin > 0)) throw DataError("margin must be positive");
  if (margin > 100) throw DataError("margin must not exceed 100");
  if (plain_mean < 0 || plain_mean > 100 || defect_mean < 0 || defect_mean > 100)
    throw DataError("estimated scores must lie in [0, 100]");

  CalibratedTarget t;
  t.margin = margin;
  t.midpoint = (plain_mean + defect_mean) / 2;
  if (plain_mean - defect_mean >= margin) {
    t.plain_target = plain_mean;
    t.defect_target = defect_mean;
    return t;
  }
  const double half = snap(margin / 2);
  const double mid = snap(t.midpoint);
  t.adjusted = true;
  t.plain_target = mid + half;
  t.defect_target = mid - half;
  if (t.plain_target > 100) {
    t.plain_target = 100;
    t.defect_target = 100 - 2 * half;
    t.clamped = true;
  } else if (t.defect_target < 0) {
    t.defect_target = 0;
    t.plain_target = 2 * half;
    t.clamped = true;
  }
  return t;
}

using RewardFn = std::function<double(double predicted, double target)>;

inline double linear_proximity(double predicted, double target) {
  return std::max(0.0, 1.0 - std::abs(predicted - target) / 100.0);
}

struct RewardedRollout {
  std::string rollout_id;
  std::string site_id;
  std::string path;
  std::optional<double> reward;  // empty = excluded
  double target_used = 0;
  double s_nav = 0;

  bool excluded() const noexcept { return !reward.has_value(); }
};

inline RewardedRollout assign_reward(const RolloutSummary& r, double target,
                                     const RewardFn& fn = linear_proximity) {
  RewardedRollout out{r.rollout_id, r.site_id, r.path, std::nullopt, target, r.metrics.s_nav};
  if (r.passes && r.predicted_score) out.reward = fn(*r.predicted_score, target);
  return out;
}

// Highest reward; ties go to higher s_nav, then the lexicographically lowest id.
inline const RewardedRollout& select_best(std::span<const RewardedRollout> rollouts) {
  const RewardedRollout* best = nullptr;
  for (const auto& r : rollouts) {
    if (r.excluded()) continue;
    if (!best || *r.reward > *best->reward ||
        (*r.reward == *best->reward &&
         (r.s_nav > best->s_nav || (r.s_nav == best->s_nav && r.rollout_id < best->rollout_id))))
      best = &r;
  }
  if (!best) throw DataError("select_best: no rewarded rollouts");
  return *best;
}

// Defect variants are named "<plain site id>+<principle>".
inline std::optional<std::string> parent_site(std::string_view site_id) {
  const auto plus = site_id.find('+');
  if (plus == std::string_view::npos) return std::nullopt;
  return std::string(site_id.substr(0, plus));
}

struct SiteTarget {
  std::string site_id;
  std::optional<std::string> paired_with;  // defect site for pair rows
  ScoreEstimate estimate;
  double target = 0;
  bool adjusted = false;
};

struct CalibrationResult {
  std::vector<SiteTarget> pair_targets;   // one row per side of each (plain, defect) pair
  std::vector<SiteTarget> site_targets;   // target actually used per site
  std::vector<std::string> excluded_sites;
  std::vector<RewardedRollout> rewards;
  std::vector<RewardedRollout> selected;  // one per calibrated site
};

struct RewardConfig {
  double margin = kDefaultMargin;
  NavConfig nav;
  RewardFn reward_fn = linear_proximity;
};

// Site filter, per-site estimates, per-pair margin calibration, rewards and
// rejection sampling. A plain site paired with several variants uses the mean
// of its per-pair targets; a site with no usable partner keeps its estimate.
inline CalibrationResult calibrate_sites(std::span<const RolloutSummary> rollouts,
                                         const RewardConfig& cfg = {}) {
  std::map<std::string, std::vector<const RolloutSummary*>> by_site;
  for (const auto& r : rollouts) by_site[r.site_id].push_back(&r);

  CalibrationResult out;
  std::map<std::string, ScoreEstimate> estimates;
  for (const auto& [site, rs] : by_site) {
    std::vector<TraceMetrics> ms;
    for (const auto* r : rs) ms.push_back(r->metrics);
    std::optional<ScoreEstimate> est;
    if (site_is_usable(ms, cfg.nav)) est = estimate_site_score(site, rollouts);
    if (est) estimates.emplace(site, *est);
    else out.excluded_sites.push_back(site);
  }

  std::map<std::string, std::vector<double>> targets;
  std::map<std::string, bool> adjusted;
  for (const auto& [site, est] : estimates) {
    const auto parent = parent_site(site);
    if (!parent || !estimates.count(*parent)) continue;
    const auto& plain = estimates.at(*parent);
    const auto t = calibrate(plain.mean, est.mean, cfg.margin);
    out.pair_targets.push_back({*parent, site, plain, t.plain_target, t.adjusted});
    out.pair_targets.push_back({site, *parent, est, t.defect_target, t.adjusted});
    targets[*parent].push_back(t.plain_target);
    targets[site].push_back(t.defect_target);
    adjusted[*parent] = adjusted[*parent] || t.adjusted;
    adjusted[site] = t.adjusted;
  }

  for (const auto& [site, est] : estimates) {
    SiteTarget st{site, std::nullopt, est, est.mean, false};
    if (auto it = targets.find(site); it != targets.end()) {
      double sum = 0;
      for (double v : it->second) sum += v;
      st.target = sum / static_cast<double>(it->second.size());
      st.adjusted = adjusted[site];
    }
    out.site_targets.push_back(st);

    std::vector<RewardedRollout> site_rewards;
    for (const auto* r : by_site.at(site)) site_rewards.push_back(assign_reward(*r, st.target, cfg.reward_fn));
    out.selected.push_back(select_best(site_rewards));
    out.rewards.insert(out.rewards.end(), site_rewards.begin(), site_rewards.end());
  }
  return out;
}

}  // namespace uxpipe
