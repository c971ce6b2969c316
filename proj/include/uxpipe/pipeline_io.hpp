#pragma once

// File formats that connect pipeline stages: rollout summaries (JSONL) and
// calibration results (JSON).

#include <atomic>
#include <exception>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "uxpipe/nav_quality.hpp"
#include "uxpipe/reward.hpp"
#include "uxpipe/trace_io.hpp"

namespace uxpipe {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TraceMetrics, same_screen_ratio, same_after_clicks_ratio, unique_screen_ratio,
                                   steps, s_nav, logical_length, unique_screens, transitions, same_transitions,
                                   click_transitions, same_click_transitions, same_ratio_undefined,
                                   click_ratio_undefined)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ScoreEstimate, site_id, mean, n)

namespace pipeline_detail {

template <class T>
nlohmann::json opt(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

template <class T>
std::optional<T> get_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace pipeline_detail

inline void to_json(nlohmann::json& j, const RolloutSummary& r) {
  j = {{"rollout_id", r.rollout_id}, {"site_id", r.site_id}, {"path", r.path},
       {"metrics", r.metrics},       {"passes", r.passes},   {"predicted_score", pipeline_detail::opt(r.predicted_score)}};
}
inline void from_json(const nlohmann::json& j, RolloutSummary& r) {
  r.rollout_id = j.at("rollout_id").get<std::string>();
  r.site_id = j.at("site_id").get<std::string>();
  r.path = j.at("path").get<std::string>();
  r.metrics = j.at("metrics").get<TraceMetrics>();
  r.passes = j.at("passes").get<bool>();
  r.predicted_score = pipeline_detail::get_opt<int>(j, "predicted_score");
}

inline void to_json(nlohmann::json& j, const RewardedRollout& r) {
  j = {{"rollout_id", r.rollout_id},       {"site_id", r.site_id},         {"path", r.path},
       {"reward", pipeline_detail::opt(r.reward)}, {"target_used", r.target_used}, {"s_nav", r.s_nav}};
}
inline void from_json(const nlohmann::json& j, RewardedRollout& r) {
  r.rollout_id = j.at("rollout_id").get<std::string>();
  r.site_id = j.at("site_id").get<std::string>();
  r.path = j.at("path").get<std::string>();
  r.reward = pipeline_detail::get_opt<double>(j, "reward");
  r.target_used = j.at("target_used").get<double>();
  r.s_nav = j.at("s_nav").get<double>();
}

inline void to_json(nlohmann::json& j, const SiteTarget& t) {
  j = {{"site_id", t.site_id},   {"paired_with", pipeline_detail::opt(t.paired_with)},
       {"estimate", t.estimate}, {"target", t.target},
       {"adjusted", t.adjusted}};
}
inline void from_json(const nlohmann::json& j, SiteTarget& t) {
  t.site_id = j.at("site_id").get<std::string>();
  t.paired_with = pipeline_detail::get_opt<std::string>(j, "paired_with");
  t.estimate = j.at("estimate").get<ScoreEstimate>();
  t.target = j.at("target").get<double>();
  t.adjusted = j.at("adjusted").get<bool>();
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CalibrationResult, pair_targets, site_targets, excluded_sites, rewards, selected)

inline RolloutSummary summarize_archive(const std::filesystem::path& dir, const NavConfig& nav = {}) {
  const auto r = load_rollout(dir);
  RolloutSummary s;
  s.rollout_id = r.rollout_id;
  s.site_id = r.site_id;
  s.path = dir.string();
  s.metrics = compute_metrics(r, nav);
  s.passes = passes_filter(s.metrics, nav);
  if (r.assessment) s.predicted_score = r.assessment->predicted_score;
  return s;
}

// Summaries of every archive under `root`, in path order regardless of `jobs`.
inline std::vector<RolloutSummary> score_traces(const std::filesystem::path& root, const NavConfig& nav = {},
                                                int jobs = 1) {
  const auto dirs = find_rollout_archives(root);
  std::vector<RolloutSummary> out(dirs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < dirs.size(); i = next++) {
      try {
        out[i] = summarize_archive(dirs[i], nav);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int k = 1; k < std::max(1, jobs); ++k) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

inline std::string summaries_to_jsonl(std::span<const RolloutSummary> rs) {
  std::string out;
  for (const auto& r : rs) out += nlohmann::json(r).dump() + "\n";
  return out;
}

inline std::vector<RolloutSummary> parse_summaries(std::string_view jsonl) {
  std::vector<RolloutSummary> out;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < jsonl.size()) {
    const auto end = std::min(jsonl.find('\n', pos), jsonl.size());
    const auto line = jsonl.substr(pos, end - pos);
    ++line_no;
    if (line.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        out.push_back(nlohmann::json::parse(line).get<RolloutSummary>());
      } catch (const nlohmann::json::exception& e) {
        throw DataError("summary line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    pos = end + 1;
  }
  return out;
}

}  // namespace uxpipe
