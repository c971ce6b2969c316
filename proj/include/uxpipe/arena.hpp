#pragma once

// Human preference collection: 30-pair sessions, gated votes, an append-only
// JSONL log and rating statistics.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uxpipe/bench.hpp"
#include "uxpipe/error.hpp"
#include "uxpipe/rng.hpp"

namespace uxpipe {

inline constexpr int kPairsPerSession = 30;

// Shown to raters with every pair.
inline const std::vector<std::string>& arena_instructions() {
  static const std::vector<std::string> lines = {
      "You will be shown 30 pairs of websites.",
      "Your task is to evaluate which website between pairs of websites is more usable.",
      "These websites are clones of existing websites so many of the images are text placeholders. When voting, "
      "ensure you are evaluating the sites based on their usability.",
      "Occasionally websites may take awhile to load or may not reload. If that is the case feel free to move on.",
      "You must expand both websites using the expand (↔) button before you can vote.",
      "Browse each site freely — scroll, click links, and explore as you normally would.",
      "DO NOT enter in any personal information during your exploration. Instead, you can provide with fake "
      "information such as \"John Doe, 123@demo.com, 123-456-7890\"",
      "While you can choose ties, try and select one website over the other. There are no right or wrong answers "
      "— go with your honest impression.",
  };
  return lines;
}

struct Telemetry {
  std::int64_t duration_ms = 0;
  int frame_clicks = 0;
  int element_clicks = 0;
  bool expanded_left = false;
  bool expanded_right = false;

  friend bool operator==(const Telemetry&, const Telemetry&) = default;
};
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(Telemetry, duration_ms, frame_clicks, element_clicks, expanded_left, expanded_right)

struct Vote {
  std::string pair_id;
  std::string session_id;
  Side choice = Side::tie;
  Telemetry telemetry;
  // Sites as shown to this rater, filled in by the service.
  std::string left_site;
  std::string right_site;

  friend bool operator==(const Vote&, const Vote&) = default;
};

struct ArenaSession {
  std::string session_id;
  std::string participant;
  std::vector<std::string> pair_ids;
  std::vector<bool> swapped;  // per pair: sides shown reversed

  friend bool operator==(const ArenaSession&, const ArenaSession&) = default;
};

struct PairView {
  std::string pair_id;
  std::string left_site, right_site;
  std::string left_url, right_url;
};

struct VoteOutcome {
  int status = 200;  // 200 accepted, 404 unknown session, 409 duplicate, 422 rejected
  std::string error;
};

struct RatingStats {
  int n_votes = 0;
  int n_raters = 0;
  std::optional<double> mean_duration_s;
  int durations_removed = 0;
  std::optional<double> mean_frame_clicks;
  std::optional<double> mean_element_clicks;
  std::optional<double> alpha;
};

// Mean after one pass of removing values whose z-score (population standard
// deviation) exceeds `z`.
inline std::pair<double, int> mean_without_outliers(const std::vector<double>& xs, double z = 3.0) {
  if (xs.empty()) throw DataError("mean of an empty sample");
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0;
  for (double x : xs) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(xs.size()));
  double sum = 0;
  int kept = 0;
  for (double x : xs)
    if (sd == 0 || std::abs(x - mean) / sd <= z) {
      sum += x;
      ++kept;
    }
  return {sum / kept, static_cast<int>(xs.size()) - kept};
}

inline RatingStats rating_stats(std::span<const Vote> votes) {
  RatingStats s;
  s.n_votes = static_cast<int>(votes.size());
  if (votes.empty()) return s;
  std::vector<double> durations;
  double frame = 0, element = 0;
  std::map<std::string, std::map<std::string, std::string>> by_rater;  // session -> pair -> chosen site
  std::set<std::string> pair_ids;
  for (const auto& v : votes) {
    durations.push_back(static_cast<double>(v.telemetry.duration_ms) / 1000.0);
    frame += v.telemetry.frame_clicks;
    element += v.telemetry.element_clicks;
    by_rater[v.session_id][v.pair_id] =
        v.choice == Side::tie ? "tie" : (v.choice == Side::left ? v.left_site : v.right_site);
    pair_ids.insert(v.pair_id);
  }
  const auto [mean, removed] = mean_without_outliers(durations);
  s.mean_duration_s = mean;
  s.durations_removed = removed;
  s.mean_frame_clicks = frame / s.n_votes;
  s.mean_element_clicks = element / s.n_votes;
  s.n_raters = static_cast<int>(by_rater.size());

  std::vector<std::vector<Rating>> matrix;
  for (const auto& [session, picks] : by_rater) {
    std::vector<Rating> row;
    for (const auto& p : pair_ids) {
      const auto it = picks.find(p);
      row.push_back(it == picks.end() ? Rating{} : Rating{it->second});
    }
    matrix.push_back(std::move(row));
  }
  try {
    s.alpha = krippendorff_alpha(matrix);
  } catch (const DataError&) {
    // nothing co-rated yet
  }
  return s;
}

// One human-labeled pair per vote, in the orientation the rater saw.
inline std::vector<PreferencePair> export_pairs(std::span<const Vote> votes) {
  std::vector<PreferencePair> out;
  for (const auto& v : votes)
    out.push_back({v.pair_id + "@" + v.session_id, v.left_site, v.right_site, v.choice, LabelSource::human});
  return out;
}

inline nlohmann::json to_json(const RatingStats& s) {
  const auto opt = [](std::optional<double> v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"n_votes", s.n_votes},
          {"n_raters", s.n_raters},
          {"mean_duration_s", opt(s.mean_duration_s)},
          {"durations_removed", s.durations_removed},
          {"mean_frame_clicks", opt(s.mean_frame_clicks)},
          {"mean_element_clicks", opt(s.mean_element_clicks)},
          {"alpha", opt(s.alpha)}};
}

class ArenaService {
 public:
  // Replays `log` if it exists, so a restarted service resumes its sessions.
  ArenaService(std::vector<PreferencePair> pool, std::filesystem::path log, std::uint64_t seed = 1,
               int pairs_per_session = kPairsPerSession)
      : log_path_(std::move(log)), rng_(seed), per_session_(pairs_per_session) {
    if (per_session_ < 1) throw UsageError("pairs per session must be >= 1");
    for (auto& p : pool) {
      if (pairs_.count(p.pair_id)) throw DataError("duplicate pair id " + p.pair_id);
      order_.push_back(p.pair_id);
      assigned_[p.pair_id] = 0;
      pairs_.emplace(p.pair_id, std::move(p));
    }
    if (!log_path_.empty() && std::filesystem::exists(log_path_)) replay();
  }

  ArenaSession create_session(const std::string& participant = "") {
    std::lock_guard lock(mutex_);
    if (static_cast<int>(pairs_.size()) < per_session_)
      throw DataError("pool has " + std::to_string(pairs_.size()) + " pairs, a session needs " +
                      std::to_string(per_session_));
    std::vector<std::string> ids = order_;
    rng_.shuffle(ids);
    std::stable_sort(ids.begin(), ids.end(),
                     [&](const auto& a, const auto& b) { return assigned_.at(a) < assigned_.at(b); });
    ArenaSession s;
    s.session_id = "s" + std::to_string(sessions_.size() + 1);
    s.participant = participant;
    s.pair_ids.assign(ids.begin(), ids.begin() + per_session_);
    for (std::size_t i = 0; i < s.pair_ids.size(); ++i) s.swapped.push_back(rng_.below(2) == 1);
    append({{"type", "session"},
            {"session_id", s.session_id},
            {"participant", s.participant},
            {"pair_ids", s.pair_ids},
            {"swapped", s.swapped}});
    apply_session(s);
    return s;
  }

  std::optional<PairView> pair_view(const std::string& pair_id, const std::string& session_id = "") const {
    std::lock_guard lock(mutex_);
    const auto it = pairs_.find(pair_id);
    if (it == pairs_.end()) return std::nullopt;
    PairView v{pair_id, it->second.left_site, it->second.right_site, "", ""};
    if (!session_id.empty()) {
      const auto sit = sessions_.find(session_id);
      if (sit != sessions_.end()) {
        const auto& s = sit->second;
        const auto pos = std::find(s.pair_ids.begin(), s.pair_ids.end(), pair_id);
        if (pos != s.pair_ids.end() && s.swapped[pos - s.pair_ids.begin()]) std::swap(v.left_site, v.right_site);
      }
    }
    v.left_url = "/sites/" + v.left_site + "/";
    v.right_url = "/sites/" + v.right_site + "/";
    return v;
  }

  VoteOutcome record_vote(Vote v) {
    std::lock_guard lock(mutex_);
    const auto sit = sessions_.find(v.session_id);
    if (sit == sessions_.end()) return {404, "unknown session " + v.session_id};
    const auto& s = sit->second;
    const auto pos = std::find(s.pair_ids.begin(), s.pair_ids.end(), v.pair_id);
    if (pos == s.pair_ids.end()) return {422, "pair " + v.pair_id + " is not assigned to this session"};
    if (!v.telemetry.expanded_left || !v.telemetry.expanded_right)
      return {422, "both websites must be expanded before voting"};
    if (v.telemetry.duration_ms < 0 || v.telemetry.frame_clicks < 0 || v.telemetry.element_clicks < 0)
      return {422, "telemetry counters must be non-negative"};
    if (voted_.count({v.session_id, v.pair_id})) return {409, "pair already rated in this session"};
    const auto& p = pairs_.at(v.pair_id);
    const bool swapped = s.swapped[pos - s.pair_ids.begin()];
    v.left_site = swapped ? p.right_site : p.left_site;
    v.right_site = swapped ? p.left_site : p.right_site;
    append({{"type", "vote"},
            {"pair_id", v.pair_id},
            {"session_id", v.session_id},
            {"choice", v.choice},
            {"telemetry", v.telemetry},
            {"left_site", v.left_site},
            {"right_site", v.right_site}});
    voted_.insert({v.session_id, v.pair_id});
    votes_.push_back(std::move(v));
    return {};
  }

  std::vector<Vote> votes() const {
    std::lock_guard lock(mutex_);
    return votes_;
  }

  RatingStats stats() const { return rating_stats(votes()); }

  std::map<std::string, int> assignment_counts() const {
    std::lock_guard lock(mutex_);
    return assigned_;
  }

  std::optional<ArenaSession> session(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return std::nullopt;
    return it->second;
  }

 private:
  void append(const nlohmann::json& record) {
    if (log_path_.empty()) return;
    std::ofstream out(log_path_, std::ios::app | std::ios::binary);
    out << record.dump() << '\n';
    out.flush();
    if (!out) throw DataError("cannot append to vote log " + log_path_.string());
  }

  void apply_session(const ArenaSession& s) {
    for (const auto& id : s.pair_ids) {
      if (!assigned_.count(id)) throw DataError("log references unknown pair " + id);
      ++assigned_[id];
    }
    sessions_[s.session_id] = s;
  }

  void replay() {
    std::ifstream in(log_path_, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    bench_detail::for_each_jsonl(text, [&](const nlohmann::json& j) {
      const auto type = j.at("type").get<std::string>();
      if (type == "session") {
        ArenaSession s{j.at("session_id"), j.value("participant", ""), j.at("pair_ids"), j.at("swapped")};
        apply_session(s);
        // keep the RNG stream aligned with a service that never restarted
        std::vector<std::string> ids = order_;
        rng_.shuffle(ids);
        for (std::size_t i = 0; i < s.pair_ids.size(); ++i) rng_.below(2);
      } else if (type == "vote") {
        Vote v{j.at("pair_id"), j.at("session_id"), j.at("choice").get<Side>(), j.at("telemetry").get<Telemetry>(),
               j.at("left_site"), j.at("right_site")};
        voted_.insert({v.session_id, v.pair_id});
        votes_.push_back(std::move(v));
      }
    });
  }

  std::filesystem::path log_path_;
  mutable std::mutex mutex_;
  Rng rng_;
  int per_session_;
  std::map<std::string, PreferencePair> pairs_;
  std::vector<std::string> order_;
  std::map<std::string, int> assigned_;
  std::map<std::string, ArenaSession> sessions_;
  std::set<std::pair<std::string, std::string>> voted_;
  std::vector<Vote> votes_;
};

}  // namespace uxpipe
