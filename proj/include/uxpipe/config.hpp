#pragma once

// Pipeline-wide settings: a JSON file (chosen by --config or UXPIPE_CONFIG)
// layered over built-in defaults, then command-line overrides.

#include <cstdlib>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "uxpipe/error.hpp"
#include "uxpipe/image.hpp"
#include "uxpipe/nav_quality.hpp"
#include "uxpipe/reward.hpp"
#include "uxpipe/trace.hpp"

namespace uxpipe {

struct PipelineConfig {
  struct Paths {
    std::string traces = "traces";
    std::string datasets = "datasets";
    std::string reports = "reports";
  } paths;

  struct Thresholds {
    double s_nav = 0.07;
    int min_steps = 30;
    int min_passing_rollouts = 3;
    int hamming = kDefaultSameScreenDistance;
    double blank_epsilon = kDefaultBlankEpsilon;
    double margin = kDefaultMargin;
    int budget = kDefaultBudget;
    int window = 5;
  } thresholds;

  struct Endpoints {
    std::string policy_url;
    std::string model;
    std::string env_url;
    int timeout_ms = 120000;
    int max_retries = 3;
  } endpoints;

  struct Seeds {
    std::uint64_t benchmark = 1;
    std::uint64_t arena = 1;
  } seeds;

  NavConfig nav() const {
    NavConfig n;
    n.same_screen_distance = thresholds.hamming;
    n.blank_epsilon = thresholds.blank_epsilon;
    n.min_s_nav = thresholds.s_nav;
    n.min_steps = thresholds.min_steps;
    n.min_passing_rollouts = thresholds.min_passing_rollouts;
    return n;
  }

  void validate() const {
    const auto positive = [](bool ok, const char* what) {
      if (!ok) throw UsageError(std::string("config: ") + what + " must be positive");
    };
    positive(thresholds.s_nav > 0, "thresholds.s_nav");
    positive(thresholds.min_steps > 0, "thresholds.min_steps");
    positive(thresholds.min_passing_rollouts > 0, "thresholds.min_passing_rollouts");
    positive(thresholds.hamming > 0, "thresholds.hamming");
    positive(thresholds.blank_epsilon > 0, "thresholds.blank_epsilon");
    positive(thresholds.margin > 0, "thresholds.margin");
    positive(thresholds.budget > 0, "thresholds.budget");
    positive(thresholds.window > 0, "thresholds.window");
    positive(endpoints.timeout_ms > 0, "endpoints.timeout_ms");
    if (thresholds.margin > 100) throw UsageError("config: thresholds.margin must not exceed 100");
    if (thresholds.hamming > 64) throw UsageError("config: thresholds.hamming must not exceed 64");
    if (endpoints.max_retries < 0) throw UsageError("config: endpoints.max_retries must be >= 0");
  }
};

// Missing keys keep their defaults.
#define UXPIPE_CONFIG_FIELDS(F)                                                                                    \
  F(paths, traces) F(paths, datasets) F(paths, reports) F(thresholds, s_nav) F(thresholds, min_steps)              \
  F(thresholds, min_passing_rollouts) F(thresholds, hamming) F(thresholds, blank_epsilon) F(thresholds, margin)    \
  F(thresholds, budget) F(thresholds, window) F(endpoints, policy_url) F(endpoints, model) F(endpoints, env_url)   \
  F(endpoints, timeout_ms) F(endpoints, max_retries) F(seeds, benchmark) F(seeds, arena)

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
  j = nlohmann::json::object();
#define UXPIPE_TO(group, key) j[#group][#key] = c.group.key;
  UXPIPE_CONFIG_FIELDS(UXPIPE_TO)
#undef UXPIPE_TO
}

inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
#define UXPIPE_FROM(group, key) \
  if (j.contains(#group) && j[#group].contains(#key)) j[#group][#key].get_to(c.group.key);
  UXPIPE_CONFIG_FIELDS(UXPIPE_FROM)
#undef UXPIPE_FROM
}

namespace config_detail {

// Rejects keys the config does not know, so typos fail loudly.
inline void check_keys(const nlohmann::json& given, const nlohmann::json& known, const std::string& where) {
  if (!given.is_object()) throw UsageError("config: " + (where.empty() ? "top level" : where) + " must be an object");
  for (const auto& [k, v] : given.items()) {
    if (!known.contains(k)) throw UsageError("config: unknown key '" + where + k + "'");
    if (known[k].is_object()) check_keys(v, known[k], where + k + ".");
  }
}

}  // namespace config_detail

inline PipelineConfig parse_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  config_detail::check_keys(j, nlohmann::json(PipelineConfig{}), "");
  PipelineConfig c;
  try {
    c = j.get<PipelineConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

// Explicit path, else $UXPIPE_CONFIG, else defaults.
inline PipelineConfig load_config(const std::string& path = "") {
  std::string file = path;
  if (file.empty())
    if (const char* env = std::getenv("UXPIPE_CONFIG")) file = env;
  if (file.empty()) return {};
  if (!std::filesystem::exists(file)) throw UsageError("config file not found: " + file);
  const auto bytes = read_file_bytes(file);
  return parse_config(std::string(bytes.begin(), bytes.end()));
}

inline std::string echo_config(const PipelineConfig& c) { return nlohmann::json(c).dump(); }

}  // namespace uxpipe
