#pragma once

// Sliding-window conversion of selected rollouts into supervised examples.
// Step t sees the goal, the text history of steps 1..t-1 and the screenshots
// of steps max(1, t-window+1)..t; it targets the thought and action of step t.
// The optional assessment example sees the whole history plus the scoring
// prompt and targets the assessment text.

#include <algorithm>
#include <filesystem>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "uxpipe/digest.hpp"
#include "uxpipe/error.hpp"
#include "uxpipe/image.hpp"
#include "uxpipe/prompts.hpp"
#include "uxpipe/trace.hpp"
#include "uxpipe/trace_io.hpp"

namespace uxpipe {

inline constexpr int kDefaultWindow = 5;

struct ExportConfig {
  int window = kDefaultWindow;
  bool include_assessment = true;
  std::string system_prompt{prompts::kGroundingInstruction};
  std::string scoring_prompt{prompts::kScoringPrompt};
};

struct ImageRef {
  std::filesystem::path source;  // file inside the rollout archive
  std::string relative;          // path inside the exported dataset

  friend bool operator==(const ImageRef&, const ImageRef&) = default;
};

struct TrainingExample {
  std::string site_id;
  std::string rollout_id;
  int t = 0;  // T + 1 for the assessment example
  bool assessment = false;

  std::string system_prompt;
  std::string goal;
  SessionHistory history;
  std::vector<int> image_steps;
  std::vector<ImageRef> images;
  std::string user_text;

  std::string thought;
  std::string action_text;
  std::string assessment_text;

  std::string assistant_content() const {
    if (assessment) return assessment_text;
    return "Thought: " + thought + "\n" + action_text;
  }
};

namespace export_detail {

inline void check_id(const std::string& id, const char* what) {
  if (id.empty() || id.find('/') != std::string::npos || id.find('\\') != std::string::npos ||
      id == "." || id == "..")
    throw DataError(std::string("unsafe ") + what + " for export: '" + id + "'");
}

inline std::vector<int> window_steps(int t, int window) {
  std::vector<int> out;
  for (int s = std::max(1, t - window + 1); s <= t; ++s) out.push_back(s);
  return out;
}

}  // namespace export_detail

// `archive` is where the rollout's step images live (see trace_io).
inline std::vector<TrainingExample> export_rollout(const Rollout& r,
                                                   const std::filesystem::path& archive,
                                                   const ExportConfig& cfg = {}) {
  using namespace export_detail;
  if (r.steps.empty()) throw DataError("cannot export rollout without steps: " + r.rollout_id);
  if (cfg.window < 1) throw DataError("window must be >= 1");
  check_id(r.site_id, "site id");
  check_id(r.rollout_id, "rollout id");

  const auto image_ref = [&](int step) {
    const auto stem = trace_io_detail::step_stem(step);
    return ImageRef{archive / "steps" / (stem + ".png"),
                    "images/" + r.site_id + "/" + r.rollout_id + "/" + stem + ".png"};
  };

  std::vector<TrainingExample> out;
  const int total = static_cast<int>(r.steps.size());
  for (const auto& s : r.steps) {
    TrainingExample ex;
    ex.site_id = r.site_id;
    ex.rollout_id = r.rollout_id;
    ex.t = s.index;
    ex.system_prompt = cfg.system_prompt;
    ex.goal = r.goal;
    ex.history = history_of(r, s.index - 1);
    ex.image_steps = window_steps(s.index, cfg.window);
    for (int i : ex.image_steps) ex.images.push_back(image_ref(i));
    ex.user_text = prompts::step_text(ex.goal, ex.history);
    ex.thought = s.thought;
    ex.action_text = s.action.raw_text;
    out.push_back(std::move(ex));
  }
  if (cfg.include_assessment && r.assessment) {
    TrainingExample ex;
    ex.site_id = r.site_id;
    ex.rollout_id = r.rollout_id;
    ex.t = total + 1;
    ex.assessment = true;
    ex.system_prompt = cfg.system_prompt;
    ex.goal = r.goal;
    ex.history = history_of(r);
    ex.image_steps = window_steps(total, cfg.window);
    for (int i : ex.image_steps) ex.images.push_back(image_ref(i));
    ex.user_text = prompts::assessment_text(ex.goal, ex.history, cfg.scoring_prompt);
    ex.assessment_text = r.assessment->issues_text;
    out.push_back(std::move(ex));
  }
  return out;
}

// Conversation record: {"messages": [system, user, assistant], "images": [...]}.
inline nlohmann::json to_conversation(const TrainingExample& ex) {
  std::string user;
  for (std::size_t i = 0; i < ex.images.size(); ++i) user += "<image>";
  if (!ex.images.empty()) user += "\n";
  user += ex.user_text;
  nlohmann::json images = nlohmann::json::array();
  for (const auto& img : ex.images) images.push_back(img.relative);
  return {{"messages",
           {{{"role", "system"}, {"content", ex.system_prompt}},
            {{"role", "user"}, {"content", user}},
            {{"role", "assistant"}, {"content", ex.assistant_content()}}}},
          {"images", images}};
}

struct DatasetManifest {
  std::filesystem::path dataset_file;
  std::size_t examples = 0;
  std::size_t images = 0;
  std::string sha256;
};

// Writes <out>/dataset.jsonl and copies every referenced image under
// <out>/images/. Records are ordered by (site_id, rollout_id, t).
inline DatasetManifest write_dataset(std::vector<TrainingExample> examples,
                                     const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  if (examples.empty()) throw DataError("write_dataset: no examples");
  std::sort(examples.begin(), examples.end(), [](const auto& a, const auto& b) {
    return std::tie(a.site_id, a.rollout_id, a.t) < std::tie(b.site_id, b.rollout_id, b.t);
  });

  std::map<std::string, fs::path> copies;
  for (const auto& ex : examples)
    for (const auto& img : ex.images) {
      if (!fs::exists(img.source))
        throw DataError("dangling image reference: " + img.source.string());
      copies.emplace(img.relative, img.source);
    }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  for (const auto& [rel, src] : copies) {
    const auto dst = out_dir / rel;
    fs::create_directories(dst.parent_path());
    write_file_bytes(dst, read_file_bytes(src));
  }

  std::string body;
  for (const auto& ex : examples) {
    body += to_conversation(ex).dump();
    body += '\n';
  }
  const auto file = out_dir / "dataset.jsonl";
  write_file_bytes(file, trace_io_detail::bytes_of(body));
  return {file, examples.size(), copies.size(), sha256_hex(trace_io_detail::bytes_of(body))};
}

}  // namespace uxpipe
