#pragma once

// Directory archive for rollouts.
//
//   <dir>/manifest          one record per line, tab-separated
//   <dir>/steps/NNN.png     pre-action observation of step NNN (lossless)
//   <dir>/steps/NNN.txt     verbatim thought of step NNN
//   <dir>/assessment.txt    scoring-turn response, when present
//
// Manifest records:
//   @meta        <json: rollout_id, site_id, goal, budget, termination>
//   <t>          <action_text> <image_path> <thought_path> <image_sha256> <captured_at> <thought_sha256>
//   @assessment  <score or -> <empty> assessment.txt <sha256>
//
// Text fields escape backslash, tab, CR and LF. Image and thought files are
// write-once: saving over an existing file with different content fails.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uxpipe/digest.hpp"
#include "uxpipe/error.hpp"
#include "uxpipe/image.hpp"
#include "uxpipe/trace.hpp"

namespace uxpipe {

namespace trace_io_detail {

namespace fs = std::filesystem;

inline std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string unescape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out.push_back(s[i]);
      continue;
    }
    if (++i == s.size()) throw DataError("corrupt manifest: dangling escape");
    switch (s[i]) {
      case '\\': out.push_back('\\'); break;
      case 't': out.push_back('\t'); break;
      case 'n': out.push_back('\n'); break;
      case 'r': out.push_back('\r'); break;
      default: throw DataError("corrupt manifest: bad escape");
    }
  }
  return out;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i)
    if (i == line.size() || line[i] == '\t') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  return out;
}

inline std::string step_stem(int t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", t);
  return buf;
}

inline std::vector<std::uint8_t> bytes_of(std::string_view s) {
  return {s.begin(), s.end()};
}

// Writes `bytes` unless an identical file already exists.
inline std::string write_once(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  const auto digest = sha256_hex(bytes);
  if (fs::exists(path)) {
    if (sha256_file(path) != digest)
      throw DataError("refusing to overwrite immutable trace file: " + path.string());
    return digest;
  }
  write_file_bytes(path, bytes);
  return digest;
}

inline void write_atomic(const fs::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  write_file_bytes(tmp, bytes_of(text));
  fs::rename(tmp, path);
}

inline std::string read_text(const fs::path& path) {
  const auto bytes = read_file_bytes(path);
  return {bytes.begin(), bytes.end()};
}

inline std::int64_t to_i64(const std::string& s, const char* what) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw DataError(std::string("corrupt manifest: bad ") + what + " '" + s + "'");
  return v;
}

inline fs::path checked_file(const fs::path& dir, const std::string& rel,
                             const std::string& expected_sha) {
  if (rel.empty() || fs::path(rel).is_absolute() || rel.find("..") != std::string::npos)
    throw DataError("corrupt manifest: bad path '" + rel + "'");
  const auto path = dir / rel;
  if (!fs::exists(path)) throw DataError("missing trace file: " + path.string());
  if (sha256_file(path) != expected_sha)
    throw DataError("checksum mismatch: " + path.string());
  return path;
}

}  // namespace trace_io_detail

inline void save_rollout(const Rollout& r, const std::filesystem::path& dir) {
  using namespace trace_io_detail;
  validate(r);
  fs::create_directories(dir / "steps");

  std::ostringstream manifest;
  nlohmann::json meta = {{"rollout_id", r.rollout_id},
                         {"site_id", r.site_id},
                         {"goal", r.goal},
                         {"budget", r.budget},
                         {"termination", r.termination ? nlohmann::json(std::string(to_string(*r.termination)))
                                                       : nlohmann::json(nullptr)}};
  manifest << "@meta\t" << meta.dump() << '\n';

  for (const auto& s : r.steps) {
    const auto stem = step_stem(s.index);
    const std::string image_rel = "steps/" + stem + ".png";
    const std::string thought_rel = "steps/" + stem + ".txt";
    const auto image_sha = write_once(dir / image_rel, encode_png(s.observation));
    const auto thought_sha = write_once(dir / thought_rel, bytes_of(s.thought));
    manifest << s.index << '\t' << escape_field(s.action.raw_text) << '\t' << image_rel << '\t'
             << thought_rel << '\t' << image_sha << '\t' << s.observation.captured_at << '\t'
             << thought_sha << '\n';
  }
  if (r.assessment) {
    const auto sha = write_once(dir / "assessment.txt", bytes_of(r.assessment->issues_text));
    manifest << "@assessment\t"
             << (r.assessment->predicted_score ? std::to_string(*r.assessment->predicted_score)
                                               : std::string("-"))
             << "\t\tassessment.txt\t" << sha << '\n';
  }
  write_atomic(dir / "manifest", manifest.str());
}

inline Rollout load_rollout(const std::filesystem::path& dir) {
  using namespace trace_io_detail;
  const auto manifest_path = dir / "manifest";
  if (!fs::exists(manifest_path)) throw DataError("missing manifest: " + manifest_path.string());
  std::istringstream in(read_text(manifest_path));

  Rollout r;
  bool have_meta = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f[0] == "@meta") {
      if (f.size() != 2 || have_meta) throw DataError("corrupt manifest: bad meta record");
      try {
        const auto j = nlohmann::json::parse(f[1]);
        r.rollout_id = j.at("rollout_id").get<std::string>();
        r.site_id = j.at("site_id").get<std::string>();
        r.goal = j.at("goal").get<std::string>();
        r.budget = j.at("budget").get<int>();
        if (!j.at("termination").is_null())
          r.termination = termination_from_string(j.at("termination").get<std::string>());
      } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("corrupt manifest: ") + e.what());
      }
      have_meta = true;
    } else if (f[0] == "@assessment") {
      if (f.size() != 5 || r.assessment) throw DataError("corrupt manifest: bad assessment record");
      Assessment a;
      if (f[1] != "-") a.predicted_score = static_cast<int>(to_i64(f[1], "score"));
      a.issues_text = read_text(checked_file(dir, f[3], f[4]));
      r.assessment = std::move(a);
    } else {
      if (f.size() != 7) throw DataError("corrupt manifest: step record needs 7 fields");
      Step s;
      s.index = static_cast<int>(to_i64(f[0], "step index"));
      s.observation = load_png(checked_file(dir, f[2], f[4]));
      s.observation.captured_at = to_i64(f[5], "timestamp");
      s.thought = read_text(checked_file(dir, f[3], f[6]));
      s.action = ActionRecord::parse(unescape_field(f[1]),
                                     ScreenBounds{s.observation.width, s.observation.height});
      if (s.index != static_cast<int>(r.steps.size()) + 1)
        throw DataError("corrupt manifest: step indices not contiguous at " + f[0]);
      r.steps.push_back(std::move(s));
    }
  }
  if (!have_meta) throw DataError("corrupt manifest: no @meta record");
  validate(r);
  return r;
}

// Every rollout archive (directory holding a manifest) below `root`, sorted.
inline std::vector<std::filesystem::path> find_rollout_archives(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::exists(root)) throw UsageError("no such trace directory: " + root.string());
  std::vector<fs::path> out;
  if (fs::exists(root / "manifest")) out.push_back(root);
  if (fs::is_directory(root))
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_directory() && fs::exists(e.path() / "manifest")) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace uxpipe
