// uxpipe: the pipeline as subcommands.
//
//   simgen        generate simulated sites (plain and defect variants)
//   simserve      expose a simulated site over the environment protocol
//   rollout       run testing sessions and archive them
//   score-traces  navigation metrics per archived rollout
//   calibrate     per-site targets, rewards and selected rollouts
//   export        training dataset from selected rollouts
//   bench         preference benchmark report
//   arena         pairwise rating service
//   hash          perceptual hash of screenshots

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "uxpipe/arena_server.hpp"
#include "uxpipe/bench.hpp"
#include "uxpipe/config.hpp"
#include "uxpipe/harness.hpp"
#include "uxpipe/phash.hpp"
#include "uxpipe/pipeline_io.hpp"
#include "uxpipe/remote.hpp"
#include "uxpipe/sim/bundle.hpp"
#include "uxpipe/sim/defects.hpp"
#include "uxpipe/sim/policies.hpp"
#include "uxpipe/sim/sim_environment.hpp"
#include "uxpipe/training_export.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace uxpipe;

namespace {

std::string read_text(const fs::path& p) {
  if (!fs::exists(p)) throw UsageError("file not found: " + p.string());
  const auto b = read_file_bytes(p);
  return {b.begin(), b.end()};
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_file_bytes(p, std::vector<std::uint8_t>(text.begin(), text.end()));
}

// Output goes to a file when given, stdout otherwise.
void emit(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_text(out, text);
    std::cerr << "wrote " << out << "\n";
  }
}

// --config has to be known before the other options get their defaults.
std::string config_path_from_args(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a == "--config" && i + 1 < argc) return argv[i + 1];
    if (a.rfind("--config=", 0) == 0) return a.substr(9);
  }
  return "";
}

// ---------------------------------------------------------------- simgen

struct SimgenArgs {
  std::uint64_t seed = 1;
  std::string tmpl = "shop";
  std::string defect;
  std::uint64_t defect_seed = 0;
  bool all_defects = false;
  int count = 1;
  std::string out = "sites";
  std::string bundle;
};

int run_simgen(const SimgenArgs& a) {
  if (a.count < 1) throw UsageError("--count must be >= 1");
  const auto tmpl = sim::template_from_string(a.tmpl);
  std::vector<DefectPrinciple> principles;
  if (a.all_defects) principles.assign(kAllPrinciples.begin(), kAllPrinciples.end());
  else if (!a.defect.empty()) principles.push_back(principle_from_string(a.defect));

  fs::create_directories(a.out);
  std::string manifest;
  const auto save = [&](const sim::SimSite& s, bool listed) {
    const auto file = fs::path(a.out) / (s.site_id + ".json");
    write_text(file, sim::serialize_site(s));
    if (!a.bundle.empty()) sim::write_bundle(s, fs::path(a.bundle) / s.site_id);
    if (listed)
      manifest += json{{"site_id", s.site_id},
                       {"source", s.parent_id.value_or(s.site_id)},
                       {"parent", s.parent_id ? json(*s.parent_id) : json(nullptr)}}
                      .dump() +
                  "\n";
    std::cout << file.string() << "\n";
  };

  for (int k = 0; k < a.count; ++k) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(k);
    const auto plain = sim::generate_site(seed, tmpl);
    const bool plain_too = principles.empty() || a.all_defects;
    if (plain_too) save(plain, true);
    for (auto p : principles) save(sim::inject_defect(plain, p, a.defect_seed ? a.defect_seed : seed), true);
  }
  if (a.count > 1 || a.all_defects) write_text(fs::path(a.out) / "manifest.jsonl", manifest);
  return 0;
}

sim::SimSite load_site(const std::string& path) { return sim::deserialize_site(read_text(path)); }

// ---------------------------------------------------------------- simserve

int run_simserve(const std::string& site_file, int port, const std::string& host) {
  sim::SimEnvironment env(load_site(site_file));
  EnvironmentServer server(env);
  std::cerr << "serving " << env.site().site_id << " on " << host << ":" << port << "\n";
  server.listen(host, port);
  return 0;
}

// ---------------------------------------------------------------- rollout

struct RolloutArgs {
  std::string env = "sim";
  std::string policy = "scripted:explorer";
  std::string site;
  std::string out;
  std::string date;
  std::string model;
  std::string api_key_env = "UXPIPE_API_KEY";
  int rollouts = 1;
  int budget = 0;
  bool no_assessment = false;
};

bool is_url(const std::string& s) { return s.rfind("http://", 0) == 0 || s.rfind("https://", 0) == 0; }

int run_rollout(const RolloutArgs& a, const PipelineConfig& cfg) {
  if (a.site.empty()) throw UsageError("--site is required");
  if (a.rollouts < 1) throw UsageError("--rollouts must be >= 1");
  const std::string out = a.out.empty() ? cfg.paths.traces : a.out;

  std::unique_ptr<Environment> env;
  const sim::SimEnvironment* sim_env = nullptr;
  std::string site_id;
  if (a.env == "sim") {
    auto e = std::make_unique<sim::SimEnvironment>(load_site(a.site));
    sim_env = e.get();
    site_id = e->site().site_id;
    env = std::move(e);
  } else if (is_url(a.env)) {
    env = std::make_unique<RemoteEnvironment>(a.env, cfg.endpoints.timeout_ms);
    site_id = a.site;
  } else {
    throw UsageError("--env must be 'sim' or an http(s) URL");
  }

  const auto make_policy = [&]() -> std::unique_ptr<Policy> {
    if (a.policy.rfind("scripted:", 0) == 0) {
      if (!sim_env) throw UsageError("scripted policies need --env sim");
      return sim::make_scripted_policy(a.policy.substr(9), *sim_env);
    }
    const std::string url = is_url(a.policy) ? a.policy : cfg.endpoints.policy_url;
    if (!is_url(url)) throw UsageError("--policy must be scripted:NAME or an http(s) URL");
    RemotePolicyConfig pc;
    pc.base_url = url;
    pc.model = a.model.empty() ? cfg.endpoints.model : a.model;
    pc.timeout_ms = cfg.endpoints.timeout_ms;
    pc.max_retries = cfg.endpoints.max_retries;
    if (const char* key = std::getenv(a.api_key_env.c_str())) pc.api_key = key;
    return std::make_unique<RemotePolicy>(pc);
  };

  for (int k = 1; k <= a.rollouts; ++k) {
    SessionConfig sc;
    sc.rollout_id = "r" + std::to_string(k);
    sc.site_id = site_id;
    sc.date = a.date;
    sc.budget = a.budget > 0 ? a.budget : cfg.thresholds.budget;
    sc.window = cfg.thresholds.window;
    sc.run_assessment = !a.no_assessment;
    sc.validate();
    const auto dir = fs::path(out) / site_id / sc.rollout_id;
    if (fs::exists(dir)) throw DataError("rollout archive already exists: " + dir.string());

    env->reset();
    auto policy = make_policy();
    const auto r = run_session(*env, *policy, sc);
    save_rollout(r, dir);
    std::cout << json{{"rollout_id", r.rollout_id},
                      {"site_id", r.site_id},
                      {"path", dir.string()},
                      {"steps", r.steps.size()},
                      {"termination", r.termination ? std::string(to_string(*r.termination)) : ""},
                      {"predicted_score", r.assessment && r.assessment->predicted_score
                                              ? json(*r.assessment->predicted_score)
                                              : json(nullptr)}}
                     .dump()
              << "\n";
  }
  return 0;
}

// ---------------------------------------------------------------- calibrate / export

int run_calibrate(const std::string& metrics_file, double margin, const std::string& out,
                  const PipelineConfig& cfg) {
  const auto summaries = parse_summaries(read_text(metrics_file));
  RewardConfig rc;
  rc.margin = margin;
  rc.nav = cfg.nav();
  const auto res = calibrate_sites(summaries, rc);

  std::string text;
  const auto line = [&](const char* type, json j) {
    j["type"] = type;
    text += j.dump() + "\n";
  };
  for (const auto& t : res.site_targets) line("site_target", t);
  for (const auto& t : res.pair_targets) line("pair_target", t);
  for (const auto& s : res.excluded_sites) line("excluded", {{"site_id", s}});
  for (const auto& r : res.rewards) line("reward", r);
  for (const auto& r : res.selected) line("selected", r);
  emit(out, text);
  return 0;
}

int run_export(const std::string& selected_file, const std::string& out_dir, int window) {
  if (fs::exists(out_dir) && !fs::is_empty(out_dir))
    throw DataError("export directory is not empty: " + out_dir);
  std::vector<std::string> paths;
  bench_detail::for_each_jsonl(read_text(selected_file), [&](const json& j) {
    // Accept either a calibrate output (only "selected" records) or a bare list of rollouts.
    if (j.contains("type") && j["type"] != "selected") return;
    paths.push_back(j.at("path").get<std::string>());
  });
  if (paths.empty()) throw DataError("no selected rollouts in " + selected_file);

  ExportConfig ec;
  ec.window = window;
  std::vector<TrainingExample> examples;
  for (const auto& p : paths) {
    const auto r = load_rollout(p);
    auto ex = export_rollout(r, p, ec);
    examples.insert(examples.end(), std::make_move_iterator(ex.begin()), std::make_move_iterator(ex.end()));
  }
  const auto m = write_dataset(std::move(examples), out_dir);
  std::cout << json{{"dataset", m.dataset_file.string()},
                    {"examples", m.examples},
                    {"images", m.images},
                    {"rollouts", paths.size()},
                    {"sha256", m.sha256}}
                   .dump()
            << "\n";
  return 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
  std::string pairs;
  std::string manifest;
  std::string scores;
  std::string traces;
  std::string critiques;
  std::string classifier = "keyword";
  std::string out;
  int variants = 4;
  int jobs = 1;
};

int run_bench(const BenchArgs& a, const PipelineConfig& cfg) {
  if (a.pairs.empty()) throw UsageError("bench needs --pairs <file>");
  if (!a.manifest.empty()) {
    if (fs::exists(a.pairs)) throw DataError("pairs file already exists: " + a.pairs);
    const auto pairs = build_benchmark(parse_manifest(read_text(a.manifest)), cfg.seeds.benchmark, a.variants);
    write_text(a.pairs, pairs_to_jsonl(pairs));
    std::cerr << "wrote " << pairs.size() << " pairs to " << a.pairs << "\n";
    if (a.scores.empty() && a.traces.empty()) return 0;
  }
  if (!fs::exists(a.pairs)) throw UsageError("pairs file not found: " + a.pairs);
  const auto pairs = parse_pairs(read_text(a.pairs));

  ScoreTable scores;
  if (!a.scores.empty()) {
    scores = parse_scores(read_text(a.scores));
  } else if (!a.traces.empty()) {
    const auto summaries = score_traces(a.traces, cfg.nav(), a.jobs);
    std::string jsonl;
    for (const auto& s : summaries)
      jsonl += json{{"site_id", s.site_id},
                    {"predicted_score", s.predicted_score ? json(*s.predicted_score) : json(nullptr)}}
                   .dump() +
               "\n";
    scores = parse_scores(jsonl);
  } else {
    throw UsageError("bench needs --scores <file> or --traces <dir>");
  }

  std::vector<CritiqueRecord> critiques;
  std::unique_ptr<RemotePolicy> judge;
  if (!a.critiques.empty()) {
    IssueClassifier classify;
    if (a.classifier == "keyword") {
      classify = keyword_classify;
    } else if (is_url(a.classifier)) {
      RemotePolicyConfig pc;
      pc.base_url = a.classifier;
      pc.model = cfg.endpoints.model;
      pc.timeout_ms = cfg.endpoints.timeout_ms;
      pc.max_retries = cfg.endpoints.max_retries;
      judge = std::make_unique<RemotePolicy>(pc);
      classify = model_classifier(*judge);
    } else {
      throw UsageError("--classifier must be 'keyword' or an http(s) URL");
    }
    critiques = parse_critiques(read_text(a.critiques), classify);
  }

  const auto report = evaluate_benchmark(pairs, scores, critiques);
  if (a.out.empty()) {
    std::cout << format_report(report);
  } else {
    write_text(a.out, format_report(report));
    write_text(a.out + ".json", report_json(report).dump(2) + "\n");
    std::cerr << "wrote " << a.out << " and " << a.out << ".json\n";
  }
  return 0;
}

// ---------------------------------------------------------------- arena / hash

int run_arena(const std::string& pairs_file, int port, const std::string& host, const std::string& log,
              const std::string& sites, int per_session, const PipelineConfig& cfg) {
  ArenaService service(parse_pairs(read_text(pairs_file)), log, cfg.seeds.arena, per_session);
  ArenaServer server(service, sites);
  std::cerr << "arena listening on " << host << ":" << port << "\n";
  server.listen(host, port);
  return 0;
}

int run_hash(const std::vector<std::string>& images, int distance) {
  std::vector<ScreenHash> hashes;
  for (const auto& p : images) {
    if (!fs::exists(p)) throw UsageError("image not found: " + p);
    hashes.push_back(phash(load_png(p)));
    std::cout << hashes.back().hex() << (images.size() > 1 ? "  " + p : "") << "\n";
  }
  if (hashes.size() == 2) {
    const int d = hamming_distance(hashes[0], hashes[1]);
    std::cout << "distance " << d << " same_screen " << (same_screen(hashes[0], hashes[1], distance) ? "true" : "false")
              << "\n";
  }
  return 0;
}

int run(int argc, char** argv) {
  auto cfg = load_config(config_path_from_args(argc, argv));

  CLI::App app{"uxpipe: usability-testing trace pipeline"};
  app.require_subcommand(1);
  std::string config_file;
  app.add_option("--config", config_file, "JSON config file (default: $UXPIPE_CONFIG)");

  auto& th = cfg.thresholds;

  SimgenArgs sg;
  auto* simgen = app.add_subcommand("simgen", "Generate simulated sites");
  simgen->add_option("--seed", sg.seed, "Site seed")->capture_default_str();
  simgen->add_option("--template", sg.tmpl, "shop, booking, forum or jobs")->capture_default_str();
  simgen->add_option("--defect", sg.defect, "Inject one defect principle");
  simgen->add_option("--defect-seed", sg.defect_seed, "Defect seed (default: site seed)");
  simgen->add_flag("--all-defects", sg.all_defects, "Write the plain site and one variant per principle");
  simgen->add_option("--count", sg.count, "Consecutive seeds to generate")->capture_default_str();
  simgen->add_option("--out", sg.out, "Output directory")->capture_default_str();
  simgen->add_option("--bundle", sg.bundle, "Also write static HTML bundles under this directory");

  std::string serve_site, host = "127.0.0.1";
  int serve_port = 8765;
  auto* simserve = app.add_subcommand("simserve", "Serve a simulated site over the environment protocol");
  simserve->add_option("--site", serve_site, "Site file")->required();
  simserve->add_option("--port", serve_port)->capture_default_str();
  simserve->add_option("--host", host)->capture_default_str();

  RolloutArgs ra;
  auto* rollout = app.add_subcommand("rollout", "Run testing sessions and archive them");
  rollout->add_option("--env", ra.env, "'sim' or environment URL")->capture_default_str();
  rollout->add_option("--policy", ra.policy, "scripted:NAME or chat endpoint URL")->capture_default_str();
  rollout->add_option("--site", ra.site, "Site file (sim) or site id (URL env)")->required();
  rollout->add_option("--budget", ra.budget, "Step budget (default from config)");
  rollout->add_option("--out", ra.out, "Trace root (default from config)");
  rollout->add_option("--rollouts", ra.rollouts, "Sessions to run")->capture_default_str();
  rollout->add_option("--date", ra.date, "Date substituted in the goal (default: today, UTC)");
  rollout->add_option("--model", ra.model, "Model name for a chat endpoint");
  rollout->add_option("--api-key-env", ra.api_key_env, "Variable holding the endpoint key")->capture_default_str();
  rollout->add_flag("--no-assessment", ra.no_assessment, "Skip the scoring turn");

  std::string traces_dir, traces_out;
  int jobs = 1;
  auto* score = app.add_subcommand("score-traces", "Navigation metrics per archived rollout");
  score->add_option("traces", traces_dir, "Trace directory")->required();
  score->add_option("--jobs", jobs)->capture_default_str();
  score->add_option("--out", traces_out, "Output file (default stdout)");

  std::string metrics_file, calib_out;
  double margin = th.margin;
  auto* calib = app.add_subcommand("calibrate", "Targets, rewards and rejection sampling");
  calib->add_option("metrics", metrics_file, "score-traces output")->required();
  calib->add_option("--margin", margin)->capture_default_str();
  calib->add_option("--out", calib_out, "Output file (default stdout)");

  std::string selected_file, export_dir;
  int window = th.window;
  auto* exp = app.add_subcommand("export", "Training dataset from selected rollouts");
  exp->add_option("selected", selected_file, "calibrate output or rollout list")->required();
  exp->add_option("out", export_dir, "Dataset directory (default: <datasets>/dataset)");
  exp->add_option("--window", window)->capture_default_str();

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Preference benchmark report");
  bench->add_option("--pairs", ba.pairs, "Preference pairs (JSONL)");
  bench->add_option("--manifest", ba.manifest, "Build --pairs from a site manifest first");
  bench->add_option("--variants", ba.variants, "Defect variants per source when building")->capture_default_str();
  bench->add_option("--scores", ba.scores, "Per-site scores (JSONL)");
  bench->add_option("--traces", ba.traces, "Use assessment scores of archived rollouts");
  bench->add_option("--critiques", ba.critiques, "Critique records (JSONL)");
  bench->add_option("--classifier", ba.classifier, "'keyword' or chat endpoint URL")->capture_default_str();
  bench->add_option("--out", ba.out, "Report file; JSON goes to <out>.json");
  bench->add_option("--jobs", ba.jobs)->capture_default_str();

  std::string arena_pairs, arena_log = "arena-log.jsonl", arena_sites;
  int arena_port = 8080, per_session = kPairsPerSession;
  auto* arena = app.add_subcommand("arena", "Pairwise rating service");
  arena->add_option("--pairs", arena_pairs, "Pair pool (JSONL)")->required();
  arena->add_option("--port", arena_port)->capture_default_str();
  arena->add_option("--host", host)->capture_default_str();
  arena->add_option("--log", arena_log, "Append-only session and vote log")->capture_default_str();
  arena->add_option("--sites", arena_sites, "Directory of site bundles mounted at /sites");
  arena->add_option("--per-session", per_session)->capture_default_str();
  arena->add_option("--seed", cfg.seeds.arena)->capture_default_str();

  std::vector<std::string> images;
  auto* hash = app.add_subcommand("hash", "Perceptual hash (16 hex digits); two images also print the distance");
  hash->add_option("images", images, "PNG files")->required()->expected(1, 2);

  for (auto* sub : {rollout, score, calib, bench}) {
    sub->add_option("--s-nav", th.s_nav, "Minimum navigation quality")->capture_default_str();
    sub->add_option("--min-steps", th.min_steps)->capture_default_str();
    sub->add_option("--hamming", th.hamming, "Same-screen distance")->capture_default_str();
  }
  bench->add_option("--seed", cfg.seeds.benchmark)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  cfg.thresholds.margin = margin;
  cfg.thresholds.window = window;
  cfg.validate();
  std::cerr << "config: " << echo_config(cfg) << "\n";

  if (*simgen) return run_simgen(sg);
  if (*simserve) return run_simserve(serve_site, serve_port, host);
  if (*rollout) return run_rollout(ra, cfg);
  if (*score) {
    emit(traces_out, summaries_to_jsonl(score_traces(traces_dir, cfg.nav(), jobs)));
    return 0;
  }
  if (*calib) return run_calibrate(metrics_file, margin, calib_out, cfg);
  if (*exp) return run_export(selected_file, export_dir.empty() ? cfg.paths.datasets + "/dataset" : export_dir, window);
  if (*bench) return run_bench(ba, cfg);
  if (*arena) return run_arena(arena_pairs, arena_port, host, arena_log, arena_sites, per_session, cfg);
  if (*hash) return run_hash(images, cfg.thresholds.hamming);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const TransportError& e) {
    std::cerr << "transport error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
