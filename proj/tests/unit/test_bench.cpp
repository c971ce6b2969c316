#include <gtest/gtest.h>

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>

#include "../support/oracles.hpp"
#include "uxpipe/arena_server.hpp"
#include "uxpipe/bench.hpp"
#include "uxpipe/harness.hpp"
#include "uxpipe/remote.hpp"
#include "uxpipe/sim/policies.hpp"
#include "uxpipe/sim/sim_environment.hpp"

using namespace uxpipe;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("uxpipe_bench_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

PreferencePair pair(std::string id, std::string l, std::string r, Side label = Side::left) {
  return {std::move(id), std::move(l), std::move(r), label, LabelSource::ground_truth};
}

std::vector<ManifestEntry> manifest(int sources, int variants) {
  std::vector<ManifestEntry> m;
  for (int s = 0; s < sources; ++s) {
    const auto plain = "shop-" + std::to_string(s);
    m.push_back({plain, plain, std::nullopt});
    for (int v = 0; v < variants; ++v)
      m.push_back({plain + "+" + to_string(kAllPrinciples[v]), plain, plain});
  }
  return m;
}

}  // namespace

// ---------------------------------------------------------------- benchmark construction

TEST(Benchmark, ThirtySourcesGiveOneHundredFiftySites) {
  const auto m = manifest(30, 8);
  const auto pairs = build_benchmark(m, 1);
  EXPECT_EQ(pairs.size(), 120u);
  EXPECT_EQ(benchmark_sites(pairs).size(), 150u);
  EXPECT_EQ(build_benchmark(m, 1), pairs);
  EXPECT_NE(build_benchmark(m, 2), pairs);
  for (const auto& p : pairs) {
    EXPECT_FALSE(parent_site(p.chosen()).has_value());
    EXPECT_EQ(parent_site(p.rejected()), p.chosen());
  }
  EXPECT_EQ(parse_pairs(pairs_to_jsonl(pairs)), pairs);
}

TEST(Benchmark, TooFewVariantsIsAnError) {
  EXPECT_THROW(build_benchmark(manifest(3, 2), 1), DataError);
}

TEST(Benchmark, ManifestAndScoresParse) {
  const auto m = parse_manifest(R"({"site_id":"a"}
{"site_id":"a+feedback","source":"a","parent":"a"}
)");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].source, "a");
  EXPECT_EQ(m[1].parent, "a");

  const auto s = parse_scores(R"({"site_id":"a","predicted_score":80}
{"site_id":"a","predicted_score":60}
{"site_id":"b","score":null}
)");
  EXPECT_EQ(s.at("a"), 70);
  EXPECT_EQ(s.at("b"), std::nullopt);
  EXPECT_THROW(parse_scores("{nope}\n"), DataError);
}

// ---------------------------------------------------------------- judging and ranking

TEST(Judge, TiesAreErrorsAndMissingScoresVoteForTheOtherSide) {
  const auto p = pair("p", "L", "R");
  EXPECT_TRUE(judge_pair(p, 80, 40));
  EXPECT_FALSE(judge_pair(p, 60, 60));
  EXPECT_FALSE(judge_pair(p, std::nullopt, 40));
  EXPECT_TRUE(judge_pair(p, 40, std::nullopt));
  EXPECT_THROW(judge_pair(pair("t", "L", "R", Side::tie), 1, 2), DataError);
}

TEST(Judge, AgreementSkipsTiePairsAndDeltaIsChosenMinusRejected) {
  const std::vector<PreferencePair> ps = {pair("1", "a", "b"), pair("2", "c", "d", Side::right),
                                          pair("3", "e", "f", Side::tie)};
  const ScoreTable s = {{"a", 80}, {"b", 40}, {"c", 70}, {"d", 50}};
  EXPECT_EQ(agreement_rate(ps, s), 0.5);
  EXPECT_EQ(mean_delta(ps, s), (40.0 + -20.0) / 2);
}

TEST(AveragePrecision, PaperShapedExamples) {
  std::vector<ScoredSite> perfect;
  for (double v : {80, 70}) perfect.push_back({"c", v, true});
  for (double v : {40, 30, 20, 10}) perfect.push_back({"r", v, false});
  EXPECT_EQ(average_precision(perfect), 1.0);

  const std::vector<ScoredSite> mixed = {{"a", 0.9, true}, {"b", 0.8, false}, {"c", 0.7, true}, {"d", 0.1, false}};
  EXPECT_NEAR(average_precision(mixed), (1 + 2.0 / 3) / 2, 1e-12);

  const std::vector<ScoredSite> flat = {{"a", 5, true}, {"b", 5, false}, {"c", 5, false}, {"d", 5, true},
                                        {"e", 5, false}};
  EXPECT_NEAR(average_precision(flat), 0.4, 1e-12);

  EXPECT_THROW(average_precision(std::vector<ScoredSite>{{"a", 1, true}}), DataError);
}

TEST(AveragePrecision, MatchesTheThresholdSweepOnAllSmallSets) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    std::vector<double> scores(n);
    std::vector<bool> labels(n);
    for (int i = 0; i < n; ++i) {
      scores[i] = std::uniform_int_distribution<int>(0, 4)(rng);  // coarse, so ties are common
      labels[i] = rng() & 1;
    }
    if (std::count(labels.begin(), labels.end(), true) == 0) labels[0] = true;
    if (std::count(labels.begin(), labels.end(), false) == 0) labels[n - 1] = false;
    std::vector<ScoredSite> sites;
    for (int i = 0; i < n; ++i) sites.push_back({std::to_string(i), scores[i], labels[i]});
    ASSERT_NEAR(average_precision(sites), oracle::average_precision(scores, labels), 1e-9) << trial;
  }
}

TEST(AveragePrecision, MissingScoresRankLast) {
  const std::vector<PreferencePair> ps = {pair("1", "a", "b"), pair("2", "c", "d")};
  const ScoreTable s = {{"a", 10}, {"b", 20}, {"d", 0}};
  const auto sites = scored_sites(ps, s);
  ASSERT_EQ(sites.size(), 4u);
  std::vector<double> scores;
  std::vector<bool> labels;
  for (const auto& x : sites) {
    scores.push_back(x.score.value_or(kMissingScore));
    labels.push_back(x.chosen);
  }
  EXPECT_NEAR(auc_pr(ps, s), oracle::average_precision(scores, labels), 1e-12);
}

// ---------------------------------------------------------------- agreement between raters

TEST(Krippendorff, HandCases) {
  using R = std::vector<std::optional<std::string>>;
  EXPECT_EQ(krippendorff_alpha({R{"A", "B", "A", "B"}, R{"A", "B", "A", "B"}}), 1.0);

  // Coincidences: o_AA = o_BB = o_AB = o_BA = 2, n = 8, n_A = n_B = 4:
  // D_o = 4/8, D_e = 2*4*4/(8*7), alpha = 1 - 0.5/(32/56) = 0.125.
  const std::vector<R> hand = {R{"A", "A", "B", "B"}, R{"A", "B", "B", "A"}};
  ASSERT_TRUE(krippendorff_alpha(hand));
  EXPECT_NEAR(*krippendorff_alpha(hand), 0.125, 1e-9);
  EXPECT_NEAR(*krippendorff_alpha(hand), *oracle::krippendorff_alpha(hand), 1e-9);

  EXPECT_LT(*krippendorff_alpha({R{"A", "B", "A", "B"}, R{"B", "A", "B", "A"}}), 0);
  EXPECT_FALSE(krippendorff_alpha({R{"A", "A"}, R{"A", "A"}}));
  EXPECT_THROW(krippendorff_alpha({R{"A", std::nullopt}, R{std::nullopt, "B"}}), DataError);
}

TEST(Krippendorff, MatchesTheOracleWithMissingEntries) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> cats = {"x", "y", "z"};
  for (int trial = 0; trial < 200; ++trial) {
    const int raters = std::uniform_int_distribution<int>(2, 5)(rng);
    const int items = std::uniform_int_distribution<int>(2, 10)(rng);
    std::vector<std::vector<std::optional<std::string>>> m(raters);
    for (auto& row : m)
      for (int i = 0; i < items; ++i)
        row.push_back(rng() % 4 == 0 ? std::nullopt : std::optional(cats[rng() % cats.size()]));
    std::optional<double> want;
    try {
      want = oracle::krippendorff_alpha(m);
      const auto got = krippendorff_alpha(m);
      ASSERT_EQ(got.has_value(), want.has_value()) << trial;
      if (got) {
        ASSERT_NEAR(*got, *want, 1e-9) << trial;
      }
    } catch (const DataError&) {
      ASSERT_FALSE(oracle::krippendorff_alpha(m)) << trial;
    }
  }
}

// ---------------------------------------------------------------- critiques

TEST(Critiques, TableRowsReproducePrintedPercentages) {
  struct Row {
    DefectPrinciple p;
    int plain_tp, plain_fp, da_tp, da_fp;
    const char *plain, *da;
  };
  const std::vector<Row> rows = {
      {DefectPrinciple::consistency, 1, 1, 9, 1, "50%", "90%"},
      {DefectPrinciple::feedback, 18, 19, 95, 52, "49%", "65%"},
      {DefectPrinciple::dialog, 0, 1, 1, 0, "0%", "100%"},
      {DefectPrinciple::prevention, 3, 0, 25, 8, "100%", "76%"},
      {DefectPrinciple::control, 14, 3, 44, 22, "82%", "67%"},
      {DefectPrinciple::reversal, 0, 0, 1, 0, "--", "100%"},
      {DefectPrinciple::memory, 0, 0, 2, 1, "--", "67%"},
      {DefectPrinciple::hierarchy, 6, 3, 40, 1, "67%", "98%"},
  };
  std::vector<CritiqueRecord> records;
  const auto add = [&](const char* site, DefectPrinciple p, int n, Verdict v) {
    for (int i = 0; i < n; ++i) records.push_back({site, "issue", p, v});
  };
  for (const auto& r : rows) {
    add("shop-1", r.p, r.plain_tp, Verdict::tp);
    add("shop-1", r.p, r.plain_fp, Verdict::fp);
    add("shop-1+feedback", r.p, r.da_tp, Verdict::tp);
    add("shop-1+feedback", r.p, r.da_fp, Verdict::fp);
  }
  const auto t = critique_report(records);
  for (const auto& r : rows) {
    EXPECT_EQ(t.at(r.p, false).text(), r.plain) << display_name(r.p);
    EXPECT_EQ(t.at(r.p, true).text(), r.da) << display_name(r.p);
  }
}

TEST(Critiques, IssuesAreExtractedAndClassified) {
  const auto issues = extract_issues("Summary line\n- Major: nothing happened after clicking Buy\n"
                                     "2. The back button does nothing\n* Checkout is buried below the fold\n"
                                     "Action: score(40)");
  ASSERT_EQ(issues.size(), 3u);
  EXPECT_EQ(keyword_classify(issues[0]), DefectPrinciple::feedback);
  EXPECT_EQ(keyword_classify(issues[2]), DefectPrinciple::hierarchy);
  EXPECT_EQ(keyword_classify("lovely colours"), std::nullopt);

  const auto recs = parse_critiques(R"({"site_id":"a","issue":"the page did nothing, no feedback","verified":"TP"}
{"site_id":"a+memory","issue":"x","category":"Memory","verified":"FP"}
)",
                                    keyword_classify);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].category, DefectPrinciple::feedback);
  EXPECT_EQ(recs[1].category, DefectPrinciple::memory);
  EXPECT_EQ(recs[1].verified, Verdict::fp);
}

TEST(Report, TextAndJsonCarryTheSameNumbers) {
  const std::vector<PreferencePair> ps = {pair("1", "a", "a+feedback"), pair("2", "b+dialog", "b", Side::right)};
  const ScoreTable s = {{"a", 80}, {"a+feedback", 40}, {"b", 70}, {"b+dialog", 60}};
  const std::vector<CritiqueRecord> cr = {{"a", "i", DefectPrinciple::consistency, Verdict::tp}};
  const auto r = evaluate_benchmark(ps, s, cr);
  EXPECT_EQ(r.auc_pr, 1.0);
  EXPECT_EQ(r.agreement_rate, 1.0);
  const auto text = format_report(r);
  EXPECT_NE(text.find("1.0000"), std::string::npos);
  EXPECT_NE(text.find("Consistency"), std::string::npos);
  const auto j = report_json(r);
  EXPECT_EQ(j["auc_pr"], 1.0);
  EXPECT_EQ(j["critique_precision"]["consistency"]["plain"]["precision"], "100%");
  EXPECT_EQ(j["critique_precision"]["reversal"]["plain"]["precision"], "--");
}

// ---------------------------------------------------------------- arena

namespace {

std::vector<PreferencePair> pool(int n) {
  std::vector<PreferencePair> out;
  for (int i = 0; i < n; ++i)
    out.push_back(pair("p" + std::to_string(i), "s" + std::to_string(i), "s" + std::to_string(i) + "+feedback"));
  return out;
}

Vote vote(const std::string& pair_id, const std::string& session, Side choice = Side::left, int duration_ms = 50000) {
  return {pair_id, session, choice, {duration_ms, 4, 9, true, true}, "", ""};
}

}  // namespace

TEST(Arena, SessionsHoldThirtyDistinctPairs) {
  ArenaService a(pool(100), "");
  const auto s = a.create_session();
  EXPECT_EQ(s.pair_ids.size(), 30u);
  EXPECT_EQ(std::set<std::string>(s.pair_ids.begin(), s.pair_ids.end()).size(), 30u);

  ArenaService small(pool(29), "");
  EXPECT_THROW(small.create_session(), DataError);
}

TEST(Arena, LeastRatedPairsAreAssignedFirst) {
  ArenaService a(pool(30), "");
  a.create_session();
  a.create_session();
  for (const auto& [id, n] : a.assignment_counts()) EXPECT_EQ(n, 2) << id;

  ArenaService b(pool(45), "");
  b.create_session();
  const auto second = b.create_session();
  const auto counts = b.assignment_counts();
  int twice = 0;
  for (const auto& [id, n] : counts) twice += n == 2;
  EXPECT_EQ(twice, 15);
  (void)second;
}

TEST(Arena, VotesNeedBothExpansionsAndCountOnce) {
  ArenaService a(pool(30), "");
  const auto s = a.create_session();
  auto v = vote(s.pair_ids[0], s.session_id);
  v.telemetry.expanded_right = false;
  EXPECT_EQ(a.record_vote(v).status, 422);
  v.telemetry.expanded_right = true;
  EXPECT_EQ(a.record_vote(v).status, 200);
  EXPECT_EQ(a.record_vote(v).status, 409);
  EXPECT_EQ(a.record_vote(vote(s.pair_ids[1], "nope")).status, 404);
  EXPECT_EQ(a.record_vote(vote("p-unassigned", s.session_id)).status, 422);
}

TEST(Arena, DurationOutliers) {
  const auto stats_of = [](const std::vector<double>& secs) { return mean_without_outliers(secs); };
  auto [mean, removed] = stats_of({50, 52, 54, 56, 58});
  EXPECT_EQ(mean, 54);
  EXPECT_EQ(removed, 0);

  // Nine equal values and one extreme: the extreme sits at z = 3 exactly
  // (population deviation), which a strict z > 3 rule keeps.
  std::vector<double> nine(9, 50.0);
  nine.push_back(5000);
  std::tie(mean, removed) = stats_of(nine);
  EXPECT_EQ(removed, 0);
  EXPECT_NEAR(mean, 545, 1e-9);

  // With nineteen equal values the extreme is at z ~ 4.4 and is dropped.
  std::vector<double> nineteen(19, 50.0);
  nineteen.push_back(5000);
  std::tie(mean, removed) = stats_of(nineteen);
  EXPECT_EQ(removed, 1);
  EXPECT_EQ(mean, 50);
}

TEST(Arena, StatsAndExportedPairs) {
  ArenaService a(pool(30), "");
  const auto s1 = a.create_session();
  for (int i = 0; i < 5; ++i) ASSERT_EQ(a.record_vote(vote(s1.pair_ids[i], s1.session_id, Side::left, 50000 + 2000 * i)).status, 200);
  auto st = a.stats();
  EXPECT_EQ(st.n_votes, 5);
  EXPECT_NEAR(*st.mean_duration_s, 54, 1e-9);
  EXPECT_EQ(st.mean_frame_clicks, 4);
  EXPECT_EQ(st.mean_element_clicks, 9);
  EXPECT_FALSE(st.alpha);

  const auto exported = export_pairs(a.votes());
  ASSERT_EQ(exported.size(), 5u);
  for (std::size_t i = 0; i < exported.size(); ++i) {
    EXPECT_EQ(exported[i].label_source, LabelSource::human);
    EXPECT_EQ(exported[i].label, Side::left);
    const auto view = a.pair_view(s1.pair_ids[i], s1.session_id);
    EXPECT_EQ(exported[i].left_site, view->left_site);
  }

  const auto tie = export_pairs(std::vector<Vote>{vote("x", "s", Side::tie)});
  EXPECT_EQ(tie[0].label, Side::tie);
  EXPECT_EQ(agreement_rate(tie, {}), std::nullopt);
}

TEST(Arena, AlphaAcrossSessionsUsesTheChosenSite) {
  ArenaService a(pool(30), "");
  const auto s1 = a.create_session(), s2 = a.create_session();
  // Both raters prefer the plain site everywhere, whatever side it was shown on.
  for (const auto* s : {&s1, &s2})
    for (const auto& id : s->pair_ids) {
      const auto view = a.pair_view(id, s->session_id);
      const Side plain_side = parent_site(view->left_site) ? Side::right : Side::left;
      ASSERT_EQ(a.record_vote(vote(id, s->session_id, plain_side)).status, 200);
    }
  // Every chosen site is distinct per pair, so agreement is perfect.
  EXPECT_EQ(a.stats().alpha, 1.0);
}

TEST(Arena, LogReplayRestoresState) {
  const auto log = scratch("arena") / "log.jsonl";
  std::string next_session;
  {
    ArenaService a(pool(40), log, 7);
    const auto s = a.create_session();
    ASSERT_EQ(a.record_vote(vote(s.pair_ids[0], s.session_id)).status, 200);
    next_session = a.create_session().session_id;
  }
  ArenaService b(pool(40), log, 7);
  EXPECT_EQ(b.votes().size(), 1u);
  EXPECT_TRUE(b.session(next_session));
  const auto s1 = b.session("s1");
  EXPECT_EQ(b.record_vote(vote(s1->pair_ids[0], "s1")).status, 409);
  EXPECT_EQ(b.create_session().session_id, "s3");
}

TEST(ArenaHttp, FullSessionLifecycle) {
  const auto sites = scratch("arena_sites");
  fs::create_directories(sites / "s0");
  std::ofstream(sites / "s0" / "index.html") << "<html>site</html>";

  ArenaService service(pool(30), "");
  ArenaServer server(service, sites);
  const int port = server.start_background();
  httplib::Client cli("127.0.0.1", port);

  auto res = cli.Post("/api/session", R"({"participant":"p1"})", "application/json");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  const auto session = json::parse(res->body);
  const auto sid = session["session_id"].get<std::string>();
  ASSERT_EQ(session["pair_ids"].size(), 30u);

  for (const auto& id : session["pair_ids"]) {
    res = cli.Get("/api/pair/" + id.get<std::string>() + "?session=" + sid);
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200);
    const auto view = json::parse(res->body);
    EXPECT_EQ(view["instructions"].size(), arena_instructions().size());
    EXPECT_EQ(view["left_url"].get<std::string>().rfind("/sites/", 0), 0u);

    json body = {{"pair_id", id},
                 {"session_id", sid},
                 {"choice", "left"},
                 {"telemetry",
                  {{"duration_ms", 40000}, {"frame_clicks", 3}, {"element_clicks", 5}, {"expanded_left", true},
                   {"expanded_right", false}}}};
    res = cli.Post("/api/vote", body.dump(), "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 422);
    body["telemetry"]["expanded_right"] = true;
    res = cli.Post("/api/vote", body.dump(), "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
  }

  json partial = {{"pair_id", session["pair_ids"][0]},
                  {"session_id", sid},
                  {"choice", "left"},
                  {"telemetry", {{"duration_ms", 1}, {"expanded_left", true}, {"expanded_right", true}}}};
  res = cli.Post("/api/vote", partial.dump(), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 422);

  res = cli.Get("/api/stats");
  ASSERT_TRUE(res);
  const auto stats = json::parse(res->body);
  EXPECT_EQ(stats["n_votes"], 30);
  EXPECT_EQ(stats["mean_duration_s"], 40.0);

  res = cli.Get("/sites/s0/index.html");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "<html>site</html>");
  EXPECT_EQ(cli.Get("/api/pair/unknown")->status, 404);
  server.stop();
}

TEST(ArenaHttp, SmallPoolCannotStartASession) {
  ArenaService service(pool(5), "");
  ArenaServer server(service);
  const int port = server.start_background();
  httplib::Client cli("127.0.0.1", port);
  const auto res = cli.Post("/api/session", "", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 409);
}

// ---------------------------------------------------------------- remote endpoints

namespace {

// Chat-completions stand-in: fails the first `failures` requests with `status`.
class MockChat {
 public:
  MockChat(int failures, int status) : failures_(failures), status_(status) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++calls;
      last_request = json::parse(req.body);
      auth = req.get_header_value("Authorization");
      if (n <= failures_) {
        res.status = status_;
        res.set_content("{}", "application/json");
        return;
      }
      res.set_content(json{{"choices", {{{"message", {{"role", "assistant"}, {"content", "Action: stop()"}}}}}}}.dump(),
                      "application/json");
    });
    port = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockChat() {
    server_.stop();
    thread_.join();
  }

  std::atomic<int> calls{0};
  json last_request;
  std::string auth;
  int port = 0;

 private:
  int failures_, status_;
  httplib::Server server_;
  std::thread thread_;
};

RemotePolicyConfig policy_config(int port) {
  RemotePolicyConfig c;
  c.base_url = "http://127.0.0.1:" + std::to_string(port);
  c.model = "m";
  c.api_key = "k";
  c.backoff_ms = 1;
  c.max_retries = 3;
  c.timeout_ms = 5000;
  return c;
}

std::vector<ChatMessage> one_image_message() {
  auto img = std::make_shared<Screenshot>(8, 8);
  return {ChatMessage{"user", {TextPart{"look"}, ImagePart{img}}}};
}

}  // namespace

TEST(RemotePolicy, SendsImagesAndRetriesServerErrors) {
  MockChat chat(2, 503);
  RemotePolicy p(policy_config(chat.port));
  EXPECT_EQ(p.generate(one_image_message()), "Action: stop()");
  EXPECT_EQ(chat.calls, 3);
  EXPECT_EQ(chat.auth, "Bearer k");
  const auto& content = chat.last_request["messages"][0]["content"];
  EXPECT_EQ(content[0]["text"], "look");
  EXPECT_EQ(content[1]["image_url"]["url"].get<std::string>().rfind("data:image/png;base64,", 0), 0u);
}

TEST(RemotePolicy, GivesUpAfterRetriesAndOnClientErrors) {
  MockChat busy(10, 500);
  RemotePolicy p(policy_config(busy.port));
  EXPECT_THROW(p.generate(one_image_message()), TransportError);
  EXPECT_EQ(busy.calls, 4);

  MockChat bad(10, 400);
  RemotePolicy q(policy_config(bad.port));
  EXPECT_THROW(q.generate(one_image_message()), TransportError);
  EXPECT_EQ(bad.calls, 1);

  auto cfg = policy_config(1);
  cfg.max_retries = 0;
  cfg.timeout_ms = 500;
  EXPECT_THROW(RemotePolicy(cfg).generate(one_image_message()), TransportError);
}

TEST(RemotePolicy, ResponseParsing) {
  EXPECT_EQ(chat_response_text(R"({"choices":[{"message":{"content":[{"type":"text","text":"a"},{"type":"text","text":"b"}]}}]})"),
            "ab");
  EXPECT_THROW(chat_response_text("{}"), TransportError);
  EXPECT_THROW(chat_response_text("not json"), TransportError);
}

TEST(EnvironmentProtocol, RemoteSessionMatchesLocalSession) {
  const auto site = sim::generate_site(4, sim::Template::booking);
  SessionConfig cfg;
  cfg.rollout_id = "r1";
  cfg.site_id = site.site_id;
  cfg.date = "2026-01-01";
  cfg.budget = 12;

  sim::SimEnvironment local(site);
  auto local_policy = sim::make_scripted_policy("explorer", local);
  const auto want = run_session(local, *local_policy, cfg);

  sim::SimEnvironment served(site);
  EnvironmentServer server(served);
  const int port = server.start_background();
  RemoteEnvironment remote("http://127.0.0.1:" + std::to_string(port));
  remote.reset();
  auto remote_policy = sim::make_scripted_policy("explorer", served);
  const auto got = run_session(remote, *remote_policy, cfg);
  EXPECT_EQ(got, want);

  httplib::Client cli("127.0.0.1", port);
  const auto res = cli.Post("/act", R"x({"action":"Action: fly()"})x", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  server.stop();
  EXPECT_THROW(remote.observe(), TransportError);
}
