#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "engine_util.hpp"
#include "groupsearch/bvt_eval.hpp"

using namespace groupsearch;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

JudgeLabel L(char c) {
    switch (c) {
        case 'R':
            return JudgeLabel::Relevant;
        case 'S':
            return JudgeLabel::SomewhatRelevant;
        case 'I':
            return JudgeLabel::Irrelevant;
        case 'E':
            return JudgeLabel::Error;
        default:
            return JudgeLabel::Skip;
    }
}

// Independent rule table for three-round aggregation, written as literal case
// analysis rather than reusing the implementation's control flow.
JudgeLabel three_round_oracle(JudgeLabel a, JudgeLabel b, JudgeLabel c) {
    int nR = 0, nS = 0, nI = 0, nSkip = 0;
    for (JudgeLabel l : {a, b, c}) {
        if (l == JudgeLabel::Relevant) ++nR;
        if (l == JudgeLabel::SomewhatRelevant) ++nS;
        if (l == JudgeLabel::Irrelevant) ++nI;
        if (l == JudgeLabel::Skip) ++nSkip;
    }
    int valid = nR + nS + nI;
    if (valid == 0) return nSkip > 0 ? JudgeLabel::Skip : JudgeLabel::Error;
    if (2 * nR > valid) return JudgeLabel::Relevant;
    if (2 * nS > valid) return JudgeLabel::SomewhatRelevant;
    if (2 * nI > valid) return JudgeLabel::Irrelevant;
    // no strict majority: valid is 2 with distinct labels, or 3 all distinct
    if (valid == 3) return JudgeLabel::SomewhatRelevant;  // {R,S,I}
    if (nR == 1 && nS == 1) return JudgeLabel::SomewhatRelevant;
    if (nR == 1 && nI == 1) return JudgeLabel::SomewhatRelevant;  // exact midpoint
    return JudgeLabel::Irrelevant;                                // {S,I} rounds down
}

}  // namespace

TEST_SUITE_BEGIN("bvt_eval");

TEST_CASE("prompt rendering substitutes exactly and keeps the rubric") {
    auto tmpl = PromptTemplate::default_template();
    auto prompt = tmpl.render("cupcakes", "fresh cupcakes this morning", "u1");
    CHECK(prompt.find("cupcakes") != std::string::npos);
    CHECK(prompt.find("fresh cupcakes this morning") != std::string::npos);
    CHECK(prompt.find("u1") != std::string::npos);
    CHECK(prompt.find(kSomewhatRelevantRubric) != std::string::npos);
    CHECK(prompt.find("{query}") == std::string::npos);
    CHECK(prompt.find("{post_text}") == std::string::npos);
    CHECK(prompt.find("{user}") == std::string::npos);

    // byte-identical across renders
    CHECK(fnv1a_hex(prompt) ==
          fnv1a_hex(tmpl.render("cupcakes", "fresh cupcakes this morning", "u1")));
}

TEST_CASE("the shipped template file matches the built-in default") {
    auto tmpl = PromptTemplate::from_file(std::string(GROUPSEARCH_DATA_DIR) +
                                          "/prompt_relevance.txt");
    CHECK(tmpl.text.find(kSomewhatRelevantRubric) != std::string::npos);
    CHECK_NOTHROW(tmpl.render("q", "p", "u"));
}

TEST_CASE("templates without a placeholder are rejected") {
    PromptTemplate tmpl;
    tmpl.text = "Post: {post_text}, User: {user}";  // no {query}
    try {
        tmpl.render("q", "p", "u");
        FAIL("expected MissingPlaceholder");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingPlaceholder);
    }
}

TEST_CASE("mock judge applies the documented rules") {
    MockJudge judge(testutil::fixture_judge_config());
    auto pair = [](const std::string& q, const std::string& p) {
        JudgePair jp;
        jp.query_text = q;
        jp.post_text = p;
        return jp;
    };

    // Jaccard >= 0.5
    CHECK(judge.judge(pair("cupcakes", "cupcakes")) == JudgeLabel::Relevant);
    // synonym cluster match despite zero token overlap
    CHECK(judge.judge(pair("small individual cakes with frosting", "cupcakes")) ==
          JudgeLabel::Relevant);
    // shared topic tag (sports), different tokens
    CHECK(judge.judge(pair("basketball game tonight", "tennis practice schedule")) ==
          JudgeLabel::SomewhatRelevant);
    // shared content token
    CHECK(judge.judge(pair("fresh muffins", "muffins and more")) != JudgeLabel::Irrelevant);
    // stopword-only overlap does not count
    CHECK(judge.judge(pair("strolling with friends", "weekend with chores")) !=
          JudgeLabel::Relevant);
    // nothing shared
    CHECK(judge.judge(pair("basketball", "guitar lessons")) == JudgeLabel::Irrelevant);
}

TEST_CASE("mock judge fault injection is per-pair deterministic") {
    auto cfg = testutil::fixture_judge_config(0.3, 0.2, 42);
    MockJudge judge(cfg);
    MockJudge twin(cfg);
    std::mt19937_64 rng(5);
    int injected_err = 0, injected_skip = 0;
    for (int i = 0; i < 500; ++i) {
        std::string q = "query " + std::to_string(rng() % 100);
        std::string p = "post " + std::to_string(rng() % 100);
        int a = judge.injected_outcome(q, p);
        CHECK(a == twin.injected_outcome(q, p));
        JudgePair jp;
        jp.query_text = q;
        jp.post_text = p;
        auto label = judge.judge(jp);
        if (a == 1) {
            CHECK(label == JudgeLabel::Error);
            ++injected_err;
        } else if (a == 2) {
            CHECK(label == JudgeLabel::Skip);
            ++injected_skip;
        } else {
            CHECK(label != JudgeLabel::Error);
            CHECK(label != JudgeLabel::Skip);
        }
    }
    // seeded rates land near the configured values
    CHECK(injected_err > 0);
    CHECK(injected_skip > 0);
}

TEST_CASE("aggregate_rounds follows majority, median, then skip/error precedence") {
    using V = std::vector<JudgeLabel>;
    CHECK(aggregate_rounds(V{L('R'), L('R'), L('S')}) == JudgeLabel::Relevant);
    CHECK(aggregate_rounds(V{L('R'), L('S'), L('I')}) == JudgeLabel::SomewhatRelevant);
    CHECK(aggregate_rounds(V{L('E'), L('R'), L('R')}) == JudgeLabel::Relevant);
    CHECK(aggregate_rounds(V{L('E'), L('E'), L('K')}) == JudgeLabel::Skip);
    CHECK(aggregate_rounds(V{L('E'), L('E'), L('E')}) == JudgeLabel::Error);
    CHECK(aggregate_rounds(V{L('R')}) == JudgeLabel::Relevant);
    CHECK(aggregate_rounds(V{L('K')}) == JudgeLabel::Skip);
    CHECK_THROWS_AS(aggregate_rounds(V{}), Error);
}

TEST_CASE("exhaustive three-round rule table") {
    const JudgeLabel all[] = {JudgeLabel::Relevant, JudgeLabel::SomewhatRelevant,
                              JudgeLabel::Irrelevant, JudgeLabel::Error, JudgeLabel::Skip};
    for (JudgeLabel a : all) {
        for (JudgeLabel b : all) {
            for (JudgeLabel c : all) {
                CHECK(aggregate_rounds({a, b, c}) == three_round_oracle(a, b, c));
            }
        }
    }
}

TEST_CASE("aggregation is permutation-invariant") {
    const JudgeLabel all[] = {JudgeLabel::Relevant, JudgeLabel::SomewhatRelevant,
                              JudgeLabel::Irrelevant, JudgeLabel::Error, JudgeLabel::Skip};
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<JudgeLabel> rounds;
        std::size_t n = 1 + rng() % 5;
        for (std::size_t i = 0; i < n; ++i) rounds.push_back(all[rng() % 5]);
        auto base = aggregate_rounds(rounds);
        for (int shuffle = 0; shuffle < 5; ++shuffle) {
            for (std::size_t i = rounds.size(); i > 1; --i)
                std::swap(rounds[i - 1], rounds[rng() % i]);
            CHECK(aggregate_rounds(rounds) == base);
        }
    }
}

TEST_CASE("compute_metrics worked example: [R,R,S,I,Error] at top-5") {
    std::vector<JudgedPair> pairs;
    const char labels[] = {'R', 'R', 'S', 'I', 'E'};
    for (int i = 0; i < 5; ++i) pairs.push_back({"q1", "p" + std::to_string(i), i + 1, L(labels[i])});
    auto report = compute_metrics(pairs, {5});
    const auto& m = report.at_k(5);
    CHECK(m.defined);
    CHECK(m.rel_rate == doctest::Approx(0.5));
    CHECK(m.somewhat_rel_rate == doctest::Approx(0.75));
    CHECK(m.err_rate == doctest::Approx(0.2));
    CHECK(m.skip_rate == doctest::Approx(0.0));
}

TEST_CASE("all-relevant pairs give perfect rates") {
    std::vector<JudgedPair> pairs;
    for (int q = 0; q < 3; ++q)
        for (int i = 0; i < 10; ++i)
            pairs.push_back({"q" + std::to_string(q), "p" + std::to_string(i), i + 1, L('R')});
    auto report = compute_metrics(pairs, {5, 10});
    for (int k : {5, 10}) {
        const auto& m = report.at_k(k);
        CHECK(m.rel_rate == 1.0);
        CHECK(m.somewhat_rel_rate == 1.0);
        CHECK(m.err_rate == 0.0);
        CHECK(m.skip_rate == 0.0);
    }
}

TEST_CASE("rel_rate never exceeds somewhat_rel_rate over random label sets") {
    const char alphabet[] = {'R', 'S', 'I', 'E', 'K'};
    std::mt19937_64 rng(44);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<JudgedPair> pairs;
        int queries = 1 + rng() % 5;
        for (int q = 0; q < queries; ++q) {
            int depth = 1 + rng() % 10;
            for (int i = 0; i < depth; ++i)
                pairs.push_back({"q" + std::to_string(q), "p" + std::to_string(i), i + 1,
                                 L(alphabet[rng() % 5])});
        }
        auto report = compute_metrics(pairs, {5, 10});
        for (const auto& m : report.per_k) {
            if (!m.defined) continue;
            CHECK(m.rel_rate <= m.somewhat_rel_rate);
            CHECK(m.rel_rate >= 0.0);
            CHECK(m.somewhat_rel_rate <= 1.0);
            CHECK(m.err_rate + m.skip_rate <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("a k with no valid judgments is flagged undefined, not zero") {
    std::vector<JudgedPair> pairs = {{"q1", "p1", 1, L('E')}, {"q1", "p2", 2, L('K')}};
    auto report = compute_metrics(pairs, {5});
    const auto& m = report.at_k(5);
    CHECK_FALSE(m.defined);
    CHECK(m.err_rate == doctest::Approx(0.5));
    auto json_text = report.to_json_text();
    auto j = nlohmann::json::parse(json_text);
    CHECK(j["metrics"]["top5 rel rate"].is_null());
    CHECK(j["counts"]["top5"]["defined"] == false);
}

TEST_CASE("metrics over disjoint query subsets recombine by counts") {
    const char alphabet[] = {'R', 'S', 'I', 'E', 'K'};
    std::mt19937_64 rng(55);
    std::vector<JudgedPair> all, first, second;
    for (int q = 0; q < 10; ++q) {
        for (int i = 0; i < 8; ++i) {
            JudgedPair p{"q" + std::to_string(q), "p" + std::to_string(i), i + 1,
                         L(alphabet[rng() % 5])};
            all.push_back(p);
            (q < 5 ? first : second).push_back(p);
        }
    }
    auto ra = compute_metrics(all, {8});
    auto rf = compute_metrics(first, {8});
    auto rs = compute_metrics(second, {8});
    CHECK(ra.at_k(8).attempts == rf.at_k(8).attempts + rs.at_k(8).attempts);
    CHECK(ra.at_k(8).errors == rf.at_k(8).errors + rs.at_k(8).errors);
    CHECK(ra.at_k(8).skips == rf.at_k(8).skips + rs.at_k(8).skips);
    CHECK(ra.at_k(8).relevant == rf.at_k(8).relevant + rs.at_k(8).relevant);
    CHECK(ra.at_k(8).somewhat_relevant ==
          rf.at_k(8).somewhat_relevant + rs.at_k(8).somewhat_relevant);
}

TEST_CASE("replay marks deterministic engines stable and isolates failures") {
    auto fx = fixture::make_semantic_fixture(2);
    auto engine = testutil::make_fixture_engine(fx.corpus);

    std::vector<QueryRecord> queries = fx.semantic_queries();
    queries.push_back({"bad-query", "no-such-group", "anything"});

    auto snaps = replay_queries(engine, queries, 5, 3);
    int failed = 0, stable = 0, total_rounds = 0;
    for (const auto& s : snaps) {
        if (s.failed) {
            ++failed;
            CHECK(s.query_id == "bad-query");
            continue;
        }
        ++total_rounds;
        CHECK(s.stable);
        if (s.replay_round == 0) {
            ++stable;
            // snapshot equals a direct engine call
            auto direct = engine.search(s.group_id, queries[0].query_text, 5);
            if (s.query_id == queries[0].query_id) {
                REQUIRE(s.ranked.size() == direct.results.size());
                for (std::size_t i = 0; i < s.ranked.size(); ++i) {
                    CHECK(s.ranked[i].first == direct.results[i].post_id);
                    CHECK(s.ranked[i].second == direct.results[i].score);
                }
            }
        }
    }
    CHECK(failed == 1);
    CHECK(stable == static_cast<int>(fx.scenarios.size()));
    CHECK(total_rounds == static_cast<int>(fx.scenarios.size()) * 3);
}

TEST_CASE("run_bvt with a clean mock judge reports zero error and skip rates") {
    auto fx = fixture::make_mixed_fixture(6);
    auto engine = testutil::make_fixture_engine(fx.corpus);
    MockJudge judge(testutil::fixture_judge_config());
    BvtConfig cfg;
    auto result = run_bvt(engine, fx.all_queries(), judge, cfg);
    for (const auto& m : result.report.per_k) {
        CHECK(m.err_rate == 0.0);
        CHECK(m.skip_rate == 0.0);
        CHECK(m.defined);
    }
    CHECK(result.report.queries_failed == 0);
    CHECK(result.report.queries_unstable == 0);
    CHECK(result.report.judge_name == std::string("mock"));
}

TEST_CASE("injected faults show up in the report exactly") {
    auto fx = fixture::make_mixed_fixture(8);
    auto engine = testutil::make_fixture_engine(fx.corpus);
    auto jc = testutil::fixture_judge_config(0.1, 0.05, 99);
    MockJudge judge(jc);
    BvtConfig cfg;
    auto result = run_bvt(engine, fx.all_queries(), judge, cfg);

    // recompute the injections over the judged pairs at each k
    MockJudge oracle_judge(jc);
    for (const auto& m : result.report.per_k) {
        std::uint64_t want_err = 0, want_skip = 0, attempts = 0;
        for (const auto& snap : result.snapshots) {
            if (snap.failed || snap.replay_round != 0) continue;
            std::string query_text;
            for (const auto& q : fx.all_queries())
                if (q.query_id == snap.query_id) query_text = q.query_text;
            for (std::size_t pos = 0; pos < snap.ranked.size() && pos < std::size_t(m.k); ++pos) {
                ++attempts;
                int inj = oracle_judge.injected_outcome(
                    query_text, engine.corpus().post(snap.ranked[pos].first).text);
                if (inj == 1) ++want_err;
                if (inj == 2) ++want_skip;
            }
        }
        CHECK(m.attempts == attempts);
        CHECK(m.errors == want_err);
        CHECK(m.skips == want_skip);
        if (attempts > 0) {
            CHECK(m.err_rate ==
                  doctest::Approx(static_cast<double>(want_err) / attempts).epsilon(1e-12));
        }
    }
}

TEST_CASE("two identical runs produce byte-identical reports and audit logs") {
    auto fx = fixture::make_mixed_fixture(4);
    auto engine = testutil::make_fixture_engine(fx.corpus);
    MockJudge judge(testutil::fixture_judge_config(0.05, 0.05, 3));
    auto dir = fs::temp_directory_path();

    BvtConfig cfg;
    cfg.report_path = (dir / "report_a.json").string();
    cfg.audit_path = (dir / "audit_a.tsv").string();
    run_bvt(engine, fx.all_queries(), judge, cfg);

    cfg.report_path = (dir / "report_b.json").string();
    cfg.audit_path = (dir / "audit_b.tsv").string();
    run_bvt(engine, fx.all_queries(), judge, cfg);

    CHECK(slurp((dir / "report_a.json").string()) == slurp((dir / "report_b.json").string()));
    CHECK(slurp((dir / "audit_a.tsv").string()) == slurp((dir / "audit_b.tsv").string()));
    CHECK(!slurp((dir / "audit_a.tsv").string()).empty());
}

TEST_CASE("bounded concurrency does not change the outcome") {
    auto fx = fixture::make_mixed_fixture(9);
    auto engine = testutil::make_fixture_engine(fx.corpus);
    MockJudge judge(testutil::fixture_judge_config(0.1, 0.0, 5));
    BvtConfig cfg1;
    cfg1.concurrency = 1;
    BvtConfig cfg8;
    cfg8.concurrency = 8;
    auto a = run_bvt(engine, fx.all_queries(), judge, cfg1);
    auto b = run_bvt(engine, fx.all_queries(), judge, cfg8);
    CHECK(a.report.to_json_text() == b.report.to_json_text());
}

TEST_CASE("report table rendering carries the row names") {
    auto fx = fixture::make_semantic_fixture(10);
    auto engine = testutil::make_fixture_engine(fx.corpus);
    MockJudge judge(testutil::fixture_judge_config());
    auto result = run_bvt(engine, fx.semantic_queries(), judge, {});
    auto table = render_report_table(result.report.to_json_text());
    for (const char* row : {"top5 rel rate", "top5 somewhat rel rate", "top5 err rate",
                            "top5 skip rate", "top10 rel rate", "top10 somewhat rel rate",
                            "top10 err rate", "top10 skip rate"}) {
        CHECK(table.find(row) != std::string::npos);
    }
}

// ---------------------------------------------------------------------------
// Remote judge against a local mock endpoint
// ---------------------------------------------------------------------------

namespace {

struct MockJudgeServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::string reply = "RELEVANT";
    int status = 200;

    MockJudgeServer() {
        server.Post("/judge", [this](const httplib::Request& req, httplib::Response& res) {
            auto body = nlohmann::json::parse(req.body);
            REQUIRE(body.contains("prompt"));
            res.status = status;
            res.set_content(nlohmann::json{{"label", reply}}.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~MockJudgeServer() {
        server.stop();
        thread.join();
    }
};

}  // namespace

TEST_CASE("remote judge parses the constrained vocabulary") {
    MockJudgeServer mock;
    RemoteJudgeConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(mock.port);
    RemoteJudge judge(cfg);
    JudgePair pair;
    pair.prompt = "does it matter?";

    mock.reply = "RELEVANT";
    CHECK(judge.judge(pair) == JudgeLabel::Relevant);
    mock.reply = "SOMEWHAT_RELEVANT";
    CHECK(judge.judge(pair) == JudgeLabel::SomewhatRelevant);
    mock.reply = "IRRELEVANT";
    CHECK(judge.judge(pair) == JudgeLabel::Irrelevant);
    mock.reply = "MAYBE";
    CHECK(judge.judge(pair) == JudgeLabel::Error);
    mock.status = 500;
    mock.reply = "RELEVANT";
    CHECK(judge.judge(pair) == JudgeLabel::Error);
}

TEST_CASE("remote judge returns Skip after transport retries are exhausted") {
    RemoteJudgeConfig cfg;
    cfg.endpoint = "http://127.0.0.1:9";
    cfg.timeout_seconds = 1;
    cfg.retries = 1;
    cfg.backoff_initial_ms = 10;
    RemoteJudge judge(cfg);
    JudgePair pair;
    pair.prompt = "anyone there?";
    CHECK(judge.judge(pair) == JudgeLabel::Skip);
}

TEST_SUITE_END();
