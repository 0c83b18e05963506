#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "groupsearch/corpus.hpp"
#include "groupsearch/fixture.hpp"
#include "groupsearch/textproc.hpp"

using namespace groupsearch;
namespace fs = std::filesystem;

namespace {

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

}  // namespace

TEST_SUITE_BEGIN("corpus");

TEST_CASE("load_corpus counts posts per group") {
    auto path = temp_path("corpus_basic.jsonl");
    write_file(path,
               R"({"group_id": "g1", "name": "baking"})"
               "\n"
               R"({"post_id": "p1", "group_id": "g1", "text": "fresh cupcakes"})"
               "\n"
               R"({"post_id": "p2", "group_id": "g1", "text": "sourdough starter", "clicks": 3})"
               "\n"
               R"({"post_id": "p3", "group_id": "g1", "text": "oven tips", "unknown_key": 1})"
               "\n");
    auto corpus = load_corpus(path);
    CHECK(corpus.post_count("g1") == 3);
    CHECK(corpus.post("p2").clicks == 3);
    CHECK(corpus.post("p1").clicks == 0);  // engagement defaults
    CHECK(corpus.post("p3").text == "oven tips");
}

TEST_CASE("duplicate post_id is a hard error") {
    auto path = temp_path("corpus_dup.jsonl");
    write_file(path,
               R"({"group_id": "g1"})"
               "\n"
               R"({"post_id": "p1", "group_id": "g1", "text": "one"})"
               "\n"
               R"({"post_id": "p1", "group_id": "g1", "text": "two"})"
               "\n");
    try {
        load_corpus(path);
        FAIL("expected DuplicateId");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DuplicateId);
    }
}

TEST_CASE("post referencing an undeclared group is rejected") {
    auto path = temp_path("corpus_nogroup.jsonl");
    write_file(path, R"({"post_id": "p1", "group_id": "ghost", "text": "hello"})"
                     "\n");
    try {
        load_corpus(path);
        FAIL("expected UnknownGroup");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownGroup);
    }
}

TEST_CASE("malformed lines carry their line number") {
    auto path = temp_path("corpus_malformed.jsonl");
    write_file(path,
               R"({"group_id": "g1"})"
               "\n"
               "not json at all\n");
    try {
        load_corpus(path);
        FAIL("expected MalformedRecord");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedRecord);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("posts with empty-after-normalization text are rejected") {
    auto path = temp_path("corpus_empty_text.jsonl");
    write_file(path,
               R"({"group_id": "g1"})"
               "\n"
               R"({"post_id": "p1", "group_id": "g1", "text": "!!!"})"
               "\n");
    CHECK_THROWS_AS(load_corpus(path), Error);
}

TEST_CASE("negative created_at is rejected") {
    auto path = temp_path("corpus_neg_ts.jsonl");
    write_file(path,
               R"({"group_id": "g1"})"
               "\n"
               R"({"post_id": "p1", "group_id": "g1", "text": "ok", "created_at": -5})"
               "\n");
    CHECK_THROWS_AS(load_corpus(path), Error);
}

TEST_CASE("save and reload round-trips the corpus") {
    auto corpus = fixture::generate_fixture_corpus(5, 3, 40);
    auto path = temp_path("corpus_roundtrip.jsonl");
    save_corpus(corpus, path);
    auto reloaded = load_corpus(path);
    CHECK(reloaded == corpus);
}

TEST_CASE("fixture generator is deterministic and honors its bookkeeping") {
    auto a = fixture::generate_fixture_corpus(1, 2, 5);
    auto b = fixture::generate_fixture_corpus(1, 2, 5);
    CHECK(a.posts().size() == 10);
    CHECK(a == b);

    auto pa = temp_path("fixture_a.jsonl");
    auto pb = temp_path("fixture_b.jsonl");
    save_corpus(a, pa);
    save_corpus(b, pb);
    CHECK(slurp(pa) == slurp(pb));  // byte-identical
}

TEST_CASE("10k-record fixture file loads with per-group counts matching the generator") {
    const std::size_t n_groups = 5, per_group = 2000;
    auto corpus = fixture::generate_fixture_corpus(99, n_groups, per_group);
    auto path = temp_path("fixture_10k.jsonl");
    save_corpus(corpus, path);
    auto loaded = load_corpus(path);

    CHECK(loaded.posts().size() == n_groups * per_group);
    std::size_t total = 0;
    for (const auto& gid : loaded.group_ids()) {
        CHECK(loaded.post_count(gid) == per_group);
        total += loaded.post_count(gid);
    }
    CHECK(total == loaded.posts().size());
}

TEST_CASE("every synonym-cluster term appears at least once per group") {
    auto corpus = fixture::generate_fixture_corpus(7, 5, 2000);
    for (const auto& gid : corpus.group_ids()) {
        std::string all_text;
        for (const auto& pid : corpus.group_posts(gid)) {
            all_text += " " + normalize(corpus.post(pid).text) + " ";
        }
        for (const auto& cluster : fixture::synonym_clusters()) {
            CHECK(all_text.find(" " + cluster.canonical + " ") != std::string::npos);
            CHECK(all_text.find(" " + normalize(cluster.paraphrase) + " ") != std::string::npos);
        }
    }
}

TEST_CASE("query set round-trips") {
    std::vector<QueryRecord> queries = {{"q1", "g1", "fresh cupcakes"},
                                        {"q2", "g2", "italian coffee drink"}};
    auto path = temp_path("queries.jsonl");
    save_query_set(queries, path);
    CHECK(load_query_set(path) == queries);
}

TEST_CASE("duplicate query ids are rejected") {
    auto path = temp_path("queries_dup.jsonl");
    write_file(path,
               R"({"query_id": "q1", "group_id": "g1", "query_text": "a b"})"
               "\n"
               R"({"query_id": "q1", "group_id": "g1", "query_text": "c d"})"
               "\n");
    CHECK_THROWS_AS(load_query_set(path), Error);
}

TEST_SUITE_END();
