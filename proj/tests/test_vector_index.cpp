#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <queue>
#include <set>

#include "groupsearch/fixture.hpp"
#include "groupsearch/vector_index.hpp"
#include "random_embedder.hpp"

using namespace groupsearch;

namespace {

Corpus vector_corpus(std::size_t n, const std::string& gid = "g0") {
    Corpus c;
    c.add_group({gid, gid});
    for (std::size_t i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "p%05zu", i);
        c.add_post({buf, gid, "u", "doc " + std::to_string(i), 0, 0, 0, 0});
    }
    return c;
}

}  // namespace

TEST_SUITE_BEGIN("vector_index");

TEST_CASE("small groups become flat partitions and search exactly") {
    auto corpus = vector_corpus(10);
    testutil::RandomEmbedder emb(32, 5);
    auto index = build_vector_index(corpus, emb);
    REQUIRE(index.partitions().at("g0").kind == VectorIndex::PartitionKind::Flat);

    // query equal to an indexed vector comes back first with cosine 1
    auto q = emb.embed_doc(corpus.post("p00003").text);
    auto hits = index.ann_search("g0", q, 3);
    REQUIRE(!hits.empty());
    CHECK(hits[0].post_id == "p00003");
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-6));

    // flat ann == exact, including scores
    auto exact = index.exact_search("g0", q, 3);
    REQUIRE(hits.size() == exact.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
        CHECK(hits[i].post_id == exact[i].post_id);
        CHECK(hits[i].score == exact[i].score);
    }
}

TEST_CASE("k larger than the group returns every post, ranked") {
    auto corpus = vector_corpus(7);
    testutil::RandomEmbedder emb(32, 6);
    auto index = build_vector_index(corpus, emb);
    auto hits = index.ann_search("g0", emb.embed_doc("whatever"), 50);
    CHECK(hits.size() == 7);
    for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i - 1].score >= hits[i].score);
}

TEST_CASE("empty group searches to an empty list") {
    Corpus c;
    c.add_group({"g0", "empty"});
    testutil::RandomEmbedder emb(32, 7);
    auto index = build_vector_index(c, emb);
    CHECK(index.ann_search("g0", emb.embed_doc("q"), 5).empty());
    CHECK(index.exact_search("g0", emb.embed_doc("q"), 5).empty());
}

TEST_CASE("graph partition: recall, determinism, reachability") {
    const std::size_t n = 4000;
    auto corpus = vector_corpus(n);
    testutil::RandomEmbedder emb(64, 11);
    AnnParams params;
    params.flat_threshold = 500;  // force a graph partition
    auto index = build_vector_index(corpus, emb, params);
    const auto& part = index.partitions().at("g0");
    REQUIRE(part.kind == VectorIndex::PartitionKind::Graph);

    SUBCASE("recall@10 vs the exact oracle") {
        double total = 0.0;
        for (int qi = 0; qi < 50; ++qi) {
            auto q = emb.embed_doc("query " + std::to_string(qi));
            auto ann = index.ann_search("g0", q, 10);
            auto exact = index.exact_search("g0", q, 10);
            total += recall_at_k(ann, exact, 10);
        }
        CHECK(total / 50.0 >= 0.95);
    }

    SUBCASE("same seed rebuild produces an identical structure") {
        auto again = build_vector_index(corpus, emb, params);
        const auto& p2 = again.partitions().at("g0");
        CHECK(part.graph.entry_point == p2.graph.entry_point);
        CHECK(part.graph.max_level == p2.graph.max_level);
        CHECK(part.graph.levels == p2.graph.levels);
        CHECK(part.graph.neighbors == p2.graph.neighbors);
    }

    SUBCASE("every post is reachable from the entry point") {
        std::vector<bool> seen(n, false);
        std::queue<std::uint32_t> frontier;
        frontier.push(static_cast<std::uint32_t>(part.graph.entry_point));
        seen[part.graph.entry_point] = true;
        std::size_t count = 1;
        while (!frontier.empty()) {
            auto node = frontier.front();
            frontier.pop();
            for (auto nb : part.graph.neighbors[node][0]) {
                if (!seen[nb]) {
                    seen[nb] = true;
                    frontier.push(nb);
                    ++count;
                }
            }
        }
        CHECK(count == n);
    }

    SUBCASE("returned cosines equal the stored-vector cosine") {
        auto q = emb.embed_doc("check scores");
        for (const auto& hit : index.ann_search("g0", q, 10)) {
            EmbeddingVector stored;
            const double* p = index.vector_of("g0", hit.post_id);
            stored.values.assign(p, p + index.dim());
            CHECK(hit.score == doctest::Approx(cosine(q, stored)).epsilon(1e-9));
        }
    }
}

TEST_CASE("exact_search scores are non-increasing across random groups") {
    auto corpus = fixture::generate_fixture_corpus(61, 3, 80);
    HashingEmbedder emb({});
    auto index = build_vector_index(corpus, emb);
    for (const auto& gid : corpus.group_ids()) {
        auto hits = index.exact_search(gid, emb.embed_doc("muffins and juice"), 30);
        for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i - 1].score >= hits[i].score);
    }
}

TEST_CASE("recall_at_k counting") {
    auto mk = [](std::initializer_list<const char*> ids) {
        std::vector<ScoredPost> v;
        for (const char* id : ids) v.push_back({id, 0.0});
        return v;
    };
    CHECK(recall_at_k(mk({"a", "b", "c"}), mk({"a", "b", "c"}), 3) == 1.0);
    CHECK(recall_at_k(mk({"x", "y", "z"}), mk({"a", "b", "c"}), 3) == 0.0);
    auto ann = mk({"a", "b", "c", "d", "e", "f", "g", "h", "i", "x"});
    auto exact = mk({"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"});
    CHECK(recall_at_k(ann, exact, 10) == doctest::Approx(0.9));
    CHECK(recall_at_k(mk({"a"}), mk({}), 10) == 1.0);
    CHECK(recall_at_k(mk({"a", "b"}), mk({"a", "b"}), 10) == 1.0);  // min(k, |exact|)
}

TEST_CASE("dimension and group errors are typed") {
    auto corpus = vector_corpus(5);
    testutil::RandomEmbedder emb(32, 9);
    auto index = build_vector_index(corpus, emb);
    EmbeddingVector wrong;
    wrong.values.assign(16, 0.25);
    try {
        index.ann_search("g0", wrong, 3);
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
    try {
        index.ann_search("ghost", emb.embed_doc("q"), 3);
        FAIL("expected UnknownGroup");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnknownGroup);
    }
}

TEST_CASE("index round-trips through the binary container") {
    const std::size_t n = 1500;
    auto corpus = vector_corpus(n);
    testutil::RandomEmbedder emb(32, 13);
    AnnParams params;
    params.flat_threshold = 1000;  // graph partition
    auto index = build_vector_index(corpus, emb, params);

    auto path = (std::filesystem::temp_directory_path() / "vec.idx").string();
    index.save(path);
    auto loaded = VectorIndex::load(path);
    CHECK(loaded.dim() == index.dim());
    const auto& a = index.partitions().at("g0");
    const auto& b = loaded.partitions().at("g0");
    CHECK(a.kind == b.kind);
    CHECK(a.post_ids == b.post_ids);
    CHECK(a.vectors == b.vectors);
    CHECK(a.graph.neighbors == b.graph.neighbors);

    auto q = emb.embed_doc("roundtrip query");
    auto h1 = index.ann_search("g0", q, 10);
    auto h2 = loaded.ann_search("g0", q, 10);
    REQUIRE(h1.size() == h2.size());
    for (std::size_t i = 0; i < h1.size(); ++i) {
        CHECK(h1[i].post_id == h2[i].post_id);
        CHECK(h1[i].score == h2[i].score);
    }
}

TEST_CASE("loading garbage fails with VersionMismatch") {
    auto path = (std::filesystem::temp_directory_path() / "vec_bad.idx").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "GSRCHIDXgarbage after the magic";
    }
    CHECK_THROWS_AS(VectorIndex::load(path), Error);
}

TEST_SUITE_END();
