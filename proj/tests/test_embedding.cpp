#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <httplib.h>
#include <json.hpp>

#include "groupsearch/embedding.hpp"
#include "groupsearch/remote_embedder.hpp"

using namespace groupsearch;

namespace {

double norm_of(const EmbeddingVector& v) {
    double s = 0.0;
    for (double x : v.values) s += x * x;
    return std::sqrt(s);
}

std::string random_tokens(std::mt19937_64& rng, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out.push_back(' ');
        std::size_t len = 3 + rng() % 6;
        for (std::size_t c = 0; c < len; ++c) out.push_back('a' + static_cast<char>(rng() % 26));
    }
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("embedding");

TEST_CASE("embedding is deterministic and unit-norm") {
    HashingEmbedder emb({});
    auto a = emb.embed_doc("fresh cupcakes this morning");
    auto b = emb.embed_doc("fresh cupcakes this morning");
    CHECK(a.values == b.values);
    CHECK(norm_of(a) == doctest::Approx(1.0).epsilon(1e-6));

    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        auto v = emb.embed_doc(random_tokens(rng, 1 + rng() % 30));
        CHECK(norm_of(v) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("different seeds produce different vectors") {
    EmbedderConfig c1, c2;
    c2.seed = 43;
    HashingEmbedder e1(c1), e2(c2);
    CHECK(e1.embed_doc("cupcakes").values != e2.embed_doc("cupcakes").values);
}

TEST_CASE("empty text is rejected") {
    HashingEmbedder emb({});
    CHECK_THROWS_AS(emb.embed_doc("!!!"), Error);
}

TEST_CASE("synonym table collapses clustered phrases to identical vectors") {
    EmbedderConfig cfg;
    cfg.synonym_table = {{"cupcakes", 0}, {"small individual cakes", 0}};
    HashingEmbedder emb(cfg);
    double c = cosine(emb.embed_doc("cupcakes"), emb.embed_doc("small individual cakes"));
    CHECK(c == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(emb.canonical_tokens("small individual cakes") == std::vector<std::string>{"_syn0_"});
}

TEST_CASE("greedy canonicalization prefers the longest phrase") {
    EmbedderConfig cfg;
    cfg.synonym_table = {{"ice", 1}, {"ice cream", 2}};
    HashingEmbedder emb(cfg);
    CHECK(emb.canonical_tokens("dense ice cream") ==
          std::vector<std::string>{"dense", "_syn2_"});
    CHECK(emb.canonical_tokens("ice cold") == std::vector<std::string>{"_syn1_", "cold"});
}

TEST_CASE("query and doc towers share featurization") {
    HashingEmbedder emb({});
    auto q = preprocess_query("cupcakes");
    CHECK(cosine(emb.embed_query(q), emb.embed_doc("cupcakes")) ==
          doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("italian coffee drink reaches the cappuccino post through the synonym table") {
    EmbedderConfig cfg;
    cfg.synonym_table = {{"cappuccino", 4}, {"italian coffee drink", 4}};
    HashingEmbedder emb(cfg);
    auto q = preprocess_query("Italian coffee drink");
    double c = cosine(emb.embed_query(q), emb.embed_doc("Cappuccino!"));
    CHECK(c >= 0.9);
}

TEST_CASE("unrelated random 20-token strings stay well below 0.5 cosine") {
    HashingEmbedder emb({});
    std::mt19937_64 rng(12345);
    std::vector<double> cosines;
    for (int i = 0; i < 1000; ++i) {
        auto a = emb.embed_doc(random_tokens(rng, 20));
        auto b = emb.embed_doc(random_tokens(rng, 20));
        cosines.push_back(std::abs(cosine(a, b)));
    }
    std::sort(cosines.begin(), cosines.end());
    CHECK(cosines[989] < 0.5);  // 99th percentile
}

TEST_CASE("cosine identities and oracle agreement") {
    EmbeddingVector e1{{1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}};
    EmbeddingVector e2{{0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}};
    CHECK(cosine(e1, e1) == doctest::Approx(1.0));
    CHECK(cosine(e1, e2) == doctest::Approx(0.0));

    HashingEmbedder emb({});
    std::mt19937_64 rng(77);
    for (int i = 0; i < 100; ++i) {
        auto a = emb.embed_doc(random_tokens(rng, 10));
        auto b = emb.embed_doc(random_tokens(rng, 10));
        // full dot-over-norms oracle
        double dot = 0, na = 0, nb = 0;
        for (std::size_t k = 0; k < a.values.size(); ++k) {
            dot += a.values[k] * b.values[k];
            na += a.values[k] * a.values[k];
            nb += b.values[k] * b.values[k];
        }
        double want = dot / std::sqrt(na * nb);
        CHECK(cosine(a, b) == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("cosine rejects mismatched dimensions") {
    EmbeddingVector a{{1.0, 0.0}};
    EmbeddingVector b{{1.0, 0.0, 0.0}};
    try {
        cosine(a, b);
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
}

// ---------------------------------------------------------------------------
// Remote embedder against a local mock endpoint
// ---------------------------------------------------------------------------

namespace {

struct MockEmbedServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::size_t dim = 8;
    bool wrong_dim = false;

    MockEmbedServer() {
        server.Post("/embed", [this](const httplib::Request& req, httplib::Response& res) {
            auto body = nlohmann::json::parse(req.body);
            nlohmann::json vectors = nlohmann::json::array();
            std::size_t d = wrong_dim ? dim + 1 : dim;
            for (std::size_t i = 0; i < body["texts"].size(); ++i) {
                // order tag: slot 0 carries the input index (pre-normalization)
                std::vector<double> v(d, 0.0);
                v[0] = static_cast<double>(i) + 1.0;
                v[d - 1] = 1.0;
                vectors.push_back(v);
            }
            res.set_content(nlohmann::json{{"vectors", vectors}}.dump(), "application/json");
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    ~MockEmbedServer() {
        server.stop();
        thread.join();
    }
};

}  // namespace

TEST_CASE("remote embedder re-normalizes and preserves order") {
    MockEmbedServer mock;
    RemoteEmbedderConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(mock.port);
    cfg.dim = mock.dim;
    cfg.batch_size = 32;
    cfg.max_in_flight = 3;
    RemoteEmbedder remote(cfg);

    auto one = remote.embed_doc("hello");
    CHECK(norm_of(one) == doctest::Approx(1.0).epsilon(1e-6));

    std::vector<std::string> texts;
    for (int i = 0; i < 256; ++i) texts.push_back("t" + std::to_string(i));
    auto vecs = remote.embed_batch(texts, Tower::Doc);
    REQUIRE(vecs.size() == 256);
    for (std::size_t i = 0; i < vecs.size(); ++i) {
        CHECK(norm_of(vecs[i]) == doctest::Approx(1.0).epsilon(1e-6));
        // order tag survives normalization as a ratio
        std::size_t batch_pos = i % cfg.batch_size;
        double want_ratio = static_cast<double>(batch_pos) + 1.0;
        CHECK(vecs[i].values[0] / vecs[i].values[mock.dim - 1] ==
              doctest::Approx(want_ratio).epsilon(1e-4));
    }
}

TEST_CASE("remote embedder surfaces dimension mismatches") {
    MockEmbedServer mock;
    mock.wrong_dim = true;
    RemoteEmbedderConfig cfg;
    cfg.endpoint = "http://127.0.0.1:" + std::to_string(mock.port);
    cfg.dim = mock.dim;
    RemoteEmbedder remote(cfg);
    try {
        remote.embed_doc("hello");
        FAIL("expected DimensionMismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DimensionMismatch);
    }
}

TEST_CASE("unreachable endpoint raises Timeout") {
    RemoteEmbedderConfig cfg;
    cfg.endpoint = "http://127.0.0.1:9";  // discard port, nothing listens
    cfg.timeout_seconds = 1;
    RemoteEmbedder remote(cfg);
    try {
        remote.embed_doc("hello");
        FAIL("expected Timeout");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Timeout);
    }
}

TEST_SUITE_END();
