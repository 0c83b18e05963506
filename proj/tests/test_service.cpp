#include <doctest.h>

#include <future>
#include <memory>

#include <httplib.h>
#include <json.hpp>

#include "engine_util.hpp"
#include "groupsearch/service.hpp"

using namespace groupsearch;
using json = nlohmann::json;

namespace {

struct ServiceRig {
    SearchService service;
    int port = 0;
    std::shared_ptr<const Engine> engine;

    explicit ServiceRig(bool with_engine = true) {
        if (with_engine) {
            auto fx = fixture::make_mixed_fixture(12);
            engine = std::make_shared<const Engine>(testutil::make_fixture_engine(fx.corpus));
            service.set_engine(engine);
        }
        port = service.start("127.0.0.1", 0);
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(10);
        return c;
    }
};

json parse(const httplib::Result& res) {
    REQUIRE(res);
    return json::parse(res->body);
}

}  // namespace

TEST_SUITE_BEGIN("service");

TEST_CASE("health reports loading until an engine is installed") {
    ServiceRig rig(false);
    auto client = rig.client();

    auto res = client.Get("/v1/health");
    REQUIRE(res);
    CHECK(res->status == 503);
    CHECK(parse(res)["status"] == "loading");

    auto fx = fixture::make_semantic_fixture(13);
    rig.service.set_engine(std::make_shared<const Engine>(testutil::make_fixture_engine(fx.corpus)));
    res = client.Get("/v1/health");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(parse(res)["status"] == "ready");
}

TEST_CASE("stats expose corpus and index counters") {
    ServiceRig rig;
    auto client = rig.client();
    auto res = client.Get("/v1/stats");
    REQUIRE(res);
    CHECK(res->status == 200);
    auto j = parse(res);
    CHECK(j["groups"] == rig.engine->corpus().groups().size());
    CHECK(j["posts"] == rig.engine->corpus().posts().size());
    CHECK(j["mode"] == "blended");
}

TEST_CASE("invalid requests are rejected with 4xx") {
    ServiceRig rig;
    auto client = rig.client();

    auto res = client.Post("/v1/groups/g-baking/search", R"({"k": 5})", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);  // missing query

    res = client.Post("/v1/groups/g-baking/search", R"({"query": "muffins", "k": 0})",
                      "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = client.Post("/v1/groups/g-baking/search", R"({"query": "muffins", "k": 101})",
                      "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = client.Post("/v1/groups/g-baking/search", "not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);

    res = client.Post("/v1/groups/no-such-group/search", R"({"query": "muffins"})",
                      "application/json");
    REQUIRE(res);
    CHECK(res->status == 404);

    res = client.Post("/v1/groups/g-baking/search",
                      R"({"query": "muffins", "fusion": {"w_kw": 0.9, "w_ebr": 0.9}})",
                      "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);  // weights must sum to 1
}

TEST_CASE("endpoint results match in-process engine calls") {
    ServiceRig rig;
    auto client = rig.client();
    auto fx = fixture::make_mixed_fixture(12);  // same seed as the rig

    for (const auto& q : fx.all_queries()) {
        json body{{"query", q.query_text}, {"k", 10}};
        auto res = client.Post("/v1/groups/" + q.group_id + "/search", body.dump(),
                               "application/json");
        REQUIRE(res);
        REQUIRE(res->status == 200);
        auto j = parse(res);

        auto direct = rig.engine->search(q.group_id, q.query_text, 10);
        REQUIRE(j["results"].size() == direct.results.size());
        for (std::size_t i = 0; i < direct.results.size(); ++i) {
            CHECK(j["results"][i]["post_id"] == direct.results[i].post_id);
            CHECK(j["results"][i]["score"].get<double>() ==
                  doctest::Approx(direct.results[i].score).epsilon(1e-12));
            CHECK(j["results"][i]["from_keyword"] == direct.results[i].from_keyword);
            CHECK(j["results"][i]["from_ebr"] == direct.results[i].from_ebr);
        }
    }
}

TEST_CASE("per-request fusion override is honored") {
    ServiceRig rig;
    auto client = rig.client();
    json body{{"query", "muffins"},
              {"k", 10},
              {"fusion", {{"method", "rrf"}, {"rrf_c", 60.0}}}};
    auto res = client.Post("/v1/groups/g-baking/search", body.dump(), "application/json");
    REQUIRE(res);
    REQUIRE(res->status == 200);

    FusionConfig fc;
    fc.method = FusionMethod::ReciprocalRank;
    auto direct = rig.engine->search("g-baking", "muffins", 10, fc);
    auto j = parse(res);
    REQUIRE(j["results"].size() == direct.results.size());
    for (std::size_t i = 0; i < direct.results.size(); ++i)
        CHECK(j["results"][i]["post_id"] == direct.results[i].post_id);
}

TEST_CASE("concurrent identical requests return identical bodies modulo timing") {
    ServiceRig rig;
    json body{{"query", "the tangy fermented bread loaf"}, {"k", 5}};
    const std::string path = "/v1/groups/g-baking/search";

    auto one_call = [&]() {
        httplib::Client c("127.0.0.1", rig.port);
        c.set_read_timeout(10);
        auto res = c.Post(path, body.dump(), "application/json");
        REQUIRE(res);
        REQUIRE(res->status == 200);
        auto j = json::parse(res->body);
        j.erase("timing");
        return j.dump();
    };

    std::vector<std::future<std::string>> futures;
    for (int i = 0; i < 32; ++i) futures.push_back(std::async(std::launch::async, one_call));
    std::string first = futures[0].get();
    for (int i = 1; i < 32; ++i) CHECK(futures[i].get() == first);
    CHECK(!first.empty());

    // timing fields exist and are non-negative
    httplib::Client c("127.0.0.1", rig.port);
    auto res = c.Post(path, body.dump(), "application/json");
    auto j = parse(res);
    for (const char* f : {"preprocess_us", "keyword_us", "ebr_us", "fuse_us", "rank_us"})
        CHECK(j["timing"][f].get<std::int64_t>() >= 0);
}

TEST_SUITE_END();
