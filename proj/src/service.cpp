#include "groupsearch/service.hpp"

#include <atomic>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace groupsearch {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

struct SearchService::Impl {
    httplib::Server server;
    std::shared_ptr<const Engine> engine;
    mutable std::mutex engine_mutex;
    std::thread serve_thread;
    std::atomic<bool> running{false};

    std::shared_ptr<const Engine> current_engine() const {
        std::lock_guard<std::mutex> lock(engine_mutex);
        return engine;
    }
};

namespace {

void write_error(httplib::Response& res, int status, const std::string& message) {
    ordered_json j{{"error", message}};
    res.status = status;
    res.set_content(j.dump(), "application/json");
}

FusionConfig fusion_overrides(const FusionConfig& base, const json& body) {
    FusionConfig fc = base;
    if (!body.contains("fusion")) return fc;
    const auto& f = body["fusion"];
    if (!f.is_object()) throw Error(ErrorCode::Config, "\"fusion\" must be an object");
    if (f.contains("method")) {
        std::string m = f["method"].get<std::string>();
        if (m == "linear")
            fc.method = FusionMethod::NormalizedLinear;
        else if (m == "rrf")
            fc.method = FusionMethod::ReciprocalRank;
        else
            throw Error(ErrorCode::Config, "fusion method must be linear or rrf");
    }
    if (f.contains("w_kw")) fc.w_kw = f["w_kw"].get<double>();
    if (f.contains("w_ebr")) fc.w_ebr = f["w_ebr"].get<double>();
    if (f.contains("rrf_c")) fc.rrf_c = f["rrf_c"].get<double>();
    if (f.contains("k_kw")) fc.k_kw = f["k_kw"].get<std::size_t>();
    if (f.contains("k_ebr")) fc.k_ebr = f["k_ebr"].get<std::size_t>();
    fc.validate();
    return fc;
}

}  // namespace

SearchService::SearchService() : impl_(std::make_unique<Impl>()) {
    auto* impl = impl_.get();

    impl->server.Get("/v1/health", [impl](const httplib::Request&, httplib::Response& res) {
        bool ready = impl->current_engine() != nullptr;
        ordered_json j{{"status", ready ? "ready" : "loading"}};
        res.status = ready ? 200 : 503;
        res.set_content(j.dump(), "application/json");
    });

    impl->server.Get("/v1/stats", [impl](const httplib::Request&, httplib::Response& res) {
        auto engine = impl->current_engine();
        if (!engine) {
            write_error(res, 503, "indexes are still loading");
            return;
        }
        ordered_json j;
        j["groups"] = engine->corpus().groups().size();
        j["posts"] = engine->corpus().posts().size();
        ordered_json per_group = ordered_json::object();
        for (const auto& gid : engine->corpus().group_ids())
            per_group[gid] = engine->corpus().post_count(gid);
        j["posts_per_group"] = per_group;
        j["vector_dim"] = engine->vectors().dim();
        j["mode"] = to_string(engine->options().mode);
        res.set_content(j.dump(), "application/json");
    });

    impl->server.Post(R"(/v1/groups/([^/]+)/search)", [impl](const httplib::Request& req,
                                                             httplib::Response& res) {
        auto engine = impl->current_engine();
        if (!engine) {
            write_error(res, 503, "indexes are still loading");
            return;
        }
        const std::string group_id = req.matches[1];

        json body = json::parse(req.body.empty() ? "{}" : req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) {
            write_error(res, 400, "request body must be a JSON object");
            return;
        }
        if (!body.contains("query") || !body["query"].is_string() ||
            body["query"].get<std::string>().empty()) {
            write_error(res, 400, "\"query\" is required and must be a non-empty string");
            return;
        }
        std::string query = body["query"].get<std::string>();
        long k = 10;
        if (body.contains("k")) {
            if (!body["k"].is_number_integer()) {
                write_error(res, 400, "\"k\" must be an integer");
                return;
            }
            k = body["k"].get<long>();
        }
        if (k < 1 || k > 100) {
            write_error(res, 400, "\"k\" must be in [1, 100]");
            return;
        }

        try {
            FusionConfig fc = fusion_overrides(engine->options().fusion, body);
            EngineResponse er = engine->search(group_id, query, static_cast<std::size_t>(k), fc);
            ordered_json j;
            ordered_json results = ordered_json::array();
            for (const auto& r : er.results) {
                ordered_json item;
                item["post_id"] = r.post_id;
                item["score"] = r.score;
                item["from_keyword"] = r.from_keyword;
                item["from_ebr"] = r.from_ebr;
                item["snippet"] = r.snippet;
                results.push_back(item);
            }
            j["results"] = results;
            ordered_json timing;
            timing["preprocess_us"] = er.timings.preprocess_us;
            timing["keyword_us"] = er.timings.keyword_us;
            timing["ebr_us"] = er.timings.ebr_us;
            timing["fuse_us"] = er.timings.fuse_us;
            timing["rank_us"] = er.timings.rank_us;
            j["timing"] = timing;
            j["degraded"] = er.degraded;
            if (!er.warning.empty()) j["warning"] = er.warning;
            res.set_content(j.dump(), "application/json");
        } catch (const Error& e) {
            switch (e.code()) {
                case ErrorCode::UnknownGroup:
                    write_error(res, 404, e.what());
                    break;
                case ErrorCode::EmptyQuery:
                case ErrorCode::Config:
                    write_error(res, 400, e.what());
                    break;
                default:
                    write_error(res, 500, "internal error");
                    break;
            }
        } catch (const std::exception&) {
            write_error(res, 500, "internal error");
        }
    });
}

SearchService::~SearchService() {
    stop();
}

void SearchService::set_engine(std::shared_ptr<const Engine> engine) {
    std::lock_guard<std::mutex> lock(impl_->engine_mutex);
    impl_->engine = std::move(engine);
}

bool SearchService::ready() const {
    return impl_->current_engine() != nullptr;
}

int SearchService::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
        if (bound <= 0) throw Error(ErrorCode::Config, "cannot bind to " + host);
    } else {
        if (!impl_->server.bind_to_port(host, port))
            throw Error(ErrorCode::Config, "cannot bind to " + host + ":" + std::to_string(port));
    }
    impl_->running = true;
    impl_->serve_thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void SearchService::run(const std::string& host, int port) {
    impl_->running = true;
    if (!impl_->server.listen(host, port))
        throw Error(ErrorCode::Config, "cannot listen on " + host + ":" + std::to_string(port));
}

void SearchService::stop() {
    if (impl_->running.exchange(false)) {
        impl_->server.stop();
        if (impl_->serve_thread.joinable()) impl_->serve_thread.join();
    }
}

}  // namespace groupsearch
