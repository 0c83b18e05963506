#include "groupsearch/remote_embedder.hpp"

#include <cmath>
#include <cstdlib>
#include <future>

#include <httplib.h>
#include <json.hpp>

namespace groupsearch {

using json = nlohmann::json;

RemoteEmbedderConfig RemoteEmbedderConfig::from_env(RemoteEmbedderConfig base) {
    if (base.endpoint.empty()) {
        if (const char* e = std::getenv("EMBED_ENDPOINT")) base.endpoint = e;
    }
    if (base.token.empty()) {
        if (const char* t = std::getenv("EMBED_TOKEN")) base.token = t;
    }
    return base;
}

RemoteEmbedderConfig RemoteEmbedderConfig::from_env() {
    return from_env(RemoteEmbedderConfig{});
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty())
        throw Error(ErrorCode::Config, "remote embedder endpoint not configured");
    if (config_.batch_size == 0 || config_.max_in_flight == 0)
        throw Error(ErrorCode::Config, "batch_size and max_in_flight must be positive");
}

std::vector<EmbeddingVector> RemoteEmbedder::request(const std::vector<std::string>& texts,
                                                     Tower tower) const {
    httplib::Client client(config_.endpoint);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    if (!config_.token.empty()) client.set_bearer_token_auth(config_.token);

    json body{{"texts", texts}, {"tower", tower == Tower::Query ? "query" : "doc"}};
    auto res = client.Post("/embed", body.dump(), "application/json");
    if (!res) throw Error(ErrorCode::Timeout, "embedding endpoint unreachable: " + config_.endpoint);
    if (res->status != 200)
        throw Error(ErrorCode::BadResponse, "embedding endpoint returned " + std::to_string(res->status));

    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("vectors") || !parsed["vectors"].is_array())
        throw Error(ErrorCode::BadResponse, "embedding response is not {\"vectors\": [...]}");
    const auto& vecs = parsed["vectors"];
    if (vecs.size() != texts.size())
        throw Error(ErrorCode::BadResponse,
                    "expected " + std::to_string(texts.size()) + " vectors, got " +
                        std::to_string(vecs.size()));

    std::vector<EmbeddingVector> out;
    out.reserve(vecs.size());
    for (const auto& jv : vecs) {
        if (!jv.is_array() || jv.size() != config_.dim)
            throw Error(ErrorCode::DimensionMismatch,
                        "expected dim " + std::to_string(config_.dim) + ", got " +
                            std::to_string(jv.size()));
        EmbeddingVector v;
        v.values.reserve(config_.dim);
        double norm_sq = 0.0;
        for (const auto& x : jv) {
            double d = x.get<double>();
            norm_sq += d * d;
            v.values.push_back(d);
        }
        if (norm_sq <= 0.0)
            throw Error(ErrorCode::BadResponse, "embedding endpoint returned a zero vector");
        double inv = 1.0 / std::sqrt(norm_sq);
        for (auto& x : v.values) x *= inv;
        out.push_back(std::move(v));
    }
    return out;
}

EmbeddingVector RemoteEmbedder::embed_doc(const std::string& text) const {
    return request({text}, Tower::Doc).front();
}

EmbeddingVector RemoteEmbedder::embed_query_text(const std::string& text) const {
    return request({text}, Tower::Query).front();
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts,
                                                         Tower tower) const {
    if (texts.empty()) return {};

    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    for (std::size_t start = 0; start < texts.size(); start += config_.batch_size)
        ranges.emplace_back(start, std::min(texts.size(), start + config_.batch_size));

    std::vector<EmbeddingVector> out(texts.size());
    // window of at most max_in_flight concurrent requests
    for (std::size_t window = 0; window < ranges.size(); window += config_.max_in_flight) {
        std::size_t end = std::min(ranges.size(), window + config_.max_in_flight);
        std::vector<std::future<std::vector<EmbeddingVector>>> futures;
        for (std::size_t r = window; r < end; ++r) {
            auto [lo, hi] = ranges[r];
            futures.push_back(std::async(std::launch::async, [this, &texts, lo, hi, tower] {
                std::vector<std::string> chunk(texts.begin() + lo, texts.begin() + hi);
                return request(chunk, tower);
            }));
        }
        for (std::size_t r = window; r < end; ++r) {
            auto vecs = futures[r - window].get();
            auto [lo, hi] = ranges[r];
            for (std::size_t i = lo; i < hi; ++i) out[i] = std::move(vecs[i - lo]);
        }
    }
    return out;
}

}  // namespace groupsearch
