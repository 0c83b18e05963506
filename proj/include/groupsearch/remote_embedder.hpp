#pragma once

#include <string>

#include "groupsearch/embedding.hpp"

namespace groupsearch {

/// Out-of-process embedding service client. POSTs {"texts": [...],
/// "tower": "query"|"doc"} to <endpoint>/embed and expects {"vectors":
/// [[...], ...]} back, one vector per input in input order. Received vectors
/// are re-normalized to unit length.
struct RemoteEmbedderConfig {
    std::string endpoint;  // http://host:port
    std::string token;     // optional bearer token
    std::size_t dim = 64;
    std::size_t batch_size = 64;
    std::size_t max_in_flight = 4;  // bound on concurrent batches in embed_batch
    int timeout_seconds = 10;

    /// Fills endpoint/token from EMBED_ENDPOINT / EMBED_TOKEN when unset.
    static RemoteEmbedderConfig from_env(RemoteEmbedderConfig base);
    static RemoteEmbedderConfig from_env();
};

class RemoteEmbedder final : public Embedder {
public:
    explicit RemoteEmbedder(RemoteEmbedderConfig config);

    std::size_t dim() const override { return config_.dim; }
    EmbeddingVector embed_doc(const std::string& text) const override;
    EmbeddingVector embed_query_text(const std::string& text) const override;

    /// Splits into batches of batch_size and runs at most max_in_flight
    /// concurrently. Throws Error(Timeout) / Error(BadResponse) /
    /// Error(DimensionMismatch); failures are never silently dropped.
    std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts,
                                             Tower tower) const override;

private:
    std::vector<EmbeddingVector> request(const std::vector<std::string>& texts, Tower tower) const;

    RemoteEmbedderConfig config_;
};

}  // namespace groupsearch
