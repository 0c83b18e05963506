#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "groupsearch/errors.hpp"
#include "groupsearch/textproc.hpp"

namespace groupsearch {

/// Unit-length dense vector, double precision throughout so similarity
/// scores agree with straight-line oracles to 1e-9.
struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
};

/// Dot product of two unit vectors. Throws DimensionMismatch.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

struct EmbedderConfig {
    std::size_t dim = 64;
    std::size_t ngram_size = 3;
    std::uint64_t seed = 42;
    /// phrase -> cluster id. Keys may be multi-token phrases; texts are
    /// canonicalized by greedy longest-phrase replacement before hashing, so
    /// clustered phrases embed identically.
    std::unordered_map<std::string, int> synonym_table;
};

enum class Tower { Query, Doc };

/// Two-tower embedding interface. Implementations must be deterministic for
/// fixed config and input, and always emit unit vectors of dim().
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::size_t dim() const = 0;
    virtual EmbeddingVector embed_doc(const std::string& text) const = 0;
    virtual EmbeddingVector embed_query_text(const std::string& text) const = 0;

    EmbeddingVector embed_query(const ProcessedQuery& query) const {
        return embed_query_text(query.base.normalized);
    }

    /// One vector per input, order-preserving.
    virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts,
                                                     Tower tower) const;
};

/// Reference embedder: hashes character n-grams of the canonicalized
/// normalized text into a signed-count vector with a seeded hash, then
/// normalizes to unit length. Both towers share the featurization so
/// cosine(query, doc) of identical canonical text is exactly 1.
class HashingEmbedder final : public Embedder {
public:
    explicit HashingEmbedder(EmbedderConfig config);

    std::size_t dim() const override { return config_.dim; }
    EmbeddingVector embed_doc(const std::string& text) const override;
    EmbeddingVector embed_query_text(const std::string& text) const override;

    const EmbedderConfig& config() const { return config_; }

    /// Token stream after synonym-cluster replacement, exposed for the mock
    /// judge and for tests.
    std::vector<std::string> canonical_tokens(const std::string& text) const;

private:
    EmbeddingVector embed_text(const std::string& text) const;

    EmbedderConfig config_;
    // synonym keys tokenized once: first token -> (token sequence, cluster)
    std::unordered_map<std::string, std::vector<std::pair<std::vector<std::string>, int>>> phrases_;
    std::size_t max_phrase_len_ = 0;
};

/// Greedy longest-phrase synonym replacement over a token stream; matched
/// spans collapse to a single "_syn<id>_" token.
std::vector<std::string> canonicalize_tokens(
    const std::vector<std::string>& tokens,
    const std::unordered_map<std::string, std::vector<std::pair<std::vector<std::string>, int>>>&
        phrases,
    std::size_t max_phrase_len);

}  // namespace groupsearch
