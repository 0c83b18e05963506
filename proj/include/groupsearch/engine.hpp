#pragma once

#include <memory>
#include <string>
#include <vector>

#include "groupsearch/blend.hpp"
#include "groupsearch/corpus.hpp"
#include "groupsearch/embedding.hpp"
#include "groupsearch/lexical_index.hpp"
#include "groupsearch/ranker.hpp"
#include "groupsearch/vector_index.hpp"

namespace groupsearch {

enum class RetrievalMode { Blended, KeywordOnly, EbrOnly };

RetrievalMode retrieval_mode_from_string(const std::string& s);
std::string to_string(RetrievalMode mode);

struct EngineOptions {
    FusionConfig fusion;
    RetrievalMode mode = RetrievalMode::Blended;
    StopwordList stopwords = StopwordList::builtin();
    /// Reference time for recency features. 0 means "newest post in the
    /// corpus", which keeps replays deterministic.
    std::int64_t now = 0;
};

struct SearchTimings {
    std::uint64_t preprocess_us = 0;
    std::uint64_t keyword_us = 0;
    std::uint64_t ebr_us = 0;
    std::uint64_t fuse_us = 0;
    std::uint64_t rank_us = 0;
};

struct SearchResultItem {
    std::string post_id;
    double score = 0.0;
    bool from_keyword = false;
    bool from_ebr = false;
    std::string snippet;
};

struct EngineResponse {
    std::vector<SearchResultItem> results;
    SearchTimings timings;
    bool degraded = false;
    std::string warning;
    // Which query variant each path consumed (base vs base+rewrites).
    std::string kw_query_variant;
    std::string ebr_query_variant;
};

/// Ties the full pipeline together over immutable loaded state: preprocess ->
/// retrieve (per mode) -> normalize + L1 fuse -> feature extraction -> L2
/// rank -> truncate. Safe for concurrent searches.
///
/// KeywordOnly mode never touches the embedder (legacy behaviour: semantic
/// features stay 0); EbrOnly still backfills tfidf from the lexical index.
class Engine {
public:
    Engine(Corpus corpus, LexicalIndex lexical, VectorIndex vectors,
           std::shared_ptr<const Embedder> embedder, MtmlModel model, EngineOptions options);

    EngineResponse search(const std::string& group_id, const std::string& raw_query,
                          std::size_t k) const;

    /// Same pipeline with a per-request fusion override.
    EngineResponse search(const std::string& group_id, const std::string& raw_query, std::size_t k,
                          const FusionConfig& fusion) const;

    const Corpus& corpus() const { return corpus_; }
    const LexicalIndex& lexical() const { return lexical_; }
    const VectorIndex& vectors() const { return vectors_; }
    const Embedder& embedder() const { return *embedder_; }
    const MtmlModel& model() const { return model_; }
    const EngineOptions& options() const { return options_; }
    std::int64_t reference_now() const { return now_; }

private:
    Corpus corpus_;
    LexicalIndex lexical_;
    VectorIndex vectors_;
    std::shared_ptr<const Embedder> embedder_;
    MtmlModel model_;
    EngineOptions options_;
    std::int64_t now_ = 0;
};

}  // namespace groupsearch
