#pragma once

#include <optional>
#include <string>
#include <vector>

#include "groupsearch/corpus.hpp"
#include "groupsearch/embedding.hpp"
#include "groupsearch/lexical_index.hpp"
#include "groupsearch/vector_index.hpp"

namespace groupsearch {

/// Merged retrieval hit. A post found by both paths carries both feature
/// sets; bm25/cos_sim stay 0 for the paths that did not retrieve it until
/// feature backfill fills cos_sim and tfidf for every candidate (the ranker
/// consumes both families regardless of provenance).
struct Candidate {
    std::string post_id;
    bool from_keyword = false;
    bool from_ebr = false;
    double bm25 = 0.0;
    double tfidf = 0.0;
    double cos_sim = 0.0;
    std::optional<std::size_t> kw_rank;   // 1-based, set iff from_keyword
    std::optional<std::size_t> ebr_rank;  // 1-based, set iff from_ebr
    double bm25_norm = 0.0;               // min-max over keyword-retrieved candidates
    double cos_norm = 0.0;                // min-max over EBR-retrieved candidates
    double l1_score = 0.0;
};

enum class FusionMethod { NormalizedLinear, ReciprocalRank };

struct FusionConfig {
    FusionMethod method = FusionMethod::NormalizedLinear;
    double w_kw = 0.5;
    double w_ebr = 0.5;
    double rrf_c = 60.0;
    std::size_t k_kw = 100;   // keyword fetch depth
    std::size_t k_ebr = 100;  // EBR fetch depth

    void validate() const;
};

struct BlendResult {
    std::vector<Candidate> candidates;  // unordered set; fuse_l1 ranks them
    bool degraded = false;              // exactly one path failed
    std::string warning;
    std::uint64_t kw_micros = 0;   // wall time spent in each path
    std::uint64_t ebr_micros = 0;
};

/// Dispatches both retrieval paths concurrently and merges by post_id.
/// If exactly one path fails the other's candidates are returned with the
/// degraded flag set; if both fail, the keyword path's error propagates.
BlendResult retrieve_blended(const LexicalIndex& lexical, const VectorIndex& vectors,
                             const Embedder& embedder, const Corpus& corpus,
                             const std::string& group_id, const ProcessedQuery& query,
                             const FusionConfig& config);

/// Per-query min-max normalization over candidates having each source; when
/// max == min all present values map to 1.0, absent-source values stay 0.
void normalize_scores(std::vector<Candidate>& candidates);

/// L1 fusion: normalized-linear (w_kw*bm25_norm + w_ebr*cos_norm) or
/// reciprocal-rank (sum of 1/(c + rank) over sources where present). Returns
/// candidates sorted by l1_score descending, ties by post_id ascending.
std::vector<Candidate> fuse_l1(std::vector<Candidate> candidates, const FusionConfig& config);

}  // namespace groupsearch
