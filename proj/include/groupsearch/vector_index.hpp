#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "groupsearch/corpus.hpp"
#include "groupsearch/embedding.hpp"

namespace groupsearch {

struct AnnParams {
    std::size_t M = 16;                // max neighbors per graph node (2M at layer 0)
    std::size_t ef_construction = 200; // candidate-pool size at build
    std::size_t ef_search = 64;        // candidate-pool size at query
    std::size_t flat_threshold = 4096; // group size at or below which exact flat search is used
    std::uint64_t seed = 42;           // level assignment
};

struct ScoredPost {
    std::string post_id;
    double score = 0.0;  // cosine similarity
};

/// Group-scoped vector index over precomputed document embeddings. Each group
/// is either a Flat partition (exact scan) or a layered proximity graph built
/// by greedy-search insertion. Immutable once built.
class VectorIndex {
public:
    enum class PartitionKind : std::uint8_t { Flat = 0, Graph = 1 };

    struct GraphData {
        int entry_point = -1;
        int max_level = -1;
        std::vector<int> levels;  // node -> top layer
        // node -> layer -> neighbor node ids
        std::vector<std::vector<std::vector<std::uint32_t>>> neighbors;
    };

    struct Partition {
        PartitionKind kind = PartitionKind::Flat;
        std::vector<std::string> post_ids;  // node id -> post id, ascending
        std::vector<double> vectors;        // row-major, size() == post_ids.size() * dim
        GraphData graph;                    // populated when kind == Graph
    };

    std::size_t dim() const { return dim_; }
    const AnnParams& params() const { return params_; }
    bool has_group(const std::string& group_id) const { return groups_.count(group_id) > 0; }
    const std::map<std::string, Partition>& partitions() const { return groups_; }

    /// Top-k by cosine descending, ties by post_id ascending. Flat partitions
    /// are exact; graph partitions run greedy layered search with a candidate
    /// pool of max(ef_search, k).
    std::vector<ScoredPost> ann_search(const std::string& group_id, const EmbeddingVector& query,
                                       std::size_t k) const;
    std::vector<ScoredPost> ann_search(const std::string& group_id, const EmbeddingVector& query,
                                       std::size_t k, std::size_t ef_search) const;

    /// Full-scan oracle; same ranking and tie-break as ann_search.
    std::vector<ScoredPost> exact_search(const std::string& group_id, const EmbeddingVector& query,
                                         std::size_t k) const;

    /// Stored vector for a post (used for feature backfill).
    const double* vector_of(const std::string& group_id, const std::string& post_id) const;

    void save(const std::string& path) const;
    static VectorIndex load(const std::string& path);

    friend VectorIndex build_vector_index(const Corpus& corpus, const Embedder& embedder,
                                          const AnnParams& params);

private:
    const Partition& partition(const std::string& group_id) const;

    std::map<std::string, Partition> groups_;
    std::size_t dim_ = 0;
    AnnParams params_;
};

VectorIndex build_vector_index(const Corpus& corpus, const Embedder& embedder,
                               const AnnParams& params = {});

/// |ann ∩ exact| / min(k, |exact|); 1.0 when exact is empty.
double recall_at_k(const std::vector<ScoredPost>& ann, const std::vector<ScoredPost>& exact,
                   std::size_t k);

}  // namespace groupsearch
