#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "groupsearch/corpus.hpp"
#include "groupsearch/textproc.hpp"

namespace groupsearch {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
};

/// entries sorted by post_id ascending; term_frequency >= 1.
struct PostingList {
    std::string term;
    std::vector<std::pair<std::string, std::uint32_t>> entries;
};

struct LexicalHit {
    std::string post_id;
    double bm25 = 0.0;
    double tfidf = 0.0;
};

/// Group-scoped inverted index with the corpus statistics BM25 and TF-IDF
/// need. Immutable once built; concurrent searches need no synchronization.
class LexicalIndex {
public:
    /// Per-group partition: term -> postings, plus document lengths.
    struct GroupPartition {
        std::map<std::string, PostingList> postings;
        std::map<std::string, std::uint32_t> doc_len;
        double avg_doc_len = 0.0;
        std::uint64_t doc_count = 0;
    };

    bool has_group(const std::string& group_id) const { return groups_.count(group_id) > 0; }

    std::uint64_t doc_count(const std::string& group_id) const;
    double avg_doc_len(const std::string& group_id) const;
    std::uint64_t doc_freq(const std::string& group_id, const std::string& term) const;
    std::uint32_t doc_len(const std::string& group_id, const std::string& post_id) const;

    const Bm25Params& params() const { return params_; }
    const std::map<std::string, GroupPartition>& partitions() const { return groups_; }

    /// Okapi BM25 with idf = ln(1 + (N - df + 0.5) / (df + 0.5)), summed over
    /// the query's unique terms; terms absent from the group contribute 0.
    double bm25_score(const std::string& group_id, const ProcessedQuery& query,
                      const std::string& post_id) const;

    /// Log-tf, idf = ln(N / df), normalized by sqrt(doc length).
    double tfidf_score(const std::string& group_id, const ProcessedQuery& query,
                       const std::string& post_id) const;

    /// Posts matching at least one query term (OR semantics over base and
    /// rewrites), ranked by BM25 descending, ties by post_id ascending.
    std::vector<LexicalHit> search(const std::string& group_id, const ProcessedQuery& query,
                                   std::size_t k) const;

    void save(const std::string& path) const;
    static LexicalIndex load(const std::string& path);

    friend LexicalIndex build_lexical_index(const Corpus& corpus, const Bm25Params& params);

private:
    const GroupPartition& partition(const std::string& group_id) const;

    // idf and tf weights for one (term, post); shared by bm25_score and
    // search so both produce bit-identical sums.
    double bm25_term_weight(const GroupPartition& part, std::uint64_t df, std::uint32_t tf,
                            std::uint32_t dlen) const;

    std::map<std::string, GroupPartition> groups_;
    Bm25Params params_;
};

LexicalIndex build_lexical_index(const Corpus& corpus, const Bm25Params& params = {});

}  // namespace groupsearch
