#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "groupsearch/errors.hpp"

namespace groupsearch {

/// Canonical text form shared by both retrieval paths: composed, case-folded,
/// punctuation mapped to spaces, whitespace collapsed and trimmed.
/// normalize() is total and idempotent.
std::string normalize(const std::string& text);

/// Whitespace split of normalize(text); no empty terms, order preserved.
std::vector<std::string> tokenize(const std::string& text);

struct ProcessedText {
    std::string original;
    std::string normalized;
    std::vector<std::string> tokens;
};

ProcessedText process_text(const std::string& raw);

struct ProcessedQuery {
    ProcessedText base;
    std::vector<ProcessedText> rewrites;  // never duplicates base's token sequence

    /// Unique terms over base and all rewrites, sorted lexicographically.
    /// Scoring and matching iterate terms in this order so results are
    /// reproducible bit-for-bit.
    std::vector<std::string> unique_terms() const;
};

class StopwordList {
public:
    StopwordList() = default;
    explicit StopwordList(std::vector<std::string> words);

    /// The fixed 50-word list shipped with the project (see data/stopwords.txt).
    static const StopwordList& builtin();

    /// One term per line; blank lines ignored; terms are normalized on load.
    static StopwordList load(const std::string& path);

    bool contains(const std::string& term) const { return words_.count(term) > 0; }
    std::size_t size() const { return words_.size(); }

private:
    std::unordered_set<std::string> words_;
};

/// Builds the query consumed by both retrieval paths: base tokens plus a
/// stopword-stripped rewrite when that variant is non-empty and differs.
/// Throws Error(EmptyQuery) when normalization leaves nothing.
ProcessedQuery preprocess_query(const std::string& raw,
                                const StopwordList& stopwords = StopwordList::builtin());

}  // namespace groupsearch
