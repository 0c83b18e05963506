#include "groupsearch/lexical_index.hpp"

#include <algorithm>
#include <cmath>

#include "groupsearch/binio.hpp"

namespace groupsearch {

LexicalIndex build_lexical_index(const Corpus& corpus, const Bm25Params& params) {
    if (params.k1 <= 0.0) throw Error(ErrorCode::Config, "k1 must be positive");
    if (params.b < 0.0 || params.b > 1.0) throw Error(ErrorCode::Config, "b must be in [0,1]");

    LexicalIndex index;
    index.params_ = params;
    for (const auto& gid : corpus.group_ids()) {
        auto& part = index.groups_[gid];
        std::uint64_t total_len = 0;
        for (const auto& pid : corpus.group_posts(gid)) {
            const Post& post = corpus.post(pid);
            auto tokens = tokenize(post.text);
            part.doc_len[pid] = static_cast<std::uint32_t>(tokens.size());
            total_len += tokens.size();

            std::map<std::string, std::uint32_t> tf;
            for (const auto& t : tokens) ++tf[t];
            for (const auto& [term, freq] : tf) {
                auto& pl = part.postings[term];
                pl.term = term;
                pl.entries.emplace_back(pid, freq);
            }
        }
        part.doc_count = part.doc_len.size();
        part.avg_doc_len = part.doc_count ? static_cast<double>(total_len) / part.doc_count : 0.0;
        // group_posts is sorted, so postings come out sorted by post_id
    }
    return index;
}

const LexicalIndex::GroupPartition& LexicalIndex::partition(const std::string& group_id) const {
    auto it = groups_.find(group_id);
    if (it == groups_.end()) throw Error(ErrorCode::UnknownGroup, group_id);
    return it->second;
}

std::uint64_t LexicalIndex::doc_count(const std::string& group_id) const {
    return partition(group_id).doc_count;
}

double LexicalIndex::avg_doc_len(const std::string& group_id) const {
    return partition(group_id).avg_doc_len;
}

std::uint64_t LexicalIndex::doc_freq(const std::string& group_id, const std::string& term) const {
    const auto& part = partition(group_id);
    auto it = part.postings.find(term);
    return it == part.postings.end() ? 0 : it->second.entries.size();
}

std::uint32_t LexicalIndex::doc_len(const std::string& group_id, const std::string& post_id) const {
    const auto& part = partition(group_id);
    auto it = part.doc_len.find(post_id);
    if (it == part.doc_len.end()) throw Error(ErrorCode::UnknownPost, post_id);
    return it->second;
}

double LexicalIndex::bm25_term_weight(const GroupPartition& part, std::uint64_t df,
                                      std::uint32_t tf, std::uint32_t dlen) const {
    double n = static_cast<double>(part.doc_count);
    double idf = std::log(1.0 + (n - static_cast<double>(df) + 0.5) /
                                    (static_cast<double>(df) + 0.5));
    double norm = 1.0 - params_.b + params_.b * (static_cast<double>(dlen) / part.avg_doc_len);
    return idf * (static_cast<double>(tf) * (params_.k1 + 1.0)) /
           (static_cast<double>(tf) + params_.k1 * norm);
}

double LexicalIndex::bm25_score(const std::string& group_id, const ProcessedQuery& query,
                                const std::string& post_id) const {
    const auto& part = partition(group_id);
    auto dl = part.doc_len.find(post_id);
    if (dl == part.doc_len.end()) {
        // distinguish a post from another partition from a genuinely unknown one
        for (const auto& [gid, other] : groups_) {
            if (gid != group_id && other.doc_len.count(post_id))
                throw Error(ErrorCode::GroupMismatch,
                            post_id + " belongs to " + gid + ", not " + group_id);
        }
        throw Error(ErrorCode::UnknownPost, post_id);
    }

    double score = 0.0;
    for (const auto& term : query.unique_terms()) {
        auto pl = part.postings.find(term);
        if (pl == part.postings.end()) continue;
        const auto& entries = pl->second.entries;
        auto it = std::lower_bound(entries.begin(), entries.end(), post_id,
                                   [](const auto& e, const std::string& id) { return e.first < id; });
        if (it == entries.end() || it->first != post_id) continue;
        score += bm25_term_weight(part, entries.size(), it->second, dl->second);
    }
    return score;
}

double LexicalIndex::tfidf_score(const std::string& group_id, const ProcessedQuery& query,
                                 const std::string& post_id) const {
    const auto& part = partition(group_id);
    auto dl = part.doc_len.find(post_id);
    if (dl == part.doc_len.end()) {
        for (const auto& [gid, other] : groups_) {
            if (gid != group_id && other.doc_len.count(post_id))
                throw Error(ErrorCode::GroupMismatch,
                            post_id + " belongs to " + gid + ", not " + group_id);
        }
        throw Error(ErrorCode::UnknownPost, post_id);
    }

    double n = static_cast<double>(part.doc_count);
    double sum = 0.0;
    for (const auto& term : query.unique_terms()) {
        auto pl = part.postings.find(term);
        if (pl == part.postings.end()) continue;
        const auto& entries = pl->second.entries;
        auto it = std::lower_bound(entries.begin(), entries.end(), post_id,
                                   [](const auto& e, const std::string& id) { return e.first < id; });
        if (it == entries.end() || it->first != post_id) continue;
        double df = static_cast<double>(entries.size());
        sum += (1.0 + std::log(static_cast<double>(it->second))) * std::log(n / df);
    }
    return sum / std::sqrt(static_cast<double>(dl->second));
}

std::vector<LexicalHit> LexicalIndex::search(const std::string& group_id,
                                             const ProcessedQuery& query, std::size_t k) const {
    const auto& part = partition(group_id);
    if (k == 0) return {};

    // Accumulate BM25 term contributions in sorted term order so the sums
    // match bm25_score bit-for-bit.
    std::map<std::string, double> scores;
    for (const auto& term : query.unique_terms()) {
        auto pl = part.postings.find(term);
        if (pl == part.postings.end()) continue;
        const auto& entries = pl->second.entries;
        for (const auto& [pid, tf] : entries) {
            scores[pid] += bm25_term_weight(part, entries.size(), tf, part.doc_len.at(pid));
        }
    }

    std::vector<LexicalHit> hits;
    hits.reserve(scores.size());
    for (const auto& [pid, s] : scores) {
        LexicalHit h;
        h.post_id = pid;
        h.bm25 = s;
        h.tfidf = tfidf_score(group_id, query, pid);
        hits.push_back(std::move(h));
    }
    std::sort(hits.begin(), hits.end(), [](const LexicalHit& a, const LexicalHit& b) {
        if (a.bm25 != b.bm25) return a.bm25 > b.bm25;
        return a.post_id < b.post_id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

void LexicalIndex::save(const std::string& path) const {
    binio::Writer w(path);
    w.header(binio::PayloadKind::LexicalIndex);
    w.f64(params_.k1);
    w.f64(params_.b);
    w.u64(groups_.size());
    for (const auto& [gid, part] : groups_) {
        w.str(gid);
        w.u64(part.doc_count);
        w.f64(part.avg_doc_len);
        w.u64(part.doc_len.size());
        for (const auto& [pid, len] : part.doc_len) {
            w.str(pid);
            w.u32(len);
        }
        w.u64(part.postings.size());
        for (const auto& [term, pl] : part.postings) {
            w.str(term);
            w.u64(pl.entries.size());
            for (const auto& [pid, tf] : pl.entries) {
                w.str(pid);
                w.u32(tf);
            }
        }
    }
    w.close();
}

LexicalIndex LexicalIndex::load(const std::string& path) {
    binio::Reader r(path);
    r.expect_header(binio::PayloadKind::LexicalIndex);
    LexicalIndex index;
    index.params_.k1 = r.f64();
    index.params_.b = r.f64();
    std::uint64_t n_groups = r.u64();
    for (std::uint64_t g = 0; g < n_groups; ++g) {
        std::string gid = r.str();
        auto& part = index.groups_[gid];
        part.doc_count = r.u64();
        part.avg_doc_len = r.f64();
        std::uint64_t n_docs = r.u64();
        for (std::uint64_t i = 0; i < n_docs; ++i) {
            std::string pid = r.str();
            part.doc_len[pid] = r.u32();
        }
        std::uint64_t n_terms = r.u64();
        for (std::uint64_t t = 0; t < n_terms; ++t) {
            std::string term = r.str();
            auto& pl = part.postings[term];
            pl.term = term;
            std::uint64_t n_entries = r.u64();
            pl.entries.reserve(n_entries);
            for (std::uint64_t e = 0; e < n_entries; ++e) {
                std::string pid = r.str();
                std::uint32_t tf = r.u32();
                pl.entries.emplace_back(std::move(pid), tf);
            }
        }
    }
    return index;
}

}  // namespace groupsearch
