#include "groupsearch/blend.hpp"

#include <algorithm>
#include <chrono>
#include <future>
#include <map>

namespace groupsearch {

namespace {
std::uint64_t micros_since(std::chrono::steady_clock::time_point t0) {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(
                                          std::chrono::steady_clock::now() - t0)
                                          .count());
}
}  // namespace

void FusionConfig::validate() const {
    if (w_kw < 0.0 || w_ebr < 0.0 || std::abs(w_kw + w_ebr - 1.0) > 1e-9)
        throw Error(ErrorCode::Config, "fusion weights must be non-negative and sum to 1");
    if (rrf_c <= 0.0) throw Error(ErrorCode::Config, "rrf_c must be positive");
    if (k_kw == 0 || k_ebr == 0) throw Error(ErrorCode::Config, "fetch depths must be >= 1");
}

BlendResult retrieve_blended(const LexicalIndex& lexical, const VectorIndex& vectors,
                             const Embedder& embedder, const Corpus& corpus,
                             const std::string& group_id, const ProcessedQuery& query,
                             const FusionConfig& config) {
    config.validate();

    EmbeddingVector qvec = embedder.embed_query(query);

    BlendResult result;
    auto kw_future = std::async(std::launch::async, [&] {
        auto t0 = std::chrono::steady_clock::now();
        auto hits = lexical.search(group_id, query, config.k_kw);
        result.kw_micros = micros_since(t0);
        return hits;
    });
    auto ebr_future = std::async(std::launch::async, [&] {
        auto t0 = std::chrono::steady_clock::now();
        auto hits = vectors.ann_search(group_id, qvec, config.k_ebr);
        result.ebr_micros = micros_since(t0);
        return hits;
    });

    std::vector<LexicalHit> kw_hits;
    std::vector<ScoredPost> ebr_hits;
    std::exception_ptr kw_err, ebr_err;
    try {
        kw_hits = kw_future.get();
    } catch (...) {
        kw_err = std::current_exception();
    }
    try {
        ebr_hits = ebr_future.get();
    } catch (...) {
        ebr_err = std::current_exception();
    }

    if (kw_err && ebr_err) std::rethrow_exception(kw_err);
    if (kw_err || ebr_err) {
        result.degraded = true;
        try {
            std::rethrow_exception(kw_err ? kw_err : ebr_err);
        } catch (const std::exception& e) {
            result.warning = std::string(kw_err ? "keyword path failed: " : "ebr path failed: ") +
                             e.what();
        }
    }

    std::map<std::string, Candidate> merged;
    for (std::size_t i = 0; i < kw_hits.size(); ++i) {
        Candidate& c = merged[kw_hits[i].post_id];
        c.post_id = kw_hits[i].post_id;
        c.from_keyword = true;
        c.bm25 = kw_hits[i].bm25;
        c.tfidf = kw_hits[i].tfidf;
        c.kw_rank = i + 1;
    }
    for (std::size_t i = 0; i < ebr_hits.size(); ++i) {
        Candidate& c = merged[ebr_hits[i].post_id];
        c.post_id = ebr_hits[i].post_id;
        c.from_ebr = true;
        c.cos_sim = ebr_hits[i].score;
        c.ebr_rank = i + 1;
    }

    // Feature backfill: both feature families for every candidate.
    result.candidates.reserve(merged.size());
    for (auto& [pid, cand] : merged) {
        if (!cand.from_keyword) {
            try {
                cand.tfidf = lexical.tfidf_score(group_id, query, pid);
            } catch (const Error&) {
                // lexical path degraded; leave 0
            }
        }
        if (!cand.from_ebr) {
            const double* stored = nullptr;
            try {
                stored = vectors.vector_of(group_id, pid);
            } catch (const Error&) {
                // vector index degraded or missing this group; embed directly
            }
            if (stored) {
                EmbeddingVector dv;
                dv.values.assign(stored, stored + vectors.dim());
                cand.cos_sim = cosine(qvec, dv);
            } else {
                cand.cos_sim = cosine(qvec, embedder.embed_doc(corpus.post(pid).text));
            }
        }
        result.candidates.push_back(std::move(cand));
    }
    return result;
}

void normalize_scores(std::vector<Candidate>& candidates) {
    auto min_max = [&](auto present, auto value) {
        double lo = 0.0, hi = 0.0;
        bool any = false;
        for (const auto& c : candidates) {
            if (!present(c)) continue;
            double v = value(c);
            if (!any) {
                lo = hi = v;
                any = true;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        return std::tuple<bool, double, double>(any, lo, hi);
    };

    auto [kw_any, kw_lo, kw_hi] =
        min_max([](const Candidate& c) { return c.from_keyword; },
                [](const Candidate& c) { return c.bm25; });
    auto [ebr_any, ebr_lo, ebr_hi] =
        min_max([](const Candidate& c) { return c.from_ebr; },
                [](const Candidate& c) { return c.cos_sim; });

    for (auto& c : candidates) {
        if (c.from_keyword && kw_any)
            c.bm25_norm = kw_hi > kw_lo ? (c.bm25 - kw_lo) / (kw_hi - kw_lo) : 1.0;
        if (c.from_ebr && ebr_any)
            c.cos_norm = ebr_hi > ebr_lo ? (c.cos_sim - ebr_lo) / (ebr_hi - ebr_lo) : 1.0;
    }
}

std::vector<Candidate> fuse_l1(std::vector<Candidate> candidates, const FusionConfig& config) {
    for (auto& c : candidates) {
        if (config.method == FusionMethod::NormalizedLinear) {
            c.l1_score = config.w_kw * c.bm25_norm + config.w_ebr * c.cos_norm;
        } else {
            double s = 0.0;
            if (c.kw_rank) s += 1.0 / (config.rrf_c + static_cast<double>(*c.kw_rank));
            if (c.ebr_rank) s += 1.0 / (config.rrf_c + static_cast<double>(*c.ebr_rank));
            c.l1_score = s;
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.l1_score != b.l1_score) return a.l1_score > b.l1_score;
        return a.post_id < b.post_id;
    });
    return candidates;
}

}  // namespace groupsearch
