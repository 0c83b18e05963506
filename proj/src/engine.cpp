#include "groupsearch/engine.hpp"

#include <algorithm>
#include <chrono>

namespace groupsearch {

RetrievalMode retrieval_mode_from_string(const std::string& s) {
    if (s == "blended") return RetrievalMode::Blended;
    if (s == "keyword") return RetrievalMode::KeywordOnly;
    if (s == "ebr") return RetrievalMode::EbrOnly;
    throw Error(ErrorCode::Config, "unknown retrieval mode: " + s);
}

std::string to_string(RetrievalMode mode) {
    switch (mode) {
        case RetrievalMode::Blended:
            return "blended";
        case RetrievalMode::KeywordOnly:
            return "keyword";
        case RetrievalMode::EbrOnly:
            return "ebr";
    }
    return "blended";
}

namespace {

std::uint64_t micros_since(std::chrono::steady_clock::time_point t0) {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(
                                          std::chrono::steady_clock::now() - t0)
                                          .count());
}

std::string make_snippet(const std::string& text, std::size_t limit = 120) {
    if (text.size() <= limit) return text;
    std::size_t cut = limit;
    while (cut > 0 && (static_cast<unsigned char>(text[cut]) & 0xC0) == 0x80) --cut;
    return text.substr(0, cut) + "...";
}

}  // namespace

Engine::Engine(Corpus corpus, LexicalIndex lexical, VectorIndex vectors,
               std::shared_ptr<const Embedder> embedder, MtmlModel model, EngineOptions options)
    : corpus_(std::move(corpus)),
      lexical_(std::move(lexical)),
      vectors_(std::move(vectors)),
      embedder_(std::move(embedder)),
      model_(std::move(model)),
      options_(std::move(options)) {
    options_.fusion.validate();
    model_.task_weights.validate();
    now_ = options_.now;
    if (now_ == 0) {
        for (const auto& p : corpus_.posts()) now_ = std::max(now_, p.created_at);
    }
}

EngineResponse Engine::search(const std::string& group_id, const std::string& raw_query,
                              std::size_t k) const {
    return search(group_id, raw_query, k, options_.fusion);
}

EngineResponse Engine::search(const std::string& group_id, const std::string& raw_query,
                              std::size_t k, const FusionConfig& fusion) const {
    if (!corpus_.has_group(group_id)) throw Error(ErrorCode::UnknownGroup, group_id);
    if (k == 0) throw Error(ErrorCode::Config, "k must be >= 1");
    fusion.validate();

    EngineResponse resp;
    auto t0 = std::chrono::steady_clock::now();
    ProcessedQuery query = preprocess_query(raw_query, options_.stopwords);
    resp.timings.preprocess_us = micros_since(t0);

    std::vector<Candidate> candidates;
    switch (options_.mode) {
        case RetrievalMode::Blended: {
            auto blended = retrieve_blended(lexical_, vectors_, *embedder_, corpus_, group_id,
                                            query, fusion);
            candidates = std::move(blended.candidates);
            resp.degraded = blended.degraded;
            resp.warning = blended.warning;
            resp.timings.keyword_us = blended.kw_micros;
            resp.timings.ebr_us = blended.ebr_micros;
            resp.kw_query_variant = query.rewrites.empty() ? "base" : "base+rewrites";
            resp.ebr_query_variant = "base";
            break;
        }
        case RetrievalMode::KeywordOnly: {
            auto kt0 = std::chrono::steady_clock::now();
            auto hits = lexical_.search(group_id, query, fusion.k_kw);
            resp.timings.keyword_us = micros_since(kt0);
            for (std::size_t i = 0; i < hits.size(); ++i) {
                Candidate c;
                c.post_id = hits[i].post_id;
                c.from_keyword = true;
                c.bm25 = hits[i].bm25;
                c.tfidf = hits[i].tfidf;
                c.kw_rank = i + 1;
                candidates.push_back(std::move(c));
            }
            resp.kw_query_variant = query.rewrites.empty() ? "base" : "base+rewrites";
            break;
        }
        case RetrievalMode::EbrOnly: {
            auto et0 = std::chrono::steady_clock::now();
            auto qvec = embedder_->embed_query(query);
            auto hits = vectors_.ann_search(group_id, qvec, fusion.k_ebr);
            resp.timings.ebr_us = micros_since(et0);
            for (std::size_t i = 0; i < hits.size(); ++i) {
                Candidate c;
                c.post_id = hits[i].post_id;
                c.from_ebr = true;
                c.cos_sim = hits[i].score;
                c.ebr_rank = i + 1;
                c.tfidf = lexical_.tfidf_score(group_id, query, c.post_id);
                candidates.push_back(std::move(c));
            }
            resp.ebr_query_variant = "base";
            break;
        }
    }

    auto ft0 = std::chrono::steady_clock::now();
    normalize_scores(candidates);
    auto fused = fuse_l1(std::move(candidates), fusion);
    resp.timings.fuse_us = micros_since(ft0);

    auto rt0 = std::chrono::steady_clock::now();
    std::vector<std::pair<std::string, FeatureVector>> features;
    features.reserve(fused.size());
    for (const auto& c : fused)
        features.emplace_back(c.post_id, extract_features(c, query, corpus_.post(c.post_id), now_));
    auto ranked = rank_l2(model_, features, k);
    resp.timings.rank_us = micros_since(rt0);

    resp.results.reserve(ranked.size());
    for (const auto& r : ranked) {
        SearchResultItem item;
        item.post_id = r.post_id;
        item.score = r.score;
        const Candidate* cand = nullptr;
        for (const auto& c : fused) {
            if (c.post_id == r.post_id) {
                cand = &c;
                break;
            }
        }
        if (cand) {
            item.from_keyword = cand->from_keyword;
            item.from_ebr = cand->from_ebr;
        }
        item.snippet = make_snippet(corpus_.post(r.post_id).text);
        resp.results.push_back(std::move(item));
    }
    return resp;
}

}  // namespace groupsearch
