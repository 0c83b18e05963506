#include "groupsearch/embedding.hpp"

#include <algorithm>
#include <cmath>

namespace groupsearch {

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim())
        throw Error(ErrorCode::DimensionMismatch,
                    std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
    double dot = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
    return dot;
}

std::vector<EmbeddingVector> Embedder::embed_batch(const std::vector<std::string>& texts,
                                                   Tower tower) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts)
        out.push_back(tower == Tower::Query ? embed_query_text(t) : embed_doc(t));
    return out;
}

namespace {

// splitmix64-style mixing; stable across platforms.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t hash_bytes(std::uint64_t seed, const char* data, std::size_t len) {
    std::uint64_t h = mix64(seed ^ 0x51'7c'c1'b7'27'22'0a'95ull);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h = mix64(h);
    }
    return h;
}

}  // namespace

std::vector<std::string> canonicalize_tokens(
    const std::vector<std::string>& tokens,
    const std::unordered_map<std::string, std::vector<std::pair<std::vector<std::string>, int>>>&
        phrases,
    std::size_t max_phrase_len) {
    if (phrases.empty()) return tokens;
    std::vector<std::string> out;
    out.reserve(tokens.size());
    std::size_t i = 0;
    while (i < tokens.size()) {
        const auto it = phrases.find(tokens[i]);
        bool replaced = false;
        if (it != phrases.end()) {
            // candidates are pre-sorted longest first
            for (const auto& [seq, cluster] : it->second) {
                if (seq.size() > tokens.size() - i) continue;
                bool match = true;
                for (std::size_t k = 1; k < seq.size(); ++k) {
                    if (tokens[i + k] != seq[k]) {
                        match = false;
                        break;
                    }
                }
                if (match) {
                    out.push_back("_syn" + std::to_string(cluster) + "_");
                    i += seq.size();
                    replaced = true;
                    break;
                }
            }
        }
        if (!replaced) {
            out.push_back(tokens[i]);
            ++i;
        }
    }
    (void)max_phrase_len;
    return out;
}

HashingEmbedder::HashingEmbedder(EmbedderConfig config) : config_(std::move(config)) {
    if (config_.dim < 8) throw Error(ErrorCode::Config, "embedding dim must be >= 8");
    if (config_.ngram_size < 2) throw Error(ErrorCode::Config, "ngram_size must be >= 2");
    for (const auto& [phrase, cluster] : config_.synonym_table) {
        auto seq = tokenize(phrase);
        if (seq.empty()) continue;
        phrases_[seq[0]].emplace_back(seq, cluster);
        max_phrase_len_ = std::max(max_phrase_len_, seq.size());
    }
    for (auto& [first, cands] : phrases_) {
        std::sort(cands.begin(), cands.end(), [](const auto& a, const auto& b) {
            if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
            return a.first < b.first;
        });
    }
}

std::vector<std::string> HashingEmbedder::canonical_tokens(const std::string& text) const {
    return canonicalize_tokens(tokenize(text), phrases_, max_phrase_len_);
}

EmbeddingVector HashingEmbedder::embed_text(const std::string& text) const {
    auto tokens = canonical_tokens(text);
    if (tokens.empty()) throw Error(ErrorCode::EmptyText, "no tokens after normalization");

    std::string canon;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) canon.push_back(' ');
        canon += tokens[i];
    }

    std::vector<double> acc(config_.dim, 0.0);
    const std::size_t n = config_.ngram_size;
    const std::size_t grams = canon.size() < n ? 1 : canon.size() - n + 1;
    for (std::size_t i = 0; i < grams; ++i) {
        std::size_t len = std::min(n, canon.size() - i);
        std::uint64_t h = hash_bytes(config_.seed, canon.data() + i, len);
        std::size_t slot = h % config_.dim;
        double sign = (h >> 63) ? 1.0 : -1.0;
        acc[slot] += sign;
    }

    double norm_sq = 0.0;
    for (double v : acc) norm_sq += v * v;
    EmbeddingVector vec;
    vec.values.resize(config_.dim);
    if (norm_sq == 0.0) {
        // all n-grams cancelled; fall back to a deterministic basis vector
        std::uint64_t h = hash_bytes(config_.seed, canon.data(), canon.size());
        vec.values[h % config_.dim] = 1.0;
        return vec;
    }
    double inv = 1.0 / std::sqrt(norm_sq);
    for (std::size_t i = 0; i < config_.dim; ++i) vec.values[i] = acc[i] * inv;
    return vec;
}

EmbeddingVector HashingEmbedder::embed_doc(const std::string& text) const {
    return embed_text(text);
}

EmbeddingVector HashingEmbedder::embed_query_text(const std::string& text) const {
    return embed_text(text);
}

}  // namespace groupsearch
