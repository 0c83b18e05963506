#include "groupsearch/vector_index.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>

#include "groupsearch/binio.hpp"

namespace groupsearch {

namespace {

double dot(const double* a, const double* b, std::size_t dim) {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) s += a[i] * b[i];
    return s;
}

// (similarity, node). Ordering used everywhere: higher similarity first,
// lower node id breaking ties, so searches are fully deterministic.
struct Scored {
    double sim;
    std::uint32_t node;
};
struct BetterThan {
    bool operator()(const Scored& a, const Scored& b) const {
        if (a.sim != b.sim) return a.sim > b.sim;
        return a.node < b.node;
    }
};

std::uint64_t stable_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Proximity-graph builder and searcher over one partition's vectors.
class GraphOps {
public:
    GraphOps(const VectorIndex::GraphData& g, const std::vector<double>& vectors, std::size_t dim,
             const AnnParams& params)
        : g_(g), mutable_g_(nullptr), vectors_(vectors), dim_(dim), params_(params) {}
    GraphOps(VectorIndex::GraphData& g, const std::vector<double>& vectors, std::size_t dim,
             const AnnParams& params)
        : g_(g), mutable_g_(&g), vectors_(vectors), dim_(dim), params_(params) {}

    const double* vec(std::uint32_t node) const { return vectors_.data() + node * dim_; }

    // Greedy best-first search in one layer; returns up to ef nodes sorted
    // best-first.
    std::vector<Scored> search_layer(const double* q, std::vector<Scored> entries, std::size_t ef,
                                     int layer, std::vector<std::uint32_t>& visited_mark,
                                     std::uint32_t visit_tag) const {
        // std::priority_queue treats its comparator as less-than and pops the
        // maximum, so: candidates pop best-first, the result pool pops
        // worst-first for pruning.
        auto best_on_top = [](const Scored& a, const Scored& b) { return BetterThan{}(b, a); };
        std::priority_queue<Scored, std::vector<Scored>, decltype(best_on_top)> candidates(
            best_on_top);
        auto worst_on_top = [](const Scored& a, const Scored& b) { return BetterThan{}(a, b); };
        std::priority_queue<Scored, std::vector<Scored>, decltype(worst_on_top)> top(worst_on_top);

        for (const auto& e : entries) {
            if (visited_mark[e.node] == visit_tag) continue;
            visited_mark[e.node] = visit_tag;
            candidates.push(e);
            top.push(e);
            if (top.size() > ef) top.pop();
        }
        while (!candidates.empty()) {
            Scored c = candidates.top();
            candidates.pop();
            if (top.size() >= ef && BetterThan{}(top.top(), c)) break;
            for (std::uint32_t nb : g_.neighbors[c.node][layer]) {
                if (visited_mark[nb] == visit_tag) continue;
                visited_mark[nb] = visit_tag;
                Scored s{dot(q, vec(nb), dim_), nb};
                if (top.size() < ef || BetterThan{}(s, top.top())) {
                    candidates.push(s);
                    top.push(s);
                    if (top.size() > ef) top.pop();
                }
            }
        }
        std::vector<Scored> out;
        out.reserve(top.size());
        while (!top.empty()) {
            out.push_back(top.top());
            top.pop();
        }
        std::sort(out.begin(), out.end(), BetterThan{});
        return out;
    }

    // Diversified neighbor selection: a candidate is dropped when some
    // already-selected neighbor is much closer to it than the new node is
    // (angular distance scaled by alpha). The relaxation keeps a mix of
    // short and long edges, which is what keeps the greedy search navigable
    // on high-dimensional data. Discarded candidates backfill spare slots.
    std::vector<std::uint32_t> select_neighbors(const double* q, std::vector<Scored> candidates,
                                                std::size_t m) const {
        constexpr double kAlpha = 1.2;
        std::sort(candidates.begin(), candidates.end(), BetterThan{});
        std::vector<std::uint32_t> selected;
        std::vector<Scored> discarded;
        for (const auto& c : candidates) {
            if (selected.size() >= m) break;
            bool keep = true;
            for (std::uint32_t s : selected) {
                if (kAlpha * (1.0 - dot(vec(c.node), vec(s), dim_)) < (1.0 - c.sim)) {
                    keep = false;
                    break;
                }
            }
            if (keep)
                selected.push_back(c.node);
            else
                discarded.push_back(c);
        }
        for (const auto& d : discarded) {
            if (selected.size() >= m) break;
            selected.push_back(d.node);
        }
        (void)q;
        return selected;
    }

    void insert(std::uint32_t node, int level, std::vector<std::uint32_t>& visited_mark,
                std::uint32_t& visit_tag) {
        auto& g = *mutable_g_;
        g.levels[node] = level;
        g.neighbors[node].assign(level + 1, {});
        if (g.entry_point < 0) {
            g.entry_point = static_cast<int>(node);
            g.max_level = level;
            return;
        }

        const double* q = vec(node);
        Scored cur{dot(q, vec(g.entry_point), dim_), static_cast<std::uint32_t>(g.entry_point)};

        for (int layer = g.max_level; layer > level; --layer) cur = greedy_step(q, cur, layer);

        std::vector<Scored> entries{cur};
        for (int layer = std::min(level, g.max_level); layer >= 0; --layer) {
            ++visit_tag;
            auto found = search_layer(q, entries, params_.ef_construction, layer, visited_mark,
                                      visit_tag);
            // The base layer is linked densely (up to its 4M cap); upper
            // layers take M links. Reverse links shrink back to the cap.
            std::size_t cap = layer == 0 ? params_.M * 4 : params_.M;
            auto selected = select_neighbors(q, found, cap);
            g.neighbors[node][layer] = selected;
            for (std::uint32_t nb : selected) {
                auto& list = g.neighbors[nb][layer];
                list.push_back(node);
                if (list.size() > cap) shrink(nb, layer, cap);
            }
            entries = std::move(found);
            if (entries.empty()) entries = {cur};
        }

        if (level > g.max_level) {
            g.max_level = level;
            g.entry_point = static_cast<int>(node);
        }
    }

    Scored greedy_step(const double* q, Scored cur, int layer) const {
        bool improved = true;
        while (improved) {
            improved = false;
            for (std::uint32_t nb : g_.neighbors[cur.node][layer]) {
                Scored s{dot(q, vec(nb), dim_), nb};
                if (BetterThan{}(s, cur)) {
                    cur = s;
                    improved = true;
                }
            }
        }
        return cur;
    }

private:
    void shrink(std::uint32_t node, int layer, std::size_t m) {
        auto& list = mutable_g_->neighbors[node][layer];
        std::vector<Scored> cands;
        cands.reserve(list.size());
        const double* base = vec(node);
        for (std::uint32_t nb : list) cands.push_back({dot(base, vec(nb), dim_), nb});
        list = select_neighbors(base, std::move(cands), m);
    }

    const VectorIndex::GraphData& g_;
    VectorIndex::GraphData* mutable_g_;
    const std::vector<double>& vectors_;
    std::size_t dim_;
    const AnnParams& params_;
};

std::vector<ScoredPost> top_k_from(const VectorIndex::Partition& part, std::size_t dim,
                                   const EmbeddingVector& query, std::size_t k) {
    std::vector<Scored> all;
    all.reserve(part.post_ids.size());
    for (std::uint32_t i = 0; i < part.post_ids.size(); ++i)
        all.push_back({dot(query.values.data(), part.vectors.data() + i * dim, dim), i});
    std::sort(all.begin(), all.end(), BetterThan{});
    if (all.size() > k) all.resize(k);
    std::vector<ScoredPost> out;
    out.reserve(all.size());
    for (const auto& s : all) out.push_back({part.post_ids[s.node], s.sim});
    return out;
}

}  // namespace

VectorIndex build_vector_index(const Corpus& corpus, const Embedder& embedder,
                               const AnnParams& params) {
    if (params.M < 2) throw Error(ErrorCode::Config, "M must be >= 2");
    VectorIndex index;
    index.params_ = params;
    index.dim_ = embedder.dim();

    for (const auto& gid : corpus.group_ids()) {
        auto& part = index.groups_[gid];
        const auto& pids = corpus.group_posts(gid);
        part.post_ids = pids;
        part.vectors.resize(pids.size() * index.dim_);
        for (std::size_t i = 0; i < pids.size(); ++i) {
            auto v = embedder.embed_doc(corpus.post(pids[i]).text);
            std::copy(v.values.begin(), v.values.end(), part.vectors.begin() + i * index.dim_);
        }

        if (pids.size() <= params.flat_threshold) {
            part.kind = VectorIndex::PartitionKind::Flat;
            continue;
        }

        part.kind = VectorIndex::PartitionKind::Graph;
        part.graph.levels.assign(pids.size(), 0);
        part.graph.neighbors.resize(pids.size());

        std::mt19937_64 rng(params.seed ^ stable_hash(gid));
        const double m_l = 1.0 / std::log(static_cast<double>(params.M));
        GraphOps ops(part.graph, part.vectors, index.dim_, params);
        std::vector<std::uint32_t> visited(pids.size(), 0);
        std::uint32_t visit_tag = 0;
        for (std::uint32_t node = 0; node < pids.size(); ++node) {
            // uniform in (0,1]; avoids log(0)
            double u = (static_cast<double>(rng() >> 11) + 1.0) * (1.0 / 9007199254740992.0);
            int level = static_cast<int>(std::floor(-std::log(u) * m_l));
            ops.insert(node, level, visited, visit_tag);
        }
    }
    return index;
}

const VectorIndex::Partition& VectorIndex::partition(const std::string& group_id) const {
    auto it = groups_.find(group_id);
    if (it == groups_.end()) throw Error(ErrorCode::UnknownGroup, group_id);
    return it->second;
}

std::vector<ScoredPost> VectorIndex::ann_search(const std::string& group_id,
                                                const EmbeddingVector& query,
                                                std::size_t k) const {
    return ann_search(group_id, query, k, params_.ef_search);
}

std::vector<ScoredPost> VectorIndex::ann_search(const std::string& group_id,
                                                const EmbeddingVector& query, std::size_t k,
                                                std::size_t ef_search) const {
    const auto& part = partition(group_id);
    if (query.dim() != dim_)
        throw Error(ErrorCode::DimensionMismatch,
                    std::to_string(query.dim()) + " vs index dim " + std::to_string(dim_));
    if (k == 0 || part.post_ids.empty()) return {};

    if (part.kind == PartitionKind::Flat) return top_k_from(part, dim_, query, k);

    const GraphData& g = part.graph;
    GraphOps ops(g, part.vectors, dim_, params_);
    const double* q = query.values.data();
    Scored cur{dot(q, ops.vec(g.entry_point), dim_), static_cast<std::uint32_t>(g.entry_point)};
    for (int layer = g.max_level; layer > 0; --layer) cur = ops.greedy_step(q, cur, layer);

    std::vector<std::uint32_t> visited(part.post_ids.size(), 0);
    std::uint32_t tag = 1;
    std::size_t ef = std::max(ef_search, k);
    auto found = ops.search_layer(q, {cur}, ef, 0, visited, tag);
    if (found.size() > k) found.resize(k);
    std::vector<ScoredPost> out;
    out.reserve(found.size());
    for (const auto& s : found) out.push_back({part.post_ids[s.node], s.sim});
    return out;
}

std::vector<ScoredPost> VectorIndex::exact_search(const std::string& group_id,
                                                  const EmbeddingVector& query,
                                                  std::size_t k) const {
    const auto& part = partition(group_id);
    if (query.dim() != dim_)
        throw Error(ErrorCode::DimensionMismatch,
                    std::to_string(query.dim()) + " vs index dim " + std::to_string(dim_));
    if (k == 0) return {};
    return top_k_from(part, dim_, query, k);
}

const double* VectorIndex::vector_of(const std::string& group_id, const std::string& post_id) const {
    const auto& part = partition(group_id);
    auto it = std::lower_bound(part.post_ids.begin(), part.post_ids.end(), post_id);
    if (it == part.post_ids.end() || *it != post_id) throw Error(ErrorCode::UnknownPost, post_id);
    return part.vectors.data() + static_cast<std::size_t>(it - part.post_ids.begin()) * dim_;
}

double recall_at_k(const std::vector<ScoredPost>& ann, const std::vector<ScoredPost>& exact,
                   std::size_t k) {
    if (exact.empty()) return 1.0;
    std::vector<std::string> a, e;
    for (std::size_t i = 0; i < std::min(k, ann.size()); ++i) a.push_back(ann[i].post_id);
    for (std::size_t i = 0; i < std::min(k, exact.size()); ++i) e.push_back(exact[i].post_id);
    std::sort(a.begin(), a.end());
    std::sort(e.begin(), e.end());
    std::vector<std::string> common;
    std::set_intersection(a.begin(), a.end(), e.begin(), e.end(), std::back_inserter(common));
    return static_cast<double>(common.size()) / static_cast<double>(std::min(k, exact.size()));
}

void VectorIndex::save(const std::string& path) const {
    binio::Writer w(path);
    w.header(binio::PayloadKind::VectorIndex);
    w.u64(dim_);
    w.u64(params_.M);
    w.u64(params_.ef_construction);
    w.u64(params_.ef_search);
    w.u64(params_.flat_threshold);
    w.u64(params_.seed);
    w.u64(groups_.size());
    for (const auto& [gid, part] : groups_) {
        w.str(gid);
        w.u8(static_cast<std::uint8_t>(part.kind));
        w.u64(part.post_ids.size());
        for (const auto& pid : part.post_ids) w.str(pid);
        w.f64_array(part.vectors);
        if (part.kind == PartitionKind::Graph) {
            w.u32(static_cast<std::uint32_t>(part.graph.entry_point));
            w.u32(static_cast<std::uint32_t>(part.graph.max_level));
            for (std::size_t n = 0; n < part.post_ids.size(); ++n) {
                w.u32(static_cast<std::uint32_t>(part.graph.levels[n]));
                const auto& layers = part.graph.neighbors[n];
                w.u32(static_cast<std::uint32_t>(layers.size()));
                for (const auto& adj : layers) {
                    w.u64(adj.size());
                    for (std::uint32_t nb : adj) w.u32(nb);
                }
            }
        }
    }
    w.close();
}

VectorIndex VectorIndex::load(const std::string& path) {
    binio::Reader r(path);
    r.expect_header(binio::PayloadKind::VectorIndex);
    VectorIndex index;
    index.dim_ = r.u64();
    index.params_.M = r.u64();
    index.params_.ef_construction = r.u64();
    index.params_.ef_search = r.u64();
    index.params_.flat_threshold = r.u64();
    index.params_.seed = r.u64();
    std::uint64_t n_groups = r.u64();
    for (std::uint64_t g = 0; g < n_groups; ++g) {
        std::string gid = r.str();
        auto& part = index.groups_[gid];
        part.kind = static_cast<PartitionKind>(r.u8());
        std::uint64_t n = r.u64();
        part.post_ids.reserve(n);
        for (std::uint64_t i = 0; i < n; ++i) part.post_ids.push_back(r.str());
        part.vectors = r.f64_array();
        if (part.vectors.size() != n * index.dim_)
            throw Error(ErrorCode::VersionMismatch, "vector block size mismatch in " + path);
        if (part.kind == PartitionKind::Graph) {
            part.graph.entry_point = static_cast<int>(r.u32());
            part.graph.max_level = static_cast<int>(r.u32());
            part.graph.levels.resize(n);
            part.graph.neighbors.resize(n);
            for (std::uint64_t i = 0; i < n; ++i) {
                part.graph.levels[i] = static_cast<int>(r.u32());
                std::uint32_t n_layers = r.u32();
                part.graph.neighbors[i].resize(n_layers);
                for (std::uint32_t l = 0; l < n_layers; ++l) {
                    std::uint64_t deg = r.u64();
                    auto& adj = part.graph.neighbors[i][l];
                    adj.reserve(deg);
                    for (std::uint64_t d = 0; d < deg; ++d) adj.push_back(r.u32());
                }
            }
        }
    }
    return index;
}

}  // namespace groupsearch
