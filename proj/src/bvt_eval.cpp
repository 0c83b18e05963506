#include "groupsearch/bvt_eval.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace groupsearch {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const char* to_string(JudgeLabel label) {
    switch (label) {
        case JudgeLabel::Relevant:
            return "RELEVANT";
        case JudgeLabel::SomewhatRelevant:
            return "SOMEWHAT_RELEVANT";
        case JudgeLabel::Irrelevant:
            return "IRRELEVANT";
        case JudgeLabel::Error:
            return "ERROR";
        case JudgeLabel::Skip:
            return "SKIP";
    }
    return "ERROR";
}

JudgeLabel judge_label_from_string(const std::string& s) {
    if (s == "RELEVANT") return JudgeLabel::Relevant;
    if (s == "SOMEWHAT_RELEVANT") return JudgeLabel::SomewhatRelevant;
    if (s == "IRRELEVANT") return JudgeLabel::Irrelevant;
    if (s == "ERROR") return JudgeLabel::Error;
    if (s == "SKIP") return JudgeLabel::Skip;
    throw Error(ErrorCode::MalformedRecord, "unknown judge label: " + s);
}

const char* const kSomewhatRelevantRubric =
    "If you are a rater evaluating whether a query is somewhat relevant to a post, consider "
    "cases where both share a common domain or theme. For example, if both the query and post "
    "are related to sports, then they are somewhat relevant, even if the specific sports "
    "differ.";

PromptTemplate PromptTemplate::default_template() {
    PromptTemplate t;
    t.text = std::string("You are a rater assessing whether a search result is relevant to a "
                         "query inside a scoped group.\n\n") +
             kSomewhatRelevantRubric + "  Search Query: {query}, User: {user}\n\n" +
             "Post: {post_text}\n\n" +
             "Answer with exactly one of: RELEVANT, SOMEWHAT_RELEVANT, IRRELEVANT.\n";
    return t;
}

PromptTemplate PromptTemplate::from_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open prompt template: " + path);
    PromptTemplate t;
    t.text.assign((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return t;
}

namespace {

void replace_all(std::string& s, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
}

}  // namespace

std::string PromptTemplate::render(const std::string& query_text, const std::string& post_text,
                                   const std::string& user) const {
    for (const char* ph : {"{query}", "{post_text}", "{user}"}) {
        if (text.find(ph) == std::string::npos)
            throw Error(ErrorCode::MissingPlaceholder, std::string("template lacks ") + ph);
    }
    std::string out = text;
    replace_all(out, "{query}", query_text);
    replace_all(out, "{post_text}", post_text);
    replace_all(out, "{user}", user);
    return out;
}

std::string fnv1a_hex(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Mock judge
// ---------------------------------------------------------------------------

MockJudge::MockJudge(MockJudgeConfig config) : config_(std::move(config)) {
    if (config_.err_rate < 0 || config_.skip_rate < 0 ||
        config_.err_rate + config_.skip_rate > 1.0)
        throw Error(ErrorCode::Config, "fault-injection rates must be >= 0 and sum to <= 1");
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

int MockJudge::injected_outcome(const std::string& query_text,
                                const std::string& post_text) const {
    if (config_.err_rate == 0.0 && config_.skip_rate == 0.0) return 0;
    std::string key = std::to_string(config_.seed) + "\x1f" + query_text + "\x1f" + post_text;
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : key) {
        h ^= c;
        h *= 1099511628211ull;
    }
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdull;
    h ^= h >> 33;
    double u = static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);
    if (u < config_.err_rate) return 1;
    if (u < config_.err_rate + config_.skip_rate) return 2;
    return 0;
}

JudgeLabel MockJudge::rule_label(const std::string& query_text,
                                 const std::string& post_text) const {
    auto q_tokens = tokenize(query_text);
    auto p_tokens = tokenize(post_text);
    std::set<std::string> q_set(q_tokens.begin(), q_tokens.end());
    std::set<std::string> p_set(p_tokens.begin(), p_tokens.end());

    // synonym-cluster match
    auto clusters_of = [&](const std::vector<std::string>& tokens) {
        std::set<std::string> out;
        for (const auto& t : canonicalize_tokens(tokens, phrases_, max_phrase_len_)) {
            if (t.size() > 5 && t.rfind("_syn", 0) == 0) out.insert(t);
        }
        return out;
    };
    auto qc = clusters_of(q_tokens);
    auto pc = clusters_of(p_tokens);
    for (const auto& c : qc) {
        if (pc.count(c)) return JudgeLabel::Relevant;
    }

    std::size_t inter = 0;
    for (const auto& t : q_set)
        if (p_set.count(t)) ++inter;
    std::size_t uni = q_set.size() + p_set.size() - inter;
    if (uni > 0 && static_cast<double>(inter) / static_cast<double>(uni) >= 0.5)
        return JudgeLabel::Relevant;

    const auto& stopwords = StopwordList::builtin();
    for (const auto& t : q_set) {
        if (!stopwords.contains(t) && p_set.count(t)) return JudgeLabel::SomewhatRelevant;
    }

    std::set<std::string> q_topics, p_topics;
    for (const auto& t : q_set) {
        auto it = config_.topic_table.find(t);
        if (it != config_.topic_table.end()) q_topics.insert(it->second);
    }
    for (const auto& t : p_set) {
        auto it = config_.topic_table.find(t);
        if (it != config_.topic_table.end()) p_topics.insert(it->second);
    }
    for (const auto& t : q_topics) {
        if (p_topics.count(t)) return JudgeLabel::SomewhatRelevant;
    }
    return JudgeLabel::Irrelevant;
}

JudgeLabel MockJudge::judge(const JudgePair& pair) const {
    switch (injected_outcome(pair.query_text, pair.post_text)) {
        case 1:
            return JudgeLabel::Error;
        case 2:
            return JudgeLabel::Skip;
        default:
            return rule_label(pair.query_text, pair.post_text);
    }
}

// ---------------------------------------------------------------------------
// Remote judge
// ---------------------------------------------------------------------------

RemoteJudgeConfig RemoteJudgeConfig::from_env(RemoteJudgeConfig base) {
    if (base.endpoint.empty()) {
        if (const char* e = std::getenv("JUDGE_ENDPOINT")) base.endpoint = e;
    }
    if (base.token.empty()) {
        if (const char* t = std::getenv("JUDGE_TOKEN")) base.token = t;
    }
    return base;
}

RemoteJudgeConfig RemoteJudgeConfig::from_env() {
    return from_env(RemoteJudgeConfig{});
}

RemoteJudge::RemoteJudge(RemoteJudgeConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty())
        throw Error(ErrorCode::Config, "remote judge endpoint not configured");
}

JudgeLabel RemoteJudge::judge(const JudgePair& pair) const {
    int backoff = config_.backoff_initial_ms;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
        httplib::Client client(config_.endpoint);
        client.set_connection_timeout(config_.timeout_seconds);
        client.set_read_timeout(config_.timeout_seconds);
        if (!config_.token.empty()) client.set_bearer_token_auth(config_.token);

        json body{{"prompt", pair.prompt}};
        auto res = client.Post("/judge", body.dump(), "application/json");
        if (!res) continue;  // transport failure; retry
        if (res->status != 200) return JudgeLabel::Error;

        json parsed = json::parse(res->body, nullptr, false);
        std::string label;
        if (parsed.is_object() && parsed.contains("label") && parsed["label"].is_string())
            label = parsed["label"].get<std::string>();
        else if (parsed.is_string())
            label = parsed.get<std::string>();
        else
            return JudgeLabel::Error;

        if (label == "RELEVANT") return JudgeLabel::Relevant;
        if (label == "SOMEWHAT_RELEVANT") return JudgeLabel::SomewhatRelevant;
        if (label == "IRRELEVANT") return JudgeLabel::Irrelevant;
        return JudgeLabel::Error;  // outside the constrained vocabulary
    }
    return JudgeLabel::Skip;  // transport failed after all retries
}

// ---------------------------------------------------------------------------
// Round aggregation
// ---------------------------------------------------------------------------

JudgeLabel aggregate_rounds(const std::vector<JudgeLabel>& rounds) {
    if (rounds.empty()) throw Error(ErrorCode::EmptyRounds, "no judge rounds to aggregate");

    std::vector<int> scale;  // Irrelevant=0, SomewhatRelevant=1, Relevant=2
    bool any_skip = false;
    for (JudgeLabel l : rounds) {
        switch (l) {
            case JudgeLabel::Relevant:
                scale.push_back(2);
                break;
            case JudgeLabel::SomewhatRelevant:
                scale.push_back(1);
                break;
            case JudgeLabel::Irrelevant:
                scale.push_back(0);
                break;
            case JudgeLabel::Skip:
                any_skip = true;
                break;
            case JudgeLabel::Error:
                break;
        }
    }
    if (scale.empty()) return any_skip ? JudgeLabel::Skip : JudgeLabel::Error;

    std::array<std::size_t, 3> counts{};
    for (int v : scale) ++counts[v];
    for (int v = 0; v < 3; ++v) {
        if (counts[v] * 2 > scale.size())
            return v == 2 ? JudgeLabel::Relevant
                          : (v == 1 ? JudgeLabel::SomewhatRelevant : JudgeLabel::Irrelevant);
    }

    // median fallback; a mean landing between two labels rounds down to the
    // less relevant one
    std::sort(scale.begin(), scale.end());
    int median;
    std::size_t n = scale.size();
    if (n % 2 == 1) {
        median = scale[n / 2];
    } else {
        median = (scale[n / 2 - 1] + scale[n / 2]) / 2;  // integer floor
    }
    return median == 2 ? JudgeLabel::Relevant
                       : (median == 1 ? JudgeLabel::SomewhatRelevant : JudgeLabel::Irrelevant);
}

// ---------------------------------------------------------------------------
// Query replay
// ---------------------------------------------------------------------------

std::vector<SerpSnapshot> replay_queries(const Engine& engine,
                                         const std::vector<QueryRecord>& queries, std::size_t k,
                                         std::size_t rounds) {
    if (rounds == 0) throw Error(ErrorCode::Config, "replay rounds must be >= 1");

    std::vector<SerpSnapshot> out;
    for (const auto& q : queries) {
        std::vector<SerpSnapshot> mine;
        bool failed = false;
        std::string error;
        for (std::size_t m = 0; m < rounds && !failed; ++m) {
            SerpSnapshot snap;
            snap.query_id = q.query_id;
            snap.group_id = q.group_id;
            snap.replay_round = static_cast<int>(m);
            try {
                auto resp = engine.search(q.group_id, q.query_text, k);
                for (const auto& r : resp.results) snap.ranked.emplace_back(r.post_id, r.score);
            } catch (const Error& e) {
                failed = true;
                error = e.what();
            }
            if (!failed) mine.push_back(std::move(snap));
        }
        if (failed) {
            SerpSnapshot snap;
            snap.query_id = q.query_id;
            snap.group_id = q.group_id;
            snap.failed = true;
            snap.error = error;
            out.push_back(std::move(snap));
            continue;
        }
        bool stable = true;
        for (std::size_t m = 1; m < mine.size(); ++m)
            if (mine[m].ranked != mine[0].ranked) stable = false;
        for (auto& s : mine) {
            s.stable = stable;
            out.push_back(std::move(s));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

EvalReport compute_metrics(const std::vector<JudgedPair>& pairs, const std::vector<int>& ks) {
    if (ks.empty()) throw Error(ErrorCode::Config, "metric k set must be non-empty");
    for (int k : ks)
        if (k < 1) throw Error(ErrorCode::Config, "metric k values must be >= 1");

    EvalReport report;
    report.ks = ks;
    std::sort(report.ks.begin(), report.ks.end());

    for (int k : report.ks) {
        MetricsAtK m;
        m.k = k;
        for (const auto& p : pairs) {
            if (p.position > k) continue;
            ++m.attempts;
            switch (p.label) {
                case JudgeLabel::Relevant:
                    ++m.relevant;
                    break;
                case JudgeLabel::SomewhatRelevant:
                    ++m.somewhat_relevant;
                    break;
                case JudgeLabel::Error:
                    ++m.errors;
                    break;
                case JudgeLabel::Skip:
                    ++m.skips;
                    break;
                case JudgeLabel::Irrelevant:
                    break;
            }
        }
        std::uint64_t valid = m.valid();
        m.defined = valid > 0;
        if (m.defined) {
            m.rel_rate = static_cast<double>(m.relevant) / static_cast<double>(valid);
            m.somewhat_rel_rate =
                static_cast<double>(m.relevant + m.somewhat_relevant) / static_cast<double>(valid);
        }
        if (m.attempts > 0) {
            m.err_rate = static_cast<double>(m.errors) / static_cast<double>(m.attempts);
            m.skip_rate = static_cast<double>(m.skips) / static_cast<double>(m.attempts);
        }
        report.per_k.push_back(m);
    }

    std::map<std::string, QueryBreakdown> by_query;
    for (const auto& p : pairs) {
        auto& b = by_query[p.query_id];
        b.query_id = p.query_id;
        ++b.attempts;
        switch (p.label) {
            case JudgeLabel::Relevant:
                ++b.relevant;
                break;
            case JudgeLabel::SomewhatRelevant:
                ++b.somewhat_relevant;
                break;
            case JudgeLabel::Error:
                ++b.errors;
                break;
            case JudgeLabel::Skip:
                ++b.skips;
                break;
            case JudgeLabel::Irrelevant:
                break;
        }
    }
    for (auto& [qid, b] : by_query) report.per_query.push_back(std::move(b));
    return report;
}

const MetricsAtK& EvalReport::at_k(int k) const {
    for (const auto& m : per_k)
        if (m.k == k) return m;
    throw Error(ErrorCode::Config, "report has no metrics for k=" + std::to_string(k));
}

std::string EvalReport::to_json_text() const {
    ordered_json j;
    j["format_version"] = 1;
    j["engine_mode"] = engine_mode;
    j["judge"] = judge_name;
    j["ks"] = ks;

    ordered_json metrics;
    for (const auto& m : per_k) {
        std::string prefix = "top" + std::to_string(m.k) + " ";
        if (m.defined) {
            metrics[prefix + "rel rate"] = m.rel_rate;
            metrics[prefix + "somewhat rel rate"] = m.somewhat_rel_rate;
        } else {
            metrics[prefix + "rel rate"] = nullptr;
            metrics[prefix + "somewhat rel rate"] = nullptr;
        }
        if (m.attempts > 0) {
            metrics[prefix + "err rate"] = m.err_rate;
            metrics[prefix + "skip rate"] = m.skip_rate;
        } else {
            metrics[prefix + "err rate"] = nullptr;
            metrics[prefix + "skip rate"] = nullptr;
        }
    }
    j["metrics"] = metrics;

    ordered_json counts;
    for (const auto& m : per_k) {
        ordered_json c;
        c["attempts"] = m.attempts;
        c["errors"] = m.errors;
        c["skips"] = m.skips;
        c["valid"] = m.valid();
        c["relevant"] = m.relevant;
        c["somewhat_relevant"] = m.somewhat_relevant;
        c["defined"] = m.defined;
        counts["top" + std::to_string(m.k)] = c;
    }
    j["counts"] = counts;

    ordered_json replay;
    replay["queries"] = queries_total;
    replay["failed"] = queries_failed;
    replay["unstable"] = queries_unstable;
    replay["judge_rounds"] = judge_rounds;
    replay["replay_rounds"] = replay_rounds;
    j["replay"] = replay;

    ordered_json per_q = ordered_json::array();
    for (const auto& b : per_query) {
        ordered_json q;
        q["query_id"] = b.query_id;
        q["attempts"] = b.attempts;
        q["errors"] = b.errors;
        q["skips"] = b.skips;
        q["relevant"] = b.relevant;
        q["somewhat_relevant"] = b.somewhat_relevant;
        per_q.push_back(q);
    }
    j["per_query"] = per_q;

    return j.dump(2) + "\n";
}

void EvalReport::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + path);
    out << to_json_text();
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

std::string render_report_table(const std::string& report_json_text) {
    json j = json::parse(report_json_text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("metrics"))
        throw Error(ErrorCode::MalformedRecord, "not a report file");

    std::string out;
    out += "Response Metric                  Value\n";
    out += "---------------------------------------\n";
    // iterate in ks order to keep the table stable
    std::vector<int> ks = j.value("ks", std::vector<int>{});
    const char* rows[] = {"rel rate", "somewhat rel rate", "err rate", "skip rate"};
    for (int k : ks) {
        for (const char* row : rows) {
            std::string key = "top" + std::to_string(k) + " " + row;
            if (!j["metrics"].contains(key)) continue;
            std::string value =
                j["metrics"][key].is_null() ? "undefined" : j["metrics"][key].dump();
            std::string padded = key;
            padded.resize(33, ' ');
            out += padded + value + "\n";
        }
    }
    if (j.contains("replay")) {
        out += "---------------------------------------\n";
        for (const char* field : {"queries", "failed", "unstable"}) {
            std::string padded = std::string("replay ") + field;
            padded.resize(33, ' ');
            out += padded + j["replay"][field].dump() + "\n";
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// End-to-end harness
// ---------------------------------------------------------------------------

BvtResult run_bvt(const Engine& engine, const std::vector<QueryRecord>& queries,
                  const Judge& judge, const BvtConfig& config) {
    if (config.judge_rounds < 1) throw Error(ErrorCode::Config, "judge_rounds must be >= 1");
    if (config.replay_rounds < 1) throw Error(ErrorCode::Config, "replay_rounds must be >= 1");
    if (config.concurrency < 1) throw Error(ErrorCode::Config, "concurrency must be >= 1");
    if (config.ks.empty()) throw Error(ErrorCode::Config, "k set must be non-empty");
    // fail fast on a broken template instead of per pair
    config.prompt.render("q", "p", "u");

    int max_k = *std::max_element(config.ks.begin(), config.ks.end());

    BvtResult result;
    result.snapshots =
        replay_queries(engine, queries, static_cast<std::size_t>(max_k),
                       static_cast<std::size_t>(config.replay_rounds));

    std::map<std::string, std::string> query_text_by_id;
    for (const auto& q : queries) query_text_by_id[q.query_id] = q.query_text;

    struct PendingPair {
        JudgePair pair;
        int position;
    };
    std::vector<PendingPair> pending;
    std::set<std::string> unstable, failed;
    for (const auto& snap : result.snapshots) {
        if (snap.failed) {
            failed.insert(snap.query_id);
            continue;
        }
        if (!snap.stable) unstable.insert(snap.query_id);
        if (snap.replay_round != 0) continue;  // round 0 is the judged list
        for (std::size_t pos = 0; pos < snap.ranked.size(); ++pos) {
            PendingPair p;
            p.position = static_cast<int>(pos) + 1;
            p.pair.query_id = snap.query_id;
            p.pair.post_id = snap.ranked[pos].first;
            p.pair.query_text = query_text_by_id[snap.query_id];
            p.pair.post_text = engine.corpus().post(p.pair.post_id).text;
            p.pair.user = config.user;
            p.pair.prompt =
                config.prompt.render(p.pair.query_text, p.pair.post_text, p.pair.user);
            pending.push_back(std::move(p));
        }
    }

    // R rounds per pair under bounded concurrency; results keyed by
    // (pair index, round) so aggregation ignores completion order.
    const int R = config.judge_rounds;
    std::vector<std::vector<JudgeLabel>> labels(pending.size(),
                                                std::vector<JudgeLabel>(R, JudgeLabel::Skip));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= pending.size()) break;
            for (int r = 0; r < R; ++r) labels[i][r] = judge.judge(pending[i].pair);
        }
    };
    std::size_t n_threads = std::min(config.concurrency, std::max<std::size_t>(pending.size(), 1));
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    std::vector<JudgedPair> judged;
    judged.reserve(pending.size());
    for (std::size_t i = 0; i < pending.size(); ++i) {
        for (int r = 0; r < R; ++r) {
            AuditRecord rec;
            rec.query_id = pending[i].pair.query_id;
            rec.post_id = pending[i].pair.post_id;
            rec.round = r;
            rec.label = labels[i][r];
            rec.prompt_hash = fnv1a_hex(pending[i].pair.prompt);
            result.audit.push_back(std::move(rec));
        }
        JudgedPair jp;
        jp.query_id = pending[i].pair.query_id;
        jp.post_id = pending[i].pair.post_id;
        jp.position = pending[i].position;
        jp.label = aggregate_rounds(labels[i]);
        judged.push_back(std::move(jp));
    }

    result.report = compute_metrics(judged, config.ks);
    result.report.queries_total = queries.size();
    result.report.queries_failed = failed.size();
    result.report.queries_unstable = unstable.size();
    result.report.judge_rounds = config.judge_rounds;
    result.report.replay_rounds = config.replay_rounds;
    result.report.engine_mode = to_string(engine.options().mode);
    result.report.judge_name = judge.name();

    if (!config.report_path.empty()) result.report.save(config.report_path);
    if (!config.audit_path.empty()) {
        std::ofstream out(config.audit_path, std::ios::binary);
        if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + config.audit_path);
        for (const auto& rec : result.audit) {
            out << rec.query_id << '\t' << rec.post_id << '\t' << rec.round << '\t'
                << to_string(rec.label) << '\t' << rec.prompt_hash << '\n';
        }
    }
    return result;
}

}  // namespace groupsearch
