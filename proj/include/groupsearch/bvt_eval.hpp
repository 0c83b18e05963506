#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "groupsearch/engine.hpp"

namespace groupsearch {

enum class JudgeLabel : std::uint8_t {
    Relevant = 0,
    SomewhatRelevant = 1,
    Irrelevant = 2,
    Error = 3,  // judge responded invalidly
    Skip = 4,   // pair could not be processed
};

const char* to_string(JudgeLabel label);
JudgeLabel judge_label_from_string(const std::string& s);

/// The somewhat-relevant rubric embedded verbatim in every shipped template.
extern const char* const kSomewhatRelevantRubric;

/// Template text with {query}, {post_text} and {user} placeholders.
struct PromptTemplate {
    std::string text;

    static PromptTemplate default_template();
    static PromptTemplate from_file(const std::string& path);

    /// Exact substitution of all three placeholders, nothing else mutated.
    /// Throws Error(MissingPlaceholder) when the template lacks one.
    std::string render(const std::string& query_text, const std::string& post_text,
                       const std::string& user) const;
};

/// One (query, post) pair as presented to a judge. The rendered prompt is
/// what a remote judge sees; the structured fields let the deterministic
/// mock judge skip prompt parsing.
struct JudgePair {
    std::string query_id;
    std::string post_id;
    std::string query_text;
    std::string post_text;
    std::string user;
    std::string prompt;
};

class Judge {
public:
    virtual ~Judge() = default;
    virtual const char* name() const = 0;
    /// Must be safe to call from multiple threads.
    virtual JudgeLabel judge(const JudgePair& pair) const = 0;
};

struct MockJudgeConfig {
    std::unordered_map<std::string, int> synonym_table;          // phrase -> cluster
    std::unordered_map<std::string, std::string> topic_table;    // term -> topic tag
    double err_rate = 0.0;   // fault injection, decided per (query,post) pair
    double skip_rate = 0.0;
    std::uint64_t seed = 7;
};

/// Rule-based deterministic judge:
///   Relevant          token-set Jaccard >= 0.5 or shared synonym cluster
///   SomewhatRelevant  shared non-stopword token or shared topic tag
///   Irrelevant        otherwise
/// Fault injection replaces the verdict with Error/Skip for a seeded,
/// per-pair-deterministic fraction of pairs.
class MockJudge final : public Judge {
public:
    explicit MockJudge(MockJudgeConfig config);

    const char* name() const override { return "mock"; }
    JudgeLabel judge(const JudgePair& pair) const override;

    /// 0 = no injection, 1 = Error, 2 = Skip for this pair; lets tests
    /// recompute exactly which pairs were injected.
    int injected_outcome(const std::string& query_text, const std::string& post_text) const;

private:
    JudgeLabel rule_label(const std::string& query_text, const std::string& post_text) const;

    MockJudgeConfig config_;
    std::unordered_map<std::string, std::vector<std::pair<std::vector<std::string>, int>>>
        phrases_;
    std::size_t max_phrase_len_ = 0;
};

struct RemoteJudgeConfig {
    std::string endpoint;  // http://host:port
    std::string token;
    int timeout_seconds = 10;
    int retries = 2;             // beyond the first attempt
    int backoff_initial_ms = 100;  // doubles per retry

    static RemoteJudgeConfig from_env(RemoteJudgeConfig base);
    static RemoteJudgeConfig from_env();
};

/// Sends the rendered prompt to a model endpoint (POST /judge, {"prompt":
/// ...}) and parses a constrained vocabulary {RELEVANT, SOMEWHAT_RELEVANT,
/// IRRELEVANT}. Any other response is Error; transport failure after retries
/// is Skip. Error/Skip ARE the error channel: judge() never throws.
class RemoteJudge final : public Judge {
public:
    explicit RemoteJudge(RemoteJudgeConfig config);

    const char* name() const override { return "remote"; }
    JudgeLabel judge(const JudgePair& pair) const override;

private:
    RemoteJudgeConfig config_;
};

/// Aggregates R rounds into one label: Error/Skip rounds are discarded; if
/// nothing remains the result is Skip when any round skipped, else Error.
/// Otherwise strict majority over {Relevant, SomewhatRelevant, Irrelevant};
/// with no strict majority, the median on the ordered scale Relevant >
/// SomewhatRelevant > Irrelevant (a half-step median rounds toward the less
/// relevant label). Permutation-invariant. Throws Error(EmptyRounds) on an
/// empty input.
JudgeLabel aggregate_rounds(const std::vector<JudgeLabel>& rounds);

/// One replay round of one query. Failures (e.g. unknown group) are recorded
/// per query, never aborting the run.
struct SerpSnapshot {
    std::string query_id;
    std::string group_id;
    int replay_round = 0;
    std::vector<std::pair<std::string, double>> ranked;  // (post_id, final score)
    bool stable = true;  // all replay rounds of this query were identical
    bool failed = false;
    std::string error;
};

/// Runs each query M times end-to-end; emits M snapshots per query sharing
/// the stable flag. Round 0 is the judged list.
std::vector<SerpSnapshot> replay_queries(const Engine& engine,
                                         const std::vector<QueryRecord>& queries, std::size_t k,
                                         std::size_t rounds);

/// Aggregated judgment for one (query, rank position).
struct JudgedPair {
    std::string query_id;
    std::string post_id;
    int position = 0;  // 1-based rank
    JudgeLabel label = JudgeLabel::Skip;
};

struct MetricsAtK {
    int k = 0;
    std::uint64_t attempts = 0;  // judged (query, position<=k) pairs
    std::uint64_t errors = 0;
    std::uint64_t skips = 0;
    std::uint64_t relevant = 0;
    std::uint64_t somewhat_relevant = 0;  // label==SomewhatRelevant only
    bool defined = false;                 // valid = attempts-errors-skips > 0
    double rel_rate = 0.0;                // relevant / valid
    double somewhat_rel_rate = 0.0;       // (relevant + somewhat_relevant) / valid
    double err_rate = 0.0;                // errors / attempts
    double skip_rate = 0.0;               // skips / attempts

    std::uint64_t valid() const { return attempts - errors - skips; }
};

struct QueryBreakdown {
    std::string query_id;
    std::uint64_t attempts = 0;
    std::uint64_t errors = 0;
    std::uint64_t skips = 0;
    std::uint64_t relevant = 0;
    std::uint64_t somewhat_relevant = 0;
};

struct EvalReport {
    std::vector<int> ks;
    std::vector<MetricsAtK> per_k;
    std::vector<QueryBreakdown> per_query;  // sorted by query_id
    std::uint64_t queries_total = 0;
    std::uint64_t queries_failed = 0;
    std::uint64_t queries_unstable = 0;
    int judge_rounds = 0;
    int replay_rounds = 0;
    std::string engine_mode;
    std::string judge_name;

    const MetricsAtK& at_k(int k) const;

    /// Deterministic bytes: ordered keys, stable float formatting. Rates for
    /// a k with no valid judgments are emitted as null, flagged in counts.
    std::string to_json_text() const;
    void save(const std::string& path) const;
};

/// All rates as fractions in [0,1]. Valid-judgment rates (rel, somewhat) use
/// V = A - S - E as denominator; err/skip use attempts A.
EvalReport compute_metrics(const std::vector<JudgedPair>& pairs, const std::vector<int>& ks);

/// Table-style text rendering of a saved report (the `report` subcommand).
std::string render_report_table(const std::string& report_json_text);

struct AuditRecord {
    std::string query_id;
    std::string post_id;
    int round = 0;
    JudgeLabel label = JudgeLabel::Skip;
    std::string prompt_hash;  // fnv1a-64 hex of the rendered prompt
};

struct BvtConfig {
    std::vector<int> ks = {5, 10};
    int judge_rounds = 3;   // R
    int replay_rounds = 3;  // M
    std::size_t concurrency = 4;
    std::string user = "anonymous";  // fills the {user} placeholder
    PromptTemplate prompt = PromptTemplate::default_template();
    std::string report_path;  // written when non-empty
    std::string audit_path;
};

struct BvtResult {
    EvalReport report;
    std::vector<AuditRecord> audit;
    std::vector<SerpSnapshot> snapshots;
};

/// replay -> render -> judge (R rounds per pair under bounded concurrency) ->
/// aggregate -> metrics. Per-pair failures become Error/Skip labels; only
/// configuration errors abort.
BvtResult run_bvt(const Engine& engine, const std::vector<QueryRecord>& queries,
                  const Judge& judge, const BvtConfig& config);

std::string fnv1a_hex(const std::string& data);

}  // namespace groupsearch
