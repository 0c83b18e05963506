#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "groupsearch/blend.hpp"
#include "groupsearch/bvt_eval.hpp"
#include "groupsearch/embedding.hpp"
#include "groupsearch/engine.hpp"
#include "groupsearch/lexical_index.hpp"
#include "groupsearch/ranker.hpp"
#include "groupsearch/vector_index.hpp"

namespace groupsearch {

/// Engine configuration file (JSON). Flags override file values; every field
/// has a default so a minimal config only names paths.
struct EngineConfig {
    struct Paths {
        std::string corpus;
        std::string lexical_index;
        std::string vector_index;
        std::string model;
        std::string stopwords;
        std::string prompt_template;
    } paths;

    Bm25Params bm25;
    AnnParams ann;
    EmbedderConfig embedder;
    bool fixture_synonyms = false;  // merge the built-in fixture synonym table
    FusionConfig fusion;
    TaskWeights task_weights;
    RetrievalMode mode = RetrievalMode::Blended;
    std::int64_t now = 0;

    struct Eval {
        std::vector<int> ks = {5, 10};
        int judge_rounds = 3;
        int replay_rounds = 3;
        std::size_t concurrency = 4;
        std::string judge = "mock";  // mock | remote
        std::string user = "anonymous";
        double mock_err_rate = 0.0;
        double mock_skip_rate = 0.0;
        std::uint64_t mock_seed = 7;
        bool fixture_tables = true;  // mock judge uses fixture synonym/topic tables
        std::unordered_map<std::string, std::string> topics;  // extra topic tags
    } eval;

    static EngineConfig from_file(const std::string& path);
    static EngineConfig from_json_text(const std::string& text);
};

/// Loads (or builds) every component named by the config and assembles an
/// engine. Index files are used when present; otherwise indexes are built
/// from the corpus in memory.
Engine build_engine(const EngineConfig& config);

std::shared_ptr<Embedder> make_embedder(const EngineConfig& config);
std::unique_ptr<Judge> make_judge(const EngineConfig& config);
BvtConfig make_bvt_config(const EngineConfig& config);

/// Entry point behind the groupsearch binary. Subcommands: ingest,
/// build-index, search, train, serve, eval, report. Returns 0 on success,
/// 1 on validation errors, 2 on runtime failures.
int cli_main(const std::vector<std::string>& args);

}  // namespace groupsearch
