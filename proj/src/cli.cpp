#include "groupsearch/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "groupsearch/fixture.hpp"
#include "groupsearch/service.hpp"

namespace groupsearch {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open: " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

EngineConfig EngineConfig::from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw Error(ErrorCode::Config, "config file is not a JSON object");

    EngineConfig cfg;
    if (j.contains("paths")) {
        const auto& p = j["paths"];
        cfg.paths.corpus = p.value("corpus", std::string{});
        cfg.paths.lexical_index = p.value("lexical_index", std::string{});
        cfg.paths.vector_index = p.value("vector_index", std::string{});
        cfg.paths.model = p.value("model", std::string{});
        cfg.paths.stopwords = p.value("stopwords", std::string{});
        cfg.paths.prompt_template = p.value("prompt_template", std::string{});
    }
    if (j.contains("bm25")) {
        cfg.bm25.k1 = j["bm25"].value("k1", cfg.bm25.k1);
        cfg.bm25.b = j["bm25"].value("b", cfg.bm25.b);
    }
    if (j.contains("ann")) {
        const auto& a = j["ann"];
        cfg.ann.M = a.value("M", cfg.ann.M);
        cfg.ann.ef_construction = a.value("ef_construction", cfg.ann.ef_construction);
        cfg.ann.ef_search = a.value("ef_search", cfg.ann.ef_search);
        cfg.ann.flat_threshold = a.value("flat_threshold", cfg.ann.flat_threshold);
        cfg.ann.seed = a.value("seed", cfg.ann.seed);
    }
    if (j.contains("embedder")) {
        const auto& e = j["embedder"];
        cfg.embedder.dim = e.value("dim", cfg.embedder.dim);
        cfg.embedder.ngram_size = e.value("ngram_size", cfg.embedder.ngram_size);
        cfg.embedder.seed = e.value("seed", cfg.embedder.seed);
        if (e.contains("synonyms")) {
            for (const auto& [phrase, cluster] : e["synonyms"].items())
                cfg.embedder.synonym_table[phrase] = cluster.get<int>();
        }
    }
    cfg.fixture_synonyms = j.value("fixture_synonyms", false);
    if (j.contains("fusion")) {
        const auto& f = j["fusion"];
        std::string method = f.value("method", std::string{"linear"});
        if (method == "linear")
            cfg.fusion.method = FusionMethod::NormalizedLinear;
        else if (method == "rrf")
            cfg.fusion.method = FusionMethod::ReciprocalRank;
        else
            throw Error(ErrorCode::Config, "fusion.method must be linear or rrf");
        cfg.fusion.w_kw = f.value("w_kw", cfg.fusion.w_kw);
        cfg.fusion.w_ebr = f.value("w_ebr", cfg.fusion.w_ebr);
        cfg.fusion.rrf_c = f.value("rrf_c", cfg.fusion.rrf_c);
        cfg.fusion.k_kw = f.value("k_kw", cfg.fusion.k_kw);
        cfg.fusion.k_ebr = f.value("k_ebr", cfg.fusion.k_ebr);
    }
    if (j.contains("task_weights")) {
        const auto& t = j["task_weights"];
        cfg.task_weights.click = t.value("click", cfg.task_weights.click);
        cfg.task_weights.share = t.value("share", cfg.task_weights.share);
        cfg.task_weights.comment = t.value("comment", cfg.task_weights.comment);
    }
    cfg.mode = retrieval_mode_from_string(j.value("mode", std::string{"blended"}));
    cfg.now = j.value("now", std::int64_t{0});
    if (j.contains("eval")) {
        const auto& e = j["eval"];
        if (e.contains("ks")) cfg.eval.ks = e["ks"].get<std::vector<int>>();
        cfg.eval.judge_rounds = e.value("judge_rounds", cfg.eval.judge_rounds);
        cfg.eval.replay_rounds = e.value("replay_rounds", cfg.eval.replay_rounds);
        cfg.eval.concurrency = e.value("concurrency", cfg.eval.concurrency);
        cfg.eval.judge = e.value("judge", cfg.eval.judge);
        cfg.eval.user = e.value("user", cfg.eval.user);
        cfg.eval.mock_err_rate = e.value("mock_err_rate", cfg.eval.mock_err_rate);
        cfg.eval.mock_skip_rate = e.value("mock_skip_rate", cfg.eval.mock_skip_rate);
        cfg.eval.mock_seed = e.value("mock_seed", cfg.eval.mock_seed);
        cfg.eval.fixture_tables = e.value("fixture_tables", cfg.eval.fixture_tables);
        if (e.contains("topics")) {
            for (const auto& [term, topic] : e["topics"].items())
                cfg.eval.topics[term] = topic.get<std::string>();
        }
    }
    return cfg;
}

EngineConfig EngineConfig::from_file(const std::string& path) {
    return from_json_text(read_file(path));
}

std::shared_ptr<Embedder> make_embedder(const EngineConfig& config) {
    EmbedderConfig ec = config.embedder;
    if (config.fixture_synonyms) {
        for (const auto& [phrase, cluster] : fixture::synonym_table())
            ec.synonym_table.emplace(phrase, cluster);
    }
    return std::make_shared<HashingEmbedder>(ec);
}

std::unique_ptr<Judge> make_judge(const EngineConfig& config) {
    if (config.eval.judge == "mock") {
        MockJudgeConfig mc;
        mc.err_rate = config.eval.mock_err_rate;
        mc.skip_rate = config.eval.mock_skip_rate;
        mc.seed = config.eval.mock_seed;
        if (config.eval.fixture_tables) {
            mc.synonym_table = fixture::synonym_table();
            mc.topic_table = fixture::topic_table();
        } else {
            mc.synonym_table = config.embedder.synonym_table;
        }
        for (const auto& [term, topic] : config.eval.topics) mc.topic_table[term] = topic;
        return std::make_unique<MockJudge>(mc);
    }
    if (config.eval.judge == "remote") {
        return std::make_unique<RemoteJudge>(RemoteJudgeConfig::from_env());
    }
    throw Error(ErrorCode::Config, "eval.judge must be mock or remote");
}

BvtConfig make_bvt_config(const EngineConfig& config) {
    BvtConfig bc;
    bc.ks = config.eval.ks;
    bc.judge_rounds = config.eval.judge_rounds;
    bc.replay_rounds = config.eval.replay_rounds;
    bc.concurrency = config.eval.concurrency;
    bc.user = config.eval.user;
    if (!config.paths.prompt_template.empty())
        bc.prompt = PromptTemplate::from_file(config.paths.prompt_template);
    return bc;
}

Engine build_engine(const EngineConfig& config) {
    if (config.paths.corpus.empty())
        throw Error(ErrorCode::Config, "config.paths.corpus is required");
    Corpus corpus = load_corpus(config.paths.corpus);
    auto embedder = make_embedder(config);

    LexicalIndex lexical;
    if (!config.paths.lexical_index.empty() && fs::exists(config.paths.lexical_index))
        lexical = LexicalIndex::load(config.paths.lexical_index);
    else
        lexical = build_lexical_index(corpus, config.bm25);

    VectorIndex vectors;
    if (!config.paths.vector_index.empty() && fs::exists(config.paths.vector_index))
        vectors = VectorIndex::load(config.paths.vector_index);
    else
        vectors = build_vector_index(corpus, *embedder, config.ann);

    MtmlModel model;
    if (!config.paths.model.empty() && fs::exists(config.paths.model))
        model = MtmlModel::load(config.paths.model);
    else
        model = MtmlModel::default_model();
    model.task_weights = config.task_weights;

    EngineOptions opts;
    opts.fusion = config.fusion;
    opts.mode = config.mode;
    opts.now = config.now;
    if (!config.paths.stopwords.empty()) opts.stopwords = StopwordList::load(config.paths.stopwords);

    return Engine(std::move(corpus), std::move(lexical), std::move(vectors), embedder,
                  std::move(model), std::move(opts));
}

namespace {

int run_ingest(const EngineConfig& cfg, const std::string& out_path) {
    Corpus corpus = load_corpus(cfg.paths.corpus);
    std::cout << "groups: " << corpus.groups().size() << "\n";
    std::cout << "posts: " << corpus.posts().size() << "\n";
    for (const auto& gid : corpus.group_ids())
        std::cout << "  " << gid << ": " << corpus.post_count(gid) << "\n";
    if (!out_path.empty()) {
        save_corpus(corpus, out_path);
        std::cout << "normalized corpus written to " << out_path << "\n";
    }
    return 0;
}

int run_build_index(const EngineConfig& cfg) {
    if (cfg.paths.lexical_index.empty() || cfg.paths.vector_index.empty())
        throw Error(ErrorCode::Config,
                    "config.paths.lexical_index and vector_index are required for build-index");
    Corpus corpus = load_corpus(cfg.paths.corpus);
    auto embedder = make_embedder(cfg);

    auto lexical = build_lexical_index(corpus, cfg.bm25);
    lexical.save(cfg.paths.lexical_index);
    std::cout << "lexical index written to " << cfg.paths.lexical_index << "\n";

    auto vectors = build_vector_index(corpus, *embedder, cfg.ann);
    vectors.save(cfg.paths.vector_index);
    std::cout << "vector index written to " << cfg.paths.vector_index << "\n";
    return 0;
}

int run_search(const EngineConfig& cfg, const std::string& group, const std::string& query,
               std::size_t k) {
    Engine engine = build_engine(cfg);
    auto resp = engine.search(group, query, k);
    std::printf("%-4s %-24s %-10s %-8s %s\n", "rank", "post_id", "score", "sources", "snippet");
    for (std::size_t i = 0; i < resp.results.size(); ++i) {
        const auto& r = resp.results[i];
        std::string sources = r.from_keyword && r.from_ebr ? "kw+ebr"
                              : r.from_keyword             ? "kw"
                              : r.from_ebr                 ? "ebr"
                                                           : "-";
        std::printf("%-4zu %-24s %-10.6f %-8s %s\n", i + 1, r.post_id.c_str(), r.score,
                    sources.c_str(), r.snippet.c_str());
    }
    if (resp.degraded) std::cout << "warning: degraded (" << resp.warning << ")\n";
    std::printf("timing_us preprocess=%llu keyword=%llu ebr=%llu fuse=%llu rank=%llu\n",
                (unsigned long long)resp.timings.preprocess_us,
                (unsigned long long)resp.timings.keyword_us,
                (unsigned long long)resp.timings.ebr_us,
                (unsigned long long)resp.timings.fuse_us,
                (unsigned long long)resp.timings.rank_us);
    return 0;
}

int run_train(const std::string& data_path, const std::string& model_out, TrainOptions opts) {
    auto examples = load_training_set(data_path);
    auto report = train(examples, opts);
    for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
    report.model.save(model_out);
    std::cout << "model written to " << model_out << " (" << examples.size() << " examples)\n";
    return 0;
}

int run_serve(const EngineConfig& cfg, const std::string& bind_addr, int port) {
    SearchService service;
    std::cout << "loading engine..." << std::endl;
    auto engine = std::make_shared<Engine>(build_engine(cfg));
    service.set_engine(engine);
    std::cout << "serving on " << bind_addr << ":" << port << std::endl;
    service.run(bind_addr, port);
    return 0;
}

int run_eval(const EngineConfig& cfg, const std::string& queries_path,
             const std::string& report_path, const std::string& audit_path) {
    Engine engine = build_engine(cfg);
    auto queries = load_query_set(queries_path);
    auto judge = make_judge(cfg);
    BvtConfig bc = make_bvt_config(cfg);
    bc.report_path = report_path;
    bc.audit_path = audit_path;
    auto result = run_bvt(engine, queries, *judge, bc);
    std::cout << render_report_table(result.report.to_json_text());
    if (!report_path.empty()) std::cout << "report written to " << report_path << "\n";
    if (!audit_path.empty()) std::cout << "audit log written to " << audit_path << "\n";
    return 0;
}

int run_report(const std::string& report_path) {
    std::cout << render_report_table(read_file(report_path));
    return 0;
}

bool is_validation_error(ErrorCode code) {
    switch (code) {
        case ErrorCode::Config:
        case ErrorCode::Io:
        case ErrorCode::MalformedRecord:
        case ErrorCode::DuplicateId:
        case ErrorCode::UnknownGroup:
        case ErrorCode::UnknownPost:
        case ErrorCode::EmptyQuery:
        case ErrorCode::MissingPlaceholder:
        case ErrorCode::VersionMismatch:
        case ErrorCode::EmptyTrainingSet:
            return true;
        default:
            return false;
    }
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"Group-scoped blended search engine"};
    app.require_subcommand(1);

    std::string config_path, corpus_path, out_path, group, query, queries_path;
    std::string report_path, audit_path, model_out, data_path, judge_name, fusion_method;
    std::string bind_addr = "127.0.0.1", stopwords_path, mode_str;
    std::size_t k = 10;
    int port = 8080;
    int rounds = -1, replays = -1;
    std::int64_t seed = -1;
    TrainOptions train_opts;

    auto add_config = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "engine config file (JSON)");
    };

    auto* ingest = app.add_subcommand("ingest", "validate and normalize a corpus file");
    add_config(ingest);
    ingest->add_option("--corpus", corpus_path, "corpus file (JSON lines)");
    ingest->add_option("--out", out_path, "write the normalized corpus here");

    auto* build = app.add_subcommand("build-index", "build lexical and vector index files");
    add_config(build);
    build->add_option("--corpus", corpus_path, "corpus file");
    build->add_option("--lexical-out", out_path, "override lexical index output path");
    std::string vector_out;
    build->add_option("--vector-out", vector_out, "override vector index output path");

    auto* search = app.add_subcommand("search", "run one query and print the ranked results");
    add_config(search);
    search->add_option("--corpus", corpus_path, "corpus file");
    search->add_option("--group", group, "group id")->required();
    search->add_option("--query", query, "query text")->required();
    search->add_option("--k", k, "result count");
    search->add_option("--fusion", fusion_method, "fusion method: linear | rrf");
    search->add_option("--mode", mode_str, "retrieval mode: blended | keyword | ebr");
    search->add_option("--seed", seed, "override embedder/ann seeds");
    search->add_option("--stopwords", stopwords_path, "stopword list file");

    auto* train_cmd = app.add_subcommand("train", "fit the engagement model");
    train_cmd->add_option("--data", data_path, "training examples (JSON lines)")->required();
    train_cmd->add_option("--model-out", model_out, "output model path")->required();
    train_cmd->add_option("--epochs", train_opts.epochs, "SGD epochs");
    train_cmd->add_option("--lr", train_opts.learning_rate, "learning rate");
    train_cmd->add_option("--l2", train_opts.l2_penalty, "L2 penalty");
    train_cmd->add_option("--seed", train_opts.seed, "shuffle seed");

    auto* serve = app.add_subcommand("serve", "run the search service");
    add_config(serve);
    serve->add_option("--corpus", corpus_path, "corpus file");
    serve->add_option("--bind", bind_addr, "bind address (or BIND_ADDR env)");
    serve->add_option("--port", port, "port");

    auto* eval = app.add_subcommand("eval", "replay a query set and judge the results");
    add_config(eval);
    eval->add_option("--corpus", corpus_path, "corpus file");
    eval->add_option("--queries", queries_path, "query-set file")->required();
    eval->add_option("--judge", judge_name, "judge: mock | remote");
    eval->add_option("--report", report_path, "report output path");
    eval->add_option("--audit", audit_path, "audit log output path");
    eval->add_option("--rounds", rounds, "judge rounds per pair");
    eval->add_option("--replays", replays, "replay rounds per query");
    eval->add_option("--mode", mode_str, "retrieval mode: blended | keyword | ebr");
    eval->add_option("--fusion", fusion_method, "fusion method: linear | rrf");
    eval->add_option("--seed", seed, "override embedder/ann seeds");
    eval->add_option("--stopwords", stopwords_path, "stopword list file");

    auto* report = app.add_subcommand("report", "render a saved report as a table");
    report->add_option("--report", report_path, "report file")->required();

    std::vector<const char*> argv;
    argv.push_back("groupsearch");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        EngineConfig cfg;
        if (!config_path.empty()) cfg = EngineConfig::from_file(config_path);
        if (!corpus_path.empty()) cfg.paths.corpus = corpus_path;
        if (!stopwords_path.empty()) cfg.paths.stopwords = stopwords_path;
        if (!mode_str.empty()) cfg.mode = retrieval_mode_from_string(mode_str);
        if (!fusion_method.empty()) {
            if (fusion_method == "linear")
                cfg.fusion.method = FusionMethod::NormalizedLinear;
            else if (fusion_method == "rrf")
                cfg.fusion.method = FusionMethod::ReciprocalRank;
            else
                throw Error(ErrorCode::Config, "--fusion must be linear or rrf");
        }
        if (seed >= 0) {
            cfg.embedder.seed = static_cast<std::uint64_t>(seed);
            cfg.ann.seed = static_cast<std::uint64_t>(seed);
        }
        if (!judge_name.empty()) cfg.eval.judge = judge_name;
        if (rounds > 0) cfg.eval.judge_rounds = rounds;
        if (replays > 0) cfg.eval.replay_rounds = replays;

        if (ingest->parsed()) return run_ingest(cfg, out_path);
        if (build->parsed()) {
            if (!out_path.empty()) cfg.paths.lexical_index = out_path;
            if (!vector_out.empty()) cfg.paths.vector_index = vector_out;
            return run_build_index(cfg);
        }
        if (search->parsed()) {
            if (k < 1) throw Error(ErrorCode::Config, "--k must be >= 1");
            return run_search(cfg, group, query, k);
        }
        if (train_cmd->parsed()) return run_train(data_path, model_out, train_opts);
        if (serve->parsed()) {
            if (const char* env = std::getenv("BIND_ADDR"); env && bind_addr == "127.0.0.1")
                bind_addr = env;
            return run_serve(cfg, bind_addr, port);
        }
        if (eval->parsed()) return run_eval(cfg, queries_path, report_path, audit_path);
        if (report->parsed()) return run_report(report_path);
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return is_validation_error(e.code()) ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace groupsearch
