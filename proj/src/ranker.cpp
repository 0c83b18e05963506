#include "groupsearch/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <json.hpp>

#include "groupsearch/textproc.hpp"

namespace groupsearch {

using json = nlohmann::json;

const std::array<std::string, kFeatureDim>& feature_names() {
    static const std::array<std::string, kFeatureDim> names = {
        "bm25_norm", "cos_norm",           "tfidf",       "l1_score", "from_keyword",
        "from_ebr",  "query_term_overlap", "log_doc_len", "recency",  "bias"};
    return names;
}

std::uint64_t feature_schema_hash() {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& name : feature_names()) {
        for (unsigned char c : name) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= static_cast<unsigned char>(',');
        h *= 1099511628211ull;
    }
    return h;
}

FeatureVector extract_features(const Candidate& candidate, const ProcessedQuery& query,
                               const Post& post, std::int64_t now) {
    FeatureVector f{};
    f[kBm25Norm] = candidate.bm25_norm;
    f[kCosNorm] = candidate.cos_norm;
    f[kTfidf] = candidate.tfidf;
    f[kL1Score] = candidate.l1_score;
    f[kFromKeyword] = candidate.from_keyword ? 1.0 : 0.0;
    f[kFromEbr] = candidate.from_ebr ? 1.0 : 0.0;

    auto doc_tokens = tokenize(post.text);
    auto query_terms = query.unique_terms();
    std::size_t overlap = 0;
    for (const auto& t : query_terms) {
        if (std::find(doc_tokens.begin(), doc_tokens.end(), t) != doc_tokens.end()) ++overlap;
    }
    f[kQueryTermOverlap] =
        query_terms.empty() ? 0.0 : static_cast<double>(overlap) / query_terms.size();

    f[kLogDocLen] = std::log(1.0 + static_cast<double>(doc_tokens.size()));
    double age_seconds = std::max<double>(0.0, static_cast<double>(now - post.created_at));
    f[kRecency] = 1.0 / (1.0 + age_seconds / 86400.0);
    f[kBias] = 1.0;
    return f;
}

void TaskWeights::validate() const {
    if (click < 0 || share < 0 || comment < 0 || std::abs(click + share + comment - 1.0) > 1e-9)
        throw Error(ErrorCode::Config, "task weights must be non-negative and sum to 1");
}

namespace {

double sigmoid(double z) {
    // numerically stable in both tails
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double dot(const FeatureVector& w, const FeatureVector& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < kFeatureDim; ++i) s += w[i] * x[i];
    return s;
}

}  // namespace

Prediction MtmlModel::predict(const FeatureVector& f) const {
    Prediction p;
    p.p_click = sigmoid(dot(w_click, f));
    p.p_share = sigmoid(dot(w_share, f));
    p.p_comment = sigmoid(dot(w_comment, f));
    p.final_score = task_weights.click * p.p_click + task_weights.share * p.p_share +
                    task_weights.comment * p.p_comment;
    return p;
}

MtmlModel MtmlModel::default_model() {
    MtmlModel m;
    FeatureVector w{};
    w[kBm25Norm] = 2.0;
    w[kCosNorm] = 2.0;
    w[kTfidf] = 0.2;
    w[kL1Score] = 1.0;
    w[kFromKeyword] = 0.1;
    w[kFromEbr] = 0.1;
    w[kQueryTermOverlap] = 1.0;
    w[kLogDocLen] = 0.0;
    w[kRecency] = 0.2;
    w[kBias] = -2.0;
    m.w_click = m.w_share = m.w_comment = w;
    return m;
}

std::vector<RankedPost> rank_l2(const MtmlModel& model,
                                const std::vector<std::pair<std::string, FeatureVector>>& features,
                                std::size_t n) {
    std::vector<RankedPost> ranked;
    ranked.reserve(features.size());
    for (const auto& [pid, f] : features) {
        RankedPost r;
        r.post_id = pid;
        r.prediction = model.predict(f);
        r.score = r.prediction.final_score;
        ranked.push_back(std::move(r));
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedPost& a, const RankedPost& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.post_id < b.post_id;
    });
    if (ranked.size() > n) ranked.resize(n);
    return ranked;
}

double logistic_loss(const FeatureVector& w, const std::vector<FeatureVector>& xs,
                     const std::vector<double>& ys, double l2_penalty) {
    double loss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double z = dot(w, xs[i]);
        // -y*log(p) - (1-y)*log(1-p), written via log1p(exp) for stability
        double soft = z >= 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        loss += soft - ys[i] * z;
    }
    loss /= static_cast<double>(xs.size());
    double reg = 0.0;
    for (double v : w) reg += v * v;
    return loss + 0.5 * l2_penalty * reg;
}

FeatureVector logistic_gradient(const FeatureVector& w, const std::vector<FeatureVector>& xs,
                                const std::vector<double>& ys, double l2_penalty) {
    FeatureVector grad{};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double err = sigmoid(dot(w, xs[i])) - ys[i];
        for (std::size_t j = 0; j < kFeatureDim; ++j) grad[j] += err * xs[i][j];
    }
    for (std::size_t j = 0; j < kFeatureDim; ++j)
        grad[j] = grad[j] / static_cast<double>(xs.size()) + l2_penalty * w[j];
    return grad;
}

namespace {

FeatureVector train_task(const std::vector<TrainingExample>& examples,
                         double (*label)(const TrainingExample&), const TrainOptions& opt,
                         const char* task_name, std::vector<std::string>& warnings) {
    bool any_pos = false, any_neg = false;
    for (const auto& e : examples) (label(e) > 0.5 ? any_pos : any_neg) = true;
    if (!any_pos || !any_neg) {
        warnings.push_back(std::string(task_name) + ": labels are single-class, weights stay zero");
        return FeatureVector{};
    }

    FeatureVector w{};
    std::mt19937_64 rng(opt.seed);
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        // Fisher-Yates with our own rng draws, deterministic across platforms
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng() % i]);
        for (std::size_t idx : order) {
            const auto& e = examples[idx];
            double err = sigmoid(dot(w, e.features)) - label(e);
            for (std::size_t j = 0; j < kFeatureDim; ++j)
                w[j] -= opt.learning_rate * (err * e.features[j] + opt.l2_penalty * w[j]);
        }
    }
    return w;
}

}  // namespace

TrainReport train(const std::vector<TrainingExample>& examples, const TrainOptions& options) {
    if (examples.empty()) throw Error(ErrorCode::EmptyTrainingSet, "no training examples");
    options.task_weights.validate();

    TrainReport report;
    report.model.task_weights = options.task_weights;
    report.model.w_click = train_task(
        examples, [](const TrainingExample& e) { return e.clicked ? 1.0 : 0.0; }, options, "click",
        report.warnings);
    report.model.w_share = train_task(
        examples, [](const TrainingExample& e) { return e.shared ? 1.0 : 0.0; }, options, "share",
        report.warnings);
    report.model.w_comment = train_task(
        examples, [](const TrainingExample& e) { return e.commented ? 1.0 : 0.0; }, options,
        "comment", report.warnings);
    return report;
}

namespace {

constexpr int kModelFormatVersion = 1;

json weights_to_json(const FeatureVector& w) {
    return json(std::vector<double>(w.begin(), w.end()));
}

FeatureVector weights_from_json(const json& j) {
    if (!j.is_array() || j.size() != kFeatureDim)
        throw Error(ErrorCode::DimensionMismatch,
                    "model weight vector must have " + std::to_string(kFeatureDim) + " entries");
    FeatureVector w{};
    for (std::size_t i = 0; i < kFeatureDim; ++i) w[i] = j[i].get<double>();
    return w;
}

}  // namespace

void MtmlModel::save(const std::string& path) const {
    nlohmann::ordered_json j;
    j["format_version"] = kModelFormatVersion;
    j["feature_schema_hash"] = feature_schema_hash();
    j["feature_dim"] = kFeatureDim;
    j["task_weights"] = {{"click", task_weights.click},
                         {"share", task_weights.share},
                         {"comment", task_weights.comment}};
    j["weights"] = {{"click", weights_to_json(w_click)},
                    {"share", weights_to_json(w_share)},
                    {"comment", weights_to_json(w_comment)}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path);
}

MtmlModel MtmlModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open model file: " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json j = json::parse(content, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw Error(ErrorCode::VersionMismatch, "model file is not valid JSON: " + path);
    if (j.value("format_version", -1) != kModelFormatVersion)
        throw Error(ErrorCode::VersionMismatch, "unsupported model format version in " + path);
    if (j.value("feature_dim", std::size_t{0}) != kFeatureDim)
        throw Error(ErrorCode::DimensionMismatch, "model feature dimension mismatch in " + path);
    if (j.value("feature_schema_hash", std::uint64_t{0}) != feature_schema_hash())
        throw Error(ErrorCode::VersionMismatch, "model feature schema mismatch in " + path);

    MtmlModel m;
    m.task_weights.click = j.at("task_weights").at("click").get<double>();
    m.task_weights.share = j.at("task_weights").at("share").get<double>();
    m.task_weights.comment = j.at("task_weights").at("comment").get<double>();
    m.task_weights.validate();
    m.w_click = weights_from_json(j.at("weights").at("click"));
    m.w_share = weights_from_json(j.at("weights").at("share"));
    m.w_comment = weights_from_json(j.at("weights").at("comment"));
    return m;
}

std::vector<TrainingExample> load_training_set(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open training set: " + path);
    std::vector<TrainingExample> examples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("features") || !j.contains("labels"))
            throw Error(ErrorCode::MalformedRecord,
                        "line " + std::to_string(line_no) + ": expected {features, labels}");
        TrainingExample e;
        e.features = weights_from_json(j["features"]);
        const auto& labels = j["labels"];
        e.clicked = labels.value("click", 0) != 0;
        e.shared = labels.value("share", 0) != 0;
        e.commented = labels.value("comment", 0) != 0;
        examples.push_back(e);
    }
    return examples;
}

void save_training_set(const std::vector<TrainingExample>& examples, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open for writing: " + path);
    for (const auto& e : examples) {
        json j{{"features", std::vector<double>(e.features.begin(), e.features.end())},
               {"labels",
                {{"click", e.clicked ? 1 : 0},
                 {"share", e.shared ? 1 : 0},
                 {"comment", e.commented ? 1 : 0}}}};
        out << j.dump() << '\n';
    }
}

}  // namespace groupsearch
