#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "groupsearch/blend.hpp"
#include "groupsearch/corpus.hpp"

namespace groupsearch {

/// Fixed feature order consumed by the L2 model. Keep in sync with
/// feature_names(); the model file stores a schema hash over these names.
inline constexpr std::size_t kFeatureDim = 10;

enum FeatureSlot : std::size_t {
    kBm25Norm = 0,
    kCosNorm = 1,
    kTfidf = 2,
    kL1Score = 3,
    kFromKeyword = 4,
    kFromEbr = 5,
    kQueryTermOverlap = 6,
    kLogDocLen = 7,
    kRecency = 8,
    kBias = 9,
};

using FeatureVector = std::array<double, kFeatureDim>;

const std::array<std::string, kFeatureDim>& feature_names();
std::uint64_t feature_schema_hash();

/// recency = 1 / (1 + age_days); log_doc_len = ln(1 + token count).
FeatureVector extract_features(const Candidate& candidate, const ProcessedQuery& query,
                               const Post& post, std::int64_t now);

struct TaskWeights {
    double click = 0.6;
    double share = 0.2;
    double comment = 0.2;

    void validate() const;
    bool operator==(const TaskWeights&) const = default;
};

struct Prediction {
    double p_click = 0.0;
    double p_share = 0.0;
    double p_comment = 0.0;
    double final_score = 0.0;  // task-weighted blend
};

/// Per-task linear-logistic sub-models blended by fixed task weights.
struct MtmlModel {
    FeatureVector w_click{};
    FeatureVector w_share{};
    FeatureVector w_comment{};
    TaskWeights task_weights;

    Prediction predict(const FeatureVector& f) const;

    /// Hand-set weights used when no trained model is supplied: positive on
    /// relevance features, mild recency preference.
    static MtmlModel default_model();

    void save(const std::string& path) const;
    static MtmlModel load(const std::string& path);

    bool operator==(const MtmlModel&) const = default;
};

struct RankedPost {
    std::string post_id;
    double score = 0.0;
    Prediction prediction;
};

/// Final SERP order: final score descending, ties by post_id ascending,
/// truncated to n.
std::vector<RankedPost> rank_l2(const MtmlModel& model,
                                const std::vector<std::pair<std::string, FeatureVector>>& features,
                                std::size_t n);

struct TrainingExample {
    FeatureVector features{};
    bool clicked = false;
    bool shared = false;
    bool commented = false;
};

struct TrainOptions {
    double learning_rate = 0.1;
    std::size_t epochs = 30;
    double l2_penalty = 1e-4;
    std::uint64_t seed = 1;
    TaskWeights task_weights;
};

struct TrainReport {
    MtmlModel model;
    std::vector<std::string> warnings;  // e.g. a task with single-class labels
};

/// Independent per-task SGD on logistic loss with L2 regularization;
/// deterministic for a fixed seed. A task whose labels are all one class
/// keeps zero weights and records a warning.
TrainReport train(const std::vector<TrainingExample>& examples, const TrainOptions& options);

/// Mean logistic loss with L2 penalty (lambda/2 * ||w||^2) and its analytic
/// gradient, for one label column. Exposed so the gradient can be checked
/// against finite differences.
double logistic_loss(const FeatureVector& w, const std::vector<FeatureVector>& xs,
                     const std::vector<double>& ys, double l2_penalty);
FeatureVector logistic_gradient(const FeatureVector& w, const std::vector<FeatureVector>& xs,
                                const std::vector<double>& ys, double l2_penalty);

std::vector<TrainingExample> load_training_set(const std::string& path);
void save_training_set(const std::vector<TrainingExample>& examples, const std::string& path);

}  // namespace groupsearch
