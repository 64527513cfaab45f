#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tabprobe/dataset.hpp"
#include "tabprobe/llm.hpp"
#include "tabprobe/transforms.hpp"

#include <nlohmann/json.hpp>

namespace tabprobe {

struct FewShotConfig {
    int n_examples = 20;
    TransformLevel level = TransformLevel::Original;
    std::vector<std::string> label_set;  // empty: derived from the target column
    int test_set_size = 250;
    uint64_t seed = 0;
    int workers = 1;
    CompletionConfig completion;  // temperature 0 by default
    // Optional override; the default template depends on the level.
    std::optional<std::string> system_prompt;
};

struct ItemRecord {
    int row = -1;
    std::string expected;
    std::string predicted;
    bool parse_failure = false;
    bool correct = false;
    std::string transcript_digest;
};

struct EvalResult {
    double accuracy = 0.0;
    double standard_error = 0.0;  // sqrt(acc * (1 - acc) / n)
    int evaluated = 0;
    int parse_failures = 0;
    std::vector<ItemRecord> items;
    nlohmann::json config;

    nlohmann::json to_json() const;
};

// Largest-remainder apportionment of k across classes, uniform within-class
// sampling without replacement.
std::vector<size_t> stratified_select(const TabularDataset& dataset, int k, uint64_t seed);

// System prompt, alternating example turns ("IF ... THEN target =" / label),
// final user turn is the query row with the target held out.
ChatTranscript build_classification_prompt(const TabularDataset& dataset,
                                           const std::vector<size_t>& examples, size_t query,
                                           const FewShotConfig& config);

// Case-insensitive trimmed match, then unique-substring match; nullopt on
// parse failure (scored incorrect, never excluded).
std::optional<std::string> parse_label(const std::string& response,
                                       const std::vector<std::string>& label_set);

EvalResult run_classification(const TabularDataset& dataset, const ChatModel& model,
                              const FewShotConfig& config);

// --- classical baselines ----------------------------------------------------

struct LinearModel {
    std::vector<double> weights;
    double intercept = 0.0;
    double l2_penalty = 0.0;
    double cv_accuracy = 0.0;
    // internal standardization of the design matrix
    std::vector<double> feature_means;
    std::vector<double> feature_stddevs;

    double decision(const std::vector<double>& x) const;  // sigmoid(w . x + b)
    int predict(const std::vector<double>& x) const;      // 1[decision >= 0.5]
};

// L2-regularized logistic regression by gradient descent; the penalty is
// chosen by k-fold cross-validated accuracy over {1e-3, ..., 1e3}.
LinearModel train_logistic_regression(const std::vector<std::vector<double>>& rows,
                                      const std::vector<int>& labels, int folds = 5,
                                      const std::vector<double>& penalty_grid = {});

// Label of the Euclidean-nearest standardized training row; ties keep the
// earlier index.
int knn_predict(const std::vector<std::vector<double>>& rows, const std::vector<int>& labels,
                const std::vector<double>& query, int k = 1);

// One-hot categorical / pass-through numeric encoding of the non-target
// features, plus integer-coded labels. Row-aligned with the dataset.
struct EncodedDataset {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::vector<std::string> label_names;  // index = integer code
};
EncodedDataset encode_for_baselines(const TabularDataset& dataset);

}  // namespace tabprobe
