#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabprobe/dataset.hpp"
#include "tabprobe/llm.hpp"

#include <nlohmann/json.hpp>

namespace tabprobe {

struct SampleBatch {
    std::string dataset_name;
    double temperature = 0.7;
    std::vector<std::vector<std::string>> rows;  // aligned to the dataset feature order
    std::vector<std::string> raw_responses;
    int parse_failures = 0;

    nlohmann::json to_json() const;
};

struct CopyStats {
    double copied_fraction = 0.0;       // samples exactly matching a data row
    double mean_shared_features = 0.0;  // raw count, vs the closest data row
    double mean_shared_fraction = 0.0;  // normalized by feature count
    double value_coverage = 0.0;        // values occurring anywhere in their column

    nlohmann::json to_json() const;
};

struct ModeAgreement {
    struct Feature {
        std::string name;
        std::string sample_mode;
        std::string data_mode;
        bool agree = false;
    };
    std::vector<Feature> features;
    bool pass = false;  // agreement on a majority of features

    nlohmann::json to_json() const;
};

struct CorrelationAgreement {
    std::vector<std::string> features;  // usable numeric features
    std::vector<std::vector<double>> sample_corr;
    std::vector<std::vector<double>> data_corr;
    double mean_abs_delta = 0.0;
    std::string verdict;  // "pass" (<= 0.2), "ambiguous" (<= 0.35), "fail", "not-applicable"

    nlohmann::json to_json() const;
};

struct SamplingConfig {
    int n = 200;
    double temperature = 0.7;
    uint64_t seed = 0;
    int workers = 1;
    CompletionConfig completion;
};

// System message plus five fixed exemplar turns (one "Feature = Value" sample
// each); the final user turn names the target dataset and its features only.
// Throws ExemplarOverlap when the target is one of the exemplar datasets.
ChatTranscript build_sampling_prompt(const std::string& dataset_name,
                                     const std::vector<std::string>& feature_names);

SampleBatch draw_samples(const ChatModel& model, const TabularDataset& dataset,
                         const SamplingConfig& config);

CopyStats copy_metrics(const SampleBatch& batch, const TabularDataset& dataset);

// Numeric features are discretized into 10 equal-width bins over the data
// range before taking modes.
ModeAgreement mode_agreement(const SampleBatch& batch, const TabularDataset& dataset);

CorrelationAgreement correlation_agreement(const SampleBatch& batch,
                                           const TabularDataset& dataset);

}  // namespace tabprobe
