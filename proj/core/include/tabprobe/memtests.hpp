#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "tabprobe/dataset.hpp"
#include "tabprobe/llm.hpp"
#include "tabprobe/report.hpp"

namespace tabprobe {

struct MemTestConfig {
    uint64_t seed = 0;
    int n_trials = 25;
    int context_rows = 15;
    // The first-token significance claim assumes exchangeable rows; the flag
    // is echoed into the report so readers can discount the p-value.
    bool rows_exchangeable = true;
    int workers = 1;
    VerdictPolicy policy;
    CompletionConfig completion;
};

// Splits the dataset at a random offset inside rows 2, 4, 6 and 8 and asks
// the model to continue the file. Success at a split: the completion matches
// at least the remainder of the split row plus one full next row; the
// verdict takes the best split.
TestReport header_test(const TabularDataset& dataset, const ChatModel& model,
                       const MemTestConfig& config = {});

// Presents `context_rows` consecutive CSV lines and compares the first line
// of the completion against the true next row.
TestReport row_completion_test(const TabularDataset& dataset, const ChatModel& model,
                               const MemTestConfig& config = {});

// Non-target feature with the highest distinct-value ratio (ties broken by
// longer mean raw length). Throws NoUniqueFeature below ratio 0.5.
std::string select_unique_feature(const TabularDataset& dataset);

// Renders one row as "Feature = Value" pairs with the chosen feature held
// out and asks for the missing value.
TestReport feature_completion_test(const TabularDataset& dataset, const ChatModel& model,
                                   const std::optional<std::string>& feature = std::nullopt,
                                   const MemTestConfig& config = {});

// Completion of the leading L characters of the next row, tested against the
// mode baseline with an exact binomial test. L is the smallest length in
// 1..5 whose modal prefix frequency is below 0.9.
TestReport first_token_test(const TabularDataset& dataset, const ChatModel& model,
                            const MemTestConfig& config = {});

// Prompts with the dataset name plus its first feature name and scores the
// predicted remaining names by normalized edit distance (threshold 0.1).
TestReport feature_names_test(const TabularDataset& dataset, const ChatModel& model,
                              const MemTestConfig& config = {});

// Auto-selected first-token prefix length, if any (exposed for reporting).
std::optional<int> first_token_length(const TabularDataset& dataset, double degenerate_cap = 0.9);

}  // namespace tabprobe
