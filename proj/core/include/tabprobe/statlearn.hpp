#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabprobe/dataset.hpp"
#include "tabprobe/llm.hpp"

#include <nlohmann/json.hpp>

namespace tabprobe {

// Linear-boundary binary classification: z, x ~ N(0, I), y = 1[x . z >= 0].
struct SyntheticProblem {
    int dimension = 0;
    std::vector<double> z;
    std::vector<std::vector<double>> train_x;
    std::vector<int> train_y;
    std::vector<std::vector<double>> test_x;
    std::vector<int> test_y;
    uint64_t seed = 0;
};

struct MethodCurve {
    std::string method;             // "llm", "logistic_regression", "1nn"
    std::vector<double> mean;       // per grid point
    std::vector<double> ci_half;    // 1.96 x SE of the mean over repetitions
    std::vector<std::vector<double>> per_rep;  // [grid point][repetition]
};

struct SweepResult {
    std::string axis;  // "dimension" or "samples"
    std::vector<int> grid;
    int repetitions = 0;
    int test_queries = 0;
    std::vector<MethodCurve> curves;

    nlohmann::json to_json() const;
    std::string to_plot_csv() const;  // one row per method x grid point
};

struct SweepConfig {
    int test_queries = 50;
    int repetitions = 20;
    uint64_t seed = 0;
    int workers = 1;
    CompletionConfig completion;
    bool include_llm = true;  // baselines-only runs skip the model entirely
};

SyntheticProblem generate_problem(int d, int n_train, int n_test, uint64_t seed);

// Renders the problem as a tabular dataset with features X1..Xd at 4 decimal
// places and target Y; train rows first, then test rows.
TabularDataset problem_to_dataset(const SyntheticProblem& problem);

// Statistical-format prompt via the few-shot builder (anonymous system
// prompt). query indexes the test split.
ChatTranscript render_statistical_prompt(const SyntheticProblem& problem, int n_shots,
                                         size_t query);

SweepResult dimension_sweep(const ChatModel* model, const std::vector<int>& dims,
                            int n_shots, const SweepConfig& config);
SweepResult sample_sweep(const ChatModel* model, int d, const std::vector<int>& shots_grid,
                         const SweepConfig& config);

inline std::vector<int> default_dims() { return {2, 4, 8, 16}; }
inline std::vector<int> default_shots_grid() { return {10, 20, 50, 100, 200}; }

}  // namespace tabprobe
