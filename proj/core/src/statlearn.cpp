#include "tabprobe/statlearn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "tabprobe/errors.hpp"
#include "tabprobe/fewshot.hpp"
#include "tabprobe/util.hpp"

namespace tabprobe {

nlohmann::json SweepResult::to_json() const {
    nlohmann::json j;
    j["axis"] = axis;
    j["grid"] = grid;
    j["repetitions"] = repetitions;
    j["test_queries"] = test_queries;
    nlohmann::json curves_json = nlohmann::json::array();
    for (const auto& curve : curves)
        curves_json.push_back({{"method", curve.method},
                               {"mean", curve.mean},
                               {"ci_half_width", curve.ci_half},
                               {"per_rep", curve.per_rep}});
    j["curves"] = std::move(curves_json);
    return j;
}

std::string SweepResult::to_plot_csv() const {
    std::ostringstream out;
    out << "method," << (axis == "dimension" ? "dimension" : "n_shots")
        << ",mean_accuracy,ci_half_width\n";
    for (const auto& curve : curves)
        for (size_t i = 0; i < grid.size(); ++i)
            out << curve.method << "," << grid[i] << "," << curve.mean[i] << ","
                << curve.ci_half[i] << "\n";
    return out.str();
}

SyntheticProblem generate_problem(int d, int n_train, int n_test, uint64_t seed) {
    if (d < 1 || n_train < 1 || n_test < 1)
        throw ConfigInvalid("generate_problem: d, n_train, n_test must be positive");
    SyntheticProblem problem;
    problem.dimension = d;
    problem.seed = seed;
    auto rng = make_rng(seed, "statlearn");
    std::normal_distribution<double> normal(0.0, 1.0);
    problem.z.resize(static_cast<size_t>(d));
    for (double& v : problem.z) v = normal(rng);
    auto draw = [&](int n, std::vector<std::vector<double>>& x, std::vector<int>& y) {
        for (int i = 0; i < n; ++i) {
            std::vector<double> row(static_cast<size_t>(d));
            double dot = 0.0;
            for (size_t j = 0; j < row.size(); ++j) {
                row[j] = normal(rng);
                dot += row[j] * problem.z[j];
            }
            y.push_back(dot >= 0.0 ? 1 : 0);
            x.push_back(std::move(row));
        }
    };
    draw(n_train, problem.train_x, problem.train_y);
    draw(n_test, problem.test_x, problem.test_y);
    return problem;
}

TabularDataset problem_to_dataset(const SyntheticProblem& problem) {
    TabularDataset ds;
    ds.name = "synthetic";
    for (int j = 1; j <= problem.dimension; ++j)
        ds.feature_names.push_back("X" + std::to_string(j));
    ds.feature_names.push_back("Y");
    ds.target_feature = "Y";
    auto append = [&](const std::vector<std::vector<double>>& x, const std::vector<int>& y) {
        for (size_t i = 0; i < x.size(); ++i) {
            std::vector<CellValue> row;
            for (double v : x[i]) row.push_back(CellValue::from_raw(format_fixed(v, 4)));
            row.push_back(CellValue::from_raw(std::to_string(y[i])));
            ds.rows.push_back(std::move(row));
        }
    };
    append(problem.train_x, problem.train_y);
    append(problem.test_x, problem.test_y);
    ds.columns = infer_schema(ds);
    // Y is a class label, not a quantity
    ds.columns.back() = ColumnKind{ColumnKind::Categorical, {}};
    {
        std::vector<std::string> seen;
        for (const auto& row : ds.rows) {
            const std::string& v = row.back().raw;
            if (std::find(seen.begin(), seen.end(), v) == seen.end()) seen.push_back(v);
        }
        ds.columns.back().categories = seen;
    }
    return ds;
}

ChatTranscript render_statistical_prompt(const SyntheticProblem& problem, int n_shots,
                                         size_t query) {
    if (n_shots > static_cast<int>(problem.train_x.size()))
        throw ConfigInvalid("n_shots exceeds the training split");
    if (query >= problem.test_x.size()) throw IndexOutOfRange("test query out of range");
    TabularDataset ds = problem_to_dataset(problem);
    FewShotConfig config;
    config.level = TransformLevel::Statistical;
    config.label_set = {"0", "1"};
    std::vector<size_t> examples;
    for (int i = 0; i < n_shots; ++i) examples.push_back(static_cast<size_t>(i));
    size_t query_row = problem.train_x.size() + query;
    return build_classification_prompt(ds, examples, query_row, config);
}

namespace {

struct RepScores {
    double llm = 0.0, lr = 0.0, nn = 0.0;
};

// One repetition at a given (d, n_shots): fresh problem, paired test queries
// across every method.
RepScores run_repetition(const ChatModel* model, int d, int n_shots, const SweepConfig& config,
                         uint64_t rep_seed) {
    SyntheticProblem problem = generate_problem(d, n_shots, config.test_queries, rep_seed);
    RepScores scores;

    LinearModel lr;
    bool lr_ok = true;
    try {
        lr = train_logistic_regression(problem.train_x, problem.train_y);
    } catch (const SingleClass&) {
        lr_ok = false;  // degenerate draw; predict the lone class
    }
    int lone = problem.train_y.empty() ? 0 : problem.train_y.front();

    int lr_correct = 0, nn_correct = 0, llm_correct = 0;
    for (size_t q = 0; q < problem.test_x.size(); ++q) {
        int truth = problem.test_y[q];
        int lr_pred = lr_ok ? lr.predict(problem.test_x[q]) : lone;
        lr_correct += lr_pred == truth;
        nn_correct += knn_predict(problem.train_x, problem.train_y, problem.test_x[q]) == truth;
        if (model && config.include_llm) {
            auto transcript = render_statistical_prompt(problem, n_shots, q);
            std::string response = chat(*model, transcript, config.completion);
            auto parsed = parse_label(response, {"0", "1"});
            // parse failures score incorrect
            llm_correct += parsed && *parsed == std::to_string(truth);
        }
    }
    double n = static_cast<double>(problem.test_x.size());
    scores.lr = lr_correct / n;
    scores.nn = nn_correct / n;
    scores.llm = llm_correct / n;
    return scores;
}

SweepResult run_sweep(const ChatModel* model, const std::string& axis,
                      const std::vector<int>& grid, int fixed_d, int fixed_shots,
                      const SweepConfig& config) {
    const bool with_llm = model != nullptr && config.include_llm;
    SweepResult result;
    result.axis = axis;
    result.grid = grid;
    result.repetitions = config.repetitions;
    result.test_queries = config.test_queries;

    std::vector<std::string> methods;
    if (with_llm) methods.push_back("llm");
    methods.push_back("logistic_regression");
    methods.push_back("1nn");
    for (const auto& method : methods) {
        MethodCurve curve;
        curve.method = method;
        curve.mean.resize(grid.size(), 0.0);
        curve.ci_half.resize(grid.size(), 0.0);
        curve.per_rep.assign(grid.size(),
                             std::vector<double>(static_cast<size_t>(config.repetitions), 0.0));
        result.curves.push_back(std::move(curve));
    }
    auto curve_for = [&](const std::string& method) -> MethodCurve& {
        for (auto& c : result.curves)
            if (c.method == method) return c;
        throw ConfigInvalid("missing method curve");
    };

    for (size_t g = 0; g < grid.size(); ++g) {
        int d = axis == "dimension" ? grid[g] : fixed_d;
        int shots = axis == "dimension" ? fixed_shots : grid[g];
        std::vector<RepScores> reps(static_cast<size_t>(config.repetitions));
        parallel_for(reps.size(), config.workers, [&](size_t rep) {
            uint64_t rep_seed = derive_seed(config.seed, axis + ":" + std::to_string(grid[g]) +
                                                             ":rep" + std::to_string(rep));
            reps[rep] = run_repetition(model, d, shots, config, rep_seed);
        });
        auto fill = [&](const std::string& method, auto pick) {
            MethodCurve& curve = curve_for(method);
            double mean = 0.0;
            for (size_t rep = 0; rep < reps.size(); ++rep) {
                curve.per_rep[g][rep] = pick(reps[rep]);
                mean += curve.per_rep[g][rep];
            }
            mean /= static_cast<double>(reps.size());
            double var = 0.0;
            for (double v : curve.per_rep[g]) var += (v - mean) * (v - mean);
            var = reps.size() > 1 ? var / static_cast<double>(reps.size() - 1) : 0.0;
            curve.mean[g] = mean;
            curve.ci_half[g] = 1.96 * std::sqrt(var / static_cast<double>(reps.size()));
        };
        if (with_llm) fill("llm", [](const RepScores& s) { return s.llm; });
        fill("logistic_regression", [](const RepScores& s) { return s.lr; });
        fill("1nn", [](const RepScores& s) { return s.nn; });
    }
    return result;
}

}  // namespace

SweepResult dimension_sweep(const ChatModel* model, const std::vector<int>& dims, int n_shots,
                            const SweepConfig& config) {
    if (config.repetitions < 1) throw ConfigInvalid("repetitions must be >= 1");
    return run_sweep(model, "dimension", dims, 0, n_shots, config);
}

SweepResult sample_sweep(const ChatModel* model, int d, const std::vector<int>& shots_grid,
                         const SweepConfig& config) {
    if (config.repetitions < 1) throw ConfigInvalid("repetitions must be >= 1");
    for (size_t i = 1; i < shots_grid.size(); ++i)
        if (shots_grid[i] <= shots_grid[i - 1])
            throw ConfigInvalid("shots grid must be strictly ascending");
    return run_sweep(model, "samples", shots_grid, d, 0, config);
}

}  // namespace tabprobe
