#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tabprobe/dataset.hpp"
#include "tabprobe/llm.hpp"
#include "tabprobe/report.hpp"

#include <nlohmann/json.hpp>

namespace tabprobe {

// Model source: either a simulated-model spec ("sim:verbatim", "sim:mode",
// "sim:majority:<label>", "sim:label-oracle") or a remote endpoint URL with
// a model id and the name of the environment variable holding the key.
struct ModelSpec {
    std::string spec;           // "sim:..." or a http(s) URL
    std::string model_id;       // remote only
    std::string api_key_env;    // remote only; resolved at construction
    double requests_per_minute = 0.0;
    int max_in_flight = 4;

    bool is_simulated() const { return spec.rfind("sim:", 0) == 0; }
};

struct RunConfig {
    ModelSpec model;
    std::vector<std::string> dataset_paths;
    // subset of {"header", "row", "feature", "first-token", "names"}
    std::vector<std::string> tests = {"header", "row", "feature", "first-token"};
    uint64_t seed = 0;
    int n_trials = 25;
    int workers = 1;
    std::string out_dir = ".";
    bool cache_enabled = false;
    std::string cache_dir;

    static RunConfig from_json(const nlohmann::json& j);
    void validate() const;  // throws ConfigInvalid
};

// Simulated models may need the dataset under test (verbatim/mode/oracle).
std::shared_ptr<const ChatModel> make_model(const ModelSpec& spec,
                                            const TabularDataset* dataset = nullptr);

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitPartialFailure = 3;

struct SuiteResult {
    std::vector<TestReport> reports;
    std::vector<std::string> failures;  // "<dataset>/<test>: message"
    int exit_code = kExitOk;
};

// Runs the selected memorization tests over every dataset; writes one JSON
// report per (dataset, test), the verdict grid as JSON and text, and a run
// manifest (the manifest carries the timestamps so reports stay
// byte-reproducible).
SuiteResult run_suite(const RunConfig& config);

// evidence "✓", no-evidence "✗", ambiguous "?", not-applicable/missing "−"
std::string render_grid(const std::vector<TestReport>& reports);
nlohmann::json grid_json(const std::vector<TestReport>& reports);

}  // namespace tabprobe
