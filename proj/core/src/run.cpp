#include "tabprobe/run.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tabprobe/errors.hpp"
#include "tabprobe/memtests.hpp"
#include "tabprobe/openai_client.hpp"
#include "tabprobe/util.hpp"

namespace tabprobe {

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig config;
    if (j.contains("model")) {
        const auto& m = j.at("model");
        if (m.is_string()) {
            config.model.spec = m.get<std::string>();
        } else {
            config.model.spec = m.value("spec", "");
            config.model.model_id = m.value("model_id", "");
            config.model.api_key_env = m.value("api_key_env", "");
            config.model.requests_per_minute = m.value("requests_per_minute", 0.0);
            config.model.max_in_flight = m.value("max_in_flight", 4);
        }
    }
    config.dataset_paths = j.value("datasets", std::vector<std::string>{});
    if (j.contains("tests")) config.tests = j.at("tests").get<std::vector<std::string>>();
    config.seed = j.value("seed", uint64_t{0});
    config.n_trials = j.value("n_trials", 25);
    config.workers = j.value("workers", 1);
    config.out_dir = j.value("out_dir", ".");
    config.cache_enabled = j.value("cache", false);
    config.cache_dir = j.value("cache_dir", "");
    return config;
}

void RunConfig::validate() const {
    if (model.spec.empty()) throw ConfigInvalid("no model specified");
    if (!model.is_simulated() && model.spec.rfind("http", 0) != 0)
        throw ConfigInvalid("model spec must be sim:* or an http(s) URL");
    if (!model.is_simulated() && model.model_id.empty())
        throw ConfigInvalid("remote endpoints need a model id");
    if (dataset_paths.empty()) throw ConfigInvalid("no datasets given");
    static const std::set<std::string> known = {"header", "row", "feature", "first-token",
                                                "names"};
    for (const auto& test : tests)
        if (!known.count(test)) throw ConfigInvalid("unknown test: " + test);
    if (tests.empty()) throw ConfigInvalid("no tests selected");
    if (n_trials < 1) throw ConfigInvalid("n_trials must be >= 1");
    if (cache_enabled && cache_dir.empty())
        throw ConfigInvalid("cache enabled but no cache directory given");
}

std::shared_ptr<const ChatModel> make_model(const ModelSpec& spec, const TabularDataset* dataset) {
    if (spec.spec == "sim:verbatim") {
        if (!dataset) throw ConfigInvalid("sim:verbatim needs a dataset");
        std::optional<std::string> kv_feature;
        try {
            kv_feature = select_unique_feature(*dataset);
        } catch (const NoUniqueFeature&) {
            // CSV-only corpus still serves the row-oriented tests
        }
        return std::make_shared<VerbatimMemorizer>(
            VerbatimMemorizer::for_dataset(*dataset, kv_feature));
    }
    if (spec.spec == "sim:mode") {
        if (!dataset) throw ConfigInvalid("sim:mode needs a dataset");
        std::vector<std::string> table;
        for (size_t r = 0; r < dataset->n_rows(); ++r)
            table.push_back(render_row_csv(*dataset, r));
        return std::make_shared<ModePredictor>(table);
    }
    if (spec.spec == "sim:label-oracle") {
        if (!dataset) throw ConfigInvalid("sim:label-oracle needs a dataset");
        return std::make_shared<LabelOracle>(*dataset);
    }
    if (spec.spec.rfind("sim:majority:", 0) == 0)
        return std::make_shared<MajorityClass>(spec.spec.substr(13));
    if (spec.spec.rfind("sim:", 0) == 0)
        throw ConfigInvalid("unknown simulated model: " + spec.spec);

    EndpointConfig endpoint;
    endpoint.base_url = spec.spec;
    endpoint.model = spec.model_id;
    endpoint.requests_per_minute = spec.requests_per_minute;
    endpoint.max_in_flight = spec.max_in_flight;
    if (!spec.api_key_env.empty()) {
        const char* key = std::getenv(spec.api_key_env.c_str());
        if (!key) throw ConfigInvalid("environment variable " + spec.api_key_env + " is not set");
        endpoint.api_key = key;
    }
    return std::make_shared<OpenAiClient>(std::move(endpoint));
}

namespace {

const std::vector<std::string> kGridTestOrder = {"header", "row_completion", "feature_completion",
                                                 "first_token", "feature_names"};

std::string cell_symbol(Verdict verdict) {
    switch (verdict) {
        case Verdict::Evidence: return "✓";
        case Verdict::NoEvidence: return "✗";
        case Verdict::Ambiguous: return "?";
        case Verdict::NotApplicable: return "−";
    }
    return "−";
}

std::string sanitize(const std::string& name) {
    std::string out;
    for (char c : name) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out;
}

TestReport run_one(const std::string& test, const TabularDataset& dataset,
                   const ChatModel& model, const MemTestConfig& config) {
    if (test == "header") return header_test(dataset, model, config);
    if (test == "row") return row_completion_test(dataset, model, config);
    if (test == "feature") return feature_completion_test(dataset, model, std::nullopt, config);
    if (test == "first-token") return first_token_test(dataset, model, config);
    if (test == "names") return feature_names_test(dataset, model, config);
    throw ConfigInvalid("unknown test: " + test);
}

}  // namespace

std::string render_grid(const std::vector<TestReport>& reports) {
    // deterministic ordering: datasets sorted, tests in canonical order
    std::map<std::string, std::map<std::string, Verdict>> cells;
    std::set<std::string> present_tests;
    for (const auto& report : reports) {
        cells[report.dataset][report.test] = report.verdict;
        present_tests.insert(report.test);
    }
    std::vector<std::string> tests;
    for (const auto& test : kGridTestOrder)
        if (present_tests.count(test)) tests.push_back(test);
    for (const auto& test : present_tests)
        if (std::find(tests.begin(), tests.end(), test) == tests.end()) tests.push_back(test);

    size_t name_width = 7;  // "dataset"
    for (const auto& [name, _] : cells) name_width = std::max(name_width, name.size());
    std::ostringstream out;
    out << std::string(name_width, ' ') << "  ";
    std::vector<size_t> widths;
    for (const auto& test : tests) {
        widths.push_back(std::max<size_t>(test.size(), 1));
        out << test << "  ";
    }
    out << "\n";
    for (const auto& [name, row] : cells) {
        out << name << std::string(name_width - name.size(), ' ') << "  ";
        for (size_t i = 0; i < tests.size(); ++i) {
            auto it = row.find(tests[i]);
            std::string symbol = it == row.end() ? "−" : cell_symbol(it->second);
            // symbols are one display column regardless of byte length
            out << symbol << std::string(widths[i] + 1, ' ');
        }
        out << "\n";
    }
    return out.str();
}

nlohmann::json grid_json(const std::vector<TestReport>& reports) {
    int schema = -1;
    nlohmann::json grid;
    grid["schema_version"] = kReportSchemaVersion;
    nlohmann::json cells = nlohmann::json::object();
    for (const auto& report : reports) {
        if (schema == -1) schema = kReportSchemaVersion;
        cells[report.dataset][report.test] = to_string(report.verdict);
    }
    grid["cells"] = std::move(cells);
    return grid;
}

SuiteResult run_suite(const RunConfig& config) {
    config.validate();
    std::filesystem::create_directories(config.out_dir);

    SuiteResult result;
    nlohmann::json manifest;
    manifest["tool_version"] = kToolVersion;
    manifest["schema_version"] = kReportSchemaVersion;
    manifest["seed"] = config.seed;
    manifest["model"] = config.model.spec;
    manifest["started_at"] = static_cast<int64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    nlohmann::json files = nlohmann::json::array();

    for (const auto& path : config.dataset_paths) {
        TabularDataset dataset;
        try {
            dataset = load_csv_with_metadata(path);
        } catch (const Error& e) {
            throw ConfigInvalid("cannot load " + path + ": " + e.what());
        }
        std::shared_ptr<const ChatModel> model = make_model(config.model, &dataset);
        if (config.cache_enabled)
            model = std::make_shared<CachingModel>(model, config.cache_dir);

        MemTestConfig test_config;
        test_config.seed = config.seed;
        test_config.n_trials = config.n_trials;
        test_config.workers = config.workers;

        for (const auto& test : config.tests) {
            try {
                TestReport report = run_one(test, dataset, *model, test_config);
                std::string file_name =
                    sanitize(dataset.name) + "_" + sanitize(test) + ".json";
                std::ofstream out(std::filesystem::path(config.out_dir) / file_name);
                if (!out) throw IoFailure("cannot write report " + file_name);
                out << report.to_json().dump(2) << "\n";
                files.push_back(file_name);
                result.reports.push_back(std::move(report));
            } catch (const Error& e) {
                result.failures.push_back(dataset.name + "/" + test + ": " + e.what());
            }
        }
    }

    {
        std::ofstream out(std::filesystem::path(config.out_dir) / "grid.json");
        out << grid_json(result.reports).dump(2) << "\n";
    }
    {
        std::ofstream out(std::filesystem::path(config.out_dir) / "grid.txt");
        out << render_grid(result.reports);
    }
    manifest["reports"] = std::move(files);
    manifest["failures"] = result.failures;
    {
        std::ofstream out(std::filesystem::path(config.out_dir) / "manifest.json");
        out << manifest.dump(2) << "\n";
    }

    result.exit_code = result.failures.empty() ? kExitOk : kExitPartialFailure;
    return result;
}

}  // namespace tabprobe
