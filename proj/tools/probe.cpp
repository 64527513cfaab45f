// probe: memorization, few-shot and sampling tests for tabular datasets
// against chat-completion endpoints or built-in simulated models.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "tabprobe/dataset.hpp"
#include "tabprobe/errors.hpp"
#include "tabprobe/fewshot.hpp"
#include "tabprobe/memtests.hpp"
#include "tabprobe/openai_client.hpp"
#include "tabprobe/run.hpp"
#include "tabprobe/sampling.hpp"
#include "tabprobe/scoring.hpp"
#include "tabprobe/statlearn.hpp"
#include "tabprobe/timeseries.hpp"
#include "tabprobe/transforms.hpp"
#include "tabprobe/util.hpp"

namespace {

using namespace tabprobe;

struct ModelFlags {
    std::string spec;
    std::string model_id;
    std::string key_env = "PROBE_API_KEY";
    double rpm = 0.0;
    int concurrency = 4;
    std::string cache_dir;

    void attach(CLI::App* cmd) {
        cmd->add_option("--model", spec,
                        "Model: sim:verbatim, sim:mode, sim:majority:<label>, "
                        "sim:label-oracle, or an http(s) endpoint URL")
            ->required();
        cmd->add_option("--model-id", model_id, "Model id sent to a remote endpoint");
        cmd->add_option("--key-env", key_env,
                        "Environment variable holding the API key (never pass keys as flags)");
        cmd->add_option("--rpm", rpm, "Requests-per-minute limit (0 = unlimited)");
        cmd->add_option("--concurrency", concurrency, "Max in-flight requests");
        cmd->add_option("--cache", cache_dir, "Response cache directory (enables caching)");
    }

    ModelSpec to_spec() const {
        ModelSpec m;
        m.spec = spec;
        m.model_id = model_id;
        if (m.spec.rfind("sim:", 0) != 0) m.api_key_env = key_env;
        m.requests_per_minute = rpm;
        m.max_in_flight = concurrency;
        return m;
    }

    std::shared_ptr<const ChatModel> build(const TabularDataset* dataset) const {
        auto model = make_model(to_spec(), dataset);
        if (!cache_dir.empty()) model = std::make_shared<CachingModel>(model, cache_dir);
        return model;
    }
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoFailure("cannot write " + path);
    out << text;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot read " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dataset memorization and contamination probes for chat LLMs"};
    app.require_subcommand(1);

    // --- mem ---
    auto* mem = app.add_subcommand("mem", "Run the memorization tests on a CSV dataset");
    std::string mem_csv, mem_tests = "header,row,feature,first-token", mem_out;
    uint64_t mem_seed = 0;
    int mem_trials = 25, mem_workers = 1;
    mem->add_option("csv", mem_csv, "Dataset CSV")->required();
    ModelFlags mem_model;
    mem_model.attach(mem);
    mem->add_option("--tests", mem_tests, "Comma-separated: header,row,feature,first-token,names");
    mem->add_option("--seed", mem_seed, "Random seed");
    mem->add_option("--trials", mem_trials, "Trials per test");
    mem->add_option("--workers", mem_workers, "Worker threads");
    mem->add_option("--out", mem_out, "Output directory for reports and the verdict grid")
        ->required();

    // --- fewshot ---
    auto* fewshot = app.add_subcommand("fewshot", "Few-shot classification accuracy");
    std::string fs_csv, fs_level = "original", fs_out;
    int fs_n = 250, fs_examples = 20, fs_workers = 1;
    uint64_t fs_seed = 0;
    fewshot->add_option("csv", fs_csv, "Dataset CSV")->required();
    ModelFlags fs_model;
    fs_model.attach(fewshot);
    fewshot->add_option("--level", fs_level, "original|perturbed|task|statistical");
    fewshot->add_option("--n", fs_n, "Test-set size");
    fewshot->add_option("--examples", fs_examples, "Few-shot examples");
    fewshot->add_option("--seed", fs_seed, "Random seed");
    fewshot->add_option("--workers", fs_workers, "Worker threads");
    std::string fs_spec_path;
    fewshot->add_option("--spec", fs_spec_path, "Transform spec JSON (rename/recode maps)");
    fewshot->add_option("--out", fs_out, "Result JSON")->required();

    // --- statlearn ---
    auto* statlearn = app.add_subcommand("statlearn", "Synthetic statistical-learning sweeps");
    std::string sl_axis = "dimension", sl_out, sl_plot;
    int sl_reps = 20, sl_queries = 50, sl_workers = 1;
    uint64_t sl_seed = 0;
    bool sl_baselines_only = false;
    ModelFlags sl_model;
    sl_model.attach(statlearn);
    statlearn->get_option("--model")->required(false);
    statlearn->add_option("--axis", sl_axis, "dimension|samples");
    statlearn->add_option("--reps", sl_reps, "Repetitions per grid point");
    statlearn->add_option("--queries", sl_queries, "Test queries per repetition");
    statlearn->add_option("--seed", sl_seed, "Random seed");
    statlearn->add_option("--workers", sl_workers, "Worker threads");
    statlearn->add_flag("--baselines-only", sl_baselines_only, "Skip the model entirely");
    statlearn->add_option("--out", sl_out, "Sweep JSON")->required();
    statlearn->add_option("--plot-csv", sl_plot, "Plot-data CSV (method x grid point)");

    // --- sample ---
    auto* sample = app.add_subcommand("sample", "Zero-knowledge sampling from a named dataset");
    std::string sp_csv, sp_out, sp_scatter, sp_scatter_features;
    int sp_n = 200, sp_workers = 1;
    double sp_temperature = 0.7;
    sample->add_option("csv", sp_csv, "Dataset CSV")->required();
    ModelFlags sp_model;
    sp_model.attach(sample);
    sample->add_option("--n", sp_n, "Samples to draw");
    sample->add_option("--temperature", sp_temperature, "Sampling temperature");
    sample->add_option("--workers", sp_workers, "Worker threads");
    sample->add_option("--out", sp_out, "Samples + metrics JSON")->required();
    sample->add_option("--scatter-csv", sp_scatter, "Scatter-data CSV output");
    sample->add_option("--scatter-features", sp_scatter_features,
                       "Two comma-separated features for the scatter CSV");

    // --- timeseries ---
    auto* timeseries = app.add_subcommand("timeseries", "Sliding-window forecasting probe");
    std::string ts_csv, ts_years, ts_out;
    int ts_window = 20, ts_workers = 1;
    bool ts_no_dates = false;
    timeseries->add_option("csv", ts_csv, "Two-column CSV (date,value)")->required();
    ModelFlags ts_model;
    ts_model.attach(timeseries);
    timeseries->add_option("--years", ts_years, "Comma-separated years to score")->required();
    timeseries->add_option("--window", ts_window, "Context window in days");
    timeseries->add_flag("--no-dates", ts_no_dates, "Omit dates from prompts (ablation)");
    timeseries->add_option("--workers", ts_workers, "Worker threads");
    timeseries->add_option("--out", ts_out, "Per-year error JSON");

    // --- transform ---
    auto* transform = app.add_subcommand("transform", "Apply a transform level to a CSV");
    std::string tr_csv, tr_level = "perturbed", tr_spec_path, tr_out;
    uint64_t tr_seed = 0;
    transform->add_option("csv", tr_csv, "Dataset CSV")->required();
    transform->add_option("--level", tr_level, "original|perturbed|task|statistical");
    transform->add_option("--spec", tr_spec_path, "Transform spec JSON");
    transform->add_option("--seed", tr_seed, "Random seed");
    transform->add_option("--out", tr_out, "Output CSV")->required();

    // --- diff ---
    auto* diff = app.add_subcommand("diff", "Character-level alignment of two text files");
    std::string df_a, df_b;
    bool df_html = false;
    diff->add_option("reference", df_a, "Reference file")->required();
    diff->add_option("output", df_b, "Model-output file")->required();
    diff->add_flag("--html", df_html, "Emit HTML instead of ANSI colors");

    // --- grid ---
    auto* grid = app.add_subcommand("grid", "Render a verdict grid from stored reports");
    std::vector<std::string> gr_reports;
    grid->add_option("reports", gr_reports, "Report JSON files")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (mem->parsed()) {
            RunConfig config;
            config.model = mem_model.to_spec();
            config.dataset_paths = {mem_csv};
            config.tests = split(mem_tests, ',');
            config.seed = mem_seed;
            config.n_trials = mem_trials;
            config.workers = mem_workers;
            config.out_dir = mem_out;
            if (!mem_model.cache_dir.empty()) {
                config.cache_enabled = true;
                config.cache_dir = mem_model.cache_dir;
            }
            SuiteResult result = run_suite(config);
            std::cout << render_grid(result.reports);
            for (const auto& failure : result.failures)
                std::cerr << "probe: failed: " << failure << "\n";
            return result.exit_code;
        }

        if (fewshot->parsed()) {
            TabularDataset dataset = load_csv_with_metadata(fs_csv);
            TransformSpec spec;
            if (!fs_spec_path.empty()) spec = TransformSpec::from_json_text(read_text(fs_spec_path));
            spec.seed = fs_seed;
            FewShotConfig config;
            config.level = transform_level_from_string(fs_level);
            config.n_examples = fs_examples;
            config.test_set_size = fs_n;
            config.seed = fs_seed;
            config.workers = fs_workers;
            TabularDataset leveled = pipeline(dataset, config.level, spec);
            auto model = fs_model.build(&leveled);
            EvalResult result = run_classification(leveled, *model, config);
            write_text(fs_out, result.to_json().dump(2) + "\n");
            std::cout << "accuracy " << result.accuracy << " +/- " << result.standard_error
                      << " (n=" << result.evaluated << ", parse failures "
                      << result.parse_failures << ")\n";
            return kExitOk;
        }

        if (statlearn->parsed()) {
            SweepConfig config;
            config.repetitions = sl_reps;
            config.test_queries = sl_queries;
            config.seed = sl_seed;
            config.workers = sl_workers;
            config.include_llm = !sl_baselines_only && !sl_model.spec.empty();
            std::shared_ptr<const ChatModel> model;
            if (config.include_llm) model = sl_model.build(nullptr);
            SweepResult result =
                sl_axis == "samples"
                    ? sample_sweep(model.get(), 8, default_shots_grid(), config)
                    : dimension_sweep(model.get(), default_dims(), 20, config);
            write_text(sl_out, result.to_json().dump(2) + "\n");
            if (!sl_plot.empty()) write_text(sl_plot, result.to_plot_csv());
            return kExitOk;
        }

        if (sample->parsed()) {
            TabularDataset dataset = load_csv_with_metadata(sp_csv);
            auto model = sp_model.build(&dataset);
            SamplingConfig config;
            config.n = sp_n;
            config.temperature = sp_temperature;
            config.workers = sp_workers;
            SampleBatch batch = draw_samples(*model, dataset, config);
            nlohmann::json out;
            out["batch"] = batch.to_json();
            out["copy_stats"] = copy_metrics(batch, dataset).to_json();
            if (batch.rows.size() >= 10) out["mode_agreement"] = mode_agreement(batch, dataset).to_json();
            out["correlation_agreement"] = correlation_agreement(batch, dataset).to_json();
            write_text(sp_out, out.dump(2) + "\n");
            if (!sp_scatter.empty()) {
                auto features = split(sp_scatter_features, ',');
                if (features.size() != 2)
                    throw ConfigInvalid("--scatter-features needs exactly two names");
                size_t a = dataset.feature_index(features[0]);
                size_t b = dataset.feature_index(features[1]);
                std::ostringstream csv;
                csv << features[0] << "," << features[1] << "\n";
                for (const auto& row : batch.rows) csv << row[a] << "," << row[b] << "\n";
                write_text(sp_scatter, csv.str());
            }
            return kExitOk;
        }

        if (timeseries->parsed()) {
            TimeSeries series = load_series(ts_csv);
            auto model = ts_model.build(nullptr);
            ForecastConfig config;
            config.window = ts_window;
            config.include_dates = !ts_no_dates;
            config.workers = ts_workers;
            ForecastEval eval = run_forecast_eval(*model, series, split(ts_years, ','), config);
            std::cout << eval.to_table();
            if (!ts_out.empty()) write_text(ts_out, eval.to_json().dump(2) + "\n");
            return kExitOk;
        }

        if (transform->parsed()) {
            TabularDataset dataset = load_csv_with_metadata(tr_csv);
            TransformSpec spec;
            if (!tr_spec_path.empty()) spec = TransformSpec::from_json_text(read_text(tr_spec_path));
            spec.seed = tr_seed;
            TabularDataset out = pipeline(dataset, transform_level_from_string(tr_level), spec);
            write_text(tr_out, serialize_csv(out));
            return kExitOk;
        }

        if (diff->parsed()) {
            Alignment alignment = align(read_text(df_a), read_text(df_b));
            std::cout << (df_html ? render_alignment_html(alignment)
                                  : render_alignment_ansi(alignment))
                      << "\n";
            return kExitOk;
        }

        if (grid->parsed()) {
            std::vector<TestReport> reports;
            for (const auto& path : gr_reports)
                reports.push_back(TestReport::from_json(nlohmann::json::parse(read_text(path))));
            std::cout << render_grid(reports);
            return kExitOk;
        }
    } catch (const ConfigInvalid& e) {
        std::cerr << "probe: config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const SchemaMismatch& e) {
        std::cerr << "probe: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const Error& e) {
        std::cerr << "probe: " << e.what() << "\n";
        return kExitPartialFailure;
    }
    return kExitOk;
}
