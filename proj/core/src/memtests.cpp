#include "tabprobe/memtests.hpp"

#include <algorithm>
#include <mutex>
#include <numeric>
#include <set>

#include "tabprobe/errors.hpp"
#include "tabprobe/scoring.hpp"
#include "tabprobe/util.hpp"

namespace tabprobe {

namespace {

// Fixed conditioning exemplars. Synthetic snippets, so they can never
// overlap a dataset under test.
constexpr const char* kExemplarFlowers =
    "stem_length,stem_width,petal_count,color,variety\n"
    "12.4,0.8,5,violet,meadow-crane\n"
    "9.1,0.6,6,white,wood-anemone\n"
    "14.7,1.1,5,yellow,marsh-marigold\n"
    "11.3,0.9,8,blue,alpine-gentian\n"
    "8.6,0.5,5,pink,dog-rose\n"
    "13.2,1.0,6,violet,meadow-crane\n"
    "10.8,0.7,5,white,wood-anemone\n"
    "15.1,1.2,7,yellow,kingcup\n";

constexpr const char* kExemplarRentals =
    "rent,rooms,area_sqm,floor,district\n"
    "1250,3,74.5,2,Riverside\n"
    "890,2,51.0,4,Old Town\n"
    "1640,4,102.3,1,Hillcrest\n"
    "720,1,38.2,5,Harbor\n"
    "1100,3,68.9,3,Riverside\n"
    "1480,3,88.0,2,Hillcrest\n"
    "950,2,55.4,6,Harbor\n"
    "1310,4,95.7,1,Old Town\n";

constexpr const char* kAutocompleteSystemPrompt =
    "You are an autocomplete bot for tabular datasets. You will be prompted with parts of a "
    "tabular dataset. Your task is to complete the dataset.";

constexpr const char* kFeatureSystemPrompt =
    "You are an autocomplete bot for tabular datasets. The user provides one row of a dataset "
    "with a single feature value missing. You respond with the value of the missing feature, "
    "and nothing else.";

constexpr const char* kFeatureNamesSystemPrompt =
    "You are an expert assistant for tabular datasets. Your task is to list the names of the "
    "features of different datasets. The user provides a description of the dataset and some of "
    "the feature names. You then provide the names of the remaining features.";

std::string normalize_newlines(std::string s) {
    std::string out;
    out.reserve(s.size());
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\r' && i + 1 < s.size() && s[i + 1] == '\n') continue;
        out.push_back(s[i] == '\r' ? '\n' : s[i]);
    }
    return out;
}

// First non-empty line of a completion; continuations of a row block start
// with a newline.
std::string first_content_line(const std::string& text) {
    size_t start = text.find_first_not_of('\n');
    if (start == std::string::npos) return "";
    return first_line(text.substr(start));
}

std::vector<std::string> dataset_lines(const std::string& text) {
    auto lines = split(text, '\n');
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

// Header-test conditioning turn: header plus three rows split mid-row, the
// assistant finishing the snippet.
void add_header_exemplar(ChatTranscript& transcript, const char* snippet) {
    auto lines = dataset_lines(snippet);
    std::string prefix;
    for (size_t i = 0; i < 4; ++i) prefix += lines[i] + "\n";
    size_t cut = lines[4].size() / 2;
    prefix += lines[4].substr(0, cut);
    std::string continuation = lines[4].substr(cut);
    for (size_t i = 5; i < lines.size(); ++i) continuation += "\n" + lines[i];
    transcript.push_back({ChatMessage::User, prefix});
    transcript.push_back({ChatMessage::Assistant, continuation});
}

// Row-completion conditioning turn: a block of rows, assistant answers the next.
void add_row_exemplar(ChatTranscript& transcript, const char* snippet) {
    auto lines = dataset_lines(snippet);
    std::string block;
    for (size_t i = 1; i + 1 < lines.size(); ++i) {
        if (i > 1) block += "\n";
        block += lines[i];
    }
    transcript.push_back({ChatMessage::User, block});
    transcript.push_back({ChatMessage::Assistant, lines.back()});
}

void add_feature_exemplar(ChatTranscript& transcript, const char* snippet) {
    auto lines = dataset_lines(snippet);
    auto header = split(lines[0], ',');
    auto cells = split(lines[1], ',');
    std::string prompt;
    for (size_t i = 0; i + 1 < header.size(); ++i) {
        if (i) prompt += ", ";
        prompt += header[i] + " = " + cells[i];
    }
    prompt += ", " + header.back() + " =";
    transcript.push_back({ChatMessage::User, prompt});
    transcript.push_back({ChatMessage::Assistant, cells.back()});
}

std::vector<size_t> sample_without_replacement(size_t population, size_t count,
                                               std::mt19937_64& rng) {
    std::vector<size_t> indices(population);
    std::iota(indices.begin(), indices.end(), size_t{0});
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(std::min(count, population));
    return indices;
}

double modal_row_frequency(const TabularDataset& dataset) {
    std::vector<std::string> rows;
    rows.reserve(dataset.n_rows());
    for (size_t r = 0; r < dataset.n_rows(); ++r) rows.push_back(render_row_csv(dataset, r));
    return mode_and_accuracy(rows).second;
}

nlohmann::json config_echo(const MemTestConfig& config, const ChatModel& model) {
    return {{"seed", config.seed},
            {"n_trials", config.n_trials},
            {"context_rows", config.context_rows},
            {"rows_exchangeable", config.rows_exchangeable},
            {"temperature", config.completion.temperature},
            {"model", model.id()}};
}

struct TrialOutcome {
    TrialRecord record;
    bool errored = false;
};

// Runs per-trial closures, possibly concurrently, and aggregates n/k with
// records sorted by row index.
void run_trials(const std::vector<size_t>& rows, const MemTestConfig& config,
                const std::function<TrialRecord(size_t)>& trial, TestReport& report) {
    std::vector<TrialOutcome> outcomes(rows.size());
    parallel_for(rows.size(), config.workers, [&](size_t i) {
        try {
            outcomes[i].record = trial(rows[i]);
        } catch (const Error& e) {
            outcomes[i].record.row = static_cast<int>(rows[i]);
            outcomes[i].record.error = e.what();
            outcomes[i].errored = true;
        }
    });
    for (auto& outcome : outcomes) {
        if (!outcome.errored) {
            ++report.trials;
            if (outcome.record.ok) ++report.successes;
        }
        report.records.push_back(std::move(outcome.record));
    }
    std::sort(report.records.begin(), report.records.end(),
              [](const TrialRecord& a, const TrialRecord& b) { return a.row < b.row; });
}

}  // namespace

TestReport header_test(const TabularDataset& dataset, const ChatModel& model,
                       const MemTestConfig& config) {
    if (dataset.n_rows() < 10) throw ConfigInvalid("header test needs at least 10 rows");
    auto rng = make_rng(config.seed, "header:" + dataset.name);

    TestReport report;
    report.test = "header";
    report.dataset = dataset.name;
    report.config = config_echo(config, model);
    report.policy = config.policy.to_json();

    std::vector<size_t> split_rows = {2, 4, 6, 8};
    std::vector<size_t> offsets;
    for (size_t row : split_rows) {
        std::string row_text = render_row_csv(dataset, row);
        std::uniform_int_distribution<size_t> dist(1, row_text.size() - 1);
        offsets.push_back(dist(rng));
    }

    auto trial = [&](size_t i) {
        size_t row = split_rows[i];
        auto [prefix, suffix] = split_at(dataset, row, offsets[i]);
        ChatTranscript transcript;
        transcript.push_back({ChatMessage::System, kAutocompleteSystemPrompt});
        add_header_exemplar(transcript, kExemplarFlowers);
        add_header_exemplar(transcript, kExemplarRentals);
        transcript.push_back({ChatMessage::User, prefix});

        std::string remainder = render_row_csv(dataset, row).substr(offsets[i]);
        std::string required = remainder + "\n" + render_row_csv(dataset, row + 1);

        CompletionConfig completion = config.completion;
        completion.max_output_chars =
            std::max(completion.max_output_chars, static_cast<int>(required.size()) + 200);
        std::string actual = normalize_newlines(chat(model, transcript, completion));

        TrialRecord record;
        record.row = static_cast<int>(row);
        record.expected = required;
        record.actual = actual.substr(0, std::min(actual.size(), required.size() + 200));
        std::string head = actual.substr(0, std::min(actual.size(), required.size()));
        record.edit_distance = levenshtein(required, head);
        record.ok = head == required;
        return record;
    };

    std::vector<size_t> indices(split_rows.size());
    std::iota(indices.begin(), indices.end(), size_t{0});
    run_trials(indices, config, [&](size_t i) { return trial(i); }, report);
    // the paper keeps the best completion across splits: one success suffices
    report.verdict = report.trials == 0 ? Verdict::NotApplicable
                     : report.successes > 0 ? Verdict::Evidence
                                            : Verdict::NoEvidence;
    return report;
}

TestReport row_completion_test(const TabularDataset& dataset, const ChatModel& model,
                               const MemTestConfig& config) {
    const size_t context = static_cast<size_t>(config.context_rows);
    if (dataset.n_rows() < context + 2)
        throw ConfigInvalid("row completion needs at least context_rows + 2 rows");
    auto rng = make_rng(config.seed, "row:" + dataset.name);

    TestReport report;
    report.test = "row_completion";
    report.dataset = dataset.name;
    report.config = config_echo(config, model);
    report.policy = config.policy.to_json();
    double chance = modal_row_frequency(dataset);
    report.baseline = chance;

    size_t positions = dataset.n_rows() - context;
    auto starts = sample_without_replacement(positions, static_cast<size_t>(config.n_trials), rng);

    auto trial = [&](size_t start) {
        std::string block;
        for (size_t r = start; r < start + context; ++r) {
            if (r > start) block += "\n";
            block += render_row_csv(dataset, r);
        }
        ChatTranscript transcript;
        transcript.push_back({ChatMessage::System, kAutocompleteSystemPrompt});
        add_row_exemplar(transcript, kExemplarFlowers);
        add_row_exemplar(transcript, kExemplarRentals);
        transcript.push_back({ChatMessage::User, block});

        std::string expected = trim_right(render_row_csv(dataset, start + context));
        std::string actual =
            first_content_line(normalize_newlines(chat(model, transcript, config.completion)));

        TrialRecord record;
        record.row = static_cast<int>(start + context);
        record.expected = expected;
        record.actual = actual;
        record.edit_distance = levenshtein(expected, actual);
        record.ok = actual == expected;
        return record;
    };
    run_trials(starts, config, trial, report);
    report.verdict = config.policy.judge_rate(report.successes, report.trials, chance);
    return report;
}

std::string select_unique_feature(const TabularDataset& dataset) {
    if (dataset.n_features() < 2) throw NoUniqueFeature("dataset has fewer than 2 features");
    auto target = dataset.target_index();
    std::optional<size_t> best;
    double best_ratio = -1.0;
    double best_length = -1.0;
    for (size_t c = 0; c < dataset.n_features(); ++c) {
        if (target && c == *target) continue;
        std::set<std::string> distinct;
        double total_length = 0.0;
        for (const auto& row : dataset.rows) {
            distinct.insert(row[c].raw);
            total_length += static_cast<double>(row[c].raw.size());
        }
        double ratio = static_cast<double>(distinct.size()) / dataset.n_rows();
        double mean_length = total_length / dataset.n_rows();
        if (ratio > best_ratio || (ratio == best_ratio && mean_length > best_length)) {
            best = c;
            best_ratio = ratio;
            best_length = mean_length;
        }
    }
    if (!best || best_ratio < 0.5)
        throw NoUniqueFeature("no feature with distinct-value ratio >= 0.5");
    return dataset.feature_names[*best];
}

TestReport feature_completion_test(const TabularDataset& dataset, const ChatModel& model,
                                   const std::optional<std::string>& feature,
                                   const MemTestConfig& config) {
    std::string chosen = feature ? *feature : select_unique_feature(dataset);
    size_t feature_idx = dataset.feature_index(chosen);
    auto rng = make_rng(config.seed, "feature:" + dataset.name);

    TestReport report;
    report.test = "feature_completion";
    report.dataset = dataset.name;
    report.config = config_echo(config, model);
    report.config["feature"] = chosen;
    report.policy = config.policy.to_json();

    std::vector<std::string> values;
    values.reserve(dataset.n_rows());
    for (const auto& row : dataset.rows) values.push_back(row[feature_idx].raw);
    double chance = mode_and_accuracy(values).second;
    report.baseline = chance;

    auto rows = sample_without_replacement(dataset.n_rows(), static_cast<size_t>(config.n_trials), rng);

    auto trial = [&](size_t row) {
        ChatTranscript transcript;
        transcript.push_back({ChatMessage::System, kFeatureSystemPrompt});
        add_feature_exemplar(transcript, kExemplarFlowers);
        add_feature_exemplar(transcript, kExemplarRentals);
        transcript.push_back(
            {ChatMessage::User, render_row_kv(dataset, row, chosen) + ", " + chosen + " ="});

        std::string expected = dataset.rows[row][feature_idx].raw;
        std::string actual = trim(first_line(chat(model, transcript, config.completion)));

        TrialRecord record;
        record.row = static_cast<int>(row);
        record.expected = expected;
        record.actual = actual;
        record.edit_distance = levenshtein(expected, actual);
        record.ok = actual == expected;
        return record;
    };
    run_trials(rows, config, trial, report);
    report.verdict = config.policy.judge_rate(report.successes, report.trials, chance);
    return report;
}

std::optional<int> first_token_length(const TabularDataset& dataset, double degenerate_cap) {
    for (int length = 1; length <= 5; ++length) {
        std::vector<std::string> prefixes;
        prefixes.reserve(dataset.n_rows());
        for (size_t r = 0; r < dataset.n_rows(); ++r) {
            auto cps = utf8_decode(render_row_csv(dataset, r));
            cps.resize(std::min(cps.size(), static_cast<size_t>(length)));
            prefixes.push_back(utf8_encode(cps));
        }
        if (mode_and_accuracy(prefixes).second < degenerate_cap) return length;
    }
    return std::nullopt;
}

TestReport first_token_test(const TabularDataset& dataset, const ChatModel& model,
                            const MemTestConfig& config) {
    const size_t context = static_cast<size_t>(config.context_rows);
    if (dataset.n_rows() < context + 2)
        throw ConfigInvalid("first token test needs at least context_rows + 2 rows");

    TestReport report;
    report.test = "first_token";
    report.dataset = dataset.name;
    report.config = config_echo(config, model);
    report.policy = config.policy.to_json();

    auto length = first_token_length(dataset, config.policy.chance_cap);
    if (!length) {
        report.verdict = Verdict::NotApplicable;
        report.config["reason"] = "degenerate first-token distribution";
        return report;
    }
    report.config["token_length"] = *length;

    std::vector<std::string> prefixes;
    prefixes.reserve(dataset.n_rows());
    auto prefix_of = [&](const std::string& text) {
        auto cps = utf8_decode(text);
        cps.resize(std::min(cps.size(), static_cast<size_t>(*length)));
        return utf8_encode(cps);
    };
    for (size_t r = 0; r < dataset.n_rows(); ++r) prefixes.push_back(prefix_of(render_row_csv(dataset, r)));
    double baseline = mode_and_accuracy(prefixes).second;
    report.baseline = baseline;

    auto rng = make_rng(config.seed, "first-token:" + dataset.name);
    size_t positions = dataset.n_rows() - context;
    auto starts = sample_without_replacement(positions, static_cast<size_t>(config.n_trials), rng);

    auto trial = [&](size_t start) {
        std::string block;
        for (size_t r = start; r < start + context; ++r) {
            if (r > start) block += "\n";
            block += render_row_csv(dataset, r);
        }
        ChatTranscript transcript;
        transcript.push_back({ChatMessage::System, kAutocompleteSystemPrompt});
        add_row_exemplar(transcript, kExemplarFlowers);
        add_row_exemplar(transcript, kExemplarRentals);
        transcript.push_back({ChatMessage::User, block});

        std::string expected = prefixes[start + context];
        std::string actual =
            prefix_of(first_content_line(normalize_newlines(chat(model, transcript, config.completion))));

        TrialRecord record;
        record.row = static_cast<int>(start + context);
        record.expected = expected;
        record.actual = actual;
        record.edit_distance = levenshtein(expected, actual);
        record.ok = actual == expected;
        return record;
    };
    run_trials(starts, config, trial, report);
    if (report.trials == 0) {
        report.verdict = Verdict::NotApplicable;
        return report;
    }
    auto binom = binomial_test(report.successes, report.trials, baseline);
    report.p_value = binom.p_value;
    report.verdict = config.policy.judge_p_value(binom.p_value);
    return report;
}

TestReport feature_names_test(const TabularDataset& dataset, const ChatModel& model,
                              const MemTestConfig& config) {
    if (dataset.n_features() < 2)
        throw ConfigInvalid("feature names test needs at least 2 features");

    // Conditioning lists for widely known public datasets.
    static const std::vector<std::pair<std::string, std::vector<std::string>>> kExemplars = {
        {"IRIS", {"sepal_length", "sepal_width", "petal_length", "petal_width", "species"}},
        {"adult",
         {"Age", "WorkClass", "fnlwgt", "Education", "EducationNum", "MaritalStatus", "Occupation",
          "Relationship", "Race", "Gender", "CapitalGain", "CapitalLoss", "HoursPerWeek",
          "NativeCountry", "Income"}},
        {"titanic-train",
         {"PassengerId", "Survived", "Pclass", "Name", "Sex", "Age", "SibSp", "Parch", "Ticket",
          "Fare", "Cabin", "Embarked"}},
        {"uci-wine",
         {"target", "alcohol", "malic_acid", "ash", "alcalinity_of_ash", "magnesium",
          "total_phenols", "flavanoids", "nonflavanoid_phenols", "proanthocyanins",
          "color_intensity", "hue", "od280_od315_of_diluted_wines", "proline"}},
        {"california-housing",
         {"longitude", "latitude", "housing_median_age", "total_rooms", "total_bedrooms",
          "population", "households", "median_income", "median_house_value", "ocean_proximity"}},
    };

    TestReport report;
    report.test = "feature_names";
    report.dataset = dataset.name;
    report.config = config_echo(config, model);
    report.policy = config.policy.to_json();

    ChatTranscript transcript;
    transcript.push_back({ChatMessage::System, kFeatureNamesSystemPrompt});
    std::string lower_name = to_lower(dataset.name);
    for (const auto& [name, features] : kExemplars) {
        if (to_lower(name) == lower_name) continue;  // never condition on the dataset under test
        transcript.push_back(
            {ChatMessage::User, "Dataset: " + name + ". Feature Names: " + features[0]});
        std::vector<std::string> rest(features.begin() + 1, features.end());
        transcript.push_back({ChatMessage::Assistant, join(rest, ", ")});
    }
    transcript.push_back({ChatMessage::User, "Dataset: " + dataset.name + ". Feature Names: " +
                                                 dataset.feature_names[0]});

    std::vector<std::string> rest(dataset.feature_names.begin() + 1, dataset.feature_names.end());
    std::string expected = join(rest, ", ");
    std::string actual;
    TrialRecord record;
    record.row = 0;
    record.expected = expected;
    try {
        actual = trim(first_line(chat(model, transcript, config.completion)));
        record.actual = actual;
        int distance = levenshtein(expected, actual);
        record.edit_distance = distance;
        size_t denom = std::max(utf8_decode(expected).size(), utf8_decode(actual).size());
        double normalized = denom ? static_cast<double>(distance) / denom : 0.0;
        record.ok = normalized <= 0.1;
        report.trials = 1;
        report.successes = record.ok ? 1 : 0;
        report.verdict = record.ok ? Verdict::Evidence : Verdict::NoEvidence;
    } catch (const Error& e) {
        record.error = e.what();
        report.verdict = Verdict::NotApplicable;
    }
    report.records.push_back(std::move(record));
    return report;
}

}  // namespace tabprobe
