#include "tabprobe/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <set>

#include "tabprobe/errors.hpp"
#include "tabprobe/scoring.hpp"
#include "tabprobe/util.hpp"

namespace tabprobe {

nlohmann::json SampleBatch::to_json() const {
    return {{"dataset", dataset_name},
            {"temperature", temperature},
            {"rows", rows},
            {"parse_failures", parse_failures},
            {"n_parsed", rows.size()}};
}

nlohmann::json CopyStats::to_json() const {
    return {{"copied_fraction", copied_fraction},
            {"mean_shared_features", mean_shared_features},
            {"mean_shared_fraction", mean_shared_fraction},
            {"value_coverage", value_coverage}};
}

nlohmann::json ModeAgreement::to_json() const {
    nlohmann::json feats = nlohmann::json::array();
    for (const auto& f : features)
        feats.push_back({{"feature", f.name},
                         {"sample_mode", f.sample_mode},
                         {"data_mode", f.data_mode},
                         {"agree", f.agree}});
    return {{"features", std::move(feats)}, {"pass", pass}};
}

nlohmann::json CorrelationAgreement::to_json() const {
    return {{"features", features},
            {"sample_corr", sample_corr},
            {"data_corr", data_corr},
            {"mean_abs_delta", mean_abs_delta},
            {"verdict", verdict},
            {"thresholds", {{"pass", 0.2}, {"ambiguous", 0.35}}}};
}

namespace {

struct Exemplar {
    const char* name;
    const char* features;
    const char* sample;
};

// Fixed single-row snippets from five public datasets.
const Exemplar kExemplars[] = {
    {"IRIS", "sepal_length, sepal_width, petal_length, petal_width, species",
     "sepal_length = 5.1, sepal_width = 3.5, petal_length = 1.4, petal_width = 0.3, species = "
     "Iris-setosa"},
    {"adult",
     "Age, WorkClass, fnlwgt, Education, EducationNum, MaritalStatus, Occupation, Relationship, "
     "Race, Gender, CapitalGain, CapitalLoss, HoursPerWeek, NativeCountry, Income",
     "Age = 43, WorkClass = Self-emp-inc, fnlwgt = 196945, Education = HS-grad, EducationNum = 9, "
     "MaritalStatus = Married-civ-spouse, Occupation = Other-service, Relationship = Husband, "
     "Race = Asian-Pac-Islander, Gender = Male, CapitalGain = 0, CapitalLoss = 0, HoursPerWeek = "
     "78, NativeCountry = Thailand, Income = <=50K"},
    {"openml-diabetes",
     "Pregnancies, Glucose, BloodPressure, SkinThickness, Insulin, BMI, "
     "DiabetesPedigreeFunction, Age, Outcome",
     "Pregnancies = 1, Glucose = 95, BloodPressure = 74, SkinThickness = 21, Insulin = 73, BMI = "
     "25.9, DiabetesPedigreeFunction = 0.673, Age = 36, Outcome = 0"},
    {"uci-wine",
     "target, alcohol, malic_acid, ash, alcalinity_of_ash, magnesium, total_phenols, flavanoids, "
     "nonflavanoid_phenols, proanthocyanins, color_intensity, hue, "
     "od280_od315_of_diluted_wines, proline",
     "target = 1, alcohol = 13.24, malic_acid = 2.59, ash = 2.87, alcalinity_of_ash = 21.0, "
     "magnesium = 118, total_phenols = 2.8, flavanoids = 2.69, nonflavanoid_phenols = 0.39, "
     "proanthocyanins = 1.82, color_intensity = 4.32, hue = 1.04, od280_od315_of_diluted_wines = "
     "2.93, proline = 735"},
    {"titanic-train",
     "PassengerId, Survived, Pclass, Name, Sex, Age, SibSp, Parch, Ticket, Fare, Cabin, Embarked",
     "PassengerId = 746, Survived = 0, Pclass = 3, Name = Abbott, Mr. Rossmore Edward, Sex = "
     "male, Age = 16.0, SibSp = 1, Parch = 1, Ticket = C.A. 2673, Fare = 20.25, Cabin = NaN, "
     "Embarked = S"},
};

const char* kSamplingSystemPrompt =
    "You are an expert assistant for tabular datasets. You provide random samples from different "
    "datasets. The user provides the name of the dataset and the names of the features. You then "
    "provide a sample from the dataset.";

// trailing punctuation + thousands separators tolerated in sampled numbers
std::optional<double> parse_sample_number(std::string text) {
    text = trim(text);
    while (!text.empty() && (text.back() == '.' || text.back() == ',' || text.back() == ';' ||
                             text.back() == '!' || text.back() == '%'))
        text.pop_back();
    std::string cleaned;
    for (size_t i = 0; i < text.size(); ++i) {
        if (text[i] == ',' && i > 0 && i + 1 < text.size() && std::isdigit((unsigned char)text[i - 1]) &&
            std::isdigit((unsigned char)text[i + 1]))
            continue;  // 1,234 -> 1234
        cleaned += text[i];
    }
    if (cleaned.empty()) return std::nullopt;
    char* end = nullptr;
    double value = std::strtod(cleaned.c_str(), &end);
    if (end != cleaned.c_str() + cleaned.size()) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

std::string mode_of(const std::vector<std::string>& values) {
    std::map<std::string, int> counts;
    for (const auto& v : values) ++counts[v];
    std::string best;
    int best_count = -1;
    for (const auto& [value, count] : counts)
        if (count > best_count) {
            best = value;
            best_count = count;
        }
    return best;
}

}  // namespace

ChatTranscript build_sampling_prompt(const std::string& dataset_name,
                                     const std::vector<std::string>& feature_names) {
    if (feature_names.empty()) throw ConfigInvalid("sampling prompt needs feature names");
    std::string lowered = to_lower(dataset_name);
    for (const auto& exemplar : kExemplars)
        if (to_lower(exemplar.name) == lowered)
            throw ExemplarOverlap("'" + dataset_name + "' is one of the prompt exemplars");

    ChatTranscript transcript;
    transcript.push_back({ChatMessage::System, kSamplingSystemPrompt});
    for (const auto& exemplar : kExemplars) {
        transcript.push_back({ChatMessage::User, std::string("Dataset: ") + exemplar.name +
                                                     "\nFeature Names: " + exemplar.features});
        transcript.push_back({ChatMessage::Assistant, exemplar.sample});
    }
    transcript.push_back({ChatMessage::User, "Dataset: " + dataset_name + "\nFeature Names: " +
                                                 join(feature_names, ", ")});
    return transcript;
}

SampleBatch draw_samples(const ChatModel& model, const TabularDataset& dataset,
                         const SamplingConfig& config) {
    if (config.n < 1) throw ConfigInvalid("draw_samples: n must be >= 1");
    ChatTranscript transcript = build_sampling_prompt(dataset.name, dataset.feature_names);
    CompletionConfig completion = config.completion;
    completion.temperature = config.temperature;

    std::vector<std::string> responses(static_cast<size_t>(config.n));
    parallel_for(responses.size(), config.workers, [&](size_t i) {
        responses[i] = chat(model, transcript, completion);
    });

    SampleBatch batch;
    batch.dataset_name = dataset.name;
    batch.temperature = config.temperature;
    batch.raw_responses = responses;
    for (const auto& response : responses) {
        auto pairs = parse_kv_pairs(first_line(trim(response)));
        std::map<std::string, std::string> by_name;
        for (auto& [name, value] : pairs) by_name[name] = value;
        std::vector<std::string> row;
        bool ok = by_name.size() == pairs.size() && pairs.size() == dataset.n_features();
        if (ok)
            for (const auto& feature : dataset.feature_names) {
                auto it = by_name.find(feature);
                if (it == by_name.end()) {
                    ok = false;
                    break;
                }
                row.push_back(it->second);
            }
        if (ok)
            batch.rows.push_back(std::move(row));
        else
            ++batch.parse_failures;
    }
    if (batch.parse_failures * 2 > config.n)
        throw ParseAbort("more than half of the sampled responses failed to parse");
    return batch;
}

CopyStats copy_metrics(const SampleBatch& batch, const TabularDataset& dataset) {
    if (batch.rows.empty()) throw ConfigInvalid("copy_metrics needs at least one parsed row");
    const size_t d = dataset.n_features();

    std::vector<std::set<std::string>> column_values(d);
    for (const auto& row : dataset.rows)
        for (size_t c = 0; c < d; ++c) column_values[c].insert(row[c].raw);

    CopyStats stats;
    double covered = 0.0, total_values = 0.0;
    for (const auto& sample : batch.rows) {
        size_t best_shared = 0;
        for (const auto& row : dataset.rows) {
            size_t shared = 0;
            for (size_t c = 0; c < d; ++c) shared += sample[c] == row[c].raw;
            best_shared = std::max(best_shared, shared);
        }
        if (best_shared == d) stats.copied_fraction += 1.0;
        stats.mean_shared_features += static_cast<double>(best_shared);
        for (size_t c = 0; c < d; ++c) {
            covered += column_values[c].count(sample[c]) ? 1.0 : 0.0;
            total_values += 1.0;
        }
    }
    const double n = static_cast<double>(batch.rows.size());
    stats.copied_fraction /= n;
    stats.mean_shared_features /= n;
    stats.mean_shared_fraction = stats.mean_shared_features / static_cast<double>(d);
    stats.value_coverage = covered / total_values;
    return stats;
}

ModeAgreement mode_agreement(const SampleBatch& batch, const TabularDataset& dataset) {
    if (batch.rows.size() < 10) throw ConfigInvalid("mode_agreement needs >= 10 parsed rows");
    ModeAgreement report;
    for (size_t c = 0; c < dataset.n_features(); ++c) {
        ModeAgreement::Feature feature;
        feature.name = dataset.feature_names[c];
        if (dataset.columns[c].kind == ColumnKind::Numeric) {
            // 10 equal-width bins over the data range
            double lo = 0.0, hi = 0.0;
            bool first = true;
            for (const auto& row : dataset.rows)
                if (row[c].numeric) {
                    lo = first ? *row[c].numeric : std::min(lo, *row[c].numeric);
                    hi = first ? *row[c].numeric : std::max(hi, *row[c].numeric);
                    first = false;
                }
            double width = hi > lo ? (hi - lo) / 10.0 : 1.0;
            auto bin_of = [&](double v) {
                int bin = static_cast<int>(std::floor((v - lo) / width));
                return std::to_string(std::clamp(bin, 0, 9));
            };
            std::vector<std::string> data_bins, sample_bins;
            for (const auto& row : dataset.rows)
                if (row[c].numeric) data_bins.push_back(bin_of(*row[c].numeric));
            for (const auto& sample : batch.rows)
                if (auto v = parse_sample_number(sample[c])) sample_bins.push_back(bin_of(*v));
            feature.data_mode = data_bins.empty() ? "" : mode_of(data_bins);
            feature.sample_mode = sample_bins.empty() ? "" : mode_of(sample_bins);
        } else {
            std::vector<std::string> data_values, sample_values;
            for (const auto& row : dataset.rows) data_values.push_back(row[c].raw);
            for (const auto& sample : batch.rows) sample_values.push_back(sample[c]);
            feature.data_mode = mode_of(data_values);
            feature.sample_mode = mode_of(sample_values);
        }
        feature.agree = !feature.sample_mode.empty() && feature.sample_mode == feature.data_mode;
        report.features.push_back(std::move(feature));
    }
    size_t agreeing = 0;
    for (const auto& f : report.features) agreeing += f.agree;
    report.pass = agreeing * 2 > report.features.size();
    return report;
}

CorrelationAgreement correlation_agreement(const SampleBatch& batch,
                                           const TabularDataset& dataset) {
    CorrelationAgreement report;
    std::vector<size_t> numeric_columns;
    for (size_t c = 0; c < dataset.n_features(); ++c)
        if (dataset.columns[c].kind == ColumnKind::Numeric) numeric_columns.push_back(c);
    if (numeric_columns.size() < 2 || batch.rows.size() < 30) {
        report.verdict = "not-applicable";
        return report;
    }

    // parsed numeric series per usable feature, degenerate columns dropped
    std::vector<std::vector<double>> data_series, sample_series;
    for (size_t c : numeric_columns) {
        std::vector<double> data_col, sample_col;
        bool ok = true;
        for (const auto& row : dataset.rows) {
            if (!row[c].numeric) {
                ok = false;
                break;
            }
            data_col.push_back(*row[c].numeric);
        }
        for (const auto& sample : batch.rows) {
            auto v = parse_sample_number(sample[c]);
            if (!v) {
                ok = false;
                break;
            }
            sample_col.push_back(*v);
        }
        auto constant = [](const std::vector<double>& xs) {
            return std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) == xs.end();
        };
        if (!ok || constant(data_col) || constant(sample_col)) continue;
        report.features.push_back(dataset.feature_names[c]);
        data_series.push_back(std::move(data_col));
        sample_series.push_back(std::move(sample_col));
    }
    if (report.features.size() < 2) {
        report.verdict = "not-applicable";
        return report;
    }

    const size_t k = report.features.size();
    report.data_corr.assign(k, std::vector<double>(k, 1.0));
    report.sample_corr.assign(k, std::vector<double>(k, 1.0));
    double delta_sum = 0.0;
    int delta_count = 0;
    for (size_t i = 0; i < k; ++i)
        for (size_t j = i + 1; j < k; ++j) {
            double dc = pearson(data_series[i], data_series[j]);
            double sc = pearson(sample_series[i], sample_series[j]);
            report.data_corr[i][j] = report.data_corr[j][i] = dc;
            report.sample_corr[i][j] = report.sample_corr[j][i] = sc;
            delta_sum += std::fabs(dc - sc);
            ++delta_count;
        }
    report.mean_abs_delta = delta_sum / delta_count;
    report.verdict = report.mean_abs_delta <= 0.2     ? "pass"
                     : report.mean_abs_delta <= 0.35 ? "ambiguous"
                                                      : "fail";
    return report;
}

}  // namespace tabprobe
