#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabprobe/llm.hpp"

#include <nlohmann/json.hpp>

namespace tabprobe {

struct TimeSeries {
    std::string name;
    std::vector<std::string> dates;  // ISO, strictly increasing
    std::vector<double> values;      // finite

    size_t size() const { return values.size(); }
    void validate() const;  // throws on violated invariants
};

// Two-column CSV (date, value), header optional.
TimeSeries load_series(const std::string& path);
TimeSeries load_series_text(const std::string& text, const std::string& name = "");

struct ForecastConfig {
    int window = 20;
    bool include_dates = true;  // --no-dates ablation
    double cap = 0.02;
    int workers = 1;
    CompletionConfig completion;
};

// Asks for the value at index t given the `window` preceding dated values.
ChatTranscript forecast_prompt(const TimeSeries& series, size_t t, const ForecastConfig& config = {});

// Mean over positions of min(|pred - actual| / |actual|, cap).
double robust_mre(const std::vector<double>& predictions, const std::vector<double>& actuals,
                  double cap = 0.02);

// Prediction at t is the value at t - 1, scored over [start, end).
double last_value_baseline(const TimeSeries& series, size_t start, size_t end, double cap = 0.02);

// First decimal literal in the response; nullopt when there is none
// (scored as the cap and counted).
std::optional<double> extract_forecast(const std::string& response);

struct YearResult {
    std::string year;
    int positions = 0;
    int non_numeric = 0;
    double model_error = 0.0;
    double baseline_error = 0.0;
};

struct ForecastEval {
    std::vector<YearResult> years;
    nlohmann::json to_json() const;
    std::string to_table() const;  // aligned text grid
};

// Per-year model vs last-value baseline; a year's scored range starts at
// max(window, first index of the year).
ForecastEval run_forecast_eval(const ChatModel& model, const TimeSeries& series,
                               const std::vector<std::string>& years,
                               const ForecastConfig& config = {});

}  // namespace tabprobe
