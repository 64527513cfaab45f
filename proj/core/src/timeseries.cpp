#include "tabprobe/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "tabprobe/errors.hpp"
#include "tabprobe/util.hpp"

namespace tabprobe {

void TimeSeries::validate() const {
    if (dates.size() != values.size()) throw ConfigInvalid("dates and values differ in length");
    for (size_t i = 1; i < dates.size(); ++i)
        if (dates[i] <= dates[i - 1])
            throw ConfigInvalid("dates must be strictly increasing at index " + std::to_string(i));
    for (double v : values)
        if (!std::isfinite(v)) throw ConfigInvalid("series contains a non-finite value");
}

TimeSeries load_series_text(const std::string& text, const std::string& name) {
    TimeSeries series;
    series.name = name;
    std::istringstream in(text);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw RaggedRow("line " + std::to_string(line_no) + ": expected 'date,value'");
        std::string date = trim(line.substr(0, comma));
        std::string value_text = trim(line.substr(comma + 1));
        char* end = nullptr;
        double value = std::strtod(value_text.c_str(), &end);
        if (end != value_text.c_str() + value_text.size() || value_text.empty()) {
            if (line_no == 1) continue;  // header
            throw RaggedRow("line " + std::to_string(line_no) + ": non-numeric value");
        }
        series.dates.push_back(std::move(date));
        series.values.push_back(value);
    }
    if (series.values.empty()) throw MissingHeader("empty time series");
    series.validate();
    return series;
}

TimeSeries load_series(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    std::string name = path;
    auto slash = name.find_last_of('/');
    if (slash != std::string::npos) name = name.substr(slash + 1);
    auto dot = name.find_last_of('.');
    if (dot != std::string::npos) name = name.substr(0, dot);
    return load_series_text(buffer.str(), name);
}

static std::string format_value(double v) {
    std::ostringstream out;
    out << std::setprecision(10) << v;
    return out.str();
}

ChatTranscript forecast_prompt(const TimeSeries& series, size_t t, const ForecastConfig& config) {
    if (t >= series.size()) throw IndexOutOfRange("forecast index out of range");
    if (t < static_cast<size_t>(config.window))
        throw IndexOutOfRange("forecast index precedes the first full window");

    std::string series_name = series.name.empty() ? "time series" : series.name + " time series";
    std::string system =
        "You are an expert financial market analyst and stock trader and your task is to predict "
        "the development of the " +
        series_name +
        ". You are given the value of the series in the previous " +
        std::to_string(config.window) +
        " days and predict the value of the series on the current day.";

    std::ostringstream user;
    user << "The value of the series in the previous " << config.window << " days:\n";
    for (size_t i = t - static_cast<size_t>(config.window); i < t; ++i) {
        if (config.include_dates) user << series.dates[i] << ": ";
        user << format_value(series.values[i]) << "\n";
    }
    if (config.include_dates)
        user << "Predict the value of the series on " << series.dates[t] << ".";
    else
        user << "Predict the value of the series on the next day.";
    user << " Respond with a single number.";

    return {{ChatMessage::System, system}, {ChatMessage::User, user.str()}};
}

double robust_mre(const std::vector<double>& predictions, const std::vector<double>& actuals,
                  double cap) {
    if (predictions.empty() || predictions.size() != actuals.size())
        throw ConfigInvalid("robust_mre: mismatched or empty inputs");
    double total = 0.0;
    for (size_t i = 0; i < predictions.size(); ++i) {
        if (actuals[i] == 0.0) throw ZeroActual("actual value is zero at index " + std::to_string(i));
        total += std::min(std::fabs(predictions[i] - actuals[i]) / std::fabs(actuals[i]), cap);
    }
    return total / static_cast<double>(predictions.size());
}

double last_value_baseline(const TimeSeries& series, size_t start, size_t end, double cap) {
    if (start < 1 || end > series.size() || start >= end)
        throw IndexOutOfRange("baseline range invalid");
    std::vector<double> predictions, actuals;
    for (size_t t = start; t < end; ++t) {
        predictions.push_back(series.values[t - 1]);
        actuals.push_back(series.values[t]);
    }
    return robust_mre(predictions, actuals, cap);
}

std::optional<double> extract_forecast(const std::string& response) {
    for (size_t i = 0; i < response.size(); ++i) {
        char c = response[i];
        bool starts_number = std::isdigit(static_cast<unsigned char>(c)) ||
                             ((c == '-' || c == '+' || c == '.') && i + 1 < response.size() &&
                              std::isdigit(static_cast<unsigned char>(response[i + 1])));
        if (!starts_number) continue;
        char* end = nullptr;
        double value = std::strtod(response.c_str() + i, &end);
        if (end != response.c_str() + i && std::isfinite(value)) return value;
    }
    return std::nullopt;
}

nlohmann::json ForecastEval::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& y : years)
        rows.push_back({{"year", y.year},
                        {"positions", y.positions},
                        {"non_numeric", y.non_numeric},
                        {"model_error", y.model_error},
                        {"baseline_error", y.baseline_error}});
    return {{"years", std::move(rows)}};
}

std::string ForecastEval::to_table() const {
    std::ostringstream out;
    out << std::left << std::setw(8) << "year" << std::right << std::setw(12) << "model"
        << std::setw(12) << "baseline" << std::setw(8) << "n" << "\n";
    for (const auto& y : years) {
        out << std::left << std::setw(8) << y.year << std::right << std::fixed
            << std::setprecision(4) << std::setw(11) << y.model_error * 100 << "%"
            << std::setw(11) << y.baseline_error * 100 << "%" << std::setw(8) << y.positions
            << "\n";
    }
    return out.str();
}

ForecastEval run_forecast_eval(const ChatModel& model, const TimeSeries& series,
                               const std::vector<std::string>& years,
                               const ForecastConfig& config) {
    series.validate();
    ForecastEval eval;
    for (const auto& year : years) {
        // scored positions: indices in the year with a full preceding window
        std::vector<size_t> positions;
        for (size_t t = static_cast<size_t>(config.window); t < series.size(); ++t)
            if (series.dates[t].rfind(year, 0) == 0) positions.push_back(t);
        if (positions.empty())
            throw ConfigInvalid("no scoreable positions in year " + year);

        std::vector<double> predictions(positions.size());
        std::vector<int> non_numeric(positions.size(), 0);
        parallel_for(positions.size(), config.workers, [&](size_t i) {
            auto transcript = forecast_prompt(series, positions[i], config);
            std::string response = chat(model, transcript, config.completion);
            auto value = extract_forecast(response);
            if (value) {
                predictions[i] = *value;
            } else {
                non_numeric[i] = 1;
                // scores exactly the cap: an impossible sentinel prediction
                predictions[i] = std::numeric_limits<double>::max();
            }
        });

        YearResult result;
        result.year = year;
        result.positions = static_cast<int>(positions.size());
        std::vector<double> actuals, baseline;
        for (size_t t : positions) {
            actuals.push_back(series.values[t]);
            baseline.push_back(series.values[t - 1]);
        }
        for (int flag : non_numeric) result.non_numeric += flag;
        result.model_error = robust_mre(predictions, actuals, config.cap);
        result.baseline_error = robust_mre(baseline, actuals, config.cap);
        eval.years.push_back(std::move(result));
    }
    return eval;
}

}  // namespace tabprobe
