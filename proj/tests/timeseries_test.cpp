#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "tabprobe/errors.hpp"
#include "tabprobe/llm.hpp"
#include "tabprobe/timeseries.hpp"

using namespace tabprobe;

namespace {

// value[t] = 100 * 1.01^t over consecutive days spanning two years
TimeSeries geometric_series(int days_2020, int days_2021) {
    std::ostringstream csv;
    csv << "date,value\n";
    csv.precision(15);
    double value = 100.0;
    int day = 0;
    auto emit = [&](const std::string& year, int count) {
        for (int i = 0; i < count; ++i) {
            int month = 1 + day / 28 % 12;
            int dom = 1 + day % 28;
            char buf[16];
            std::snprintf(buf, sizeof buf, "%s-%02d-%02d", year.c_str(), month, dom);
            csv << buf << "," << value << "\n";
            value *= 1.01;
            ++day;
        }
        day = 0;
    };
    emit("2020", days_2020);
    emit("2021", days_2021);
    return load_series_text(csv.str(), "geo");
}

// replays the true next value for every prompt position
class PerfectForecaster : public ChatModel {
public:
    explicit PerfectForecaster(const TimeSeries& series, const ForecastConfig& config)
        : series_(series), config_(config) {}
    std::string complete(const ChatTranscript& transcript, const CompletionConfig&) const override {
        for (size_t t = config_.window; t < series_.size(); ++t)
            if (forecast_prompt(series_, t, config_)[1].content == transcript[1].content) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.17g", series_.values[t]);
                return buf;
            }
        return "no idea";
    }
    std::string id() const override { return "test:perfect"; }

private:
    const TimeSeries& series_;
    ForecastConfig config_;
};

}  // namespace

TEST_CASE("series loading validates order and values") {
    auto s = load_series_text("date,value\n2020-01-01,1.5\n2020-01-02,2.5\n", "s");
    CHECK(s.size() == 2);
    CHECK(s.values[1] == 2.5);
    CHECK_THROWS_AS(load_series_text("date,value\n2020-01-02,1\n2020-01-01,2\n", "s"),
                    ConfigInvalid);
    CHECK_THROWS_AS(load_series_text("", "s"), MissingHeader);
    CHECK_THROWS_AS(load_series("/nonexistent.csv"), IoFailure);
}

TEST_CASE("forecast prompt lists the window with dates, ablation drops them") {
    auto series = geometric_series(60, 0);
    ForecastConfig config;
    auto t = forecast_prompt(series, 25, config);
    REQUIRE(t.size() == 2);
    CHECK(t[0].content.find("analyst") != std::string::npos);
    CHECK(t[1].content.find(series.dates[5]) != std::string::npos);   // first window day
    CHECK(t[1].content.find(series.dates[24]) != std::string::npos);  // last window day
    CHECK(t[1].content.find(series.dates[25]) != std::string::npos);  // asked-for day

    config.include_dates = false;
    auto bare = forecast_prompt(series, 25, config);
    CHECK(bare[1].content.find(series.dates[5]) == std::string::npos);

    CHECK_THROWS_AS(forecast_prompt(series, 3, config), IndexOutOfRange);
}

TEST_CASE("robust mre formula") {
    CHECK(robust_mre({1.0, 2.0}, {1.0, 2.0}) == 0.0);
    CHECK(robust_mre({2.0, 4.0}, {1.0, 2.0}) == doctest::Approx(0.02));  // clipped at cap
    // mixed: 1% error and a clipped 50% error
    CHECK(robust_mre({1.01, 3.0}, {1.0, 2.0}) == doctest::Approx((0.01 + 0.02) / 2));
    // invariant under positive rescaling
    CHECK(robust_mre({101.0, 300.0}, {100.0, 200.0}) ==
          doctest::Approx(robust_mre({1.01, 3.0}, {1.0, 2.0})));
    CHECK_THROWS_AS(robust_mre({1.0}, {0.0}), ZeroActual);
    CHECK_THROWS_AS(robust_mre({}, {}), ConfigInvalid);
}

TEST_CASE("last-value baseline on the geometric series is just under 1 percent") {
    auto series = geometric_series(120, 0);
    double error = last_value_baseline(series, 20, series.size());
    // |v - 1.01 v| / |1.01 v| = 0.01 / 1.01
    CHECK(error == doctest::Approx(0.01 / 1.01).epsilon(1e-9));

    TimeSeries constant = load_series_text("d,v\n2020-01-01,5\n2020-01-02,5\n2020-01-03,5\n", "c");
    CHECK(last_value_baseline(constant, 1, 3) == 0.0);
    CHECK_THROWS_AS(last_value_baseline(constant, 0, 3), IndexOutOfRange);
}

TEST_CASE("numeric extraction takes the first decimal literal") {
    CHECK(extract_forecast("1.0832") == doctest::Approx(1.0832));
    CHECK(extract_forecast("about 1.08, maybe more") == doctest::Approx(1.08));
    CHECK(extract_forecast("The index closes at -3.5 points") == doctest::Approx(-3.5));
    CHECK_FALSE(extract_forecast("no numbers here").has_value());
}

TEST_CASE("per-year eval: perfect replay scores zero, last-value model matches the baseline") {
    auto series = geometric_series(80, 80);
    ForecastConfig config;
    config.workers = 4;

    PerfectForecaster perfect(series, config);
    auto eval = run_forecast_eval(perfect, series, {"2020", "2021"}, config);
    REQUIRE(eval.years.size() == 2);
    for (const auto& year : eval.years) {
        CHECK(year.model_error == 0.0);
        CHECK(year.non_numeric == 0);
        CHECK(year.baseline_error == doctest::Approx(0.01 / 1.01).epsilon(1e-9));
    }
    CHECK(eval.to_table().find("2021") != std::string::npos);

    SUBCASE("non-numeric replies score the cap") {
        MajorityClass chatty("I would rather not speculate.");
        auto bad = run_forecast_eval(chatty, series, {"2021"}, config);
        CHECK(bad.years[0].non_numeric == bad.years[0].positions);
        CHECK(bad.years[0].model_error == doctest::Approx(0.02));
    }
}

TEST_CASE("contaminated memorizer is better on its training years") {
    auto series = geometric_series(80, 80);
    // corpus: only the 2020 half, in prompt rendering
    ForecastConfig config;
    std::string corpus;
    for (size_t t = config.window; t < series.size(); ++t) {
        if (series.dates[t].rfind("2020", 0) != 0) continue;
        auto prompt = forecast_prompt(series, t, config);
        corpus += prompt[1].content + " " + std::to_string(series.values[t]) + "\n---\n";
    }
    NoisyMemorizer model(corpus, 0.0, 1);
    auto eval = run_forecast_eval(model, series, {"2020", "2021"}, config);
    std::map<std::string, double> errors;
    for (const auto& year : eval.years) errors[year.year] = year.model_error;
    CHECK(errors["2020"] < errors["2021"]);
}
