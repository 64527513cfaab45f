#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tabprobe/errors.hpp"
#include "tabprobe/fewshot.hpp"
#include "tabprobe/llm.hpp"
#include "tabprobe/statlearn.hpp"

using namespace tabprobe;

TEST_CASE("generated problems follow the sign rule and reproduce under the seed") {
    auto p = generate_problem(4, 100, 50, 11);
    for (size_t i = 0; i < p.train_x.size(); ++i) {
        double dot = 0.0;
        for (int j = 0; j < 4; ++j) dot += p.train_x[i][j] * p.z[j];
        CHECK(p.train_y[i] == (dot >= 0.0 ? 1 : 0));
    }
    auto q = generate_problem(4, 100, 50, 11);
    CHECK(q.z == p.z);
    CHECK(q.train_x == p.train_x);
    CHECK(q.test_y == p.test_y);
    CHECK(generate_problem(4, 100, 50, 12).z != p.z);

    CHECK_THROWS_AS(generate_problem(0, 10, 10, 1), ConfigInvalid);
}

TEST_CASE("labels are balanced by symmetry") {
    int ones = 0, total = 0;
    for (uint64_t seed = 0; seed < 20; ++seed) {
        auto p = generate_problem(3, 500, 1, seed);
        for (int y : p.train_y) ones += y;
        total += 500;
    }
    CHECK(static_cast<double>(ones) / total == doctest::Approx(0.5).epsilon(0.04));
}

TEST_CASE("statistical prompt uses anonymous X/Y names at 4 decimals") {
    auto p = generate_problem(3, 10, 5, 2);
    auto t = render_statistical_prompt(p, 5, 0);
    REQUIRE(t.size() == 2 + 2 * 5);
    CHECK(t[0].content.find("'Y'") != std::string::npos);
    CHECK(t[0].content.find("statistician") != std::string::npos);
    CHECK(t[1].content.rfind("IF X1 = ", 0) == 0);
    CHECK(t[1].content.find("THEN Y =") != std::string::npos);
    // 4-decimal rendering round-trips the shown values
    auto pairs = parse_kv_pairs(t[1].content);
    REQUIRE(pairs.size() == 3);
    for (int j = 0; j < 3; ++j)
        CHECK(std::stod(pairs[j].second) ==
              doctest::Approx(p.train_x[0][j]).epsilon(1e-3));

    CHECK_THROWS_AS(render_statistical_prompt(p, 50, 0), ConfigInvalid);
    CHECK_THROWS_AS(render_statistical_prompt(p, 5, 99), IndexOutOfRange);
}

TEST_CASE("dimension sweep: oracle is perfect, baselines hold up") {
    SweepConfig config;
    config.repetitions = 5;
    config.test_queries = 30;
    config.seed = 3;
    config.workers = 4;

    auto result = dimension_sweep(nullptr, {2, 8}, 20, config);
    CHECK(result.axis == "dimension");
    REQUIRE(result.curves.size() == 2);
    for (const auto& curve : result.curves) {
        REQUIRE(curve.mean.size() == 2);
        CHECK(curve.mean[0] > 0.5);
        CHECK(curve.ci_half[0] < 0.2);
    }
    // fixed shots: harder in higher dimension
    for (const auto& curve : result.curves) CHECK(curve.mean[1] < curve.mean[0] + 0.05);
}

TEST_CASE("sample sweep: more shots help the baselines") {
    SweepConfig config;
    config.repetitions = 8;
    config.test_queries = 40;
    config.seed = 4;
    config.workers = 4;
    auto result = sample_sweep(nullptr, 8, {10, 50, 200}, config);
    CHECK(result.axis == "samples");
    const MethodCurve* lr = nullptr;
    for (const auto& curve : result.curves)
        if (curve.method == "logistic_regression") lr = &curve;
    REQUIRE(lr != nullptr);
    CHECK(lr->mean.back() > lr->mean.front());
    CHECK(lr->mean.back() >= 0.85);

    CHECK_THROWS_AS(sample_sweep(nullptr, 8, {50, 10}, config), ConfigInvalid);
}

TEST_CASE("majority-class model stays at chance on the sweep") {
    SweepConfig config;
    config.repetitions = 4;
    config.test_queries = 40;
    config.seed = 5;
    config.workers = 4;
    MajorityClass model("1");
    auto result = dimension_sweep(&model, {4}, 20, config);
    const MethodCurve* llm = nullptr;
    for (const auto& curve : result.curves)
        if (curve.method == "llm") llm = &curve;
    REQUIRE(llm != nullptr);
    CHECK(llm->mean[0] == doctest::Approx(0.5).epsilon(0.35));
}

TEST_CASE("sweep json and plot csv carry every method and grid point") {
    SweepConfig config;
    config.repetitions = 2;
    config.test_queries = 10;
    auto result = sample_sweep(nullptr, 4, {10, 20}, config);
    auto j = result.to_json();
    CHECK(j["grid"].size() == 2);
    CHECK(j["curves"].size() == 2);
    auto csv = result.to_plot_csv();
    CHECK(csv.find("logistic_regression,10,") != std::string::npos);
    CHECK(csv.find("1nn,20,") != std::string::npos);
}
