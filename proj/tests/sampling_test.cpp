#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <mutex>
#include <random>

#include "helpers.hpp"
#include "tabprobe/errors.hpp"
#include "tabprobe/sampling.hpp"
#include "tabprobe/util.hpp"

using namespace tabprobe;

namespace {

// Emits dataset rows in "Feature = Value" form; row choice driven by an
// internal counter or RNG so repeated identical prompts yield different rows.
class ReplaySampler : public ChatModel {
public:
    ReplaySampler(const TabularDataset& ds, bool bootstrap, uint64_t seed = 0)
        : ds_(ds), bootstrap_(bootstrap), rng_(make_rng(seed, "replay")) {}

    std::string complete(const ChatTranscript&, const CompletionConfig&) const override {
        size_t row;
        if (bootstrap_) {
            std::lock_guard lock(mutex_);
            row = std::uniform_int_distribution<size_t>(0, ds_.n_rows() - 1)(rng_);
        } else {
            row = counter_++ % ds_.n_rows();
        }
        return render_row_kv(ds_, row);
    }
    std::string id() const override { return "test:replay"; }

private:
    const TabularDataset& ds_;
    bool bootstrap_;
    mutable std::mt19937_64 rng_;
    mutable std::mutex mutex_;
    mutable std::atomic<size_t> counter_{0};
};

TabularDataset correlated_numeric(size_t n, uint64_t seed) {
    auto rng = make_rng(seed, "correlated");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::ostringstream csv;
    csv << "u,v,w\n";
    for (size_t i = 0; i < n; ++i) {
        double a = normal(rng), b = normal(rng);
        csv << format_fixed(10 + a, 3) << "," << format_fixed(20 + 0.9 * a + 0.3 * b, 3) << ","
            << format_fixed(30 + normal(rng), 3) << "\n";
    }
    return load_csv_text(csv.str(), {}, "correlated");
}

}  // namespace

TEST_CASE("sampling prompt carries the five exemplars and rejects overlap") {
    auto t = build_sampling_prompt("california-housing", {"longitude", "latitude"});
    REQUIRE(t.size() == 12);  // system + 5 exemplar pairs + final user
    CHECK(t[0].role == ChatMessage::System);
    CHECK(t[0].content.find("random samples") != std::string::npos);
    bool titanic_exemplar = t[5].content.find("PassengerId = 746") != std::string::npos ||
                            t[10].content.find("PassengerId = 746") != std::string::npos;
    CHECK(titanic_exemplar);
    CHECK(t.back().content == "Dataset: california-housing\nFeature Names: longitude, latitude");

    CHECK_THROWS_AS(build_sampling_prompt("IRIS", {"sepal_length"}), ExemplarOverlap);
    CHECK_THROWS_AS(build_sampling_prompt("iris", {"sepal_length"}), ExemplarOverlap);
    CHECK_THROWS_AS(build_sampling_prompt("x", {}), ConfigInvalid);
}

TEST_CASE("draw_samples parses well-formed rows and counts failures") {
    auto ds = testutil::make_synthetic(50, 31);
    ReplaySampler model(ds, false);
    SamplingConfig config;
    config.n = 20;
    auto batch = draw_samples(model, ds, config);
    CHECK(batch.rows.size() == 20);
    CHECK(batch.parse_failures == 0);
    CHECK(batch.rows[0].size() == ds.n_features());
    CHECK(batch.rows[0][0] == ds.rows[0][0].raw);

    SUBCASE("missing features are parse failures; too many aborts") {
        MajorityClass partial("mass = 1.0, volume = 2.0");
        CHECK_THROWS_AS(draw_samples(partial, ds, config), ParseAbort);
    }
}

TEST_CASE("copy metrics: replay gives exact copies, novel values give zero coverage") {
    auto ds = testutil::make_synthetic(40, 32);
    ReplaySampler replay(ds, false);
    SamplingConfig config;
    config.n = 40;
    auto batch = draw_samples(replay, ds, config);
    auto stats = copy_metrics(batch, ds);
    CHECK(stats.copied_fraction == 1.0);
    CHECK(stats.mean_shared_features == doctest::Approx(ds.n_features()));
    CHECK(stats.mean_shared_fraction == doctest::Approx(1.0));
    CHECK(stats.value_coverage == 1.0);

    MajorityClass novel("rid = Z1, mass = 1.111, volume = 2.222, code = zz, label = maybe");
    auto novel_batch = draw_samples(novel, ds, config);
    auto novel_stats = copy_metrics(novel_batch, ds);
    CHECK(novel_stats.copied_fraction == 0.0);
    CHECK(novel_stats.value_coverage == 0.0);
}

TEST_CASE("copy metrics are invariant under row permutation") {
    auto ds = testutil::make_synthetic(30, 33);
    ReplaySampler replay(ds, false);
    SamplingConfig config;
    config.n = 15;
    auto batch = draw_samples(replay, ds, config);
    auto before = copy_metrics(batch, ds);
    std::reverse(ds.rows.begin(), ds.rows.end());
    std::reverse(batch.rows.begin(), batch.rows.end());
    auto after = copy_metrics(batch, ds);
    CHECK(before.copied_fraction == after.copied_fraction);
    CHECK(before.mean_shared_features == after.mean_shared_features);
    CHECK(before.value_coverage == after.value_coverage);
}

TEST_CASE("mode agreement passes for a faithful sampler and fails for an adversary") {
    auto ds = testutil::make_proportioned({{"often", 70}, {"rare", 30}}, 34);
    ReplaySampler replay(ds, true, 9);
    SamplingConfig config;
    config.n = 120;
    auto batch = draw_samples(replay, ds, config);
    auto report = mode_agreement(batch, ds);
    CHECK(report.pass);

    MajorityClass adversary("x = -999.0, label = rare");
    auto bad = mode_agreement(draw_samples(adversary, ds, config), ds);
    CHECK_FALSE(bad.pass);

    CHECK_THROWS_AS(mode_agreement(SampleBatch{}, ds), ConfigInvalid);
}

TEST_CASE("correlation agreement: bootstrap passes, independent sampler drifts") {
    auto ds = correlated_numeric(300, 35);
    ReplaySampler bootstrap(ds, true, 4);
    SamplingConfig config;
    config.n = 200;
    auto batch = draw_samples(bootstrap, ds, config);
    auto report = correlation_agreement(batch, ds);
    CHECK(report.verdict == "pass");
    CHECK(report.mean_abs_delta <= 0.1);
    CHECK(report.sample_corr.size() == 3);

    // constant-response sampler has constant features -> not applicable
    MajorityClass constant("u = 1.0, v = 2.0, w = 3.0");
    auto flat = correlation_agreement(draw_samples(constant, ds, config), ds);
    CHECK(flat.verdict == "not-applicable");
}

TEST_CASE("correlation agreement needs two numeric features and 30 rows") {
    auto ds = testutil::make_proportioned({{"a", 20}, {"b", 20}}, 36);  // one numeric column
    ReplaySampler replay(ds, true, 1);
    SamplingConfig config;
    config.n = 40;
    auto batch = draw_samples(replay, ds, config);
    CHECK(correlation_agreement(batch, ds).verdict == "not-applicable");
}
