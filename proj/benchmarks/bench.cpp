#include <benchmark/benchmark.h>

#include <random>
#include <sstream>

#include "tabprobe/dataset.hpp"
#include "tabprobe/scoring.hpp"
#include "tabprobe/transforms.hpp"
#include "tabprobe/util.hpp"

using namespace tabprobe;

namespace {

std::string random_string(size_t length, uint64_t seed) {
    auto rng = make_rng(seed, "bench-string");
    std::uniform_int_distribution<int> ch('a', 'z');
    std::string s;
    for (size_t i = 0; i < length; ++i) s += static_cast<char>(ch(rng));
    return s;
}

std::string synthetic_csv(size_t n_rows, uint64_t seed) {
    auto rng = make_rng(seed, "bench-csv");
    std::uniform_real_distribution<double> value(1.0, 9999.0);
    std::ostringstream csv;
    csv << "id,mass,volume,label\n";
    for (size_t i = 0; i < n_rows; ++i)
        csv << "R" << 1000 + i << "," << format_fixed(value(rng), 3) << ","
            << format_fixed(value(rng), 2) << "," << (i % 2 ? "yes" : "no") << "\n";
    return csv.str();
}

void bm_levenshtein(benchmark::State& state) {
    auto a = random_string(static_cast<size_t>(state.range(0)), 1);
    auto b = random_string(static_cast<size_t>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(levenshtein(a, b));
}
BENCHMARK(bm_levenshtein)->Arg(32)->Arg(256)->Arg(1024);

void bm_align(benchmark::State& state) {
    auto a = random_string(static_cast<size_t>(state.range(0)), 3);
    auto b = random_string(static_cast<size_t>(state.range(0)), 4);
    for (auto _ : state) benchmark::DoNotOptimize(align(a, b));
}
BENCHMARK(bm_align)->Arg(32)->Arg(256);

void bm_load_csv(benchmark::State& state) {
    auto text = synthetic_csv(static_cast<size_t>(state.range(0)), 5);
    for (auto _ : state) benchmark::DoNotOptimize(load_csv_text(text, {}, "bench"));
}
BENCHMARK(bm_load_csv)->Arg(100)->Arg(1000)->Arg(10000);

void bm_perturb(benchmark::State& state) {
    auto ds = load_csv_text(synthetic_csv(static_cast<size_t>(state.range(0)), 6), {}, "bench");
    TransformSpec spec;
    for (auto _ : state) benchmark::DoNotOptimize(perturb(ds, spec));
}
BENCHMARK(bm_perturb)->Arg(100)->Arg(1000);

void bm_binomial_test(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(binomial_test(120, 500, 0.2));
}
BENCHMARK(bm_binomial_test);

}  // namespace

BENCHMARK_MAIN();
