#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tabprobe/errors.hpp"
#include "tabprobe/scoring.hpp"
#include "tabprobe/util.hpp"

using namespace tabprobe;

namespace {

// Exponential-recursion reference, kept deliberately naive.
int lev_recursive(const std::string& a, const std::string& b) {
    if (a.empty()) return static_cast<int>(b.size());
    if (b.empty()) return static_cast<int>(a.size());
    int cost = a.back() == b.back() ? 0 : 1;
    std::string a0 = a.substr(0, a.size() - 1), b0 = b.substr(0, b.size() - 1);
    return std::min({lev_recursive(a0, b) + 1, lev_recursive(a, b0) + 1,
                     lev_recursive(a0, b0) + cost});
}

std::vector<std::string> all_strings(int max_len, const std::string& alphabet) {
    std::vector<std::string> out = {""};
    std::vector<std::string> frontier = {""};
    for (int len = 1; len <= max_len; ++len) {
        std::vector<std::string> next;
        for (const auto& s : frontier)
            for (char c : alphabet) next.push_back(s + c);
        out.insert(out.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return out;
}

// log P[Bin(n, p) >= k] by direct long-double summation
double binom_tail_direct(int k, int n, double p) {
    long double total = 0.0L;
    for (int i = k; i <= n; ++i) {
        long double term = 1.0L;
        for (int j = 0; j < i; ++j) term *= (long double)(n - j) / (i - j) * p;
        term *= powl(1.0L - p, n - i);
        total += term;
    }
    return static_cast<double>(total);
}

}  // namespace

TEST_CASE("levenshtein equals the recursive oracle on short strings") {
    auto strings = all_strings(3, "abc");
    for (const auto& a : strings)
        for (const auto& b : strings) CHECK(levenshtein(a, b) == lev_recursive(a, b));
}

TEST_CASE("levenshtein counts unicode code points once") {
    CHECK(levenshtein("café", "cafe") == 1);
    CHECK(levenshtein("éé", "") == 2);
}

TEST_CASE("alignment spans reconstruct both strings and sum to the distance") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(0, 12);
    std::uniform_int_distribution<int> ch(0, 2);
    for (int it = 0; it < 200; ++it) {
        std::string a, b;
        for (int i = len(rng); i > 0; --i) a += static_cast<char>('a' + ch(rng));
        for (int i = len(rng); i > 0; --i) b += static_cast<char>('a' + ch(rng));
        auto alignment = align(a, b);
        std::string ra, rb;
        int cost = 0;
        for (const auto& seg : alignment.segments) {
            ra += seg.reference;
            rb += seg.output;
            if (seg.status == AlignmentSegment::Match) {
                CHECK(seg.reference == seg.output);
            } else if (seg.status == AlignmentSegment::Substitution) {
                cost += static_cast<int>(utf8_decode(seg.reference).size());
            } else {
                cost += static_cast<int>(utf8_decode(seg.reference).size() +
                                         utf8_decode(seg.output).size());
            }
        }
        CHECK(ra == a);
        CHECK(rb == b);
        CHECK(cost == levenshtein(a, b));
        CHECK(alignment.distance == levenshtein(a, b));
    }
}

TEST_CASE("alignment renderers emit both formats") {
    auto alignment = align("12.5,setosa", "12.9,setosa");
    auto ansi = render_alignment_ansi(alignment);
    CHECK(ansi.find("\033[32m") != std::string::npos);  // green matches
    CHECK(ansi.find("\033[31m") != std::string::npos);  // red substitution
    auto html = render_alignment_html(alignment);
    CHECK(html.find("<span") != std::string::npos);
}

TEST_CASE("binomial test matches direct summation") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> n_dist(1, 60);
    std::uniform_real_distribution<double> p_dist(0.05, 0.95);
    for (int it = 0; it < 200; ++it) {
        int n = n_dist(rng);
        int k = std::uniform_int_distribution<int>(0, n)(rng);
        double p0 = p_dist(rng);
        double expected = binom_tail_direct(k, n, p0);
        CHECK(binomial_test(k, n, p0).p_value == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("binomial test edges") {
    CHECK(binomial_test(0, 50, 0.3).p_value == doctest::Approx(1.0));
    CHECK(binomial_test(10, 10, 1.0).p_value == doctest::Approx(1.0));
    CHECK(binomial_test(5, 10, 0.0).p_value >= 1e-300);  // clamped, never 0
    // shapes from published completion-rate tables
    CHECK(binomial_test(68, 250, 0.26).p_value > 0.05);
    CHECK(binomial_test(131, 136, 0.50).p_value < 1e-30);
}

TEST_CASE("pearson correlation") {
    std::vector<double> x = {1, 2, 3, 4, 5};
    std::vector<double> y = {2, 4, 6, 8, 10};
    CHECK(pearson(x, y) == doctest::Approx(1.0));
    std::vector<double> z = {5, 4, 3, 2, 1};
    CHECK(pearson(x, z) == doctest::Approx(-1.0));
    std::vector<double> c = {7, 7, 7, 7, 7};
    CHECK_THROWS_AS(pearson(x, c), ConstantSeries);
}

TEST_CASE("mode breaks ties lexicographically") {
    auto [mode, freq] = mode_and_accuracy({"b", "a", "b", "a", "c"});
    CHECK(mode == "a");
    CHECK(freq == doctest::Approx(0.4));
}
