#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tabprobe {

// Edit distance over Unicode scalar values (multi-byte characters count once).
int levenshtein(const std::string& a, const std::string& b);

struct AlignmentSegment {
    enum Status { Match, Substitution, Insertion, Deletion };
    Status status;
    std::string reference;  // span on the reference side ("a")
    std::string output;     // span on the output side ("b")
};

// Character-level alignment of a reference string against a model output.
// Concatenated reference spans reproduce `a`; output spans reproduce `b`;
// per-segment costs sum to levenshtein(a, b).
struct Alignment {
    std::vector<AlignmentSegment> segments;
    int distance = 0;
};

Alignment align(const std::string& a, const std::string& b);

// Terminal / HTML rendering of an alignment: green match, red substitution
// or insertion, violet deletion.
std::string render_alignment_ansi(const Alignment& alignment);
std::string render_alignment_html(const Alignment& alignment);

struct BinomialResult {
    int successes = 0;
    int trials = 0;
    double baseline = 0.0;
    double p_value = 1.0;  // one-sided, P[Bin(n, p0) >= k]
};

// Exact one-sided binomial test, log-space summation. p-values are clamped
// below at 1e-300.
BinomialResult binomial_test(int successes, int trials, double baseline);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Most frequent value (lexicographic tie-break) and its frequency.
std::pair<std::string, double> mode_and_accuracy(const std::vector<std::string>& values);

}  // namespace tabprobe
