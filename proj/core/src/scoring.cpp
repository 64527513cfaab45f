#include "tabprobe/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "tabprobe/errors.hpp"
#include "tabprobe/util.hpp"

namespace tabprobe {

int levenshtein(const std::string& a, const std::string& b) {
    std::vector<char32_t> ua = utf8_decode(a);
    std::vector<char32_t> ub = utf8_decode(b);
    if (ua.size() < ub.size()) std::swap(ua, ub);  // ub is the shorter one
    std::vector<int> prev(ub.size() + 1), curr(ub.size() + 1);
    for (size_t j = 0; j <= ub.size(); ++j) prev[j] = static_cast<int>(j);
    for (size_t i = 1; i <= ua.size(); ++i) {
        curr[0] = static_cast<int>(i);
        for (size_t j = 1; j <= ub.size(); ++j) {
            int sub = prev[j - 1] + (ua[i - 1] == ub[j - 1] ? 0 : 1);
            curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, sub});
        }
        std::swap(prev, curr);
    }
    return prev[ub.size()];
}

Alignment align(const std::string& a, const std::string& b) {
    std::vector<char32_t> ua = utf8_decode(a);
    std::vector<char32_t> ub = utf8_decode(b);
    const size_t n = ua.size(), m = ub.size();
    // Full DP table with backpointers; inputs here are prompt-sized strings.
    std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1));
    for (size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
    for (size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
    for (size_t i = 1; i <= n; ++i)
        for (size_t j = 1; j <= m; ++j)
            d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                                d[i - 1][j - 1] + (ua[i - 1] == ub[j - 1] ? 0 : 1)});

    // Traceback, then coalesce runs of equal status.
    std::vector<AlignmentSegment::Status> ops;
    std::vector<std::pair<char32_t, char32_t>> chars;  // (ref, out); 0 marks absent side
    size_t i = n, j = m;
    while (i > 0 || j > 0) {
        if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + (ua[i - 1] == ub[j - 1] ? 0 : 1)) {
            ops.push_back(ua[i - 1] == ub[j - 1] ? AlignmentSegment::Match
                                                 : AlignmentSegment::Substitution);
            chars.emplace_back(ua[i - 1], ub[j - 1]);
            --i;
            --j;
        } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
            ops.push_back(AlignmentSegment::Deletion);  // present in reference, missing in output
            chars.emplace_back(ua[i - 1], 0);
            --i;
        } else {
            ops.push_back(AlignmentSegment::Insertion);
            chars.emplace_back(0, ub[j - 1]);
            --j;
        }
    }
    std::reverse(ops.begin(), ops.end());
    std::reverse(chars.begin(), chars.end());

    Alignment result;
    result.distance = d[n][m];
    for (size_t k = 0; k < ops.size();) {
        size_t end = k;
        while (end < ops.size() && ops[end] == ops[k]) ++end;
        AlignmentSegment seg;
        seg.status = ops[k];
        std::vector<char32_t> ref, out;
        for (size_t t = k; t < end; ++t) {
            if (chars[t].first) ref.push_back(chars[t].first);
            if (chars[t].second) out.push_back(chars[t].second);
        }
        seg.reference = utf8_encode(ref);
        seg.output = utf8_encode(out);
        result.segments.push_back(std::move(seg));
        k = end;
    }
    return result;
}

std::string render_alignment_ansi(const Alignment& alignment) {
    std::string out;
    for (const auto& seg : alignment.segments) {
        switch (seg.status) {
            case AlignmentSegment::Match: out += "\033[32m" + seg.output + "\033[0m"; break;
            case AlignmentSegment::Substitution:
            case AlignmentSegment::Insertion: out += "\033[31m" + seg.output + "\033[0m"; break;
            case AlignmentSegment::Deletion: out += "\033[35m" + seg.reference + "\033[0m"; break;
        }
    }
    return out;
}

std::string render_alignment_html(const Alignment& alignment) {
    auto escape = [](const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '<') out += "&lt;";
            else if (c == '>') out += "&gt;";
            else if (c == '&') out += "&amp;";
            else out.push_back(c);
        }
        return out;
    };
    std::string out = "<span class=\"diff\">";
    for (const auto& seg : alignment.segments) {
        const char* color = seg.status == AlignmentSegment::Match ? "green"
                            : seg.status == AlignmentSegment::Deletion ? "violet"
                                                                       : "red";
        const std::string& text = seg.status == AlignmentSegment::Deletion ? seg.reference : seg.output;
        out += "<span style=\"color:" + std::string(color) + "\">" + escape(text) + "</span>";
    }
    out += "</span>";
    return out;
}

BinomialResult binomial_test(int successes, int trials, double baseline) {
    if (successes < 0 || trials < 0 || successes > trials)
        throw ConfigInvalid("binomial_test: need 0 <= k <= n");
    if (baseline < 0.0 || baseline > 1.0)
        throw ConfigInvalid("binomial_test: baseline probability outside [0, 1]");
    BinomialResult result;
    result.successes = successes;
    result.trials = trials;
    result.baseline = baseline;
    if (successes == 0) {
        result.p_value = 1.0;
        return result;
    }
    if (baseline == 0.0) {
        result.p_value = 1e-300;  // clamp; P[Bin >= k] = 0 for k > 0
        return result;
    }
    if (baseline == 1.0) {
        result.p_value = 1.0;
        return result;
    }
    // log-space sum of C(n,i) p^i (1-p)^(n-i) for i in [k, n]
    const double logp = std::log(baseline), logq = std::log1p(-baseline);
    double max_term = -HUGE_VAL;
    std::vector<double> terms;
    terms.reserve(static_cast<size_t>(trials - successes + 1));
    for (int i = successes; i <= trials; ++i) {
        double lt = std::lgamma(trials + 1.0) - std::lgamma(i + 1.0) -
                    std::lgamma(trials - i + 1.0) + i * logp + (trials - i) * logq;
        terms.push_back(lt);
        max_term = std::max(max_term, lt);
    }
    double sum = 0.0;
    for (double lt : terms) sum += std::exp(lt - max_term);
    double log_pvalue = max_term + std::log(sum);
    double p = std::exp(log_pvalue);
    result.p_value = std::clamp(p, 1e-300, 1.0);
    return result;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ConfigInvalid("pearson: need two equal-length series with >= 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw ConstantSeries("pearson: constant input series");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::pair<std::string, double> mode_and_accuracy(const std::vector<std::string>& values) {
    if (values.empty()) throw ConfigInvalid("mode_and_accuracy: empty input");
    std::map<std::string, int> counts;
    for (const auto& v : values) ++counts[v];
    const std::string* best = nullptr;
    int best_count = 0;
    for (const auto& [value, count] : counts) {
        if (count > best_count) {  // std::map iterates lexicographically, so ties keep the smaller key
            best = &value;
            best_count = count;
        }
    }
    return {*best, static_cast<double>(best_count) / static_cast<double>(values.size())};
}

}  // namespace tabprobe
