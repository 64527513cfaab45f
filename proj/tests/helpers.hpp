#pragma once

// Shared synthetic-data builders for the test binaries.

#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tabprobe/dataset.hpp"
#include "tabprobe/util.hpp"

namespace testutil {

// High-entropy dataset: an id column, two numeric features with 4-6
// significant digits, a unique alphanumeric code and a binary label. All
// rows distinct.
inline tabprobe::TabularDataset make_synthetic(size_t n_rows, uint64_t seed,
                                               const std::string& name = "synthetic") {
    auto rng = tabprobe::make_rng(seed, "synthetic-data");
    std::uniform_real_distribution<double> small(10.0, 99.0);
    std::uniform_real_distribution<double> large(1000.0, 9999.0);
    std::uniform_int_distribution<int> digit(0, 9);
    std::uniform_int_distribution<int> letter(0, 25);

    std::ostringstream csv;
    csv << "rid,mass,volume,code,label\n";
    for (size_t i = 0; i < n_rows; ++i) {
        std::string code;
        for (int j = 0; j < 3; ++j) code += static_cast<char>('a' + letter(rng));
        for (int j = 0; j < 6; ++j) code += static_cast<char>('0' + digit(rng));
        csv << "R" << 1000 + i << "," << tabprobe::format_fixed(small(rng), 3) << ","
            << tabprobe::format_fixed(large(rng), 2) << "," << code << ","
            << (digit(rng) < 5 ? "yes" : "no") << "\n";
    }
    auto ds = tabprobe::load_csv_text(csv.str(), {}, name);
    ds.target_feature = "label";
    return ds;
}

// Learnable classification data: numeric features with a clean linear
// boundary (margin enforced), one categorical nuisance feature. Suitable
// for checking that accuracy survives the transform pipeline.
inline tabprobe::TabularDataset make_classification(size_t n_rows, uint64_t seed,
                                                    const std::string& name = "clf") {
    auto rng = tabprobe::make_rng(seed, "classification-data");
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const char* colors[] = {"red", "green", "blue"};
    std::uniform_int_distribution<int> color(0, 2);

    std::ostringstream csv;
    csv << "f1,f2,f3,hue,label\n";
    size_t produced = 0;
    while (produced < n_rows) {
        double a = unit(rng), b = unit(rng), c = unit(rng);
        double score = 1.5 * a - 2.0 * b + 0.8 * c;
        if (std::abs(score) < 0.25) continue;  // margin keeps all levels separable
        csv << tabprobe::format_fixed(50.0 + 20.0 * a, 3) << ","
            << tabprobe::format_fixed(50.0 + 20.0 * b, 3) << ","
            << tabprobe::format_fixed(50.0 + 20.0 * c, 3) << "," << colors[color(rng)] << ","
            << (score >= 0 ? "pos" : "neg") << "\n";
        ++produced;
    }
    auto ds = tabprobe::load_csv_text(csv.str(), {}, name);
    ds.target_feature = "label";
    return ds;
}

// Dataset with exact class proportions, for stratification checks.
inline tabprobe::TabularDataset make_proportioned(const std::vector<std::pair<std::string, int>>& classes,
                                                  uint64_t seed) {
    auto rng = tabprobe::make_rng(seed, "proportioned");
    std::uniform_real_distribution<double> value(0.0, 100.0);
    std::ostringstream csv;
    csv << "x,label\n";
    for (const auto& [label, count] : classes)
        for (int i = 0; i < count; ++i)
            csv << tabprobe::format_fixed(value(rng), 2) << "," << label << "\n";
    auto ds = tabprobe::load_csv_text(csv.str(), {}, "proportioned");
    ds.target_feature = "label";
    return ds;
}

}  // namespace testutil
