#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <optional>
#include <string>
#include <vector>

#include "tabprobe/dataset.hpp"

namespace tabprobe {

enum class TransformLevel { Original, Perturbed, Task, Statistical };

TransformLevel transform_level_from_string(const std::string& s);
const char* to_string(TransformLevel level);

struct TransformSpec {
    // feature name -> task-level name
    std::map<std::string, std::string> rename_map;
    // per-feature raw value -> recoded value (must be injective per feature)
    std::map<std::string, std::map<std::string, std::string>> recode_maps;
    // features never perturbed
    std::vector<std::string> perturb_exclude;
    // features whose integer semantics exempt them from two-decimal rounding
    std::vector<std::string> integer_features;
    // fail on values missing from a recode map instead of passing them through
    bool strict_recode = false;
    uint64_t seed = 0;

    static TransformSpec from_json_text(const std::string& text);
    std::string to_json_text() const;
};

struct StandardizationRecord {
    struct NumericStats {
        double mean = 0.0;
        double stddev = 1.0;
        bool constant = false;
    };
    std::map<std::string, NumericStats> numeric;                        // by task-level feature name
    std::map<std::string, std::map<std::string, int>> categorical;      // value -> integer code
    std::map<std::string, std::string> renamed;                          // task name -> X1..Xn / Y
};

struct PerturbResult {
    TabularDataset dataset;
    // values left unchanged because no single-digit change stays within the
    // 2% relative-error budget (e.g. single-digit integers)
    std::vector<std::string> warnings;
};

// Appendix-level digit perturbation: every non-zero numeric cell outside
// perturb_exclude changes in at least one digit with relative error <= 2%
// (target ~1%), format preserved; identifiers are replaced with same-format
// values absent from the original column; zeros and categoricals unchanged.
PerturbResult perturb(const TabularDataset& dataset, const TransformSpec& spec);

// Rename features, recode categorical values, round numeric values to two
// decimals (integer-marked features exempt).
TabularDataset to_task(const TabularDataset& dataset, const TransformSpec& spec);

// Standardize numerics (population std), integer-code categoricals by first
// appearance, rename features X1..Xn and the target Y. Numeric text at four
// decimal places.
std::pair<TabularDataset, StandardizationRecord> to_statistical(const TabularDataset& dataset);

// Original = identity, Perturbed = perturb, Task = to_task . perturb,
// Statistical = to_statistical . to_task . perturb.
TabularDataset pipeline(const TabularDataset& dataset, TransformLevel level,
                        const TransformSpec& spec,
                        StandardizationRecord* record = nullptr);

// Perturbs a single numeric cell; exposed for direct property testing.
// Returns the perturbed cell, or std::nullopt when no admissible single-digit
// change exists.
std::optional<CellValue> perturb_numeric_cell(const CellValue& cell, std::mt19937_64& rng);

}  // namespace tabprobe
