#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace tabprobe {

inline constexpr int kReportSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

enum class Verdict { Evidence, NoEvidence, Ambiguous, NotApplicable };

const char* to_string(Verdict verdict);
Verdict verdict_from_string(const std::string& s);

// Automated stand-in for the paper's manual judgement: success rates are
// compared against what within-dataset duplicates alone could explain.
struct VerdictPolicy {
    double tau_hi = 0.10;     // evidence at success rate >= max(tau_hi, chance + margin)
    double tau_lo = 0.05;     // ambiguous band lower edge
    double margin = 0.05;     // duplicate-row correction added on top of the chance rate
    double alpha = 0.05;      // significance level for the first-token test
    double chance_cap = 0.90; // above this chance rate the test is not applicable

    Verdict judge_rate(int successes, int trials, double chance_rate) const;
    Verdict judge_p_value(double p_value) const;
    nlohmann::json to_json() const;
};

struct TrialRecord {
    int row = -1;
    std::string expected;
    std::string actual;
    int edit_distance = 0;
    bool ok = false;
    std::string error;  // non-empty when the chat call failed; excluded from n
};

struct TestReport {
    std::string test;
    std::string dataset;
    int trials = 0;     // n (errors excluded)
    int successes = 0;  // k
    std::optional<double> baseline;  // chance / mode baseline accuracy
    std::optional<double> p_value;   // first-token test only
    Verdict verdict = Verdict::NotApplicable;
    std::vector<TrialRecord> records;
    nlohmann::json config;  // echo: seeds, thresholds, model id
    nlohmann::json policy;

    double success_rate() const { return trials ? double(successes) / trials : 0.0; }
    nlohmann::json to_json() const;
    static TestReport from_json(const nlohmann::json& j);
};

}  // namespace tabprobe
