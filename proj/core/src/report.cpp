#include "tabprobe/report.hpp"

#include <algorithm>

#include "tabprobe/errors.hpp"

namespace tabprobe {

const char* to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::Evidence: return "evidence";
        case Verdict::NoEvidence: return "no-evidence";
        case Verdict::Ambiguous: return "ambiguous";
        case Verdict::NotApplicable: return "not-applicable";
    }
    return "not-applicable";
}

Verdict verdict_from_string(const std::string& s) {
    if (s == "evidence") return Verdict::Evidence;
    if (s == "no-evidence") return Verdict::NoEvidence;
    if (s == "ambiguous") return Verdict::Ambiguous;
    if (s == "not-applicable") return Verdict::NotApplicable;
    throw ConfigInvalid("unknown verdict: " + s);
}

Verdict VerdictPolicy::judge_rate(int successes, int trials, double chance_rate) const {
    if (trials == 0) return Verdict::NotApplicable;
    if (chance_rate >= chance_cap) return Verdict::NotApplicable;  // entropy guard
    double rate = static_cast<double>(successes) / trials;
    if (rate >= std::max(tau_hi, chance_rate + margin)) return Verdict::Evidence;
    if (rate >= std::max(tau_lo, chance_rate + margin / 2)) return Verdict::Ambiguous;
    return Verdict::NoEvidence;
}

Verdict VerdictPolicy::judge_p_value(double p_value) const {
    return p_value < alpha ? Verdict::Evidence : Verdict::NoEvidence;
}

nlohmann::json VerdictPolicy::to_json() const {
    return {{"tau_hi", tau_hi},
            {"tau_lo", tau_lo},
            {"margin", margin},
            {"alpha", alpha},
            {"chance_cap", chance_cap}};
}

nlohmann::json TestReport::to_json() const {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["tool_version"] = kToolVersion;
    j["test"] = test;
    j["dataset"] = dataset;
    j["n"] = trials;
    j["k"] = successes;
    if (baseline) j["baseline_accuracy"] = *baseline;
    if (p_value) j["p_value"] = *p_value;
    j["verdict"] = to_string(verdict);
    j["config"] = config;
    j["policy"] = policy;
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : records) {
        nlohmann::json rec{{"row", r.row},
                           {"expected", r.expected},
                           {"actual", r.actual},
                           {"edit_distance", r.edit_distance},
                           {"ok", r.ok}};
        if (!r.error.empty()) rec["error"] = r.error;
        recs.push_back(std::move(rec));
    }
    j["trials"] = std::move(recs);
    return j;
}

TestReport TestReport::from_json(const nlohmann::json& j) {
    if (j.value("schema_version", -1) != kReportSchemaVersion)
        throw SchemaMismatch("report schema version mismatch");
    TestReport report;
    report.test = j.at("test").get<std::string>();
    report.dataset = j.at("dataset").get<std::string>();
    report.trials = j.at("n").get<int>();
    report.successes = j.at("k").get<int>();
    if (j.contains("baseline_accuracy")) report.baseline = j.at("baseline_accuracy").get<double>();
    if (j.contains("p_value")) report.p_value = j.at("p_value").get<double>();
    report.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    report.config = j.value("config", nlohmann::json::object());
    report.policy = j.value("policy", nlohmann::json::object());
    for (const auto& rec : j.value("trials", nlohmann::json::array())) {
        TrialRecord r;
        r.row = rec.value("row", -1);
        r.expected = rec.value("expected", "");
        r.actual = rec.value("actual", "");
        r.edit_distance = rec.value("edit_distance", 0);
        r.ok = rec.value("ok", false);
        r.error = rec.value("error", "");
        report.records.push_back(std::move(r));
    }
    return report;
}

}  // namespace tabprobe
