#include "tabprobe/transforms.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "tabprobe/errors.hpp"
#include "tabprobe/util.hpp"

namespace tabprobe {

TransformLevel transform_level_from_string(const std::string& s) {
    std::string lower = to_lower(s);
    if (lower == "original") return TransformLevel::Original;
    if (lower == "perturbed") return TransformLevel::Perturbed;
    if (lower == "task") return TransformLevel::Task;
    if (lower == "statistical") return TransformLevel::Statistical;
    throw ConfigInvalid("unknown transform level: " + s);
}

const char* to_string(TransformLevel level) {
    switch (level) {
        case TransformLevel::Original: return "original";
        case TransformLevel::Perturbed: return "perturbed";
        case TransformLevel::Task: return "task";
        case TransformLevel::Statistical: return "statistical";
    }
    return "original";
}

TransformSpec TransformSpec::from_json_text(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    TransformSpec spec;
    if (j.contains("rename"))
        spec.rename_map = j.at("rename").get<std::map<std::string, std::string>>();
    if (j.contains("recode"))
        spec.recode_maps =
            j.at("recode").get<std::map<std::string, std::map<std::string, std::string>>>();
    if (j.contains("perturb_exclude"))
        spec.perturb_exclude = j.at("perturb_exclude").get<std::vector<std::string>>();
    if (j.contains("integer_features"))
        spec.integer_features = j.at("integer_features").get<std::vector<std::string>>();
    if (j.contains("strict_recode")) spec.strict_recode = j.at("strict_recode").get<bool>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<uint64_t>();
    // recode maps must be injective per feature
    for (const auto& [feature, map] : spec.recode_maps) {
        std::set<std::string> values;
        for (const auto& [from, to] : map)
            if (!values.insert(to).second)
                throw ConfigInvalid("recode map for '" + feature + "' is not injective");
    }
    return spec;
}

std::string TransformSpec::to_json_text() const {
    nlohmann::json j;
    j["rename"] = rename_map;
    j["recode"] = recode_maps;
    j["perturb_exclude"] = perturb_exclude;
    j["integer_features"] = integer_features;
    j["strict_recode"] = strict_recode;
    j["seed"] = seed;
    return j.dump(2);
}

std::optional<CellValue> perturb_numeric_cell(const CellValue& cell, std::mt19937_64& rng) {
    if (!cell.numeric || *cell.numeric == 0.0) return std::nullopt;
    const std::string& raw = cell.raw;
    const double magnitude = std::fabs(*cell.numeric);

    // digit positions and their place values
    size_t dot = raw.find('.');
    struct Candidate {
        size_t pos;
        char digit;
        double rel;
    };
    std::vector<Candidate> preferred, admissible;
    bool has_sign = raw[0] == '+' || raw[0] == '-';
    size_t int_start = has_sign ? 1 : 0;
    size_t int_end = dot == std::string::npos ? raw.size() : dot;
    for (size_t i = int_start; i < raw.size(); ++i) {
        if (i == dot) continue;
        char d = raw[i];
        if (!std::isdigit(static_cast<unsigned char>(d))) continue;
        int power;
        if (dot == std::string::npos || i < dot)
            power = static_cast<int>(int_end - 1 - i);
        else
            power = -static_cast<int>(i - dot);
        double place = std::pow(10.0, power);
        bool leading_int = (i == int_start) && (int_end - int_start > 1);
        for (char nd = '0'; nd <= '9'; ++nd) {
            if (nd == d) continue;
            if (leading_int && nd == '0') continue;  // keep the printed width
            double rel = std::fabs(nd - d) * place / magnitude;
            if (rel <= 0.0 || rel > 0.02) continue;
            Candidate c{i, nd, rel};
            admissible.push_back(c);
            if (rel >= 0.005 && rel <= 0.015) preferred.push_back(c);
        }
    }
    if (admissible.empty()) return std::nullopt;
    const std::vector<Candidate>& pool = preferred.empty() ? admissible : preferred;
    Candidate chosen{};
    if (preferred.empty()) {
        chosen = *std::min_element(pool.begin(), pool.end(), [](const auto& a, const auto& b) {
            return std::fabs(a.rel - 0.01) < std::fabs(b.rel - 0.01);
        });
    } else {
        std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
        chosen = pool[pick(rng)];
    }
    std::string out = raw;
    out[chosen.pos] = chosen.digit;
    return CellValue::from_raw(out);
}

namespace {

std::string deface_identifier(const std::string& raw, const std::set<std::string>& existing,
                              std::mt19937_64& rng) {
    std::uniform_int_distribution<int> digit(0, 9);
    std::uniform_int_distribution<int> nonzero(1, 9);
    std::uniform_int_distribution<int> letter(0, 25);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::string out = raw;
        bool first_digit = true;
        bool changed = false;
        for (char& c : out) {
            if (std::isdigit(static_cast<unsigned char>(c))) {
                // keep a non-zero lead so the printed width survives
                int nd = (first_digit && c != '0' && raw.size() > 1) ? nonzero(rng) : digit(rng);
                changed |= (char('0' + nd) != c);
                c = static_cast<char>('0' + nd);
                first_digit = false;
            } else if (std::isupper(static_cast<unsigned char>(c))) {
                char nc = static_cast<char>('A' + letter(rng));
                changed |= (nc != c);
                c = nc;
            } else if (std::islower(static_cast<unsigned char>(c))) {
                char nc = static_cast<char>('a' + letter(rng));
                changed |= (nc != c);
                c = nc;
            }
        }
        if (changed && !existing.count(out)) return out;
    }
    throw UnperturbableValue("cannot deface identifier value '" + raw + "'");
}

double round_half_away(double v, int places) {
    double scale = std::pow(10.0, places);
    return std::copysign(std::floor(std::fabs(v) * scale + 0.5) / scale, v);
}

}  // namespace

PerturbResult perturb(const TabularDataset& dataset, const TransformSpec& spec) {
    PerturbResult result;
    result.dataset = dataset;
    auto rng = make_rng(spec.seed, "perturb");
    std::set<std::string> excluded(spec.perturb_exclude.begin(), spec.perturb_exclude.end());
    for (size_t c = 0; c < dataset.n_features(); ++c) {
        if (excluded.count(dataset.feature_names[c])) continue;
        const ColumnKind& kind = dataset.columns[c];
        if (kind.kind == ColumnKind::Identifier) {
            std::set<std::string> existing;
            for (const auto& row : dataset.rows) existing.insert(row[c].raw);
            std::map<std::string, std::string> mapping;  // consistent per distinct value
            for (size_t r = 0; r < dataset.n_rows(); ++r) {
                const std::string& raw = dataset.rows[r][c].raw;
                if (raw.empty()) continue;
                auto it = mapping.find(raw);
                if (it == mapping.end())
                    it = mapping.emplace(raw, deface_identifier(raw, existing, rng)).first;
                result.dataset.rows[r][c] = CellValue::from_raw(it->second);
            }
        } else if (kind.kind == ColumnKind::Numeric) {
            for (size_t r = 0; r < dataset.n_rows(); ++r) {
                const CellValue& cell = dataset.rows[r][c];
                if (cell.is_missing() || !cell.numeric || *cell.numeric == 0.0) continue;
                auto perturbed = perturb_numeric_cell(cell, rng);
                if (!perturbed) {
                    result.warnings.push_back("unperturbable value '" + cell.raw + "' in feature '" +
                                              dataset.feature_names[c] + "' left unchanged");
                    continue;
                }
                result.dataset.rows[r][c] = std::move(*perturbed);
            }
        }
        // categorical cells are never perturbed
    }
    return result;
}

TabularDataset to_task(const TabularDataset& dataset, const TransformSpec& spec) {
    TabularDataset out = dataset;
    auto rng = make_rng(spec.seed, "task-noise");
    std::uniform_real_distribution<double> noise(-0.005, 0.005);
    std::set<std::string> integer_features(spec.integer_features.begin(),
                                           spec.integer_features.end());

    // renames
    std::set<std::string> new_names;
    for (size_t c = 0; c < out.n_features(); ++c) {
        auto it = spec.rename_map.find(dataset.feature_names[c]);
        if (it != spec.rename_map.end()) out.feature_names[c] = it->second;
        if (!new_names.insert(out.feature_names[c]).second)
            throw RenameCollision("renamed feature collides: " + out.feature_names[c]);
    }
    if (out.target_feature) {
        auto it = spec.rename_map.find(*out.target_feature);
        if (it != spec.rename_map.end()) out.target_feature = it->second;
    }

    for (size_t c = 0; c < dataset.n_features(); ++c) {
        const std::string& original_name = dataset.feature_names[c];
        const ColumnKind& kind = dataset.columns[c];
        auto recode_it = spec.recode_maps.find(original_name);
        if (kind.kind == ColumnKind::Numeric && !integer_features.count(original_name)) {
            for (auto& row : out.rows) {
                CellValue& cell = row[c];
                if (cell.is_missing() || !cell.numeric) continue;
                double rounded = round_half_away(*cell.numeric, 2);
                // noise of at most half an ulp at two decimals, re-rounded
                double noised = round_half_away(rounded + noise(rng), 2);
                cell = CellValue::from_raw(format_fixed(noised, 2));
            }
        } else if (recode_it != spec.recode_maps.end()) {
            for (auto& row : out.rows) {
                CellValue& cell = row[c];
                auto value_it = recode_it->second.find(cell.raw);
                if (value_it != recode_it->second.end()) {
                    cell = CellValue::from_raw(value_it->second);
                } else if (spec.strict_recode && !cell.is_missing()) {
                    throw RecodeUnknownValue("no recode for value '" + cell.raw + "' of feature '" +
                                             original_name + "'");
                }
            }
        }
    }

    // keep column kinds stable under renaming/recoding
    SchemaOptions schema;
    for (size_t c = 0; c < out.n_features(); ++c)
        schema.overrides[out.feature_names[c]] = dataset.columns[c].kind;
    out.columns = infer_schema(out, schema);
    return out;
}

std::pair<TabularDataset, StandardizationRecord> to_statistical(const TabularDataset& dataset) {
    if (dataset.rows.empty()) throw EmptyDataset("to_statistical: empty dataset");
    TabularDataset out = dataset;
    StandardizationRecord record;

    auto target_idx = dataset.target_index();
    int counter = 0;
    for (size_t c = 0; c < out.n_features(); ++c) {
        std::string new_name =
            (target_idx && c == *target_idx) ? "Y" : ("X" + std::to_string(++counter));
        record.renamed[dataset.feature_names[c]] = new_name;
        out.feature_names[c] = new_name;
    }
    if (out.target_feature) out.target_feature = "Y";

    for (size_t c = 0; c < dataset.n_features(); ++c) {
        const ColumnKind& kind = dataset.columns[c];
        const std::string& name = dataset.feature_names[c];
        if (kind.kind == ColumnKind::Numeric) {
            double sum = 0.0, count = 0.0;
            for (const auto& row : dataset.rows)
                if (!row[c].is_missing() && row[c].numeric) {
                    sum += *row[c].numeric;
                    count += 1.0;
                }
            if (count == 0.0) continue;
            double mean = sum / count;
            double var = 0.0;
            for (const auto& row : dataset.rows)
                if (!row[c].is_missing() && row[c].numeric)
                    var += (*row[c].numeric - mean) * (*row[c].numeric - mean);
            var /= count;  // population variance
            double stddev = std::sqrt(var);
            StandardizationRecord::NumericStats stats;
            stats.mean = mean;
            stats.constant = stddev == 0.0;
            stats.stddev = stats.constant ? 1.0 : stddev;
            record.numeric[name] = stats;
            for (auto& row : out.rows) {
                CellValue& cell = row[c];
                if (cell.is_missing() || !cell.numeric) continue;
                double z = stats.constant ? 0.0 : (*cell.numeric - mean) / stddev;
                cell = CellValue::from_raw(format_fixed(z, 4));
            }
        } else {
            // integer coding in first-appearance order
            std::map<std::string, int>& codes = record.categorical[name];
            std::vector<std::string> order;
            for (const auto& row : dataset.rows)
                if (!codes.count(row[c].raw)) {
                    codes[row[c].raw] = static_cast<int>(order.size());
                    order.push_back(row[c].raw);
                }
            for (auto& row : out.rows)
                row[c] = CellValue::from_raw(std::to_string(codes.at(row[c].raw)));
        }
    }
    out.columns = infer_schema(out);
    return {std::move(out), std::move(record)};
}

TabularDataset pipeline(const TabularDataset& dataset, TransformLevel level,
                        const TransformSpec& spec, StandardizationRecord* record) {
    switch (level) {
        case TransformLevel::Original: return dataset;
        case TransformLevel::Perturbed: return perturb(dataset, spec).dataset;
        case TransformLevel::Task: return to_task(perturb(dataset, spec).dataset, spec);
        case TransformLevel::Statistical: {
            auto [out, rec] = to_statistical(to_task(perturb(dataset, spec).dataset, spec));
            if (record) *record = std::move(rec);
            return std::move(out);
        }
    }
    throw ConfigInvalid("bad transform level");
}

}  // namespace tabprobe
