#include "tabprobe/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tabprobe/errors.hpp"
#include "tabprobe/util.hpp"

namespace tabprobe {

namespace {

bool parse_decimal(const std::string& raw, double& value, int& decimal_places) {
    if (raw.empty()) return false;
    size_t i = 0;
    if (raw[i] == '+' || raw[i] == '-') ++i;
    size_t int_digits = 0;
    while (i < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i]))) {
        ++i;
        ++int_digits;
    }
    size_t frac_digits = 0;
    if (i < raw.size() && raw[i] == '.') {
        ++i;
        while (i < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i]))) {
            ++i;
            ++frac_digits;
        }
    }
    if (i != raw.size() || int_digits + frac_digits == 0) return false;
    value = std::strtod(raw.c_str(), nullptr);
    decimal_places = static_cast<int>(frac_digits);
    return true;
}

bool needs_quoting(const std::string& raw, const CsvOptions& options) {
    return raw.find(options.delimiter) != std::string::npos ||
           raw.find(options.quote) != std::string::npos || raw.find('\n') != std::string::npos ||
           raw.find('\r') != std::string::npos;
}

std::string quote_field(const std::string& raw, const CsvOptions& options) {
    if (!needs_quoting(raw, options)) return raw;
    std::string out;
    out.push_back(options.quote);
    for (char c : raw) {
        if (c == options.quote) out.push_back(options.quote);
        out.push_back(c);
    }
    out.push_back(options.quote);
    return out;
}

// Parses one logical CSV record starting at `pos`. Returns false at end of input.
bool next_record(const std::string& text, size_t& pos, const CsvOptions& options,
                 std::vector<std::string>& fields, size_t& line_number, size_t& lines_consumed) {
    fields.clear();
    lines_consumed = 1;
    if (pos >= text.size()) return false;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    while (pos < text.size()) {
        char c = text[pos];
        if (in_quotes) {
            if (c == options.quote) {
                if (pos + 1 < text.size() && text[pos + 1] == options.quote) {
                    field.push_back(options.quote);
                    pos += 2;
                } else {
                    in_quotes = false;
                    ++pos;
                }
            } else {
                if (c == '\n') ++lines_consumed;
                field.push_back(c);
                ++pos;
            }
            any = true;
            continue;
        }
        if (c == options.quote && field.empty()) {
            in_quotes = true;
            any = true;
            ++pos;
        } else if (c == options.delimiter) {
            fields.push_back(std::move(field));
            field.clear();
            any = true;
            ++pos;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && pos + 1 < text.size() && text[pos + 1] == '\n') ++pos;
            ++pos;
            fields.push_back(std::move(field));
            return true;
        } else {
            field.push_back(c);
            any = true;
            ++pos;
        }
    }
    if (in_quotes) throw IoFailure("unterminated quoted field at line " + std::to_string(line_number));
    if (!any && fields.empty()) return false;
    fields.push_back(std::move(field));
    return true;
}

}  // namespace

CellValue CellValue::from_raw(std::string raw) {
    CellValue cell;
    cell.raw = std::move(raw);
    double value;
    int places;
    if (parse_decimal(cell.raw, value, places)) {
        cell.numeric = value;
        cell.decimal_places = places;
    }
    return cell;
}

bool CellValue::is_missing() const { return raw.empty() || raw == "NaN"; }

size_t TabularDataset::feature_index(const std::string& feature) const {
    auto it = std::find(feature_names.begin(), feature_names.end(), feature);
    if (it == feature_names.end()) throw UnknownFeature("unknown feature: " + feature);
    return static_cast<size_t>(it - feature_names.begin());
}

std::optional<size_t> TabularDataset::target_index() const {
    if (!target_feature) return std::nullopt;
    return feature_index(*target_feature);
}

const CellValue& TabularDataset::cell(size_t row, const std::string& feature) const {
    if (row >= rows.size()) throw IndexOutOfRange("row index out of range");
    return rows[row][feature_index(feature)];
}

void TabularDataset::validate() const {
    std::set<std::string> seen;
    for (const auto& f : feature_names) {
        if (f.empty()) throw ConfigInvalid("empty feature name");
        if (!seen.insert(f).second) throw ConfigInvalid("duplicate feature name: " + f);
    }
    for (size_t r = 0; r < rows.size(); ++r)
        if (rows[r].size() != feature_names.size())
            throw RaggedRow("row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                            " cells, expected " + std::to_string(feature_names.size()));
    if (target_feature) feature_index(*target_feature);
}

TabularDataset load_csv_text(const std::string& text, const CsvOptions& options,
                             const std::string& name) {
    TabularDataset ds;
    ds.name = name;
    ds.csv = options;
    size_t pos = 0, line = 1, consumed = 0;
    std::vector<std::string> fields;
    if (!next_record(text, pos, options, fields, line, consumed))
        throw MissingHeader("file is empty, expected a header line");
    ds.feature_names = fields;
    line += consumed;
    while (next_record(text, pos, options, fields, line, consumed)) {
        if (fields.size() == 1 && fields[0].empty() && pos >= text.size()) break;  // trailing newline
        if (fields.size() != ds.feature_names.size())
            throw RaggedRow("line " + std::to_string(line) + ": got " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(ds.feature_names.size()));
        std::vector<CellValue> row;
        row.reserve(fields.size());
        for (auto& f : fields) row.push_back(CellValue::from_raw(std::move(f)));
        ds.rows.push_back(std::move(row));
        line += consumed;
    }
    ds.validate();
    ds.columns = infer_schema(ds);
    return ds;
}

TabularDataset load_csv(const std::string& path, const CsvOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string name = path;
    if (auto slash = name.find_last_of("/\\"); slash != std::string::npos) name = name.substr(slash + 1);
    if (auto dot = name.rfind('.'); dot != std::string::npos) name = name.substr(0, dot);
    return load_csv_text(buf.str(), options, name);
}

std::vector<ColumnKind> infer_schema(const TabularDataset& dataset, const SchemaOptions& options) {
    if (dataset.rows.empty()) throw EmptyDataset("cannot infer schema of an empty dataset");
    std::vector<ColumnKind> kinds(dataset.n_features());
    for (size_t c = 0; c < dataset.n_features(); ++c) {
        ColumnKind kind;
        std::set<std::string> distinct;
        std::vector<std::string> order;
        bool all_numeric = true;
        size_t non_missing = 0;
        for (const auto& row : dataset.rows) {
            const CellValue& cell = row[c];
            if (distinct.insert(cell.raw).second) order.push_back(cell.raw);
            if (cell.is_missing()) continue;
            ++non_missing;
            if (!cell.numeric) all_numeric = false;
        }
        double ratio = static_cast<double>(distinct.size()) / static_cast<double>(dataset.n_rows());
        const std::string& fname = dataset.feature_names[c];
        std::string lower = to_lower(fname);
        bool id_name = lower == "id" || (lower.size() > 2 && lower.compare(lower.size() - 2, 2, "id") == 0);
        auto override_it = options.overrides.find(fname);
        if (override_it != options.overrides.end()) {
            kind.kind = override_it->second;
        } else if (ratio >= options.uniqueness_threshold && id_name) {
            kind.kind = ColumnKind::Identifier;
        } else if (all_numeric && non_missing > 0) {
            kind.kind = ColumnKind::Numeric;
        } else {
            kind.kind = ColumnKind::Categorical;
        }
        if (kind.kind == ColumnKind::Categorical) kind.categories = order;
        kinds[c] = std::move(kind);
    }
    return kinds;
}

std::string render_header(const TabularDataset& dataset) {
    std::vector<std::string> quoted;
    quoted.reserve(dataset.n_features());
    for (const auto& f : dataset.feature_names) quoted.push_back(quote_field(f, dataset.csv));
    return join(quoted, std::string(1, dataset.csv.delimiter));
}

std::string render_row_csv(const TabularDataset& dataset, size_t index) {
    if (index >= dataset.n_rows()) throw IndexOutOfRange("row index out of range");
    std::vector<std::string> quoted;
    quoted.reserve(dataset.n_features());
    for (const auto& cell : dataset.rows[index]) quoted.push_back(quote_field(cell.raw, dataset.csv));
    return join(quoted, std::string(1, dataset.csv.delimiter));
}

std::string serialize_csv(const TabularDataset& dataset) {
    std::string out = render_header(dataset);
    out.push_back('\n');
    for (size_t r = 0; r < dataset.n_rows(); ++r) {
        out += render_row_csv(dataset, r);
        out.push_back('\n');
    }
    return out;
}

std::string render_row_kv(const TabularDataset& dataset, size_t index,
                          const std::optional<std::string>& hold_out) {
    if (index >= dataset.n_rows()) throw IndexOutOfRange("row index out of range");
    std::optional<size_t> hold_idx;
    if (hold_out) hold_idx = dataset.feature_index(*hold_out);
    std::vector<std::string> parts;
    for (size_t c = 0; c < dataset.n_features(); ++c) {
        if (hold_idx && c == *hold_idx) continue;
        parts.push_back(dataset.feature_names[c] + " = " + dataset.rows[index][c].raw);
    }
    bool scaffold = hold_out && dataset.target_feature && *hold_out == *dataset.target_feature;
    if (scaffold) {
        if (parts.empty()) throw DegenerateRow("no features left to condition on");
        return "IF " + join(parts, ", ") + " THEN " + *dataset.target_feature + " =";
    }
    return join(parts, ", ");
}

std::pair<std::string, std::string> split_at(const TabularDataset& dataset, size_t row,
                                             size_t char_offset) {
    if (row >= dataset.n_rows()) throw IndexOutOfRange("row index out of range");
    std::string row_text = render_row_csv(dataset, row);
    if (char_offset > row_text.size()) throw IndexOutOfRange("char offset beyond row length");
    std::string prefix = render_header(dataset);
    prefix.push_back('\n');
    for (size_t r = 0; r < row; ++r) {
        prefix += render_row_csv(dataset, r);
        prefix.push_back('\n');
    }
    prefix += row_text.substr(0, char_offset);
    std::string suffix = row_text.substr(char_offset);
    suffix.push_back('\n');
    for (size_t r = row + 1; r < dataset.n_rows(); ++r) {
        suffix += render_row_csv(dataset, r);
        suffix.push_back('\n');
    }
    return {prefix, suffix};
}

void apply_metadata_json(TabularDataset& dataset, const std::string& json_text) {
    auto meta = nlohmann::json::parse(json_text);
    if (meta.contains("name")) dataset.name = meta.at("name").get<std::string>();
    if (meta.contains("target")) {
        dataset.target_feature = meta.at("target").get<std::string>();
        dataset.feature_index(*dataset.target_feature);
    }
    if (meta.contains("columns")) {
        SchemaOptions options;
        for (auto& [feature, kind] : meta.at("columns").items()) {
            std::string k = kind.get<std::string>();
            if (k == "numeric")
                options.overrides[feature] = ColumnKind::Numeric;
            else if (k == "categorical")
                options.overrides[feature] = ColumnKind::Categorical;
            else if (k == "identifier")
                options.overrides[feature] = ColumnKind::Identifier;
            else
                throw ConfigInvalid("unknown column kind: " + k);
        }
        dataset.columns = infer_schema(dataset, options);
    }
}

TabularDataset load_csv_with_metadata(const std::string& path, const CsvOptions& options) {
    TabularDataset ds = load_csv(path, options);
    std::ifstream meta(path + ".meta.json", std::ios::binary);
    if (meta) {
        std::ostringstream buf;
        buf << meta.rdbuf();
        apply_metadata_json(ds, buf.str());
    }
    return ds;
}

}  // namespace tabprobe
