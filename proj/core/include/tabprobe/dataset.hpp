#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tabprobe {

// A single cell. `raw` is the text exactly as it appeared in the file;
// `numeric`/`decimal_places` are set when the raw text parses as a plain
// decimal. Keeping the raw text is what lets perturbation and the
// memorization tests preserve formatting byte-for-byte.
struct CellValue {
    std::string raw;
    std::optional<double> numeric;
    std::optional<int> decimal_places;

    static CellValue from_raw(std::string raw);
    bool is_missing() const;  // empty string or the literal "NaN"
    bool operator==(const CellValue& other) const { return raw == other.raw; }
};

struct ColumnKind {
    enum Kind { Numeric, Categorical, Identifier };
    Kind kind = Categorical;
    std::vector<std::string> categories;  // distinct raw values, first-appearance order
};

struct CsvOptions {
    char delimiter = ',';
    char quote = '"';
};

struct SchemaOptions {
    double uniqueness_threshold = 0.95;
    // Feature-name overrides: force a column kind regardless of inference.
    std::map<std::string, ColumnKind::Kind> overrides;
};

class TabularDataset {
public:
    std::string name;
    std::vector<std::string> feature_names;
    std::vector<ColumnKind> columns;
    std::vector<std::vector<CellValue>> rows;
    std::optional<std::string> target_feature;
    CsvOptions csv;

    size_t n_rows() const { return rows.size(); }
    size_t n_features() const { return feature_names.size(); }
    size_t feature_index(const std::string& feature) const;  // throws UnknownFeature
    std::optional<size_t> target_index() const;
    const CellValue& cell(size_t row, const std::string& feature) const;

    // Checks the structural invariants; throws on violation.
    void validate() const;
};

TabularDataset load_csv(const std::string& path, const CsvOptions& options = {});
TabularDataset load_csv_text(const std::string& text, const CsvOptions& options = {},
                             const std::string& name = "");

std::vector<ColumnKind> infer_schema(const TabularDataset& dataset, const SchemaOptions& options = {});

// One line of the canonical CSV serialization (no trailing newline).
std::string render_row_csv(const TabularDataset& dataset, size_t index);
std::string render_header(const TabularDataset& dataset);
// Full canonical serialization: header, then one line per row, each newline-terminated.
std::string serialize_csv(const TabularDataset& dataset);

// "Feature = Value" rendering. With hold_out == target the row becomes the
// prediction scaffold "IF f1 = v1, ... THEN target ="; with any other
// hold_out the named feature is omitted from the plain comma-joined list.
std::string render_row_kv(const TabularDataset& dataset, size_t index,
                          const std::optional<std::string>& hold_out = std::nullopt);

// Splits the canonical serialization at `char_offset` characters into row
// `row`'s line. prefix + suffix == serialize_csv(dataset).
std::pair<std::string, std::string> split_at(const TabularDataset& dataset, size_t row,
                                             size_t char_offset);

// Sidecar metadata (JSON): {"name": ..., "target": ..., "columns": {feature: "numeric"|...}}.
// load_csv_with_metadata reads `path` and, when present, `path + ".meta.json"`.
void apply_metadata_json(TabularDataset& dataset, const std::string& json_text);
TabularDataset load_csv_with_metadata(const std::string& path, const CsvOptions& options = {});

}  // namespace tabprobe
