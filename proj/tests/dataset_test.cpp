#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "tabprobe/dataset.hpp"
#include "tabprobe/errors.hpp"

using namespace tabprobe;

TEST_CASE("csv parsing handles quoting and reports ragged rows") {
    auto ds = load_csv_text("a,b,c\n1,\"x,y\",3\n4,\"he said \"\"hi\"\"\",6\n");
    CHECK(ds.n_rows() == 2);
    CHECK(ds.rows[0][1].raw == "x,y");
    CHECK(ds.rows[1][1].raw == "he said \"hi\"");

    CHECK_THROWS_AS(load_csv_text("a,b\n1,2,3\n"), RaggedRow);
    CHECK_THROWS_AS(load_csv_text(""), MissingHeader);
    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), IoFailure);
}

TEST_CASE("cell values keep raw text and parse decimals") {
    auto c = CellValue::from_raw("12.340");
    CHECK(c.raw == "12.340");
    CHECK(c.numeric == doctest::Approx(12.34));
    CHECK(c.decimal_places == 3);
    CHECK(CellValue::from_raw("NaN").is_missing());
    CHECK(CellValue::from_raw("").is_missing());
    CHECK_FALSE(CellValue::from_raw("abc").numeric.has_value());
}

TEST_CASE("schema inference: numeric, categorical, identifier") {
    auto ds = load_csv_text(
        "user_id,height,city\n"
        "u1,170.2,Rome\n"
        "u2,165.0,Oslo\n"
        "u3,181.7,Rome\n"
        "u4,176.4,Kyiv\n");
    ds.columns = infer_schema(ds);
    CHECK(ds.columns[0].kind == ColumnKind::Identifier);
    CHECK(ds.columns[1].kind == ColumnKind::Numeric);
    CHECK(ds.columns[2].kind == ColumnKind::Categorical);
    CHECK(ds.columns[2].categories == std::vector<std::string>{"Rome", "Oslo", "Kyiv"});
}

TEST_CASE("serialization round-trips byte for byte") {
    auto ds = testutil::make_synthetic(40, 3);
    std::string text = serialize_csv(ds);
    auto again = load_csv_text(text, {}, ds.name);
    CHECK(serialize_csv(again) == text);
}

TEST_CASE("split_at partitions the serialization exactly") {
    auto ds = testutil::make_synthetic(25, 4);
    auto [prefix, suffix] = split_at(ds, 7, 5);
    CHECK(prefix + suffix == serialize_csv(ds));
    CHECK(suffix.substr(0, 5) != "");  // split lands inside row 7
}

TEST_CASE("kv rendering and the prediction scaffold") {
    auto ds = load_csv_text("age,bmi,outcome\n50,27.1,1\n31,22.8,0\n");
    ds.target_feature = "outcome";
    CHECK(render_row_kv(ds, 0) == "age = 50, bmi = 27.1, outcome = 1");
    CHECK(render_row_kv(ds, 0, std::string("outcome")) == "IF age = 50, bmi = 27.1 THEN outcome =");
    CHECK(render_row_kv(ds, 1, std::string("bmi")) == "age = 31, outcome = 0");

    auto tiny = load_csv_text("y\n1\n");
    tiny.target_feature = "y";
    CHECK_THROWS_AS(render_row_kv(tiny, 0, std::string("y")), DegenerateRow);
}

TEST_CASE("metadata sidecar overrides schema and target") {
    auto ds = load_csv_text("a,b\n1,x\n2,y\n");
    apply_metadata_json(ds, R"({"name":"demo","target":"b","columns":{"a":"categorical"}})");
    CHECK(ds.name == "demo");
    CHECK(ds.target_feature == "b");
    CHECK(ds.columns[0].kind == ColumnKind::Categorical);
    CHECK_THROWS_AS(apply_metadata_json(ds, R"({"target":"zz"})"), UnknownFeature);
}

TEST_CASE("feature lookup errors") {
    auto ds = testutil::make_synthetic(10, 5);
    CHECK_THROWS_AS(ds.feature_index("nope"), UnknownFeature);
    CHECK_THROWS_AS(ds.cell(999, "mass"), IndexOutOfRange);
}
