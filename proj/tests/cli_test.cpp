#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "tabprobe/run.hpp"

using namespace tabprobe;
namespace fs = std::filesystem;

namespace {

std::string probe_bin() {
    const char* bin = std::getenv("PROBE_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "PROBE_BIN must point at the probe executable");
    return bin;
}

struct Tmp {
    fs::path dir;
    Tmp() {
        dir = fs::temp_directory_path() / ("probe-cli-" + std::to_string(::getpid()));
        fs::create_directories(dir);
    }
    ~Tmp() { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args, std::string* output = nullptr) {
    std::string cmd = probe_bin() + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::ostringstream out;
    char buf[512];
    while (fgets(buf, sizeof buf, pipe)) out << buf;
    int status = pclose(pipe);
    if (output) *output = out.str();
    return WEXITSTATUS(status);
}

std::string write_dataset(const Tmp& tmp, const TabularDataset& ds, const std::string& name) {
    std::string path = tmp.path(name);
    std::ofstream out(path);
    out << serialize_csv(ds);
    std::ofstream meta(path + ".meta.json");
    meta << R"({"target":"label"})";
    return path;
}

}  // namespace

TEST_CASE("mem subcommand: verbatim evidence, exit 0, grid on stdout") {
    Tmp tmp;
    auto csv = write_dataset(tmp, testutil::make_synthetic(120, 41), "data.csv");
    std::string output;
    int code = run("mem " + csv + " --model sim:verbatim --out " + tmp.path("reports"), &output);
    CHECK(code == kExitOk);
    CHECK(output.find("✓") != std::string::npos);
    CHECK(fs::exists(tmp.path("reports") + "/grid.json"));
    CHECK(fs::exists(tmp.path("reports") + "/manifest.json"));
}

TEST_CASE("bad config exits 2") {
    std::string output;
    CHECK(run("mem /nonexistent.csv --model sim:verbatim --out /tmp/x", &output) ==
          kExitConfigError);
    CHECK(run("mem whatever.csv --model sim:bogus --out /tmp/x", &output) == kExitConfigError);
}

TEST_CASE("fewshot subcommand reports oracle accuracy 1.0") {
    Tmp tmp;
    auto csv = write_dataset(tmp, testutil::make_classification(100, 42), "clf.csv");
    std::string output;
    int code = run("fewshot " + csv + " --model sim:label-oracle --n 40 --out " +
                       tmp.path("fewshot.json"),
                   &output);
    CHECK(code == kExitOk);
    CHECK(output.find("accuracy 1") != std::string::npos);
    CHECK(fs::exists(tmp.path("fewshot.json")));
}

TEST_CASE("statlearn subcommand writes sweep json and plot csv") {
    Tmp tmp;
    std::string output;
    int code = run("statlearn --baselines-only --axis samples --reps 2 --queries 10 --out " +
                       tmp.path("sweep.json") + " --plot-csv " + tmp.path("sweep.csv"),
                   &output);
    CHECK(code == kExitOk);
    CHECK(fs::exists(tmp.path("sweep.json")));
    std::ifstream in(tmp.path("sweep.csv"));
    std::string header;
    std::getline(in, header);
    CHECK(header == "method,n_shots,mean_accuracy,ci_half_width");
}

TEST_CASE("transform and diff subcommands") {
    Tmp tmp;
    auto csv = write_dataset(tmp, testutil::make_synthetic(30, 43), "data.csv");
    int code = run("transform " + csv + " --level perturbed --seed 3 --out " + tmp.path("p.csv"));
    CHECK(code == kExitOk);
    CHECK(fs::exists(tmp.path("p.csv")));

    std::ofstream(tmp.path("a.txt")) << "12.5,setosa";
    std::ofstream(tmp.path("b.txt")) << "12.9,setosa";
    std::string output;
    CHECK(run("diff " + tmp.path("a.txt") + " " + tmp.path("b.txt"), &output) == kExitOk);
    CHECK(output.find("setosa") != std::string::npos);
}

TEST_CASE("grid subcommand renders stored reports") {
    Tmp tmp;
    auto csv = write_dataset(tmp, testutil::make_synthetic(80, 44), "data.csv");
    REQUIRE(run("mem " + csv + " --model sim:mode --tests row,first-token --out " +
                tmp.path("reports")) == kExitOk);
    std::string output;
    int code = run("grid " + tmp.path("reports") + "/data_row.json " + tmp.path("reports") +
                       "/data_first_token.json",
                   &output);
    CHECK(code == kExitOk);
    CHECK(output.find("row_completion") != std::string::npos);
    CHECK(output.find("✗") != std::string::npos);
}

TEST_CASE("timeseries subcommand prints a per-year table") {
    Tmp tmp;
    std::ofstream series(tmp.path("series.csv"));
    series << "date,value\n";
    double value = 50.0;
    for (int i = 0; i < 60; ++i) {
        series << "2020-" << (i / 28 + 1 < 10 ? "0" : "") << i / 28 + 1 << "-"
               << (i % 28 + 1 < 10 ? "0" : "") << i % 28 + 1 << "," << value << "\n";
        value *= 1.002;
    }
    series.close();
    std::string output;
    int code = run("timeseries " + tmp.path("series.csv") +
                       " --model sim:majority:7.7 --years 2020",
                   &output);
    CHECK(code == kExitOk);
    CHECK(output.find("2020") != std::string::npos);
    CHECK(output.find("baseline") != std::string::npos);
}
