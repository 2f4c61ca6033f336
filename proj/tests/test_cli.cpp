#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>

#include "support/fixtures.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string output;
};

Result run(const std::string& args) {
    const std::string cmd = std::string(TOXTOPIC_CLI_PATH) + " " + args + " 2>&1";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    while (const std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.output.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

// Copy of the fixture config with fewer sweeps and a private output directory.
fs::path quick_config(const fs::path& dir) {
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto j = nlohmann::json::parse(toxtopic::io::read_file(fixtures::data_dir() / "fixture.json"));
    j["dataset"]["path"] = (fixtures::data_dir() / "fixture_corpus.csv").string();
    j["experiment"]["baselines"][0]["path"] =
        (fixtures::data_dir() / "fixture_baseline_gpt4.csv").string();
    j["lda"]["iterations"] = 100;
    j["output_dir"] = (dir / "out").string();
    const auto path = dir / "config.json";
    toxtopic::io::write_file(path, j.dump(2));
    return path;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
    CHECK(run("").code == 1);
    CHECK(run("frobnicate").code == 1);
    CHECK(run("pipeline").code == 1);
    CHECK(run("topics --config x.json").code == 1);
    CHECK(run("--help").code == 0);
}

TEST_CASE("missing config exits 2, invalid config exits 1") {
    const auto dir = fs::temp_directory_path() / "toxtopic_cli_errors";
    fs::remove_all(dir);
    fs::create_directories(dir);
    CHECK(run("pipeline --config " + (dir / "absent.json").string()).code == 2);

    toxtopic::io::write_file(dir / "bad.json", R"({"dataset": {"path": "x.csv"}, "lda": {"k": 0}})");
    CHECK(run("pipeline --config " + (dir / "bad.json").string()).code == 1);

    toxtopic::io::write_file(dir / "nodata.json", R"({"dataset": {"path": "missing.csv"}})");
    const auto r = run("pipeline --config " + (dir / "nodata.json").string());
    CHECK(r.code == 2);
    CHECK(r.output.find("load_dataset") != std::string::npos);

    toxtopic::io::write_file(dir / "bad.csv", "instance_id,text\n1,hi\n");
    toxtopic::io::write_file(dir / "schema.json", R"({"dataset": {"path": "bad.csv"}})");
    CHECK(run("pipeline --config " + (dir / "schema.json").string()).code == 1);
    fs::remove_all(dir);
}

TEST_CASE("pipeline writes the report files") {
    const auto dir = fs::temp_directory_path() / "toxtopic_cli_pipeline";
    const auto cfg = quick_config(dir);
    const auto r = run("pipeline --config " + cfg.string());
    INFO(r.output);
    REQUIRE(r.code == 0);
    CHECK(r.output.find("full: train=16 test=4") != std::string::npos);
    CHECK(r.output.find("TPR=") != std::string::npos);
    for (const char* f : {"seed_f1.csv", "micro_stats.csv", "baseline_comparison.csv",
                          "demographic_gender.csv", "demographic_ethnicity.csv",
                          "confusion_full.csv", "topics.txt"})
        CHECK(fs::exists(dir / "out" / f));
    fs::remove_all(dir);
}

TEST_CASE("topics subcommand") {
    const auto dir = fs::temp_directory_path() / "toxtopic_cli_topics";
    const auto cfg = quick_config(dir);
    const auto r = run("topics --config " + cfg.string() + " --k 2 --out " + (dir / "t").string());
    REQUIRE(r.code == 0);
    const auto body = toxtopic::io::read_file(dir / "t" / "topics.txt");
    CHECK(body == r.output);
    CHECK(body.starts_with("0 : "));
    CHECK(body.find("\n1 : ") != std::string::npos);
    CHECK(body.find("\n2 : ") == std::string::npos);
    CHECK(run("topics --config " + cfg.string() + " --k 0").code == 1);
    fs::remove_all(dir);
}

TEST_CASE("eval-baseline subcommand") {
    const auto dir = fs::temp_directory_path() / "toxtopic_cli_baseline";
    const auto cfg = quick_config(dir);
    const auto preds = (fixtures::data_dir() / "fixture_baseline_gpt4.csv").string();
    const auto r = run("eval-baseline --config " + cfg.string() + " --name GPT-4 --preds " + preds);
    REQUIRE(r.code == 0);
    CHECK(r.output.starts_with("model,topic:0,topic:1,topic:2,full\nGPT-4,"));

    toxtopic::io::write_file(dir / "dup.csv", "instance_id,label\n1,toxic\n1,toxic\n");
    const auto dup = run("eval-baseline --config " + cfg.string() + " --name D --preds " +
                         (dir / "dup.csv").string());
    CHECK(dup.code == 1);
    CHECK(dup.output.find("duplicate instance_id 1") != std::string::npos);
    CHECK(run("eval-baseline --config " + cfg.string() + " --name D --preds " +
              (dir / "none.csv").string())
              .code == 2);
    fs::remove_all(dir);
}

TEST_CASE("export-report writes to the requested directory") {
    const auto dir = fs::temp_directory_path() / "toxtopic_cli_export";
    const auto cfg = quick_config(dir);
    const auto r = run("export-report --config " + cfg.string() + " --out " + (dir / "x").string());
    REQUIRE(r.code == 0);
    CHECK(fs::exists(dir / "x" / "seed_f1.csv"));
    CHECK_FALSE(fs::exists(dir / "out"));
    fs::remove_all(dir);
}
