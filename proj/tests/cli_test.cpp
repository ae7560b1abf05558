#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "iva/cli.hpp"
#include "iva/json_util.hpp"
#include "iva/protocol.hpp"
#include "test_util.hpp"

using namespace iva;
using test::read_file;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "iva-bench");
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string generate(const test::TempDir& dir, const std::string& name = "data", std::vector<std::string> extra = {}) {
    auto path = (dir / name).string() + ".jsonl";
    std::vector<std::string> args{"generate", "--episodes", "45", "--seed", "7", "--out", path};
    args.insert(args.end(), extra.begin(), extra.end());
    auto r = run(args);
    EXPECT_EQ(r.code, 0) << r.err;
    return path;
}

std::vector<std::string> csv_numbers(const std::string& csv) {
    std::vector<std::string> out;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::stringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) out.push_back(cell);
    }
    return out;
}

}  // namespace

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run({}).code, cli::kUsageError);
    EXPECT_EQ(run({"frobnicate"}).code, cli::kUsageError);
    EXPECT_EQ(run({"generate"}).code, cli::kUsageError);
    EXPECT_EQ(run({"evaluate", "--out", "/tmp/x"}).code, cli::kUsageError);
    EXPECT_EQ(run({"report", "--scores", "/nonexistent/scores.jsonl"}).code, cli::kUsageError);
    EXPECT_EQ(run({"--help"}).code, cli::kOk);
    EXPECT_EQ(run({"--version"}).out, std::string(cli::kToolVersion) + "\n");
}

TEST(Cli, GenerateWritesManifest) {
    test::TempDir dir("gen");
    auto r = run({"generate", "--episodes", "225", "--tasks", "9", "--seed", "7", "--out", (dir / "d.jsonl").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto m = ojson::parse(read_file(dir / "d.manifest.json"));
    EXPECT_EQ(m["seed"], 7);
    EXPECT_EQ(m["counts"]["episodes"], 225);
    EXPECT_EQ(m["counts"]["id"], 146);
    EXPECT_EQ(m["counts"]["ood"], 45);
    EXPECT_EQ(m["counts"]["tp"], 34);
    EXPECT_EQ(m["source"]["tasks"].size(), 9u);
    EXPECT_EQ(m["tool_version"], cli::kToolVersion);
    EXPECT_TRUE(std::filesystem::exists(dir / "d.pools.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / "d.lexicon.json"));
}

TEST(Cli, GenerateIsDeterministic) {
    test::TempDir a("det-a"), b("det-b");
    generate(a);
    generate(b);
    for (const char* f : {"data.jsonl", "data.manifest.json", "data.pools.json", "data.lexicon.json"}) {
        EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
    }
}

TEST(Cli, ZeroFractionsGiveAllTruePremise) {
    test::TempDir dir("zero");
    generate(dir, "data", {"--frac-id", "0", "--frac-ood", "0"});
    auto m = ojson::parse(read_file(dir / "data.manifest.json"));
    EXPECT_EQ(m["counts"]["tp"], 45);
    EXPECT_EQ(m["counts"]["fp_steps"], 0);
}

TEST(Cli, GenerationErrorsExitTwo) {
    test::TempDir dir("gerr");
    auto out = (dir / "d.jsonl").string();
    EXPECT_EQ(run({"generate", "--frac-id", "0.9", "--frac-ood", "0.5", "--out", out}).code, cli::kGenerationError);
    std::ofstream(dir / "pools.json") << R"({"in_domain":["chicken"],"out_of_domain":["sofa"]})";
    auto r = run({"generate", "--tasks", "meat_off_grill", "--episodes", "5", "--frac-id", "1", "--frac-ood", "0",
                  "--pools", (dir / "pools.json").string(), "--out", out});
    EXPECT_EQ(r.code, cli::kGenerationError);
    EXPECT_NE(r.err.find("distractor"), std::string::npos) << r.err;
    EXPECT_EQ(run({"generate", "--tasks", "juggling", "--out", out}).code, cli::kGenerationError);
}

TEST(Cli, SeedFromEnvironment) {
    test::TempDir dir("env");
    ::setenv("IVA_BENCH_SEED", "7", 1);
    auto r = run({"generate", "--episodes", "45", "--out", (dir / "env.jsonl").string()});
    ::unsetenv("IVA_BENCH_SEED");
    ASSERT_EQ(r.code, 0) << r.err;
    generate(dir, "flag");
    EXPECT_EQ(read_file(dir / "env.jsonl"), read_file(dir / "flag.jsonl"));
}

TEST(Cli, ConfigFilePrecedence) {
    test::TempDir dir("cfg");
    std::ofstream(dir / "gen.cfg") << "# generation settings\nepisodes = 45\nseed = 99\nout = "
                                   << (dir / "cfg.jsonl").string() << "\n";
    auto r = run({"generate", "--config", (dir / "gen.cfg").string(), "--seed", "7"});
    ASSERT_EQ(r.code, 0) << r.err;
    generate(dir, "flag");
    EXPECT_EQ(read_file(dir / "cfg.jsonl"), read_file(dir / "flag.jsonl"));
    std::ofstream(dir / "bad.cfg") << "episodes 45\n";
    EXPECT_EQ(run({"generate", "--config", (dir / "bad.cfg").string()}).code, cli::kUsageError);
}

TEST(Cli, EvaluateOracleAndRescore) {
    test::TempDir dir("eval");
    auto data = generate(dir);
    auto run_dir = (dir / "run").string();
    auto r = run({"evaluate", "--dataset", data, "--out", run_dir, "--parallelism", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("100.00% / 100.00%"), std::string::npos);
    for (const char* f : {"transcripts.jsonl", "scores.jsonl", "metrics.md", "metrics.csv", "metrics.json",
                          "manifest.json"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / "run" / f)) << f;
    }
    auto metrics = read_file(dir / "run" / "metrics.json");
    auto md = read_file(dir / "run" / "metrics.md");

    auto again = run({"evaluate", "--transcripts", run_dir, "--out", (dir / "rescored").string()});
    ASSERT_EQ(again.code, 0) << again.err;
    EXPECT_EQ(read_file(dir / "rescored" / "metrics.json"), metrics);
    EXPECT_EQ(read_file(dir / "rescored" / "scores.jsonl"), read_file(dir / "run" / "scores.jsonl"));

    auto repeat = run({"evaluate", "--manifest", (dir / "run" / "manifest.json").string(), "--out",
                       (dir / "repeat").string()});
    ASSERT_EQ(repeat.code, 0) << repeat.err;
    EXPECT_EQ(read_file(dir / "repeat" / "metrics.json"), metrics);
    EXPECT_EQ(read_file(dir / "repeat" / "transcripts.jsonl"), read_file(dir / "run" / "transcripts.jsonl"));

    auto report = run({"report", "--scores", run_dir, "--format", "md"});
    ASSERT_EQ(report.code, 0) << report.err;
    EXPECT_EQ(report.out, md);
}

TEST(Cli, ReportFormatsAgree) {
    test::TempDir dir("fmt");
    auto data = generate(dir);
    auto run_dir = (dir / "run").string();
    ASSERT_EQ(run({"evaluate", "--dataset", data, "--out", run_dir, "--policy", "builtin:bernoulli:0.5:4"}).code, 0);
    auto json = ojson::parse(read_file(dir / "run" / "metrics.json"));
    auto cells = csv_numbers(read_file(dir / "run" / "metrics.csv"));
    // Every number in the JSON task rows appears, as the same shortest decimal, in the CSV.
    std::size_t checked = 0;
    for (const auto& task : json["tasks"]) {
        for (const char* key : {"overall", "fp_detect_id", "fp_detect_ood", "tp_success"}) {
            if (task[key].is_null()) continue;
            double v = task[key].get<double>();
            bool found = false;
            for (const auto& c : cells) {
                char* end = nullptr;
                double parsed = std::strtod(c.c_str(), &end);
                if (end != c.c_str() && *end == '\0' && parsed == v) found = true;
            }
            EXPECT_TRUE(found) << key << "=" << v;
            ++checked;
        }
    }
    EXPECT_GT(checked, 0u);
}

TEST(Cli, ReportOnEmptyScores) {
    test::TempDir dir("empty");
    std::ofstream(dir / "scores.jsonl") << "";
    EXPECT_EQ(run({"report", "--scores", (dir / "scores.jsonl").string()}).code, cli::kUsageError);
}

TEST(Cli, EvaluateTransportFailureExitsThree) {
    test::TempDir dir("fail");
    auto data = generate(dir);
    auto r = run({"evaluate", "--dataset", data, "--out", (dir / "run").string(), "--policy", "exec:true"});
    EXPECT_EQ(r.code, cli::kTransportFailure);
    r = run({"evaluate", "--dataset", data, "--out", (dir / "run2").string(), "--policy", "tcp:127.0.0.1:1"});
    EXPECT_EQ(r.code, cli::kTransportFailure);
}

TEST(Cli, RecordedSessionValidates) {
    test::TempDir dir("sess");
    auto data = generate(dir);
    auto log = (dir / "session.log").string();
    auto policy = std::string("exec:") + IVA_BENCH_EXE + " serve --dataset " + data;
    auto r = run({"evaluate", "--dataset", data, "--out", (dir / "run").string(), "--policy", policy,
                  "--parallelism", "2", "--record-session", log});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("100.00% / 100.00%"), std::string::npos);
    auto v = run({"validate-session", log});
    EXPECT_EQ(v.code, 0) << v.out;
    EXPECT_NE(v.out.find("valid session"), std::string::npos);

    std::ofstream(dir / "bad.log") << "H0 " << encode_request({}) << "\n";
    EXPECT_EQ(run({"validate-session", (dir / "bad.log").string()}).code, cli::kUsageError);
}

TEST(Cli, MergeConfigFile) {
    test::TempDir dir("merge");
    std::ofstream(dir / "c.cfg") << "seed = 3\n--episodes = 10\n\n# comment\n";
    auto merged = cli::merge_config_file({"iva-bench", "generate", "--seed=5"}, (dir / "c.cfg").string());
    EXPECT_EQ(merged, (std::vector<std::string>{"iva-bench", "generate", "--seed=5", "--episodes", "10"}));
}
