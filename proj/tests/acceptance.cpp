// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "iva/cli.hpp"
#include "iva/dataset.hpp"
#include "iva/json_util.hpp"
#include "iva/policy.hpp"
#include "iva/response.hpp"
#include "iva/scoring.hpp"
#include "iva/simulator.hpp"
#include "test_util.hpp"

using namespace iva;
namespace fs = std::filesystem;

namespace {

struct Check {
    std::vector<std::string> failures;
    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

int cli_run(std::vector<std::string> args, std::string* out = nullptr) {
    args.insert(args.begin(), "iva-bench");
    std::ostringstream o, e;
    int code = cli::run(args, o, e);
    if (out) *out = o.str();
    if (code != 0) std::cerr << e.str();
    return code;
}

// ---------------------------------------------------------------------------

struct RateRow {
    const char* task;
    int overall, id, ood, tp;
};

// Table 1 cells, IVA then LLaRVA.
const RateRow kReferenceRows[] = {
    {"meat off grill", 58, 100, 100, 16},    {"open drawer", 61, 100, 80, 32},
    {"push buttons", 68, 100, 100, 36},      {"put money in safe", 64, 100, 100, 28},
    {"reach and drag", 80, 100, 100, 60},    {"slide block", 96, 100, 100, 92},
    {"sweep to dustpan", 94, 100, 100, 88},  {"turn tap", 61, 100, 80, 32},
    {"close jar", 50, 100, 100, 0},
    {"meat off grill", 2, 0, 0, 4},          {"open drawer", 20, 0, 0, 40},
    {"push buttons", 16, 0, 0, 32},          {"put money in safe", 20, 0, 0, 40},
    {"reach and drag", 22, 0, 0, 44},        {"slide block", 44, 0, 0, 88},
    {"sweep to dustpan", 30, 0, 0, 60},      {"turn tap", 20, 0, 0, 40},
    {"close jar", 0, 0, 0, 0},
};

void reference_rows_identity(Check& c) {
    for (const auto& row : kReferenceRows) {
        // 25 TP runs and 5 episodes of each false-premise kind realise the
        // cell percentages exactly.
        std::vector<EpisodeScore> scores;
        const std::string task = row.task;
        for (int i = 0; i < 25; ++i) {
            EpisodeScore s;
            s.episode_id = task + "/tp" + std::to_string(i);
            s.task_name = task;
            s.tp_success = i < row.tp / 4 ? 1 : 0;
            scores.push_back(s);
        }
        for (int i = 0; i < 5; ++i) {
            for (auto kind : {PremiseKind::InDomain, PremiseKind::OutOfDomain}) {
                EpisodeScore s;
                s.episode_id = task + "/fp" + std::to_string(i) + std::string(to_string(kind));
                s.task_name = task;
                s.mode = RunMode::FalsePremise;
                s.premise_kind = kind;
                int rate = kind == PremiseKind::InDomain ? row.id : row.ood;
                s.fp_score = i < rate / 20 ? 1.0 : 0.0;
                scores.push_back(s);
            }
        }
        auto t = aggregate(scores).tasks.at(0);
        auto pct = [](std::optional<double> v) { return v ? static_cast<int>(std::lround(*v * 100)) : -1; };
        c.expect(pct(t.tp_success) == row.tp, task + " TP cell");
        c.expect(pct(t.fp_detect_id) == row.id && pct(t.fp_detect_ood) == row.ood, task + " FP cells");
        c.expect(pct(t.overall) == row.overall, task + " overall " + std::to_string(pct(t.overall)) + " vs " +
                                                    std::to_string(row.overall));
        c.expect(pct(t.fp_success_equal) == pct(t.fp_success), task + " FP weighting");
        c.expect(static_cast<int>(std::lround(overall_success(row.tp / 100.0, (row.id + row.ood) / 200.0) * 100)) ==
                     row.overall,
                 task + " overall_success()");
    }
}

// ---------------------------------------------------------------------------

fs::path g_scratch;

std::string dataset_225() {
    static std::string path;
    if (path.empty()) {
        path = (g_scratch / "suite" / "data.jsonl").string();
        if (cli_run({"generate", "--episodes", "225", "--tasks", "9", "--seed", "7", "--out", path}) != 0) {
            throw std::runtime_error("generate failed");
        }
    }
    return path;
}

ojson evaluate(const std::string& policy, const std::string& out) {
    if (cli_run({"evaluate", "--dataset", dataset_225(), "--policy", policy, "--out", out, "--parallelism", "4"}) !=
        0) {
        throw std::runtime_error("evaluate failed");
    }
    return ojson::parse(test::read_file(fs::path(out) / "metrics.json"));
}

void oracle_end_to_end(Check& c) {
    auto m = evaluate("builtin:oracle", (g_scratch / "oracle").string());
    c.expect(m["tasks"].size() == 9, "nine tasks reported");
    for (const auto& t : m["tasks"]) {
        const auto name = t["task"].get<std::string>();
        c.expect(t["fp_detect_id"] == 1.0, name + " ID detection");
        c.expect(t["fp_detect_ood"] == 1.0, name + " OOD detection");
        c.expect(t["tp_success"] == 1.0, name + " TP execution");
    }
    c.expect(m["suite"]["episodes"] == 225, "225 episodes scored");
}

void naive_end_to_end(Check& c) {
    auto m = evaluate("builtin:naive", (g_scratch / "naive").string());
    c.expect(m["tasks"].size() == 9, "nine tasks reported");
    for (const auto& t : m["tasks"]) {
        const auto name = t["task"].get<std::string>();
        c.expect(t["fp_detect_id"] == 0.0, name + " ID detection");
        c.expect(t["fp_detect_ood"] == 0.0, name + " OOD detection");
    }
}

// ---------------------------------------------------------------------------

void composition(Check& c) {
    SynthConfig synth;
    synth.episodes = 1000;
    synth.tasks = builtin_tasks();
    synth.seed = 5;
    auto eps = generate_dataset(synthesize_episodes(synth), builtin_pools(), GenConfig{}, builtin_lexicon());
    std::size_t id = 0, ood = 0, tp = 0;
    for (const auto& ep : eps) {
        const auto s = ep.steps.size();
        const std::size_t want = std::max<std::size_t>(1, (s + 9) / 10);  // ceil(s / 10) in integers
        switch (ep.kind()) {
            case PremiseKind::InDomain:
                ++id;
                c.expect(ep.false_premise_steps() == want, ep.episode_id + " FP step count");
                break;
            case PremiseKind::OutOfDomain:
                ++ood;
                c.expect(ep.false_premise_steps() == want, ep.episode_id + " FP step count");
                break;
            default:
                ++tp;
                c.expect(ep.false_premise_steps() == 0, ep.episode_id + " untouched");
        }
    }
    c.expect(id == 650 && ood == 200 && tp == 150,
             "partition " + std::to_string(id) + "/" + std::to_string(ood) + "/" + std::to_string(tp));
}

void bernoulli_calibration(Check& c) {
    SynthConfig synth;
    synth.episodes = 4500;
    synth.tasks = builtin_tasks();
    synth.min_steps = 20;
    synth.max_steps = 40;
    synth.seed = 13;
    auto eps = generate_dataset(synthesize_episodes(synth), builtin_pools(), GenConfig{}, builtin_lexicon());
    auto truth = std::make_shared<const GroundTruth>(eps, builtin_pools(), builtin_lexicon());
    auto d = TransportDescriptor::parse("builtin:bernoulli:0.5:2024");
    std::size_t scored = 0, detected = 0;
    auto handle = connect(d, truth);
    for (const auto& ep : eps) {
        if (ep.kind() == PremiseKind::TruePremise) continue;
        auto s = score_transcript(run_episode(ep, *handle, RunMode::FalsePremise), ep);
        scored += s.fp_steps_scored;
        detected += s.fp_steps_detected;
    }
    c.expect(scored >= 10000, "only " + std::to_string(scored) + " FP steps");
    const double rate = static_cast<double>(detected) / static_cast<double>(scored);
    const double sigma = std::sqrt(0.25 / static_cast<double>(scored));
    std::ostringstream msg;
    msg << "rate " << rate << " outside 0.5 +/- " << 3 * sigma << " over " << scored << " steps";
    c.expect(std::fabs(rate - 0.5) <= 3 * sigma, msg.str());
    std::cout << "  bernoulli: " << detected << "/" << scored << " = " << rate << " (3 sigma = " << 3 * sigma << ")\n";
}

// ---------------------------------------------------------------------------

void grammar_golden(Check& c) {
    for (const char* name : {"id_human", "id_human_followup", "ood_human", "tp_human"}) {
        auto text = test::golden(name);
        try {
            auto p = parse_instruction_with_surface(text);
            c.expect(render_instruction(p.spec, p.surface) == text, std::string(name) + " round trip");
        } catch (const std::exception& e) {
            c.expect(false, std::string(name) + ": " + e.what());
        }
    }
    for (const char* name : {"id_gpt_clarify", "id_gpt_accept", "ood_gpt_refuse", "tp_gpt_accept"}) {
        auto text = test::golden(name);
        auto r = parse_response(text);
        c.expect(!holds<Malformed>(r), std::string(name) + " parses");
        if (!holds<Malformed>(r)) c.expect(render_response(r) == text, std::string(name) + " round trip");
    }
}

void determinism(Check& c) {
    const std::vector<std::string> files{"transcripts.jsonl", "scores.jsonl", "metrics.md", "metrics.csv",
                                         "metrics.json"};
    std::vector<std::vector<std::string>> runs;
    for (int r = 0; r < 2; ++r) {
        auto dir = g_scratch / ("det" + std::to_string(r));
        auto data = (dir / "data.jsonl").string();
        std::vector<std::string> blobs;
        c.expect(cli_run({"generate", "--episodes", "90", "--seed", "31", "--out", data}) == 0, "generate");
        blobs.push_back(test::read_file(data));
        for (const char* policy : {"builtin:oracle", "builtin:naive", "builtin:bernoulli:0.3:8"}) {
            auto out = (dir / policy).string();
            c.expect(cli_run({"evaluate", "--dataset", data, "--policy", policy, "--out", out, "--parallelism",
                              r == 0 ? "1" : "6"}) == 0,
                     "evaluate");
            for (const auto& f : files) blobs.push_back(test::read_file(fs::path(out) / f));
        }
        runs.push_back(std::move(blobs));
    }
    c.expect(runs[0].size() == runs[1].size(), "same outputs");
    for (std::size_t i = 0; i < runs[0].size(); ++i) {
        c.expect(!runs[0][i].empty(), "output " + std::to_string(i) + " non-empty");
        c.expect(runs[0][i] == runs[1][i], "output " + std::to_string(i) + " identical");
    }
}

struct Criterion {
    const char* name;
    double budget_s;  // 0: no runtime bound
    std::function<void(Check&)> fn;
};

}  // namespace

int main() {
    test::TempDir scratch("acceptance");
    g_scratch = scratch.path();
    fs::create_directories(g_scratch / "suite");

    const std::vector<Criterion> criteria{
        {"reference_rows_arithmetic_identity", 1.0, reference_rows_identity},
        {"oracle_end_to_end", 30.0, oracle_end_to_end},
        {"baseline_end_to_end", 30.0, naive_end_to_end},
        {"composition_property", 0.0, composition},
        {"bernoulli_calibration", 0.0, bernoulli_calibration},
        {"grammar_golden_files", 0.0, grammar_golden},
        {"determinism", 0.0, determinism},
    };

    int failed = 0;
    for (const auto& cr : criteria) {
        Check c;
        auto start = std::chrono::steady_clock::now();
        try {
            cr.fn(c);
        } catch (const std::exception& e) {
            c.failures.push_back(std::string("exception: ") + e.what());
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (cr.budget_s > 0 && secs >= cr.budget_s) {
            c.failures.push_back("runtime " + std::to_string(secs) + " s exceeds " + std::to_string(cr.budget_s) + " s");
        }
        const bool ok = c.failures.empty();
        failed += ok ? 0 : 1;
        std::printf("%s %s (%.3f s)\n", ok ? "PASS" : "FAIL", cr.name, secs);
        for (std::size_t i = 0; i < c.failures.size() && i < 10; ++i) std::printf("  - %s\n", c.failures[i].c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
