#include "iva/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "iva/dataset.hpp"
#include "iva/error.hpp"
#include "iva/json_util.hpp"
#include "iva/policy.hpp"
#include "iva/report.hpp"
#include "iva/rng.hpp"
#include "iva/scoring.hpp"
#include "iva/simulator.hpp"

namespace fs = std::filesystem;

namespace iva::cli {

namespace {

std::uint64_t default_seed() {
    if (const char* env = std::getenv("IVA_BENCH_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError("IVA_BENCH_SEED must be an unsigned integer");
        }
    }
    return 0;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw MissingInput("cannot open '" + p.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + p.string() + "'");
    out << text;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// `data.jsonl` -> `data`; sibling files share the stem.
fs::path stem_of(const fs::path& dataset) {
    auto p = dataset;
    if (p.extension() == ".jsonl") p.replace_extension();
    return p;
}

fs::path sibling(const fs::path& dataset, const char* suffix) {
    auto s = stem_of(dataset);
    return s.parent_path() / (s.filename().string() + suffix);
}

std::string lexicon_to_json(const TaskLexicon& lex) {
    ojson list = ojson::array();
    for (const auto& [name, pattern] : lex.entries()) {
        ojson e;
        e["name"] = name;
        e["pattern"] = pattern.text();
        list.push_back(std::move(e));
    }
    ojson j;
    j["tasks"] = std::move(list);
    return j.dump(2) + "\n";
}

std::string lexicon_to_json(const std::vector<TaskDef>& tasks) {
    TaskLexicon lex = make_lexicon(tasks);
    return lexicon_to_json(lex);
}

TaskLexicon lexicon_from_json(const std::string& text) {
    try {
        TaskLexicon lex;
        const auto doc = ojson::parse(text);
        for (const auto& e : doc.at("tasks")) {
            lex.add(e.at("name").get<std::string>(), e.at("pattern").get<std::string>());
        }
        return lex;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad lexicon file: ") + e.what());
    }
}

std::vector<TaskDef> select_tasks(const std::string& spec) {
    const auto& all = builtin_tasks();
    if (!spec.empty() && std::all_of(spec.begin(), spec.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        auto n = std::stoul(spec);
        if (n < 1 || n > all.size()) {
            throw ConfigError("--tasks count must be between 1 and " + std::to_string(all.size()));
        }
        return {all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n)};
    }
    std::vector<TaskDef> out;
    std::stringstream ss(spec);
    std::string name;
    while (std::getline(ss, name, ',')) {
        if (name.empty()) continue;
        const auto* t = find_builtin_task(name);
        if (!t) throw ConfigError("unknown task '" + name + "'");
        out.push_back(*t);
    }
    if (out.empty()) throw ConfigError("--tasks selects no task");
    return out;
}

/// Pools/lexicon for a dataset: explicit flag, then the generated sibling file, then the built-ins.
DistractorPools load_pools(const std::string& flag, const fs::path& dataset) {
    if (!flag.empty()) return read_pools_file(flag);
    auto sib = sibling(dataset, ".pools.json");
    if (fs::exists(sib)) return read_pools_file(sib.string());
    return builtin_pools();
}

TaskLexicon load_lexicon(const std::string& flag, const fs::path& dataset) {
    if (!flag.empty()) return lexicon_from_json(slurp(flag));
    auto sib = sibling(dataset, ".lexicon.json");
    if (fs::exists(sib)) return lexicon_from_json(slurp(sib));
    return builtin_lexicon();
}

std::vector<ReportFormat> parse_formats(const std::string& list) {
    std::vector<ReportFormat> out;
    std::stringstream ss(list);
    std::string f;
    while (std::getline(ss, f, ',')) {
        if (!f.empty()) out.push_back(report_format_from_string(f));
    }
    if (out.empty()) throw ConfigError("--format selects no format");
    return out;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::size_t episodes = 225;
    std::string tasks = "9";
    double frac_id = 0.65;
    double frac_ood = 0.20;
    double step_rate = 0.10;
    std::uint64_t seed = 0;
    std::string pools;
    std::string out;
    std::string import_path;
    std::string lexicon;
    std::size_t min_steps = 8;
    std::size_t max_steps = 24;
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
    GenConfig cfg{a.frac_id, a.frac_ood, a.step_rate, a.seed};
    cfg.validate();
    DistractorPools pools = a.pools.empty() ? builtin_pools() : read_pools_file(a.pools);
    pools.validate();

    std::vector<EpisodeRecord> corpus;
    TaskLexicon lexicon;
    std::string lexicon_json;
    ojson source;
    if (!a.import_path.empty()) {
        std::ifstream in(a.import_path);
        if (!in) throw MissingInput("cannot open trajectories '" + a.import_path + "'");
        corpus = import_trajectories(in);
        lexicon = a.lexicon.empty() ? builtin_lexicon() : lexicon_from_json(slurp(a.lexicon));
        lexicon_json = lexicon_to_json(lexicon);
        source["kind"] = "import";
        source["trajectories"] = fs::path(a.import_path).filename().string();
    } else {
        SynthConfig synth;
        synth.episodes = a.episodes;
        synth.tasks = select_tasks(a.tasks);
        synth.min_steps = a.min_steps;
        synth.max_steps = a.max_steps;
        synth.seed = a.seed;
        corpus = synthesize_episodes(synth);
        lexicon = make_lexicon(synth.tasks);
        lexicon_json = lexicon_to_json(synth.tasks);
        source["kind"] = "synthetic";
        source["episodes"] = a.episodes;
        ojson names = ojson::array();
        for (const auto& t : synth.tasks) names.push_back(t.name);
        source["tasks"] = std::move(names);
        source["min_steps"] = a.min_steps;
        source["max_steps"] = a.max_steps;
    }

    auto labeled = generate_dataset(corpus, pools, cfg, lexicon);
    std::ostringstream data;
    write_dataset(data, labeled);

    const fs::path out_path(a.out);
    const auto pools_path = sibling(out_path, ".pools.json");
    const auto lexicon_path = sibling(out_path, ".lexicon.json");
    const auto manifest_path = sibling(out_path, ".manifest.json");
    spit(out_path, data.str());
    spit(pools_path, pools_to_json(pools) + "\n");
    spit(lexicon_path, lexicon_json);

    std::size_t n_tp = 0, n_id = 0, n_ood = 0, fp_steps = 0, steps = 0;
    for (const auto& ep : labeled) {
        switch (ep.kind()) {
            case PremiseKind::InDomain: ++n_id; break;
            case PremiseKind::OutOfDomain: ++n_ood; break;
            default: ++n_tp; break;
        }
        fp_steps += ep.false_premise_steps();
        steps += ep.steps.size();
    }

    ojson m;
    m["schema"] = "iva-manifest/1";
    m["command"] = "generate";
    m["tool_version"] = kToolVersion;
    m["dataset_schema"] = kDatasetSchema;
    m["seed"] = a.seed;
    ojson config;
    config["frac_id"] = a.frac_id;
    config["frac_ood"] = a.frac_ood;
    config["step_rate"] = a.step_rate;
    m["config"] = std::move(config);
    m["source"] = std::move(source);
    ojson counts;
    counts["episodes"] = labeled.size();
    counts["steps"] = steps;
    counts["tp"] = n_tp;
    counts["id"] = n_id;
    counts["ood"] = n_ood;
    counts["fp_steps"] = fp_steps;
    m["counts"] = std::move(counts);
    ojson files;
    files["dataset"] = out_path.filename().string();
    files["pools"] = pools_path.filename().string();
    files["lexicon"] = lexicon_path.filename().string();
    m["files"] = std::move(files);
    m["dataset_fnv1a64"] = hex64(fnv1a64(data.str()));
    spit(manifest_path, m.dump(2) + "\n");

    out << "wrote " << labeled.size() << " episodes (" << n_id << " in-domain, " << n_ood << " out-of-domain, " << n_tp
        << " true-premise) to " << out_path.string() << "\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
    std::string dataset;
    std::string policy = "builtin:oracle";
    std::string out;
    std::size_t parallelism = 1;
    int timeout_ms = 30000;
    std::string post_refusal = "exclude";
    double tol = 1e-6;
    std::string formats = "md,csv,json";
    std::string pools;
    std::string lexicon;
    std::string transcripts;
    std::string record_session;
    std::size_t malformed_limit = 5;
};

/// Fills evaluate settings that were not given on the command line from a previous run's manifest.
void apply_manifest(EvaluateArgs& a, const std::string& path, const std::function<bool(const char*)>& given) {
    ojson m;
    try {
        m = ojson::parse(slurp(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad manifest '" + path + "': " + e.what());
    }
    if (m.value("command", "") != "evaluate") throw ConfigError("'" + path + "' is not an evaluate manifest");
    try {
        if (!given("--dataset")) a.dataset = m.at("dataset").get<std::string>();
        if (!given("--policy")) a.policy = m.at("policy").get<std::string>();
        if (!given("--parallelism")) a.parallelism = m.at("parallelism").get<std::size_t>();
        if (!given("--timeout-ms")) a.timeout_ms = m.at("timeout_ms").get<int>();
        if (!given("--post-refusal")) a.post_refusal = m.at("post_refusal").get<std::string>();
        if (!given("--tol")) a.tol = m.at("tol").get<double>();
        if (!given("--malformed-limit")) a.malformed_limit = m.at("malformed_limit").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("incomplete manifest '" + path + "': " + e.what());
    }
}

void write_outputs(const fs::path& dir, const std::vector<EpisodeScore>& scores, const SuiteMetrics* metrics,
                   const std::vector<ReportFormat>& formats) {
    std::ostringstream s;
    write_scores(s, scores);
    spit(dir / "scores.jsonl", s.str());
    if (!metrics) return;
    for (auto f : formats) spit(dir / ("metrics." + std::string(extension(f))), render_report(*metrics, f));
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
    if (a.parallelism < 1) throw ConfigError("--parallelism must be at least 1");
    const auto formats = parse_formats(a.formats);
    ScoringOptions scoring;
    scoring.post_refusal = post_refusal_from_string(a.post_refusal);
    scoring.detector = trajectory_match_detector(a.tol);

    std::string dataset_path = a.dataset;
    std::string policy_desc = a.policy;
    fs::path out_dir = a.out;
    std::vector<Transcript> transcripts;
    std::size_t failed = 0;

    if (!a.transcripts.empty()) {
        // Re-score a previous run without contacting any policy.
        const fs::path prior(a.transcripts);
        const auto file = fs::is_directory(prior) ? prior / "transcripts.jsonl" : prior;
        if (dataset_path.empty()) {
            const auto manifest = (fs::is_directory(prior) ? prior : prior.parent_path()) / "manifest.json";
            if (!fs::exists(manifest)) throw MissingInput("--dataset is required (no manifest next to the transcripts)");
            dataset_path = ojson::parse(slurp(manifest)).at("dataset").get<std::string>();
            policy_desc = ojson::parse(slurp(manifest)).value("policy", policy_desc);
        }
        if (out_dir.empty()) out_dir = fs::is_directory(prior) ? prior : prior.parent_path();
        std::ifstream in(file);
        if (!in) throw MissingInput("cannot open transcripts '" + file.string() + "'");
        transcripts = read_transcripts(in);
        for (const auto& t : transcripts) failed += t.failure ? 1 : 0;
    }
    if (dataset_path.empty()) throw ConfigError("--dataset is required");
    if (out_dir.empty()) throw ConfigError("--out is required");

    const auto dataset = read_dataset_file(dataset_path);
    if (dataset.empty()) throw MissingInput("dataset '" + dataset_path + "' holds no episodes");
    auto lexicon = load_lexicon(a.lexicon, dataset_path);
    for (const auto& ep : dataset) validate(ep, lexicon);

    if (a.transcripts.empty()) {
        auto descriptor = TransportDescriptor::parse(a.policy);
        auto truth = std::make_shared<const GroundTruth>(dataset, load_pools(a.pools, dataset_path), lexicon);
        ConnectOptions copts;
        std::unique_ptr<std::ofstream> session_file;
        if (!a.record_session.empty()) {
            session_file = std::make_unique<std::ofstream>(a.record_session, std::ios::binary);
            if (!*session_file) throw ConfigError("cannot write '" + a.record_session + "'");
            copts.recorder = std::make_shared<SessionRecorder>(*session_file);
        }
        SimOptions sim;
        sim.timeout_ms = a.timeout_ms;
        sim.malformed_limit = a.malformed_limit;
        auto result = run_suite(dataset, [&] { return connect(descriptor, truth, copts); }, sim, a.parallelism);
        transcripts = std::move(result.transcripts);
        failed = result.failed;
        std::ostringstream t;
        write_transcripts(t, transcripts);
        spit(out_dir / "transcripts.jsonl", t.str());
    }

    for (const auto& t : transcripts) {
        if (t.failure) err << "episode " << t.episode_id << " (" << to_string(t.mode) << ") failed: " << *t.failure << "\n";
    }

    auto scores = score_transcripts(transcripts, dataset, scoring);
    std::optional<SuiteMetrics> metrics;
    if (!scores.empty()) metrics = aggregate(scores);
    write_outputs(out_dir, scores, metrics ? &*metrics : nullptr, formats);

    ojson m;
    m["schema"] = "iva-manifest/1";
    m["command"] = "evaluate";
    m["tool_version"] = kToolVersion;
    m["dataset"] = dataset_path;
    m["policy"] = policy_desc;
    m["parallelism"] = a.parallelism;
    m["timeout_ms"] = a.timeout_ms;
    m["post_refusal"] = a.post_refusal;
    m["tol"] = a.tol;
    m["malformed_limit"] = a.malformed_limit;
    m["runs"] = transcripts.size();
    m["failed_runs"] = failed;
    m["rescored"] = !a.transcripts.empty();
    spit(out_dir / "manifest.json", m.dump(2) + "\n");

    if (scores.empty()) {
        err << "no episode completed\n";
        return kTransportFailure;
    }
    out << render_report(*metrics, ReportFormat::Markdown);
    if (failed > 0) err << failed << " of " << transcripts.size() << " runs failed; see transcripts.jsonl\n";
    return kOk;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
    std::string scores;
    std::string format = "md";
    std::string out;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
    fs::path p(a.scores);
    if (fs::is_directory(p)) p /= "scores.jsonl";
    std::ifstream in(p);
    if (!in) throw MissingInput("cannot open scores '" + p.string() + "'");
    auto scores = read_scores(in);
    if (scores.empty()) throw MissingInput("scores file '" + p.string() + "' is empty");
    auto text = render_report(aggregate(scores), report_format_from_string(a.format));
    if (a.out.empty()) {
        out << text;
    } else {
        spit(a.out, text);
    }
    return kOk;
}

// ---------------------------------------------------------------------------

struct ServeArgs {
    std::string policy = "builtin:oracle";
    std::string dataset;
    std::string pools;
    std::string lexicon;
    std::string listen;
    std::string advertise_version = kProtocolVersion;
};

int cmd_serve(const ServeArgs& a, std::ostream& out) {
    auto descriptor = TransportDescriptor::parse(a.policy);
    if (descriptor.kind != TransportDescriptor::Kind::Builtin) throw ConfigError("serve only hosts builtin policies");
    const auto dataset = read_dataset_file(a.dataset);
    auto truth = std::make_shared<const GroundTruth>(dataset, load_pools(a.pools, a.dataset),
                                                     load_lexicon(a.lexicon, a.dataset));
    auto fn = make_builtin_policy(descriptor, truth);
    if (a.listen.empty()) return serve_stream(std::cin, out, fn, a.advertise_version);
    auto colon = a.listen.rfind(':');
    if (colon == std::string::npos) throw ConfigError("--listen is HOST:PORT");
    TcpPolicyServer server(fn, a.listen.substr(0, colon), std::stoi(a.listen.substr(colon + 1)));
    std::cerr << "listening on port " << server.port() << std::endl;
    server.run();
    return kOk;
}

int cmd_validate(const std::string& path, std::ostream& out) {
    std::ifstream in(path);
    if (!in) throw MissingInput("cannot open session '" + path + "'");
    auto report = validate_session(read_session(in));
    for (const auto& p : report.problems) out << "problem: " << p << "\n";
    out << (report.ok() ? "valid" : "invalid") << " session, " << report.requests << " requests\n";
    return report.ok() ? kOk : kUsageError;
}

}  // namespace

std::vector<std::string> merge_config_file(const std::vector<std::string>& args, const std::string& path) {
    auto given = [&](const std::string& flag) {
        return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
            return a == flag || a.rfind(flag + "=", 0) == 0;
        });
    };
    std::ifstream in(path);
    if (!in) throw MissingInput("cannot open config '" + path + "'");
    std::vector<std::string> out = args;
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        auto b = s.find_first_not_of(" \t\r");
        auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.rfind("--", 0) == 0) key = key.substr(2);
        if (key.empty() || key == "config") throw ConfigError(path + ":" + std::to_string(lineno) + ": bad key");
        if (given("--" + key)) continue;
        out.push_back("--" + key);
        out.push_back(value);
    }
    return out;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
    CLI::App app{"False-premise instruction benchmark harness", "iva-bench"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    GenerateArgs gen;
    gen.seed = 0;
    auto* g = app.add_subcommand("generate", "Synthesize or import episodes and inject false premises");
    g->add_option("--episodes", gen.episodes, "Number of synthetic episodes")->check(CLI::PositiveNumber);
    g->add_option("--tasks", gen.tasks, "Task count or comma-separated task names");
    g->add_option("--frac-id", gen.frac_id, "Fraction of episodes with in-domain false premises");
    g->add_option("--frac-ood", gen.frac_ood, "Fraction of episodes with out-of-domain false premises");
    g->add_option("--step-rate", gen.step_rate, "Fraction of steps rewritten in a false-premise episode");
    auto* seed_opt = g->add_option("--seed", gen.seed, "Generator seed (default: $IVA_BENCH_SEED or 0)");
    g->add_option("--pools", gen.pools, "Distractor pools JSON");
    g->add_option("--out", gen.out, "Output dataset (.jsonl)")->required();
    g->add_option("--import", gen.import_path, "Import exported trajectories instead of synthesizing");
    g->add_option("--lexicon", gen.lexicon, "Task lexicon JSON for imported trajectories");
    g->add_option("--min-steps", gen.min_steps, "Shortest synthetic episode");
    g->add_option("--max-steps", gen.max_steps, "Longest synthetic episode");
    g->add_option("--config", "Key-value config file mirroring the flag names");

    EvaluateArgs ev;
    auto* e = app.add_subcommand("evaluate", "Run every episode against a policy and score it");
    e->add_option("--dataset", ev.dataset, "Labeled dataset (.jsonl)");
    e->add_option("--policy", ev.policy, "builtin:oracle|naive|bernoulli:P[:SEED], exec:CMD or tcp:HOST:PORT");
    e->add_option("--out", ev.out, "Output directory");
    e->add_option("--parallelism", ev.parallelism, "Concurrent episodes (one connection each)");
    e->add_option("--timeout-ms", ev.timeout_ms, "Per-turn deadline")->check(CLI::PositiveNumber);
    e->add_option("--post-refusal", ev.post_refusal, "exclude|score-one")
        ->check(CLI::IsMember({"exclude", "score-one"}));
    e->add_option("--tol", ev.tol, "Action match tolerance per component");
    e->add_option("--format", ev.formats, "Comma-separated report formats (md,csv,json)");
    e->add_option("--pools", ev.pools, "Distractor pools JSON (default: the dataset's snapshot)");
    e->add_option("--lexicon", ev.lexicon, "Task lexicon JSON (default: the dataset's snapshot)");
    e->add_option("--transcripts", ev.transcripts, "Re-score a previous run directory instead of running policies");
    e->add_option("--record-session", ev.record_session, "Write the wire-level session log here");
    e->add_option("--malformed-limit", ev.malformed_limit, "Consecutive malformed turns that end an episode");
    std::string manifest_path;
    e->add_option("--manifest", manifest_path, "Repeat the run described by a previous evaluate manifest");
    e->add_option("--config", "Key-value config file mirroring the flag names");

    ReportArgs rep;
    auto* r = app.add_subcommand("report", "Format a scores file as a table");
    r->add_option("--scores", rep.scores, "scores.jsonl or a run directory")->required();
    r->add_option("--format", rep.format, "json|csv|md")->check(CLI::IsMember({"json", "csv", "md"}));
    r->add_option("--out", rep.out, "Output file (default: stdout)");
    r->add_option("--config", "Key-value config file mirroring the flag names");

    ServeArgs srv;
    auto* s = app.add_subcommand("serve", "Serve a builtin policy over stdio or TCP");
    s->add_option("--policy", srv.policy, "builtin policy descriptor");
    s->add_option("--dataset", srv.dataset, "Dataset providing the ground truth")->required();
    s->add_option("--pools", srv.pools, "Distractor pools JSON");
    s->add_option("--lexicon", srv.lexicon, "Task lexicon JSON");
    s->add_option("--listen", srv.listen, "HOST:PORT to listen on instead of stdio");
    s->add_option("--advertise-version", srv.advertise_version, "Protocol version to announce")->group("");
    s->add_option("--config", "Key-value config file mirroring the flag names");

    std::string session_path;
    auto* v = app.add_subcommand("validate-session", "Check a recorded session log against the protocol");
    v->add_option("session", session_path, "Session log")->required();

    try {
        std::vector<std::string> args = raw_args;
        // Merge `--config FILE` for the chosen subcommand before parsing.
        for (std::size_t i = 1; i + 1 < args.size(); ++i) {
            if (args[i] == "--config") {
                auto path = args[i + 1];
                args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
                args = merge_config_file(args, path);
                break;
            }
        }
        std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
        app.parse(reversed);
        if (g->parsed() && seed_opt->count() == 0) gen.seed = default_seed();
        if (e->parsed() && !manifest_path.empty()) {
            apply_manifest(ev, manifest_path, [&](const char* flag) { return e->get_option(flag)->count() > 0; });
        }
    } catch (const CLI::ParseError& pe) {
        int code = app.exit(pe, out, err);
        return code == 0 ? kOk : kUsageError;
    } catch (const Error& ex) {
        err << "error: " << ex.what() << "\n";
        return kUsageError;
    }

    try {
        if (g->parsed()) {
            try {
                return cmd_generate(gen, out);
            } catch (const MissingInput& ex) {
                err << "error: " << ex.what() << "\n";
                return kUsageError;
            } catch (const Error& ex) {
                err << "generation failed: " << ex.what() << "\n";
                return kGenerationError;
            }
        }
        if (e->parsed()) return cmd_evaluate(ev, out, err);
        if (r->parsed()) return cmd_report(rep, out);
        if (s->parsed()) return cmd_serve(srv, out);
        if (v->parsed()) return cmd_validate(session_path, out);
    } catch (const Error& ex) {
        err << "error: " << ex.what() << "\n";
        return kUsageError;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kUsageError;
    }
    return kUsageError;
}

}  // namespace iva::cli
