#include <gtest/gtest.h>

#include <chrono>
#include <sstream>
#include <thread>

#include "sample_episode.hpp"
#include "iva/dataset.hpp"
#include "iva/error.hpp"
#include "iva/policy.hpp"
#include "iva/simulator.hpp"
#include "test_util.hpp"

using namespace iva;

namespace {

std::vector<EpisodeRecord> dataset() {
    SynthConfig cfg;
    cfg.episodes = 18;
    cfg.tasks = builtin_tasks();
    cfg.min_steps = 3;
    cfg.max_steps = 8;
    auto eps = generate_dataset(synthesize_episodes(cfg), builtin_pools(), GenConfig{}, builtin_lexicon());
    eps.push_back(test::sample_in_domain_episode());
    return eps;
}

std::shared_ptr<const GroundTruth> truth_for(const std::vector<EpisodeRecord>& eps) {
    return std::make_shared<const GroundTruth>(eps, builtin_pools(), builtin_lexicon());
}

PolicyRequest request_for(const EpisodeRecord& ep, std::size_t step, const std::string& sentence) {
    auto parsed = parse_instruction_with_surface(ep.steps[step].true_premise_instruction);
    parsed.spec.task_sentence = sentence;
    PolicyRequest r;
    r.episode_id = ep.episode_id;
    r.step = step;
    r.mode = RunMode::FalsePremise;
    r.instruction = render_instruction(parsed.spec, parsed.surface);
    r.observation.scene_objects.assign(ep.scene_objects.begin(), ep.scene_objects.end());
    return r;
}

const EpisodeRecord& find_task(const std::vector<EpisodeRecord>& eps, const std::string& task) {
    for (const auto& ep : eps) {
        if (ep.task_name == task) return ep;
    }
    throw std::runtime_error("no episode for " + task);
}

/// Writes the dataset plus its pools/lexicon siblings where `serve` finds them.
std::string write_dataset_dir(const test::TempDir& dir, const std::vector<EpisodeRecord>& eps) {
    auto path = (dir / "data.jsonl").string();
    write_dataset_file(path, eps);
    return path;
}

std::string serve_command(const std::string& data, const std::string& extra = "") {
    return std::string("exec:") + IVA_BENCH_EXE + " serve --dataset " + data + " " + extra;
}

}  // namespace

TEST(Oracle, ClarifiesInDomainWithHeadNoun) {
    auto eps = dataset();
    auto truth = truth_for(eps);
    const auto& jar = find_task(eps, "close_jar");
    auto r = request_for(jar, 0, "close the blue safe");
    EXPECT_EQ(oracle_policy(r, *truth), "I don't see safe in the current scene. Do you mean jar?");
}

TEST(Oracle, FallsBackToFullPhraseWhenHeadIsTarget) {
    auto eps = dataset();
    auto truth = truth_for(eps);
    const auto& safe = find_task(eps, "put_money_in_safe");
    auto r = request_for(safe, 0, "put the money away in the blue safe");
    EXPECT_EQ(oracle_policy(r, *truth), "I don't see blue safe in the current scene. Do you mean safe?");
}

TEST(Oracle, RefusesOutOfDomain) {
    auto eps = dataset();
    auto truth = truth_for(eps);
    const auto& drawer = find_task(eps, "open_drawer");
    auto r = request_for(drawer, 0, "open the top elephant");
    EXPECT_EQ(oracle_policy(r, *truth), "I couldn't find an elephant in the current scene.");
}

TEST(Oracle, AcceptsTruePremiseWithGroundTruth) {
    auto eps = dataset();
    auto truth = truth_for(eps);
    const auto& ep = eps.back();
    auto r = request_for(ep, 0, "take the chicken off the grill");
    EXPECT_EQ(oracle_policy(r, *truth), test::golden("id_gpt_accept"));
}

TEST(Oracle, UnknownEpisodeThrows) {
    auto eps = dataset();
    auto truth = truth_for(eps);
    auto r = request_for(eps[0], 0, "take the chicken off the grill");
    r.episode_id = "ghost";
    EXPECT_THROW(oracle_policy(r, *truth), UnknownEpisode);
    r = request_for(eps[0], 0, "take the chicken off the grill");
    r.step = 999;
    EXPECT_THROW(oracle_policy(r, *truth), UnknownEpisode);
}

TEST(Naive, AlwaysAccepts) {
    auto eps = dataset();
    auto truth = truth_for(eps);
    const auto& drawer = find_task(eps, "open_drawer");
    for (const char* s : {"open the top elephant", "open the top mug", "open the top drawer"}) {
        auto text = naive_policy(request_for(drawer, 1, s), *truth);
        auto parsed = parse_response(text);
        ASSERT_TRUE(holds<Accept>(parsed));
        EXPECT_EQ(std::get<Accept>(parsed).action, drawer.steps[1].gt_action);
    }
}

TEST(Bernoulli, DegenerateProbabilities) {
    auto eps = dataset();
    auto truth = truth_for(eps);
    for (const auto& ep : eps) {
        for (std::size_t i = 0; i < ep.steps.size(); ++i) {
            PolicyRequest r;
            r.episode_id = ep.episode_id;
            r.step = i;
            r.mode = RunMode::FalsePremise;
            r.instruction = ep.steps[i].instruction_text;
            r.observation.scene_objects.assign(ep.scene_objects.begin(), ep.scene_objects.end());
            EXPECT_EQ(bernoulli_policy(r, *truth, 1.0, 9), oracle_policy(r, *truth));
            EXPECT_EQ(bernoulli_policy(r, *truth, 0.0, 9), naive_policy(r, *truth));
        }
    }
}

TEST(Descriptor, ParseAndPrint) {
    auto d = TransportDescriptor::parse("builtin:bernoulli:0.25:7");
    EXPECT_EQ(d.kind, TransportDescriptor::Kind::Builtin);
    EXPECT_EQ(d.builtin, "bernoulli");
    EXPECT_DOUBLE_EQ(d.p, 0.25);
    EXPECT_EQ(d.seed, 7u);
    EXPECT_EQ(TransportDescriptor::parse(d.to_string()).to_string(), d.to_string());
    auto t = TransportDescriptor::parse("tcp:127.0.0.1:9000");
    EXPECT_EQ(t.kind, TransportDescriptor::Kind::Tcp);
    EXPECT_EQ(t.port, 9000);
    auto e = TransportDescriptor::parse("exec:python3 -m policy --flag x:y");
    EXPECT_EQ(e.kind, TransportDescriptor::Kind::Subprocess);
    EXPECT_EQ(e.command, "python3 -m policy --flag x:y");
    for (const char* bad : {"", "builtin:psychic", "builtin:bernoulli:1.5", "builtin:bernoulli:x", "tcp:host",
                            "tcp:host:99999", "exec:", "carrier-pigeon:1"}) {
        EXPECT_THROW(TransportDescriptor::parse(bad), ConfigError) << bad;
    }
}

TEST(ServeStream, AnswersRequestsAndErrors) {
    auto eps = dataset();
    auto truth = truth_for(eps);
    auto fn = make_builtin_policy(TransportDescriptor::parse("builtin:oracle"), truth);
    auto req = request_for(eps.back(), 0, "take the drawer off the grill");
    std::istringstream in(encode_hello() + "\nnot json\n" + encode_request(req) + "\n" + encode_bye() + "\n" +
                          encode_request(req) + "\n");
    std::ostringstream out;
    EXPECT_EQ(serve_stream(in, out, fn), 0);
    std::istringstream lines(out.str());
    std::string line;
    std::vector<Message> got;
    while (std::getline(lines, line)) got.push_back(decode_message(line));
    ASSERT_EQ(got.size(), 3u);
    EXPECT_EQ(got[0].type, MessageType::Hello);
    EXPECT_EQ(got[1].type, MessageType::Error);
    EXPECT_EQ(got[2].type, MessageType::Response);
    EXPECT_EQ(got[2].text, test::golden("id_gpt_clarify"));
}

TEST(ServeStream, PolicyExceptionsBecomeErrors) {
    PolicyFn fn = [](const PolicyRequest&) -> std::string { throw std::runtime_error("model exploded"); };
    auto req = request_for(dataset().back(), 0, "x");
    std::istringstream in(encode_hello() + "\n" + encode_request(req) + "\n" + encode_request(req) + "\n");
    std::ostringstream out;
    EXPECT_EQ(serve_stream(in, out, fn), 0);
    std::istringstream lines(out.str());
    std::string line;
    int errors = 0;
    while (std::getline(lines, line)) errors += decode_message(line).type == MessageType::Error;
    EXPECT_EQ(errors, 2);
}

TEST(ServeStream, VersionMismatchExits) {
    PolicyFn fn = [](const PolicyRequest&) { return std::string(); };
    std::istringstream in(encode_hello("iva/2") + "\n");
    std::ostringstream out;
    EXPECT_EQ(serve_stream(in, out, fn), 2);
}

TEST(Subprocess, BuiltinOracleOverPipes) {
    test::TempDir dir("sub");
    auto eps = dataset();
    auto data = write_dataset_dir(dir, eps);
    auto truth = truth_for(eps);
    std::ostringstream log;
    ConnectOptions opts;
    opts.recorder = std::make_shared<SessionRecorder>(log);
    auto handle = connect(TransportDescriptor::parse(serve_command(data)), truth, opts);
    EXPECT_EQ(handle->state(), HandleState::Ready);
    auto in_process = connect(TransportDescriptor::parse("builtin:oracle"), truth);
    for (const auto& ep : eps) {
        auto a = run_episode(ep, *handle, RunMode::FalsePremise);
        auto b = run_episode(ep, *in_process, RunMode::FalsePremise);
        ASSERT_EQ(a.turns.size(), b.turns.size());
        for (std::size_t i = 0; i < a.turns.size(); ++i) {
            EXPECT_EQ(a.turns[i].response_text, b.turns[i].response_text);
            EXPECT_EQ(a.turns[i].followup_response_text, b.turns[i].followup_response_text);
        }
    }
    handle->close();
    EXPECT_EQ(handle->state(), HandleState::Closed);
    std::istringstream in(log.str());
    auto report = validate_session(read_session(in));
    EXPECT_TRUE(report.ok()) << (report.problems.empty() ? "" : report.problems.front());
    EXPECT_GT(report.requests, eps.size());
}

TEST(Subprocess, VersionMismatch) {
    test::TempDir dir("ver");
    auto eps = dataset();
    auto data = write_dataset_dir(dir, eps);
    EXPECT_THROW(connect(TransportDescriptor::parse(serve_command(data, "--advertise-version iva/2")), truth_for(eps)),
                 VersionMismatch);
}

TEST(Subprocess, SilentPeerTimesOut) {
    ConnectOptions opts;
    opts.handshake_timeout_ms = 200;
    auto start = std::chrono::steady_clock::now();
    EXPECT_THROW(connect(TransportDescriptor::parse("exec:sleep 5"), nullptr, opts), PolicyTimeout);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(3));
}

TEST(Subprocess, SlowAnswerTimesOut) {
    test::TempDir dir("slow");
    auto script = dir / "slow.sh";
    {
        std::ofstream out(script);
        out << "read line\necho '" << encode_hello() << "'\nread line\nsleep 5\n";
    }
    auto handle = connect(TransportDescriptor::parse("exec:sh " + script.string()), nullptr);
    PolicyRequest r;
    r.episode_id = "e";
    r.deadline_ms = 200;
    auto start = std::chrono::steady_clock::now();
    EXPECT_THROW(handle->query(r), PolicyTimeout);
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(3));
    EXPECT_NE(handle->state(), HandleState::Ready);
}

TEST(Subprocess, PeerExitIsTransportError) {
    EXPECT_THROW(connect(TransportDescriptor::parse("exec:true"), nullptr), TransportError);
}

TEST(Tcp, ServesBuiltinPolicy) {
    auto eps = dataset();
    auto truth = truth_for(eps);
    TcpPolicyServer server(make_builtin_policy(TransportDescriptor::parse("builtin:oracle"), truth), "127.0.0.1", 0);
    ASSERT_GT(server.port(), 0);
    std::thread runner([&] { server.run(); });
    {
        auto d = TransportDescriptor::parse("tcp:127.0.0.1:" + std::to_string(server.port()));
        auto a = connect(d, truth);
        auto b = connect(d, truth);
        auto tr = run_episode(eps.back(), *a, RunMode::FalsePremise);
        EXPECT_EQ(tr.turns[0].response_text, test::golden("id_gpt_clarify"));
        auto tr2 = run_episode(eps.front(), *b, RunMode::TruePremise);
        EXPECT_EQ(tr2.turns.size(), eps.front().steps.size());
        a->close();
        b->close();
    }
    server.stop();
    runner.join();
}

TEST(Tcp, UnreachableAddress) {
    EXPECT_THROW(connect(TransportDescriptor::parse("tcp:127.0.0.1:1"), nullptr), TransportError);
}

TEST(InProcess, ErrorsBecomeText) {
    auto eps = dataset();
    auto truth = truth_for(eps);
    auto h = connect(TransportDescriptor::parse("builtin:oracle"), truth);
    PolicyRequest r;
    r.episode_id = "ghost";
    auto text = h->query(r);
    EXPECT_EQ(text.rfind("error: ", 0), 0u);
    EXPECT_TRUE(holds<Malformed>(parse_response(text)));
}
