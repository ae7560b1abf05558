#include "iva/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <istream>
#include <ostream>
#include <thread>
#include <tuple>

#include "iva/error.hpp"
#include "iva/instruction.hpp"
#include "iva/json_util.hpp"

namespace iva {

std::string_view to_string(TerminationReason reason) noexcept {
    return reason == TerminationReason::Refused ? "refused" : "malformed_limit";
}

std::string followup_instruction(const std::string& true_premise_instruction) {
    auto parsed = parse_instruction_with_surface(true_premise_instruction);
    parsed.surface.preamble = "Yes, ";
    parsed.surface.control_article = true;
    return render_instruction(parsed.spec, parsed.surface);
}

Transcript run_episode(const EpisodeRecord& episode, PolicyConnection& policy, RunMode mode,
                       const SimOptions& options) {
    Transcript tr;
    tr.episode_id = episode.episode_id;
    tr.task_name = episode.task_name;
    tr.mode = mode;

    const std::vector<std::string> scene(episode.scene_objects.begin(), episode.scene_objects.end());
    std::size_t consecutive_malformed = 0;
    const auto n = episode.steps.size();

    for (std::size_t i = 0; i < n; ++i) {
        const auto& step = episode.steps[i];
        PolicyRequest req;
        req.episode_id = episode.episode_id;
        req.step = i;
        req.mode = mode;
        req.instruction = mode == RunMode::TruePremise ? step.true_premise_instruction : step.instruction_text;
        req.observation.scene_objects = scene;
        req.observation.image_ref = step.observation.image_ref;
        req.deadline_ms = options.timeout_ms;

        DialogueTurn turn;
        turn.step_index = i;
        turn.instruction_sent = req.instruction;
        turn.response_text = policy.query(req);
        turn.response = parse_response(turn.response_text);

        if (holds<Clarify>(turn.response)) {
            // One clarification round: whatever comes back is recorded, no further prompt.
            PolicyRequest again = req;
            again.followup = true;
            again.instruction = followup_instruction(step.true_premise_instruction);
            turn.followup_sent = again.instruction;
            turn.followup_response_text = policy.query(again);
            turn.followup_response = parse_response(*turn.followup_response_text);
        }

        const bool refused = holds<Refuse>(turn.response);
        const bool malformed = holds<Malformed>(turn.response);
        tr.turns.push_back(std::move(turn));

        std::optional<TerminationReason> stop;
        if (refused) {
            stop = TerminationReason::Refused;
        } else if (malformed) {
            if (++consecutive_malformed >= options.malformed_limit) stop = TerminationReason::MalformedLimit;
        } else {
            consecutive_malformed = 0;
        }
        if (stop) {
            if (i + 1 < n) {
                tr.terminated_early = true;
                tr.termination_reason = stop;
            }
            break;
        }
    }
    return tr;
}

SuiteResult run_suite(const std::vector<EpisodeRecord>& dataset, const PolicyFactory& factory,
                      const SimOptions& options, std::size_t parallelism) {
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = dataset[a];
        const auto& y = dataset[b];
        return std::tie(x.task_name, x.episode_id) < std::tie(y.task_name, y.episode_id);
    });

    struct Job {
        std::size_t episode;
        RunMode mode;
    };
    std::vector<Job> jobs;
    jobs.reserve(order.size() * 2);
    for (auto idx : order) {
        jobs.push_back({idx, RunMode::TruePremise});
        jobs.push_back({idx, RunMode::FalsePremise});
    }

    std::vector<Transcript> results(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        PolicyHandle handle;
        for (;;) {
            auto j = next.fetch_add(1);
            if (j >= jobs.size()) break;
            const auto& ep = dataset[jobs[j].episode];
            try {
                if (!handle || handle->state() != HandleState::Ready) handle = factory();
                results[j] = run_episode(ep, *handle, jobs[j].mode, options);
            } catch (const Error& e) {
                Transcript failed;
                failed.episode_id = ep.episode_id;
                failed.task_name = ep.task_name;
                failed.mode = jobs[j].mode;
                failed.failure = e.what();
                results[j] = std::move(failed);
                if (handle && handle->state() == HandleState::Ready) handle->close();
                handle.reset();
            }
        }
        if (handle) handle->close();
    };

    const auto threads = std::max<std::size_t>(1, std::min(parallelism, jobs.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    SuiteResult out;
    out.transcripts = std::move(results);
    for (const auto& t : out.transcripts) {
        if (t.failure) ++out.failed;
        else ++out.completed;
    }
    return out;
}

// ---------------------------------------------------------------------------

void write_transcripts(std::ostream& out, const std::vector<Transcript>& transcripts) {
    for (const auto& tr : transcripts) {
        for (const auto& turn : tr.turns) {
            ojson j;
            j["schema"] = kTranscriptSchema;
            j["kind"] = "turn";
            j["episode_id"] = tr.episode_id;
            j["task"] = tr.task_name;
            j["mode"] = to_string(tr.mode);
            j["step"] = turn.step_index;
            j["instruction"] = turn.instruction_sent;
            j["response"] = turn.response_text;
            j["response_kind"] = response_kind(turn.response);
            if (turn.followup_sent) {
                j["followup"] = *turn.followup_sent;
                j["followup_response"] = *turn.followup_response_text;
                j["followup_response_kind"] = response_kind(*turn.followup_response);
            }
            out << j.dump() << '\n';
        }
        ojson end;
        end["schema"] = kTranscriptSchema;
        end["kind"] = "end";
        end["episode_id"] = tr.episode_id;
        end["task"] = tr.task_name;
        end["mode"] = to_string(tr.mode);
        end["turns"] = tr.turns.size();
        end["terminated_early"] = tr.terminated_early;
        end["termination_reason"] = tr.termination_reason ? ojson(to_string(*tr.termination_reason)) : ojson(nullptr);
        end["failure"] = tr.failure ? ojson(*tr.failure) : ojson(nullptr);
        out << end.dump() << '\n';
    }
}

std::vector<Transcript> read_transcripts(std::istream& in) {
    std::vector<Transcript> out;
    Transcript current;
    bool open = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = ojson::parse(line);
            if (j.value("schema", "") != std::string(kTranscriptSchema)) throw DatasetFormatError("unknown schema");
            const auto episode_id = j.at("episode_id").get<std::string>();
            const auto mode = run_mode_from_string(j.at("mode").get<std::string>());
            if (!open) {
                current = Transcript{};
                current.episode_id = episode_id;
                current.task_name = j.at("task").get<std::string>();
                current.mode = mode;
                open = true;
            } else if (current.episode_id != episode_id || current.mode != mode) {
                throw DatasetFormatError("turn records of different runs are interleaved");
            }
            const auto kind = j.at("kind").get<std::string>();
            if (kind == "turn") {
                DialogueTurn turn;
                turn.step_index = j.at("step").get<std::size_t>();
                turn.instruction_sent = j.at("instruction").get<std::string>();
                turn.response_text = j.at("response").get<std::string>();
                turn.response = parse_response(turn.response_text);
                if (j.contains("followup")) {
                    turn.followup_sent = j["followup"].get<std::string>();
                    turn.followup_response_text = j.at("followup_response").get<std::string>();
                    turn.followup_response = parse_response(*turn.followup_response_text);
                }
                current.turns.push_back(std::move(turn));
            } else if (kind == "end") {
                if (j.at("turns").get<std::size_t>() != current.turns.size()) {
                    throw DatasetFormatError("end record disagrees with the number of turns");
                }
                current.terminated_early = j.at("terminated_early").get<bool>();
                const auto& reason = j.at("termination_reason");
                if (!reason.is_null()) {
                    current.termination_reason = reason.get<std::string>() == "refused"
                                                     ? TerminationReason::Refused
                                                     : TerminationReason::MalformedLimit;
                }
                if (!j.at("failure").is_null()) current.failure = j["failure"].get<std::string>();
                out.push_back(std::move(current));
                open = false;
            } else {
                throw DatasetFormatError("unknown record kind '" + kind + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw DatasetFormatError("transcript line " + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw DatasetFormatError("transcript line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (open) throw DatasetFormatError("transcript file ends inside a run");
    return out;
}

}  // namespace iva
