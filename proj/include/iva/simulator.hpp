#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "iva/episode.hpp"
#include "iva/policy.hpp"
#include "iva/protocol.hpp"
#include "iva/response.hpp"

namespace iva {

struct DialogueTurn {
    std::size_t step_index = 0;
    std::string instruction_sent;
    std::string response_text;
    PolicyResponse response;
    // Present iff `response` is a Clarify.
    std::optional<std::string> followup_sent;
    std::optional<std::string> followup_response_text;
    std::optional<PolicyResponse> followup_response;

    /// The response that decides execution: the follow-up answer after a
    /// clarification, the first answer otherwise.
    const PolicyResponse& effective_response() const { return followup_response ? *followup_response : response; }
};

enum class TerminationReason { Refused, MalformedLimit };

std::string_view to_string(TerminationReason reason) noexcept;

struct Transcript {
    std::string episode_id;
    std::string task_name;
    RunMode mode = RunMode::TruePremise;
    std::vector<DialogueTurn> turns;
    bool terminated_early = false;
    std::optional<TerminationReason> termination_reason;
    /// Set when the policy connection failed mid-episode; such transcripts are
    /// reported but not scored.
    std::optional<std::string> failure;
};

struct SimOptions {
    int timeout_ms = 30000;
    /// Consecutive malformed turns that end an episode.
    std::size_t malformed_limit = 5;
};

/// Instruction sent after a clarification: the true-premise instruction
/// prefixed with "Yes, " and phrased "using the {mode} control".
std::string followup_instruction(const std::string& true_premise_instruction);

/// Runs one episode. Throws TransportError / PolicyTimeout from the handle.
Transcript run_episode(const EpisodeRecord& episode, PolicyConnection& policy, RunMode mode,
                       const SimOptions& options = {});

using PolicyFactory = std::function<PolicyHandle()>;

struct SuiteResult {
    std::vector<Transcript> transcripts;  // ordered by (task, episode_id, mode)
    std::size_t completed = 0;
    std::size_t failed = 0;
};

/// Runs every episode once per mode (true premise first). Each worker owns one
/// handle; failed handles are replaced through `factory`. Transport failures
/// are recorded per transcript and never abort the suite.
SuiteResult run_suite(const std::vector<EpisodeRecord>& dataset, const PolicyFactory& factory,
                      const SimOptions& options = {}, std::size_t parallelism = 1);

// Transcript files: one JSON record per turn plus an "end" record per run.
inline constexpr const char* kTranscriptSchema = "iva-transcript/1";

void write_transcripts(std::ostream& out, const std::vector<Transcript>& transcripts);
std::vector<Transcript> read_transcripts(std::istream& in);

}  // namespace iva
