#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iva/episode.hpp"
#include "iva/protocol.hpp"
#include "iva/simulator.hpp"

namespace iva {

/// How false-premise steps after a correct refusal count.
enum class PostRefusal { Exclude, ScoreOne };

PostRefusal post_refusal_from_string(std::string_view s);
std::string_view to_string(PostRefusal p) noexcept;

struct StepScore {
    std::size_t step_index = 0;
    PremiseKind premise = PremiseKind::TruePremise;
    std::optional<int> detection;  // nullopt: excluded
    std::optional<int> execution;  // present only when the effective response was Accept
};

struct EpisodeScore {
    std::string episode_id;
    std::string task_name;
    RunMode mode = RunMode::TruePremise;
    PremiseKind premise_kind = PremiseKind::TruePremise;
    std::optional<double> fp_score;  // false-premise runs of labeled episodes only
    std::optional<int> tp_success;   // true-premise runs only
    std::size_t fp_steps_scored = 0;
    std::size_t fp_steps_detected = 0;
    std::size_t malformed = 0;
    std::vector<StepScore> steps;

    /// Mean of whichever of tp_success / fp_score is present.
    std::optional<double> value() const;
};

/// Detection of the first response against the step label:
/// true premise -> Accept, out-of-domain -> Refuse, in-domain -> Clarify that
/// suggests the intended object.
int score_detection(const PremiseLabel& label, const DialogueTurn& turn);

struct EmittedAction {
    std::size_t step_index = 0;
    std::vector<double> values;
};

/// 1 iff every emitted action is within `tol` of its step's ground truth per
/// component and the gripper bits agree. Throws DimensionMismatch.
int score_execution(std::span<const EmittedAction> actions, const EpisodeRecord& episode, double tol = 1e-6);

/// Pluggable success detector; the default is `score_execution` at a tolerance.
using SuccessDetector = std::function<int(std::span<const EmittedAction>, const EpisodeRecord&)>;
SuccessDetector trajectory_match_detector(double tol = 1e-6);

struct ScoringOptions {
    PostRefusal post_refusal = PostRefusal::Exclude;
    SuccessDetector detector = trajectory_match_detector();
};

/// Scores one completed transcript against its episode.
EpisodeScore score_transcript(const Transcript& transcript, const EpisodeRecord& episode,
                              const ScoringOptions& options = {});

/// Scores every transcript without a transport failure. Throws UnknownEpisode.
std::vector<EpisodeScore> score_transcripts(const std::vector<Transcript>& transcripts,
                                            const std::vector<EpisodeRecord>& dataset,
                                            const ScoringOptions& options = {});

// ---------------------------------------------------------------------------
// Aggregation

struct TaskMetrics {
    std::string task_name;
    std::optional<double> fp_detect_id;
    std::optional<double> fp_detect_ood;
    std::optional<double> tp_success;
    /// Mean false-premise episode score, in- and out-of-domain weighted by episode count.
    std::optional<double> fp_success;
    /// Same with both kinds weighted equally.
    std::optional<double> fp_success_equal;
    std::optional<double> overall;

    std::size_t tp_runs = 0;
    std::size_t tp_successes = 0;
    std::size_t id_episodes = 0;
    std::size_t ood_episodes = 0;
    std::size_t malformed = 0;
};

struct SuiteMetrics {
    std::vector<TaskMetrics> tasks;  // sorted by task name
    /// Mean over episodes of the episode score.
    double overall = 0.0;
    std::size_t episodes = 0;
    std::size_t scored_runs = 0;
    std::size_t malformed = 0;
    /// Mean and sample standard deviation of per-task TP success.
    std::optional<double> tp_mean;
    std::optional<double> tp_stddev;
};

/// (tp + fp) / 2.
double overall_success(double tp_success, double fp_success) noexcept;

/// Throws EmptyInput.
SuiteMetrics aggregate(const std::vector<EpisodeScore>& scores);

// Score files: one JSON record per EpisodeScore.
inline constexpr const char* kScoresSchema = "iva-scores/1";
void write_scores(std::ostream& out, const std::vector<EpisodeScore>& scores);
std::vector<EpisodeScore> read_scores(std::istream& in);

}  // namespace iva
