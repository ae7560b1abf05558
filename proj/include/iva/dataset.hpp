#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "iva/episode.hpp"
#include "iva/instruction.hpp"

namespace iva {

// ---------------------------------------------------------------------------
// Tasks

/// A benchmark task: its sentence pattern, the object the pattern targets and
/// the other objects that populate the scene.
struct TaskDef {
    std::string name;
    std::string pattern;
    std::string target;
    std::vector<std::string> scene_extras;
};

/// The nine tabletop tasks shipped with the harness, in report order.
const std::vector<TaskDef>& builtin_tasks();
const TaskDef* find_builtin_task(std::string_view name);

TaskLexicon make_lexicon(const std::vector<TaskDef>& tasks);
const TaskLexicon& builtin_lexicon();
const DistractorPools& builtin_pools();

// ---------------------------------------------------------------------------
// False-premise injection

/// Replaces the object slot of the task sentence. Throws NoSlotMatch.
InstructionSpec substitute_object(const InstructionSpec& instruction, std::string_view replacement,
                                  const TaskLexicon& lexicon);

struct PartitionCounts {
    std::size_t out_of_domain = 0;
    std::size_t in_domain = 0;
    std::size_t true_premise = 0;
};

/// Largest-remainder split of `n` episodes by the configured fractions.
PartitionCounts partition_counts(std::size_t n, const GenConfig& cfg);

/// Number of steps that carry the false premise: max(1, ceil(rate * steps)),
/// never more than `steps`.
std::size_t fp_step_count(std::size_t steps, double rate);

/// Labels a corpus of true-premise episodes. Output order matches input order;
/// the result depends only on the inputs and `cfg.seed`.
/// Throws ConfigError or PoolExhausted.
std::vector<EpisodeRecord> generate_dataset(const std::vector<EpisodeRecord>& episodes,
                                            const DistractorPools& pools, const GenConfig& cfg,
                                            const TaskLexicon& lexicon);

// ---------------------------------------------------------------------------
// Episode sources

struct SynthConfig {
    std::size_t episodes = 225;
    std::vector<TaskDef> tasks;  // episodes are dealt round-robin over these
    std::size_t min_steps = 8;
    std::size_t max_steps = 24;
    std::size_t history = 5;
    std::string robot = "Franka";
    std::string control_mode = "joint";
    std::uint64_t seed = 0;
};

/// Random joint-space walks with piecewise-linear image traces.
std::vector<EpisodeRecord> synthesize_episodes(const SynthConfig& cfg);

/// Builds the rendered instruction for step `t` (history zero-padded at the start).
InstructionSpec step_instruction(const std::string& robot, const std::string& control_mode,
                                 const std::string& task_sentence, const std::vector<ProprioState>& proprio,
                                 std::size_t t, std::size_t history);

/// Reads externally exported trajectories, one JSON object per line:
/// `{"episode_id", "task", "task_sentence", "scene_objects", "robot"?, "control_mode"?,
///   "steps": [{"joints": [7], "action": [8], "trace": [[r, c], ...], "image"?}]}`
std::vector<EpisodeRecord> import_trajectories(std::istream& in);

// ---------------------------------------------------------------------------
// Serialization

inline constexpr const char* kDatasetSchema = "iva-dataset/1";

std::string episode_to_json_line(const EpisodeRecord& episode);
EpisodeRecord episode_from_json_line(std::string_view line);

void write_dataset(std::ostream& out, const std::vector<EpisodeRecord>& episodes);
std::vector<EpisodeRecord> read_dataset(std::istream& in);
std::vector<EpisodeRecord> read_dataset_file(const std::string& path);
void write_dataset_file(const std::string& path, const std::vector<EpisodeRecord>& episodes);

std::string pools_to_json(const DistractorPools& pools);
DistractorPools pools_from_json(std::string_view text);
DistractorPools read_pools_file(const std::string& path);

}  // namespace iva
