#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "iva/instruction.hpp"
#include "iva/response.hpp"

namespace iva {

struct TruePremise {
    bool operator==(const TruePremise&) const = default;
};

/// The instruction names a plausible object that is absent; `intended_object`
/// is the one actually in the scene.
struct InDomainFP {
    std::string absent_object;
    std::string intended_object;
    bool operator==(const InDomainFP&) const = default;
};

struct OutOfDomainFP {
    std::string absent_object;
    bool operator==(const OutOfDomainFP&) const = default;
};

using PremiseLabel = std::variant<TruePremise, InDomainFP, OutOfDomainFP>;

enum class PremiseKind { TruePremise, InDomain, OutOfDomain };

PremiseKind kind_of(const PremiseLabel& label) noexcept;
/// "tp", "id", "ood".
std::string_view to_string(PremiseKind kind) noexcept;
PremiseKind premise_kind_from_string(std::string_view s);

struct StepObservation {
    std::optional<std::string> image_ref;
    bool operator==(const StepObservation&) const = default;
};

struct StepRecord {
    StepObservation observation;
    ProprioState proprio;
    Action gt_action{};
    std::vector<TracePoint> gt_trace;
    PremiseLabel premise;
    std::string instruction_text;           // as labeled; carries the false premise on FP steps
    std::string true_premise_instruction;   // the unmodified instruction

    bool operator==(const StepRecord&) const = default;
};

/// One trajectory. Scene observations are an object inventory shared by every step.
struct EpisodeRecord {
    std::string episode_id;
    std::string task_name;
    std::set<std::string> scene_objects;
    std::vector<StepRecord> steps;
    std::uint64_t source_seed = 0;

    /// InDomain if any step carries an in-domain premise, OutOfDomain likewise,
    /// TruePremise otherwise.
    PremiseKind kind() const noexcept;
    std::size_t false_premise_steps() const noexcept;

    bool operator==(const EpisodeRecord&) const = default;
};

/// Checks the episode invariants: non-empty steps, binary gripper, non-negative
/// trace, target present in the scene and label consistency. Throws InvalidSpec.
void validate(const EpisodeRecord& episode, const TaskLexicon& lexicon);

/// Target noun of the episode's true-premise instruction.
std::string episode_target(const EpisodeRecord& episode, const TaskLexicon& lexicon);

struct DistractorPools {
    std::vector<std::string> in_domain;
    std::vector<std::string> out_of_domain;

    /// Throws ConfigError unless both pools are non-empty and disjoint.
    void validate() const;
    bool is_in_domain(std::string_view noun) const;
};

struct GenConfig {
    double frac_id_episodes = 0.65;
    double frac_ood_episodes = 0.20;
    double step_injection_rate = 0.10;
    std::uint64_t seed = 0;

    /// Throws ConfigError.
    void validate() const;
};

}  // namespace iva
