#include "iva/episode.hpp"

#include <algorithm>
#include <cmath>

#include "iva/error.hpp"

namespace iva {

PremiseKind kind_of(const PremiseLabel& label) noexcept {
    switch (label.index()) {
        case 1:
            return PremiseKind::InDomain;
        case 2:
            return PremiseKind::OutOfDomain;
        default:
            return PremiseKind::TruePremise;
    }
}

std::string_view to_string(PremiseKind kind) noexcept {
    switch (kind) {
        case PremiseKind::InDomain:
            return "id";
        case PremiseKind::OutOfDomain:
            return "ood";
        default:
            return "tp";
    }
}

PremiseKind premise_kind_from_string(std::string_view s) {
    if (s == "tp") return PremiseKind::TruePremise;
    if (s == "id") return PremiseKind::InDomain;
    if (s == "ood") return PremiseKind::OutOfDomain;
    throw InvalidSpec("unknown premise kind '" + std::string(s) + "'");
}

PremiseKind EpisodeRecord::kind() const noexcept {
    bool ood = false;
    for (const auto& step : steps) {
        auto k = kind_of(step.premise);
        if (k == PremiseKind::InDomain) return k;
        ood = ood || k == PremiseKind::OutOfDomain;
    }
    return ood ? PremiseKind::OutOfDomain : PremiseKind::TruePremise;
}

std::size_t EpisodeRecord::false_premise_steps() const noexcept {
    return static_cast<std::size_t>(std::count_if(steps.begin(), steps.end(), [](const StepRecord& s) {
        return kind_of(s.premise) != PremiseKind::TruePremise;
    }));
}

std::string episode_target(const EpisodeRecord& episode, const TaskLexicon& lexicon) {
    if (episode.steps.empty()) throw InvalidSpec("episode " + episode.episode_id + " has no steps");
    auto spec = parse_instruction(episode.steps.front().true_premise_instruction);
    return extract_target_noun(spec.task_sentence, lexicon);
}

void validate(const EpisodeRecord& episode, const TaskLexicon& lexicon) {
    const auto& id = episode.episode_id;
    if (episode.steps.empty()) throw InvalidSpec("episode " + id + " has no steps");
    auto target = episode_target(episode, lexicon);
    if (!episode.scene_objects.contains(target)) {
        throw InvalidSpec("episode " + id + ": target '" + target + "' is not in the scene");
    }
    for (std::size_t i = 0; i < episode.steps.size(); ++i) {
        const auto& step = episode.steps[i];
        auto where = "episode " + id + " step " + std::to_string(i);
        double grip = step.gt_action[kActionDim - 1].value();
        if (grip != 0.0 && grip != 1.0) throw InvalidSpec(where + ": gripper must be 0 or 1");
        for (const auto& a : step.gt_action) {
            if (!std::isfinite(a.value())) throw InvalidSpec(where + ": non-finite action");
        }
        for (const auto& p : step.gt_trace) {
            if (p.row < 0 || p.col < 0) throw InvalidSpec(where + ": negative trace coordinate");
        }
        if (const auto* fp = std::get_if<InDomainFP>(&step.premise)) {
            if (episode.scene_objects.contains(fp->absent_object)) {
                throw InvalidSpec(where + ": in-domain absent object is in the scene");
            }
            if (!episode.scene_objects.contains(fp->intended_object)) {
                throw InvalidSpec(where + ": intended object is not in the scene");
            }
        } else if (const auto* ood = std::get_if<OutOfDomainFP>(&step.premise)) {
            if (episode.scene_objects.contains(ood->absent_object)) {
                throw InvalidSpec(where + ": out-of-domain object is in the scene");
            }
        } else if (step.instruction_text != step.true_premise_instruction) {
            throw InvalidSpec(where + ": true-premise step has a rewritten instruction");
        }
    }
}

void DistractorPools::validate() const {
    if (in_domain.empty() || out_of_domain.empty()) throw ConfigError("distractor pools must be non-empty");
    for (const auto& noun : in_domain) {
        if (std::find(out_of_domain.begin(), out_of_domain.end(), noun) != out_of_domain.end()) {
            throw ConfigError("distractor pools overlap on '" + noun + "'");
        }
    }
}

bool DistractorPools::is_in_domain(std::string_view noun) const {
    return std::find(in_domain.begin(), in_domain.end(), noun) != in_domain.end();
}

void GenConfig::validate() const {
    auto in_unit = [](double f) { return std::isfinite(f) && f >= 0.0 && f <= 1.0; };
    if (!in_unit(frac_id_episodes) || !in_unit(frac_ood_episodes) || !in_unit(step_injection_rate)) {
        throw ConfigError("fractions must lie in [0, 1]");
    }
    if (frac_id_episodes + frac_ood_episodes > 1.0 + 1e-12) {
        throw ConfigError("frac_id + frac_ood must not exceed 1");
    }
}

}  // namespace iva
