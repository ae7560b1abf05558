#include "iva/dataset.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "iva/error.hpp"
#include "iva/rng.hpp"

namespace iva {

const std::vector<TaskDef>& builtin_tasks() {
    static const std::vector<TaskDef> tasks = {
        {"meat_off_grill", "take the {OBJECT} off the grill", "chicken", {"grill", "steak"}},
        {"open_drawer", "open the top {OBJECT}", "drawer", {"cabinet"}},
        {"push_buttons", "push the {OBJECT}", "red button", {"maroon button", "green button"}},
        {"put_money_in_safe", "put the money away in the {OBJECT}", "safe", {"money", "shelf"}},
        {"reach_and_drag", "use the stick to drag the {OBJECT} onto the red target", "cube", {"stick", "red target"}},
        {"slide_block", "slide the {OBJECT} to target", "block", {"green target"}},
        {"sweep_to_dustpan", "sweep dirt to the {OBJECT}", "dustpan", {"broom", "dirt"}},
        {"turn_tap", "turn left {OBJECT}", "tap", {"sink"}},
        {"close_jar", "close the {OBJECT}", "jar", {"lid", "blue jar"}},
    };
    return tasks;
}

const TaskDef* find_builtin_task(std::string_view name) {
    for (const auto& t : builtin_tasks()) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

TaskLexicon make_lexicon(const std::vector<TaskDef>& tasks) {
    TaskLexicon lex;
    for (const auto& t : tasks) lex.add(t.name, t.pattern);
    return lex;
}

const TaskLexicon& builtin_lexicon() {
    static const TaskLexicon lex = make_lexicon(builtin_tasks());
    return lex;
}

const DistractorPools& builtin_pools() {
    static const DistractorPools pools{
        {"blue safe", "drawer", "mug", "jar", "chicken", "block", "dustpan", "tap", "red button", "cube", "safe",
         "lid", "broom", "steak", "cupboard", "bottle", "middle block", "sponge"},
        {"sofa", "durian", "elephant", "piano", "giraffe", "umbrella", "bicycle", "octopus", "volcano",
         "saxophone", "tree", "igloo"},
    };
    return pools;
}

InstructionSpec substitute_object(const InstructionSpec& instruction, std::string_view replacement,
                                  const TaskLexicon& lexicon) {
    auto m = lexicon.match(instruction.task_sentence);
    const SlotPattern* pattern = lexicon.find(m.task);
    InstructionSpec out = instruction;
    out.task_sentence = pattern->fill(replacement);
    return out;
}

PartitionCounts partition_counts(std::size_t n, const GenConfig& cfg) {
    cfg.validate();
    const double fracs[3] = {cfg.frac_ood_episodes, cfg.frac_id_episodes,
                             std::max(0.0, 1.0 - cfg.frac_ood_episodes - cfg.frac_id_episodes)};
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> remainders{};
    std::size_t assigned = 0;
    for (int k = 0; k < 3; ++k) {
        double quota = fracs[k] * static_cast<double>(n);
        // Absorb representation error such as 0.65 * 100 = 65.00000000000001.
        double whole = std::floor(quota + 1e-9);
        counts[k] = static_cast<std::size_t>(whole);
        remainders[k] = std::max(0.0, quota - whole);
        assigned += counts[k];
    }
    while (assigned < n) {
        int best = 0;
        for (int k = 1; k < 3; ++k) {
            if (remainders[k] > remainders[best] + 1e-12) best = k;
        }
        ++counts[best];
        remainders[best] = -1.0;
        ++assigned;
    }
    while (assigned > n) {
        // Only reachable through the rounding tolerance above.
        auto k = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        --counts[k];
        --assigned;
    }
    return {counts[0], counts[1], counts[2]};
}

std::size_t fp_step_count(std::size_t steps, double rate) {
    if (steps == 0) return 0;
    double raw = std::ceil(rate * static_cast<double>(steps) - 1e-9);
    auto k = static_cast<std::size_t>(std::max(1.0, raw));
    return std::min(k, steps);
}

namespace {

std::vector<std::string> candidates_absent_from(const std::vector<std::string>& pool, const EpisodeRecord& ep,
                                                const std::string& target) {
    std::vector<std::string> out;
    for (const auto& noun : pool) {
        if (noun != target && !ep.scene_objects.contains(noun)) out.push_back(noun);
    }
    return out;
}

void inject(EpisodeRecord& ep, PremiseKind kind, const DistractorPools& pools, const GenConfig& cfg,
            const TaskLexicon& lexicon) {
    Rng rng(derive_seed(cfg.seed, ep.episode_id));
    const auto target = episode_target(ep, lexicon);
    const auto& pool = kind == PremiseKind::InDomain ? pools.in_domain : pools.out_of_domain;
    const auto candidates = candidates_absent_from(pool, ep, target);
    if (candidates.empty()) {
        throw PoolExhausted("no " + std::string(to_string(kind)) + " distractor is absent from episode " +
                            ep.episode_id);
    }

    std::vector<std::size_t> order(ep.steps.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const auto k = fp_step_count(ep.steps.size(), cfg.step_injection_rate);
    // Partial Fisher-Yates: the first k entries become a uniform sample.
    for (std::size_t i = 0; i < k; ++i) {
        auto j = i + static_cast<std::size_t>(rng.index(order.size() - i));
        std::swap(order[i], order[j]);
    }
    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());

    for (auto idx : chosen) {
        auto& step = ep.steps[idx];
        const auto& noun = candidates[static_cast<std::size_t>(rng.index(candidates.size()))];
        auto parsed = parse_instruction_with_surface(step.true_premise_instruction);
        auto rewritten = substitute_object(parsed.spec, noun, lexicon);
        step.instruction_text = render_instruction(rewritten, parsed.surface);
        if (kind == PremiseKind::InDomain) {
            step.premise = InDomainFP{noun, target};
        } else {
            step.premise = OutOfDomainFP{noun};
        }
    }
}

}  // namespace

std::vector<EpisodeRecord> generate_dataset(const std::vector<EpisodeRecord>& episodes,
                                            const DistractorPools& pools, const GenConfig& cfg,
                                            const TaskLexicon& lexicon) {
    cfg.validate();
    pools.validate();
    for (const auto& ep : episodes) {
        validate(ep, lexicon);
        if (ep.kind() != PremiseKind::TruePremise) {
            throw ConfigError("episode " + ep.episode_id + " is already labeled");
        }
    }

    const auto counts = partition_counts(episodes.size(), cfg);
    std::vector<std::size_t> order(episodes.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(cfg.seed, "partition"));
    rng.shuffle(order);

    std::vector<PremiseKind> assignment(episodes.size(), PremiseKind::TruePremise);
    for (std::size_t i = 0; i < counts.out_of_domain; ++i) assignment[order[i]] = PremiseKind::OutOfDomain;
    for (std::size_t i = 0; i < counts.in_domain; ++i) {
        assignment[order[counts.out_of_domain + i]] = PremiseKind::InDomain;
    }

    std::vector<EpisodeRecord> out = episodes;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (assignment[i] != PremiseKind::TruePremise) inject(out[i], assignment[i], pools, cfg, lexicon);
    }
    return out;
}

// ---------------------------------------------------------------------------

InstructionSpec step_instruction(const std::string& robot, const std::string& control_mode,
                                 const std::string& task_sentence, const std::vector<ProprioState>& proprio,
                                 std::size_t t, std::size_t history) {
    InstructionSpec spec;
    spec.robot = robot;
    spec.control_mode = control_mode;
    spec.task_sentence = task_sentence;
    spec.horizon = 1;
    for (std::size_t k = 0; k < history; ++k) {
        // Row k holds step t - (history - 1) + k.
        auto back = history - 1 - k;
        spec.history.push_back(back <= t ? proprio[t - back] : ProprioState::zeros());
    }
    return spec;
}

namespace {

constexpr std::array<double, kJointCount> kHomePose = {0.0, 0.17, 0.0, -0.85, 0.0, 1.23, 0.79};
constexpr int kImageSize = 128;

std::vector<TracePoint> synth_trace(Rng& rng, std::size_t n) {
    auto clamp = [](double v) { return std::clamp(static_cast<int>(std::lround(v)), 0, kImageSize - 1); };
    std::vector<std::array<double, 2>> waypoints;
    const std::size_t segments = 1 + static_cast<std::size_t>(rng.index(3));
    for (std::size_t k = 0; k <= segments; ++k) {
        waypoints.push_back({rng.uniform(8.0, 120.0), rng.uniform(8.0, 120.0)});
    }
    std::vector<TracePoint> pts;
    pts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double u = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1) * static_cast<double>(segments);
        auto seg = std::min(static_cast<std::size_t>(u), segments - 1);
        double f = u - static_cast<double>(seg);
        const auto& a = waypoints[seg];
        const auto& b = waypoints[seg + 1];
        pts.push_back({clamp(a[0] + f * (b[0] - a[0])), clamp(a[1] + f * (b[1] - a[1]))});
    }
    return pts;
}

}  // namespace

std::vector<EpisodeRecord> synthesize_episodes(const SynthConfig& cfg) {
    if (cfg.tasks.empty()) throw ConfigError("at least one task is required");
    if (cfg.min_steps < 1 || cfg.max_steps < cfg.min_steps) throw ConfigError("invalid step range");
    if (cfg.history < 1) throw ConfigError("history must be positive");

    std::vector<EpisodeRecord> out;
    out.reserve(cfg.episodes);
    for (std::size_t e = 0; e < cfg.episodes; ++e) {
        const auto& task = cfg.tasks[e % cfg.tasks.size()];
        char id[32];
        std::snprintf(id, sizeof id, "-%04zu", e / cfg.tasks.size());

        EpisodeRecord ep;
        ep.episode_id = task.name + id;
        ep.task_name = task.name;
        ep.source_seed = derive_seed(cfg.seed, ep.episode_id);
        ep.scene_objects.insert(task.target);
        ep.scene_objects.insert(task.scene_extras.begin(), task.scene_extras.end());

        Rng rng(ep.source_seed);
        const auto n = cfg.min_steps + static_cast<std::size_t>(rng.index(cfg.max_steps - cfg.min_steps + 1));

        std::vector<ProprioState> proprio(n);
        std::vector<Action> actions(n);
        const auto release_at = static_cast<std::size_t>(rng.index(n + 1));
        for (std::size_t j = 0; j < kJointCount; ++j) {
            proprio[0].joints[j] = Decimal::from_double(kHomePose[j] + rng.uniform(-0.02, 0.02));
        }
        for (std::size_t t = 0; t < n; ++t) {
            for (std::size_t j = 0; j < kJointCount; ++j) {
                actions[t][j] = Decimal::from_double(rng.uniform(-0.06, 0.06));
                if (t + 1 < n) {
                    proprio[t + 1].joints[j] =
                        Decimal::from_double(proprio[t].joints[j].value() + actions[t][j].value());
                }
            }
            actions[t][kActionDim - 1] = Decimal::from_double(t < release_at ? 1.0 : 0.0);
        }
        const auto trace = synth_trace(rng, n);

        const auto sentence = SlotPattern(task.pattern).fill(task.target);
        for (std::size_t t = 0; t < n; ++t) {
            StepRecord step;
            step.proprio = proprio[t];
            step.gt_action = actions[t];
            step.gt_trace.assign(trace.begin() + static_cast<std::ptrdiff_t>(t), trace.end());
            step.instruction_text =
                render_instruction(step_instruction(cfg.robot, cfg.control_mode, sentence, proprio, t, cfg.history));
            step.true_premise_instruction = step.instruction_text;
            ep.steps.push_back(std::move(step));
        }
        out.push_back(std::move(ep));
    }
    return out;
}

}  // namespace iva
