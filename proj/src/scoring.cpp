#include "iva/scoring.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "iva/error.hpp"
#include "iva/json_util.hpp"

namespace iva {

PostRefusal post_refusal_from_string(std::string_view s) {
    if (s == "exclude") return PostRefusal::Exclude;
    if (s == "score-one") return PostRefusal::ScoreOne;
    throw ConfigError("post-refusal mode must be 'exclude' or 'score-one'");
}

std::string_view to_string(PostRefusal p) noexcept { return p == PostRefusal::Exclude ? "exclude" : "score-one"; }

std::optional<double> EpisodeScore::value() const {
    if (tp_success && fp_score) return (*tp_success + *fp_score) / 2.0;
    if (tp_success) return static_cast<double>(*tp_success);
    return fp_score;
}

int score_detection(const PremiseLabel& label, const DialogueTurn& turn) {
    const auto& r = turn.response;
    switch (kind_of(label)) {
        case PremiseKind::TruePremise:
            return holds<Accept>(r) ? 1 : 0;
        case PremiseKind::OutOfDomain:
            return holds<Refuse>(r) ? 1 : 0;
        case PremiseKind::InDomain: {
            const auto* c = std::get_if<Clarify>(&r);
            return c && c->suggested_object == std::get<InDomainFP>(label).intended_object ? 1 : 0;
        }
    }
    return 0;
}

int score_execution(std::span<const EmittedAction> actions, const EpisodeRecord& episode, double tol) {
    for (const auto& a : actions) {
        if (a.values.size() != kActionDim) {
            throw DimensionMismatch("action for step " + std::to_string(a.step_index) + " has " +
                                    std::to_string(a.values.size()) + " components, expected 8");
        }
    }
    if (actions.empty()) return 0;
    for (const auto& a : actions) {
        if (a.step_index >= episode.steps.size()) return 0;
        const auto& gt = episode.steps[a.step_index].gt_action;
        for (std::size_t k = 0; k + 1 < kActionDim; ++k) {
            if (!(std::fabs(a.values[k] - gt[k].value()) <= tol)) return 0;
        }
        if (a.values[kActionDim - 1] != gt[kActionDim - 1].value()) return 0;
    }
    return 1;
}

SuccessDetector trajectory_match_detector(double tol) {
    return [tol](std::span<const EmittedAction> actions, const EpisodeRecord& episode) {
        return score_execution(actions, episode, tol);
    };
}

namespace {

std::optional<EmittedAction> emitted(const DialogueTurn& turn) {
    const auto* a = std::get_if<Accept>(&turn.effective_response());
    if (!a) return std::nullopt;
    EmittedAction out{turn.step_index, {}};
    for (const auto& v : a->action) out.values.push_back(v.value());
    return out;
}

}  // namespace

EpisodeScore score_transcript(const Transcript& tr, const EpisodeRecord& ep, const ScoringOptions& options) {
    EpisodeScore s;
    s.episode_id = tr.episode_id;
    s.task_name = ep.task_name;
    s.mode = tr.mode;
    s.premise_kind = ep.kind();

    std::vector<EmittedAction> actions;
    for (const auto& turn : tr.turns) {
        if (turn.step_index >= ep.steps.size()) {
            throw DatasetFormatError("transcript step " + std::to_string(turn.step_index) + " is outside episode " +
                                     ep.episode_id);
        }
        const auto& label = tr.mode == RunMode::TruePremise ? PremiseLabel{TruePremise{}}
                                                              : ep.steps[turn.step_index].premise;
        StepScore step;
        step.step_index = turn.step_index;
        step.premise = kind_of(label);
        step.detection = score_detection(label, turn);
        if (auto a = emitted(turn)) {
            step.execution = score_execution(std::span(&*a, 1), ep, 1e-6);
            actions.push_back(std::move(*a));
        }
        if (holds<Malformed>(turn.response)) ++s.malformed;
        s.steps.push_back(std::move(step));
    }

    if (tr.mode == RunMode::TruePremise) {
        bool complete = tr.turns.size() == ep.steps.size() && actions.size() == ep.steps.size();
        for (const auto& step : s.steps) complete = complete && step.detection == 1;
        s.tp_success = complete && options.detector(actions, ep) == 1 ? 1 : 0;
        return s;
    }

    // Steps never reached: excluded (or credited) after a correct refusal, failed otherwise.
    bool legit_end = false;
    if (tr.terminated_early && tr.termination_reason == TerminationReason::Refused && !s.steps.empty()) {
        const auto& last = s.steps.back();
        legit_end = last.premise == PremiseKind::OutOfDomain && last.detection == 1;
    }
    for (std::size_t i = tr.turns.size(); i < ep.steps.size(); ++i) {
        StepScore step;
        step.step_index = i;
        step.premise = kind_of(ep.steps[i].premise);
        if (!legit_end) {
            step.detection = 0;
        } else if (options.post_refusal == PostRefusal::ScoreOne) {
            step.detection = 1;
        }
        s.steps.push_back(std::move(step));
    }

    if (s.premise_kind != PremiseKind::TruePremise) {
        for (const auto& step : s.steps) {
            if (step.premise == PremiseKind::TruePremise || !step.detection) continue;
            ++s.fp_steps_scored;
            s.fp_steps_detected += static_cast<std::size_t>(*step.detection);
        }
        if (s.fp_steps_scored > 0) {
            s.fp_score = static_cast<double>(s.fp_steps_detected) / static_cast<double>(s.fp_steps_scored);
        }
    }
    return s;
}

std::vector<EpisodeScore> score_transcripts(const std::vector<Transcript>& transcripts,
                                            const std::vector<EpisodeRecord>& dataset,
                                            const ScoringOptions& options) {
    std::map<std::string, const EpisodeRecord*, std::less<>> index;
    for (const auto& ep : dataset) index.emplace(ep.episode_id, &ep);
    std::vector<EpisodeScore> out;
    for (const auto& tr : transcripts) {
        if (tr.failure) continue;
        auto it = index.find(tr.episode_id);
        if (it == index.end()) throw UnknownEpisode("transcript for unknown episode " + tr.episode_id);
        out.push_back(score_transcript(tr, *it->second, options));
    }
    return out;
}

// ---------------------------------------------------------------------------

double overall_success(double tp_success, double fp_success) noexcept { return (tp_success + fp_success) / 2.0; }

namespace {

struct Mean {
    double sum = 0.0;
    std::size_t n = 0;
    void add(double v) {
        sum += v;
        ++n;
    }
    std::optional<double> get() const {
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    }
};

}  // namespace

SuiteMetrics aggregate(const std::vector<EpisodeScore>& scores) {
    if (scores.empty()) throw EmptyInput("no episode scores to aggregate");

    struct Acc {
        Mean tp, id, ood;
        std::size_t malformed = 0;
    };
    std::map<std::string, Acc> by_task;
    std::map<std::string, Mean> by_episode;
    SuiteMetrics suite;

    for (const auto& s : scores) {
        auto& acc = by_task[s.task_name];
        acc.malformed += s.malformed;
        suite.malformed += s.malformed;
        if (s.tp_success) acc.tp.add(*s.tp_success);
        if (s.fp_score) {
            (s.premise_kind == PremiseKind::InDomain ? acc.id : acc.ood).add(*s.fp_score);
        }
        if (s.value()) {
            // Each run contributes its stage scores to the episode's mean.
            auto& m = by_episode[s.episode_id];
            if (s.tp_success) m.add(*s.tp_success);
            if (s.fp_score) m.add(*s.fp_score);
            ++suite.scored_runs;
        }
    }

    Mean tp_over_tasks;
    std::vector<double> tp_values;
    for (const auto& [name, acc] : by_task) {
        TaskMetrics t;
        t.task_name = name;
        t.tp_success = acc.tp.get();
        t.fp_detect_id = acc.id.get();
        t.fp_detect_ood = acc.ood.get();
        t.tp_runs = acc.tp.n;
        t.tp_successes = static_cast<std::size_t>(std::lround(acc.tp.sum));
        t.id_episodes = acc.id.n;
        t.ood_episodes = acc.ood.n;
        t.malformed = acc.malformed;
        if (acc.id.n + acc.ood.n > 0) {
            t.fp_success = (acc.id.sum + acc.ood.sum) / static_cast<double>(acc.id.n + acc.ood.n);
            if (t.fp_detect_id && t.fp_detect_ood) {
                t.fp_success_equal = (*t.fp_detect_id + *t.fp_detect_ood) / 2.0;
            } else {
                t.fp_success_equal = t.fp_success;
            }
        }
        if (t.tp_success && t.fp_success) {
            t.overall = overall_success(*t.tp_success, *t.fp_success);
        } else {
            t.overall = t.tp_success ? t.tp_success : t.fp_success;
        }
        if (t.tp_success) tp_values.push_back(*t.tp_success);
        suite.tasks.push_back(std::move(t));
    }

    Mean episodes;
    for (const auto& [id, m] : by_episode) {
        if (auto v = m.get()) episodes.add(*v);
    }
    suite.episodes = episodes.n;
    suite.overall = episodes.get().value_or(0.0);

    if (!tp_values.empty()) {
        double mean = 0.0;
        for (double v : tp_values) mean += v;
        mean /= static_cast<double>(tp_values.size());
        suite.tp_mean = mean;
        if (tp_values.size() > 1) {
            double ss = 0.0;
            for (double v : tp_values) ss += (v - mean) * (v - mean);
            suite.tp_stddev = std::sqrt(ss / static_cast<double>(tp_values.size() - 1));
        }
    }
    return suite;
}

// ---------------------------------------------------------------------------

void write_scores(std::ostream& out, const std::vector<EpisodeScore>& scores) {
    for (const auto& s : scores) {
        ojson j;
        j["schema"] = kScoresSchema;
        j["episode_id"] = s.episode_id;
        j["task"] = s.task_name;
        j["mode"] = to_string(s.mode);
        j["premise_kind"] = to_string(s.premise_kind);
        j["fp_score"] = s.fp_score ? ojson(*s.fp_score) : ojson(nullptr);
        j["tp_success"] = s.tp_success ? ojson(*s.tp_success) : ojson(nullptr);
        j["fp_steps_scored"] = s.fp_steps_scored;
        j["fp_steps_detected"] = s.fp_steps_detected;
        j["malformed"] = s.malformed;
        ojson steps = ojson::array();
        for (const auto& st : s.steps) {
            ojson js;
            js["step"] = st.step_index;
            js["premise"] = to_string(st.premise);
            js["detection"] = st.detection ? ojson(*st.detection) : ojson(nullptr);
            js["execution"] = st.execution ? ojson(*st.execution) : ojson(nullptr);
            steps.push_back(std::move(js));
        }
        j["steps"] = std::move(steps);
        out << j.dump() << '\n';
    }
}

std::vector<EpisodeScore> read_scores(std::istream& in) {
    std::vector<EpisodeScore> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = ojson::parse(line);
            if (j.value("schema", "") != std::string(kScoresSchema)) throw DatasetFormatError("unknown schema");
            EpisodeScore s;
            s.episode_id = j.at("episode_id").get<std::string>();
            s.task_name = j.at("task").get<std::string>();
            s.mode = run_mode_from_string(j.at("mode").get<std::string>());
            s.premise_kind = premise_kind_from_string(j.at("premise_kind").get<std::string>());
            if (!j.at("fp_score").is_null()) s.fp_score = j["fp_score"].get<double>();
            if (!j.at("tp_success").is_null()) s.tp_success = j["tp_success"].get<int>();
            s.fp_steps_scored = j.value("fp_steps_scored", std::size_t{0});
            s.fp_steps_detected = j.value("fp_steps_detected", std::size_t{0});
            s.malformed = j.value("malformed", std::size_t{0});
            for (const auto& js : j.value("steps", ojson::array())) {
                StepScore st;
                st.step_index = js.at("step").get<std::size_t>();
                st.premise = premise_kind_from_string(js.at("premise").get<std::string>());
                if (!js.at("detection").is_null()) st.detection = js["detection"].get<int>();
                if (!js.at("execution").is_null()) st.execution = js["execution"].get<int>();
                s.steps.push_back(st);
            }
            out.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw DatasetFormatError("scores line " + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw DatasetFormatError("scores line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace iva
