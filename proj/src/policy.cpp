#include "iva/policy.hpp"

#include <algorithm>
#include <charconv>

#include "iva/error.hpp"
#include "iva/instruction.hpp"
#include "iva/response.hpp"
#include "iva/rng.hpp"

namespace iva {

GroundTruth::GroundTruth(const std::vector<EpisodeRecord>& episodes, DistractorPools pools, TaskLexicon lexicon)
    : pools_(std::move(pools)), lexicon_(std::move(lexicon)) {
    for (const auto& ep : episodes) {
        EpisodeTruth truth;
        truth.target = episode_target(ep, lexicon_);
        truth.steps.reserve(ep.steps.size());
        for (const auto& s : ep.steps) truth.steps.push_back({s.gt_action, s.gt_trace});
        episodes_.emplace(ep.episode_id, std::move(truth));
    }
}

const GroundTruth::StepTruth& GroundTruth::step(const std::string& episode_id, std::size_t index) const {
    auto it = episodes_.find(episode_id);
    if (it == episodes_.end() || index >= it->second.steps.size()) {
        throw UnknownEpisode("no ground truth for " + episode_id + " step " + std::to_string(index));
    }
    return it->second.steps[index];
}

const std::string& GroundTruth::target(const std::string& episode_id) const {
    auto it = episodes_.find(episode_id);
    if (it == episodes_.end()) throw UnknownEpisode("no ground truth for " + episode_id);
    return it->second.target;
}

namespace {

bool in_scene(const PolicyRequest& request, std::string_view noun) {
    const auto& scene = request.observation.scene_objects;
    return std::find(scene.begin(), scene.end(), noun) != scene.end();
}

/// The object named in the request's task sentence.
std::string requested_object(const PolicyRequest& request, const GroundTruth& truth) {
    auto spec = parse_instruction(request.instruction);
    return extract_target_noun(spec.task_sentence, truth.lexicon());
}

/// How a missing object is spoken about: its head noun, or the whole phrase
/// when the head would coincide with the suggestion ("blue safe" vs "safe").
std::string spoken(const std::string& phrase, const std::string& other) {
    auto head = head_noun(phrase);
    return head == other || head.empty() ? phrase : head;
}

std::string accept_ground_truth(const PolicyRequest& request, const GroundTruth& truth) {
    const auto& gt = truth.step(request.episode_id, request.step);
    return render_response(Accept{gt.trace, gt.action});
}

}  // namespace

std::string oracle_policy(const PolicyRequest& request, const GroundTruth& truth) {
    const auto noun = requested_object(request, truth);
    if (in_scene(request, noun)) return accept_ground_truth(request, truth);
    const auto& target = truth.target(request.episode_id);
    if (truth.pools().is_in_domain(noun)) return render_response(Clarify{spoken(noun, target), target});
    return render_response(Refuse{spoken(noun, target)});
}

std::string naive_policy(const PolicyRequest& request, const GroundTruth& truth) {
    return accept_ground_truth(request, truth);
}

std::string bernoulli_policy(const PolicyRequest& request, const GroundTruth& truth, double p, std::uint64_t seed) {
    const auto noun = requested_object(request, truth);
    if (in_scene(request, noun)) return oracle_policy(request, truth);
    if (hash_unit(seed, request.episode_id, request.step) < p) return oracle_policy(request, truth);
    return naive_policy(request, truth);
}

// ---------------------------------------------------------------------------

TransportDescriptor TransportDescriptor::parse(std::string_view text) {
    TransportDescriptor d;
    auto starts = [&](std::string_view p) { return text.substr(0, p.size()) == p; };
    if (starts("builtin:")) {
        d.kind = Kind::Builtin;
        auto rest = text.substr(8);
        auto colon = rest.find(':');
        d.builtin = std::string(rest.substr(0, colon));
        if (d.builtin == "bernoulli") {
            if (colon == std::string_view::npos) throw ConfigError("builtin:bernoulli needs a probability");
            auto args = rest.substr(colon + 1);
            auto c2 = args.find(':');
            auto p_text = std::string(args.substr(0, c2));
            try {
                std::size_t used = 0;
                d.p = std::stod(p_text, &used);
                if (used != p_text.size()) throw std::invalid_argument("trailing");
            } catch (const std::exception&) {
                throw ConfigError("bad bernoulli probability '" + p_text + "'");
            }
            if (!(d.p >= 0.0 && d.p <= 1.0)) throw ConfigError("bernoulli probability must lie in [0, 1]");
            if (c2 != std::string_view::npos) {
                auto s = args.substr(c2 + 1);
                auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d.seed);
                if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError("bad bernoulli seed");
            }
        } else if (d.builtin != "oracle" && d.builtin != "naive") {
            throw ConfigError("unknown builtin policy '" + d.builtin + "'");
        } else if (colon != std::string_view::npos) {
            throw ConfigError("builtin:" + d.builtin + " takes no arguments");
        }
    } else if (starts("exec:")) {
        d.kind = Kind::Subprocess;
        d.command = std::string(text.substr(5));
        if (d.command.empty()) throw ConfigError("exec: needs a command");
    } else if (starts("tcp:")) {
        d.kind = Kind::Tcp;
        auto rest = text.substr(4);
        auto colon = rest.rfind(':');
        if (colon == std::string_view::npos || colon == 0) throw ConfigError("tcp descriptor is tcp:HOST:PORT");
        d.host = std::string(rest.substr(0, colon));
        auto port = rest.substr(colon + 1);
        auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), d.port);
        if (ec != std::errc() || ptr != port.data() + port.size() || d.port <= 0 || d.port > 65535) {
            throw ConfigError("bad tcp port '" + std::string(port) + "'");
        }
    } else {
        throw ConfigError("unknown policy descriptor '" + std::string(text) + "'");
    }
    return d;
}

std::string TransportDescriptor::to_string() const {
    switch (kind) {
        case Kind::Subprocess:
            return "exec:" + command;
        case Kind::Tcp:
            return "tcp:" + host + ":" + std::to_string(port);
        default:
            break;
    }
    if (builtin != "bernoulli") return "builtin:" + builtin;
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, p);
    (void)ec;
    return "builtin:bernoulli:" + std::string(buf, ptr) + ":" + std::to_string(seed);
}

PolicyFn make_builtin_policy(const TransportDescriptor& d, std::shared_ptr<const GroundTruth> truth) {
    if (d.kind != TransportDescriptor::Kind::Builtin) throw ConfigError("not a builtin descriptor");
    if (!truth) throw ConfigError("builtin policies need the dataset ground truth");
    if (d.builtin == "oracle") {
        return [truth](const PolicyRequest& r) { return oracle_policy(r, *truth); };
    }
    if (d.builtin == "naive") {
        return [truth](const PolicyRequest& r) { return naive_policy(r, *truth); };
    }
    return [truth, p = d.p, seed = d.seed](const PolicyRequest& r) { return bernoulli_policy(r, *truth, p, seed); };
}

}  // namespace iva
