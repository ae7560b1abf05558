#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "iva/dataset.hpp"
#include "iva/error.hpp"
#include "iva/json_util.hpp"

namespace iva {

ojson decimal_to_json(const Decimal& d) {
    const auto& t = d.text();
    if (t.find_first_of(".eE") == std::string::npos) return ojson(std::stoll(t));
    return ojson(d.value());
}

Decimal decimal_from_json(const ojson& j) {
    if (!j.is_number()) throw DatasetFormatError("expected a number, got " + j.dump());
    return Decimal::from_token(j.dump());
}

ojson action_to_json(const Action& a) {
    ojson out = ojson::array();
    for (const auto& v : a) out.push_back(decimal_to_json(v));
    return out;
}

Action action_from_json(const ojson& j) {
    if (!j.is_array() || j.size() != kActionDim) throw DimensionMismatch("action must have 8 components");
    Action a;
    for (std::size_t k = 0; k < kActionDim; ++k) a[k] = decimal_from_json(j[k]);
    return a;
}

ojson trace_to_json(const std::vector<TracePoint>& trace) {
    ojson out = ojson::array();
    for (const auto& p : trace) out.push_back(ojson::array({p.row, p.col}));
    return out;
}

std::vector<TracePoint> trace_from_json(const ojson& j) {
    if (!j.is_array()) throw DatasetFormatError("trace must be an array");
    std::vector<TracePoint> out;
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2) throw DatasetFormatError("trace points are [row, col] pairs");
        out.push_back({p[0].get<int>(), p[1].get<int>()});
    }
    return out;
}

namespace {

ojson proprio_to_json(const ProprioState& s) {
    ojson out = ojson::array();
    for (const auto& v : s.joints) out.push_back(decimal_to_json(v));
    return out;
}

ProprioState proprio_from_json(const ojson& j) {
    if (!j.is_array() || j.size() != kJointCount) throw DimensionMismatch("proprio state must have 7 joints");
    ProprioState s;
    for (std::size_t k = 0; k < kJointCount; ++k) s.joints[k] = decimal_from_json(j[k]);
    return s;
}

ojson premise_to_json(const PremiseLabel& label) {
    ojson out;
    out["kind"] = to_string(kind_of(label));
    if (const auto* id = std::get_if<InDomainFP>(&label)) {
        out["absent_object"] = id->absent_object;
        out["intended_object"] = id->intended_object;
    } else if (const auto* ood = std::get_if<OutOfDomainFP>(&label)) {
        out["absent_object"] = ood->absent_object;
    }
    return out;
}

PremiseLabel premise_from_json(const ojson& j) {
    switch (premise_kind_from_string(j.at("kind").get<std::string>())) {
        case PremiseKind::InDomain:
            return InDomainFP{j.at("absent_object").get<std::string>(), j.at("intended_object").get<std::string>()};
        case PremiseKind::OutOfDomain:
            return OutOfDomainFP{j.at("absent_object").get<std::string>()};
        default:
            return TruePremise{};
    }
}

}  // namespace

std::string episode_to_json_line(const EpisodeRecord& ep) {
    ojson j;
    j["schema"] = kDatasetSchema;
    j["episode_id"] = ep.episode_id;
    j["task"] = ep.task_name;
    j["source_seed"] = ep.source_seed;
    j["premise_kind"] = to_string(ep.kind());
    j["scene_objects"] = ep.scene_objects;
    ojson steps = ojson::array();
    for (std::size_t i = 0; i < ep.steps.size(); ++i) {
        const auto& s = ep.steps[i];
        ojson js;
        js["step"] = i;
        js["image_ref"] = s.observation.image_ref ? ojson(*s.observation.image_ref) : ojson(nullptr);
        js["proprio"] = proprio_to_json(s.proprio);
        js["gt_action"] = action_to_json(s.gt_action);
        js["gt_trace"] = trace_to_json(s.gt_trace);
        js["premise"] = premise_to_json(s.premise);
        js["instruction"] = s.instruction_text;
        if (s.true_premise_instruction != s.instruction_text) {
            js["true_premise_instruction"] = s.true_premise_instruction;
        }
        steps.push_back(std::move(js));
    }
    j["steps"] = std::move(steps);
    return j.dump();
}

EpisodeRecord episode_from_json_line(std::string_view line) {
    try {
        auto j = ojson::parse(line);
        if (j.value("schema", "") != std::string(kDatasetSchema)) {
            throw DatasetFormatError("unsupported dataset schema (expected " + std::string(kDatasetSchema) + ")");
        }
        EpisodeRecord ep;
        ep.episode_id = j.at("episode_id").get<std::string>();
        ep.task_name = j.at("task").get<std::string>();
        ep.source_seed = j.at("source_seed").get<std::uint64_t>();
        for (const auto& o : j.at("scene_objects")) ep.scene_objects.insert(o.get<std::string>());
        for (const auto& js : j.at("steps")) {
            StepRecord s;
            if (js.contains("image_ref") && !js["image_ref"].is_null()) {
                s.observation.image_ref = js["image_ref"].get<std::string>();
            }
            s.proprio = proprio_from_json(js.at("proprio"));
            s.gt_action = action_from_json(js.at("gt_action"));
            s.gt_trace = trace_from_json(js.at("gt_trace"));
            s.premise = premise_from_json(js.at("premise"));
            s.instruction_text = js.at("instruction").get<std::string>();
            s.true_premise_instruction = js.value("true_premise_instruction", s.instruction_text);
            ep.steps.push_back(std::move(s));
        }
        return ep;
    } catch (const nlohmann::json::exception& e) {
        throw DatasetFormatError(std::string("bad episode record: ") + e.what());
    } catch (const InvalidSpec& e) {
        throw DatasetFormatError(std::string("bad episode record: ") + e.what());
    }
}

void write_dataset(std::ostream& out, const std::vector<EpisodeRecord>& episodes) {
    for (const auto& ep : episodes) out << episode_to_json_line(ep) << '\n';
}

std::vector<EpisodeRecord> read_dataset(std::istream& in) {
    std::vector<EpisodeRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(episode_from_json_line(line));
        } catch (const DatasetFormatError& e) {
            throw DatasetFormatError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<EpisodeRecord> read_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInput("cannot open dataset '" + path + "'");
    return read_dataset(in);
}

void write_dataset_file(const std::string& path, const std::vector<EpisodeRecord>& episodes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    write_dataset(out, episodes);
}

std::string pools_to_json(const DistractorPools& pools) {
    ojson j;
    j["in_domain"] = pools.in_domain;
    j["out_of_domain"] = pools.out_of_domain;
    return j.dump(2);
}

DistractorPools pools_from_json(std::string_view text) {
    try {
        auto j = ojson::parse(text);
        DistractorPools pools;
        pools.in_domain = j.at("in_domain").get<std::vector<std::string>>();
        pools.out_of_domain = j.at("out_of_domain").get<std::vector<std::string>>();
        pools.validate();
        return pools;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad pools file: ") + e.what());
    }
}

DistractorPools read_pools_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MissingInput("cannot open pools file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return pools_from_json(ss.str());
}

std::vector<EpisodeRecord> import_trajectories(std::istream& in) {
    std::vector<EpisodeRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = ojson::parse(line);
            EpisodeRecord ep;
            ep.episode_id = j.at("episode_id").get<std::string>();
            ep.task_name = j.at("task").get<std::string>();
            ep.source_seed = j.value("source_seed", std::uint64_t{0});
            for (const auto& o : j.at("scene_objects")) ep.scene_objects.insert(o.get<std::string>());
            const auto robot = j.value("robot", std::string("Franka"));
            const auto mode = j.value("control_mode", std::string("joint"));
            const auto sentence = j.at("task_sentence").get<std::string>();
            const auto history = j.value("history", std::size_t{5});

            std::vector<ProprioState> proprio;
            for (const auto& js : j.at("steps")) proprio.push_back(proprio_from_json(js.at("joints")));
            std::size_t t = 0;
            for (const auto& js : j.at("steps")) {
                StepRecord s;
                s.proprio = proprio[t];
                s.gt_action = action_from_json(js.at("action"));
                s.gt_trace = trace_from_json(js.value("trace", ojson::array()));
                if (js.contains("image") && !js["image"].is_null()) s.observation.image_ref = js["image"].get<std::string>();
                s.instruction_text = render_instruction(step_instruction(robot, mode, sentence, proprio, t, history));
                s.true_premise_instruction = s.instruction_text;
                ep.steps.push_back(std::move(s));
                ++t;
            }
            out.push_back(std::move(ep));
        } catch (const nlohmann::json::exception& e) {
            throw DatasetFormatError("trajectory line " + std::to_string(lineno) + ": " + e.what());
        } catch (const InvalidSpec& e) {
            throw DatasetFormatError("trajectory line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace iva
