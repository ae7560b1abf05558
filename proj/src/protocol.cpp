#include "iva/protocol.hpp"

#include <istream>
#include <map>

#include "iva/error.hpp"
#include "iva/json_util.hpp"

namespace iva {

std::string_view to_string(RunMode mode) noexcept {
    return mode == RunMode::TruePremise ? "true_premise" : "false_premise";
}

RunMode run_mode_from_string(std::string_view s) {
    if (s == "true_premise") return RunMode::TruePremise;
    if (s == "false_premise") return RunMode::FalsePremise;
    throw ProtocolError("unknown mode '" + std::string(s) + "'");
}

std::string encode_hello(std::string_view version) {
    ojson j;
    j["type"] = "hello";
    j["version"] = version;
    return j.dump();
}

std::string encode_request(const PolicyRequest& r) {
    ojson j;
    j["type"] = "request";
    j["episode_id"] = r.episode_id;
    j["step"] = r.step;
    j["mode"] = to_string(r.mode);
    j["followup"] = r.followup;
    j["instruction"] = r.instruction;
    ojson obs;
    obs["scene_objects"] = r.observation.scene_objects;
    obs["image_ref"] = r.observation.image_ref ? ojson(*r.observation.image_ref) : ojson(nullptr);
    j["observation"] = std::move(obs);
    j["deadline_ms"] = r.deadline_ms;
    return j.dump();
}

std::string encode_response(std::string_view text) {
    ojson j;
    j["type"] = "response";
    j["text"] = text;
    return j.dump();
}

std::string encode_error(std::string_view message) {
    ojson j;
    j["type"] = "error";
    j["message"] = message;
    return j.dump();
}

std::string encode_bye() { return R"({"type":"bye"})"; }

Message decode_message(std::string_view line) {
    ojson j;
    try {
        j = ojson::parse(line);
    } catch (const nlohmann::json::exception&) {
        throw ProtocolError("line is not JSON");
    }
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
        throw ProtocolError("message needs a string 'type'");
    }
    try {
        Message m;
        const auto type = j["type"].get<std::string>();
        if (type == "hello") {
            m.type = MessageType::Hello;
            m.version = j.at("version").get<std::string>();
        } else if (type == "request") {
            m.type = MessageType::Request;
            auto& r = m.request;
            r.episode_id = j.at("episode_id").get<std::string>();
            if (!j.at("step").is_number_unsigned()) throw ProtocolError("'step' must be a non-negative integer");
            r.step = j["step"].get<std::size_t>();
            r.mode = run_mode_from_string(j.at("mode").get<std::string>());
            r.followup = j.value("followup", false);
            r.instruction = j.at("instruction").get<std::string>();
            const auto& obs = j.at("observation");
            r.observation.scene_objects = obs.at("scene_objects").get<std::vector<std::string>>();
            if (obs.contains("image_ref") && !obs["image_ref"].is_null()) {
                r.observation.image_ref = obs["image_ref"].get<std::string>();
            }
            r.deadline_ms = j.at("deadline_ms").get<int>();
        } else if (type == "response") {
            m.type = MessageType::Response;
            m.text = j.at("text").get<std::string>();
        } else if (type == "error") {
            m.type = MessageType::Error;
            m.text = j.at("message").get<std::string>();
        } else if (type == "bye") {
            m.type = MessageType::Bye;
        } else {
            throw ProtocolError("unknown message type '" + type + "'");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("bad message fields: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

std::string format_session_entry(const SessionEntry& e) {
    return (e.direction == Direction::HostToPolicy ? "H" : "P") + std::to_string(e.connection) + " " + e.line;
}

std::vector<SessionEntry> read_session(std::istream& in) {
    std::vector<SessionEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto space = line.find(' ');
        if (space == std::string::npos || space < 2 || (line[0] != 'H' && line[0] != 'P')) {
            throw ProtocolError("session line " + std::to_string(lineno) + " lacks a direction tag");
        }
        SessionEntry e;
        e.direction = line[0] == 'H' ? Direction::HostToPolicy : Direction::PolicyToHost;
        try {
            e.connection = std::stoul(line.substr(1, space - 1));
        } catch (const std::exception&) {
            throw ProtocolError("session line " + std::to_string(lineno) + " has a bad connection id");
        }
        e.line = line.substr(space + 1);
        out.push_back(std::move(e));
    }
    return out;
}

ValidationReport validate_session(const std::vector<SessionEntry>& entries) {
    enum class State { AwaitHostHello, AwaitPolicyHello, Ready, AwaitResponse, Closed };
    std::map<std::size_t, State> states;
    ValidationReport report;
    std::size_t index = 0;
    for (const auto& e : entries) {
        ++index;
        auto where = "entry " + std::to_string(index) + " (connection " + std::to_string(e.connection) + ")";
        auto [it, inserted] = states.emplace(e.connection, State::AwaitHostHello);
        auto& state = it->second;
        Message m;
        try {
            m = decode_message(e.line);
        } catch (const ProtocolError& err) {
            report.problems.push_back(where + ": " + err.what());
            continue;
        }
        const bool from_host = e.direction == Direction::HostToPolicy;
        switch (state) {
            case State::AwaitHostHello:
                if (!from_host || m.type != MessageType::Hello) {
                    report.problems.push_back(where + ": session must open with the host hello");
                } else if (m.version != kProtocolVersion) {
                    report.problems.push_back(where + ": unsupported version " + m.version);
                }
                state = State::AwaitPolicyHello;
                break;
            case State::AwaitPolicyHello:
                if (from_host || m.type != MessageType::Hello) {
                    report.problems.push_back(where + ": expected the policy hello");
                } else if (m.version != kProtocolVersion) {
                    report.problems.push_back(where + ": unsupported version " + m.version);
                }
                state = State::Ready;
                break;
            case State::Ready:
                if (!from_host) {
                    report.problems.push_back(where + ": policy sent a message without a pending request");
                } else if (m.type == MessageType::Request) {
                    ++report.requests;
                    state = State::AwaitResponse;
                } else if (m.type == MessageType::Bye) {
                    state = State::Closed;
                } else {
                    report.problems.push_back(where + ": host may only send requests or bye");
                }
                break;
            case State::AwaitResponse:
                if (from_host) {
                    report.problems.push_back(where + ": host sent a message while a request was in flight");
                } else if (m.type != MessageType::Response && m.type != MessageType::Error) {
                    report.problems.push_back(where + ": expected a response or error");
                } else {
                    state = State::Ready;
                }
                break;
            case State::Closed:
                report.problems.push_back(where + ": message after bye");
                break;
        }
    }
    for (const auto& [conn, state] : states) {
        if (state == State::AwaitResponse) {
            report.problems.push_back("connection " + std::to_string(conn) + " ended with a request in flight");
        }
    }
    return report;
}

}  // namespace iva
