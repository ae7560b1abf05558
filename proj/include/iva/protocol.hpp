#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iva {

inline constexpr const char* kProtocolVersion = "iva/1";

enum class RunMode { TruePremise, FalsePremise };

/// "true_premise" / "false_premise".
std::string_view to_string(RunMode mode) noexcept;
RunMode run_mode_from_string(std::string_view s);

struct Observation {
    std::vector<std::string> scene_objects;
    std::optional<std::string> image_ref;
};

struct PolicyRequest {
    std::string episode_id;
    std::size_t step = 0;
    RunMode mode = RunMode::TruePremise;
    bool followup = false;  // the re-prompt sent after a clarification
    std::string instruction;
    Observation observation;
    int deadline_ms = 30000;
};

enum class MessageType { Hello, Request, Response, Error, Bye };

/// Any decoded protocol line. Only the fields of `type` are meaningful.
struct Message {
    MessageType type = MessageType::Hello;
    std::string version;   // Hello
    PolicyRequest request; // Request
    std::string text;      // Response text or Error message
};

// Every encoder returns a single line without the trailing '\n'.
std::string encode_hello(std::string_view version = kProtocolVersion);
std::string encode_request(const PolicyRequest& request);
std::string encode_response(std::string_view text);
std::string encode_error(std::string_view message);
std::string encode_bye();

/// Throws ProtocolError for anything outside the schemas.
Message decode_message(std::string_view line);

// ---------------------------------------------------------------------------
// Session recording and validation

enum class Direction { HostToPolicy, PolicyToHost };

struct SessionEntry {
    std::size_t connection = 0;
    Direction direction = Direction::HostToPolicy;
    std::string line;
};

/// Session log lines look like `H0 {...}` (host to policy on connection 0) or
/// `P0 {...}` (policy to host).
std::string format_session_entry(const SessionEntry& entry);
std::vector<SessionEntry> read_session(std::istream& in);

struct ValidationReport {
    std::vector<std::string> problems;
    std::size_t requests = 0;
    bool ok() const noexcept { return problems.empty(); }
};

/// Checks framing per connection: both hellos first with matching versions,
/// then strictly alternating request/response (or error) pairs, every line a
/// valid message.
ValidationReport validate_session(const std::vector<SessionEntry>& entries);

}  // namespace iva
