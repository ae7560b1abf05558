#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "iva/decimal.hpp"

namespace iva {

inline constexpr std::size_t kActionDim = 8;
inline constexpr std::size_t kMaxResponseBytes = 64 * 1024;

/// 7 joint velocities followed by the gripper bit.
using Action = std::array<Decimal, kActionDim>;

struct TracePoint {
    int row = 0;
    int col = 0;
    bool operator==(const TracePoint&) const = default;
};

struct Accept {
    std::vector<TracePoint> visual_trace;
    Action action{};
    bool operator==(const Accept&) const = default;
};

struct Clarify {
    std::string missing_object;
    std::string suggested_object;
    bool operator==(const Clarify&) const = default;
};

struct Refuse {
    std::string missing_object;
    bool operator==(const Refuse&) const = default;
};

struct Malformed {
    std::string raw_text;
    bool operator==(const Malformed&) const = default;
};

using PolicyResponse = std::variant<Accept, Clarify, Refuse, Malformed>;

/// Total: anything that is not one of the three canonical forms, or is longer
/// than `max_bytes`, comes back as Malformed.
///
///   Clarify  `I don't see {X} in the current scene. Do you mean {Y}?`
///   Refuse   `I couldn't find a/an {X} in the current scene.`
///   Accept   `2D visual trace: [[r, c], ...]. The next action step: [a1, ..., a8]`
///
/// Fixed words match case-insensitively, noun slots exactly.
PolicyResponse parse_response(std::string_view text, std::size_t max_bytes = kMaxResponseBytes);

/// Canonical surface form. Throws CannotRender for Malformed or broken invariants.
std::string render_response(const PolicyResponse& response);

/// "accept", "clarify", "refuse" or "malformed".
std::string_view response_kind(const PolicyResponse& response);

/// "a" or "an" for the noun phrase.
std::string_view indefinite_article(std::string_view noun);

template <class T>
bool holds(const PolicyResponse& r) {
    return std::holds_alternative<T>(r);
}

}  // namespace iva
