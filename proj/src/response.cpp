#include "iva/response.hpp"

#include <charconv>
#include <optional>

#include "iva/error.hpp"

namespace iva {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

constexpr std::string_view kRightQuote = "\xE2\x80\x99";  // U+2019

/// Matches `phrase` at `pos`: spaces match any whitespace run, letters match
/// case-insensitively, `'` also matches U+2019. Returns the end offset.
std::optional<std::size_t> match_ci(std::string_view s, std::size_t pos, std::string_view phrase) {
    std::size_t i = pos;
    for (char p : phrase) {
        if (p == ' ') {
            std::size_t ws = i;
            while (i < s.size() && is_space(s[i])) ++i;
            if (i == ws) return std::nullopt;
        } else if (p == '\'') {
            if (i < s.size() && s[i] == '\'') {
                ++i;
            } else if (s.substr(i, kRightQuote.size()) == kRightQuote) {
                i += kRightQuote.size();
            } else {
                return std::nullopt;
            }
        } else {
            if (i >= s.size() || lower(s[i]) != lower(p)) return std::nullopt;
            ++i;
        }
    }
    return i;
}

/// First occurrence of `phrase` at or after `from` that starts after whitespace.
std::optional<std::pair<std::size_t, std::size_t>> find_ci(std::string_view s, std::size_t from,
                                                           std::string_view phrase) {
    for (std::size_t i = from; i < s.size(); ++i) {
        if (i == 0 || !is_space(s[i - 1])) continue;
        if (auto end = match_ci(s, i, phrase)) return std::make_pair(i, *end);
    }
    return std::nullopt;
}

/// A noun slot: non-empty and no surrounding whitespace once separators are removed.
std::optional<std::string> slot(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    return std::string(s);
}

std::optional<PolicyResponse> parse_clarify(std::string_view t) {
    auto after_prefix = match_ci(t, 0, "I don't see ");
    if (!after_prefix) return std::nullopt;
    auto mid = find_ci(t, *after_prefix, "in the current scene. Do you mean ");
    if (!mid) return std::nullopt;
    if (t.back() != '?') return std::nullopt;
    auto missing = slot(t.substr(*after_prefix, mid->first - *after_prefix));
    if (mid->second > t.size() - 1) return std::nullopt;
    auto suggested = slot(t.substr(mid->second, t.size() - 1 - mid->second));
    if (!missing || !suggested || *missing == *suggested) return std::nullopt;
    return Clarify{std::move(*missing), std::move(*suggested)};
}

std::optional<PolicyResponse> parse_refuse(std::string_view t) {
    auto after_prefix = match_ci(t, 0, "I couldn't find ");
    if (!after_prefix) return std::nullopt;
    std::size_t noun_start = *after_prefix;
    if (auto e = match_ci(t, noun_start, "an ")) {
        noun_start = *e;
    } else if (auto e2 = match_ci(t, noun_start, "a ")) {
        noun_start = *e2;
    }
    constexpr std::string_view tail = "in the current scene.";
    auto end = find_ci(t, noun_start, tail);
    if (!end || end->second != t.size()) return std::nullopt;
    auto missing = slot(t.substr(noun_start, end->first - noun_start));
    if (!missing) return std::nullopt;
    return Refuse{std::move(*missing)};
}

/// Bracketed-list scanner used by the Accept form.
class ListScanner {
public:
    ListScanner(std::string_view s, std::size_t pos) : s_(s), i_(pos) {}
    std::size_t pos() const { return i_; }

    void ws() {
        while (i_ < s_.size() && is_space(s_[i_])) ++i_;
    }
    bool ch(char c) {
        ws();
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        return false;
    }
    bool peek(char c) {
        ws();
        return i_ < s_.size() && s_[i_] == c;
    }
    std::optional<std::string_view> number() {
        ws();
        auto n = scan_number_token(s_.substr(i_));
        if (n == 0) return std::nullopt;
        auto tok = s_.substr(i_, n);
        i_ += n;
        return tok;
    }
    std::optional<int> integer() {
        auto tok = number();
        if (!tok) return std::nullopt;
        int v = 0;
        auto first = tok->data();
        if (*first == '+') ++first;
        auto [ptr, ec] = std::from_chars(first, tok->data() + tok->size(), v);
        if (ec != std::errc() || ptr != tok->data() + tok->size()) return std::nullopt;
        return v;
    }

private:
    std::string_view s_;
    std::size_t i_;
};

std::optional<std::vector<TracePoint>> parse_trace(ListScanner& sc) {
    std::vector<TracePoint> out;
    if (!sc.ch('[')) return std::nullopt;
    if (sc.ch(']')) return out;
    do {
        if (!sc.ch('[')) return std::nullopt;
        auto r = sc.integer();
        if (!r || !sc.ch(',')) return std::nullopt;
        auto c = sc.integer();
        if (!c || !sc.ch(']')) return std::nullopt;
        out.push_back({*r, *c});
    } while (sc.ch(','));
    if (!sc.ch(']')) return std::nullopt;
    return out;
}

std::optional<Action> parse_action(ListScanner& sc) {
    Action a;
    if (!sc.ch('[')) return std::nullopt;
    for (std::size_t k = 0; k < kActionDim; ++k) {
        if (k > 0 && !sc.ch(',')) return std::nullopt;
        auto tok = sc.number();
        if (!tok) return std::nullopt;
        try {
            a[k] = Decimal::from_token(*tok);
        } catch (const InvalidSpec&) {
            return std::nullopt;
        }
    }
    if (!sc.ch(']')) return std::nullopt;
    double grip = a[kActionDim - 1].value();
    if (grip != 0.0 && grip != 1.0) return std::nullopt;
    return a;
}

std::optional<PolicyResponse> parse_accept(std::string_view t) {
    Accept out;
    std::size_t pos = 0;
    if (auto e = match_ci(t, 0, "2D visual trace:")) {
        ListScanner sc(t, *e);
        auto trace = parse_trace(sc);
        if (!trace || !sc.ch('.')) return std::nullopt;
        sc.ws();
        out.visual_trace = std::move(*trace);
        pos = sc.pos();
    }
    auto e = match_ci(t, pos, "The next action step:");
    if (!e) return std::nullopt;
    ListScanner sc(t, *e);
    auto action = parse_action(sc);
    if (!action) return std::nullopt;
    sc.ch('.');
    sc.ws();
    if (sc.pos() != t.size()) return std::nullopt;
    out.action = *action;
    return out;
}

void check_noun(const std::string& noun, const char* field) {
    if (noun.empty() || trim(noun).size() != noun.size()) {
        throw CannotRender(std::string(field) + " must be a non-empty noun phrase");
    }
}

}  // namespace

std::string_view indefinite_article(std::string_view noun) {
    if (noun.empty()) return "a";
    switch (lower(noun.front())) {
        case 'a':
        case 'e':
        case 'i':
        case 'o':
        case 'u':
            return "an";
        default:
            return "a";
    }
}

PolicyResponse parse_response(std::string_view text, std::size_t max_bytes) {
    if (text.size() > max_bytes) return Malformed{std::string(text.substr(0, max_bytes))};
    auto t = trim(text);
    if (!t.empty()) {
        if (auto r = parse_clarify(t)) return *r;
        if (auto r = parse_refuse(t)) return *r;
        if (auto r = parse_accept(t)) return *r;
    }
    return Malformed{std::string(text)};
}

std::string render_response(const PolicyResponse& response) {
    return std::visit(
        [](const auto& r) -> std::string {
            using T = std::decay_t<decltype(r)>;
            if constexpr (std::is_same_v<T, Accept>) {
                std::string out = "2D visual trace: [";
                for (std::size_t i = 0; i < r.visual_trace.size(); ++i) {
                    if (i > 0) out += ", ";
                    out += '[' + std::to_string(r.visual_trace[i].row) + ", " +
                           std::to_string(r.visual_trace[i].col) + ']';
                }
                out += "]. The next action step: [";
                for (std::size_t k = 0; k < kActionDim; ++k) {
                    if (k > 0) out += ", ";
                    out += r.action[k].text();
                }
                double grip = r.action[kActionDim - 1].value();
                if (grip != 0.0 && grip != 1.0) throw CannotRender("gripper component must be 0 or 1");
                return out + ']';
            } else if constexpr (std::is_same_v<T, Clarify>) {
                check_noun(r.missing_object, "missing_object");
                check_noun(r.suggested_object, "suggested_object");
                if (r.missing_object == r.suggested_object) {
                    throw CannotRender("clarification must name two different objects");
                }
                return "I don't see " + r.missing_object + " in the current scene. Do you mean " +
                       r.suggested_object + "?";
            } else if constexpr (std::is_same_v<T, Refuse>) {
                check_noun(r.missing_object, "missing_object");
                return "I couldn't find " + std::string(indefinite_article(r.missing_object)) + " " +
                       r.missing_object + " in the current scene.";
            } else {
                throw CannotRender("malformed responses have no canonical form");
            }
        },
        response);
}

std::string_view response_kind(const PolicyResponse& response) {
    switch (response.index()) {
        case 0:
            return "accept";
        case 1:
            return "clarify";
        case 2:
            return "refuse";
        default:
            return "malformed";
    }
}

}  // namespace iva
