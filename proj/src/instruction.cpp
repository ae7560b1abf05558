#include "iva/instruction.hpp"

#include <charconv>
#include <cmath>

#include "iva/error.hpp"

namespace iva {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }
bool is_ident_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-' || c == '.';
}

void validate_identifier(const std::string& s, const char* field) {
    if (s.empty()) throw InvalidSpec(std::string(field) + " is empty");
    for (char c : s) {
        if (!is_ident_char(c)) throw InvalidSpec(std::string(field) + " must be an identifier: '" + s + "'");
    }
    // A trailing '.' would merge with the sentence-ending period.
    if (s.back() == '.') throw InvalidSpec(std::string(field) + " may not end with '.'");
}

bool valid_preamble(std::string_view p) {
    std::size_t i = 0;
    constexpr std::string_view image = "<image>";
    if (p.substr(0, image.size()) == image) {
        i = image.size();
        if (p.substr(i, 2) == "\\n") {
            i += 2;
        } else if (i < p.size() && (p[i] == '\\' || p[i] == '\n')) {
            i += 1;
        }
        while (i < p.size() && is_space(p[i])) ++i;
    }
    constexpr std::string_view yes = "Yes,";
    if (p.substr(i, yes.size()) == yes) {
        i += yes.size();
        std::size_t ws = i;
        while (i < p.size() && is_space(p[i])) ++i;
        if (i == ws) return false;
    }
    return i == p.size();
}

/// Whitespace-tolerant cursor over the instruction text.
class Cursor {
public:
    explicit Cursor(std::string_view text) : s_(text) {}

    std::size_t pos() const { return i_; }
    bool at_end() const { return i_ >= s_.size(); }
    std::string_view rest() const { return s_.substr(i_); }
    std::string_view slice(std::size_t from, std::size_t to) const { return s_.substr(from, to - from); }

    void skip_ws() {
        while (i_ < s_.size() && is_space(s_[i_])) ++i_;
    }

    bool try_lit(std::string_view lit) {
        if (s_.substr(i_, lit.size()) == lit) {
            i_ += lit.size();
            return true;
        }
        return false;
    }

    /// Matches a phrase whose single spaces may be any non-empty whitespace run.
    bool try_phrase(std::string_view phrase) {
        std::size_t save = i_;
        skip_ws();
        std::size_t k = 0;
        while (k < phrase.size()) {
            if (phrase[k] == ' ') {
                std::size_t ws = i_;
                skip_ws();
                if (i_ == ws) {
                    i_ = save;
                    return false;
                }
                ++k;
                continue;
            }
            if (i_ >= s_.size() || s_[i_] != phrase[k]) {
                i_ = save;
                return false;
            }
            ++i_;
            ++k;
        }
        // Word boundary after an alphanumeric tail.
        if (!phrase.empty() && is_ident_char(phrase.back()) && phrase.back() != '.' && i_ < s_.size() &&
            is_ident_char(s_[i_]) && s_[i_] != '.') {
            i_ = save;
            return false;
        }
        return true;
    }

    void phrase(std::string_view p) {
        std::size_t save = i_;
        skip_ws();
        std::size_t at = i_;
        i_ = save;
        if (!try_phrase(p)) {
            i_ = at;
            fail("'" + std::string(p) + "'");
        }
    }

    std::string identifier(const char* what) {
        skip_ws();
        std::size_t start = i_;
        while (i_ < s_.size() && is_ident_char(s_[i_])) ++i_;
        // Keep a sentence-ending '.' out of the identifier.
        while (i_ > start && s_[i_ - 1] == '.') --i_;
        if (i_ == start) fail(what);
        return std::string(s_.substr(start, i_ - start));
    }

    std::string_view number_token() {
        skip_ws();
        std::size_t n = scan_number_token(s_.substr(i_));
        if (n == 0) fail("number");
        auto tok = s_.substr(i_, n);
        i_ += n;
        return tok;
    }

    long positive_int(const char* what) {
        skip_ws();
        std::size_t start = i_;
        while (i_ < s_.size() && s_[i_] >= '0' && s_[i_] <= '9') ++i_;
        long v = 0;
        auto [ptr, ec] = std::from_chars(s_.data() + start, s_.data() + i_, v);
        if (i_ == start || ec != std::errc() || v < 1 || v > 1'000'000) {
            i_ = start;
            fail(what);
        }
        (void)ptr;
        return v;
    }

    void ch(char c) {
        skip_ws();
        if (i_ >= s_.size() || s_[i_] != c) fail(std::string("'") + c + "'");
        ++i_;
    }

    bool try_ch(char c) {
        std::size_t save = i_;
        skip_ws();
        if (i_ < s_.size() && s_[i_] == c) {
            ++i_;
            return true;
        }
        i_ = save;
        return false;
    }

    std::string until_quote() {
        std::size_t start = i_;
        while (i_ < s_.size() && s_[i_] != '"') ++i_;
        if (i_ >= s_.size()) fail("closing '\"'");
        return std::string(s_.substr(start, i_ - start));
    }

    [[noreturn]] void fail(std::string expected) const { throw ParseError(i_, std::move(expected)); }

private:
    std::string_view s_;
    std::size_t i_ = 0;
};

std::string parse_preamble(Cursor& c) {
    std::size_t start = c.pos();
    if (c.try_lit("<image>")) {
        if (!c.try_lit("\\n") && !c.try_lit("\\")) c.try_lit("\n");
        c.skip_ws();
    }
    if (c.try_lit("Yes,")) {
        std::size_t before = c.pos();
        c.skip_ws();
        if (c.pos() == before) c.fail("whitespace after 'Yes,'");
    }
    return std::string(c.slice(start, c.pos()));
}

ProprioState parse_row(Cursor& c) {
    ProprioState row;
    c.ch('[');
    for (std::size_t j = 0; j < kJointCount; ++j) {
        if (j > 0) c.ch(',');
        std::size_t at = c.pos();
        auto tok = c.number_token();
        try {
            row.joints[j] = Decimal::from_token(tok);
        } catch (const InvalidSpec&) {
            throw ParseError(at, "finite number");
        }
    }
    c.ch(']');
    return row;
}

std::vector<ProprioState> parse_history(Cursor& c) {
    std::vector<ProprioState> rows;
    c.ch('[');
    rows.push_back(parse_row(c));
    while (c.try_ch(',')) rows.push_back(parse_row(c));
    c.ch(']');
    return rows;
}

}  // namespace

void validate(const InstructionSpec& spec) {
    validate_identifier(spec.robot, "robot");
    validate_identifier(spec.control_mode, "control_mode");
    if (spec.task_sentence.empty()) throw InvalidSpec("task_sentence is empty");
    for (char c : spec.task_sentence) {
        if (c == '"' || c == '\n' || c == '\r') {
            throw InvalidSpec("task_sentence may not contain quotes or line breaks");
        }
    }
    if (spec.history.empty()) throw InvalidSpec("history must hold at least one state");
    if (spec.horizon < 1) throw InvalidSpec("horizon must be positive");
    for (const auto& state : spec.history) {
        for (const auto& j : state.joints) {
            if (!std::isfinite(j.value())) throw InvalidSpec("non-finite joint value");
        }
    }
}

std::string history_count_word(std::size_t h, bool digits) {
    if (h == 5 && !digits) return "five";
    return std::to_string(h);
}

std::string render_history(const std::vector<ProprioState>& history) {
    std::string out = "[";
    for (std::size_t r = 0; r < history.size(); ++r) {
        if (r > 0) out += ", ";
        out += '[';
        for (std::size_t j = 0; j < kJointCount; ++j) {
            if (j > 0) out += ", ";
            out += history[r].joints[j].text();
        }
        out += ']';
    }
    out += ']';
    return out;
}

std::string render_instruction(const InstructionSpec& spec) { return render_instruction(spec, {}); }

std::string render_instruction(const InstructionSpec& spec, const InstructionSurface& surface) {
    validate(spec);
    if (!valid_preamble(surface.preamble)) throw InvalidSpec("unsupported preamble: '" + surface.preamble + "'");

    std::string out = surface.preamble;
    out += "You are a " + spec.robot + " robot using ";
    if (surface.control_article) out += "the ";
    out += spec.control_mode + " control. The task is \"" + spec.task_sentence + "\", and the previous ";
    out += history_count_word(spec.history.size(), surface.history_count_in_digits);
    if (surface.including_current) out += " (including current)";
    out += " steps are " + render_history(spec.history) + ". Can you predict ";
    if (surface.question == QuestionForm::TraceAndAction) {
        out += "the trajectory of the end-effector and the action of the next ";
    } else {
        out += "action of the next ";
    }
    out += std::to_string(spec.horizon);
    out += spec.horizon == 1 ? " step?" : " steps?";
    return out;
}

ParsedInstruction parse_instruction_with_surface(std::string_view text) {
    Cursor c(text);
    ParsedInstruction out;
    auto& spec = out.spec;
    auto& surface = out.surface;

    surface.preamble = parse_preamble(c);
    c.phrase("You are a");
    spec.robot = c.identifier("robot name");
    c.phrase("robot using");
    {
        // "the" is optional and could itself be a control mode name.
        Cursor with_article = c;
        bool parsed = false;
        if (with_article.try_phrase("the")) {
            try {
                spec.control_mode = with_article.identifier("control mode");
                with_article.phrase("control.");
                c = with_article;
                surface.control_article = true;
                parsed = true;
            } catch (const ParseError&) {
            }
        }
        if (!parsed) {
            spec.control_mode = c.identifier("control mode");
            c.phrase("control.");
        }
    }
    c.phrase("The task is");
    c.ch('"');
    std::size_t task_at = c.pos();
    spec.task_sentence = c.until_quote();
    if (spec.task_sentence.empty()) throw ParseError(task_at, "non-empty task sentence");
    c.ch('"');
    c.ch(',');
    c.phrase("and the previous");

    c.skip_ws();
    std::size_t count_at = c.pos();
    std::size_t declared = 0;
    if (c.try_phrase("five")) {
        declared = 5;
        surface.history_count_in_digits = false;
    } else {
        declared = static_cast<std::size_t>(c.positive_int("history length"));
        surface.history_count_in_digits = true;
    }
    surface.including_current = c.try_phrase("(including current)");
    c.phrase("steps are");
    spec.history = parse_history(c);
    if (spec.history.size() != declared) throw ParseError(count_at, "history length matching the listed states");
    if (declared != 5) surface.history_count_in_digits = false;  // digits are the only form for h != 5

    c.ch('.');
    c.phrase("Can you predict");
    if (c.try_phrase("action of the next")) {
        surface.question = QuestionForm::ActionOnly;
    } else if (c.try_phrase("the trajectory of the end-effector and the action of the next")) {
        surface.question = QuestionForm::TraceAndAction;
    } else {
        c.fail("'action of the next' or 'the trajectory of the end-effector and the action of the next'");
    }
    spec.horizon = static_cast<int>(c.positive_int("positive step count"));
    if (!c.try_phrase("steps")) c.phrase("step");
    c.ch('?');
    c.skip_ws();
    if (!c.at_end()) c.fail("end of instruction");

    try {
        validate(spec);
    } catch (const InvalidSpec& e) {
        throw ParseError(0, std::string("valid instruction fields (") + e.what() + ")");
    }
    return out;
}

InstructionSpec parse_instruction(std::string_view text) { return parse_instruction_with_surface(text).spec; }

// ---------------------------------------------------------------------------

SlotPattern::SlotPattern(std::string pattern) : text_(std::move(pattern)) {
    constexpr std::string_view slot = "{OBJECT}";
    auto at = text_.find(slot);
    if (at == std::string::npos || text_.find(slot, at + 1) != std::string::npos) {
        throw InvalidSpec("pattern needs exactly one {OBJECT} slot: '" + text_ + "'");
    }
    prefix_ = text_.substr(0, at);
    suffix_ = text_.substr(at + slot.size());
}

std::string SlotPattern::match(std::string_view sentence) const {
    if (sentence.size() <= prefix_.size() + suffix_.size()) return {};
    if (sentence.substr(0, prefix_.size()) != prefix_) return {};
    if (sentence.substr(sentence.size() - suffix_.size()) != suffix_) return {};
    auto noun = sentence.substr(prefix_.size(), sentence.size() - prefix_.size() - suffix_.size());
    if (is_space(noun.front()) || is_space(noun.back())) return {};
    return std::string(noun);
}

std::string SlotPattern::fill(std::string_view noun) const { return prefix_ + std::string(noun) + suffix_; }

void TaskLexicon::add(std::string task, std::string pattern) {
    entries_.emplace_back(std::move(task), SlotPattern(std::move(pattern)));
}

const SlotPattern* TaskLexicon::find(std::string_view task) const {
    for (const auto& [name, pattern] : entries_) {
        if (name == task) return &pattern;
    }
    return nullptr;
}

SlotMatch TaskLexicon::match(std::string_view sentence) const {
    const std::pair<std::string, SlotPattern>* best = nullptr;
    std::string best_noun;
    for (const auto& entry : entries_) {
        auto noun = entry.second.match(sentence);
        if (noun.empty()) continue;
        auto literal = entry.second.prefix().size() + entry.second.suffix().size();
        if (!best || literal > best->second.prefix().size() + best->second.suffix().size()) {
            best = &entry;
            best_noun = std::move(noun);
        }
    }
    if (!best) throw NoSlotMatch("no task pattern matches '" + std::string(sentence) + "'");
    return {best->first, best->second.text(), std::move(best_noun)};
}

std::string extract_target_noun(std::string_view task_sentence, const TaskLexicon& lexicon) {
    return lexicon.match(task_sentence).noun;
}

std::string head_noun(std::string_view phrase) {
    std::size_t end = phrase.size();
    while (end > 0 && is_space(phrase[end - 1])) --end;
    std::size_t start = end;
    while (start > 0 && !is_space(phrase[start - 1])) --start;
    return std::string(phrase.substr(start, end - start));
}

}  // namespace iva
