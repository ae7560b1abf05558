#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iva/decimal.hpp"

namespace iva {

inline constexpr std::size_t kJointCount = 7;

/// One proprioceptive reading: seven joint angles in radians.
struct ProprioState {
    std::array<Decimal, kJointCount> joints{};

    static ProprioState zeros() { return {}; }
    bool operator==(const ProprioState&) const = default;
};

/// The structured fields behind a rendered instruction.
struct InstructionSpec {
    std::string robot;
    std::string control_mode;
    std::string task_sentence;
    std::vector<ProprioState> history;  // oldest first, last entry is the current step
    int horizon = 1;

    bool operator==(const InstructionSpec&) const = default;
};

enum class QuestionForm {
    ActionOnly,      // "Can you predict action of the next 1 step?"
    TraceAndAction,  // "Can you predict the trajectory of the end-effector and the action of the next 1 step?"
};

/// Surface choices that do not change the meaning of an instruction but must
/// be kept to reproduce an input byte for byte.
struct InstructionSurface {
    std::string preamble;  // e.g. "<image>\\n" or "Yes, "; validated by the parser
    bool control_article = false;    // "using the joint control"
    bool including_current = true;   // "(including current)"
    bool history_count_in_digits = false;  // "previous 5" instead of "previous five"
    QuestionForm question = QuestionForm::ActionOnly;

    bool operator==(const InstructionSurface&) const = default;
};

struct ParsedInstruction {
    InstructionSpec spec;
    InstructionSurface surface;
};

/// Throws InvalidSpec when a field breaks its invariant.
void validate(const InstructionSpec& spec);

/// Canonical form:
/// `You are a {robot} robot using {mode} control. The task is "{task}", and the
/// previous five (including current) steps are [[...], ...]. Can you predict
/// action of the next {n} step?`
std::string render_instruction(const InstructionSpec& spec);
std::string render_instruction(const InstructionSpec& spec, const InstructionSurface& surface);

/// Throws ParseError on anything outside the supported template. Never crashes
/// on arbitrary bytes.
InstructionSpec parse_instruction(std::string_view text);
ParsedInstruction parse_instruction_with_surface(std::string_view text);

/// Serializes a history as `[[a, b, ...], [...]]`.
std::string render_history(const std::vector<ProprioState>& history);

/// Word used for the history length: "five" for 5, the digits otherwise.
std::string history_count_word(std::size_t h, bool digits);

// ---------------------------------------------------------------------------
// Task lexicon

/// A sentence pattern with exactly one `{OBJECT}` slot, e.g. `close the {OBJECT}`.
class SlotPattern {
public:
    explicit SlotPattern(std::string pattern);

    const std::string& text() const noexcept { return text_; }
    const std::string& prefix() const noexcept { return prefix_; }
    const std::string& suffix() const noexcept { return suffix_; }

    /// Returns the slot filler when `sentence` matches, empty string otherwise.
    std::string match(std::string_view sentence) const;
    std::string fill(std::string_view noun) const;

private:
    std::string text_;
    std::string prefix_;
    std::string suffix_;
};

struct SlotMatch {
    std::string task;
    std::string pattern;
    std::string noun;
};

/// Maps task names to object-slot patterns. Iteration order is insertion order.
class TaskLexicon {
public:
    void add(std::string task, std::string pattern);
    bool empty() const noexcept { return entries_.empty(); }
    const std::vector<std::pair<std::string, SlotPattern>>& entries() const noexcept { return entries_; }
    const SlotPattern* find(std::string_view task) const;

    /// Most specific matching pattern wins (longest literal text); ties go to
    /// the earlier entry. Throws NoSlotMatch.
    SlotMatch match(std::string_view sentence) const;

private:
    std::vector<std::pair<std::string, SlotPattern>> entries_;
};

/// Noun phrase in the object slot of `task_sentence`. Throws NoSlotMatch.
std::string extract_target_noun(std::string_view task_sentence, const TaskLexicon& lexicon);

/// Last word of a noun phrase ("blue safe" -> "safe").
std::string head_noun(std::string_view phrase);

}  // namespace iva
