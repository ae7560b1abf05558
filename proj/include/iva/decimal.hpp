#pragma once

#include <string>
#include <string_view>

namespace iva {

/// A real number that remembers the exact token it was written as.
///
/// Instructions and responses carry numbers such as `0`, `0.0115` and `1.0`;
/// keeping the source token lets rendering reproduce the input byte for byte
/// while arithmetic uses `value()`.
class Decimal {
public:
    Decimal() = default;

    /// Rounds to four decimal places and uses the canonical text form.
    static Decimal from_double(double v);

    /// Accepts `[-+]?digits[.digits][(e|E)[-+]digits]`. Throws InvalidSpec otherwise.
    static Decimal from_token(std::string_view token);

    double value() const noexcept { return value_; }
    const std::string& text() const noexcept { return text_; }

    bool operator==(const Decimal&) const = default;

private:
    Decimal(double v, std::string text) : value_(v), text_(std::move(text)) {}

    double value_ = 0.0;
    std::string text_ = "0";
};

/// Canonical text: at most four decimals, trailing zeros trimmed, at least
/// one digit after the point (`1.0`, `-0.056`, `0.0`).
std::string format_decimal(double v);

/// Length of the numeric token at the start of `s`, or 0 when there is none.
std::size_t scan_number_token(std::string_view s) noexcept;

}  // namespace iva
