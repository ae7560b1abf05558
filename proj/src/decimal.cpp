#include "iva/decimal.hpp"

#include <cmath>
#include <cstdio>

#include "iva/error.hpp"

namespace iva {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

std::string format_decimal(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    std::string s(buf);
    auto dot = s.find('.');
    if (dot != std::string::npos) {
        while (s.size() > dot + 2 && s.back() == '0') s.pop_back();
    }
    if (s == "-0.0") s = "0.0";
    return s;
}

std::size_t scan_number_token(std::string_view s) noexcept {
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
    std::size_t int_start = i;
    while (i < s.size() && is_digit(s[i])) ++i;
    if (i == int_start) return 0;
    if (i < s.size() && s[i] == '.') {
        std::size_t frac_start = i + 1;
        std::size_t j = frac_start;
        while (j < s.size() && is_digit(s[j])) ++j;
        if (j == frac_start) return i;  // "1." stops before the dot
        i = j;
    }
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        if (j < s.size() && (s[j] == '-' || s[j] == '+')) ++j;
        std::size_t exp_start = j;
        while (j < s.size() && is_digit(s[j])) ++j;
        if (j > exp_start) i = j;
    }
    return i;
}

Decimal Decimal::from_double(double v) {
    if (!std::isfinite(v)) throw InvalidSpec("non-finite number");
    std::string text = format_decimal(v);
    double rounded = std::strtod(text.c_str(), nullptr);
    return Decimal(rounded, std::move(text));
}

Decimal Decimal::from_token(std::string_view token) {
    if (token.empty() || scan_number_token(token) != token.size()) {
        throw InvalidSpec("not a number token: '" + std::string(token) + "'");
    }
    std::string text(token);
    double v = std::strtod(text.c_str(), nullptr);
    if (!std::isfinite(v)) throw InvalidSpec("non-finite number: " + text);
    return Decimal(v, std::move(text));
}

}  // namespace iva
