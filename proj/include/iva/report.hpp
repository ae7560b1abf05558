#pragma once

#include <string>
#include <string_view>

#include "iva/scoring.hpp"

namespace iva {

enum class ReportFormat { Json, Csv, Markdown };

/// "json", "csv" or "md". Throws ConfigError.
ReportFormat report_format_from_string(std::string_view s);
std::string_view extension(ReportFormat f) noexcept;

/// Rates are fractions in full precision in json and csv; the markdown table
/// shows percentages with two decimals in the layout
/// `Task | Overall Success | FP Detection (In-Domain/Out-of-Domain) | TP Success`.
std::string render_report(const SuiteMetrics& metrics, ReportFormat format);

/// Two-decimal percentage, "n/a" when absent.
std::string format_percent(std::optional<double> rate);

}  // namespace iva
