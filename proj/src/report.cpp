#include "iva/report.hpp"

#include <charconv>
#include <cstdio>

#include "iva/error.hpp"
#include "iva/json_util.hpp"

namespace iva {

ReportFormat report_format_from_string(std::string_view s) {
    if (s == "json") return ReportFormat::Json;
    if (s == "csv") return ReportFormat::Csv;
    if (s == "md") return ReportFormat::Markdown;
    throw ConfigError("report format must be json, csv or md");
}

std::string_view extension(ReportFormat f) noexcept {
    switch (f) {
        case ReportFormat::Json:
            return "json";
        case ReportFormat::Csv:
            return "csv";
        default:
            return "md";
    }
}

std::string format_percent(std::optional<double> rate) {
    if (!rate) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", *rate * 100.0);
    return buf;
}

namespace {

std::string shortest(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string csv_rate(const std::optional<double>& r) { return r ? shortest(*r) : ""; }

ojson json_rate(const std::optional<double>& r) { return r ? ojson(*r) : ojson(nullptr); }

std::string render_json(const SuiteMetrics& m) {
    ojson j;
    j["schema"] = "iva-metrics/1";
    ojson tasks = ojson::array();
    for (const auto& t : m.tasks) {
        ojson jt;
        jt["task"] = t.task_name;
        jt["overall"] = json_rate(t.overall);
        jt["fp_detect_id"] = json_rate(t.fp_detect_id);
        jt["fp_detect_ood"] = json_rate(t.fp_detect_ood);
        jt["tp_success"] = json_rate(t.tp_success);
        jt["fp_success"] = json_rate(t.fp_success);
        jt["fp_success_equal"] = json_rate(t.fp_success_equal);
        jt["tp_runs"] = t.tp_runs;
        jt["tp_successes"] = t.tp_successes;
        jt["id_episodes"] = t.id_episodes;
        jt["ood_episodes"] = t.ood_episodes;
        jt["malformed"] = t.malformed;
        tasks.push_back(std::move(jt));
    }
    j["tasks"] = std::move(tasks);
    ojson suite;
    suite["overall"] = m.overall;
    suite["episodes"] = m.episodes;
    suite["scored_runs"] = m.scored_runs;
    suite["malformed"] = m.malformed;
    suite["tp_mean"] = json_rate(m.tp_mean);
    suite["tp_stddev"] = json_rate(m.tp_stddev);
    j["suite"] = std::move(suite);
    return j.dump(2) + "\n";
}

std::string render_csv(const SuiteMetrics& m) {
    std::string out =
        "task,overall,fp_detect_id,fp_detect_ood,tp_success,fp_success,fp_success_equal,tp_runs,tp_successes,"
        "id_episodes,ood_episodes,malformed\n";
    for (const auto& t : m.tasks) {
        out += t.task_name + ',' + csv_rate(t.overall) + ',' + csv_rate(t.fp_detect_id) + ',' +
               csv_rate(t.fp_detect_ood) + ',' + csv_rate(t.tp_success) + ',' + csv_rate(t.fp_success) + ',' +
               csv_rate(t.fp_success_equal) + ',' + std::to_string(t.tp_runs) + ',' +
               std::to_string(t.tp_successes) + ',' + std::to_string(t.id_episodes) + ',' +
               std::to_string(t.ood_episodes) + ',' + std::to_string(t.malformed) + '\n';
    }
    return out;
}

std::string render_markdown(const SuiteMetrics& m) {
    std::string out =
        "| Task | Overall Success | FP Detection (In-Domain/Out-of-Domain) | TP Success |\n"
        "|---|---|---|---|\n";
    for (const auto& t : m.tasks) {
        out += "| " + t.task_name + " | " + format_percent(t.overall) + " | " + format_percent(t.fp_detect_id) +
               " / " + format_percent(t.fp_detect_ood) + " | " + format_percent(t.tp_success) + " |\n";
    }
    out += "\nSuite overall: " + format_percent(m.overall) + " over " + std::to_string(m.episodes) + " episodes";
    if (m.tp_mean) {
        out += "; TP success " + format_percent(m.tp_mean);
        if (m.tp_stddev) out += " \xC2\xB1 " + format_percent(m.tp_stddev);
    }
    out += "; malformed responses: " + std::to_string(m.malformed) + "\n";
    return out;
}

}  // namespace

std::string render_report(const SuiteMetrics& metrics, ReportFormat format) {
    switch (format) {
        case ReportFormat::Json:
            return render_json(metrics);
        case ReportFormat::Csv:
            return render_csv(metrics);
        default:
            return render_markdown(metrics);
    }
}

}  // namespace iva
