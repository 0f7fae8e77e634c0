#include "fedprf/cost.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

namespace fedprf {

namespace {

void finish(CostReport& report) {
    report.vertical_retrieval = 0;
    std::int64_t longest = 0;
    for (const auto& [_, postings] : report.per_vertical) {
        report.vertical_retrieval += postings;
        longest = std::max(longest, postings);
    }
    report.vertical_feedback = report.selection + report.vertical_retrieval;
    report.total = report.expansion + report.final_retrieval;
    report.latency = report.selection + longest;
}

}  // namespace

CostReport assemble_prf_cost(std::int64_t initial_postings, std::int64_t final_postings) {
    if (initial_postings < 0 || final_postings < 0) {
        throw std::invalid_argument("costs must be non-negative");
    }
    CostReport report;
    if (initial_postings > 0) report.per_vertical = {{"feedback", initial_postings}};
    report.expansion = initial_postings;
    report.final_retrieval = final_postings;
    finish(report);
    return report;
}

CostReport assemble_prvf_cost(std::int64_t selection_cost,
                              const std::vector<std::pair<std::string, std::int64_t>>& per_vertical,
                              std::int64_t final_postings) {
    if (selection_cost < 0 || final_postings < 0) {
        throw std::invalid_argument("costs must be non-negative");
    }
    for (const auto& [name, postings] : per_vertical) {
        if (postings < 0) throw std::invalid_argument("negative postings for vertical " + name);
    }
    CostReport report;
    report.selection = selection_cost;
    report.per_vertical = per_vertical;
    report.final_retrieval = final_postings;
    finish(report);
    report.expansion = report.vertical_feedback;  // C_QE = C_VF for vertical feedback
    report.total = report.expansion + report.final_retrieval;
    return report;
}

CostSummary aggregate(std::span<const CostReport> reports) {
    if (reports.empty()) throw std::invalid_argument("nothing to aggregate");
    CostSummary summary;
    summary.method = reports.front().method;
    summary.queries = reports.size();
    for (const auto& r : reports) {
        if (r.method != summary.method) {
            throw std::invalid_argument("mixed methods in aggregation: " + summary.method +
                                        " vs " + r.method);
        }
        summary.selection += static_cast<double>(r.selection);
        summary.vertical_retrieval += static_cast<double>(r.vertical_retrieval);
        summary.vertical_feedback += static_cast<double>(r.vertical_feedback);
        summary.expansion += static_cast<double>(r.expansion);
        summary.final_retrieval += static_cast<double>(r.final_retrieval);
        summary.total += static_cast<double>(r.total);
        summary.latency += static_cast<double>(r.latency);
    }
    const auto n = static_cast<double>(reports.size());
    summary.selection /= n;
    summary.vertical_retrieval /= n;
    summary.vertical_feedback /= n;
    summary.expansion /= n;
    summary.final_retrieval /= n;
    summary.total /= n;
    summary.latency /= n;
    return summary;
}

double reduction_percent(double baseline, double value) {
    if (baseline == 0.0) return 0.0;
    return (1.0 - value / baseline) * 100.0;
}

void write_costs_csv(const std::string& path, std::span<const CostReport> rows,
                     std::span<const CostSummary> summaries) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write costs csv: " + path);
    out << "method,topic,C_SEL,C_VR,C_VF,C_QE,C_R_final,C_Lat\n";
    for (const auto& r : rows) {
        out << r.method << ',' << r.topic << ',' << r.selection << ',' << r.vertical_retrieval
            << ',' << r.vertical_feedback << ',' << r.expansion << ',' << r.final_retrieval << ','
            << r.latency << '\n';
    }
    out.setf(std::ios::fixed);
    out.precision(2);
    for (const auto& s : summaries) {
        out << s.method << ",mean," << s.selection << ',' << s.vertical_retrieval << ','
            << s.vertical_feedback << ',' << s.expansion << ',' << s.final_retrieval << ','
            << s.latency << '\n';
    }
    if (!out) throw std::runtime_error("short write to costs csv: " + path);
}

}  // namespace fedprf
