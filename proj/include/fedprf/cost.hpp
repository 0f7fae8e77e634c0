#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace fedprf {

/// Integer postings-count costs of one query under one method. Wall-clock
/// time is never part of this accounting.
struct CostReport {
    std::string method;
    std::string topic;
    std::int64_t selection = 0;           // C_SEL
    std::vector<std::pair<std::string, std::int64_t>> per_vertical;
    std::int64_t vertical_retrieval = 0;  // C_VR: sum of per_vertical
    std::int64_t vertical_feedback = 0;   // C_VF = C_SEL + C_VR
    std::int64_t expansion = 0;           // C_QE
    std::int64_t final_retrieval = 0;     // C_R of the final expanded query
    std::int64_t total = 0;               // C_QE + final
    std::int64_t latency = 0;             // C_Lat = C_SEL + max per-vertical
};

/// Monolithic feedback: the whole expansion index is one shard, so the
/// latency equals the expansion cost.
CostReport assemble_prf_cost(std::int64_t initial_postings, std::int64_t final_postings);

/// Brokered feedback: selection cost plus per-vertical fan-out counts.
CostReport assemble_prvf_cost(std::int64_t selection_cost,
                              const std::vector<std::pair<std::string, std::int64_t>>& per_vertical,
                              std::int64_t final_postings);

/// Arithmetic means over one method's reports.
struct CostSummary {
    std::string method;
    std::size_t queries = 0;
    double selection = 0.0;
    double vertical_retrieval = 0.0;
    double vertical_feedback = 0.0;
    double expansion = 0.0;
    double final_retrieval = 0.0;
    double total = 0.0;
    double latency = 0.0;
};

/// Means of every cost field. All reports must carry the same method name;
/// mixing methods without grouping is an error.
CostSummary aggregate(std::span<const CostReport> reports);

/// Percentage cost reduction of `value` relative to `baseline`.
double reduction_percent(double baseline, double value);

/// Per-query rows followed by one mean row per summary, stable column order:
/// method, topic, C_SEL, C_VR, C_VF, C_QE, C_R_final, C_Lat.
void write_costs_csv(const std::string& path, std::span<const CostReport> rows,
                     std::span<const CostSummary> summaries);

}  // namespace fedprf
