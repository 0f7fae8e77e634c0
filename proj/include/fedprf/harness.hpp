#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedprf/cost.hpp"
#include "fedprf/eval.hpp"
#include "fedprf/federation.hpp"
#include "fedprf/index.hpp"
#include "fedprf/relevance.hpp"
#include "fedprf/selection.hpp"

namespace fedprf {

/// Retrieval methods the harness can run.
///   no-prf      query likelihood only
///   prf         feedback on the target index
///   clrm       re-ranks the initial list with the expanded query
///   prf-news    feedback on the expansion-corpus union
///   prf-ext     feedback on a separate external index
///   vprf-crcs1..3, vprf-ranks, vprf-taily
///               resource selection plus vertical feedback
const std::vector<std::string>& known_methods();
bool method_known(const std::string& name);

struct ExperimentParams {
    ExpansionParams expansion;               // k=50, terms=20, lambda=0.5, mu=2500
    std::size_t external_feedback_docs = 10; // feedback depth on the external index
    CrcsParams crcs;
    RankSParams ranks;
    TailyParams taily;
    std::size_t depth = 1000;                // evaluation/retrieval depth
    std::optional<TimeWindow> window;        // applied to feedback corpora only
};

struct ExperimentInputs {
    const InvertedIndex* target = nullptr;
    const VerticalSet* verticals = nullptr;  // expansion corpus shards
    const CSI* csi = nullptr;
    const TailyStats* taily = nullptr;
    const InvertedIndex* external = nullptr;
    const Qrels* qrels = nullptr;            // optional: metrics need it
    std::span<const Topic> topics;
};

struct TopicOutcome {
    std::string topic;
    double ap = 0.0;
    double ndcg30 = 0.0;
    double recall = 0.0;
    bool scored = false;  // judged topic with at least one relevant document
    std::size_t verticals_searched = 0;
    CostReport cost;
    std::vector<RunRow> run;
};

struct MethodOutcome {
    std::string method;
    std::vector<TopicOutcome> topics;
    double mean_ap = 0.0;
    double mean_ndcg30 = 0.0;
    double mean_recall = 0.0;
    std::size_t scored_topics = 0;
    std::size_t unscored_topics = 0;  // no judgments or no relevant documents
    CostSummary costs;
    double mean_verticals = 0.0;
    double wall_ms = 0.0;  // informational only
};

MethodOutcome run_method(const ExperimentInputs& inputs, const std::string& method,
                         const ExperimentParams& params);

std::vector<MethodOutcome> run_experiment(const ExperimentInputs& inputs,
                                          std::span<const std::string> methods,
                                          const ExperimentParams& params);

enum class SweepKind { age, span };

struct SweepRow {
    std::int64_t param = 0;  // seconds
    std::string method;
    double mean_ap = 0.0;
    double mean_ndcg30 = 0.0;
};

/// Reruns the methods once per window value (ages with the configured span,
/// or spans at age zero) and reports the effectiveness series.
std::vector<SweepRow> sweep_window(const ExperimentInputs& inputs,
                                   std::span<const std::string> methods,
                                   const ExperimentParams& params, SweepKind kind,
                                   std::span<const std::int64_t> values);

void write_metrics_csv(const std::string& path, std::span<const MethodOutcome> outcomes);
void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows);

/// Human-readable summary: effectiveness means, cost means, reductions
/// against a baseline method (when present among the outcomes).
std::string format_summary(std::span<const MethodOutcome> outcomes,
                           const std::string& baseline_method);

}  // namespace fedprf
