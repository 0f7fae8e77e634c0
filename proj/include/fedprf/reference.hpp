#pragma once

#include "fedprf/index.hpp"
#include "fedprf/relevance.hpp"

namespace fedprf::reference {

/// Serial exhaustive retrieval: scores every document straight off its
/// forward term vector, keeps those containing a query term, sorts, and
/// truncates. Deliberately shares no code with the postings-driven kernel;
/// tests and the benchmark compare the two.
std::vector<ScoredDoc> retrieve_topk_serial(const QueryModel& query, const InvertedIndex& index,
                                            std::size_t k, double mu, PostingsCounter& counter);

/// Straight-line PRF pipeline (serial retrieval, inline relevance-model
/// estimation, inline interpolation, serial re-retrieval).
struct PipelineResult {
    std::vector<ScoredDoc> ranking;
    QueryModel final_query;
};
PipelineResult prf_pipeline_serial(const QueryModel& query, const InvertedIndex& feedback_index,
                                   const InvertedIndex& target, const ExpansionParams& params,
                                   std::size_t depth);

}  // namespace fedprf::reference
