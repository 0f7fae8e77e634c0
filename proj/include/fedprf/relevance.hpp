#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "fedprf/index.hpp"

namespace fedprf {

/// One pseudo-relevant document: the index it came from, its doc-ref there,
/// its stream ordinal (global tie-break key) and retrieval log-score.
struct FeedbackDoc {
    const InvertedIndex* index = nullptr;
    std::uint32_t doc = 0;
    std::uint64_t ordinal = 0;
    double log_score = 0.0;
};

/// Ordered by score descending, ties by ascending ordinal.
using FeedbackSet = std::vector<FeedbackDoc>;

struct ExpansionParams {
    std::size_t feedback_docs = 50;    // feedback depth k
    std::size_t num_terms = 20;        // expansion-model size
    double lambda = 0.5;               // interpolation weight
    double mu = 2500.0;                // Dirichlet smoothing mass

    void validate() const;
};

/// Relevance-model estimate over the feedback documents:
///   p(w|E) ~ sum_d p_mle(w|d) * p(q|d),
/// where p(q|d) is the softmax of the feedback log-scores. Stopwords and
/// terms shorter than 2 bytes are dropped; the model is truncated to the
/// num_terms highest-weight terms (ties by term ascending) and renormalized.
/// Throws std::runtime_error("empty expansion model") if everything is
/// filtered out.
QueryModel estimate_rm1(const FeedbackSet& feedback, std::size_t num_terms,
                        const std::set<std::string>& stop);

/// theta_F = (1 - lambda) * orig + lambda * expansion over the union
/// vocabulary; zero-weight terms are dropped so the endpoints reproduce the
/// inputs exactly.
QueryModel interpolate(const QueryModel& orig, const QueryModel& expansion, double lambda);

/// Where feedback documents come from: a single index, or a broker fanning
/// out to selected verticals. Implementations record their own costs.
struct FeedbackCosts {
    std::int64_t selection = 0;  // C_SEL; zero for monolithic sources
    std::vector<std::pair<std::string, std::int64_t>> per_vertical;  // postings per searched shard
    std::size_t verticals_searched = 0;
};

class FeedbackSource {
  public:
    virtual ~FeedbackSource() = default;
    virtual FeedbackSet fetch(const QueryModel& query, std::size_t k, double mu,
                              FeedbackCosts& costs) const = 0;
};

/// Feedback straight from one index (standard PRF, external-corpus PRF).
class MonolithicFeedback : public FeedbackSource {
  public:
    MonolithicFeedback(const InvertedIndex& index, std::string name)
        : index_(&index), name_(std::move(name)) {}
    FeedbackSet fetch(const QueryModel& query, std::size_t k, double mu,
                      FeedbackCosts& costs) const override;

  private:
    const InvertedIndex* index_;
    std::string name_;
};

struct ExpansionRun {
    std::vector<ScoredDoc> ranking;  // final ranking on the target index
    QueryModel final_query;          // theta_F
    FeedbackSet feedback;
    FeedbackCosts feedback_costs;
    std::int64_t final_cost = 0;     // C_R(theta_F, target)
    bool fell_back = false;          // empty feedback: ran the original query
};

/// Full PRF pipeline: feedback retrieval, RM estimation, interpolation,
/// final top-`depth` retrieval on the target. An empty feedback set degrades
/// to the original-query ranking with theta_F = theta_0 (warning logged).
ExpansionRun expand_and_rerun(const QueryModel& query, const FeedbackSource& feedback_source,
                              const InvertedIndex& target, const ExpansionParams& params,
                              std::size_t depth);

/// Re-scores exactly the documents of `initial` under theta_F. Same document
/// set, possibly different order; charges no retrieval postings.
std::vector<ScoredDoc> clrm_rerank(const std::vector<ScoredDoc>& initial,
                                   const QueryModel& final_query, const InvertedIndex& target,
                                   double mu);

}  // namespace fedprf
