#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fedprf/federation.hpp"
#include "fedprf/index.hpp"

namespace fedprf {

struct CrcsParams {
    std::size_t gamma = 50;  // CSI retrieval depth
    std::size_t m = 1;       // number of verticals to select
    double mu = 2500.0;      // smoothing mass for the CSI retrieval

    void validate() const;
};

struct RankSParams {
    double base = 50.0;        // vote decay base B
    double min_ranks = 1e-6;   // vote threshold
    std::size_t gamma = 50;    // CSI retrieval depth
    double mu = 2500.0;        // smoothing mass for the CSI retrieval

    void validate() const;
};

struct TailyParams {
    double n = 400.0;  // global top-document budget
    double v = 50.0;   // per-vertical document cutoff

    void validate() const;
};

/// Central-rank-based collection selection: runs the query on the CSI and
/// credits each vertical (N_V / s_V) * (gamma - rank) votes per sampled hit.
/// Returns the m best verticals, ties and padding by ascending name; an
/// empty CSI ranking falls back to the m largest verticals.
SelectionResult crcs_select(const QueryModel& query, const CSI& csi, const VerticalSet& vs,
                            const CrcsParams& params, PostingsCounter& counter);

/// Rank-S: votes decay geometrically with CSI rank; CSI log-scores are
/// sanitized to positive magnitudes with a softmax first. Selects every
/// vertical whose vote exceeds min_ranks, or the single best otherwise.
SelectionResult ranks_select(const QueryModel& query, const CSI& csi, const VerticalSet& vs,
                             const RankSParams& params, PostingsCounter& counter);

/// Per-(vertical, term) score statistics backing the Taily selector.
class TailyStats {
  public:
    struct TermStats {
        std::uint32_t df = 0;
        double mean = 0.0;  // of x(t,d) = ln p(t|d) - ln p_floor(t), x >= 0
        double variance = 0.0;
    };
    struct VerticalStats {
        std::string name;
        std::int64_t doc_count = 0;
        std::map<std::string, TermStats> terms;
    };

    const std::vector<VerticalStats>& verticals() const { return verticals_; }
    double mu() const { return mu_; }

    void save(const std::string& path) const;
    static TailyStats load(const std::string& path);

  private:
    std::vector<VerticalStats> verticals_;  // sorted by name
    double mu_ = 2500.0;
    friend TailyStats taily_build(const VerticalSet&, double);
};

/// Builds vocabulary statistics for every vertical: for each term, the mean
/// and variance of the floored per-document log score contribution among the
/// documents containing it. Smoothing uses the shared global snapshot.
TailyStats taily_build(const VerticalSet& vs, double mu);

/// One vertical's fitted query-score distribution and candidate mass.
struct TailyCandidate {
    std::string name;
    double mean = 0.0;
    double variance = 0.0;
    double est_docs = 0.0;  // n_V: estimated candidate-document count
};

/// P(X > threshold) for the method-of-moments Gamma fit; a zero-variance fit
/// degenerates to a point mass at the mean.
double gamma_tail(double mean, double variance, double threshold);

struct TailyEstimate {
    std::string name;
    double t_v = 0.0;
};

/// Bisects a global score threshold s* so the expected number of documents
/// scoring above it totals the budget n, then reports each vertical's share.
/// Returns the estimates (candidate order) and s*.
std::pair<std::vector<TailyEstimate>, double> taily_estimates(
    std::span<const TailyCandidate> candidates, double n_budget);

/// Vocabulary-based selection: fits each vertical's query-score Gamma from
/// the summed per-term moments, thresholds the fits against the shared
/// budget, and keeps verticals with t_V >= v (order: t_V descending).
/// C_SEL equals the vertical count.
SelectionResult taily_select(const QueryModel& query, const TailyStats& stats,
                             const TailyParams& params);

}  // namespace fedprf
