#include "fedprf/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "fedprf/log.hpp"

namespace fedprf {

void ExpansionParams::validate() const {
    if (feedback_docs < 1) throw std::invalid_argument("feedback_docs must be >= 1");
    if (num_terms < 1) throw std::invalid_argument("num_terms must be >= 1");
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda must be in [0,1]");
    if (mu <= 0.0) throw std::invalid_argument("mu must be positive");
}

QueryModel estimate_rm1(const FeedbackSet& feedback, std::size_t num_terms,
                        const std::set<std::string>& stop) {
    if (feedback.empty()) throw std::invalid_argument("feedback set must be non-empty");

    // p(q|d): softmax of the log-scores, shifted by the max for stability.
    double max_score = feedback.front().log_score;
    for (const auto& fd : feedback) max_score = std::max(max_score, fd.log_score);
    std::vector<double> pq(feedback.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < feedback.size(); ++i) {
        pq[i] = std::exp(feedback[i].log_score - max_score);
        norm += pq[i];
    }
    for (auto& p : pq) p /= norm;

    std::map<std::string, double> weights;
    for (std::size_t i = 0; i < feedback.size(); ++i) {
        const auto& fd = feedback[i];
        const DocEntry& entry = fd.index->doc(fd.doc);
        if (entry.length == 0) continue;
        const double doc_len = entry.length;
        for (const auto& [term_id, tf] : entry.vector) {
            weights[fd.index->term(term_id)] += (tf / doc_len) * pq[i];
        }
    }

    std::vector<std::pair<std::string, double>> candidates;
    candidates.reserve(weights.size());
    for (auto& [term, w] : weights) {
        if (term.size() < 2 || stop.contains(term)) continue;
        candidates.emplace_back(term, w);
    }
    if (candidates.empty()) throw std::runtime_error("empty expansion model");

    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    if (candidates.size() > num_terms) candidates.resize(num_terms);
    return QueryModel::from_weights(std::move(candidates));
}

QueryModel interpolate(const QueryModel& orig, const QueryModel& expansion, double lambda) {
    if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda must be in [0,1]");
    std::map<std::string, double> combined;
    for (const auto& [term, w] : orig.terms()) combined[term] += (1.0 - lambda) * w;
    for (const auto& [term, w] : expansion.terms()) combined[term] += lambda * w;
    std::vector<std::pair<std::string, double>> weights;
    weights.reserve(combined.size());
    for (auto& [term, w] : combined) {
        if (w > 0.0) weights.emplace_back(term, w);
    }
    return QueryModel::from_weights(std::move(weights));
}

FeedbackSet MonolithicFeedback::fetch(const QueryModel& query, std::size_t k, double mu,
                                      FeedbackCosts& costs) const {
    PostingsCounter counter;
    auto ranking = index_->retrieve_topk(query, k, mu, counter);
    costs.selection = 0;
    costs.per_vertical = {{name_, counter.accessed}};
    costs.verticals_searched = 1;
    FeedbackSet fb;
    fb.reserve(ranking.size());
    for (const auto& sd : ranking) {
        fb.push_back({index_, sd.doc, index_->doc(sd.doc).ordinal, sd.score});
    }
    return fb;
}

ExpansionRun expand_and_rerun(const QueryModel& query, const FeedbackSource& feedback_source,
                              const InvertedIndex& target, const ExpansionParams& params,
                              std::size_t depth) {
    params.validate();
    ExpansionRun run{.ranking = {}, .final_query = query, .feedback = {}, .feedback_costs = {}};
    run.feedback = feedback_source.fetch(query, params.feedback_docs, params.mu, run.feedback_costs);

    if (run.feedback.empty()) {
        log::warn("empty feedback set; falling back to the original query");
        run.fell_back = true;
    } else {
        try {
            QueryModel expansion = estimate_rm1(run.feedback, params.num_terms, stopwords());
            run.final_query = interpolate(query, expansion, params.lambda);
        } catch (const std::runtime_error& e) {
            log::warn(std::string("expansion failed (") + e.what() +
                      "); falling back to the original query");
            run.fell_back = true;
        }
    }

    PostingsCounter final_counter;
    run.ranking = target.retrieve_topk(run.final_query, depth, params.mu, final_counter);
    run.final_cost = final_counter.accessed;
    return run;
}

std::vector<ScoredDoc> clrm_rerank(const std::vector<ScoredDoc>& initial,
                                   const QueryModel& final_query, const InvertedIndex& target,
                                   double mu) {
    std::vector<ScoredDoc> rescored(initial.size());
    const auto n = static_cast<std::int64_t>(initial.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto ref = initial[static_cast<std::size_t>(i)].doc;
        rescored[static_cast<std::size_t>(i)] = {ref, target.score_ql(final_query, ref, mu)};
    }
    std::sort(rescored.begin(), rescored.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc < b.doc;
    });
    return rescored;
}

}  // namespace fedprf
