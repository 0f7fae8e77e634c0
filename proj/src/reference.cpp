#include "fedprf/reference.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fedprf/corpus.hpp"

namespace fedprf::reference {

std::vector<ScoredDoc> retrieve_topk_serial(const QueryModel& query, const InvertedIndex& index,
                                            std::size_t k, double mu, PostingsCounter& counter) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (query.size() == 0) throw std::invalid_argument("empty query model");
    counter.add(index.postings_cost(query));

    std::vector<ScoredDoc> scored;
    for (std::uint32_t ref = 0; ref < index.doc_count(); ++ref) {
        const DocEntry& entry = index.doc(ref);
        bool candidate = false;
        double score = 0.0;
        for (const auto& [term, weight] : query.terms()) {
            const auto id = index.term_id(term);
            double tf = 0.0;
            if (id >= 0) {
                for (const auto& [term_id, freq] : entry.vector) {
                    if (term_id == static_cast<std::uint32_t>(id)) {
                        tf = freq;
                        candidate = true;
                        break;
                    }
                }
            }
            const double p_bg = index.background_prob(term);
            if (p_bg <= 0.0) continue;
            score += weight * std::log((tf + mu * p_bg) / (entry.length + mu));
        }
        if (candidate) scored.push_back({ref, score});
    }
    std::stable_sort(scored.begin(), scored.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc < b.doc;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

PipelineResult prf_pipeline_serial(const QueryModel& query, const InvertedIndex& feedback_index,
                                   const InvertedIndex& target, const ExpansionParams& params,
                                   std::size_t depth) {
    PostingsCounter counter;
    auto feedback = retrieve_topk_serial(query, feedback_index, params.feedback_docs, params.mu,
                                         counter);

    QueryModel final_query = query;
    if (!feedback.empty()) {
        // p(q|d) by direct softmax over the feedback scores.
        double max_score = feedback.front().score;
        for (const auto& sd : feedback) max_score = std::max(max_score, sd.score);
        double norm = 0.0;
        std::vector<double> pq(feedback.size());
        for (std::size_t i = 0; i < feedback.size(); ++i) {
            pq[i] = std::exp(feedback[i].score - max_score);
            norm += pq[i];
        }

        // w(t) = sum_d p_mle(t|d) p(q|d), written as the double sum.
        std::map<std::string, double> weights;
        for (std::size_t i = 0; i < feedback.size(); ++i) {
            const DocEntry& entry = feedback_index.doc(feedback[i].doc);
            if (entry.length == 0) continue;
            for (const auto& [term_id, tf] : entry.vector) {
                weights[feedback_index.term(term_id)] +=
                    (static_cast<double>(tf) / entry.length) * (pq[i] / norm);
            }
        }
        std::vector<std::pair<std::string, double>> kept;
        for (const auto& [term, w] : weights) {
            if (term.size() >= 2 && !stopwords().contains(term)) kept.emplace_back(term, w);
        }
        std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        if (kept.size() > params.num_terms) kept.resize(params.num_terms);

        if (!kept.empty()) {
            double total = 0.0;
            for (const auto& [_, w] : kept) total += w;
            std::map<std::string, double> combined;
            for (const auto& [term, w] : query.terms()) combined[term] += (1.0 - params.lambda) * w;
            for (const auto& [term, w] : kept) combined[term] += params.lambda * (w / total);
            std::vector<std::pair<std::string, double>> final_terms;
            for (const auto& [term, w] : combined) {
                if (w > 0.0) final_terms.emplace_back(term, w);
            }
            final_query = QueryModel::from_weights(std::move(final_terms));
        }
    }

    PipelineResult result{.ranking = {}, .final_query = final_query};
    PostingsCounter final_counter;
    result.ranking = retrieve_topk_serial(final_query, target, depth, params.mu, final_counter);
    return result;
}

}  // namespace fedprf::reference
