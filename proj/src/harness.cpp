#include "fedprf/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fedprf/log.hpp"

namespace fedprf {

namespace {

/// Feedback-side structures for one query timestamp, windowed when a window
/// is configured. Null members mean "use the unwindowed original".
struct FeedbackBundle {
    std::unique_ptr<InvertedIndex> target_fb;
    std::unique_ptr<InvertedIndex> news_union;
    std::unique_ptr<InvertedIndex> external;
    std::unique_ptr<VerticalSet> verticals;
    std::unique_ptr<CSI> csi;
    std::unique_ptr<TailyStats> taily;
};

struct MethodNeeds {
    bool target_fb = false;
    bool news_union = false;
    bool external = false;
    bool verticals = false;
    bool csi = false;
    bool taily = false;
};

MethodNeeds needs_of(const std::string& method) {
    MethodNeeds needs;
    if (method == "prf") needs.target_fb = true;
    if (method == "prf-news") needs.news_union = true;
    if (method == "prf-ext") needs.external = true;
    if (method.starts_with("vprf-")) needs.verticals = true;
    if (method.starts_with("vprf-crcs") || method == "vprf-ranks") needs.csi = true;
    if (method == "vprf-taily") needs.taily = true;
    return needs;
}

void check_inputs(const ExperimentInputs& inputs, const std::string& method) {
    if (inputs.target == nullptr) throw std::invalid_argument("missing input: target index");
    const MethodNeeds needs = needs_of(method);
    if ((needs.news_union || needs.verticals) && inputs.verticals == nullptr) {
        throw std::invalid_argument("method " + method + " requires the expansion vertical set");
    }
    if (needs.external && inputs.external == nullptr) {
        throw std::invalid_argument("method " + method + " requires an external index");
    }
    if (needs.csi && inputs.csi == nullptr) {
        throw std::invalid_argument("method " + method + " requires a CSI");
    }
    if (needs.taily && inputs.taily == nullptr) {
        throw std::invalid_argument("method " + method + " requires taily statistics");
    }
}

}  // namespace

const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> methods = {
        "no-prf",     "prf",        "clrm",       "prf-news",  "prf-ext",
        "vprf-crcs1", "vprf-crcs2", "vprf-crcs3", "vprf-ranks", "vprf-taily",
    };
    return methods;
}

bool method_known(const std::string& name) {
    const auto& methods = known_methods();
    return std::find(methods.begin(), methods.end(), name) != methods.end();
}

namespace {

/// Everything one topic evaluation needs, resolved against either the
/// originals or a windowed bundle.
struct ResolvedFeedback {
    const InvertedIndex* target_fb = nullptr;
    const InvertedIndex* news_union = nullptr;
    const InvertedIndex* external = nullptr;
    const VerticalSet* verticals = nullptr;
    const CSI* csi = nullptr;
    const TailyStats* taily = nullptr;
};

SelectionResult select_for(const std::string& method, const QueryModel& query,
                           const ResolvedFeedback& fb, const ExperimentParams& params) {
    if (method == "vprf-taily") {
        return taily_select(query, *fb.taily, params.taily);
    }
    PostingsCounter counter;
    if (method == "vprf-ranks") {
        return ranks_select(query, *fb.csi, *fb.verticals, params.ranks, counter);
    }
    CrcsParams crcs = params.crcs;
    crcs.m = static_cast<std::size_t>(method.back() - '0');
    return crcs_select(query, *fb.csi, *fb.verticals, crcs, counter);
}

TopicOutcome evaluate_topic(const ExperimentInputs& inputs, const std::string& method,
                            const ExperimentParams& params, const Topic& topic,
                            const ResolvedFeedback& fb) {
    TopicOutcome outcome;
    outcome.topic = topic.id;

    const auto tokens = tokenize(topic.query);
    if (tokens.empty()) {
        log::warn("topic " + topic.id + " has an empty query after tokenization; skipping");
        outcome.cost = assemble_prf_cost(0, 0);
        outcome.cost.method = method;
        outcome.cost.topic = topic.id;
        return outcome;
    }
    const QueryModel original = QueryModel::uniform(tokens);
    const InvertedIndex& target = *inputs.target;
    const double mu = params.expansion.mu;

    std::vector<ScoredDoc> ranking;
    if (method == "no-prf") {
        PostingsCounter counter;
        ranking = target.retrieve_topk(original, params.depth, mu, counter);
        outcome.cost = assemble_prf_cost(0, counter.accessed);
    } else if (method == "clrm") {
        PostingsCounter counter;
        auto initial = target.retrieve_topk(original, params.depth, mu, counter);
        QueryModel final_query = original;
        if (!initial.empty()) {
            FeedbackSet fbset;
            const std::size_t k = std::min(params.expansion.feedback_docs, initial.size());
            for (std::size_t i = 0; i < k; ++i) {
                fbset.push_back({&target, initial[i].doc, target.doc(initial[i].doc).ordinal,
                                 initial[i].score});
            }
            try {
                QueryModel expansion =
                    estimate_rm1(fbset, params.expansion.num_terms, stopwords());
                final_query = interpolate(original, expansion, params.expansion.lambda);
            } catch (const std::runtime_error& e) {
                log::warn("topic " + topic.id + ": " + e.what() + "; re-ranking with the original query");
            }
        }
        ranking = clrm_rerank(initial, final_query, target, mu);
        outcome.cost = assemble_prf_cost(counter.accessed, 0);
        outcome.verticals_searched = 1;
    } else if (method == "prf" || method == "prf-news" || method == "prf-ext") {
        const InvertedIndex* fb_index = method == "prf"       ? fb.target_fb
                                        : method == "prf-news" ? fb.news_union
                                                               : fb.external;
        const std::string shard = method == "prf" ? "target" : method == "prf-news" ? "news" : "external";
        ExpansionParams expansion = params.expansion;
        if (method == "prf-ext") expansion.feedback_docs = params.external_feedback_docs;
        MonolithicFeedback source(*fb_index, shard);
        ExpansionRun run = expand_and_rerun(original, source, target, expansion, params.depth);
        ranking = std::move(run.ranking);
        outcome.cost = assemble_prf_cost(
            run.feedback_costs.per_vertical.empty() ? 0 : run.feedback_costs.per_vertical[0].second,
            run.final_cost);
        outcome.verticals_searched = 1;
    } else {
        BrokeredFeedback source(*fb.verticals, [&](const QueryModel& q) {
            return select_for(method, q, fb, params);
        });
        ExpansionRun run = expand_and_rerun(original, source, target, params.expansion, params.depth);
        ranking = std::move(run.ranking);
        outcome.cost = assemble_prvf_cost(run.feedback_costs.selection,
                                          run.feedback_costs.per_vertical, run.final_cost);
        outcome.verticals_searched = run.feedback_costs.verticals_searched;
    }
    outcome.cost.method = method;
    outcome.cost.topic = topic.id;

    std::vector<std::string> doc_ids;
    doc_ids.reserve(ranking.size());
    outcome.run.reserve(ranking.size());
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        const std::string& id = target.doc(ranking[i].doc).id;
        doc_ids.push_back(id);
        outcome.run.push_back({topic.id, id, static_cast<int>(i + 1), ranking[i].score, method});
    }

    if (inputs.qrels != nullptr && inputs.qrels->has_topic(topic.id)) {
        if (inputs.qrels->relevant_count(topic.id) > 0) {
            outcome.ap = average_precision(doc_ids, *inputs.qrels, topic.id, params.depth);
            outcome.ndcg30 = ndcg_at_k(doc_ids, *inputs.qrels, topic.id, 30);
            outcome.recall = recall_at_depth(doc_ids, *inputs.qrels, topic.id, params.depth);
            outcome.scored = true;
        }
    }
    return outcome;
}

}  // namespace

MethodOutcome run_method(const ExperimentInputs& inputs, const std::string& method,
                         const ExperimentParams& params) {
    if (!method_known(method)) throw std::invalid_argument("unknown method: " + method);
    check_inputs(inputs, method);
    params.expansion.validate();
    if (params.window) params.window->validate();

    const MethodNeeds needs = needs_of(method);
    const double mu = params.expansion.mu;

    // The unwindowed union is shared by every timestamp.
    std::unique_ptr<InvertedIndex> base_union;
    if (needs.news_union) {
        base_union = std::make_unique<InvertedIndex>(inputs.verticals->build_union());
    }

    // Resolve feedback structures per distinct query timestamp. Without a
    // window every timestamp maps to the originals.
    std::map<std::int64_t, FeedbackBundle> bundles;
    auto resolve = [&](std::int64_t ts) {
        ResolvedFeedback fb;
        fb.target_fb = inputs.target;
        fb.news_union = base_union.get();
        fb.external = inputs.external;
        fb.verticals = inputs.verticals;
        fb.csi = inputs.csi;
        fb.taily = inputs.taily;
        if (!params.window) return fb;
        auto& bundle = bundles.at(ts);
        if (bundle.target_fb) fb.target_fb = bundle.target_fb.get();
        if (bundle.news_union) fb.news_union = bundle.news_union.get();
        if (bundle.external) fb.external = bundle.external.get();
        if (bundle.verticals) fb.verticals = bundle.verticals.get();
        if (bundle.csi) fb.csi = bundle.csi.get();
        if (bundle.taily) fb.taily = bundle.taily.get();
        return fb;
    };

    if (params.window) {
        const TimeWindow& window = *params.window;
        for (const auto& topic : inputs.topics) {
            if (bundles.contains(topic.timestamp)) continue;
            FeedbackBundle bundle;
            if (needs.target_fb) {
                bundle.target_fb = std::make_unique<InvertedIndex>(
                    apply_time_window(*inputs.target, topic.timestamp, window));
            }
            if (needs.news_union) {
                bundle.news_union = std::make_unique<InvertedIndex>(
                    apply_time_window(*base_union, topic.timestamp, window));
            }
            if (needs.external) {
                bundle.external = std::make_unique<InvertedIndex>(
                    apply_time_window(*inputs.external, topic.timestamp, window));
            }
            if (needs.verticals) {
                bundle.verticals = std::make_unique<VerticalSet>(
                    apply_time_window(*inputs.verticals, topic.timestamp, window));
            }
            if (needs.csi) {
                bundle.csi = std::make_unique<CSI>(
                    apply_time_window(*inputs.csi, topic.timestamp, window));
            }
            if (needs.taily) {
                bundle.taily = std::make_unique<TailyStats>(taily_build(*bundle.verticals, mu));
            }
            bundles.emplace(topic.timestamp, std::move(bundle));
        }
    }

    MethodOutcome outcome;
    outcome.method = method;
    outcome.topics.resize(inputs.topics.size());

    const auto start = std::chrono::steady_clock::now();
    const auto n = static_cast<std::int64_t>(inputs.topics.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        const Topic& topic = inputs.topics[static_cast<std::size_t>(i)];
        outcome.topics[static_cast<std::size_t>(i)] =
            evaluate_topic(inputs, method, params, topic, resolve(topic.timestamp));
    }
    outcome.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - start)
                          .count();

    std::vector<CostReport> reports;
    reports.reserve(outcome.topics.size());
    double sum_verticals = 0.0;
    for (const auto& t : outcome.topics) {
        reports.push_back(t.cost);
        sum_verticals += static_cast<double>(t.verticals_searched);
        if (t.scored) {
            outcome.mean_ap += t.ap;
            outcome.mean_ndcg30 += t.ndcg30;
            outcome.mean_recall += t.recall;
            ++outcome.scored_topics;
        } else {
            ++outcome.unscored_topics;
        }
    }
    if (outcome.scored_topics > 0) {
        outcome.mean_ap /= static_cast<double>(outcome.scored_topics);
        outcome.mean_ndcg30 /= static_cast<double>(outcome.scored_topics);
        outcome.mean_recall /= static_cast<double>(outcome.scored_topics);
    }
    if (!reports.empty()) outcome.costs = aggregate(reports);
    if (!outcome.topics.empty()) {
        outcome.mean_verticals = sum_verticals / static_cast<double>(outcome.topics.size());
    }
    return outcome;
}

std::vector<MethodOutcome> run_experiment(const ExperimentInputs& inputs,
                                          std::span<const std::string> methods,
                                          const ExperimentParams& params) {
    std::vector<MethodOutcome> outcomes;
    outcomes.reserve(methods.size());
    for (const auto& method : methods) outcomes.push_back(run_method(inputs, method, params));
    return outcomes;
}

std::vector<SweepRow> sweep_window(const ExperimentInputs& inputs,
                                   std::span<const std::string> methods,
                                   const ExperimentParams& params, SweepKind kind,
                                   std::span<const std::int64_t> values) {
    std::vector<SweepRow> rows;
    for (const auto value : values) {
        ExperimentParams point = params;
        TimeWindow window = params.window.value_or(TimeWindow{});
        if (kind == SweepKind::age) {
            window.age_seconds = value;
        } else {
            window.age_seconds = 0;
            window.span_seconds = value;
        }
        point.window = window;
        for (const auto& method : methods) {
            MethodOutcome outcome = run_method(inputs, method, point);
            rows.push_back({value, method, outcome.mean_ap, outcome.mean_ndcg30});
        }
    }
    return rows;
}

void write_metrics_csv(const std::string& path, std::span<const MethodOutcome> outcomes) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write metrics csv: " + path);
    out << "method,topic,map,ndcg30,recall1000\n";
    out.precision(6);
    out.setf(std::ios::fixed);
    for (const auto& m : outcomes) {
        for (const auto& t : m.topics) {
            if (!t.scored) continue;
            out << m.method << ',' << t.topic << ',' << t.ap << ',' << t.ndcg30 << ',' << t.recall
                << '\n';
        }
        out << m.method << ",mean," << m.mean_ap << ',' << m.mean_ndcg30 << ',' << m.mean_recall
            << '\n';
    }
    if (!out) throw std::runtime_error("short write to metrics csv: " + path);
}

void write_sweep_csv(const std::string& path, std::span<const SweepRow> rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write sweep csv: " + path);
    out << "param,method,map,ndcg30\n";
    out.precision(6);
    out.setf(std::ios::fixed);
    for (const auto& r : rows) {
        out << r.param << ',' << r.method << ',' << r.mean_ap << ',' << r.mean_ndcg30 << '\n';
    }
    if (!out) throw std::runtime_error("short write to sweep csv: " + path);
}

std::string format_summary(std::span<const MethodOutcome> outcomes,
                           const std::string& baseline_method) {
    const MethodOutcome* baseline = nullptr;
    for (const auto& m : outcomes) {
        if (m.method == baseline_method) baseline = &m;
    }
    std::ostringstream out;
    out.setf(std::ios::fixed);
    char line[256];
    std::snprintf(line, sizeof(line), "%-12s %8s %8s %8s %10s %10s %8s %9s\n", "method", "MAP",
                  "NDCG@30", "recall", "C_QE", "C_Lat", "shards", "wall_ms");
    out << line;
    for (const auto& m : outcomes) {
        std::string reduction;
        if (baseline != nullptr && baseline != &m && baseline->costs.expansion > 0.0) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), " (%+.1f%%)",
                          -reduction_percent(baseline->costs.expansion, m.costs.expansion));
            reduction = buf;
        }
        std::snprintf(line, sizeof(line), "%-12s %8.4f %8.4f %8.4f %10.1f %10.1f %8.2f %9.1f%s\n",
                      m.method.c_str(), m.mean_ap, m.mean_ndcg30, m.mean_recall,
                      m.costs.expansion, m.costs.latency, m.mean_verticals, m.wall_ms,
                      reduction.c_str());
        out << line;
    }
    if (!outcomes.empty() && outcomes.front().unscored_topics > 0) {
        out << "(" << outcomes.front().unscored_topics
            << " topics without relevant judgments excluded from means)\n";
    }
    return out.str();
}

}  // namespace fedprf
