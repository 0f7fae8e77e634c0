// fedprf: federated pseudo-relevance-feedback search over vertical shards.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "fedprf/harness.hpp"
#include "fedprf/log.hpp"

namespace fs = std::filesystem;
using namespace fedprf;

namespace {

struct CommonParams {
    double mu = 2500.0;
    std::size_t feedback_docs = 50;
    std::size_t num_terms = 20;
    double lambda = 0.5;
    std::size_t ext_feedback_docs = 10;
    std::size_t crcs_gamma = 50;
    double ranks_base = 50.0;
    double ranks_threshold = 1e-6;
    double taily_n = 400.0;
    double taily_v = 50.0;
    std::size_t depth = 1000;
    double csi_rate = 0.1;
    std::uint64_t csi_seed = 1;
    std::int64_t age_seconds = -1;   // <0: no window
    std::int64_t span_seconds = -1;  // <0: unbounded

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--mu", mu, "Dirichlet smoothing mass");
        cmd->add_option("--feedback-docs", feedback_docs, "feedback depth k");
        cmd->add_option("--num-terms", num_terms, "expansion model size");
        cmd->add_option("--lambda", lambda, "interpolation weight");
        cmd->add_option("--ext-feedback-docs", ext_feedback_docs,
                        "feedback depth on the external index");
        cmd->add_option("--crcs-gamma", crcs_gamma, "CSI depth for CRCS/Rank-S");
        cmd->add_option("--ranks-base", ranks_base, "Rank-S decay base");
        cmd->add_option("--ranks-threshold", ranks_threshold, "Rank-S vote threshold");
        cmd->add_option("--taily-n", taily_n, "Taily document budget");
        cmd->add_option("--taily-v", taily_v, "Taily per-vertical cutoff");
        cmd->add_option("--depth", depth, "retrieval/evaluation depth");
        cmd->add_option("--csi-rate", csi_rate, "CSI sampling rate");
        cmd->add_option("--csi-seed", csi_seed, "CSI sampling seed");
        cmd->add_option("--age-seconds", age_seconds, "expansion corpus age (window)");
        cmd->add_option("--span-seconds", span_seconds, "expansion corpus time span (window)");
    }

    ExperimentParams experiment() const {
        ExperimentParams params;
        params.expansion = {feedback_docs, num_terms, lambda, mu};
        params.external_feedback_docs = ext_feedback_docs;
        params.crcs = {crcs_gamma, 1, mu};
        params.ranks = {ranks_base, ranks_threshold, crcs_gamma, mu};
        params.taily = {taily_n, taily_v};
        params.depth = depth;
        if (age_seconds >= 0) {
            TimeWindow window;
            window.age_seconds = age_seconds;
            if (span_seconds >= 0) window.span_seconds = span_seconds;
            params.window = window;
        }
        return params;
    }

    nlohmann::json to_json() const {
        return {{"mu", mu},
                {"feedback_docs", feedback_docs},
                {"num_terms", num_terms},
                {"lambda", lambda},
                {"ext_feedback_docs", ext_feedback_docs},
                {"crcs_gamma", crcs_gamma},
                {"ranks_base", ranks_base},
                {"ranks_threshold", ranks_threshold},
                {"taily_n", taily_n},
                {"taily_v", taily_v},
                {"depth", depth},
                {"csi_rate", csi_rate},
                {"csi_seed", csi_seed}};
    }
};

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(text);
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int cmd_index(const std::string& corpus_path, const std::string& verticals_path,
              const std::string& out_path) {
    if (verticals_path.empty()) {
        JsonlReader reader(corpus_path);
        auto index = InvertedIndex::build(reader);
        if (!fs::path(out_path).parent_path().empty()) {
            fs::create_directories(fs::path(out_path).parent_path());
        }
        index.save(out_path);
        std::cout << "indexed " << index.doc_count() << " documents (" << index.total_tokens()
                  << " tokens) -> " << out_path << "\n";
        return 0;
    }
    auto cfg = VerticalConfig::from_json_file(verticals_path);
    auto corpus = load_jsonl(corpus_path);
    auto vs = VerticalSet::build(corpus, cfg);
    vs.save(out_path);
    std::cout << "indexed " << corpus.size() << " documents into " << vs.size()
              << " verticals -> " << out_path << "\n";
    for (const auto& v : vs.verticals()) {
        std::cout << "  " << v.name << ": " << v.index.doc_count() << " docs\n";
    }
    return 0;
}

int cmd_csi(const std::string& expansion_dir, double rate, std::uint64_t seed) {
    auto vs = VerticalSet::load(expansion_dir);
    auto csi = build_csi(vs, rate, seed);
    const auto idx_path = (fs::path(expansion_dir) / "csi.idx").string();
    const auto meta_path = (fs::path(expansion_dir) / "csi.json").string();
    csi.save(idx_path, meta_path);
    std::cout << "csi: " << csi.index.doc_count() << " of " << vs.global_stats()->doc_count
              << " documents (rate " << rate << ", seed " << seed << ") -> " << idx_path << "\n";
    return 0;
}

int cmd_taily_stats(const std::string& expansion_dir, double mu) {
    auto vs = VerticalSet::load(expansion_dir);
    auto stats = taily_build(vs, mu);
    const auto path = (fs::path(expansion_dir) / "taily.bin").string();
    stats.save(path);
    std::size_t terms = 0;
    for (const auto& v : stats.verticals()) terms += v.terms.size();
    std::cout << "taily stats: " << stats.verticals().size() << " verticals, " << terms
              << " (vertical, term) entries -> " << path << "\n";
    return 0;
}

int cmd_search(const std::string& index_path, const std::string& query, std::size_t k,
               double mu) {
    auto index = InvertedIndex::load(index_path);
    auto tokens = tokenize(query);
    if (tokens.empty()) throw std::runtime_error("query has no indexable terms");
    PostingsCounter counter;
    auto top = index.retrieve_topk(QueryModel::uniform(tokens), k, mu, counter);
    for (std::size_t i = 0; i < top.size(); ++i) {
        std::cout << index.doc(top[i].doc).id << ' ' << i + 1 << ' ' << top[i].score << '\n';
    }
    std::cout << "# " << top.size() << " results, " << counter.accessed
              << " postings accessed\n";
    return 0;
}

struct ExpansionResources {
    VerticalSet verticals;
    std::optional<CSI> csi;
    std::optional<TailyStats> taily;
};

ExpansionResources load_expansion(const std::string& dir, bool need_csi, bool need_taily) {
    ExpansionResources res{VerticalSet::load(dir), std::nullopt, std::nullopt};
    const auto csi_idx = fs::path(dir) / "csi.idx";
    if (need_csi) {
        if (!fs::exists(csi_idx)) {
            throw std::runtime_error("missing CSI in " + dir + " (run: fedprf csi)");
        }
        res.csi = CSI::load(csi_idx.string(), (fs::path(dir) / "csi.json").string());
    }
    const auto taily_path = fs::path(dir) / "taily.bin";
    if (need_taily) {
        if (!fs::exists(taily_path)) {
            throw std::runtime_error("missing taily stats in " + dir +
                                     " (run: fedprf taily-stats)");
        }
        res.taily = TailyStats::load(taily_path.string());
    }
    return res;
}

int cmd_expand(const std::string& target_path, const std::string& expansion_dir,
               const std::string& selector, const std::string& query, std::int64_t timestamp,
               const CommonParams& common) {
    const bool is_taily = selector == "taily";
    auto res = load_expansion(expansion_dir, !is_taily, is_taily);
    auto target = InvertedIndex::load(target_path);

    Topic topic{"adhoc", query, timestamp};
    Qrels no_qrels;
    ExperimentInputs inputs;
    inputs.target = &target;
    inputs.verticals = &res.verticals;
    if (res.csi) inputs.csi = &*res.csi;
    if (res.taily) inputs.taily = &*res.taily;
    std::vector<Topic> topics{topic};
    inputs.topics = topics;

    const std::string method = "vprf-" + selector;
    if (!method_known(method)) throw std::runtime_error("unknown selector: " + selector);
    auto params = common.experiment();

    // Reproduce the pipeline verbosely for inspection.
    auto tokens = tokenize(query);
    if (tokens.empty()) throw std::runtime_error("query has no indexable terms");
    auto outcome = run_method(inputs, method, params);
    const auto& cost = outcome.topics[0].cost;

    const VerticalSet* vs = &res.verticals;
    std::unique_ptr<VerticalSet> windowed;
    if (params.window) {
        windowed = std::make_unique<VerticalSet>(
            apply_time_window(res.verticals, timestamp, *params.window));
        vs = windowed.get();
    }
    std::cout << "selected verticals:";
    for (const auto& [name, _] : cost.per_vertical) std::cout << ' ' << name;
    std::cout << "\n";

    // Recover theta_F by rerunning the expansion against the same resources.
    QueryModel original = QueryModel::uniform(tokens);
    SelectionResult sel;
    for (const auto& [name, _] : cost.per_vertical) sel.verticals.push_back(name);
    sel.selection_cost = cost.selection;
    std::vector<VerticalRetrievalCost> shard_costs;
    auto fb = vertical_feedback(original, *vs, sel, params.expansion.feedback_docs,
                                params.expansion.mu, shard_costs);
    QueryModel final_query = original;
    if (!fb.empty()) {
        try {
            auto expansion = estimate_rm1(fb, params.expansion.num_terms, stopwords());
            final_query = interpolate(original, expansion, params.expansion.lambda);
        } catch (const std::runtime_error&) {
        }
    }
    std::cout << "feedback documents: " << fb.size() << "\n";
    std::cout << "theta_F: " << final_query.to_json() << "\n";

    nlohmann::json cost_json{{"C_SEL", cost.selection},
                             {"C_VR", cost.vertical_retrieval},
                             {"C_VF", cost.vertical_feedback},
                             {"C_QE", cost.expansion},
                             {"C_R_final", cost.final_retrieval},
                             {"C_Lat", cost.latency}};
    nlohmann::json shards = nlohmann::json::object();
    for (const auto& [name, postings] : cost.per_vertical) shards[name] = postings;
    cost_json["per_vertical"] = shards;
    std::cout << "cost: " << cost_json.dump() << "\n";
    return 0;
}

int cmd_evaluate(const std::string& target_path, const std::string& expansion_dir,
                 const std::string& external_path, const std::string& qrels_path,
                 const std::string& topics_path, const std::string& methods_csv,
                 const std::string& out_dir, const std::string& sweep_ages,
                 const std::string& sweep_spans, const CommonParams& common) {
    const auto methods = split_csv(methods_csv);
    if (methods.empty()) throw std::runtime_error("no methods requested");
    for (const auto& m : methods) {
        if (!method_known(m)) throw std::runtime_error("unknown method: " + m);
    }

    bool need_verticals = false, need_csi = false, need_taily = false, need_external = false;
    for (const auto& m : methods) {
        need_verticals |= m == "prf-news" || m.starts_with("vprf-");
        need_csi |= m.starts_with("vprf-crcs") || m == "vprf-ranks";
        need_taily |= m == "vprf-taily";
        need_external |= m == "prf-ext";
    }
    if (need_verticals && expansion_dir.empty()) {
        throw std::runtime_error("missing input: --expansion (required by the requested methods)");
    }
    if (need_external && external_path.empty()) {
        throw std::runtime_error("missing input: --external (required by prf-ext)");
    }

    auto target = InvertedIndex::load(target_path);
    std::optional<ExpansionResources> res;
    if (!expansion_dir.empty()) res = load_expansion(expansion_dir, need_csi, need_taily);
    std::optional<InvertedIndex> external;
    if (!external_path.empty()) external = InvertedIndex::load(external_path);
    auto qrels = Qrels::parse_file(qrels_path);
    auto topics = load_topics(topics_path);

    ExperimentInputs inputs;
    inputs.target = &target;
    if (res) {
        inputs.verticals = &res->verticals;
        if (res->csi) inputs.csi = &*res->csi;
        if (res->taily) inputs.taily = &*res->taily;
    }
    if (external) inputs.external = &*external;
    inputs.qrels = &qrels;
    inputs.topics = topics;

    auto params = common.experiment();
    fs::create_directories(fs::path(out_dir) / "runs");
    fs::create_directories(fs::path(out_dir) / "reports");

    auto outcomes = run_experiment(inputs, methods, params);
    std::vector<CostReport> cost_rows;
    std::vector<CostSummary> cost_summaries;
    for (const auto& m : outcomes) {
        std::vector<RunRow> rows;
        std::vector<CostReport> method_costs;
        for (const auto& t : m.topics) {
            rows.insert(rows.end(), t.run.begin(), t.run.end());
            method_costs.push_back(t.cost);
            cost_rows.push_back(t.cost);
        }
        write_run_file((fs::path(out_dir) / "runs" / (m.method + ".run")).string(), rows);
        cost_summaries.push_back(aggregate(method_costs));
    }
    write_metrics_csv((fs::path(out_dir) / "reports" / "metrics.csv").string(), outcomes);
    write_costs_csv((fs::path(out_dir) / "reports" / "costs.csv").string(), cost_rows,
                    cost_summaries);

    if (!sweep_ages.empty() || !sweep_spans.empty()) {
        std::vector<std::int64_t> values;
        for (const auto& v : split_csv(sweep_ages.empty() ? sweep_spans : sweep_ages)) {
            values.push_back(std::stoll(v));
        }
        auto rows = sweep_window(inputs, methods, params,
                                 sweep_ages.empty() ? SweepKind::span : SweepKind::age, values);
        write_sweep_csv((fs::path(out_dir) / "reports" / "sweep.csv").string(), rows);
    }

    const std::string baseline = "prf-news";
    std::cout << format_summary(outcomes, baseline);
    std::cout << "reports written to " << (fs::path(out_dir) / "reports").string() << "\n";
    return 0;
}

int cmd_selftest(const CommonParams& common) {
    nlohmann::json effective = common.to_json();
    std::cout << effective.dump(2) << "\n";
    const bool ok = common.mu == 2500.0 && common.feedback_docs == 50 &&
                    common.num_terms == 20 && common.lambda == 0.5 &&
                    common.ext_feedback_docs == 10 && common.taily_n == 400.0 &&
                    common.taily_v == 50.0 && common.ranks_threshold == 1e-6 &&
                    common.ranks_base == 50.0 && common.crcs_gamma == 50 &&
                    common.depth == 1000;
    std::cout << (ok ? "defaults match the reference configuration\n"
                     : "defaults differ from the reference configuration\n");
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated PRF search engine over vertical news shards"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read defaults from an INI file (flags win)");

    std::string corpus_path, verticals_path, out_path;
    auto* index = app.add_subcommand("index", "build a target index or a vertical set");
    index->add_option("--corpus", corpus_path, "JSON-lines corpus")->required();
    index->add_option("--verticals", verticals_path, "vertical config JSON (omit for a single index)");
    index->add_option("--out", out_path, "output file (single index) or directory (vertical set)")
        ->required();

    CommonParams common;
    std::string expansion_dir;
    auto* csi = app.add_subcommand("csi", "sample a centralized sample index from a vertical set");
    csi->add_option("--expansion", expansion_dir, "vertical set directory")->required();
    csi->add_option("--csi-rate", common.csi_rate, "sampling rate in (0,1]");
    csi->add_option("--csi-seed", common.csi_seed, "sampling seed");

    auto* taily = app.add_subcommand("taily-stats", "build vocabulary statistics for Taily");
    taily->add_option("--expansion", expansion_dir, "vertical set directory")->required();
    taily->add_option("--mu", common.mu, "Dirichlet smoothing mass");

    std::string index_path, query_text;
    std::size_t search_k = 10;
    auto* search = app.add_subcommand("search", "query-likelihood retrieval from one index");
    search->add_option("--index", index_path, "index file")->required();
    search->add_option("--query", query_text, "query text")->required();
    search->add_option("--k", search_k, "results to print");
    search->add_option("--mu", common.mu, "Dirichlet smoothing mass");

    std::string target_path, selector = "taily";
    std::int64_t timestamp = 0;
    auto* expand = app.add_subcommand("expand", "debug one query through selection and expansion");
    expand->add_option("--target", target_path, "target index file")->required();
    expand->add_option("--expansion", expansion_dir, "vertical set directory")->required();
    expand->add_option("--selector", selector, "crcs1|crcs2|crcs3|ranks|taily");
    expand->add_option("--query", query_text, "query text")->required();
    expand->add_option("--timestamp", timestamp, "query timestamp (epoch seconds)");
    common.add_flags(expand);

    std::string external_path, qrels_path, topics_path, methods_csv = "no-prf";
    std::string sweep_ages, sweep_spans, eval_out = "out";
    auto* evaluate = app.add_subcommand("evaluate", "batch evaluation over topics");
    evaluate->add_option("--target", target_path, "target index file")->required();
    evaluate->add_option("--expansion", expansion_dir, "vertical set directory");
    evaluate->add_option("--external", external_path, "external expansion index file");
    evaluate->add_option("--qrels", qrels_path, "relevance judgments")->required();
    evaluate->add_option("--topics", topics_path, "topics JSON-lines")->required();
    evaluate->add_option("--methods", methods_csv, "comma-separated method list");
    evaluate->add_option("--out", eval_out, "output directory (runs/, reports/)");
    evaluate->add_option("--sweep-ages", sweep_ages, "comma-separated ages (seconds)");
    evaluate->add_option("--sweep-spans", sweep_spans, "comma-separated spans (seconds)");
    common.add_flags(evaluate);

    auto* selftest = app.add_subcommand("selftest", "print the effective default configuration");
    common.add_flags(selftest);

    CLI11_PARSE(app, argc, argv);

    try {
        if (index->parsed()) return cmd_index(corpus_path, verticals_path, out_path);
        if (csi->parsed()) return cmd_csi(expansion_dir, common.csi_rate, common.csi_seed);
        if (taily->parsed()) return cmd_taily_stats(expansion_dir, common.mu);
        if (search->parsed()) return cmd_search(index_path, query_text, search_k, common.mu);
        if (expand->parsed()) {
            return cmd_expand(target_path, expansion_dir, selector, query_text, timestamp, common);
        }
        if (evaluate->parsed()) {
            return cmd_evaluate(target_path, expansion_dir, external_path, qrels_path,
                                topics_path, methods_csv, eval_out, sweep_ages, sweep_spans,
                                common);
        }
        if (selftest->parsed()) return cmd_selftest(common);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
