#include "fedprf/selection.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include "fedprf/log.hpp"

namespace fedprf {

namespace {

/// Largest verticals by document count, ties by ascending name.
std::vector<std::string> largest_verticals(const VerticalSet& vs, std::size_t m) {
    std::vector<std::pair<std::int64_t, std::string>> sized;
    for (const auto& v : vs.verticals()) {
        sized.emplace_back(-static_cast<std::int64_t>(v.index.doc_count()), v.name);
    }
    std::sort(sized.begin(), sized.end());
    std::vector<std::string> out;
    for (std::size_t i = 0; i < sized.size() && i < m; ++i) out.push_back(sized[i].second);
    return out;
}

}  // namespace

void CrcsParams::validate() const {
    if (gamma < 1) throw std::invalid_argument("crcs gamma must be >= 1");
    if (m < 1) throw std::invalid_argument("crcs m must be >= 1");
}

void RankSParams::validate() const {
    if (base <= 1.0) throw std::invalid_argument("ranks base must be > 1");
    if (min_ranks <= 0.0) throw std::invalid_argument("ranks threshold must be > 0");
    if (gamma < 1) throw std::invalid_argument("ranks gamma must be >= 1");
}

void TailyParams::validate() const {
    if (n < 1.0) throw std::invalid_argument("taily n must be >= 1");
    if (v < 1.0) throw std::invalid_argument("taily v must be >= 1");
}

SelectionResult crcs_select(const QueryModel& query, const CSI& csi, const VerticalSet& vs,
                            const CrcsParams& params, PostingsCounter& counter) {
    params.validate();
    if (csi.index.doc_count() == 0) throw std::invalid_argument("CSI is empty");

    const std::int64_t before = counter.accessed;
    auto top = csi.index.retrieve_topk(query, params.gamma, params.mu, counter);
    SelectionResult result;
    result.selection_cost = counter.accessed - before;

    const std::size_t m = std::min(params.m, vs.size());
    if (top.empty()) {
        log::warn("CSI returned nothing for the query; selecting the largest verticals");
        result.verticals = largest_verticals(vs, m);
        return result;
    }

    // CSI sample size per vertical.
    std::unordered_map<std::string, std::int64_t> sample_size;
    for (const auto& name : csi.vertical_of_doc) ++sample_size[name];

    std::unordered_map<std::string, double> votes;
    for (std::size_t rank = 0; rank < top.size(); ++rank) {
        votes[csi.vertical_of_doc[top[rank].doc]] += static_cast<double>(params.gamma - rank);
    }

    std::vector<std::pair<double, std::string>> scored;
    for (const auto& v : vs.verticals()) {
        double score = 0.0;
        auto vote_it = votes.find(v.name);
        auto size_it = sample_size.find(v.name);
        if (vote_it != votes.end() && size_it != sample_size.end() && size_it->second > 0) {
            score = static_cast<double>(v.index.doc_count()) / static_cast<double>(size_it->second) *
                    vote_it->second;
        }
        scored.emplace_back(score, v.name);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (std::size_t i = 0; i < m; ++i) result.verticals.push_back(scored[i].second);
    return result;
}

SelectionResult ranks_select(const QueryModel& query, const CSI& csi, const VerticalSet& vs,
                             const RankSParams& params, PostingsCounter& counter) {
    params.validate();
    if (csi.index.doc_count() == 0) throw std::invalid_argument("CSI is empty");

    const std::int64_t before = counter.accessed;
    auto top = csi.index.retrieve_topk(query, params.gamma, params.mu, counter);
    SelectionResult result;
    result.selection_cost = counter.accessed - before;

    if (top.empty()) {
        log::warn("CSI returned nothing for the query; selecting the largest vertical");
        result.verticals = largest_verticals(vs, 1);
        return result;
    }

    // Sanitize log-scores into positive weights (softmax over the top gamma).
    double max_score = top.front().score;
    for (const auto& sd : top) max_score = std::max(max_score, sd.score);
    std::vector<double> weight(top.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < top.size(); ++i) {
        weight[i] = std::exp(top[i].score - max_score);
        norm += weight[i];
    }

    std::unordered_map<std::string, double> votes;
    for (std::size_t rank = 0; rank < top.size(); ++rank) {
        votes[csi.vertical_of_doc[top[rank].doc]] +=
            weight[rank] / norm * std::pow(params.base, -static_cast<double>(rank));
    }

    std::vector<std::pair<double, std::string>> passing;
    std::pair<double, std::string> best{-1.0, ""};
    for (const auto& [name, vote] : votes) {
        if (vote > best.first || (vote == best.first && name < best.second)) best = {vote, name};
        if (vote > params.min_ranks) passing.emplace_back(vote, name);
    }
    if (passing.empty()) {
        result.verticals.push_back(best.second);
        return result;
    }
    std::sort(passing.begin(), passing.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (const auto& [_, name] : passing) result.verticals.push_back(name);
    return result;
}

TailyStats taily_build(const VerticalSet& vs, double mu) {
    if (mu <= 0.0) throw std::invalid_argument("mu must be positive");
    const auto& global = vs.global_stats();
    const double max_len = global->max_doc_len;

    TailyStats stats;
    stats.mu_ = mu;
    for (const auto& v : vs.verticals()) {
        TailyStats::VerticalStats vstats;
        vstats.name = v.name;
        vstats.doc_count = v.index.doc_count();
        for (const auto& term : v.index.terms()) {
            const auto* plist = v.index.postings(term);
            if (plist == nullptr || plist->empty()) continue;
            const double p_bg = global->background_prob(term);
            if (p_bg <= 0.0) continue;
            const double floor_log = std::log(mu * p_bg / (max_len + mu));

            // Two-pass mean/variance of x(t,d) over the docs containing t.
            double sum = 0.0;
            std::vector<double> xs;
            xs.reserve(plist->size());
            for (const auto& p : *plist) {
                const double len = v.index.doc(p.doc).length;
                const double x = std::log((p.tf + mu * p_bg) / (len + mu)) - floor_log;
                xs.push_back(x);
                sum += x;
            }
            const double mean = sum / static_cast<double>(xs.size());
            double ss = 0.0;
            for (double x : xs) ss += (x - mean) * (x - mean);
            TailyStats::TermStats ts;
            ts.df = static_cast<std::uint32_t>(plist->size());
            ts.mean = mean;
            ts.variance = ss / static_cast<double>(xs.size());
            vstats.terms.emplace(term, ts);
        }
        stats.verticals_.push_back(std::move(vstats));
    }
    std::sort(stats.verticals_.begin(), stats.verticals_.end(),
              [](const auto& a, const auto& b) { return a.name < b.name; });
    return stats;
}

double gamma_tail(double mean, double variance, double threshold) {
    if (mean <= 0.0) return 0.0;
    if (variance <= 0.0) return mean > threshold ? 1.0 : 0.0;
    if (threshold <= 0.0) return 1.0;
    const double shape = mean * mean / variance;
    const double scale = variance / mean;
    return boost::math::gamma_q(shape, threshold / scale);
}

std::pair<std::vector<TailyEstimate>, double> taily_estimates(
    std::span<const TailyCandidate> candidates, double n_budget) {
    std::vector<TailyEstimate> out;
    out.reserve(candidates.size());

    auto expected_above = [&](double s) {
        double total = 0.0;
        for (const auto& c : candidates) total += c.est_docs * gamma_tail(c.mean, c.variance, s);
        return total;
    };

    double threshold = 0.0;
    if (expected_above(0.0) > n_budget) {
        double lo = 0.0;
        double hi = 1.0;
        while (expected_above(hi) > n_budget) {
            hi *= 2.0;
            if (hi > 1e12) break;
        }
        for (int iter = 0; iter < 200; ++iter) {
            const double mid = 0.5 * (lo + hi);
            if (expected_above(mid) > n_budget) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        threshold = 0.5 * (lo + hi);
    }

    for (const auto& c : candidates) {
        out.push_back({c.name, c.est_docs * gamma_tail(c.mean, c.variance, threshold)});
    }
    return {std::move(out), threshold};
}

SelectionResult taily_select(const QueryModel& query, const TailyStats& stats,
                             const TailyParams& params) {
    params.validate();
    SelectionResult result;
    result.selection_cost = static_cast<std::int64_t>(stats.verticals().size());

    std::vector<TailyCandidate> candidates;
    for (const auto& v : stats.verticals()) {
        TailyCandidate cand;
        cand.name = v.name;
        double miss_all = 1.0;
        bool any = false;
        for (const auto& [term, weight] : query.terms()) {
            auto it = v.terms.find(term);
            if (it == v.terms.end()) continue;
            any = true;
            cand.mean += it->second.mean;
            cand.variance += it->second.variance;
            miss_all *= 1.0 - static_cast<double>(it->second.df) / static_cast<double>(v.doc_count);
        }
        if (!any || v.doc_count == 0) continue;
        cand.est_docs = static_cast<double>(v.doc_count) * (1.0 - miss_all);
        candidates.push_back(std::move(cand));
    }

    if (candidates.empty()) {
        log::warn("no query term present in any vertical; selecting the largest vertical");
        std::pair<std::int64_t, std::string> best{-1, ""};
        for (const auto& v : stats.verticals()) {
            if (v.doc_count > best.first || (v.doc_count == best.first && v.name < best.second)) {
                best = {v.doc_count, v.name};
            }
        }
        if (best.second.empty()) throw std::invalid_argument("empty vertical set");
        result.verticals.push_back(best.second);
        return result;
    }

    auto [estimates, _] = taily_estimates(candidates, params.n);
    std::vector<std::pair<double, std::string>> passing;
    std::pair<double, std::string> best{-1.0, ""};
    for (const auto& est : estimates) {
        if (est.t_v > best.first || (est.t_v == best.first && est.name < best.second)) {
            best = {est.t_v, est.name};
        }
        if (est.t_v >= params.v) passing.emplace_back(est.t_v, est.name);
    }
    if (passing.empty()) {
        result.verticals.push_back(best.second);
        return result;
    }
    std::sort(passing.begin(), passing.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    for (const auto& [_, name] : passing) result.verticals.push_back(name);
    return result;
}

namespace {

constexpr char kTailyMagic[8] = {'F', 'P', 'R', 'F', 'T', 'L', 'Y', '\n'};

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void put_i64(std::ostream& out, std::int64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void put_f64(std::ostream& out, double v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void put_str(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::uint32_t get_u32(std::istream& in) { std::uint32_t v; in.read(reinterpret_cast<char*>(&v), 4); return v; }
std::int64_t get_i64(std::istream& in) { std::int64_t v; in.read(reinterpret_cast<char*>(&v), 8); return v; }
double get_f64(std::istream& in) { double v; in.read(reinterpret_cast<char*>(&v), 8); return v; }
std::string get_str(std::istream& in) {
    std::string s(get_u32(in), '\0');
    in.read(s.data(), static_cast<std::streamsize>(s.size()));
    return s;
}

}  // namespace

void TailyStats::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write taily stats: " + path);
    out.write(kTailyMagic, sizeof(kTailyMagic));
    put_u32(out, 1);  // version
    put_f64(out, mu_);
    put_u32(out, static_cast<std::uint32_t>(verticals_.size()));
    for (const auto& v : verticals_) {
        put_str(out, v.name);
        put_i64(out, v.doc_count);
        put_u32(out, static_cast<std::uint32_t>(v.terms.size()));
        for (const auto& [term, ts] : v.terms) {
            put_str(out, term);
            put_u32(out, ts.df);
            put_f64(out, ts.mean);
            put_f64(out, ts.variance);
        }
    }
    if (!out) throw std::runtime_error("short write to taily stats: " + path);
}

TailyStats TailyStats::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open taily stats: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kTailyMagic, sizeof(kTailyMagic)) != 0) {
        throw std::runtime_error("not a taily stats file: " + path);
    }
    const auto version = get_u32(in);
    if (version != 1) throw std::runtime_error("unsupported taily stats version in " + path);

    TailyStats stats;
    stats.mu_ = get_f64(in);
    const auto vertical_count = get_u32(in);
    for (std::uint32_t i = 0; i < vertical_count; ++i) {
        VerticalStats v;
        v.name = get_str(in);
        v.doc_count = get_i64(in);
        const auto term_count = get_u32(in);
        for (std::uint32_t j = 0; j < term_count; ++j) {
            std::string term = get_str(in);
            TermStats ts;
            ts.df = get_u32(in);
            ts.mean = get_f64(in);
            ts.variance = get_f64(in);
            v.terms.emplace(std::move(term), ts);
        }
        stats.verticals_.push_back(std::move(v));
    }
    if (!in) throw std::runtime_error("truncated taily stats: " + path);
    return stats;
}

}  // namespace fedprf
