#include "fedprf/federation.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "fedprf/log.hpp"

namespace fedprf {

namespace fs = std::filesystem;

void VerticalSet::rebuild_global() {
    auto stats = std::make_shared<CollectionStats>();
    for (const auto& v : verticals_) {
        stats->total_tokens += v.index.total_tokens();
        stats->doc_count += v.index.doc_count();
        stats->max_doc_len = std::max(stats->max_doc_len, v.index.max_doc_len());
        const auto& terms = v.index.terms();
        for (const auto& term : terms) stats->cf[term] += v.index.cf(term);
    }
    global_ = std::move(stats);
    for (auto& v : verticals_) v.index.set_background(global_);
}

VerticalSet VerticalSet::build(std::span<const Document> docs, const VerticalConfig& cfg) {
    std::map<std::string, std::vector<std::pair<const Document*, std::uint64_t>>> routed;
    for (const auto& name : cfg.vertical_names()) routed[name];  // empty verticals stay present
    std::uint64_t ordinal = 0;
    for (const auto& doc : docs) {
        routed[cfg.assign(doc)].emplace_back(&doc, ordinal++);
    }

    VerticalSet vs;
    for (auto& [name, members] : routed) {
        std::vector<InvertedIndex::DocRecord> records;
        records.reserve(members.size());
        for (const auto& [doc, ord] : members) {
            InvertedIndex::DocRecord rec;
            rec.id = doc->id;
            rec.timestamp = doc->timestamp;
            rec.source = doc->source;
            rec.ordinal = ord;
            std::map<std::string, std::uint32_t> tfs;
            for (const auto& token : doc->tokens) ++tfs[token];
            rec.terms.assign(tfs.begin(), tfs.end());
            records.push_back(std::move(rec));
        }
        vs.verticals_.push_back({name, InvertedIndex::from_records(std::move(records))});
    }
    vs.rebuild_global();
    return vs;
}

const VerticalSet::Vertical* VerticalSet::find(const std::string& name) const {
    for (const auto& v : verticals_) {
        if (v.name == name) return &v;
    }
    return nullptr;
}

std::vector<std::string> VerticalSet::names() const {
    std::vector<std::string> out;
    out.reserve(verticals_.size());
    for (const auto& v : verticals_) out.push_back(v.name);
    return out;
}

InvertedIndex VerticalSet::build_union() const {
    std::vector<const InvertedIndex*> parts;
    parts.reserve(verticals_.size());
    for (const auto& v : verticals_) parts.push_back(&v.index);
    InvertedIndex merged = InvertedIndex::merge(parts);
    merged.set_background(global_);
    return merged;
}

void VerticalSet::save(const std::string& dir) const {
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["version"] = 1;
    auto& list = manifest["verticals"] = nlohmann::json::array();
    for (const auto& v : verticals_) {
        const std::string file = v.name + ".idx";
        v.index.save((fs::path(dir) / file).string());
        list.push_back({{"name", v.name},
                        {"file", file},
                        {"docs", v.index.doc_count()},
                        {"tokens", v.index.total_tokens()}});
    }
    nlohmann::json global;
    global["doc_count"] = global_->doc_count;
    global["total_tokens"] = global_->total_tokens;
    global["max_doc_len"] = global_->max_doc_len;
    auto& cf = global["cf"] = nlohmann::json::object();
    for (const auto& [term, count] : global_->cf) cf[term] = count;
    manifest["global"] = std::move(global);

    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + dir);
    out << manifest.dump(2) << "\n";
}

VerticalSet VerticalSet::load(const std::string& dir) {
    std::ifstream in(fs::path(dir) / "manifest.json");
    if (!in) throw std::runtime_error("cannot open manifest in " + dir);
    nlohmann::json manifest = nlohmann::json::parse(in);

    VerticalSet vs;
    for (const auto& entry : manifest.at("verticals")) {
        Vertical v;
        v.name = entry.at("name").get<std::string>();
        v.index = InvertedIndex::load((fs::path(dir) / entry.at("file").get<std::string>()).string());
        vs.verticals_.push_back(std::move(v));
    }
    std::sort(vs.verticals_.begin(), vs.verticals_.end(),
              [](const Vertical& a, const Vertical& b) { return a.name < b.name; });

    auto stats = std::make_shared<CollectionStats>();
    const auto& global = manifest.at("global");
    stats->doc_count = global.at("doc_count").get<std::int64_t>();
    stats->total_tokens = global.at("total_tokens").get<std::int64_t>();
    stats->max_doc_len = global.at("max_doc_len").get<std::uint32_t>();
    for (const auto& [term, count] : global.at("cf").items()) {
        stats->cf[term] = count.get<std::int64_t>();
    }
    vs.global_ = std::move(stats);
    for (auto& v : vs.verticals_) v.index.set_background(vs.global_);
    return vs;
}

std::uint64_t sample_hash64(std::uint64_t seed, const std::string& doc_id) {
    // FNV-1a over the id bytes with the seed folded in, then a splitmix64
    // finalizer for avalanche. Stable across platforms, unlike std::hash.
    std::uint64_t h = 1469598103934665603ull ^ (seed * 0x9E3779B97F4A7C15ull);
    for (unsigned char c : doc_id) {
        h ^= c;
        h *= 1099511628211ull;
    }
    h ^= h >> 30;
    h *= 0xBF58476D1CE4E5B9ull;
    h ^= h >> 27;
    h *= 0x94D049BB133111EBull;
    h ^= h >> 31;
    return h;
}

CSI build_csi(const VerticalSet& vs, double rate, std::uint64_t seed) {
    if (rate <= 0.0 || rate > 1.0) throw std::invalid_argument("CSI rate must be in (0,1]");

    struct Sampled {
        InvertedIndex::DocRecord record;
        std::string vertical;
    };
    std::vector<Sampled> sampled;
    const double threshold = rate * 1e6;
    for (const auto& v : vs.verticals()) {
        for (std::uint32_t ref = 0; ref < v.index.doc_count(); ++ref) {
            const DocEntry& entry = v.index.doc(ref);
            if (static_cast<double>(sample_hash64(seed, entry.id) % 1000000ull) >= threshold) {
                continue;
            }
            InvertedIndex::DocRecord rec;
            rec.id = entry.id;
            rec.timestamp = entry.timestamp;
            rec.source = entry.source;
            rec.ordinal = entry.ordinal;
            rec.terms.reserve(entry.vector.size());
            for (const auto& [term_id, tf] : entry.vector) {
                rec.terms.emplace_back(v.index.term(term_id), tf);
            }
            sampled.push_back({std::move(rec), v.name});
        }
    }
    std::sort(sampled.begin(), sampled.end(), [](const Sampled& a, const Sampled& b) {
        return a.record.ordinal < b.record.ordinal;
    });

    CSI csi;
    csi.rate = rate;
    csi.seed = seed;
    std::vector<InvertedIndex::DocRecord> records;
    records.reserve(sampled.size());
    for (auto& s : sampled) {
        records.push_back(std::move(s.record));
        csi.vertical_of_doc.push_back(std::move(s.vertical));
    }
    csi.index = InvertedIndex::from_records(std::move(records));
    if (csi.index.doc_count() == 0) log::warn("CSI sample is empty at the configured rate");
    return csi;
}

void CSI::save(const std::string& index_path, const std::string& meta_path) const {
    index.save(index_path);
    nlohmann::json meta;
    meta["rate"] = rate;
    meta["seed"] = seed;
    meta["vertical_of_doc"] = vertical_of_doc;
    std::ofstream out(meta_path);
    if (!out) throw std::runtime_error("cannot write CSI metadata: " + meta_path);
    out << meta.dump(2) << "\n";
}

CSI CSI::load(const std::string& index_path, const std::string& meta_path) {
    CSI csi;
    csi.index = InvertedIndex::load(index_path);
    std::ifstream in(meta_path);
    if (!in) throw std::runtime_error("cannot open CSI metadata: " + meta_path);
    nlohmann::json meta = nlohmann::json::parse(in);
    csi.rate = meta.at("rate").get<double>();
    csi.seed = meta.at("seed").get<std::uint64_t>();
    csi.vertical_of_doc = meta.at("vertical_of_doc").get<std::vector<std::string>>();
    if (csi.vertical_of_doc.size() != csi.index.doc_count()) {
        throw std::runtime_error("CSI metadata does not match index: " + meta_path);
    }
    return csi;
}

void TimeWindow::validate() const {
    if (age_seconds < 0) throw std::invalid_argument("window age must be >= 0");
    if (span_seconds && *span_seconds <= 0) throw std::invalid_argument("window span must be > 0");
}

bool TimeWindow::admits(std::int64_t doc_ts, std::int64_t query_ts) const {
    const std::int64_t newest = query_ts - age_seconds;
    if (doc_ts > newest) return false;
    if (span_seconds && doc_ts < newest - *span_seconds) return false;
    return true;
}

namespace {

std::vector<InvertedIndex::DocRecord> admitted_records(const InvertedIndex& index,
                                                       std::int64_t query_ts,
                                                       const TimeWindow& window,
                                                       std::vector<std::uint32_t>* kept_refs) {
    std::vector<InvertedIndex::DocRecord> records;
    for (std::uint32_t ref = 0; ref < index.doc_count(); ++ref) {
        const DocEntry& entry = index.doc(ref);
        if (!window.admits(entry.timestamp, query_ts)) continue;
        InvertedIndex::DocRecord rec;
        rec.id = entry.id;
        rec.timestamp = entry.timestamp;
        rec.source = entry.source;
        rec.ordinal = entry.ordinal;
        rec.terms.reserve(entry.vector.size());
        for (const auto& [term_id, tf] : entry.vector) {
            rec.terms.emplace_back(index.term(term_id), tf);
        }
        records.push_back(std::move(rec));
        if (kept_refs != nullptr) kept_refs->push_back(ref);
    }
    return records;
}

}  // namespace

InvertedIndex apply_time_window(const InvertedIndex& index, std::int64_t query_ts,
                                const TimeWindow& window) {
    window.validate();
    return InvertedIndex::from_records(admitted_records(index, query_ts, window, nullptr));
}

VerticalSet apply_time_window(const VerticalSet& vs, std::int64_t query_ts,
                              const TimeWindow& window) {
    window.validate();
    VerticalSet out;
    for (const auto& v : vs.verticals()) {
        out.verticals_.push_back(
            {v.name, InvertedIndex::from_records(admitted_records(v.index, query_ts, window, nullptr))});
    }
    out.rebuild_global();
    return out;
}

CSI apply_time_window(const CSI& csi, std::int64_t query_ts, const TimeWindow& window) {
    window.validate();
    CSI out;
    out.rate = csi.rate;
    out.seed = csi.seed;
    std::vector<std::uint32_t> kept;
    auto records = admitted_records(csi.index, query_ts, window, &kept);
    out.index = InvertedIndex::from_records(std::move(records));
    out.vertical_of_doc.reserve(kept.size());
    for (auto ref : kept) out.vertical_of_doc.push_back(csi.vertical_of_doc[ref]);
    return out;
}

FeedbackSet vertical_feedback(const QueryModel& query, const VerticalSet& vs,
                              const SelectionResult& sel, std::size_t k, double mu,
                              std::vector<VerticalRetrievalCost>& costs) {
    if (sel.verticals.empty()) throw std::invalid_argument("selection must be non-empty");

    struct ShardResult {
        const InvertedIndex* index = nullptr;
        std::vector<ScoredDoc> top;
        std::int64_t postings = 0;
    };
    std::vector<ShardResult> results(sel.verticals.size());

    const auto n = static_cast<std::int64_t>(sel.verticals.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto& name = sel.verticals[static_cast<std::size_t>(i)];
        const auto* v = vs.find(name);
        if (v == nullptr) continue;  // validated below, outside the parallel region
        PostingsCounter counter;
        auto& slot = results[static_cast<std::size_t>(i)];
        slot.index = &v->index;
        slot.top = v->index.retrieve_topk(query, k, mu, counter);
        slot.postings = counter.accessed;
    }

    FeedbackSet merged;
    costs.clear();
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].index == nullptr) {
            throw std::invalid_argument("unknown vertical in selection: " + sel.verticals[i]);
        }
        costs.push_back({sel.verticals[i], results[i].postings});
        for (const auto& sd : results[i].top) {
            merged.push_back({results[i].index, sd.doc, results[i].index->doc(sd.doc).ordinal,
                              sd.score});
        }
    }
    std::sort(merged.begin(), merged.end(), [](const FeedbackDoc& a, const FeedbackDoc& b) {
        if (a.log_score != b.log_score) return a.log_score > b.log_score;
        return a.ordinal < b.ordinal;
    });
    if (merged.size() > k) merged.resize(k);
    return merged;
}

FeedbackSet BrokeredFeedback::fetch(const QueryModel& query, std::size_t k, double mu,
                                    FeedbackCosts& costs) const {
    SelectionResult sel = selector_(query);
    std::vector<VerticalRetrievalCost> shard_costs;
    FeedbackSet fb = vertical_feedback(query, *vs_, sel, k, mu, shard_costs);
    costs.selection = sel.selection_cost;
    costs.per_vertical.clear();
    for (auto& c : shard_costs) costs.per_vertical.emplace_back(c.vertical, c.postings);
    costs.verticals_searched = sel.verticals.size();
    return fb;
}

}  // namespace fedprf
