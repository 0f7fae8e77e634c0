#include "fedprf/index.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

namespace fedprf {

namespace {

constexpr char kMagic[8] = {'F', 'P', 'R', 'F', 'I', 'D', 'X', '\n'};
constexpr std::uint32_t kFormatVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void write_u64(std::ostream& out, std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
void write_i64(std::ostream& out, std::int64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }

void write_str(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

std::int64_t read_i64(std::istream& in) {
    std::int64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
}

std::string read_str(std::istream& in) {
    std::uint32_t n = read_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    return s;
}

}  // namespace

QueryModel QueryModel::uniform(const std::vector<std::string>& terms) {
    std::vector<std::string> unique(terms);
    std::sort(unique.begin(), unique.end());
    unique.erase(std::unique(unique.begin(), unique.end()), unique.end());
    if (unique.empty()) throw std::invalid_argument("query model must be non-empty");
    QueryModel q;
    const double w = 1.0 / static_cast<double>(unique.size());
    q.terms_.reserve(unique.size());
    for (auto& t : unique) q.terms_.emplace_back(std::move(t), w);
    return q;
}

QueryModel QueryModel::from_weights(std::vector<std::pair<std::string, double>> weights) {
    if (weights.empty()) throw std::invalid_argument("query model must be non-empty");
    std::sort(weights.begin(), weights.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (i > 0 && weights[i].first == weights[i - 1].first) {
            throw std::invalid_argument("duplicate term in query model: " + weights[i].first);
        }
        if (weights[i].second <= 0.0) {
            throw std::invalid_argument("non-positive weight for term: " + weights[i].first);
        }
        sum += weights[i].second;
    }
    for (auto& [_, w] : weights) w /= sum;
    QueryModel q;
    q.terms_ = std::move(weights);
    return q;
}

std::string QueryModel::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [term, w] : terms_) j[term] = w;
    return j.dump();
}

std::uint32_t InvertedIndex::intern(const std::string& term) {
    auto it = term_ids_.find(term);
    if (it != term_ids_.end()) return it->second;
    const auto id = static_cast<std::uint32_t>(terms_.size());
    term_ids_.emplace(term, id);
    terms_.push_back(term);
    postings_.emplace_back();
    cf_.push_back(0);
    return id;
}

void InvertedIndex::add_document(const Document& doc, std::uint64_t ordinal) {
    DocEntry entry;
    entry.id = doc.id;
    entry.timestamp = doc.timestamp;
    entry.source = doc.source;
    entry.ordinal = ordinal;
    entry.length = static_cast<std::uint32_t>(doc.tokens.size());

    std::unordered_map<std::uint32_t, std::uint32_t> tfs;
    for (const auto& token : doc.tokens) ++tfs[intern(token)];
    entry.vector.assign(tfs.begin(), tfs.end());
    std::sort(entry.vector.begin(), entry.vector.end());

    const auto ref = static_cast<std::uint32_t>(docs_.size());
    for (const auto& [term_id, tf] : entry.vector) {
        postings_[term_id].push_back({ref, tf});
        cf_[term_id] += tf;
    }
    total_tokens_ += entry.length;
    max_doc_len_ = std::max(max_doc_len_, entry.length);
    docs_.push_back(std::move(entry));
}

void InvertedIndex::finalize() {
    // Documents were appended in ascending ordinal order, so postings are
    // already strictly increasing in doc-ref.
    for (std::size_t i = 1; i < docs_.size(); ++i) {
        if (docs_[i].ordinal <= docs_[i - 1].ordinal) {
            throw std::runtime_error("documents must arrive in ascending ordinal order");
        }
    }
}

InvertedIndex InvertedIndex::build(std::span<const Document> docs) {
    InvertedIndex idx;
    std::set<std::string> seen;
    std::uint64_t ordinal = 0;
    for (const auto& doc : docs) {
        if (!seen.insert(doc.id).second) {
            throw std::runtime_error("duplicate document id \"" + doc.id + "\"");
        }
        idx.add_document(doc, ordinal++);
    }
    idx.finalize();
    return idx;
}

InvertedIndex InvertedIndex::build(JsonlReader& reader) {
    InvertedIndex idx;
    std::uint64_t ordinal = 0;
    while (auto doc = reader.next()) idx.add_document(*doc, ordinal++);
    idx.finalize();
    return idx;
}

InvertedIndex InvertedIndex::from_records(std::vector<DocRecord> records) {
    InvertedIndex idx;
    for (auto& rec : records) {
        DocEntry entry;
        entry.id = std::move(rec.id);
        entry.timestamp = rec.timestamp;
        entry.source = std::move(rec.source);
        entry.ordinal = rec.ordinal;

        const auto ref = static_cast<std::uint32_t>(idx.docs_.size());
        std::uint32_t length = 0;
        entry.vector.reserve(rec.terms.size());
        for (auto& [term, tf] : rec.terms) {
            const auto id = idx.intern(term);
            entry.vector.emplace_back(id, tf);
            length += tf;
        }
        std::sort(entry.vector.begin(), entry.vector.end());
        for (const auto& [id, tf] : entry.vector) {
            idx.postings_[id].push_back({ref, tf});
            idx.cf_[id] += tf;
        }
        entry.length = length;
        idx.total_tokens_ += length;
        idx.max_doc_len_ = std::max(idx.max_doc_len_, length);
        idx.docs_.push_back(std::move(entry));
    }
    idx.finalize();
    return idx;
}

InvertedIndex InvertedIndex::merge(std::span<const InvertedIndex* const> parts) {
    std::vector<DocRecord> records;
    for (const auto* part : parts) {
        for (std::uint32_t ref = 0; ref < part->doc_count(); ++ref) {
            const DocEntry& entry = part->doc(ref);
            DocRecord rec;
            rec.id = entry.id;
            rec.timestamp = entry.timestamp;
            rec.source = entry.source;
            rec.ordinal = entry.ordinal;
            rec.terms.reserve(entry.vector.size());
            for (const auto& [term_id, tf] : entry.vector) {
                rec.terms.emplace_back(part->term(term_id), tf);
            }
            records.push_back(std::move(rec));
        }
    }
    std::sort(records.begin(), records.end(),
              [](const DocRecord& a, const DocRecord& b) { return a.ordinal < b.ordinal; });
    return from_records(std::move(records));
}

const DocEntry& InvertedIndex::doc(std::uint32_t ref) const {
    if (ref >= docs_.size()) throw std::out_of_range("unknown doc-ref");
    return docs_[ref];
}

std::int64_t InvertedIndex::term_id(const std::string& term) const {
    auto it = term_ids_.find(term);
    return it == term_ids_.end() ? -1 : static_cast<std::int64_t>(it->second);
}

std::uint32_t InvertedIndex::df(const std::string& term) const {
    auto it = term_ids_.find(term);
    return it == term_ids_.end() ? 0 : static_cast<std::uint32_t>(postings_[it->second].size());
}

std::int64_t InvertedIndex::cf(const std::string& term) const {
    auto it = term_ids_.find(term);
    return it == term_ids_.end() ? 0 : cf_[it->second];
}

const std::vector<Posting>* InvertedIndex::postings(const std::string& term) const {
    auto it = term_ids_.find(term);
    return it == term_ids_.end() ? nullptr : &postings_[it->second];
}

std::uint32_t InvertedIndex::tf(std::uint32_t term_id, std::uint32_t ref) const {
    const auto& plist = postings_[term_id];
    auto it = std::lower_bound(plist.begin(), plist.end(), ref,
                               [](const Posting& p, std::uint32_t doc) { return p.doc < doc; });
    return (it != plist.end() && it->doc == ref) ? it->tf : 0;
}

CollectionStats InvertedIndex::own_stats() const {
    CollectionStats stats;
    stats.total_tokens = total_tokens_;
    stats.doc_count = doc_count();
    stats.max_doc_len = max_doc_len_;
    stats.cf.reserve(terms_.size());
    for (std::size_t i = 0; i < terms_.size(); ++i) stats.cf.emplace(terms_[i], cf_[i]);
    return stats;
}

double InvertedIndex::background_prob(const std::string& term) const {
    if (background_) return background_->background_prob(term);
    if (total_tokens_ == 0) return 0.0;
    return static_cast<double>(cf(term)) / static_cast<double>(total_tokens_);
}

double InvertedIndex::score_ql(const QueryModel& query, std::uint32_t ref, double mu) const {
    if (mu <= 0.0) throw std::invalid_argument("mu must be positive");
    const DocEntry& entry = doc(ref);
    double score = 0.0;
    for (const auto& [term, weight] : query.terms()) {
        const double p_bg = background_prob(term);
        if (p_bg <= 0.0) continue;  // unknown to the background vocabulary
        const auto id = term_id(term);
        const double tf_td = id < 0 ? 0.0 : tf(static_cast<std::uint32_t>(id), ref);
        score += weight * std::log((tf_td + mu * p_bg) / (entry.length + mu));
    }
    return score;
}

std::vector<ScoredDoc> InvertedIndex::retrieve_topk(const QueryModel& query, std::size_t k,
                                                    double mu, PostingsCounter& counter) const {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (mu <= 0.0) throw std::invalid_argument("mu must be positive");
    if (query.size() == 0) throw std::invalid_argument("empty query model");

    struct ResolvedTerm {
        double weight;
        double p_bg;
        const std::vector<Posting>* plist;  // null when the term is absent here
    };
    std::vector<ResolvedTerm> resolved;
    resolved.reserve(query.size());
    std::int64_t touched = 0;
    for (const auto& [term, weight] : query.terms()) {
        const auto* plist = postings(term);
        if (plist != nullptr) touched += static_cast<std::int64_t>(plist->size());
        resolved.push_back({weight, background_prob(term), plist});
    }
    counter.add(touched);

    // Candidates: union of the query terms' postings.
    std::vector<std::uint32_t> candidates;
    candidates.reserve(static_cast<std::size_t>(touched));
    for (const auto& rt : resolved) {
        if (rt.plist == nullptr) continue;
        for (const auto& p : *rt.plist) candidates.push_back(p.doc);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::vector<ScoredDoc> scored(candidates.size());
    const auto n = static_cast<std::int64_t>(candidates.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const std::uint32_t ref = candidates[static_cast<std::size_t>(i)];
        const double doc_len = docs_[ref].length;
        double score = 0.0;
        for (const auto& rt : resolved) {
            if (rt.p_bg <= 0.0) continue;
            double tf_td = 0.0;
            if (rt.plist != nullptr) {
                auto it = std::lower_bound(
                    rt.plist->begin(), rt.plist->end(), ref,
                    [](const Posting& p, std::uint32_t doc) { return p.doc < doc; });
                if (it != rt.plist->end() && it->doc == ref) tf_td = it->tf;
            }
            score += rt.weight * std::log((tf_td + mu * rt.p_bg) / (doc_len + mu));
        }
        scored[static_cast<std::size_t>(i)] = {ref, score};
    }

    std::sort(scored.begin(), scored.end(), [](const ScoredDoc& a, const ScoredDoc& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc < b.doc;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

std::int64_t InvertedIndex::postings_cost(const QueryModel& query) const {
    std::int64_t cost = 0;
    for (const auto& [term, _] : query.terms()) cost += df(term);
    return cost;
}

void InvertedIndex::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write index file: " + path);
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kFormatVersion);
    write_u32(out, static_cast<std::uint32_t>(terms_.size()));
    for (const auto& term : terms_) write_str(out, term);
    write_u32(out, static_cast<std::uint32_t>(docs_.size()));
    for (const auto& entry : docs_) {
        write_str(out, entry.id);
        write_i64(out, entry.timestamp);
        write_str(out, entry.source);
        write_u64(out, entry.ordinal);
        write_u32(out, static_cast<std::uint32_t>(entry.vector.size()));
        for (const auto& [term_id, tf] : entry.vector) {
            write_u32(out, term_id);
            write_u32(out, tf);
        }
    }
    if (!out) throw std::runtime_error("short write to index file: " + path);
}

InvertedIndex InvertedIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open index file: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw std::runtime_error("not an index file: " + path);
    }
    const auto version = read_u32(in);
    if (version != kFormatVersion) {
        throw std::runtime_error("unsupported index version " + std::to_string(version) + " in " + path);
    }
    const auto term_count = read_u32(in);
    std::vector<std::string> terms(term_count);
    for (auto& term : terms) term = read_str(in);

    const auto doc_count = read_u32(in);
    std::vector<DocRecord> records(doc_count);
    for (auto& rec : records) {
        rec.id = read_str(in);
        rec.timestamp = read_i64(in);
        rec.source = read_str(in);
        rec.ordinal = read_u64(in);
        const auto entries = read_u32(in);
        rec.terms.reserve(entries);
        for (std::uint32_t i = 0; i < entries; ++i) {
            const auto term_id = read_u32(in);
            const auto tf = read_u32(in);
            if (term_id >= term_count) throw std::runtime_error("corrupt index file: " + path);
            rec.terms.emplace_back(terms[term_id], tf);
        }
    }
    if (!in) throw std::runtime_error("truncated index file: " + path);
    return from_records(std::move(records));
}

}  // namespace fedprf
