#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fedprf/corpus.hpp"

namespace fedprf {

/// Collection-level language-model statistics. An index can score against
/// its own statistics or against an injected snapshot aggregated over a
/// whole federation, which makes scores comparable across verticals.
struct CollectionStats {
    std::unordered_map<std::string, std::int64_t> cf;  // collection frequency per term
    std::int64_t total_tokens = 0;
    std::int64_t doc_count = 0;
    std::uint32_t max_doc_len = 0;

    double background_prob(const std::string& term) const {
        if (total_tokens == 0) return 0.0;
        auto it = cf.find(term);
        return it == cf.end() ? 0.0 : static_cast<double>(it->second) / total_tokens;
    }
};

/// Weighted term distribution: weights are > 0 and sum to 1 (+-1e-9).
/// Terms are kept sorted so iteration order is deterministic.
class QueryModel {
  public:
    /// Uniform model over the distinct terms.
    static QueryModel uniform(const std::vector<std::string>& terms);

    /// Normalizes arbitrary positive weights; terms with weight <= 0 are
    /// rejected.
    static QueryModel from_weights(std::vector<std::pair<std::string, double>> weights);

    const std::vector<std::pair<std::string, double>>& terms() const { return terms_; }
    std::size_t size() const { return terms_.size(); }

    std::string to_json() const;

  private:
    QueryModel() = default;
    std::vector<std::pair<std::string, double>> terms_;  // sorted by term
};

struct ScoredDoc {
    std::uint32_t doc = 0;  // doc-ref within the searched index
    double score = 0.0;     // natural-log query likelihood
};

/// Counts postings touched by retrievals. Each retrieval owns its counter.
struct PostingsCounter {
    std::int64_t accessed = 0;
    void add(std::int64_t n) { accessed += n; }
};

struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;
};

/// Per-document entry: metadata plus the forward term vector, which backs
/// feedback-model estimation, re-ranking and window filtering.
struct DocEntry {
    std::string id;
    std::int64_t timestamp = 0;
    std::string source;
    std::uint64_t ordinal = 0;  // position in the ingest stream; docrefs follow it
    std::uint32_t length = 0;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> vector;  // (term-id, tf), term-id asc
};

/// Immutable inverted index with collection statistics and exact
/// postings-access accounting. Thread-safe for concurrent readers.
class InvertedIndex {
  public:
    InvertedIndex() = default;

    static InvertedIndex build(std::span<const Document> docs);
    static InvertedIndex build(JsonlReader& reader);

    /// Rebuilds an index from already-tokenized doc records (term strings +
    /// tfs). Records must arrive in ascending ordinal order.
    struct DocRecord {
        std::string id;
        std::int64_t timestamp = 0;
        std::string source;
        std::uint64_t ordinal = 0;
        std::vector<std::pair<std::string, std::uint32_t>> terms;  // (term, tf)
    };
    static InvertedIndex from_records(std::vector<DocRecord> records);

    /// Merges several indexes into one, ordering documents by ordinal.
    static InvertedIndex merge(std::span<const InvertedIndex* const> parts);

    std::uint32_t doc_count() const { return static_cast<std::uint32_t>(docs_.size()); }
    std::int64_t total_tokens() const { return total_tokens_; }
    std::uint32_t max_doc_len() const { return max_doc_len_; }
    const DocEntry& doc(std::uint32_t ref) const;
    const std::vector<std::string>& terms() const { return terms_; }
    const std::string& term(std::uint32_t id) const { return terms_[id]; }

    std::int64_t term_id(const std::string& term) const;  // -1 if absent
    std::uint32_t df(const std::string& term) const;
    std::int64_t cf(const std::string& term) const;
    const std::vector<Posting>* postings(const std::string& term) const;

    /// Term frequency of `term_id` in document `ref` (0 when absent).
    std::uint32_t tf(std::uint32_t term_id, std::uint32_t ref) const;

    /// Statistics of this index alone.
    CollectionStats own_stats() const;

    /// Injects a shared statistics snapshot used for smoothing; pass
    /// nullptr to score with the index's own statistics.
    void set_background(std::shared_ptr<const CollectionStats> stats) { background_ = std::move(stats); }
    const CollectionStats* background() const { return background_.get(); }

    /// p(t|BG) under the active background handle.
    double background_prob(const std::string& term) const;

    /// Dirichlet-smoothed log query likelihood of one document:
    ///   sum_t w_t * ln((tf(t,d) + mu*p(t|BG)) / (|d| + mu)).
    /// Query terms unknown to the background vocabulary contribute 0.
    double score_ql(const QueryModel& query, std::uint32_t ref, double mu) const;

    /// Top-k retrieval: candidates are documents containing at least one
    /// query term, ranked by score descending with ties broken by ascending
    /// doc-ref. Adds sum_t df(t) to the counter. Returns <= k results.
    std::vector<ScoredDoc> retrieve_topk(const QueryModel& query, std::size_t k, double mu,
                                         PostingsCounter& counter) const;

    /// Def.-style retrieval cost: sum of df over query terms present here.
    std::int64_t postings_cost(const QueryModel& query) const;

    void save(const std::string& path) const;
    static InvertedIndex load(const std::string& path);

  private:
    std::uint32_t intern(const std::string& term);
    void add_document(const Document& doc, std::uint64_t ordinal);
    void finalize();

    std::vector<DocEntry> docs_;
    std::vector<std::string> terms_;
    std::unordered_map<std::string, std::uint32_t> term_ids_;
    std::vector<std::vector<Posting>> postings_;
    std::vector<std::int64_t> cf_;
    std::int64_t total_tokens_ = 0;
    std::uint32_t max_doc_len_ = 0;
    std::shared_ptr<const CollectionStats> background_;
};

}  // namespace fedprf
