#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedprf/corpus.hpp"
#include "fedprf/index.hpp"
#include "fedprf/relevance.hpp"

namespace fedprf {

/// Verticals chosen for one query plus the price of choosing them.
/// C_SEL is a CSI postings count for sample-document selectors and the
/// vertical count for vocabulary-based ones.
struct SelectionResult {
    std::vector<std::string> verticals;  // selection order (mapping m)
    std::int64_t selection_cost = 0;
};

/// Topic shards sharing one global statistics snapshot, so scores are
/// comparable across shards and merging is a pure sort.
class VerticalSet {
  public:
    struct Vertical {
        std::string name;
        InvertedIndex index;
    };

    static VerticalSet build(std::span<const Document> docs, const VerticalConfig& cfg);

    std::size_t size() const { return verticals_.size(); }
    const std::vector<Vertical>& verticals() const { return verticals_; }
    const Vertical* find(const std::string& name) const;
    std::vector<std::string> names() const;
    const std::shared_ptr<const CollectionStats>& global_stats() const { return global_; }

    /// Union index over all verticals' documents, in stream order, scoring
    /// against the shared snapshot.
    InvertedIndex build_union() const;

    /// One index file per vertical plus a JSON manifest (names, doc counts,
    /// global statistics) in `dir`.
    void save(const std::string& dir) const;
    static VerticalSet load(const std::string& dir);

  private:
    std::vector<Vertical> verticals_;  // sorted by name
    std::shared_ptr<const CollectionStats> global_;
    void rebuild_global();
    friend VerticalSet apply_time_window(const VerticalSet&, std::int64_t, const struct TimeWindow&);
};

/// Centralized sample index: hash-sampled documents from every vertical.
struct CSI {
    InvertedIndex index;
    std::vector<std::string> vertical_of_doc;  // by doc-ref
    double rate = 0.1;
    std::uint64_t seed = 1;

    void save(const std::string& index_path, const std::string& meta_path) const;
    static CSI load(const std::string& index_path, const std::string& meta_path);
};

/// Deterministic, platform-stable document hash used by CSI sampling.
std::uint64_t sample_hash64(std::uint64_t seed, const std::string& doc_id);

/// Each document is included iff sample_hash64(seed, id) mod 10^6 falls
/// below rate * 10^6. An empty CSI is allowed but logged.
CSI build_csi(const VerticalSet& vs, double rate, std::uint64_t seed);

/// Admits documents with timestamp in [t_q - age - span, t_q - age];
/// an unset span leaves the window unbounded on the left.
struct TimeWindow {
    std::int64_t age_seconds = 0;
    std::optional<std::int64_t> span_seconds;  // nullopt: unbounded

    void validate() const;
    bool admits(std::int64_t doc_ts, std::int64_t query_ts) const;
};

/// Filtered copy of an index with statistics recomputed over the admitted
/// documents only. The input is left untouched.
InvertedIndex apply_time_window(const InvertedIndex& index, std::int64_t query_ts,
                                const TimeWindow& window);
VerticalSet apply_time_window(const VerticalSet& vs, std::int64_t query_ts,
                              const TimeWindow& window);
CSI apply_time_window(const CSI& csi, std::int64_t query_ts, const TimeWindow& window);

/// Postings touched in one shard during fan-out.
struct VerticalRetrievalCost {
    std::string vertical;
    std::int64_t postings = 0;
};

/// Broker fan-out: top-k from each selected vertical (shared snapshot
/// scoring), merged by (score desc, ordinal asc) and truncated back to k.
/// Per-vertical postings counts are recorded individually.
FeedbackSet vertical_feedback(const QueryModel& query, const VerticalSet& vs,
                              const SelectionResult& sel, std::size_t k, double mu,
                              std::vector<VerticalRetrievalCost>& costs);

/// FeedbackSource running resource selection then vertical fan-out.
class BrokeredFeedback : public FeedbackSource {
  public:
    using Selector = std::function<SelectionResult(const QueryModel&)>;

    BrokeredFeedback(const VerticalSet& vs, Selector selector)
        : vs_(&vs), selector_(std::move(selector)) {}

    FeedbackSet fetch(const QueryModel& query, std::size_t k, double mu,
                      FeedbackCosts& costs) const override;

  private:
    const VerticalSet* vs_;
    Selector selector_;
};

}  // namespace fedprf
