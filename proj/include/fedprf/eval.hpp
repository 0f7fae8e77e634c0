#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace fedprf {

/// Graded relevance judgments on the 0/1/2 scale.
class Qrels {
  public:
    /// Whitespace-separated lines: topic 0 docid grade.
    static Qrels parse_file(const std::string& path);
    static Qrels parse(std::istream& in, const std::string& name);

    void add(const std::string& topic, const std::string& doc, int grade);

    bool has_topic(const std::string& topic) const { return grades_.contains(topic); }
    int grade(const std::string& topic, const std::string& doc) const;

    /// Number of documents with grade >= 1 for the topic.
    std::size_t relevant_count(const std::string& topic) const;

    /// All judged grades for the topic (for ideal-DCG computation).
    std::vector<int> judged_grades(const std::string& topic) const;

    std::vector<std::string> topics() const;

  private:
    std::map<std::string, std::unordered_map<std::string, int>> grades_;
};

struct Topic {
    std::string id;
    std::string query;
    std::int64_t timestamp = 0;
};

/// JSON-lines topics: {id, query, timestamp}.
std::vector<Topic> load_topics(const std::string& path);

struct RunRow {
    std::string topic;
    std::string doc;
    int rank = 0;
    double score = 0.0;
    std::string tag;
};

/// TREC exchange format: topic Q0 docid rank score tag.
void write_run_file(const std::string& path, std::span<const RunRow> rows);
std::vector<RunRow> parse_run_file(const std::string& path);

/// Binary-relevance average precision over the top `depth` (grade >= 1 is
/// relevant). Returns 0 when the topic has no relevant documents; callers
/// exclude such topics from means. Throws on topics absent from the qrels.
double average_precision(std::span<const std::string> ranking, const Qrels& qrels,
                         const std::string& topic, std::size_t depth = 1000);

/// Graded NDCG with gain 2^grade - 1 and log2(i+1) discount; 0 when the
/// ideal DCG is 0.
double ndcg_at_k(std::span<const std::string> ranking, const Qrels& qrels,
                 const std::string& topic, std::size_t k = 30);

/// Fraction of the topic's relevant documents found in the top `depth`.
double recall_at_depth(std::span<const std::string> ranking, const Qrels& qrels,
                       const std::string& topic, std::size_t depth = 1000);

}  // namespace fedprf
