#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fedprf {

/// One microblog/news post.
struct Document {
    std::string id;
    std::int64_t timestamp = 0;  // seconds since Unix epoch, UTC
    std::string source;          // publisher handle, e.g. "bbcnews"
    std::string text;
    std::vector<std::string> tokens;

    bool operator==(const Document& other) const = default;
};

/// Normalizes raw post text into index terms. Rules, applied in order:
/// ASCII lowercasing; "http://"/"https://" runs removed up to whitespace;
/// @mentions removed; a leading '#' is stripped but the tag body kept;
/// tokens split on anything that is not ASCII alphanumeric (bytes >= 0x80
/// are kept verbatim so multi-byte UTF-8 sequences stay whole).
std::vector<std::string> tokenize(const std::string& text);

/// Serializes a document back to one JSON line (tokens are derived state
/// and are not written).
std::string to_json_line(const Document& doc);

/// Streaming reader over a JSON-lines corpus file. Blank lines are skipped;
/// malformed lines and duplicate ids raise std::runtime_error naming the
/// offending line or id.
class JsonlReader {
  public:
    explicit JsonlReader(const std::string& path);

    /// Next document in file order, or nullopt at end of stream.
    std::optional<Document> next();

    std::size_t documents_read() const { return count_; }

  private:
    std::string path_;
    std::ifstream in_;
    std::size_t line_no_ = 0;
    std::size_t count_ = 0;
    std::set<std::string> seen_ids_;
};

/// Convenience wrapper: reads the whole file.
std::vector<Document> load_jsonl(const std::string& path);

/// Maps publisher handles to named verticals.
class VerticalConfig {
  public:
    VerticalConfig() = default;

    /// verticals: name -> source handles. A source may appear in only one
    /// vertical; duplicates within the same vertical are collapsed.
    VerticalConfig(std::map<std::string, std::vector<std::string>> verticals,
                   std::optional<std::string> default_vertical);

    static VerticalConfig from_json_file(const std::string& path);
    static VerticalConfig from_json(const std::string& text);

    /// Vertical owning the document's source, or the default vertical.
    /// Throws std::runtime_error naming the source if neither applies.
    const std::string& assign(const Document& doc) const;

    /// Vertical names in ascending order.
    std::vector<std::string> vertical_names() const;

    const std::optional<std::string>& default_vertical() const { return default_vertical_; }

  private:
    std::map<std::string, std::vector<std::string>> verticals_;
    std::map<std::string, std::string> source_to_vertical_;
    std::optional<std::string> default_vertical_;
};

/// Built-in English stopword list (~120 entries). Used only by the
/// expansion-term selector, never by indexing.
const std::set<std::string>& stopwords();

}  // namespace fedprf
