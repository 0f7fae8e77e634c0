#include "fedprf/corpus.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <stdexcept>

#include "fedprf/log.hpp"

namespace fedprf {

namespace {

bool is_token_char(unsigned char c) {
    // Bytes >= 0x80 are UTF-8 continuation/lead bytes; keep them so
    // non-ASCII words survive intact (no case folding applied to them).
    return std::isalnum(c) != 0 || c >= 0x80;
}

bool starts_with(const std::string& s, std::size_t pos, const char* prefix) {
    for (std::size_t i = 0; prefix[i] != '\0'; ++i) {
        if (pos + i >= s.size() || s[pos + i] != prefix[i]) return false;
    }
    return true;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string current;
    bool prev_was_token_char = false;
    std::size_t i = 0;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if ((starts_with(text, i, "http://") || starts_with(text, i, "https://")) &&
            !prev_was_token_char) {
            if (!current.empty()) { tokens.push_back(current); current.clear(); }
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
            prev_was_token_char = false;
            continue;
        }
        if (c == '@' && !prev_was_token_char) {
            // @mention: drop the handle entirely
            ++i;
            while (i < text.size() &&
                   (is_token_char(static_cast<unsigned char>(text[i])) || text[i] == '_')) {
                ++i;
            }
            prev_was_token_char = false;
            continue;
        }
        if (c == '#') {
            // keep the tag body, drop the marker
            ++i;
            prev_was_token_char = false;
            continue;
        }
        if (is_token_char(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
            prev_was_token_char = true;
        } else {
            if (!current.empty()) { tokens.push_back(current); current.clear(); }
            prev_was_token_char = false;
        }
        ++i;
    }
    if (!current.empty()) tokens.push_back(current);
    return tokens;
}

std::string to_json_line(const Document& doc) {
    nlohmann::json j;
    j["id"] = doc.id;
    j["timestamp"] = doc.timestamp;
    j["source"] = doc.source;
    j["text"] = doc.text;
    return j.dump();
}

JsonlReader::JsonlReader(const std::string& path) : path_(path), in_(path) {
    if (!in_) throw std::runtime_error("cannot open corpus file: " + path);
}

std::optional<Document> JsonlReader::next() {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_no_;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        const std::string where = path_ + ":" + std::to_string(line_no_);
        if (j.is_discarded()) throw std::runtime_error("malformed JSON at " + where);
        if (!j.is_object()) throw std::runtime_error("expected JSON object at " + where);
        for (const char* key : {"id", "timestamp", "source", "text"}) {
            if (!j.contains(key)) {
                throw std::runtime_error("missing key \"" + std::string(key) + "\" at " + where);
            }
        }
        if (!j["id"].is_string() || !j["source"].is_string() || !j["text"].is_string() ||
            !j["timestamp"].is_number_integer()) {
            throw std::runtime_error("bad field type at " + where);
        }

        Document doc;
        doc.id = j["id"].get<std::string>();
        doc.timestamp = j["timestamp"].get<std::int64_t>();
        doc.source = j["source"].get<std::string>();
        doc.text = j["text"].get<std::string>();
        if (doc.timestamp < 0) throw std::runtime_error("negative timestamp at " + where);
        if (!seen_ids_.insert(doc.id).second) {
            throw std::runtime_error("duplicate document id \"" + doc.id + "\" in " + path_);
        }
        doc.tokens = tokenize(doc.text);
        ++count_;
        return doc;
    }
    return std::nullopt;
}

std::vector<Document> load_jsonl(const std::string& path) {
    JsonlReader reader(path);
    std::vector<Document> docs;
    while (auto doc = reader.next()) docs.push_back(std::move(*doc));
    return docs;
}

VerticalConfig::VerticalConfig(std::map<std::string, std::vector<std::string>> verticals,
                               std::optional<std::string> default_vertical)
    : verticals_(std::move(verticals)), default_vertical_(std::move(default_vertical)) {
    for (const auto& [name, sources] : verticals_) {
        if (name.empty()) throw std::runtime_error("empty vertical name");
        for (const auto& src : sources) {
            auto [it, inserted] = source_to_vertical_.emplace(src, name);
            if (!inserted && it->second != name) {
                throw std::runtime_error("source \"" + src + "\" mapped to both \"" +
                                         it->second + "\" and \"" + name + "\"");
            }
        }
    }
}

VerticalConfig VerticalConfig::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    std::map<std::string, std::vector<std::string>> verticals;
    for (const auto& [name, sources] : j.at("verticals").items()) {
        verticals[name] = sources.get<std::vector<std::string>>();
    }
    std::optional<std::string> def;
    if (j.contains("default") && !j["default"].is_null()) {
        def = j["default"].get<std::string>();
    }
    return VerticalConfig(std::move(verticals), std::move(def));
}

VerticalConfig VerticalConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open vertical config: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

const std::string& VerticalConfig::assign(const Document& doc) const {
    auto it = source_to_vertical_.find(doc.source);
    if (it != source_to_vertical_.end()) return it->second;
    if (default_vertical_) return *default_vertical_;
    throw std::runtime_error("source \"" + doc.source + "\" has no vertical and no default is set");
}

std::vector<std::string> VerticalConfig::vertical_names() const {
    std::vector<std::string> names;
    names.reserve(verticals_.size());
    for (const auto& [name, _] : verticals_) names.push_back(name);
    if (default_vertical_ && !verticals_.contains(*default_vertical_)) {
        names.push_back(*default_vertical_);
        std::sort(names.begin(), names.end());
    }
    return names;
}

const std::set<std::string>& stopwords() {
    static const std::set<std::string> words = {
        "a",     "about", "above",  "after",   "again",   "against", "all",    "am",
        "an",    "and",   "any",    "are",     "as",      "at",      "be",     "because",
        "been",  "before","being",  "below",   "between", "both",    "but",    "by",
        "can",   "could", "did",    "do",      "does",    "doing",   "down",   "during",
        "each",  "few",   "for",    "from",    "further", "had",     "has",    "have",
        "having","he",    "her",    "here",    "hers",    "herself", "him",    "himself",
        "his",   "how",   "i",      "if",      "in",      "into",    "is",     "it",
        "its",   "itself","just",   "me",      "more",    "most",    "my",     "myself",
        "no",    "nor",   "not",    "now",     "of",      "off",     "on",     "once",
        "only",  "or",    "other",  "our",     "ours",    "ourselves","out",   "over",
        "own",   "rt",    "same",   "she",     "should",  "so",      "some",   "such",
        "than",  "that",  "the",    "their",   "theirs",  "them",    "themselves",
        "then",  "there", "these",  "they",    "this",    "those",   "through","to",
        "too",   "under", "until",  "up",      "very",    "was",     "we",     "were",
        "what",  "when",  "where",  "which",   "while",   "who",     "whom",   "why",
        "will",  "with",  "would",  "you",     "your",    "yours",   "yourself",
        "yourselves",
    };
    return words;
}

}  // namespace fedprf
