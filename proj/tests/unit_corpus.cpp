#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "fedprf/corpus.hpp"

using namespace fedprf;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

}  // namespace

TEST_CASE("tokenize applies the normalization rules") {
    CHECK(tokenize("").empty());
    CHECK(tokenize("Pope Benedict RESIGNS http://t.co/x #pope") ==
          std::vector<std::string>{"pope", "benedict", "resigns", "pope"});
    CHECK(tokenize("@CNN reports: Mars!") == std::vector<std::string>{"reports", "mars"});
    CHECK(tokenize("https://example.com/a?b=c only-this") ==
          std::vector<std::string>{"only", "this"});
    CHECK(tokenize("#MarsRover lands") == std::vector<std::string>{"marsrover", "lands"});
    CHECK(tokenize("@a @b_c @d9") == std::vector<std::string>{});
    CHECK(tokenize("a=b+c") == std::vector<std::string>{"a", "b", "c"});
    CHECK(tokenize("  \t\n ") == std::vector<std::string>{});
}

TEST_CASE("tokenize is deterministic") {
    const std::string text = "Some #Tagged TEXT with http://u.rl and @mention mixed in";
    CHECK(tokenize(text) == tokenize(text));
}

TEST_CASE("load_jsonl yields documents in file order") {
    const auto path = write_temp(
        "corpus_ok.jsonl",
        R"({"id":"a","timestamp":10,"source":"espn","text":"First post"})"
        "\n\n"
        R"({"id":"b","timestamp":11,"source":"cnn","text":"Second post","extra":1})"
        "\n"
        R"({"id":"c","timestamp":12,"source":"cnn","text":""})"
        "\n");
    auto docs = load_jsonl(path);
    REQUIRE(docs.size() == 3);
    CHECK(docs[0].id == "a");
    CHECK(docs[1].id == "b");
    CHECK(docs[2].id == "c");
    CHECK(docs[0].tokens == std::vector<std::string>{"first", "post"});
    CHECK(docs[2].tokens.empty());
}

TEST_CASE("load_jsonl on an empty file") {
    const auto path = write_temp("corpus_empty.jsonl", "");
    CHECK(load_jsonl(path).empty());
}

TEST_CASE("load_jsonl names the offending line") {
    const auto path = write_temp("corpus_bad.jsonl",
                                 R"({"id":"a","timestamp":1,"source":"s","text":"x"})"
                                 "\n"
                                 R"({"id":"b","source":"s","text":"x"})"
                                 "\n");
    CHECK_THROWS_WITH_AS(load_jsonl(path), doctest::Contains(":2"), std::runtime_error);
}

TEST_CASE("load_jsonl rejects duplicate ids by name") {
    const auto path = write_temp("corpus_dup.jsonl",
                                 R"({"id":"same","timestamp":1,"source":"s","text":"x"})"
                                 "\n"
                                 R"({"id":"same","timestamp":2,"source":"s","text":"y"})"
                                 "\n");
    CHECK_THROWS_WITH_AS(load_jsonl(path), doctest::Contains("same"), std::runtime_error);
}

TEST_CASE("load_jsonl rejects malformed JSON and negative timestamps") {
    const auto bad = write_temp("corpus_mal.jsonl", "{not json\n");
    CHECK_THROWS_AS(load_jsonl(bad), std::runtime_error);
    const auto neg = write_temp("corpus_neg.jsonl",
                                R"({"id":"a","timestamp":-5,"source":"s","text":"x"})"
                                "\n");
    CHECK_THROWS_AS(load_jsonl(neg), std::runtime_error);
}

TEST_CASE("documents round-trip through JSON lines") {
    const auto path = write_temp(
        "corpus_rt.jsonl",
        R"({"id":"a","timestamp":10,"source":"espn","text":"Game ON! #sports @ref http://x.y"})"
        "\n");
    auto docs = load_jsonl(path);
    REQUIRE(docs.size() == 1);
    const auto again = write_temp("corpus_rt2.jsonl", to_json_line(docs[0]) + "\n");
    auto docs2 = load_jsonl(again);
    REQUIRE(docs2.size() == 1);
    CHECK(docs2[0] == docs[0]);
}

namespace {

VerticalConfig news_config() {
    return VerticalConfig::from_json(R"({
      "verticals": {
        "sports": ["bbcsport", "sinow", "eurosport", "eurosportuktv", "sportscenter", "espn"],
        "politics": ["huffpostpol", "politico", "theeconomist", "washingtonpost", "wsj"],
        "technology": ["arstechnica", "cnet", "gizmodo", "techcrunch", "wired", "wireduk"]
      },
      "default": null
    })");
}

}  // namespace

TEST_CASE("assign_vertical maps sources to their verticals") {
    const auto cfg = news_config();
    Document doc;
    doc.source = "espn";
    CHECK(cfg.assign(doc) == "sports");
    doc.source = "politico";
    CHECK(cfg.assign(doc) == "politics");
    doc.source = "unknown";
    CHECK_THROWS_WITH_AS(cfg.assign(doc), doctest::Contains("unknown"), std::runtime_error);
}

TEST_CASE("vertical config falls back to the default vertical") {
    auto cfg = VerticalConfig::from_json(
        R"({"verticals": {"sports": ["espn"]}, "default": "general"})");
    Document doc;
    doc.source = "nytimes";
    CHECK(cfg.assign(doc) == "general");
}

TEST_CASE("a source may not appear in two verticals") {
    CHECK_THROWS_AS(VerticalConfig::from_json(
                        R"({"verticals": {"a": ["espn"], "b": ["espn"]}, "default": null})"),
                    std::runtime_error);
}

TEST_CASE("stopword list is ready for the expansion selector") {
    const auto& stop = stopwords();
    CHECK(stop.size() >= 100);
    CHECK(stop.contains("the"));
    CHECK(stop.contains("rt"));
    CHECK_FALSE(stop.contains("pope"));
}
