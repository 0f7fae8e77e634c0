#include <doctest.h>

#include <cmath>
#include <random>

#include "fedprf/reference.hpp"
#include "fedprf/relevance.hpp"
#include "support/synth.hpp"

using namespace fedprf;

namespace {

Document make_doc(std::string id, std::vector<std::string> tokens) {
    Document doc;
    doc.id = std::move(id);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) doc.text += ' ';
        doc.text += tokens[i];
    }
    doc.tokens = std::move(tokens);
    return doc;
}

FeedbackSet feedback_over(const InvertedIndex& idx, std::vector<double> scores) {
    FeedbackSet fb;
    for (std::uint32_t ref = 0; ref < idx.doc_count(); ++ref) {
        fb.push_back({&idx, ref, idx.doc(ref).ordinal, scores[ref]});
    }
    std::sort(fb.begin(), fb.end(), [](const FeedbackDoc& a, const FeedbackDoc& b) {
        if (a.log_score != b.log_score) return a.log_score > b.log_score;
        return a.ordinal < b.ordinal;
    });
    return fb;
}

double weight_of(const QueryModel& q, const std::string& term) {
    for (const auto& [t, w] : q.terms()) {
        if (t == term) return w;
    }
    return 0.0;
}

}  // namespace

TEST_CASE("single-document RM1 is the document MLE") {
    std::vector<Document> docs{make_doc("d", {"xx", "xx", "yy"})};
    auto idx = InvertedIndex::build(docs);
    auto model = estimate_rm1(feedback_over(idx, {-1.0}), 10, {});
    CHECK(weight_of(model, "xx") == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(weight_of(model, "yy") == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("equal-scored documents contribute symmetrically") {
    std::vector<Document> docs{make_doc("d1", {"aa"}), make_doc("d2", {"bb"})};
    auto idx = InvertedIndex::build(docs);
    auto model = estimate_rm1(feedback_over(idx, {-2.0, -2.0}), 10, {});
    CHECK(weight_of(model, "aa") == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(weight_of(model, "bb") == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("RM1 matches a hand-computed double sum for unequal scores") {
    std::vector<Document> docs{
        make_doc("d1", {"aa", "bb"}),
        make_doc("d2", {"bb", "bb", "cc"}),
        make_doc("d3", {"cc"}),
    };
    auto idx = InvertedIndex::build(docs);
    const std::vector<double> scores{-1.0, -2.0, -4.0};
    auto model = estimate_rm1(feedback_over(idx, scores), 10, {});

    // Direct computation of sum_d p(w|d) softmax(score_d).
    double e1 = std::exp(scores[0]), e2 = std::exp(scores[1]), e3 = std::exp(scores[2]);
    const double z = e1 + e2 + e3;
    const double wa = (1.0 / 2.0) * e1 / z;
    const double wb = (1.0 / 2.0) * e1 / z + (2.0 / 3.0) * e2 / z;
    const double wc = (1.0 / 3.0) * e2 / z + 1.0 * e3 / z;
    const double total = wa + wb + wc;
    CHECK(weight_of(model, "aa") == doctest::Approx(wa / total).epsilon(1e-12));
    CHECK(weight_of(model, "bb") == doctest::Approx(wb / total).epsilon(1e-12));
    CHECK(weight_of(model, "cc") == doctest::Approx(wc / total).epsilon(1e-12));
}

TEST_CASE("RM1 weights are invariant to shifting all log-scores") {
    auto corpus = synth::random_corpus(30, 15, 3, 321);
    auto idx = InvertedIndex::build(corpus);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> score(-8.0, -1.0);
    std::vector<double> scores;
    for (std::uint32_t i = 0; i < idx.doc_count(); ++i) scores.push_back(score(rng));
    auto base = estimate_rm1(feedback_over(idx, scores), 20, stopwords());

    std::vector<double> shifted(scores);
    for (auto& s : shifted) s += 123.456;
    auto moved = estimate_rm1(feedback_over(idx, shifted), 20, stopwords());

    REQUIRE(base.terms().size() == moved.terms().size());
    for (std::size_t i = 0; i < base.terms().size(); ++i) {
        CHECK(base.terms()[i].first == moved.terms()[i].first);
        CHECK(base.terms()[i].second ==
              doctest::Approx(moved.terms()[i].second).epsilon(1e-9));
    }
}

TEST_CASE("RM1 filters stopwords and short terms, truncates, renormalizes") {
    std::vector<Document> docs{make_doc("d", {"the", "a", "nasa", "nasa", "mars", "x"})};
    auto idx = InvertedIndex::build(docs);
    auto model = estimate_rm1(feedback_over(idx, {-1.0}), 1, stopwords());
    REQUIRE(model.terms().size() == 1);
    CHECK(model.terms()[0].first == "nasa");
    CHECK(model.terms()[0].second == doctest::Approx(1.0));

    std::vector<Document> only_stop{make_doc("d", {"the", "a"})};
    auto idx2 = InvertedIndex::build(only_stop);
    CHECK_THROWS_WITH_AS(estimate_rm1(feedback_over(idx2, {-1.0}), 5, stopwords()),
                         doctest::Contains("empty expansion model"), std::runtime_error);
}

TEST_CASE("interpolation endpoints reproduce the inputs exactly") {
    auto orig = QueryModel::uniform({"q1", "q2"});
    auto exp = QueryModel::from_weights({{"q1", 0.5}, {"e1", 0.5}});

    auto at0 = interpolate(orig, exp, 0.0);
    REQUIRE(at0.terms().size() == orig.terms().size());
    for (std::size_t i = 0; i < orig.terms().size(); ++i) {
        CHECK(at0.terms()[i].first == orig.terms()[i].first);
        CHECK(at0.terms()[i].second == orig.terms()[i].second);
    }

    auto at1 = interpolate(orig, exp, 1.0);
    REQUIRE(at1.terms().size() == exp.terms().size());
    for (std::size_t i = 0; i < exp.terms().size(); ++i) {
        CHECK(at1.terms()[i].first == exp.terms()[i].first);
        CHECK(at1.terms()[i].second == exp.terms()[i].second);
    }
}

TEST_CASE("interpolation midpoint arithmetic") {
    auto orig = QueryModel::from_weights({{"a", 1.0}});
    auto exp = QueryModel::from_weights({{"a", 0.5}, {"b", 0.5}});
    auto mixed = interpolate(orig, exp, 0.5);
    CHECK(weight_of(mixed, "a") == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(weight_of(mixed, "b") == doctest::Approx(0.25).epsilon(1e-12));
    double sum = 0.0;
    for (const auto& [_, w] : mixed.terms()) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("lambda=0 expansion reproduces the no-feedback ranking") {
    auto corpus = synth::random_corpus(120, 25, 3, 555);
    auto idx = InvertedIndex::build(corpus);
    auto q = QueryModel::uniform({"w3", "w5"});

    ExpansionParams params;
    params.lambda = 0.0;
    params.feedback_docs = 10;
    MonolithicFeedback source(idx, "self");
    auto run = expand_and_rerun(q, source, idx, params, 50);

    PostingsCounter counter;
    auto baseline = idx.retrieve_topk(q, 50, params.mu, counter);
    REQUIRE(run.ranking.size() == baseline.size());
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        CHECK(run.ranking[i].doc == baseline[i].doc);
        CHECK(run.ranking[i].score == baseline[i].score);
    }
}

TEST_CASE("expansion pipeline equals the straight-line reference") {
    auto corpus = synth::random_corpus(150, 30, 3, 4242);
    auto idx = InvertedIndex::build(corpus);
    ExpansionParams params;
    params.feedback_docs = 15;
    params.num_terms = 10;

    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        auto q = QueryModel::uniform(synth::random_query(30, 3, rng));
        MonolithicFeedback source(idx, "self");
        auto run = expand_and_rerun(q, source, idx, params, 40);
        auto ref = reference::prf_pipeline_serial(q, idx, idx, params, 40);

        REQUIRE(run.final_query.terms().size() == ref.final_query.terms().size());
        for (std::size_t i = 0; i < ref.final_query.terms().size(); ++i) {
            CHECK(run.final_query.terms()[i].first == ref.final_query.terms()[i].first);
            CHECK(run.final_query.terms()[i].second ==
                  doctest::Approx(ref.final_query.terms()[i].second).epsilon(1e-12));
        }
        REQUIRE(run.ranking.size() == ref.ranking.size());
        for (std::size_t i = 0; i < ref.ranking.size(); ++i) {
            CHECK(run.ranking[i].doc == ref.ranking[i].doc);
            CHECK(run.ranking[i].score == doctest::Approx(ref.ranking[i].score).epsilon(1e-12));
        }
    }
}

TEST_CASE("expansion from a one-document external index stays within its support") {
    std::vector<Document> external{make_doc("e1", {"mars", "rover", "landing"})};
    auto ext = InvertedIndex::build(external);
    auto corpus = synth::random_corpus(60, 20, 3, 31);
    auto target = InvertedIndex::build(corpus);

    ExpansionParams params;
    auto q = QueryModel::uniform({"rover", "w4"});
    MonolithicFeedback source(ext, "external");
    auto run = expand_and_rerun(q, source, target, params, 20);
    for (const auto& [term, _] : run.final_query.terms()) {
        const bool in_query = term == "rover" || term == "w4";
        const bool in_doc = term == "mars" || term == "rover" || term == "landing";
        CHECK((in_query || in_doc));
    }
}

TEST_CASE("empty feedback falls back to the original query") {
    std::vector<Document> external{make_doc("e1", {"unrelated", "words"})};
    auto ext = InvertedIndex::build(external);
    auto corpus = synth::random_corpus(50, 20, 3, 32);
    auto target = InvertedIndex::build(corpus);

    auto q = QueryModel::uniform({"w2"});
    ExpansionParams params;
    MonolithicFeedback source(ext, "external");
    auto run = expand_and_rerun(q, source, target, params, 20);
    CHECK(run.fell_back);
    REQUIRE(run.final_query.terms().size() == 1);
    CHECK(run.final_query.terms()[0].first == "w2");

    PostingsCounter counter;
    auto baseline = target.retrieve_topk(q, 20, params.mu, counter);
    REQUIRE(run.ranking.size() == baseline.size());
    for (std::size_t i = 0; i < baseline.size(); ++i) CHECK(run.ranking[i].doc == baseline[i].doc);
}

TEST_CASE("clrm re-ranks exactly the initial documents") {
    auto corpus = synth::random_corpus(100, 22, 3, 64);
    auto idx = InvertedIndex::build(corpus);
    auto q = QueryModel::uniform({"w1", "w2"});
    PostingsCounter counter;
    auto initial = idx.retrieve_topk(q, 30, 2500.0, counter);
    REQUIRE(!initial.empty());

    SUBCASE("identity query keeps the order") {
        auto rescored = clrm_rerank(initial, q, idx, 2500.0);
        REQUIRE(rescored.size() == initial.size());
        for (std::size_t i = 0; i < initial.size(); ++i) {
            CHECK(rescored[i].doc == initial[i].doc);
            CHECK(rescored[i].score == doctest::Approx(initial[i].score).epsilon(1e-12));
        }
    }

    SUBCASE("an arbitrary expanded query preserves the document set") {
        auto expanded = QueryModel::from_weights({{"w1", 0.3}, {"w9", 0.4}, {"w7", 0.3}});
        auto rescored = clrm_rerank(initial, expanded, idx, 2500.0);
        REQUIRE(rescored.size() == initial.size());
        std::set<std::uint32_t> before, after;
        for (const auto& sd : initial) before.insert(sd.doc);
        for (const auto& sd : rescored) after.insert(sd.doc);
        CHECK(before == after);
    }
}

TEST_CASE("clrm misses documents that only the re-retrieval can reach") {
    // X contains only expansion terms, so the initial retrieval for "q0"
    // cannot see it while full re-retrieval ranks it first.
    std::vector<Document> docs{
        make_doc("f1", {"q0", "ee", "ee", "ee"}),
        make_doc("f2", {"q0"}),
        make_doc("xx", {"ee", "ee", "ee", "ee", "ee"}),
    };
    auto idx = InvertedIndex::build(docs);
    auto q = QueryModel::uniform({"q0"});
    ExpansionParams params;
    params.feedback_docs = 2;
    params.num_terms = 5;

    MonolithicFeedback source(idx, "self");
    auto prf = expand_and_rerun(q, source, idx, params, 3);
    bool prf_found = false;
    for (const auto& sd : prf.ranking) prf_found |= idx.doc(sd.doc).id == "xx";
    CHECK(prf_found);

    PostingsCounter counter;
    auto initial = idx.retrieve_topk(q, 3, params.mu, counter);
    auto clrm = clrm_rerank(initial, prf.final_query, idx, params.mu);
    for (const auto& sd : clrm) CHECK(idx.doc(sd.doc).id != "xx");
}

TEST_CASE("expansion models are probability distributions") {
    std::mt19937_64 rng(404);
    auto corpus = synth::random_corpus(40, 18, 3, 88);
    auto idx = InvertedIndex::build(corpus);
    std::uniform_real_distribution<double> score(-9.0, -0.5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> scores;
        for (std::uint32_t i = 0; i < idx.doc_count(); ++i) scores.push_back(score(rng));
        auto model = estimate_rm1(feedback_over(idx, scores), 20, stopwords());
        double sum = 0.0;
        for (const auto& [_, w] : model.terms()) {
            CHECK(w > 0.0);
            sum += w;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}
