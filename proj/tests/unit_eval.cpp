#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "fedprf/eval.hpp"

using namespace fedprf;

namespace {

Qrels simple_qrels() {
    Qrels q;
    q.add("t1", "d1", 1);
    q.add("t1", "d2", 2);
    q.add("t1", "d3", 0);
    return q;
}

// Straight-off-the-definition oracles used by the property checks.
double ap_oracle(const std::vector<std::string>& ranking, const Qrels& qrels,
                 const std::string& topic, std::size_t depth) {
    std::size_t total = qrels.relevant_count(topic);
    if (total == 0) return 0.0;
    double sum = 0.0;
    std::size_t seen_rel = 0;
    for (std::size_t i = 0; i < ranking.size() && i < depth; ++i) {
        if (qrels.grade(topic, ranking[i]) > 0) {
            ++seen_rel;
            double precision_here =
                static_cast<double>(seen_rel) / static_cast<double>(i + 1);
            sum += precision_here;
        }
    }
    return sum / static_cast<double>(total);
}

double dcg_oracle(const std::vector<int>& grades, std::size_t k) {
    double dcg = 0.0;
    for (std::size_t i = 0; i < grades.size() && i < k; ++i) {
        dcg += (std::pow(2.0, grades[i]) - 1.0) / (std::log(i + 2.0) / std::log(2.0));
    }
    return dcg;
}

}  // namespace

TEST_CASE("perfect ranking has AP 1") {
    auto qrels = simple_qrels();
    std::vector<std::string> ranking{"d2", "d1", "d3", "d9"};
    CHECK(average_precision(ranking, qrels, "t1") == doctest::Approx(1.0));
}

TEST_CASE("single relevant doc at rank 2 of R=1 gives AP 0.5") {
    Qrels qrels;
    qrels.add("t", "rel", 1);
    std::vector<std::string> ranking{"junk", "rel"};
    CHECK(average_precision(ranking, qrels, "t") == doctest::Approx(0.5));
}

TEST_CASE("metrics reject unknown topics") {
    auto qrels = simple_qrels();
    std::vector<std::string> ranking{"d1"};
    CHECK_THROWS_AS(average_precision(ranking, qrels, "nope"), std::runtime_error);
    CHECK_THROWS_AS(ndcg_at_k(ranking, qrels, "nope"), std::runtime_error);
    CHECK_THROWS_AS(recall_at_depth(ranking, qrels, "nope"), std::runtime_error);
}

TEST_CASE("ndcg of the ideal ordering is 1") {
    auto qrels = simple_qrels();
    std::vector<std::string> ranking{"d2", "d1"};
    CHECK(ndcg_at_k(ranking, qrels, "t1", 30) == doctest::Approx(1.0));
}

TEST_CASE("ndcg is 0 without relevant judgments") {
    Qrels qrels;
    qrels.add("t", "d1", 0);
    std::vector<std::string> ranking{"d1", "d2"};
    CHECK(ndcg_at_k(ranking, qrels, "t", 30) == doctest::Approx(0.0));
}

TEST_CASE("graded ndcg hand computation") {
    Qrels qrels;
    qrels.add("t", "a", 2);
    qrels.add("t", "b", 0);
    qrels.add("t", "c", 1);
    std::vector<std::string> ranking{"a", "b", "c"};
    const double dcg = 3.0 / 1.0 + 0.0 + 1.0 / 2.0;  // log2(2)=1, log2(4)=2
    const double idcg = 3.0 / 1.0 + 1.0 / (std::log(3.0) / std::log(2.0));
    CHECK(ndcg_at_k(ranking, qrels, "t", 3) == doctest::Approx(dcg / idcg).epsilon(1e-12));
}

TEST_CASE("recall counts relevant docs inside the depth") {
    Qrels qrels;
    qrels.add("t", "r1", 1);
    qrels.add("t", "r2", 2);
    std::vector<std::string> all{"r1", "r2"};
    CHECK(recall_at_depth(all, qrels, "t") == doctest::Approx(1.0));
    std::vector<std::string> half{"r1", "x"};
    CHECK(recall_at_depth(half, qrels, "t") == doctest::Approx(0.5));
    CHECK(recall_at_depth(all, qrels, "t", 1) == doctest::Approx(0.5));
}

TEST_CASE("metrics agree with brute-force oracles on random rankings") {
    std::mt19937_64 rng(31337);
    std::uniform_int_distribution<int> grade(0, 2);
    std::uniform_int_distribution<std::size_t> pool(0, 39);

    for (int trial = 0; trial < 300; ++trial) {
        Qrels qrels;
        std::vector<int> doc_grade(40, 0);
        for (std::size_t d = 0; d < 40; ++d) {
            doc_grade[d] = grade(rng);
            qrels.add("t", "doc" + std::to_string(d), doc_grade[d]);
        }
        std::vector<std::string> ranking;
        std::set<std::size_t> used;
        std::vector<int> ranked_grades;
        while (ranking.size() < 25) {
            const auto d = pool(rng);
            if (!used.insert(d).second) continue;
            ranking.push_back("doc" + std::to_string(d));
            ranked_grades.push_back(doc_grade[d]);
        }

        CHECK(average_precision(ranking, qrels, "t", 1000) ==
              doctest::Approx(ap_oracle(ranking, qrels, "t", 1000)).epsilon(1e-12));

        auto ideal = doc_grade;
        std::sort(ideal.begin(), ideal.end(), std::greater<>());
        const double idcg = dcg_oracle(ideal, 30);
        const double expected = idcg == 0.0 ? 0.0 : dcg_oracle(ranked_grades, 30) / idcg;
        CHECK(ndcg_at_k(ranking, qrels, "t", 30) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("permuting the non-relevant tail leaves AP unchanged") {
    Qrels qrels;
    qrels.add("t", "r1", 1);
    qrels.add("t", "r2", 1);
    std::vector<std::string> base{"r1", "x1", "r2", "x2", "x3", "x4"};
    std::vector<std::string> permuted{"r1", "x1", "r2", "x4", "x2", "x3"};
    CHECK(average_precision(base, qrels, "t") ==
          doctest::Approx(average_precision(permuted, qrels, "t")).epsilon(1e-15));
}

TEST_CASE("qrels parse and validate") {
    const auto path = (std::filesystem::temp_directory_path() / "fedprf.qrels").string();
    {
        std::ofstream out(path);
        out << "q1 0 docA 1\n"
               "q1 0 docB 0\n"
               "\n"
               "q2 0 docA 2\n";
    }
    auto qrels = Qrels::parse_file(path);
    CHECK(qrels.grade("q1", "docA") == 1);
    CHECK(qrels.grade("q1", "docB") == 0);
    CHECK(qrels.grade("q2", "docA") == 2);
    CHECK(qrels.grade("q2", "missing") == 0);
    CHECK(qrels.relevant_count("q1") == 1);
    CHECK(qrels.topics() == std::vector<std::string>{"q1", "q2"});

    {
        std::ofstream out(path);
        out << "q1 0 docA 7\n";
    }
    CHECK_THROWS_AS(Qrels::parse_file(path), std::runtime_error);
}

TEST_CASE("topics parse from JSON lines") {
    const auto path = (std::filesystem::temp_directory_path() / "fedprf.topics").string();
    {
        std::ofstream out(path);
        out << R"({"id":"q1","query":"mars landing","timestamp":1360000000})" << "\n";
        out << R"({"id":5,"query":"pope resigns","timestamp":1360500000})" << "\n";
    }
    auto topics = load_topics(path);
    REQUIRE(topics.size() == 2);
    CHECK(topics[0].id == "q1");
    CHECK(topics[1].id == "5");
    CHECK(topics[1].query == "pope resigns");

    {
        std::ofstream out(path);
        out << R"({"id":"q1","query":"no timestamp"})" << "\n";
    }
    CHECK_THROWS_AS(load_topics(path), std::runtime_error);
}

TEST_CASE("run files round-trip") {
    std::vector<RunRow> rows{
        {"q1", "docA", 1, -2.5, "prf"},
        {"q1", "docB", 2, -3.75, "prf"},
        {"q2", "docC", 1, -1.25, "prf"},
    };
    const auto path = (std::filesystem::temp_directory_path() / "fedprf.run").string();
    write_run_file(path, rows);
    auto parsed = parse_run_file(path);
    REQUIRE(parsed.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(parsed[i].topic == rows[i].topic);
        CHECK(parsed[i].doc == rows[i].doc);
        CHECK(parsed[i].rank == rows[i].rank);
        CHECK(parsed[i].score == rows[i].score);
        CHECK(parsed[i].tag == rows[i].tag);
    }
}
