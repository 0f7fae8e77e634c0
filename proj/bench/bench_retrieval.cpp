// Throughput comparison: postings-driven parallel retrieval vs the serial
// exhaustive reference, plus the broker fan-out. Wall-clock numbers are
// informational; correctness is asserted by comparing the two rankings.

#include <cstdio>
#include <random>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>

#include "fedprf/federation.hpp"
#include "fedprf/reference.hpp"
#include "support/synth.hpp"

using namespace fedprf;

namespace {

double now_seconds() {
#ifdef _OPENMP
    return omp_get_wtime();
#else
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
#endif
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t docs = 60000;
    std::size_t queries = 60;
    if (argc > 1) docs = static_cast<std::size_t>(std::atoll(argv[1]));
    if (argc > 2) queries = static_cast<std::size_t>(std::atoll(argv[2]));

#ifdef _OPENMP
    std::printf("openmp enabled, max threads = %d\n", omp_get_max_threads());
#else
    std::printf("openmp disabled (serial build)\n");
#endif

    std::printf("generating %zu documents...\n", docs);
    auto corpus = synth::random_corpus(docs, 500, 9, 4242);
    auto index = InvertedIndex::build(corpus);
    auto vs = VerticalSet::build(corpus, synth::round_robin_config(9, 9));
    std::printf("index: %u docs, %lld tokens, %zu terms\n", index.doc_count(),
                static_cast<long long>(index.total_tokens()), index.terms().size());

    std::mt19937_64 rng(7);
    std::vector<QueryModel> query_set;
    for (std::size_t i = 0; i < queries; ++i) {
        query_set.push_back(QueryModel::uniform(synth::random_query(500, 4, rng)));
    }

    // Warm both paths and verify they agree before timing anything.
    for (std::size_t i = 0; i < 3 && i < query_set.size(); ++i) {
        PostingsCounter c1, c2;
        auto fast = index.retrieve_topk(query_set[i], 100, 2500.0, c1);
        auto slow = reference::retrieve_topk_serial(query_set[i], index, 100, 2500.0, c2);
        if (fast.size() != slow.size()) {
            std::printf("MISMATCH: kernel and reference disagree\n");
            return 1;
        }
        for (std::size_t r = 0; r < fast.size(); ++r) {
            if (fast[r].doc != slow[r].doc) {
                std::printf("MISMATCH at rank %zu\n", r);
                return 1;
            }
        }
    }

    double t0 = now_seconds();
    std::int64_t accessed = 0;
    for (const auto& q : query_set) {
        PostingsCounter counter;
        auto top = index.retrieve_topk(q, 1000, 2500.0, counter);
        accessed += counter.accessed;
    }
    const double kernel_s = now_seconds() - t0;

    t0 = now_seconds();
    for (const auto& q : query_set) {
        PostingsCounter counter;
        auto top = reference::retrieve_topk_serial(q, index, 1000, 2500.0, counter);
    }
    const double reference_s = now_seconds() - t0;

    SelectionResult all;
    all.verticals = vs.names();
    t0 = now_seconds();
    for (const auto& q : query_set) {
        std::vector<VerticalRetrievalCost> costs;
        auto fb = vertical_feedback(q, vs, all, 50, 2500.0, costs);
    }
    const double fanout_s = now_seconds() - t0;

    std::printf("\n%-28s %10s %14s\n", "path", "seconds", "queries/sec");
    std::printf("%-28s %10.3f %14.1f\n", "parallel postings kernel", kernel_s,
                queries / kernel_s);
    std::printf("%-28s %10.3f %14.1f\n", "serial exhaustive reference", reference_s,
                queries / reference_s);
    std::printf("%-28s %10.3f %14.1f\n", "9-vertical fan-out (k=50)", fanout_s,
                queries / fanout_s);
    std::printf("\nspeedup kernel vs reference: %.2fx (avg %.0f postings/query)\n",
                reference_s / kernel_s, static_cast<double>(accessed) / queries);
    return 0;
}
