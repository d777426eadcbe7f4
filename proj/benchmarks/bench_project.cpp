#include "meg/metagraph.hpp"

#include "testutil.hpp"

#include <benchmark/benchmark.h>

namespace {

/// Bipartite author/paper network with citations, sized by the state range.
meg::HeterogeneousNetwork scaled_hin(int anchors) {
    std::mt19937_64 rng(42);
    meg::HeterogeneousNetwork hin;
    int a = hin.add_type("A"), p = hin.add_type("P");
    hin.declare_relation("writes", a, p);
    hin.declare_relation("cites", p, p);
    int papers = anchors * 2;
    for (int i = 0; i < anchors; ++i) hin.add_vertex("a" + std::to_string(i), a);
    for (int i = 0; i < papers; ++i) hin.add_vertex("p" + std::to_string(i), p);
    std::uniform_int_distribution<int> paper(0, papers - 1);
    for (int i = 0; i < anchors; ++i)
        for (int d = 0; d < 4; ++d)
            hin.add_edge("a" + std::to_string(i), "p" + std::to_string(paper(rng)), "writes");
    for (int i = 0; i < papers; ++i)
        for (int d = 0; d < 3; ++d) {
            int j = paper(rng);
            if (j != i)
                hin.add_edge("p" + std::to_string(std::min(i, j)),
                             "p" + std::to_string(std::max(i, j)), "cites");
        }
    return hin;
}

void BM_ProjectChain(benchmark::State& state) {
    meg::HeterogeneousNetwork hin = scaled_hin(static_cast<int>(state.range(0)));
    meg::MetaGraph mg = meg::parse_metagraph(hin, "A-P-P-A");
    for (auto _ : state) {
        meg::ProjectedNetwork pn = meg::project(hin, mg);
        benchmark::DoNotOptimize(pn.adjacency.nonZeros());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ProjectChain)->RangeMultiplier(2)->Range(64, 1024)->Complexity();

void BM_ProjectBranch(benchmark::State& state) {
    meg::HeterogeneousNetwork hin = scaled_hin(static_cast<int>(state.range(0)));
    meg::MetaGraph mg = meg::parse_metagraph(hin, "A-(P|P-P)-A");
    for (auto _ : state) {
        meg::ProjectedNetwork pn = meg::project(hin, mg);
        benchmark::DoNotOptimize(pn.adjacency.nonZeros());
    }
}
BENCHMARK(BM_ProjectBranch)->RangeMultiplier(2)->Range(64, 512);

void BM_ProjectBruteforce(benchmark::State& state) {
    meg::HeterogeneousNetwork hin = scaled_hin(static_cast<int>(state.range(0)));
    meg::MetaGraph mg = meg::parse_metagraph(hin, "A-P-A");
    meg::ProjectOptions options;
    options.budget_per_pair = 1e6;
    for (auto _ : state) {
        meg::ProjectedNetwork pn = meg::project_bruteforce(hin, mg, options);
        benchmark::DoNotOptimize(pn.adjacency.nonZeros());
    }
}
BENCHMARK(BM_ProjectBruteforce)->RangeMultiplier(2)->Range(16, 128);

}  // namespace
