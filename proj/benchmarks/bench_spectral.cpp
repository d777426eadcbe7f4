#include "meg/spectral.hpp"

#include "testutil.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_SpectrumLeading(benchmark::State& state) {
    std::mt19937_64 rng(7);
    meg::ProjectedNetwork pn =
        megtest::random_connected_graph(rng, static_cast<int>(state.range(0)), 8.0 / state.range(0));
    for (auto _ : state) {
        meg::Spectrum s = meg::spectrum(pn, 16);
        benchmark::DoNotOptimize(s.eigenvalues.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SpectrumLeading)->RangeMultiplier(2)->Range(128, 2048)->Complexity()
    ->Unit(benchmark::kMillisecond);

void BM_SpectrumFull(benchmark::State& state) {
    std::mt19937_64 rng(7);
    meg::ProjectedNetwork pn = megtest::random_graph(rng, static_cast<int>(state.range(0)), 0.1);
    meg::LaplacianResult lap = meg::normalized_laplacian(pn);
    for (auto _ : state) {
        meg::Spectrum s = meg::spectrum(pn, static_cast<int>(lap.matrix.rows()));
        benchmark::DoNotOptimize(s.eigenvalues.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SpectrumFull)->RangeMultiplier(2)->Range(64, 512)->Complexity()
    ->Unit(benchmark::kMillisecond);

void BM_ExtendSpectrum(benchmark::State& state) {
    std::mt19937_64 rng(9);
    meg::ProjectedNetwork pn = megtest::random_connected_graph(rng, 512, 0.02);
    meg::Spectrum base = meg::spectrum(pn, 16);
    for (auto _ : state) {
        meg::Spectrum grown = meg::extend_spectrum(pn, base, static_cast<int>(state.range(0)));
        benchmark::DoNotOptimize(grown.eigenvalues.data());
    }
}
BENCHMARK(BM_ExtendSpectrum)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

}  // namespace
