#include "meg/autoencoder.hpp"

#include "testutil.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_TrainEpoch(benchmark::State& state) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    meg::GroupedMatrix g;
    auto n = static_cast<Eigen::Index>(state.range(0));
    g.data.resize(n, 64);
    for (Eigen::Index i = 0; i < g.data.size(); ++i) g.data(i / 64, i % 64) = gauss(rng);
    g.groups = {{"m1", 0, 32}, {"m2", 32, 32}};
    g.vertex_ids = megtest::index_ids(static_cast<int>(n));
    meg::PreprocessStats stats = meg::preprocess(g);

    meg::TrainConfig config;
    config.encoding_dim = 16;
    config.epochs = 1;
    config.batch_size = 128;
    for (auto _ : state) {
        meg::AutoencoderModel m = meg::train(g, stats, config);
        benchmark::DoNotOptimize(m.history.data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_TrainEpoch)->RangeMultiplier(2)->Range(256, 4096)->Complexity()
    ->Unit(benchmark::kMillisecond);

void BM_Encode(benchmark::State& state) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> gauss(0.0, 1.0);
    meg::GroupedMatrix g;
    auto n = static_cast<Eigen::Index>(state.range(0));
    g.data.resize(n, 64);
    for (Eigen::Index i = 0; i < g.data.size(); ++i) g.data(i / 64, i % 64) = gauss(rng);
    g.groups = {{"m1", 0, 64}};
    g.vertex_ids = megtest::index_ids(static_cast<int>(n));
    meg::PreprocessStats stats = meg::preprocess(g);
    meg::TrainConfig config;
    config.encoding_dim = 16;
    config.epochs = 2;
    meg::AutoencoderModel model = meg::train(g, stats, config);
    for (auto _ : state) {
        meg::CombinedEmbedding e = meg::encode(model, g);
        benchmark::DoNotOptimize(e.rows.data());
    }
}
BENCHMARK(BM_Encode)->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);

}  // namespace
