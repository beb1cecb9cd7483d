#include <benchmark/benchmark.h>

#include <memory>

#include "qtrade/qnet.hpp"
#include "qtrade/rng.hpp"

namespace {

qtrade::FeatureWindow random_window(std::size_t w, std::uint64_t seed) {
    qtrade::Rng rng(seed);
    std::vector<std::array<double, qtrade::kFeatureCount>> rows(w);
    for (auto& row : rows)
        for (double& v : row) v = rng.uniform(0.1, 1.0);
    auto series = std::make_shared<qtrade::FeatureSeries>(
        qtrade::FeatureSeries::from_rows(std::move(rows)));
    return qtrade::build_feature_window(series, w - 1, w);
}

void BM_Forward(benchmark::State& state) {
    const qtrade::NetConfig cfg;
    const auto params = qtrade::init_params(cfg, 1);
    const auto market = random_window(static_cast<std::size_t>(state.range(0)), 5);
    const Eigen::Vector3d pos(0.2, 0.0, 0.4);
    qtrade::QNetwork net(cfg);
    for (auto _ : state) benchmark::DoNotOptimize(net.forward(params, market, pos));
}
BENCHMARK(BM_Forward)->Arg(8)->Arg(30);

void BM_ForwardBackward(benchmark::State& state) {
    const qtrade::NetConfig cfg;
    const auto params = qtrade::init_params(cfg, 1);
    const auto market = random_window(static_cast<std::size_t>(state.range(0)), 5);
    const Eigen::Vector3d pos(0.2, 0.0, 0.4);
    qtrade::QNetwork net(cfg);
    for (auto _ : state) {
        net.forward(params, market, pos);
        benchmark::DoNotOptimize(net.backward(params, {1.0, 0.0, 0.0}));
    }
}
BENCHMARK(BM_ForwardBackward)->Arg(8)->Arg(30);

}  // namespace
