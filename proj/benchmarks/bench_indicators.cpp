#include <benchmark/benchmark.h>

#include <vector>

#include "qtrade/features.hpp"
#include "qtrade/indicators.hpp"
#include "qtrade/rng.hpp"

namespace {

std::vector<qtrade::Bar> random_walk_bars(std::size_t n, std::uint64_t seed) {
    qtrade::Rng rng(seed);
    std::vector<qtrade::PricePoint> points;
    points.reserve(n);
    double price = 100.0;
    const auto start = qtrade::parse_timestamp("2018-01-01T00:00:00Z");
    for (std::size_t i = 0; i < n; ++i) {
        price *= 1.0 + 0.01 * (rng.uniform() - 0.5);
        points.push_back({start + std::chrono::days(static_cast<long>(i)), price});
    }
    const auto series = qtrade::PriceSeries::from_points(std::move(points));
    return qtrade::resample_bars(series, std::chrono::seconds(86400));
}

void BM_Macd(benchmark::State& state) {
    const auto bars = random_walk_bars(static_cast<std::size_t>(state.range(0)), 7);
    std::vector<double> closes(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) closes[i] = bars[i].close;
    for (auto _ : state) benchmark::DoNotOptimize(qtrade::macd(closes));
}
BENCHMARK(BM_Macd)->Arg(1000)->Arg(10000);

void BM_Rsi(benchmark::State& state) {
    const auto bars = random_walk_bars(static_cast<std::size_t>(state.range(0)), 7);
    std::vector<double> closes(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) closes[i] = bars[i].close;
    for (auto _ : state) benchmark::DoNotOptimize(qtrade::rsi(closes, 14));
}
BENCHMARK(BM_Rsi)->Arg(1000)->Arg(10000);

void BM_FeaturePipeline(benchmark::State& state) {
    const auto bars = random_walk_bars(static_cast<std::size_t>(state.range(0)), 7);
    for (auto _ : state)
        benchmark::DoNotOptimize(qtrade::FeatureSeries::compute(bars));
}
BENCHMARK(BM_FeaturePipeline)->Arg(1000)->Arg(10000);

}  // namespace
