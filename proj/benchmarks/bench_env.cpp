#include <benchmark/benchmark.h>

#include "qtrade/env.hpp"
#include "qtrade/rng.hpp"

namespace {

qtrade::PriceSeries random_walk(std::size_t n, std::uint64_t seed) {
    qtrade::Rng rng(seed);
    std::vector<qtrade::PricePoint> points;
    points.reserve(n);
    double price = 100.0;
    const auto start = qtrade::parse_timestamp("2018-01-01T00:00:00Z");
    for (std::size_t i = 0; i < n; ++i) {
        price *= 1.0 + 0.01 * (rng.uniform() - 0.5);
        points.push_back({start + std::chrono::days(static_cast<long>(i)), price});
    }
    return qtrade::PriceSeries::from_points(std::move(points));
}

void BM_EnvStep(benchmark::State& state) {
    const auto series = random_walk(2000, 11);
    qtrade::TradingEnv env(series, std::chrono::seconds(86400), {}, 30, {});
    qtrade::Rng rng(3);

    qtrade::EnvState s = env.reset();
    for (auto _ : state) {
        if (!env.can_step(s.t)) s = env.reset();
        auto res = env.step(s, static_cast<qtrade::Action>(rng.uniform_int(3)));
        benchmark::DoNotOptimize(res.immediate_reward);
        s = res.next_state;
    }
}
BENCHMARK(BM_EnvStep);

}  // namespace
