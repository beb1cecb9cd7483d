#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "qtrade/prices.hpp"
#include "qtrade/rng.hpp"

namespace testutil {

inline qtrade::Instant ts(const std::string& iso) {
    return qtrade::parse_timestamp(iso);
}

/// One point per UTC day starting 2018-01-01, prices as given.
inline qtrade::PriceSeries daily_series(const std::vector<double>& prices) {
    std::vector<qtrade::PricePoint> points;
    points.reserve(prices.size());
    const auto start = ts("2018-01-01T00:00:00Z");
    for (std::size_t i = 0; i < prices.size(); ++i)
        points.push_back(
            {start + std::chrono::days(static_cast<long>(i)), prices[i]});
    return qtrade::PriceSeries::from_points(std::move(points));
}

inline std::vector<double> random_walk(std::size_t n, std::uint64_t seed,
                                       double start = 100.0,
                                       double step = 0.02) {
    qtrade::Rng rng(seed);
    std::vector<double> prices;
    prices.reserve(n);
    double p = start;
    for (std::size_t i = 0; i < n; ++i) {
        p *= 1.0 + step * (rng.uniform() - 0.5);
        prices.push_back(p);
    }
    return prices;
}

/// Largest peak-to-trough decline by exhaustive pairing (the quadratic
/// oracle for the streaming implementation). Levels include the starting
/// capital before any step.
inline double mdd_all_pairs(const std::vector<double>& curve, double base) {
    std::vector<double> levels;
    levels.push_back(base);
    for (double c : curve) levels.push_back(base + c);
    double worst = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i)
        for (std::size_t j = i; j < levels.size(); ++j) {
            const double dd = (levels[i] - levels[j]) / levels[i];
            if (dd > worst) worst = dd;
        }
    return -100.0 * worst;
}

}  // namespace testutil
