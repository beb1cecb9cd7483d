#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string_view>
#include <vector>

namespace qtrade {

using Instant = std::chrono::sys_seconds;

struct PricePoint {
    Instant timestamp;
    double price = 0.0;
};

/// Immutable, strictly time-sorted sequence of price points. Construction
/// validates the invariants (positive prices, strictly increasing
/// timestamps); afterwards the series is safe to share across threads.
class PriceSeries {
public:
    PriceSeries() = default;

    /// Validates and adopts the points. Throws OrderingError on
    /// non-increasing timestamps, DomainError on price <= 0.
    static PriceSeries from_points(std::vector<PricePoint> points);

    std::size_t size() const { return points_.size(); }
    bool empty() const { return points_.empty(); }
    const PricePoint& operator[](std::size_t i) const { return points_[i]; }
    const PricePoint& front() const { return points_.front(); }
    const PricePoint& back() const { return points_.back(); }

    auto begin() const { return points_.begin(); }
    auto end() const { return points_.end(); }

private:
    explicit PriceSeries(std::vector<PricePoint> points)
        : points_(std::move(points)) {}
    std::vector<PricePoint> points_;
};

/// Parses an ISO-8601 instant: `YYYY-MM-DD[T hh:mm:ss][Z|+hh:mm|-hh:mm]`.
/// A date with no time component means midnight UTC. Throws ParseError.
Instant parse_timestamp(std::string_view text);

/// Reads a `timestamp,price` CSV (header required) into a PriceSeries.
/// Errors carry 1-based line numbers; a header-only file is rejected with
/// "no data rows". Prices parse exactly to the nearest 64-bit float.
PriceSeries load_price_series(std::istream& in);
PriceSeries load_price_series(const std::filesystem::path& path);

struct Bar {
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    Instant start;
    std::chrono::seconds duration{0};
};

/// Groups points into fixed intervals aligned to the epoch. Each bar's OHLC
/// are the first/max/min/last prices of its interval; empty intervals
/// produce no bar. Throws DomainError on duration <= 0 or empty series.
std::vector<Bar> resample_bars(const PriceSeries& series,
                               std::chrono::seconds duration);

}  // namespace qtrade
