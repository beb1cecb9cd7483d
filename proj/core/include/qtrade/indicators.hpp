#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "qtrade/prices.hpp"

namespace qtrade {

/// Exponential moving average with smoothing factor k = 2/(period+1),
/// seeded at the first value: out[0] = v[0], out[i] = out[i-1] + k*(v[i]-out[i-1]).
/// Throws DomainError on period == 0, InsufficientDataError on empty input.
std::vector<double> ema(std::span<const double> values, int period);

/// Trend indicator: slow EMA minus fast EMA of the closes
/// (26-period minus 12-period). Note the sign: this engine keeps the
/// slow-minus-fast convention, the reverse of the common 12-26 form.
std::vector<double> macd(std::span<const double> closes, int slow_period = 26,
                         int fast_period = 12);

/// Indicator values aligned with their input sequence. Entries before
/// `first_valid` are warm-up padding and must not be consumed.
struct IndicatorSeries {
    std::vector<double> values;
    std::size_t first_valid = 0;
};

/// Wilder-smoothed relative strength index in [0, 100]. Entry i uses
/// closes[0..=i]; the first `period` entries are unavailable. A window with
/// neither gains nor losses yields the neutral 50.
/// Throws InsufficientDataError when closes.size() <= period.
IndicatorSeries rsi(std::span<const double> closes, int period = 14);

/// Momentum oscillator in [-100, 0] locating each close within the trailing
/// `period`-bar high-low range. Degenerate windows (highest high == lowest
/// low) yield 0. Throws InsufficientDataError when bars.size() < period.
IndicatorSeries williams_r(std::span<const Bar> bars, int period = 14);

/// Signed body-to-range ratio in [-1, 1]: sign(close-open) * |close-open| /
/// (high-low), 0 for a zero-range bar.
double weighted_bar_direction(const Bar& bar);

/// Per bar, the high-low spread of the most recent earlier UTC calendar day
/// that has data. Unavailable until a previous day exists.
IndicatorSeries hl_range(std::span<const Bar> bars);

/// Cyclical encoding of an instant: (sin, cos) of the day-of-week angle
/// (Monday = 0) followed by (sin, cos) of the time-of-day angle.
std::array<double, 4> encode_timestamp(Instant t);

}  // namespace qtrade
