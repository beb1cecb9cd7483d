#include "qtrade/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "qtrade/errors.hpp"

namespace qtrade {

namespace {
constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();
}

std::vector<double> ema(std::span<const double> values, int period) {
    if (period < 1) throw DomainError("ema period must be >= 1");
    if (values.empty()) throw InsufficientDataError("ema needs a non-empty input");

    const double k = 2.0 / (period + 1.0);
    std::vector<double> out(values.size());
    out[0] = values[0];
    for (std::size_t i = 1; i < values.size(); ++i)
        out[i] = out[i - 1] + k * (values[i] - out[i - 1]);
    return out;
}

std::vector<double> macd(std::span<const double> closes, int slow_period,
                         int fast_period) {
    const std::vector<double> slow = ema(closes, slow_period);
    const std::vector<double> fast = ema(closes, fast_period);
    std::vector<double> out(closes.size());
    for (std::size_t i = 0; i < closes.size(); ++i) out[i] = slow[i] - fast[i];
    return out;
}

IndicatorSeries rsi(std::span<const double> closes, int period) {
    if (period < 1) throw DomainError("rsi period must be >= 1");
    const auto p = static_cast<std::size_t>(period);
    if (closes.size() <= p)
        throw InsufficientDataError("rsi needs more closes than its period");

    IndicatorSeries out;
    out.values.assign(closes.size(), kUnset);
    out.first_valid = p;

    double avg_gain = 0.0, avg_loss = 0.0;
    for (std::size_t i = 1; i <= p; ++i) {
        const double change = closes[i] - closes[i - 1];
        if (change > 0) avg_gain += change;
        else avg_loss -= change;
    }
    avg_gain /= period;
    avg_loss /= period;

    const auto value = [](double gain, double loss) {
        if (loss == 0.0) return gain == 0.0 ? 50.0 : 100.0;
        const double rs = gain / loss;
        return 100.0 - 100.0 / (1.0 + rs);
    };

    out.values[p] = value(avg_gain, avg_loss);
    for (std::size_t i = p + 1; i < closes.size(); ++i) {
        const double change = closes[i] - closes[i - 1];
        const double gain = change > 0 ? change : 0.0;
        const double loss = change < 0 ? -change : 0.0;
        avg_gain = (avg_gain * (period - 1) + gain) / period;
        avg_loss = (avg_loss * (period - 1) + loss) / period;
        out.values[i] = value(avg_gain, avg_loss);
    }
    return out;
}

IndicatorSeries williams_r(std::span<const Bar> bars, int period) {
    if (period < 1) throw DomainError("williams_r period must be >= 1");
    const auto p = static_cast<std::size_t>(period);
    if (bars.size() < p)
        throw InsufficientDataError("williams_r needs at least `period` bars");

    IndicatorSeries out;
    out.values.assign(bars.size(), kUnset);
    out.first_valid = p - 1;

    for (std::size_t i = p - 1; i < bars.size(); ++i) {
        double hh = bars[i - p + 1].high;
        double ll = bars[i - p + 1].low;
        for (std::size_t j = i - p + 2; j <= i; ++j) {
            hh = std::max(hh, bars[j].high);
            ll = std::min(ll, bars[j].low);
        }
        out.values[i] =
            hh == ll ? 0.0 : -100.0 * (hh - bars[i].close) / (hh - ll);
    }
    return out;
}

double weighted_bar_direction(const Bar& bar) {
    const double range = bar.high - bar.low;
    if (range == 0.0) return 0.0;
    return (bar.close - bar.open) / range;
}

IndicatorSeries hl_range(std::span<const Bar> bars) {
    IndicatorSeries out;
    out.values.assign(bars.size(), kUnset);
    out.first_valid = bars.size();

    const auto day_of = [](const Bar& b) {
        return std::chrono::floor<std::chrono::days>(b.start);
    };

    // Running high/low aggregate of the day before `cur_day`.
    std::chrono::sys_days cur_day{};
    double prev_high = 0.0, prev_low = 0.0;
    bool have_prev = false;
    double cur_high = 0.0, cur_low = 0.0;

    for (std::size_t i = 0; i < bars.size(); ++i) {
        const auto d = day_of(bars[i]);
        if (i == 0) {
            cur_day = d;
            cur_high = bars[i].high;
            cur_low = bars[i].low;
        } else if (d != cur_day) {
            prev_high = cur_high;
            prev_low = cur_low;
            have_prev = true;
            cur_day = d;
            cur_high = bars[i].high;
            cur_low = bars[i].low;
        } else {
            cur_high = std::max(cur_high, bars[i].high);
            cur_low = std::min(cur_low, bars[i].low);
        }
        if (have_prev) {
            out.values[i] = prev_high - prev_low;
            out.first_valid = std::min(out.first_valid, i);
        }
    }
    return out;
}

std::array<double, 4> encode_timestamp(Instant t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    // 1970-01-01 was a Thursday; shift so Monday maps to 0.
    const long long days_since_epoch = day.time_since_epoch().count();
    const long long dow = ((days_since_epoch + 3) % 7 + 7) % 7;
    const double sec = static_cast<double>((t - day).count());

    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double dow_angle = two_pi * static_cast<double>(dow) / 7.0;
    const double tod_angle = two_pi * sec / 86400.0;
    return {std::sin(dow_angle), std::cos(dow_angle), std::sin(tod_angle),
            std::cos(tod_angle)};
}

}  // namespace qtrade
