#include "qtrade/features.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "qtrade/errors.hpp"

namespace qtrade {

std::vector<IndicatorVector> scale_expanding(
    std::span<const IndicatorVector> raw) {
    if (raw.empty())
        throw InsufficientDataError("scale_expanding needs a non-empty input");

    std::array<double, kFeatureCount> lo = raw[0].flat();
    std::array<double, kFeatureCount> hi = lo;

    std::vector<IndicatorVector> out;
    out.reserve(raw.size());
    for (const IndicatorVector& rv : raw) {
        const auto x = rv.flat();
        std::array<double, kFeatureCount> scaled;
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            lo[j] = std::min(lo[j], x[j]);
            hi[j] = std::max(hi[j], x[j]);
            if (hi[j] == lo[j]) {
                scaled[j] = 0.55;
            } else {
                // Round the ratio first: it lands in [0, 1] exactly, so the
                // affine map cannot escape [0.1, 1].
                const double ratio = (x[j] - lo[j]) / (hi[j] - lo[j]);
                scaled[j] = 0.1 + 0.9 * ratio;
            }
        }
        out.push_back(IndicatorVector::from_flat(scaled));
    }
    return out;
}

FeatureSeries FeatureSeries::compute(std::span<const Bar> bars,
                                     const IndicatorConfig& config) {
    if (bars.empty())
        throw InsufficientDataError("feature pipeline needs at least one bar");

    std::vector<double> closes(bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) closes[i] = bars[i].close;

    // Availability: an N-period EMA (and Wilder RSI) is treated as warmed up
    // only after its first N samples, so MACD's slow leg usually dominates.
    const std::size_t macd_warm =
        static_cast<std::size_t>(std::max(config.macd_slow, config.macd_fast));
    const std::vector<double> macd_values =
        macd(closes, config.macd_slow, config.macd_fast);
    const IndicatorSeries rsi_values = rsi(closes, config.rsi_period);
    const IndicatorSeries wr_values = williams_r(bars, config.williams_period);
    const IndicatorSeries hl_values = hl_range(bars);

    FeatureSeries fs;
    fs.warmup_ = std::max({macd_warm, rsi_values.first_valid,
                           wr_values.first_valid, hl_values.first_valid});
    if (fs.warmup_ >= bars.size())
        throw InsufficientDataError(
            "series shorter than the indicator warm-up of " +
            std::to_string(fs.warmup_ + 1) + " bars");

    std::vector<IndicatorVector> raw;
    raw.reserve(bars.size() - fs.warmup_);
    for (std::size_t i = fs.warmup_; i < bars.size(); ++i) {
        IndicatorVector v;
        v.macd = macd_values[i];
        v.rsi = rsi_values.values[i];
        v.williams_r = wr_values.values[i];
        v.bar_direction = weighted_bar_direction(bars[i]);
        v.hl_range = hl_values.values[i];
        v.time_enc = encode_timestamp(bars[i].start);
        raw.push_back(v);
    }

    const std::vector<IndicatorVector> scaled = scale_expanding(raw);
    fs.rows_.assign(bars.size(), {});
    for (std::size_t i = 0; i < scaled.size(); ++i)
        fs.rows_[fs.warmup_ + i] = scaled[i].flat();
    return fs;
}

FeatureSeries FeatureSeries::from_rows(
    std::vector<std::array<double, kFeatureCount>> rows, std::size_t warmup) {
    if (rows.empty())
        throw InsufficientDataError("from_rows needs at least one row");
    if (warmup >= rows.size())
        throw InsufficientDataError("warmup leaves no available rows");
    FeatureSeries fs;
    fs.warmup_ = warmup;
    fs.rows_ = std::move(rows);
    return fs;
}

const std::array<double, kFeatureCount>& FeatureSeries::row(
    std::size_t bar_index) const {
    if (bar_index < warmup_ || bar_index >= rows_.size())
        throw InsufficientDataError("feature row " + std::to_string(bar_index) +
                                    " is not available");
    return rows_[bar_index];
}

FeatureWindow build_feature_window(std::shared_ptr<const FeatureSeries> series,
                                   std::size_t end_index, std::size_t window) {
    if (!series) throw UsageError("build_feature_window: null series");
    if (window == 0) throw DomainError("window length must be >= 1");
    if (end_index >= series->size() ||
        end_index < series->warmup() + window - 1)
        throw InsufficientDataError(
            "insufficient history for a window ending at " +
            std::to_string(end_index));
    return FeatureWindow(std::move(series), end_index, window);
}

void write_feature_csv(std::ostream& out, const FeatureSeries& series) {
    for (std::size_t j = 0; j < kFeatureCount; ++j)
        out << kFeatureNames[j] << (j + 1 < kFeatureCount ? ',' : '\n');

    char buf[32];
    for (std::size_t i = series.warmup(); i < series.size(); ++i) {
        const auto& row = series.row(i);
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            std::snprintf(buf, sizeof buf, "%.10g", row[j]);
            out << buf << (j + 1 < kFeatureCount ? ',' : '\n');
        }
    }
}

}  // namespace qtrade
