#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "qtrade/indicators.hpp"
#include "qtrade/prices.hpp"

namespace qtrade {

inline constexpr std::size_t kFeatureCount = 9;

inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "macd",    "rsi",     "williams_r", "bar_direction", "hl_range",
    "dow_sin", "dow_cos", "tod_sin",    "tod_cos"};

/// One timestep of market features, raw or scaled depending on context.
struct IndicatorVector {
    double macd = 0.0;
    double rsi = 0.0;
    double williams_r = 0.0;
    double bar_direction = 0.0;
    double hl_range = 0.0;
    std::array<double, 4> time_enc{};  // dow_sin, dow_cos, tod_sin, tod_cos

    std::array<double, kFeatureCount> flat() const {
        return {macd,     rsi,         williams_r,  bar_direction, hl_range,
                time_enc[0], time_enc[1], time_enc[2], time_enc[3]};
    }
    static IndicatorVector from_flat(const std::array<double, kFeatureCount>& f) {
        return {f[0], f[1], f[2], f[3], f[4], {f[5], f[6], f[7], f[8]}};
    }
};

/// Causal min-max scaling into [0.1, 1]: each component at index i is mapped
/// with the running min/max over indices 0..=i only, so output i never
/// depends on later data. A degenerate range (min == max) maps to the 0.55
/// midpoint. Throws InsufficientDataError on empty input.
std::vector<IndicatorVector> scale_expanding(std::span<const IndicatorVector> raw);

struct IndicatorConfig {
    int rsi_period = 14;
    int williams_period = 14;
    int macd_slow = 26;
    int macd_fast = 12;
};

/// Scaled feature rows aligned with a bar sequence. Rows before `warmup()`
/// are not available (indicator warm-up); everything from warmup() onward is
/// scaled into [0.1, 1]. Immutable after construction.
class FeatureSeries {
public:
    static FeatureSeries compute(std::span<const Bar> bars,
                                 const IndicatorConfig& config = {});

    /// Adopts already-scaled rows directly (synthetic inputs, replays of
    /// dumped features). Rows before `warmup` count as unavailable.
    static FeatureSeries from_rows(
        std::vector<std::array<double, kFeatureCount>> rows,
        std::size_t warmup = 0);

    std::size_t size() const { return rows_.size(); }
    std::size_t warmup() const { return warmup_; }
    const std::array<double, kFeatureCount>& row(std::size_t bar_index) const;

private:
    std::size_t warmup_ = 0;
    std::vector<std::array<double, kFeatureCount>> rows_;
};

/// A fixed-length view over consecutive scaled feature rows ending at
/// `end_index`, oldest first. Cheap to copy; rows are backed by the shared
/// immutable FeatureSeries.
class FeatureWindow {
public:
    FeatureWindow() = default;
    FeatureWindow(std::shared_ptr<const FeatureSeries> series,
                  std::size_t end_index, std::size_t window)
        : series_(std::move(series)), end_(end_index), window_(window) {}

    std::size_t window() const { return window_; }
    std::size_t end_index() const { return end_; }
    bool valid() const { return series_ != nullptr; }

    /// Row i of the window, i in [0, window()), oldest first.
    const std::array<double, kFeatureCount>& row(std::size_t i) const {
        return series_->row(end_ - window_ + 1 + i);
    }

private:
    std::shared_ptr<const FeatureSeries> series_;
    std::size_t end_ = 0;
    std::size_t window_ = 0;
};

/// Window of rows end_index-W+1 ... end_index. Throws InsufficientDataError
/// unless end_index >= warmup + W - 1 (all rows available) and end_index is
/// inside the series.
FeatureWindow build_feature_window(std::shared_ptr<const FeatureSeries> series,
                                   std::size_t end_index, std::size_t window);

/// Debug dump: header plus one row per available timestep, columns in
/// kFeatureNames order, values after scaling.
void write_feature_csv(std::ostream& out, const FeatureSeries& series);

}  // namespace qtrade
