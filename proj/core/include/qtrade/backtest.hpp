#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qtrade/env.hpp"

namespace qtrade {

/// Cumulative PnL per step, from a base of 0: curve[i] is the sum of the
/// first i+1 immediate rewards.
using EquityCurve = std::vector<double>;

EquityCurve equity_curve(std::span<const StepLogEntry> steps);

/// Mean per-period PnL change over its sample standard deviation, scaled by
/// sqrt(periods_per_year). Risk-free rate is 0. Throws DomainError on fewer
/// than two points or a zero-variance change stream (never returns a
/// sentinel value).
double sharpe_annualized(const EquityCurve& curve, int periods_per_year);

/// Percentage of trades with strictly positive long-term PnL; zero counts
/// as a loss. Throws DomainError when there are no trades.
double win_ratio(std::span<const TradeRecord> trades);

/// Largest peak-to-trough decline of the equity level base_capital + curve,
/// as a non-positive percentage of the peak level. The starting level
/// (before any step) counts as the initial peak.
double max_drawdown(const EquityCurve& curve, double base_capital);

struct BacktestReport {
    std::string instrument;
    std::string period_start;
    std::string period_end;
    std::optional<double> sharpe;  // absent when returns have zero variance
    double win_ratio_pct = 0.0;
    double mdd_pct = 0.0;
    std::size_t n_trades = 0;
    double total_pnl = 0.0;
    double base_capital = 0.0;
    std::uint64_t seed = 0;
};

/// Metrics recomputed from the raw logs. `prices[i]` must be the decision
/// price at steps[i].t.
BacktestReport compute_report(std::span<const StepLogEntry> steps,
                              std::span<const TradeRecord> trades,
                              const std::string& instrument,
                              const std::string& period_start,
                              const std::string& period_end,
                              double base_capital, int periods_per_year,
                              std::uint64_t seed);

/// Writes report.json, trades.csv and plotdata.csv (t, price, equity) into
/// `dir`. I/O failures surface as IoError naming the path.
void emit_report(const std::filesystem::path& dir, const BacktestReport& report,
                 std::span<const StepLogEntry> steps,
                 std::span<const TradeRecord> trades,
                 std::span<const double> prices);

BacktestReport read_report(const std::filesystem::path& file);
std::vector<TradeRecord> read_trades_csv(const std::filesystem::path& file);

}  // namespace qtrade
