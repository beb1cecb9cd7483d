#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qtrade/backtest.hpp"
#include "qtrade/config.hpp"
#include "qtrade/env.hpp"

namespace qtrade {

struct RunArtifacts {
    std::filesystem::path run_dir;
    std::vector<StepLogEntry> steps;
    std::vector<TradeRecord> trades;
    BacktestReport report;
};

/// End-to-end run: load data, learn online (or replay a scripted action
/// file), then write step_log.jsonl, trades.csv, plotdata.csv, report.json,
/// manifest.json and checkpoints into the run directory.
RunArtifacts run_experiment(const RunConfig& config);

/// Re-derives the report from the logs in a run directory, never trusting
/// cached numbers. Instrument, period and parameters come from the manifest.
BacktestReport recompute_report(const std::filesystem::path& run_dir);

/// One action code (0/1/2) per line; blank lines and '#' comments skipped.
std::vector<Action> load_actions_file(const std::filesystem::path& path);

/// FNV-1a 64-bit content hash, hex-encoded; used to pin the data file in
/// the run manifest.
std::string fnv1a64_file_hex(const std::filesystem::path& path);

std::string format_instant(Instant t);

/// Fixed-width metrics row (instrument, Sharpe, win ratio, MDD) plus the
/// note that published reference results are context, not targets.
std::string report_table(const BacktestReport& report);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qtrade
