#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>

#include "qtrade/agent.hpp"
#include "qtrade/env.hpp"
#include "qtrade/features.hpp"
#include "qtrade/qnet.hpp"

namespace qtrade {

/// Everything one run needs. Defaults follow the reference settings where
/// one exists: 5-contract cap, $2 commission per contract, gamma 0.8,
/// learning rate 0.001, epsilon 1.0 decaying by 0.995 to a floor of 0.01.
struct RunConfig {
    std::string data_path;
    std::string instrument = "UNKNOWN";
    long long bar_seconds = 86400;
    std::size_t window = 30;
    IndicatorConfig indicators;
    EnvConfig env;
    HyperParams hyper;
    NetConfig net;
    std::uint64_t seed = 1;
    std::string out_dir;  // empty: runs/<instrument>_<seed>_<utc-stamp>
    double base_capital = 10000.0;
    int periods_per_year = 252;
    std::string actions_path;  // non-empty: replay scripted actions, no learning
    std::size_t max_steps = std::numeric_limits<std::size_t>::max();
    std::size_t checkpoint_every = 10;  // replay cycles between checkpoints

    void validate() const;
};

/// Reads a JSON config file; keys not present keep their defaults.
/// Throws UsageError on unknown enum values or unreadable files.
RunConfig load_run_config(const std::filesystem::path& path);

/// Parses config JSON text onto `base` (file-over-defaults layering).
RunConfig parse_run_config(const std::string& json_text, RunConfig base = {});

/// Full round-trippable JSON image of a config (used by the run manifest).
std::string run_config_to_json(const RunConfig& config);

}  // namespace qtrade
