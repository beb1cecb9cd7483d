#pragma once

#include <chrono>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "qtrade/features.hpp"
#include "qtrade/prices.hpp"

namespace qtrade {

enum class Action : int { hold = 0, buy = 1, sell = 2 };

inline constexpr int kActionCount = 3;

Action action_from_code(int code);

/// The position half of the state: long contracts, short contracts and the
/// immediate profit-or-loss of the last step. Never simultaneously long and
/// short.
struct PositionState {
    int long_contracts = 0;
    int short_contracts = 0;
    double pnl = 0.0;

    bool flat() const { return long_contracts == 0 && short_contracts == 0; }
    int held() const { return long_contracts + short_contracts; }
    /// +1 net long, -1 net short, 0 flat.
    int direction() const {
        return long_contracts > 0 ? 1 : short_contracts > 0 ? -1 : 0;
    }
};

enum class RewardMode { arithmetic, log_return };

/// Commission accounting. `per_contract` charges the rate on every contract
/// transacted (a reversal pays for both the closing and the opening leg);
/// `per_action` charges a flat rate per executed buy/sell regardless of size.
enum class CommissionMode { per_contract, per_action };

struct EnvConfig {
    int max_contracts = 5;
    double commission = 2.0;
    CommissionMode commission_mode = CommissionMode::per_contract;
    int step_span = 1;  // bars between decisions
    bool unit_exposure = false;
    RewardMode reward_mode = RewardMode::arithmetic;
};

struct EnvState {
    PositionState position;
    FeatureWindow market;
    std::size_t t = 0;  // bar index of the window's last row
};

enum class TradeDirection { long_side, short_side };

/// One closed position episode. The position ran over [open_t, close_t);
/// long_term_pnl is the sum of the immediate rewards of those steps.
struct TradeRecord {
    TradeDirection direction = TradeDirection::long_side;
    std::size_t open_t = 0;
    std::size_t close_t = 0;
    double long_term_pnl = 0.0;
    int contracts = 0;
    bool forced = false;  // closed by end of data, not by a reversal
};

struct StepResult {
    EnvState next_state;
    double immediate_reward = 0.0;  // ledger units: raw price points
    double learner_reward = 0.0;    // reward_mode units fed to the agent
    std::optional<TradeRecord> closed_trade;
    /// Episode total in learner units, present alongside closed_trade.
    std::optional<double> closed_learner_pnl;
    bool done = false;
};

/// Buy at the long cap (or sell at the short cap) is downgraded to hold.
Action clamp_action(const PositionState& position, Action action,
                    const EnvConfig& config);

/// Sum of long_term_pnl over closed trades.
double episode_pnl(std::span<const TradeRecord> trades);

/// The market environment: a deterministic state machine over an immutable
/// bar/feature series. step() executes an action, realizes its reward over
/// the following interval and maintains the open-episode ledger. Market
/// features never depend on actions taken. One instance is single-threaded;
/// independent instances may share the underlying series.
class TradingEnv {
public:
    TradingEnv(const PriceSeries& series, std::chrono::seconds bar_duration,
               const IndicatorConfig& indicators, std::size_t window,
               EnvConfig config);

    /// Flat position at the first bar index with a complete feature window.
    EnvState reset();

    /// Executes `action` from `state`. Calling past the end of data returns
    /// done = true with no reward and no state change. States must be
    /// stepped in sequence for the episode ledger to be meaningful.
    StepResult step(const EnvState& state, Action action);

    bool can_step(std::size_t t) const {
        return t + static_cast<std::size_t>(config_.step_span) < bars_.size();
    }

    /// Marks any open episode force-closed at the last reached index and
    /// returns its record. Call after the step loop ends.
    std::optional<TradeRecord> finish();

    std::size_t start_index() const;
    double price_at(std::size_t t) const { return bars_[t].close; }
    const std::vector<Bar>& bars() const { return bars_; }
    std::shared_ptr<const FeatureSeries> features() const { return features_; }
    std::size_t window() const { return window_; }
    const EnvConfig& config() const { return config_; }
    /// Ledger sum of the currently open episode (0 when flat).
    double episode_accumulated() const { return open_ ? ledger_acc_ : 0.0; }

private:
    std::vector<Bar> bars_;
    std::shared_ptr<const FeatureSeries> features_;
    std::size_t window_;
    EnvConfig config_;

    // Open-episode ledger.
    bool open_ = false;
    TradeDirection dir_ = TradeDirection::long_side;
    std::size_t open_t_ = 0;
    double ledger_acc_ = 0.0;
    double learner_acc_ = 0.0;
    int held_ = 0;
    std::size_t last_t_ = 0;
};

/// One line of the step log: the executed action, the post-action position
/// and the reward realized over the following interval.
struct StepLogEntry {
    std::size_t t = 0;
    int action = 0;
    int long_contracts = 0;
    int short_contracts = 0;
    double immediate_reward = 0.0;
    double accumulated_episode_pnl = 0.0;
    std::optional<TradeRecord> closed_trade;
};

/// JSON-lines step log, one object per step. This file feeds the backtest
/// metrics and the determinism checks, so serialization is deterministic.
void write_step_log(std::ostream& out, std::span<const StepLogEntry> steps);
std::vector<StepLogEntry> read_step_log(std::istream& in);

}  // namespace qtrade
