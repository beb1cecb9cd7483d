#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "qtrade/env.hpp"
#include "qtrade/qnet.hpp"
#include "qtrade/rng.hpp"

namespace qtrade {

struct HyperParams {
    double gamma = 0.8;
    double lr = 0.001;
    double epsilon = 1.0;
    double epsilon_decay = 0.995;
    double epsilon_min = 0.01;
    double tau = 0.001;
    int train_interval = 1;  // bars between decisions, forwarded to the env
    std::size_t memory_capacity = 480;

    void validate() const;
};

/// A stored experience. Position inputs are kept in their normalized form,
/// frozen at observation time, so a replayed transition is exactly what the
/// agent saw online.
struct Transition {
    FeatureWindow market;
    FeatureWindow next_market;
    Eigen::Vector3d position{0, 0, 0};
    Eigen::Vector3d next_position{0, 0, 0};
    Action action = Action::hold;
    double reward = 0.0;
    bool terminal = false;
};

/// Insertion-ordered experience buffer. Filling it to capacity raises the
/// full flag; the owner then runs a replay pass and clears it (there is no
/// silent eviction).
class ReplayMemory {
public:
    explicit ReplayMemory(std::size_t capacity);

    void push(Transition t);
    bool full() const { return items_.size() >= capacity_; }
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    void clear() { items_.clear(); }

    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }

private:
    std::size_t capacity_;
    std::vector<Transition> items_;
};

/// Normalizes position inputs for the network: contract counts by the cap,
/// pnl by an expanding max-abs factor so its magnitude cannot dwarf the
/// unit-scaled counts. Causal: the factor only ever grows with data seen.
class PositionNormalizer {
public:
    explicit PositionNormalizer(int max_contracts)
        : max_contracts_(max_contracts) {}

    void observe(double pnl);
    Eigen::Vector3d normalize(const PositionState& position) const;

private:
    int max_contracts_;
    double max_abs_pnl_ = 0.0;
};

struct SelectResult {
    Action action = Action::hold;
    double epsilon = 0.0;
    bool explored = false;
};

/// Epsilon-greedy: with probability epsilon pick uniformly at random and
/// decay epsilon (clamped at epsilon_min); otherwise the argmax action,
/// lowest code winning ties, epsilon untouched.
SelectResult select_action(QNetwork& net, const NetworkParams& params,
                           const FeatureWindow& market,
                           const Eigen::Vector3d& position, double epsilon,
                           const HyperParams& hyper, Rng& rng);

/// Action-augmented target: r + gamma * Q_target(s', argmax_a' Q_online(s', a')).
/// Terminal transitions use the reward alone.
double compute_target(QNetwork& net, const NetworkParams& online,
                      const NetworkParams& target, const Transition& transition,
                      double gamma);

/// One pass over the whole memory in insertion order: per transition a
/// squared-error fit of the taken action's output toward its target (all
/// other outputs receive zero gradient), applied immediately through Adam.
/// The memory is cleared afterwards. Empty memory is a no-op.
void replay_fit(QNetwork& net, NetworkParams& online,
                const NetworkParams& target, ReplayMemory& memory,
                AdamState& adam, const HyperParams& hyper);

struct LearnResult {
    std::vector<StepLogEntry> steps;
    std::vector<TradeRecord> trades;
    std::size_t replay_cycles = 0;
    double final_epsilon = 0.0;
};

/// Called after each replay cycle with the cycle number and the current
/// online parameters (checkpointing hook).
using ReplayCycleHook =
    std::function<void(std::size_t cycle, const NetworkParams& params)>;

/// The full online loop: observe, select, step, remember; on a full memory
/// replay-fit then soft-update the target; at the end of data flush the
/// remaining memory and force-close any open position. No train/test split —
/// data is consumed strictly in sequence. Deterministic given (env data,
/// params, hyper, seed).
LearnResult online_learn(TradingEnv& env, QNetwork& net, NetworkParams& online,
                         const HyperParams& hyper, std::uint64_t seed,
                         std::size_t total_steps =
                             std::numeric_limits<std::size_t>::max(),
                         const ReplayCycleHook& on_replay_cycle = {});

}  // namespace qtrade
