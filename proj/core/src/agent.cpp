#include "qtrade/agent.hpp"

#include <algorithm>
#include <cmath>

#include "qtrade/errors.hpp"

namespace qtrade {

void HyperParams::validate() const {
    if (gamma < 0.0 || gamma > 1.0) throw DomainError("gamma must be in [0, 1]");
    if (epsilon < 0.0 || epsilon > 1.0)
        throw DomainError("epsilon must be in [0, 1]");
    if (epsilon_decay <= 0.0 || epsilon_decay >= 1.0)
        throw DomainError("epsilon_decay must be in (0, 1)");
    if (epsilon_min <= 0.0) throw DomainError("epsilon_min must be positive");
    if (tau < 0.0 || tau > 1.0) throw DomainError("tau must be in [0, 1]");
    if (memory_capacity < 1) throw DomainError("memory_capacity must be >= 1");
    if (train_interval < 1) throw DomainError("train_interval must be >= 1");
    if (lr <= 0.0) throw DomainError("learning rate must be positive");
}

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 1) throw DomainError("memory capacity must be >= 1");
    items_.reserve(capacity_);
}

void ReplayMemory::push(Transition t) {
    if (full())
        throw UsageError("replay memory is full; run replay_fit before "
                         "storing more transitions");
    items_.push_back(std::move(t));
}

void PositionNormalizer::observe(double pnl) {
    max_abs_pnl_ = std::max(max_abs_pnl_, std::abs(pnl));
}

Eigen::Vector3d PositionNormalizer::normalize(
    const PositionState& position) const {
    const double cap = static_cast<double>(max_contracts_);
    const double pnl_scale = max_abs_pnl_ > 0.0 ? max_abs_pnl_ : 1.0;
    return {position.long_contracts / cap, position.short_contracts / cap,
            position.pnl / pnl_scale};
}

namespace {

Action argmax_action(const QValues& q) {
    int best = 0;
    for (int a = 1; a < kActionCount; ++a)
        if (q[static_cast<std::size_t>(a)] > q[static_cast<std::size_t>(best)])
            best = a;
    return static_cast<Action>(best);
}

}  // namespace

SelectResult select_action(QNetwork& net, const NetworkParams& params,
                           const FeatureWindow& market,
                           const Eigen::Vector3d& position, double epsilon,
                           const HyperParams& hyper, Rng& rng) {
    SelectResult res;
    if (rng.uniform() < epsilon) {
        res.epsilon = std::max(hyper.epsilon_min, epsilon * hyper.epsilon_decay);
        res.action = static_cast<Action>(rng.uniform_int(kActionCount));
        res.explored = true;
    } else {
        res.epsilon = epsilon;
        res.action = argmax_action(net.forward(params, market, position));
    }
    return res;
}

double compute_target(QNetwork& net, const NetworkParams& online,
                      const NetworkParams& target, const Transition& transition,
                      double gamma) {
    if (transition.terminal) return transition.reward;
    const QValues q_online =
        net.forward(online, transition.next_market, transition.next_position);
    const Action best = argmax_action(q_online);
    const QValues q_target =
        net.forward(target, transition.next_market, transition.next_position);
    return transition.reward +
           gamma * q_target[static_cast<std::size_t>(best)];
}

void replay_fit(QNetwork& net, NetworkParams& online,
                const NetworkParams& target, ReplayMemory& memory,
                AdamState& adam, const HyperParams& hyper) {
    for (const Transition& tr : memory) {
        const double y = compute_target(net, online, target, tr, hyper.gamma);
        const QValues q = net.forward(online, tr.market, tr.position);
        const auto a = static_cast<std::size_t>(tr.action);
        // loss = (y - Q_a)^2, gradient restricted to the taken action.
        QValues out_grad{0.0, 0.0, 0.0};
        out_grad[a] = 2.0 * (q[a] - y);
        const NetworkParams grads = net.backward(online, out_grad);
        adam_step(online, grads, adam, hyper.lr);
    }
    memory.clear();
}

LearnResult online_learn(TradingEnv& env, QNetwork& net, NetworkParams& online,
                         const HyperParams& hyper, std::uint64_t seed,
                         std::size_t total_steps,
                         const ReplayCycleHook& on_replay_cycle) {
    hyper.validate();

    LearnResult result;
    result.final_epsilon = hyper.epsilon;
    if (total_steps == 0) return result;

    NetworkParams target = online;
    AdamState adam = AdamState::init(online);
    ReplayMemory memory(hyper.memory_capacity);
    Rng rng(seed);
    PositionNormalizer normalizer(env.config().max_contracts);

    EnvState state = env.reset();
    normalizer.observe(state.position.pnl);
    Eigen::Vector3d state_pos = normalizer.normalize(state.position);
    double epsilon = hyper.epsilon;

    const auto run_replay = [&] {
        replay_fit(net, online, target, memory, adam, hyper);
        soft_update(target, online, hyper.tau);
        result.replay_cycles += 1;
        if (on_replay_cycle) on_replay_cycle(result.replay_cycles, online);
    };

    std::size_t steps_done = 0;
    while (steps_done < total_steps && env.can_step(state.t)) {
        const SelectResult sel = select_action(net, online, state.market,
                                               state_pos, epsilon, hyper, rng);
        epsilon = sel.epsilon;

        const StepResult sr = env.step(state, sel.action);
        normalizer.observe(sr.next_state.position.pnl);
        const Eigen::Vector3d next_pos =
            normalizer.normalize(sr.next_state.position);

        // Immediate reward, plus the episode's long-term total credited to
        // the transition that closed it.
        const double reward =
            sr.learner_reward + sr.closed_learner_pnl.value_or(0.0);
        memory.push(Transition{state.market, sr.next_state.market, state_pos,
                               next_pos, sel.action, reward, sr.done});

        result.steps.push_back(StepLogEntry{
            state.t, static_cast<int>(sel.action),
            sr.next_state.position.long_contracts,
            sr.next_state.position.short_contracts, sr.immediate_reward,
            env.episode_accumulated(), sr.closed_trade});
        if (sr.closed_trade) result.trades.push_back(*sr.closed_trade);

        if (memory.full()) run_replay();

        state = sr.next_state;
        state_pos = next_pos;
        ++steps_done;
        if (sr.done) break;
    }

    if (memory.size() > 0) run_replay();  // final flush at end of data
    if (const auto forced = env.finish()) result.trades.push_back(*forced);

    result.final_epsilon = epsilon;
    return result;
}

}  // namespace qtrade
