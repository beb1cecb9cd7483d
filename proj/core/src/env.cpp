#include "qtrade/env.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "qtrade/errors.hpp"

namespace qtrade {

Action action_from_code(int code) {
    if (code < 0 || code >= kActionCount)
        throw DomainError("action code must be 0, 1 or 2, got " +
                          std::to_string(code));
    return static_cast<Action>(code);
}

Action clamp_action(const PositionState& position, Action action,
                    const EnvConfig& config) {
    if (action == Action::buy && position.long_contracts >= config.max_contracts)
        return Action::hold;
    if (action == Action::sell &&
        position.short_contracts >= config.max_contracts)
        return Action::hold;
    return action;
}

double episode_pnl(std::span<const TradeRecord> trades) {
    double total = 0.0;
    for (const TradeRecord& tr : trades) total += tr.long_term_pnl;
    return total;
}

TradingEnv::TradingEnv(const PriceSeries& series,
                       std::chrono::seconds bar_duration,
                       const IndicatorConfig& indicators, std::size_t window,
                       EnvConfig config)
    : bars_(resample_bars(series, bar_duration)),
      window_(window),
      config_(config) {
    if (window_ == 0) throw DomainError("window length must be >= 1");
    if (config_.step_span < 1) throw DomainError("step_span must be >= 1");
    if (config_.max_contracts < 1)
        throw DomainError("max_contracts must be >= 1");
    if (config_.commission < 0.0)
        throw DomainError("commission must be non-negative");
    features_ = std::make_shared<FeatureSeries>(
        FeatureSeries::compute(bars_, indicators));
    if (start_index() >= bars_.size())
        throw InsufficientDataError(
            "insufficient data: series shorter than indicator warm-up plus window");
    last_t_ = start_index();
}

std::size_t TradingEnv::start_index() const {
    return features_->warmup() + window_ - 1;
}

EnvState TradingEnv::reset() {
    open_ = false;
    ledger_acc_ = learner_acc_ = 0.0;
    held_ = 0;
    const std::size_t t0 = start_index();
    last_t_ = t0;
    return EnvState{PositionState{}, build_feature_window(features_, t0, window_),
                    t0};
}

StepResult TradingEnv::step(const EnvState& state, Action action) {
    const std::size_t t = state.t;
    if (!can_step(t)) {
        StepResult res;
        res.next_state = state;
        res.done = true;
        return res;
    }

    const Action effective = clamp_action(state.position, action, config_);
    PositionState pos = state.position;

    int transacted = 0;
    int closed_contracts = 0;
    bool reversal = false;
    if (effective == Action::buy) {
        if (pos.short_contracts > 0) {
            closed_contracts = pos.short_contracts;
            transacted = closed_contracts + 1;
            pos.short_contracts = 0;
            pos.long_contracts = 1;
            reversal = true;
        } else {
            pos.long_contracts += 1;
            transacted = 1;
        }
    } else if (effective == Action::sell) {
        if (pos.long_contracts > 0) {
            closed_contracts = pos.long_contracts;
            transacted = closed_contracts + 1;
            pos.long_contracts = 0;
            pos.short_contracts = 1;
            reversal = true;
        } else {
            pos.short_contracts += 1;
            transacted = 1;
        }
    }

    const int dir = pos.direction();
    const int exposure =
        config_.unit_exposure ? (pos.held() > 0 ? 1 : 0) : pos.held();

    double cost = 0.0;
    if (effective != Action::hold)
        cost = config_.commission_mode == CommissionMode::per_action
                   ? config_.commission
                   : config_.commission * transacted;

    const std::size_t next_t = t + static_cast<std::size_t>(config_.step_span);
    const double p0 = bars_[t].close;
    const double p1 = bars_[next_t].close;
    const double reward = dir * (p1 - p0) * exposure - cost;
    double learner = reward;
    if (config_.reward_mode == RewardMode::log_return)
        learner = dir * exposure * (std::log(p1) - std::log(p0)) - cost / p0;

    StepResult res;
    if (reversal) {
        res.closed_trade = TradeRecord{dir_, open_t_, t, ledger_acc_,
                                       closed_contracts, false};
        res.closed_learner_pnl = learner_acc_;
        dir_ = dir > 0 ? TradeDirection::long_side : TradeDirection::short_side;
        open_t_ = t;
        ledger_acc_ = reward;
        learner_acc_ = learner;
    } else if (!open_ && dir != 0) {
        open_ = true;
        dir_ = dir > 0 ? TradeDirection::long_side : TradeDirection::short_side;
        open_t_ = t;
        ledger_acc_ = reward;
        learner_acc_ = learner;
    } else if (open_) {
        ledger_acc_ += reward;
        learner_acc_ += learner;
    }
    held_ = pos.held();
    last_t_ = next_t;

    pos.pnl = reward;
    res.next_state =
        EnvState{pos, build_feature_window(features_, next_t, window_), next_t};
    res.immediate_reward = reward;
    res.learner_reward = learner;
    res.done = !can_step(next_t);
    return res;
}

std::optional<TradeRecord> TradingEnv::finish() {
    if (!open_) return std::nullopt;
    TradeRecord tr{dir_, open_t_, last_t_, ledger_acc_, held_, true};
    open_ = false;
    ledger_acc_ = learner_acc_ = 0.0;
    held_ = 0;
    return tr;
}

namespace {

nlohmann::json trade_to_json(const TradeRecord& tr) {
    return {{"direction",
             tr.direction == TradeDirection::long_side ? "long" : "short"},
            {"open_t", tr.open_t},
            {"close_t", tr.close_t},
            {"contracts", tr.contracts},
            {"long_term_pnl", tr.long_term_pnl},
            {"forced", tr.forced}};
}

TradeRecord trade_from_json(const nlohmann::json& j) {
    TradeRecord tr;
    tr.direction = j.at("direction").get<std::string>() == "long"
                       ? TradeDirection::long_side
                       : TradeDirection::short_side;
    tr.open_t = j.at("open_t").get<std::size_t>();
    tr.close_t = j.at("close_t").get<std::size_t>();
    tr.contracts = j.at("contracts").get<int>();
    tr.long_term_pnl = j.at("long_term_pnl").get<double>();
    tr.forced = j.value("forced", false);
    return tr;
}

}  // namespace

void write_step_log(std::ostream& out, std::span<const StepLogEntry> steps) {
    for (const StepLogEntry& s : steps) {
        nlohmann::json j{{"t", s.t},
                         {"action", s.action},
                         {"L", s.long_contracts},
                         {"S", s.short_contracts},
                         {"immediate_reward", s.immediate_reward},
                         {"accumulated_episode_pnl", s.accumulated_episode_pnl}};
        if (s.closed_trade) j["closed_trade"] = trade_to_json(*s.closed_trade);
        out << j.dump() << '\n';
    }
}

std::vector<StepLogEntry> read_step_log(std::istream& in) {
    std::vector<StepLogEntry> steps;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("bad step log line: " + std::string(e.what()),
                             line_no);
        }
        StepLogEntry s;
        s.t = j.at("t").get<std::size_t>();
        s.action = j.at("action").get<int>();
        s.long_contracts = j.at("L").get<int>();
        s.short_contracts = j.at("S").get<int>();
        s.immediate_reward = j.at("immediate_reward").get<double>();
        s.accumulated_episode_pnl = j.at("accumulated_episode_pnl").get<double>();
        if (j.contains("closed_trade"))
            s.closed_trade = trade_from_json(j.at("closed_trade"));
        steps.push_back(std::move(s));
    }
    return steps;
}

}  // namespace qtrade
