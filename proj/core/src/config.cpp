#include "qtrade/config.hpp"

#include <fstream>

#include <json.hpp>

#include "qtrade/errors.hpp"

namespace qtrade {

namespace {

using nlohmann::json;

std::string head_name(HeadActivation h) {
    return h == HeadActivation::softmax ? "softmax" : "linear";
}

HeadActivation head_from(const std::string& s) {
    if (s == "linear") return HeadActivation::linear;
    if (s == "softmax") return HeadActivation::softmax;
    throw UsageError("unknown head activation '" + s + "'");
}

std::string commission_mode_name(CommissionMode m) {
    return m == CommissionMode::per_action ? "per_action" : "per_contract";
}

CommissionMode commission_mode_from(const std::string& s) {
    if (s == "per_contract") return CommissionMode::per_contract;
    if (s == "per_action") return CommissionMode::per_action;
    throw UsageError("unknown commission_mode '" + s + "'");
}

std::string reward_mode_name(RewardMode m) {
    return m == RewardMode::log_return ? "log" : "arithmetic";
}

RewardMode reward_mode_from(const std::string& s) {
    if (s == "arithmetic") return RewardMode::arithmetic;
    if (s == "log") return RewardMode::log_return;
    throw UsageError("unknown reward_mode '" + s + "'");
}

void apply_json(RunConfig& c, const json& j) {
    c.data_path = j.value("data_path", c.data_path);
    c.instrument = j.value("instrument", c.instrument);
    c.bar_seconds = j.value("bar_seconds", c.bar_seconds);
    c.window = j.value("window", c.window);
    c.seed = j.value("seed", c.seed);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.base_capital = j.value("base_capital", c.base_capital);
    c.periods_per_year = j.value("periods_per_year", c.periods_per_year);
    c.actions_path = j.value("actions_path", c.actions_path);
    c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
    if (j.contains("max_steps") && !j.at("max_steps").is_null())
        c.max_steps = j.at("max_steps").get<std::size_t>();

    if (const auto it = j.find("indicators"); it != j.end()) {
        c.indicators.rsi_period = it->value("rsi_period", c.indicators.rsi_period);
        c.indicators.williams_period =
            it->value("williams_period", c.indicators.williams_period);
        c.indicators.macd_slow = it->value("macd_slow", c.indicators.macd_slow);
        c.indicators.macd_fast = it->value("macd_fast", c.indicators.macd_fast);
    }
    if (const auto it = j.find("env"); it != j.end()) {
        c.env.max_contracts = it->value("max_contracts", c.env.max_contracts);
        c.env.commission = it->value("commission", c.env.commission);
        if (it->contains("commission_mode"))
            c.env.commission_mode = commission_mode_from(
                it->at("commission_mode").get<std::string>());
        c.env.step_span = it->value("step_span", c.env.step_span);
        c.env.unit_exposure = it->value("unit_exposure", c.env.unit_exposure);
        if (it->contains("reward_mode"))
            c.env.reward_mode =
                reward_mode_from(it->at("reward_mode").get<std::string>());
    }
    if (const auto it = j.find("hyper"); it != j.end()) {
        c.hyper.gamma = it->value("gamma", c.hyper.gamma);
        c.hyper.lr = it->value("lr", c.hyper.lr);
        c.hyper.epsilon = it->value("epsilon", c.hyper.epsilon);
        c.hyper.epsilon_decay = it->value("epsilon_decay", c.hyper.epsilon_decay);
        c.hyper.epsilon_min = it->value("epsilon_min", c.hyper.epsilon_min);
        c.hyper.tau = it->value("tau", c.hyper.tau);
        c.hyper.memory_capacity =
            it->value("memory_capacity", c.hyper.memory_capacity);
    }
    if (const auto it = j.find("net"); it != j.end()) {
        c.net.lstm1 = it->value("lstm1", c.net.lstm1);
        c.net.lstm2 = it->value("lstm2", c.net.lstm2);
        c.net.pos_branch = it->value("pos_branch", c.net.pos_branch);
        c.net.merge1 = it->value("merge1", c.net.merge1);
        c.net.merge2 = it->value("merge2", c.net.merge2);
        if (it->contains("head"))
            c.net.head = head_from(it->at("head").get<std::string>());
    }

    // One decision interval: the env step span doubles as the agent's
    // train interval.
    c.hyper.train_interval = c.env.step_span;
}

}  // namespace

void RunConfig::validate() const {
    if (window < 1) throw UsageError("window must be >= 1");
    if (bar_seconds < 1) throw UsageError("bar_seconds must be >= 1");
    if (base_capital <= 0.0) throw UsageError("base_capital must be positive");
    if (periods_per_year < 1)
        throw UsageError("periods_per_year must be >= 1");
    hyper.validate();
}

RunConfig parse_run_config(const std::string& json_text, RunConfig base) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw UsageError(std::string("bad config JSON: ") + e.what());
    }
    apply_json(base, j);
    return base;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

std::string run_config_to_json(const RunConfig& c) {
    const json j{
        {"data_path", c.data_path},
        {"instrument", c.instrument},
        {"bar_seconds", c.bar_seconds},
        {"window", c.window},
        {"seed", c.seed},
        {"out_dir", c.out_dir},
        {"base_capital", c.base_capital},
        {"periods_per_year", c.periods_per_year},
        {"actions_path", c.actions_path},
        {"checkpoint_every", c.checkpoint_every},
        {"max_steps", c.max_steps == std::numeric_limits<std::size_t>::max()
                          ? json(nullptr)
                          : json(c.max_steps)},
        {"indicators",
         {{"rsi_period", c.indicators.rsi_period},
          {"williams_period", c.indicators.williams_period},
          {"macd_slow", c.indicators.macd_slow},
          {"macd_fast", c.indicators.macd_fast}}},
        {"env",
         {{"max_contracts", c.env.max_contracts},
          {"commission", c.env.commission},
          {"commission_mode", commission_mode_name(c.env.commission_mode)},
          {"step_span", c.env.step_span},
          {"unit_exposure", c.env.unit_exposure},
          {"reward_mode", reward_mode_name(c.env.reward_mode)}}},
        {"hyper",
         {{"gamma", c.hyper.gamma},
          {"lr", c.hyper.lr},
          {"epsilon", c.hyper.epsilon},
          {"epsilon_decay", c.hyper.epsilon_decay},
          {"epsilon_min", c.hyper.epsilon_min},
          {"tau", c.hyper.tau},
          {"memory_capacity", c.hyper.memory_capacity}}},
        {"net",
         {{"lstm1", c.net.lstm1},
          {"lstm2", c.net.lstm2},
          {"pos_branch", c.net.pos_branch},
          {"merge1", c.net.merge1},
          {"merge2", c.net.merge2},
          {"head", head_name(c.net.head)}}}};
    return j.dump(2);
}

}  // namespace qtrade
