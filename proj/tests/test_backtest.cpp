#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>

#include "helpers.hpp"
#include "qtrade/backtest.hpp"
#include "qtrade/errors.hpp"

using namespace qtrade;

namespace {

std::vector<StepLogEntry> steps_from_rewards(const std::vector<double>& rewards) {
    std::vector<StepLogEntry> steps;
    for (std::size_t i = 0; i < rewards.size(); ++i)
        steps.push_back({i, 0, 0, 0, rewards[i], 0.0, std::nullopt});
    return steps;
}

TradeRecord trade(double pnl) {
    return {TradeDirection::long_side, 0, 1, pnl, 1, false};
}

}  // namespace

TEST_CASE("equity_curve") {
    SUBCASE("empty log") { CHECK(equity_curve({}).empty()); }
    SUBCASE("reference rewards accumulate to [50, 80, 85]") {
        const auto curve = equity_curve(steps_from_rewards({50.0, 30.0, 5.0}));
        CHECK(curve == EquityCurve{50.0, 80.0, 85.0});
    }
    SUBCASE("random rewards match the prefix-sum oracle") {
        Rng rng(3);
        std::vector<double> rewards;
        for (int i = 0; i < 1000; ++i) rewards.push_back(rng.uniform(-5, 5));
        const auto curve = equity_curve(steps_from_rewards(rewards));
        double sum = 0.0;
        for (std::size_t i = 0; i < rewards.size(); ++i) {
            sum += rewards[i];
            CHECK(curve[i] == sum);
        }
    }
}

TEST_CASE("sharpe_annualized") {
    SUBCASE("alternating changes have zero mean and zero Sharpe") {
        std::vector<double> rewards;
        for (int i = 0; i < 20; ++i) rewards.push_back(i % 2 ? -1.0 : 1.0);
        const auto curve = equity_curve(steps_from_rewards(rewards));
        CHECK(sharpe_annualized(curve, 252) == doctest::Approx(0.0).epsilon(1e-15));
    }
    SUBCASE("constant changes are rejected, not infinite") {
        const auto curve = equity_curve(steps_from_rewards({2.0, 2.0, 2.0, 2.0}));
        CHECK_THROWS_AS(sharpe_annualized(curve, 252), DomainError);
    }
    SUBCASE("hand-computed fixture") {
        // changes 1,2,3,4: mean 2.5, sample sd sqrt(5/3);
        // 2.5 / 1.2909944... * sqrt(252) = 30.740852297878...
        const auto curve = equity_curve(steps_from_rewards({1.0, 2.0, 3.0, 4.0}));
        CHECK(sharpe_annualized(curve, 252) ==
              doctest::Approx(30.740852297878796).epsilon(1e-12));
    }
    SUBCASE("scale equivariance") {
        Rng rng(5);
        std::vector<double> rewards;
        for (int i = 0; i < 100; ++i) rewards.push_back(rng.uniform(-2, 3));
        const double base =
            sharpe_annualized(equity_curve(steps_from_rewards(rewards)), 252);
        for (double c : {0.5, 3.0, 1000.0}) {
            std::vector<double> scaled = rewards;
            for (double& r : scaled) r *= c;
            CHECK(sharpe_annualized(equity_curve(steps_from_rewards(scaled)), 252) ==
                  doctest::Approx(base).epsilon(1e-9));
        }
    }
    SUBCASE("too short") {
        CHECK_THROWS_AS(sharpe_annualized(EquityCurve{1.0}, 252), DomainError);
    }
}

TEST_CASE("win_ratio") {
    SUBCASE("all positive") {
        const std::vector<TradeRecord> trades{trade(1.0), trade(2.0)};
        CHECK(win_ratio(trades) == 100.0);
    }
    SUBCASE("mixed with a zero-PnL trade counting as a loss") {
        const std::vector<TradeRecord> trades{trade(80.0), trade(-20.0),
                                              trade(5.0), trade(0.0)};
        CHECK(win_ratio(trades) == 50.0);
    }
    SUBCASE("single loser") {
        const std::vector<TradeRecord> trades{trade(-3.0)};
        CHECK(win_ratio(trades) == 0.0);
    }
    SUBCASE("no trades") {
        CHECK_THROWS_WITH_AS(win_ratio({}), "no trades", DomainError);
    }
    SUBCASE("permutation invariant") {
        std::vector<TradeRecord> trades{trade(4.0), trade(-2.0), trade(0.0),
                                        trade(9.0), trade(-1.0)};
        const double base = win_ratio(trades);
        std::mt19937 shuffler(7);
        for (int k = 0; k < 10; ++k) {
            std::shuffle(trades.begin(), trades.end(), shuffler);
            CHECK(win_ratio(trades) == base);
        }
    }
}

TEST_CASE("max_drawdown") {
    SUBCASE("non-decreasing curve has no drawdown") {
        CHECK(max_drawdown({1.0, 2.0, 2.0, 5.0}, 100.0) == 0.0);
    }
    SUBCASE("equity levels [100, 80, 90] lose 20%") {
        // base 50: levels are 50+curve.
        CHECK(max_drawdown({50.0, 30.0, 40.0}, 50.0) ==
              doctest::Approx(-20.0).epsilon(1e-12));
    }
    SUBCASE("a drop from the starting level counts") {
        CHECK(max_drawdown({-10.0, -5.0}, 100.0) ==
              doctest::Approx(-10.0).epsilon(1e-12));
    }
    SUBCASE("streaming equals the all-pairs oracle") {
        Rng rng(11);
        for (int k = 0; k < 50; ++k) {
            std::vector<double> curve;
            double v = 0.0;
            const std::size_t n = 1 + rng.uniform_int(500);
            for (std::size_t i = 0; i < n; ++i) {
                v += rng.uniform(-3, 3.2);
                curve.push_back(v);
            }
            const double base = 100.0 + rng.uniform(0, 50);
            CHECK(max_drawdown(curve, base) ==
                  doctest::Approx(testutil::mdd_all_pairs(curve, base))
                      .epsilon(1e-12));
            CHECK(max_drawdown(curve, base) <= 0.0);
        }
    }
    SUBCASE("zero iff levels never decrease") {
        CHECK(max_drawdown({0.0, 0.0, 1.0}, 10.0) == 0.0);
        CHECK(max_drawdown({0.0, -1e-9, 1.0}, 10.0) < 0.0);
    }
    SUBCASE("bad arguments") {
        CHECK_THROWS_AS(max_drawdown({}, 100.0), DomainError);
        CHECK_THROWS_AS(max_drawdown({1.0}, 0.0), DomainError);
    }
}

TEST_CASE("report emission round-trips") {
    const std::vector<double> rewards{50.0, 30.0, 5.0, -12.5};
    const auto steps = steps_from_rewards(rewards);
    const std::vector<TradeRecord> trades{
        {TradeDirection::long_side, 0, 2, 80.0, 1, false},
        {TradeDirection::short_side, 2, 3, -7.5, 2, true}};
    const std::vector<double> prices{100.0, 155.0, 185.0, 175.0};

    const BacktestReport report =
        compute_report(steps, trades, "TEST", "2018-01-01T00:00:00Z",
                       "2018-01-05T00:00:00Z", 10000.0, 252, 42);
    CHECK(report.n_trades == 2);
    CHECK(report.total_pnl == doctest::Approx(72.5));
    CHECK(report.win_ratio_pct == 50.0);

    const auto dir =
        std::filesystem::temp_directory_path() / "qtrade_report_test";
    std::filesystem::remove_all(dir);
    emit_report(dir, report, steps, trades, prices);

    SUBCASE("report.json parses back to the same values") {
        const BacktestReport parsed = read_report(dir / "report.json");
        CHECK(parsed.instrument == report.instrument);
        CHECK(parsed.period_start == report.period_start);
        CHECK(parsed.period_end == report.period_end);
        CHECK(parsed.sharpe.has_value() == report.sharpe.has_value());
        if (report.sharpe) CHECK(*parsed.sharpe == *report.sharpe);
        CHECK(parsed.win_ratio_pct == report.win_ratio_pct);
        CHECK(parsed.mdd_pct == report.mdd_pct);
        CHECK(parsed.n_trades == report.n_trades);
        CHECK(parsed.total_pnl == report.total_pnl);
        CHECK(parsed.base_capital == report.base_capital);
        CHECK(parsed.seed == report.seed);
    }
    SUBCASE("trades.csv has one row per trade") {
        const auto parsed = read_trades_csv(dir / "trades.csv");
        REQUIRE(parsed.size() == trades.size());
        CHECK(parsed[0].long_term_pnl == 80.0);
        CHECK(parsed[1].direction == TradeDirection::short_side);
        CHECK(parsed[1].contracts == 2);
    }
    SUBCASE("plotdata equity column equals the curve exactly") {
        std::ifstream in(dir / "plotdata.csv");
        REQUIRE(in.good());
        std::string line;
        std::getline(in, line);
        CHECK(line == "t,price,equity");
        const auto curve = equity_curve(steps);
        std::size_t i = 0;
        while (std::getline(in, line)) {
            const auto c1 = line.find(',');
            const auto c2 = line.find(',', c1 + 1);
            CHECK(std::stod(line.substr(c1 + 1, c2 - c1 - 1)) == prices[i]);
            CHECK(std::stod(line.substr(c2 + 1)) == curve[i]);
            ++i;
        }
        CHECK(i == steps.size());
    }

    std::filesystem::remove_all(dir);
}

TEST_CASE("total PnL ties out against the trade ledger") {
    // Random play: total equity must equal the sum of closed trades plus
    // the forced close, because flat steps earn exactly zero.
    const auto series = testutil::daily_series(testutil::random_walk(150, 17));
    TradingEnv env(series, std::chrono::seconds(86400), {}, 30, {});
    Rng rng(23);
    std::vector<StepLogEntry> steps;
    std::vector<TradeRecord> trades;
    EnvState s = env.reset();
    while (env.can_step(s.t)) {
        const auto a = static_cast<Action>(rng.uniform_int(3));
        const StepResult r = env.step(s, a);
        steps.push_back({s.t, static_cast<int>(a),
                         r.next_state.position.long_contracts,
                         r.next_state.position.short_contracts,
                         r.immediate_reward, env.episode_accumulated(),
                         r.closed_trade});
        if (r.closed_trade) trades.push_back(*r.closed_trade);
        s = r.next_state;
    }
    if (const auto forced = env.finish()) trades.push_back(*forced);

    const auto curve = equity_curve(steps);
    CHECK(curve.back() ==
          doctest::Approx(episode_pnl(trades)).epsilon(1e-9));
}
