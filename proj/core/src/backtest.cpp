#include "qtrade/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "qtrade/errors.hpp"

namespace qtrade {

EquityCurve equity_curve(std::span<const StepLogEntry> steps) {
    EquityCurve curve;
    curve.reserve(steps.size());
    double total = 0.0;
    for (const StepLogEntry& s : steps) {
        total += s.immediate_reward;
        curve.push_back(total);
    }
    return curve;
}

double sharpe_annualized(const EquityCurve& curve, int periods_per_year) {
    if (periods_per_year < 1)
        throw DomainError("periods_per_year must be >= 1");
    if (curve.size() < 2)
        throw DomainError("Sharpe needs at least two equity points");

    // Per-period changes from the 0 base: the step rewards themselves.
    std::vector<double> changes(curve.size());
    changes[0] = curve[0];
    for (std::size_t i = 1; i < curve.size(); ++i)
        changes[i] = curve[i] - curve[i - 1];

    double mean = 0.0;
    for (double c : changes) mean += c;
    mean /= static_cast<double>(changes.size());

    double ss = 0.0;
    for (double c : changes) ss += (c - mean) * (c - mean);
    const double var = ss / static_cast<double>(changes.size() - 1);
    if (var == 0.0)
        throw DomainError("Sharpe is undefined: zero variance of returns");

    return mean / std::sqrt(var) *
           std::sqrt(static_cast<double>(periods_per_year));
}

double win_ratio(std::span<const TradeRecord> trades) {
    if (trades.empty()) throw DomainError("no trades");
    std::size_t wins = 0;
    for (const TradeRecord& tr : trades)
        if (tr.long_term_pnl > 0.0) ++wins;
    return 100.0 * static_cast<double>(wins) /
           static_cast<double>(trades.size());
}

double max_drawdown(const EquityCurve& curve, double base_capital) {
    if (curve.empty()) throw DomainError("max_drawdown needs a non-empty curve");
    if (base_capital <= 0.0)
        throw DomainError("base_capital must be positive");

    double peak = base_capital;  // level before any step
    double worst = 0.0;
    for (double c : curve) {
        const double level = base_capital + c;
        peak = std::max(peak, level);
        worst = std::max(worst, (peak - level) / peak);
    }
    return -100.0 * worst;
}

BacktestReport compute_report(std::span<const StepLogEntry> steps,
                              std::span<const TradeRecord> trades,
                              const std::string& instrument,
                              const std::string& period_start,
                              const std::string& period_end,
                              double base_capital, int periods_per_year,
                              std::uint64_t seed) {
    BacktestReport report;
    report.instrument = instrument;
    report.period_start = period_start;
    report.period_end = period_end;
    report.base_capital = base_capital;
    report.seed = seed;
    report.n_trades = trades.size();

    const EquityCurve curve = equity_curve(steps);
    report.total_pnl = curve.empty() ? 0.0 : curve.back();
    report.mdd_pct = curve.empty() ? 0.0 : max_drawdown(curve, base_capital);
    report.win_ratio_pct = trades.empty() ? 0.0 : win_ratio(trades);
    try {
        report.sharpe = sharpe_annualized(curve, periods_per_year);
    } catch (const DomainError&) {
        report.sharpe = std::nullopt;
    }
    return report;
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void require_stream(const std::ofstream& out, const std::filesystem::path& p) {
    if (!out) throw IoError("cannot write " + p.string());
}

}  // namespace

void emit_report(const std::filesystem::path& dir, const BacktestReport& report,
                 std::span<const StepLogEntry> steps,
                 std::span<const TradeRecord> trades,
                 std::span<const double> prices) {
    std::filesystem::create_directories(dir);

    {
        nlohmann::json j{{"instrument", report.instrument},
                         {"period_start", report.period_start},
                         {"period_end", report.period_end},
                         {"win_ratio_pct", report.win_ratio_pct},
                         {"mdd_pct", report.mdd_pct},
                         {"n_trades", report.n_trades},
                         {"total_pnl", report.total_pnl},
                         {"base_capital", report.base_capital},
                         {"seed", report.seed}};
        j["sharpe"] = report.sharpe ? nlohmann::json(*report.sharpe)
                                    : nlohmann::json(nullptr);
        const auto path = dir / "report.json";
        std::ofstream out(path);
        require_stream(out, path);
        out << j.dump(2) << '\n';
    }

    {
        const auto path = dir / "trades.csv";
        std::ofstream out(path);
        require_stream(out, path);
        out << "direction,open_t,close_t,contracts,long_term_pnl\n";
        for (const TradeRecord& tr : trades)
            out << (tr.direction == TradeDirection::long_side ? "long"
                                                              : "short")
                << ',' << tr.open_t << ',' << tr.close_t << ',' << tr.contracts
                << ',' << fmt_double(tr.long_term_pnl) << '\n';
        require_stream(out, path);
    }

    {
        const auto path = dir / "plotdata.csv";
        if (prices.size() != steps.size())
            throw DomainError("plot data needs one price per step");
        std::ofstream out(path);
        require_stream(out, path);
        out << "t,price,equity\n";
        const EquityCurve curve = equity_curve(steps);
        for (std::size_t i = 0; i < steps.size(); ++i)
            out << steps[i].t << ',' << fmt_double(prices[i]) << ','
                << fmt_double(curve[i]) << '\n';
        require_stream(out, path);
    }
}

BacktestReport read_report(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("bad report " + file.string() + ": " + e.what());
    }
    BacktestReport r;
    r.instrument = j.at("instrument").get<std::string>();
    r.period_start = j.at("period_start").get<std::string>();
    r.period_end = j.at("period_end").get<std::string>();
    if (!j.at("sharpe").is_null()) r.sharpe = j.at("sharpe").get<double>();
    r.win_ratio_pct = j.at("win_ratio_pct").get<double>();
    r.mdd_pct = j.at("mdd_pct").get<double>();
    r.n_trades = j.at("n_trades").get<std::size_t>();
    r.total_pnl = j.at("total_pnl").get<double>();
    r.base_capital = j.at("base_capital").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
}

std::vector<TradeRecord> read_trades_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open " + file.string());

    std::vector<TradeRecord> trades;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;  // header
        std::istringstream row(line);
        std::string dir, open_t, close_t, contracts, pnl;
        if (!std::getline(row, dir, ',') || !std::getline(row, open_t, ',') ||
            !std::getline(row, close_t, ',') ||
            !std::getline(row, contracts, ',') || !std::getline(row, pnl))
            throw ParseError("bad trade row", line_no);
        TradeRecord tr;
        tr.direction = dir == "long" ? TradeDirection::long_side
                                     : TradeDirection::short_side;
        tr.open_t = std::stoull(open_t);
        tr.close_t = std::stoull(close_t);
        tr.contracts = std::stoi(contracts);
        tr.long_term_pnl = std::stod(pnl);
        trades.push_back(tr);
    }
    return trades;
}

}  // namespace qtrade
