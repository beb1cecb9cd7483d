// Command-line front end: features, run, gradcheck, report.
// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "qtrade/config.hpp"
#include "qtrade/errors.hpp"
#include "qtrade/experiment.hpp"
#include "qtrade/gradcheck.hpp"

namespace {

struct GlobalFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
};

qtrade::RunConfig make_config(const GlobalFlags& g) {
    qtrade::RunConfig cfg;
    if (!g.config_path.empty()) cfg = qtrade::load_run_config(g.config_path);
    // Flag overrides beat the file, which beats defaults.
    if (g.seed) cfg.seed = *g.seed;
    if (!g.out.empty()) cfg.out_dir = g.out;
    return cfg;
}

int cmd_features(const qtrade::RunConfig& cfg) {
    if (cfg.data_path.empty()) throw qtrade::UsageError("no data_path configured");
    const qtrade::PriceSeries series = qtrade::load_price_series(cfg.data_path);
    const auto bars =
        qtrade::resample_bars(series, std::chrono::seconds(cfg.bar_seconds));
    const auto features = qtrade::FeatureSeries::compute(bars, cfg.indicators);

    if (cfg.out_dir.empty()) {
        qtrade::write_feature_csv(std::cout, features);
    } else {
        std::filesystem::path path = cfg.out_dir;
        if (std::filesystem::is_directory(path) || path.extension().empty()) {
            std::filesystem::create_directories(path);
            path /= "features.csv";
        }
        std::ofstream out(path);
        if (!out) throw qtrade::IoError("cannot write " + path.string());
        qtrade::write_feature_csv(out, features);
        std::cout << "wrote " << path.string() << " ("
                  << features.size() - features.warmup() << " rows)\n";
    }
    return 0;
}

int cmd_run(const qtrade::RunConfig& cfg, const std::vector<std::string>& extra_configs,
            bool parallel, const GlobalFlags& g) {
    std::vector<qtrade::RunConfig> configs{cfg};
    for (const std::string& path : extra_configs) {
        qtrade::RunConfig c = qtrade::load_run_config(path);
        if (g.seed) c.seed = *g.seed;
        configs.push_back(std::move(c));
    }

    const auto run_one = [](const qtrade::RunConfig& c) {
        const qtrade::RunArtifacts art = qtrade::run_experiment(c);
        std::cout << "run directory: " << art.run_dir.string() << "\n"
                  << "steps: " << art.steps.size()
                  << ", trades: " << art.trades.size()
                  << ", total PnL: " << art.report.total_pnl << "\n\n"
                  << qtrade::report_table(art.report);
    };

    if (parallel && configs.size() > 1) {
        // Each worker owns an independent agent+environment pair.
        std::vector<std::thread> workers;
        std::vector<std::exception_ptr> errors(configs.size());
        for (std::size_t i = 0; i < configs.size(); ++i)
            workers.emplace_back([&, i] {
                try {
                    qtrade::run_experiment(configs[i]);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            });
        for (auto& w : workers) w.join();
        for (const auto& err : errors)
            if (err) std::rethrow_exception(err);
        std::cout << configs.size() << " runs completed\n";
        return 0;
    }

    for (const auto& c : configs) run_one(c);
    return 0;
}

int cmd_gradcheck(bool corrupt, int seeds, const std::string& windows_csv) {
    qtrade::GradCheckConfig gc;
    gc.corrupt = corrupt;
    if (seeds > 0) {
        gc.seeds.clear();
        for (int s = 1; s <= seeds; ++s)
            gc.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    if (!windows_csv.empty()) {
        gc.windows.clear();
        std::size_t start = 0;
        while (start <= windows_csv.size()) {
            const auto comma = windows_csv.find(',', start);
            const std::string tok = windows_csv.substr(
                start, comma == std::string::npos ? std::string::npos
                                                  : comma - start);
            if (!tok.empty()) gc.windows.push_back(std::stoul(tok));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (gc.windows.empty())
            throw qtrade::UsageError("no window lengths given");
    }

    const qtrade::GradCheckResult res = qtrade::run_gradient_check(gc);
    std::printf("gradient check: %zu configs, %zu components, max relative "
                "error %.3e (tolerance %.0e)\n",
                res.configs_checked, res.components_checked, res.max_rel_error,
                gc.tolerance);
    std::printf("%s\n", res.pass ? "PASS" : "FAIL");
    return res.pass ? 0 : 1;
}

int cmd_report(const std::string& run_dir) {
    const qtrade::BacktestReport report = qtrade::recompute_report(run_dir);
    std::cout << qtrade::report_table(report);
    std::cout << "trades: " << report.n_trades
              << ", total PnL: " << report.total_pnl
              << ", base capital: " << report.base_capital
              << ", period: " << report.period_start << " .. "
              << report.period_end << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"online deep-Q trading engine"};
    app.require_subcommand(1);

    GlobalFlags g;
    app.add_option("--config", g.config_path, "JSON config file")
        ->envname("QTRADE_CONFIG");
    app.add_option("--seed", g.seed, "override the run seed");
    app.add_option("--out", g.out, "override the output path");

    auto* features = app.add_subcommand(
        "features", "compute and dump the scaled feature CSV");
    features->fallthrough();
    std::string features_data;
    features->add_option("--data", features_data, "price CSV (timestamp,price)");

    auto* run = app.add_subcommand("run", "train online and backtest");
    run->fallthrough();
    std::string run_data, run_actions;
    std::vector<std::string> extra_configs;
    bool parallel = false;
    run->add_option("--data", run_data, "price CSV (timestamp,price)");
    run->add_option("--actions", run_actions,
                    "scripted action file (replaces the agent)");
    run->add_option("--also", extra_configs,
                    "additional config files to run as separate experiments");
    run->add_flag("--parallel", parallel,
                  "fan the experiments out across worker threads");

    auto* gradcheck = app.add_subcommand(
        "gradcheck", "finite-difference verification of the gradients");
    gradcheck->fallthrough();
    bool corrupt = false;
    int gc_seeds = 0;
    std::string gc_windows;
    gradcheck->add_flag("--corrupt-gradient", corrupt,
                        "negative control: corrupt one gradient component");
    gradcheck->add_option("--seeds", gc_seeds, "number of seeds (default 10)");
    gradcheck->add_option("--windows", gc_windows,
                          "comma-separated window lengths (default 1,3,8)");

    auto* report = app.add_subcommand(
        "report", "recompute metrics from a run directory's logs");
    report->fallthrough();
    std::string report_dir;
    report->add_option("run_dir", report_dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (features->parsed()) {
            qtrade::RunConfig cfg = make_config(g);
            if (!features_data.empty()) cfg.data_path = features_data;
            return cmd_features(cfg);
        }
        if (run->parsed()) {
            qtrade::RunConfig cfg = make_config(g);
            if (!run_data.empty()) cfg.data_path = run_data;
            if (!run_actions.empty()) cfg.actions_path = run_actions;
            return cmd_run(cfg, extra_configs, parallel, g);
        }
        if (gradcheck->parsed()) return cmd_gradcheck(corrupt, gc_seeds, gc_windows);
        if (report->parsed()) return cmd_report(report_dir);
    } catch (const qtrade::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const qtrade::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
