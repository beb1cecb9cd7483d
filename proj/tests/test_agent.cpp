#include <doctest.h>

#include <cmath>
#include <cstring>
#include <memory>
#include <sstream>

#include "helpers.hpp"
#include "qtrade/agent.hpp"
#include "qtrade/errors.hpp"

using namespace qtrade;

namespace {

constexpr std::chrono::seconds kDay{86400};

FeatureWindow random_window(std::size_t w, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::array<double, kFeatureCount>> rows(w);
    for (auto& row : rows)
        for (double& v : row) v = rng.uniform(0.1, 1.0);
    auto series = std::make_shared<FeatureSeries>(
        FeatureSeries::from_rows(std::move(rows)));
    return build_feature_window(series, w - 1, w);
}

NetConfig tiny_dims() {
    NetConfig c;
    c.lstm1 = 4;
    c.lstm2 = 4;
    c.pos_branch = 3;
    c.merge1 = 5;
    c.merge2 = 4;
    return c;
}

Transition make_transition(std::uint64_t seed, Action action, double reward,
                           bool terminal = false) {
    Transition tr;
    tr.market = random_window(3, seed);
    tr.next_market = random_window(3, seed + 1000);
    tr.position = {0.0, 0.0, 0.0};
    tr.next_position = {0.2, 0.0, 0.5};
    tr.action = action;
    tr.reward = reward;
    tr.terminal = terminal;
    return tr;
}

}  // namespace

TEST_CASE("select_action") {
    const NetConfig cfg = tiny_dims();
    QNetwork net(cfg);
    HyperParams hyper;

    SUBCASE("epsilon 0 is always greedy; ties go to the lowest code") {
        const NetworkParams zero = zeros_like(init_params(cfg, 1));
        Rng rng(5);
        for (int i = 0; i < 50; ++i) {
            const SelectResult r = select_action(
                net, zero, random_window(3, i), {0, 0, 0}, 0.0, hyper, rng);
            CHECK(r.action == Action::hold);  // all Q equal -> code 0
            CHECK(r.epsilon == 0.0);
            CHECK(!r.explored);
        }
    }

    SUBCASE("one exploration event decays epsilon to 0.995") {
        const NetworkParams p = init_params(cfg, 2);
        Rng rng(3);
        const SelectResult r = select_action(net, p, random_window(3, 4),
                                             {0, 0, 0}, 1.0, hyper, rng);
        CHECK(r.explored);
        CHECK(r.epsilon == doctest::Approx(0.995).epsilon(1e-15));
    }

    SUBCASE("epsilon 1 explores uniformly (3-sigma binomial bound)") {
        const NetworkParams p = init_params(cfg, 6);
        HyperParams h;
        h.epsilon_min = 1.0;  // pin epsilon so every draw explores
        Rng rng(7);
        const FeatureWindow market = random_window(3, 8);
        const int n = 30000;
        std::array<int, 3> counts{};
        for (int i = 0; i < n; ++i) {
            const SelectResult r =
                select_action(net, p, market, {0, 0, 0}, 1.0, h, rng);
            REQUIRE(r.explored);
            counts[static_cast<std::size_t>(r.action)]++;
        }
        const double expect = n / 3.0;
        const double sigma = std::sqrt(n * (1.0 / 3) * (2.0 / 3));
        for (int c : counts) {
            CHECK(c > expect - 3 * sigma);
            CHECK(c < expect + 3 * sigma);
        }
    }

    SUBCASE("greedy picks the argmax of the forward pass") {
        NetworkParams p = zeros_like(init_params(cfg, 9));
        p.head.b[2] = 1.0;  // Q = (0, 0, 1): sell dominates
        Rng rng(10);
        const SelectResult r = select_action(net, p, random_window(3, 11),
                                             {0, 0, 0}, 0.0, hyper, rng);
        CHECK(r.action == Action::sell);
    }
}

TEST_CASE("epsilon trajectory follows max(min, decay^n) exactly") {
    const NetConfig cfg = tiny_dims();
    QNetwork net(cfg);
    const NetworkParams p = init_params(cfg, 12);
    HyperParams hyper;  // decay 0.995, min 0.01
    Rng rng(13);
    const FeatureWindow market = random_window(3, 14);

    double epsilon = 1.0;
    double oracle = 1.0;  // independent recursion
    int events = 0;
    while (events < 2000) {
        const SelectResult r =
            select_action(net, p, market, {0, 0, 0}, epsilon, hyper, rng);
        epsilon = r.epsilon;
        if (!r.explored) continue;
        ++events;
        oracle = std::max(hyper.epsilon_min, oracle * hyper.epsilon_decay);
        REQUIRE(epsilon == oracle);  // bit-exact: same recursion shape
        REQUIRE(epsilon ==
                doctest::Approx(std::max(0.01, std::pow(0.995, events)))
                    .epsilon(1e-9));
    }
    CHECK(epsilon == 0.01);
}

TEST_CASE("replay memory keeps insertion order and raises the full flag") {
    ReplayMemory mem(100);
    CHECK(mem.size() == 0);
    mem.push(make_transition(0, Action::buy, 0.0));
    CHECK(mem.size() == 1);
    CHECK(!mem.full());

    for (int i = 1; i < 100; ++i)
        mem.push(make_transition(i, static_cast<Action>(i % 3),
                                 static_cast<double>(i)));
    CHECK(mem.size() == 100);
    CHECK(mem.full());
    CHECK_THROWS_AS(mem.push(make_transition(7, Action::hold, 0.0)), UsageError);

    std::size_t i = 0;
    for (const Transition& tr : mem) {
        CHECK(tr.reward == static_cast<double>(i));
        ++i;
    }
    mem.clear();
    CHECK(mem.size() == 0);
}

TEST_CASE("compute_target") {
    const NetConfig cfg = tiny_dims();
    QNetwork net(cfg);
    const NetworkParams online = init_params(cfg, 21);
    const NetworkParams target = init_params(cfg, 22);

    SUBCASE("gamma 0 collapses to the reward") {
        const Transition tr = make_transition(23, Action::buy, 4.25);
        CHECK(compute_target(net, online, target, tr, 0.0) == 4.25);
    }
    SUBCASE("terminal transitions use the reward alone") {
        const Transition tr = make_transition(24, Action::sell, -1.5, true);
        CHECK(compute_target(net, online, target, tr, 0.9) == -1.5);
    }
    SUBCASE("composed-forward oracle") {
        const Transition tr = make_transition(25, Action::buy, 2.0);
        const double got = compute_target(net, online, target, tr, 0.8);

        // By hand: argmax under the online net, value under the target net.
        const QValues qo = net.forward(online, tr.next_market, tr.next_position);
        int best = 0;
        for (int a = 1; a < 3; ++a)
            if (qo[a] > qo[best]) best = a;
        const QValues qt = net.forward(target, tr.next_market, tr.next_position);
        CHECK(got == doctest::Approx(2.0 + 0.8 * qt[best]).epsilon(1e-12));
    }
}

TEST_CASE("replay_fit") {
    const NetConfig cfg = tiny_dims();
    QNetwork net(cfg);
    HyperParams hyper;

    SUBCASE("a perfectly fit transition leaves the parameters unchanged") {
        NetworkParams online = init_params(cfg, 31);
        const NetworkParams target = online;
        Transition tr = make_transition(32, Action::buy, 0.0, true);
        // Terminal target y = reward; set the reward to the current Q.
        const QValues q = net.forward(online, tr.market, tr.position);
        tr.reward = q[1];

        ReplayMemory mem(4);
        mem.push(tr);
        AdamState adam = AdamState::init(online);
        const NetworkParams before = online;
        replay_fit(net, online, target, mem, adam, hyper);
        CHECK(mem.size() == 0);

        auto now = param_refs(online);
        auto was = param_refs(const_cast<NetworkParams&>(before));
        for (std::size_t k = 0; k < now.size(); ++k)
            for (std::ptrdiff_t i = 0; i < now[k].size; ++i)
                CHECK(now[k].data[i] == was[k].data[i]);
    }

    SUBCASE("repeated replay converges monotonically toward the target") {
        NetworkParams online = init_params(cfg, 33);
        const NetworkParams target = online;
        const Transition tr = make_transition(34, Action::sell, 3.0, true);
        AdamState adam = AdamState::init(online);

        double prev_err = std::numeric_limits<double>::infinity();
        double first_err = 0.0, last_err = 0.0;
        for (int k = 0; k < 200; ++k) {
            const QValues q = net.forward(online, tr.market, tr.position);
            const double err = (q[2] - 3.0) * (q[2] - 3.0);
            if (k == 0) first_err = err;
            last_err = err;
            CHECK(err <= prev_err + 1e-12);
            prev_err = err;

            ReplayMemory mem(1);
            mem.push(tr);
            replay_fit(net, online, target, mem, adam, hyper);
        }
        CHECK(last_err < first_err);
    }

    SUBCASE("empty memory is a no-op") {
        NetworkParams online = init_params(cfg, 35);
        const NetworkParams before = online;
        const NetworkParams target = online;
        ReplayMemory mem(4);
        AdamState adam = AdamState::init(online);
        replay_fit(net, online, target, mem, adam, hyper);
        auto now = param_refs(online);
        auto was = param_refs(const_cast<NetworkParams&>(before));
        for (std::size_t k = 0; k < now.size(); ++k)
            for (std::ptrdiff_t i = 0; i < now[k].size; ++i)
                CHECK(now[k].data[i] == was[k].data[i]);
    }

    SUBCASE("replay touches parameters only, never the feature data") {
        const auto checksum = [](const ReplayMemory& mem) {
            std::uint64_t h = 0xcbf29ce484222325ull;
            const auto mix = [&](const FeatureWindow& w) {
                for (std::size_t i = 0; i < w.window(); ++i)
                    for (double v : w.row(i)) {
                        std::uint64_t bits;
                        std::memcpy(&bits, &v, sizeof bits);
                        h = (h ^ bits) * 0x100000001b3ull;
                    }
            };
            for (const Transition& tr : mem) {
                mix(tr.market);
                mix(tr.next_market);
            }
            return h;
        };

        ReplayMemory mem(8);
        for (int i = 0; i < 8; ++i)
            mem.push(make_transition(60 + i, static_cast<Action>(i % 3), 1.0));
        const std::uint64_t before = checksum(mem);

        // Replay a copy of the same windows through a full fit cycle.
        ReplayMemory work(8);
        for (const Transition& tr : mem) work.push(tr);
        NetworkParams online = init_params(cfg, 38);
        const NetworkParams target = init_params(cfg, 39);
        AdamState adam = AdamState::init(online);
        replay_fit(net, online, target, work, adam, hyper);

        CHECK(checksum(mem) == before);
    }

    SUBCASE("gamma 0 equals a direct regression on rewards") {
        std::vector<Transition> batch;
        for (int i = 0; i < 12; ++i)
            batch.push_back(make_transition(40 + i, static_cast<Action>(i % 3),
                                            0.5 * i - 2.0));

        HyperParams h0;
        h0.gamma = 0.0;
        NetworkParams a = init_params(cfg, 36);
        {
            ReplayMemory mem(batch.size());
            for (const auto& tr : batch) mem.push(tr);
            AdamState adam = AdamState::init(a);
            const NetworkParams target = init_params(cfg, 37);
            replay_fit(net, a, target, mem, adam, h0);
        }

        // Direct regression: an independent loop fitting Q(s, a) to r.
        NetworkParams b = init_params(cfg, 36);
        {
            AdamState adam = AdamState::init(b);
            QNetwork net2(cfg);
            for (const auto& tr : batch) {
                const QValues q = net2.forward(b, tr.market, tr.position);
                QValues grad{0, 0, 0};
                const auto ai = static_cast<std::size_t>(tr.action);
                grad[ai] = 2.0 * (q[ai] - tr.reward);
                adam_step(b, net2.backward(b, grad), adam, h0.lr);
            }
        }

        auto ra = param_refs(a);
        auto rb = param_refs(b);
        for (std::size_t k = 0; k < ra.size(); ++k)
            for (std::ptrdiff_t i = 0; i < ra[k].size; ++i)
                CHECK(ra[k].data[i] == rb[k].data[i]);
    }
}

TEST_CASE("position normalizer") {
    PositionNormalizer norm(5);
    const Eigen::Vector3d v0 = norm.normalize({2, 0, 0.0});
    CHECK(v0[0] == doctest::Approx(0.4));
    CHECK(v0[1] == 0.0);
    CHECK(v0[2] == 0.0);

    norm.observe(50.0);
    norm.observe(-200.0);
    norm.observe(10.0);  // expanding: the factor never shrinks
    const Eigen::Vector3d v1 = norm.normalize({0, 3, 100.0});
    CHECK(v1[1] == doctest::Approx(0.6));
    CHECK(v1[2] == doctest::Approx(0.5));
}

TEST_CASE("online_learn") {
    const NetConfig cfg = tiny_dims();
    const auto series = testutil::daily_series(testutil::random_walk(140, 71));

    SUBCASE("zero total steps does nothing") {
        TradingEnv env(series, kDay, {}, 10, {});
        QNetwork net(cfg);
        NetworkParams online = init_params(cfg, 1);
        const NetworkParams before = online;
        const LearnResult r = online_learn(env, net, online, {}, 5, 0);
        CHECK(r.steps.empty());
        CHECK(r.trades.empty());
        auto now = param_refs(online);
        auto was = param_refs(const_cast<NetworkParams&>(before));
        for (std::size_t k = 0; k < now.size(); ++k)
            for (std::ptrdiff_t i = 0; i < now[k].size; ++i)
                CHECK(now[k].data[i] == was[k].data[i]);
    }

    SUBCASE("pinned epsilon mirrors the rng stream") {
        TradingEnv env(series, kDay, {}, 10, {});
        QNetwork net(cfg);
        NetworkParams online = init_params(cfg, 2);
        HyperParams hyper;
        hyper.epsilon = 1.0;
        hyper.epsilon_min = 1.0;  // exploration forever
        hyper.memory_capacity = 16;
        const std::uint64_t seed = 1234;
        const LearnResult r = online_learn(env, net, online, hyper, seed, 40);

        Rng replica(seed);
        for (const StepLogEntry& s : r.steps) {
            REQUIRE(replica.uniform() < 1.0);
            CHECK(s.action == replica.uniform_int(3));
        }
    }

    SUBCASE("two identical runs produce identical step logs") {
        const auto run = [&] {
            TradingEnv env(series, kDay, {}, 10, {});
            QNetwork net(cfg);
            NetworkParams online = init_params(cfg, 3);
            HyperParams hyper;
            hyper.memory_capacity = 12;
            const LearnResult r = online_learn(env, net, online, hyper, 99);
            std::ostringstream out;
            write_step_log(out, r.steps);
            return out.str();
        };
        CHECK(run() == run());
    }

    SUBCASE("replay cycles fire on a full memory and at the end of data") {
        TradingEnv env(series, kDay, {}, 10, {});
        QNetwork net(cfg);
        NetworkParams online = init_params(cfg, 4);
        HyperParams hyper;
        hyper.memory_capacity = 16;
        std::vector<std::size_t> cycles;
        const LearnResult r = online_learn(
            env, net, online, hyper, 7,
            std::numeric_limits<std::size_t>::max(),
            [&](std::size_t cycle, const NetworkParams&) {
                cycles.push_back(cycle);
            });
        // 140 daily bars, warmup 26, window 10: decisions at 35..138.
        const std::size_t steps = r.steps.size();
        CHECK(steps == 104);
        const std::size_t full = steps / 16;
        const std::size_t expected = full + (steps % 16 ? 1 : 0);
        CHECK(r.replay_cycles == expected);
        CHECK(cycles.size() == expected);
        // A trade log entry for the forced close if a position was open.
        if (!r.trades.empty()) {
            std::size_t forced = 0;
            for (const auto& tr : r.trades) forced += tr.forced ? 1 : 0;
            CHECK(forced <= 1);
        }
    }

    SUBCASE("learner reward credits the long-term PnL at close") {
        // Commission-free, unit-exposure: rewards are pure price diffs.
        EnvConfig ecfg;
        ecfg.commission = 0.0;
        TradingEnv env(series, kDay, {}, 10, ecfg);
        QNetwork net(cfg);
        NetworkParams online = init_params(cfg, 8);
        HyperParams hyper;
        hyper.epsilon = 1.0;
        hyper.epsilon_min = 1.0;
        hyper.memory_capacity = 500;  // no replay: the memory stays inspectable
        // Run manually to capture the transitions.
        EnvState s = env.reset();
        PositionNormalizer norm(ecfg.max_contracts);
        norm.observe(s.position.pnl);
        Rng rng(3);
        ReplayMemory mem(hyper.memory_capacity);
        double epsilon = 1.0;
        std::vector<StepResult> results;
        for (int i = 0; i < 60; ++i) {
            const SelectResult sel = select_action(
                net, online, s.market, norm.normalize(s.position), epsilon,
                hyper, rng);
            epsilon = sel.epsilon;
            const StepResult r = env.step(s, sel.action);
            norm.observe(r.next_state.position.pnl);
            mem.push(Transition{s.market, r.next_state.market,
                                norm.normalize(s.position),
                                norm.normalize(r.next_state.position),
                                sel.action,
                                r.learner_reward +
                                    r.closed_learner_pnl.value_or(0.0),
                                r.done});
            results.push_back(r);
            s = r.next_state;
        }
        std::size_t i = 0;
        for (const Transition& tr : mem) {
            const StepResult& r = results[i];
            const double expect =
                r.learner_reward + r.closed_learner_pnl.value_or(0.0);
            CHECK(tr.reward == expect);
            if (r.closed_trade)
                CHECK(tr.reward ==
                      doctest::Approx(r.immediate_reward +
                                      r.closed_trade->long_term_pnl));
            ++i;
        }
    }
}

TEST_CASE("hyperparameter validation") {
    HyperParams h;
    h.gamma = 1.5;
    CHECK_THROWS_AS(h.validate(), DomainError);
    h = {};
    h.epsilon_decay = 1.0;
    CHECK_THROWS_AS(h.validate(), DomainError);
    h = {};
    h.memory_capacity = 0;
    CHECK_THROWS_AS(h.validate(), DomainError);
    h = {};
    CHECK_NOTHROW(h.validate());
}
