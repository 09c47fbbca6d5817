#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "vwrrl/agent.hpp"
#include "vwrrl/errors.hpp"
#include "vwrrl/training_log.hpp"

using namespace vwrrl;
using doctest::Approx;

namespace {

TrainConfig chain_config(Mode mode, std::uint64_t seed, long long timesteps, int length = 10) {
    TrainConfig c;
    c.env = "sparse-chain";
    c.env_args["length"] = std::to_string(length);
    c.mode = mode;
    c.seed = seed;
    c.total_timesteps = timesteps;
    c.hidden_dim = 16;
    return c;
}

RolloutBatch batch_from(std::vector<double> r, std::vector<bool> term, double bs) {
    RolloutBatch b;
    b.env_rewards = r;
    b.vwr_rewards = r;
    b.terminals = term;
    b.actions.assign(r.size(), 0);
    b.bootstrap_short = bs;
    b.bootstrap_long = bs;
    return b;
}

}  // namespace

TEST_CASE("hot-wire gating") {
    TrainConfig c;
    c.total_timesteps = 40000;  // stage ends at 1000
    c.epsilon_hotwire = 1.0;
    Rng rng(1);
    CHECK(maybe_hotwire(rng, 0, c, false, 4).has_value());
    CHECK(maybe_hotwire(rng, 999, c, false, 4).has_value());
    CHECK_FALSE(maybe_hotwire(rng, 1000, c, false, 4).has_value());
    CHECK_FALSE(maybe_hotwire(rng, 0, c, true, 4).has_value());
    for (Mode m : {Mode::a2c_baseline, Mode::a2mc_no_hotwire}) {
        c.mode = m;
        CHECK_FALSE(maybe_hotwire(rng, 0, c, false, 4).has_value());
    }
    c.mode = Mode::a2mc_no_flip;
    CHECK(maybe_hotwire(rng, 0, c, false, 4).has_value());
    c.epsilon_hotwire = 0.0;
    CHECK_FALSE(maybe_hotwire(rng, 0, c, false, 4).has_value());
}

TEST_CASE("hot-wire frequency and action distribution") {
    TrainConfig c;
    c.total_timesteps = 1000000;
    Rng rng(2024);
    const int trials = 100000;
    int fired = 0;
    std::vector<int> counts(3, 0);
    for (int i = 0; i < trials; ++i) {
        if (auto a = maybe_hotwire(rng, 0, c, false, 3)) {
            ++fired;
            ++counts[static_cast<std::size_t>(*a)];
        }
    }
    CHECK(std::abs(static_cast<double>(fired) / trials - 0.20) < 0.01);
    for (int k : counts) CHECK(std::abs(static_cast<double>(k) / fired - 1.0 / 3.0) < 0.02);
}

TEST_CASE("hot-wired rollouts repeat one action") {
    auto cfg = chain_config(Mode::a2mc, 3, 100000, 1000);
    cfg.epsilon_hotwire = 1.0;
    auto env = make_env(cfg.env, cfg.env_args);
    RolloutContext ctx(*env, cfg);
    const auto params = initial_params(cfg, env->spec());
    std::set<int> seen;
    for (int k = 0; k < 20; ++k) {
        const auto b = collect_rollout(ctx, params, cfg, cfg.n_steps);
        REQUIRE(b.hotwired);
        CHECK(b.size() == 20);
        for (int a : b.actions) CHECK(a == b.actions.front());
        seen.insert(b.actions.front());
    }
    CHECK(seen.size() == 2);
}

TEST_CASE("reward-seen window") {
    auto cfg = chain_config(Mode::a2mc, 1, 1000, 2);
    cfg.hotwire_window = 5;
    auto env = make_env(cfg.env, cfg.env_args);
    RolloutContext ctx(*env, cfg);
    CHECK_FALSE(ctx.reward_seen_recently(5));
    cfg.n_steps = 1;
    auto params = initial_params(cfg, env->spec());
    // Length-2 chain: the goal is one right step away, reward on reaching it.
    params.policy_b(1, 0) = 50.0;
    const auto b = collect_rollout(ctx, params, cfg, 1);
    CHECK(b.env_rewards.front() == 1.0);
    CHECK(ctx.reward_seen_recently(5));
    params.policy_b(1, 0) = -50.0;
    for (int k = 0; k < 4; ++k) collect_rollout(ctx, params, cfg, 1);
    CHECK(ctx.reward_seen_recently(5));
    collect_rollout(ctx, params, cfg, 1);
    CHECK_FALSE(ctx.reward_seen_recently(5));
}

TEST_CASE("compute_returns worked examples") {
    auto b = batch_from({1, 0, 0}, {false, false, false}, 2.0);
    auto [rs, rl] = compute_returns(b, 0.5);
    CHECK(rs == std::vector<double>{1.25, 0.5, 1.0});
    CHECK(rl == rs);

    b = batch_from({1, 2, 3, 4}, {false, true, false, false}, 10.0);
    std::tie(rs, rl) = compute_returns(b, 0.5);
    CHECK(rs == std::vector<double>{2.0, 2.0, 3.0 + 0.5 * (4 + 5), 4.0 + 5.0});

    b = batch_from({1, 1}, {false, true}, 100.0);
    std::tie(rs, rl) = compute_returns(b, 0.0);
    CHECK(rs == std::vector<double>{1.0, 1.0});
}

TEST_CASE("recursive returns equal direct summation") {
    Rng rng(8);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.below(20);
        std::vector<double> r(n);
        std::vector<bool> term(n);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = (static_cast<double>(rng.below(33)) - 16.0) / 8.0;
            term[i] = rng.bernoulli(0.15);
        }
        const double gamma = static_cast<double>(rng.below(4)) * 0.25;
        const double bs = (static_cast<double>(rng.below(65)) - 32.0) / 4.0;
        const auto [rs, rl] = compute_returns(batch_from(r, term, bs), gamma);
        CHECK(rs == oracle::direct_returns(r, term, bs, gamma));
    }
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.below(30);
        std::vector<double> r(n);
        std::vector<bool> term(n);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = rng.uniform(-5, 5);
            term[i] = rng.bernoulli(0.1);
        }
        const double gamma = rng.uniform(0.0, 0.999);
        const double bs = rng.uniform(-20, 20);
        const auto [rs, rl] = compute_returns(batch_from(r, term, bs), gamma);
        const auto want = oracle::direct_returns(r, term, bs, gamma);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(rs[i] - want[i]) <= 1e-12 * std::max(1.0, std::abs(want[i])));
    }
}

TEST_CASE("rollouts: sparse prefix gives zero vwr, terminals reset and bootstrap") {
    auto cfg = chain_config(Mode::a2mc_no_hotwire, 5, 100000, 40);
    auto env = make_env(cfg.env, cfg.env_args);
    RolloutContext ctx(*env, cfg);
    const auto params = initial_params(cfg, env->spec());
    const auto b = collect_rollout(ctx, params, cfg, cfg.n_steps);
    CHECK(b.size() == 20);
    for (double v : b.vwr_rewards) CHECK(v == 0.0);
    for (double v : b.env_rewards) CHECK(v == 0.0);
    CHECK(b.bootstrap_short == forward(params, ctx.state()).v_short);
    CHECK(collect_rollout(ctx, params, cfg, 7).size() == 7);

    auto short_cfg = chain_config(Mode::a2mc_no_hotwire, 5, 100000, 2);
    short_cfg.n_steps = 1;
    auto env2 = make_env(short_cfg.env, short_cfg.env_args);
    RolloutContext ctx2(*env2, short_cfg);
    auto p2 = initial_params(short_cfg, env2->spec());
    p2.policy_b(1, 0) = 50.0;
    const auto t = collect_rollout(ctx2, p2, short_cfg, 1);
    CHECK(t.terminals.front());
    CHECK(t.bootstrap_short == 0.0);
    CHECK(t.bootstrap_long == 0.0);
    CHECK(ctx2.episodes().size() == 1);
    CHECK(ctx2.episode() == 1);
    CHECK_FALSE(env2->terminal());
}

TEST_CASE("update: zero advantage and zero step leave the policy unchanged") {
    auto cfg = chain_config(Mode::a2mc, 1, 1000);
    cfg.entropy_coef = 0.0;
    auto env = make_env(cfg.env, cfg.env_args);
    RolloutContext ctx(*env, cfg);
    auto params = initial_params(cfg, env->spec());
    const auto b = collect_rollout(ctx, params, cfg, cfg.n_steps);

    std::vector<double> rs, rl;
    for (const auto& s : b.states) {
        const auto c = forward(params, s);
        rs.push_back(c.v_short);
        rl.push_back(c.v_long);
    }
    const auto before = params;
    SgdOptimizer opt(0.1, 0.0, 0.0);
    const auto stats = update(params, opt, b, rs, rl, cfg);
    CHECK(stats.grad_norm == 0.0);
    CHECK(params == before);

    cfg.step_size = 0.0;
    SgdOptimizer frozen(0.0, 0.9, 10.0);
    std::vector<double> ones(b.size(), 1.0);
    update(params, frozen, b, ones, ones, cfg);
    CHECK(params == before);
}

TEST_CASE("baseline mode never touches the long-term head") {
    auto cfg = chain_config(Mode::a2c_baseline, 2, 4000);
    auto env = make_env(cfg.env, cfg.env_args);
    const auto init = initial_params(cfg, env->spec());
    const auto result = train(cfg);
    CHECK(result.params.value_long_w == init.value_long_w);
    CHECK(result.params.value_long_b == init.value_long_b);
    CHECK_FALSE(result.params.value_short_w == init.value_short_w);
    for (const auto& u : result.log.updates) {
        CHECK(u.stats.value_loss_long == 0.0);
        CHECK_FALSE(u.hotwire_active);
    }
}

TEST_CASE("repeated updates on one batch fit the critics") {
    auto cfg = chain_config(Mode::a2mc_no_hotwire, 4, 1000);
    auto env = make_env(cfg.env, cfg.env_args);
    RolloutContext ctx(*env, cfg);
    auto params = initial_params(cfg, env->spec());
    const auto b = collect_rollout(ctx, params, cfg, cfg.n_steps);
    const std::vector<double> rs(b.size(), 1.0), rl(b.size(), -0.5);
    SgdOptimizer opt(0.01, 0.0, 10.0);
    const auto first = update(params, opt, b, rs, rl, cfg);
    UpdateStats last;
    for (int k = 0; k < 49; ++k) last = update(params, opt, b, rs, rl, cfg);
    CHECK(last.value_loss_short < 0.1 * first.value_loss_short);
    CHECK(last.value_loss_long < 0.1 * first.value_loss_long);
}

TEST_CASE("initial parameters and early rollouts agree across modes") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto a = chain_config(Mode::a2mc, seed, 1000);
        auto base = chain_config(Mode::a2c_baseline, seed, 1000);
        auto env_a = make_env(a.env, a.env_args);
        auto env_b = make_env(base.env, base.env_args);
        const auto pa = initial_params(a, env_a->spec());
        CHECK(pa == initial_params(base, env_b->spec()));

        RolloutContext ca(*env_a, a), cb(*env_b, base);
        const auto ba = collect_rollout(ca, pa, a, a.n_steps);
        const auto bb = collect_rollout(cb, pa, base, base.n_steps);
        CHECK_FALSE(bb.hotwired);
        if (!ba.hotwired) {
            CHECK(ba.actions == bb.actions);
            CHECK(ba.env_rewards == bb.env_rewards);
        }
    }
}

TEST_CASE("train: zero timesteps, determinism, logs") {
    auto cfg = chain_config(Mode::a2mc, 9, 0);
    const auto empty = train(cfg);
    CHECK(empty.log.updates.empty());
    CHECK(empty.log.episodes.empty());
    CHECK(empty.log.final_score() == 0.0);

    cfg.total_timesteps = 3000 + 7;
    const auto r1 = train(cfg, {true});
    const auto r2 = train(cfg, {true});
    CHECK(r1.params == r2.params);
    CHECK(r1.log.steps.size() == 3007);
    CHECK(r1.log.updates.size() == 151);
    CHECK(r1.log.updates.back().timestep == 3007);

    std::ostringstream a, b;
    write_update_csv(a, r1.log.updates);
    write_update_csv(b, r2.log.updates);
    CHECK(a.str() == b.str());
    write_step_csv(a, r1.log.steps);
    write_step_csv(b, r2.log.steps);
    CHECK(a.str() == b.str());

    long long steps_in_episodes = 0;
    for (const auto& e : r1.log.episodes) steps_in_episodes += e.length;
    CHECK(steps_in_episodes <= 3007);
    if (!r1.log.episodes.empty()) CHECK(r1.log.episodes.back().end_timestep <= 3007);

    cfg.seed = 10;
    CHECK_FALSE(train(cfg).params == r1.params);

    cfg.gamma = 1.5;
    CHECK_THROWS_AS(train(cfg), InputError);
}

TEST_CASE("logged r_vwr replays exactly") {
    for (HistoryReset reset : {HistoryReset::per_episode, HistoryReset::persistent}) {
        for (Mode m : {Mode::a2mc, Mode::a2mc_no_flip}) {
            auto cfg = chain_config(m, 12, 5000, 4);
            cfg.history_reset = reset;
            const auto r = train(cfg, {true});
            CHECK(audit_vwr_stream(r.log.steps, cfg) == 0);
            bool any_positive = false;
            for (const auto& s : r.log.steps) any_positive = any_positive || s.r_vwr > 0.0;
            CHECK(any_positive);
        }
    }
}

TEST_CASE("reward clipping applies to the learner stream only") {
    TrainConfig cfg;
    cfg.env = "pole-balance";
    cfg.total_timesteps = 400;
    cfg.reward_clip = 0.5;
    const auto r = train(cfg, {true});
    for (const auto& s : r.log.steps) CHECK(s.reward == 0.5);
    for (const auto& e : r.log.episodes) CHECK(e.episode_return == static_cast<double>(e.length));
}

TEST_CASE("final score averages the last 100 episodes") {
    TrainingLog log;
    for (int k = 0; k < 150; ++k) log.episodes.push_back({k, k, 1, static_cast<double>(k)});
    CHECK(log.final_score() == Approx((50.0 + 149.0) / 2.0));
    CHECK(log.final_score(10) == Approx(144.5));
}
