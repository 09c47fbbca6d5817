#include "vwrrl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "vwrrl/errors.hpp"

namespace vwrrl {

namespace {

// Independent random streams derived from the master seed.
enum Stream : std::uint64_t { kInitStream = 1, kActionStream = 2, kHotwireStream = 3, kEnvStream = 4 };

int sample_action(const Eigen::VectorXd& probs, Rng& rng) {
    const double u = rng.uniform();
    double cumulative = 0.0;
    for (Eigen::Index a = 0; a < probs.size(); ++a) {
        cumulative += probs(a);
        if (u < cumulative) return static_cast<int>(a);
    }
    return static_cast<int>(probs.size() - 1);
}

}  // namespace

double TrainingLog::final_score(std::size_t window) const {
    if (episodes.empty()) return 0.0;
    const std::size_t n = std::min(window, episodes.size());
    double sum = 0.0;
    for (auto it = episodes.end() - static_cast<std::ptrdiff_t>(n); it != episodes.end(); ++it) {
        sum += it->episode_return;
    }
    return sum / static_cast<double>(n);
}

std::optional<int> maybe_hotwire(Rng& rng, long long timestep, const TrainConfig& cfg, bool reward_seen_recently,
                                 int num_actions) {
    if (!uses_hotwire(cfg.mode) || reward_seen_recently) return std::nullopt;
    const double stage_end = cfg.hotwire_fraction * static_cast<double>(cfg.total_timesteps);
    if (!(static_cast<double>(timestep) < stage_end)) return std::nullopt;
    if (!rng.bernoulli(cfg.epsilon_hotwire)) return std::nullopt;
    return static_cast<int>(rng.below(static_cast<std::uint64_t>(num_actions)));
}

RolloutContext::RolloutContext(Environment& env, const TrainConfig& cfg)
    : env_(&env),
      seed_(cfg.seed),
      history_(cfg.vwr.window_T),
      action_rng_(derive_seed(cfg.seed, kActionStream)),
      hotwire_rng_(derive_seed(cfg.seed, kHotwireStream)) {
    start_episode();
}

void RolloutContext::start_episode() {
    state_ = env_->reset(derive_seed(derive_seed(seed_, kEnvStream), static_cast<std::uint64_t>(episode_)));
    episode_return_ = 0.0;
}

bool RolloutContext::reward_seen_recently(int window) const {
    return last_nonzero_reward_ >= 0 && timestep_ - last_nonzero_reward_ <= window;
}

RolloutBatch collect_rollout(RolloutContext& ctx, const PolicyValueParams& params, const TrainConfig& cfg,
                             int max_steps) {
    const int n = std::max(0, std::min(cfg.n_steps, max_steps));
    const VwrConfig vcfg = cfg.resolved_vwr();
    Environment& env = *ctx.env_;

    RolloutBatch batch;
    const std::optional<int> hot = maybe_hotwire(ctx.hotwire_rng_, ctx.timestep_, cfg,
                                                 ctx.reward_seen_recently(cfg.hotwire_window),
                                                 env.spec().num_actions);
    batch.hotwired = hot.has_value();

    for (int k = 0; k < n; ++k) {
        int action = 0;
        if (hot) {
            action = *hot;
        } else {
            action = sample_action(forward(params, ctx.state_).probs, ctx.action_rng_);
        }
        batch.states.push_back(ctx.state_);
        batch.actions.push_back(action);

        StepResult res = env.step(action);
        const double raw = res.reward;
        const double reward = cfg.reward_clip ? std::clamp(raw, -*cfg.reward_clip, *cfg.reward_clip) : raw;
        ctx.history_.push(reward);
        const VwrBreakdown b = vwr(ctx.history_, vcfg);

        batch.env_rewards.push_back(reward);
        batch.vwr_rewards.push_back(b.r_vwr);
        batch.sigma_deltas.push_back(b.sigma_delta);
        batch.terminals.push_back(res.terminal);

        if (ctx.step_sink_) {
            ctx.step_sink_->push_back(
                {ctx.timestep_, ctx.episode_, reward, b.r_vwr, b.sigma_delta, res.terminal, batch.hotwired});
        }
        if (raw != 0.0) ctx.last_nonzero_reward_ = ctx.timestep_;
        ++ctx.timestep_;
        ctx.episode_return_ += raw;

        if (res.terminal) {
            ctx.episodes_.push_back({ctx.episode_, ctx.timestep_, res.episode_step, ctx.episode_return_});
            if (cfg.history_reset == HistoryReset::per_episode) ctx.history_.clear();
            ++ctx.episode_;
            ctx.start_episode();
        } else {
            ctx.state_ = std::move(res.next_state);
        }
    }

    if (n > 0 && !batch.terminals.back()) {
        const ForwardCache tail = forward(params, ctx.state_);
        batch.bootstrap_short = tail.v_short;
        batch.bootstrap_long = tail.v_long;
    }
    return batch;
}

std::pair<std::vector<double>, std::vector<double>> compute_returns(const RolloutBatch& batch, double gamma) {
    const std::size_t n = batch.size();
    std::vector<double> short_term(n), long_term(n);
    double rs = batch.bootstrap_short;
    double rl = batch.bootstrap_long;
    for (std::size_t i = n; i-- > 0;) {
        if (batch.terminals[i]) {
            rs = 0.0;
            rl = 0.0;
        }
        rs = batch.env_rewards[i] + gamma * rs;
        rl = batch.vwr_rewards[i] + gamma * rl;
        short_term[i] = rs;
        long_term[i] = rl;
    }
    return {std::move(short_term), std::move(long_term)};
}

PolicyValueParams initial_params(const TrainConfig& cfg, const EnvSpec& spec) {
    Rng rng(derive_seed(cfg.seed, kInitStream));
    return PolicyValueParams::random(spec.state_dim, cfg.hidden_dim, spec.num_actions, rng);
}

UpdateStats update(PolicyValueParams& params, SgdOptimizer& optimizer, const RolloutBatch& batch,
                   const std::vector<double>& returns_short, const std::vector<double>& returns_long,
                   const TrainConfig& cfg) {
    const std::size_t n = batch.size();
    if (returns_short.size() != n || returns_long.size() != n || batch.states.size() != n) {
        throw InputError("update: batch and returns disagree in length");
    }
    UpdateStats stats;
    if (n == 0) return stats;

    const bool long_critic = uses_long_critic(cfg.mode);
    PolicyValueParams grads = PolicyValueParams::zeros(params.state_dim(), params.hidden_dim(), params.num_actions());

    for (std::size_t i = 0; i < n; ++i) {
        const ForwardCache cache = forward(params, batch.states[i]);
        LossTerms terms;
        terms.action = batch.actions[i];
        terms.td_short = returns_short[i] - cache.v_short;
        terms.td_long = long_critic ? returns_long[i] - cache.v_long : 0.0;
        terms.advantage_sum = terms.td_short + terms.td_long;
        terms.entropy_coef = cfg.entropy_coef;
        terms.value_coef_short = cfg.value_coef_short;
        terms.value_coef_long = long_critic ? cfg.value_coef_long : 0.0;
        grads += backward(params, cache, terms);

        stats.policy_loss += -cache.log_probs(terms.action) * terms.advantage_sum;
        stats.value_loss_short += terms.td_short * terms.td_short;
        stats.value_loss_long += terms.td_long * terms.td_long;
        stats.entropy += cache.entropy();
        stats.mean_advantage += terms.advantage_sum;
    }
    const double inv = 1.0 / static_cast<double>(n);
    stats.policy_loss *= inv;
    stats.value_loss_short *= inv;
    stats.value_loss_long *= inv;
    stats.entropy *= inv;
    stats.mean_advantage *= inv;

    for (double v : {stats.policy_loss, stats.value_loss_short, stats.value_loss_long, stats.entropy}) {
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "non-finite loss (policy=" << stats.policy_loss << " value_short=" << stats.value_loss_short
                << " value_long=" << stats.value_loss_long << " entropy=" << stats.entropy << ")\nparameters:\n"
                << params.diagnostics();
            throw TrainingError(msg.str());
        }
    }

    stats.grad_norm = optimizer.step(params, grads);
    if (!params.all_finite()) throw TrainingError("non-finite parameters after update\n" + params.diagnostics());
    return stats;
}

TrainingResult train(const TrainConfig& cfg, const TrainOptions& options) {
    cfg.validate();
    auto env = make_env(cfg.env, cfg.env_args);
    TrainingResult result{{}, initial_params(cfg, env->spec())};
    if (cfg.total_timesteps == 0) return result;

    SgdOptimizer optimizer(cfg.step_size, cfg.momentum, cfg.grad_clip);
    RolloutContext ctx(*env, cfg);
    if (options.record_steps) ctx.record_steps(&result.log.steps);
    const double gamma = cfg.resolved_gamma();

    while (ctx.timestep() < cfg.total_timesteps) {
        const long long remaining = cfg.total_timesteps - ctx.timestep();
        const RolloutBatch batch =
            collect_rollout(ctx, result.params, cfg, static_cast<int>(std::min<long long>(remaining, cfg.n_steps)));
        const auto [returns_short, returns_long] = compute_returns(batch, gamma);

        UpdateRecord rec;
        rec.stats = update(result.params, optimizer, batch, returns_short, returns_long, cfg);
        rec.timestep = ctx.timestep();
        rec.episode = ctx.episode();
        const auto& episodes = ctx.episodes();
        if (!episodes.empty()) rec.episode_return = episodes.back().episode_return;
        const std::size_t window = std::min<std::size_t>(100, episodes.size());
        if (window > 0) {
            double sum = 0.0;
            for (std::size_t k = episodes.size() - window; k < episodes.size(); ++k) sum += episodes[k].episode_return;
            rec.mean_return_100 = sum / static_cast<double>(window);
        }
        const double inv = 1.0 / static_cast<double>(batch.size());
        rec.r_vwr_mean = std::accumulate(batch.vwr_rewards.begin(), batch.vwr_rewards.end(), 0.0) * inv;
        rec.sigma_delta_mean = std::accumulate(batch.sigma_deltas.begin(), batch.sigma_deltas.end(), 0.0) * inv;
        rec.hotwire_active = batch.hotwired;
        result.log.updates.push_back(rec);
    }
    result.log.episodes = ctx.episodes();
    return result;
}

}  // namespace vwrrl
