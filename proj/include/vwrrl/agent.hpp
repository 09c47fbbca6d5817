#pragma once

// A2MC training loop: N-step rollouts with optional hot-wiring, a VWR
// reward stream next to the environment reward, two discounted returns,
// and a shared-trunk actor with two critics.

#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "vwrrl/config.hpp"
#include "vwrrl/env.hpp"
#include "vwrrl/network.hpp"
#include "vwrrl/random.hpp"
#include "vwrrl/vwr.hpp"

namespace vwrrl {

struct RolloutBatch {
    std::vector<std::vector<double>> states;
    std::vector<int> actions;
    std::vector<double> env_rewards;
    std::vector<double> vwr_rewards;
    std::vector<double> sigma_deltas;
    std::vector<bool> terminals;
    double bootstrap_short = 0.0;
    double bootstrap_long = 0.0;
    bool hotwired = false;

    std::size_t size() const { return actions.size(); }
};

struct StepRecord {
    long long timestep = 0;
    long long episode = 0;
    /// Reward fed to the learner (after optional clipping).
    double reward = 0.0;
    double r_vwr = 0.0;
    double sigma_delta = 0.0;
    bool terminal = false;
    bool hotwired = false;
};

struct EpisodeRecord {
    long long episode = 0;
    long long end_timestep = 0;
    int length = 0;
    /// Sum of raw environment rewards.
    double episode_return = 0.0;
};

struct UpdateStats {
    double policy_loss = 0.0;
    double value_loss_short = 0.0;
    double value_loss_long = 0.0;
    double entropy = 0.0;
    double mean_advantage = 0.0;
    double grad_norm = 0.0;
};

/// One row per parameter update.
struct UpdateRecord {
    long long timestep = 0;
    long long episode = 0;
    double episode_return = 0.0;
    double mean_return_100 = 0.0;
    double r_vwr_mean = 0.0;
    double sigma_delta_mean = 0.0;
    UpdateStats stats;
    bool hotwire_active = false;
};

struct TrainingLog {
    std::vector<UpdateRecord> updates;
    std::vector<EpisodeRecord> episodes;
    /// Only filled when requested (one entry per environment step).
    std::vector<StepRecord> steps;

    /// Mean raw return over the last min(100, n) episodes; 0 without episodes.
    double final_score(std::size_t window = 100) const;
};

/// Hot-wire decision for the upcoming rollout. Returns a uniformly drawn
/// action with probability epsilon, but only while timestep lies in the
/// initial stage (< hotwire_fraction * total_timesteps), no nonzero reward
/// was seen recently, and the mode allows hot-wiring.
std::optional<int> maybe_hotwire(Rng& rng, long long timestep, const TrainConfig& cfg,
                                 bool reward_seen_recently, int num_actions);

/// Mutable state carried across rollouts: the environment, reward window,
/// random streams and episode bookkeeping.
class RolloutContext {
public:
    RolloutContext(Environment& env, const TrainConfig& cfg);

    Environment& env() { return *env_; }
    const RewardHistory& history() const { return history_; }
    std::span<const double> state() const { return state_; }
    long long timestep() const { return timestep_; }
    long long episode() const { return episode_; }
    bool reward_seen_recently(int window) const;

    const std::vector<EpisodeRecord>& episodes() const { return episodes_; }

    /// When set, every step is appended to `sink`.
    void record_steps(std::vector<StepRecord>* sink) { step_sink_ = sink; }

private:
    friend RolloutBatch collect_rollout(RolloutContext& ctx, const PolicyValueParams& params,
                                        const TrainConfig& cfg, int max_steps);

    void start_episode();

    Environment* env_;
    std::uint64_t seed_;
    RewardHistory history_;
    std::vector<double> state_;
    Rng action_rng_;
    Rng hotwire_rng_;
    long long timestep_ = 0;
    long long episode_ = 0;
    long long last_nonzero_reward_ = -1;
    double episode_return_ = 0.0;
    std::vector<EpisodeRecord> episodes_;
    std::vector<StepRecord>* step_sink_ = nullptr;
};

/// Runs up to min(cfg.n_steps, max_steps) environment steps. Each reward is
/// (optionally clipped,) pushed into the history and turned into r_vwr.
/// Terminal steps reset the environment, and the history too under
/// per_episode reset; the rollout then continues in the new episode.
RolloutBatch collect_rollout(RolloutContext& ctx, const PolicyValueParams& params, const TrainConfig& cfg,
                             int max_steps);

/// Backward recursion R <- r_i + gamma R seeded with the bootstrap values;
/// R is reset to 0 at terminal steps. Returns (short-term, long-term).
std::pair<std::vector<double>, std::vector<double>> compute_returns(const RolloutBatch& batch, double gamma);

/// Accumulates the per-step gradients of the batch and applies one optimizer
/// step. In a2c_baseline mode the long-term critic is ignored entirely.
/// Throws TrainingError (with a parameter dump) on non-finite losses or params.
UpdateStats update(PolicyValueParams& params, SgdOptimizer& optimizer, const RolloutBatch& batch,
                   const std::vector<double>& returns_short, const std::vector<double>& returns_long,
                   const TrainConfig& cfg);

/// Initial parameters for a config; identical across modes for the same seed.
PolicyValueParams initial_params(const TrainConfig& cfg, const EnvSpec& spec);

struct TrainingResult {
    TrainingLog log;
    PolicyValueParams params;
};

struct TrainOptions {
    bool record_steps = false;
};

/// Full training loop until cfg.total_timesteps environment steps have run.
/// Deterministic in (cfg, environment).
TrainingResult train(const TrainConfig& cfg, const TrainOptions& options = {});

}  // namespace vwrrl
