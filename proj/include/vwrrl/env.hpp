#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vwrrl {

struct EnvSpec {
    std::string name;
    int state_dim = 0;
    int num_actions = 0;
    int max_episode_steps = 0;
};

struct StepResult {
    std::vector<double> next_state;
    double reward = 0.0;
    bool terminal = false;
    int episode_step = 0;
};

/// Discrete-action episodic environment. Subclasses implement the transition;
/// the base class enforces the reset/step protocol and the episode-length cap.
class Environment {
public:
    virtual ~Environment() = default;

    const EnvSpec& spec() const { return spec_; }

    std::vector<double> reset(std::uint64_t seed);

    /// Throws InputError for an out-of-range action and StateError when the
    /// episode has ended (or reset was never called).
    StepResult step(int action);

    bool terminal() const { return terminal_; }
    int episode_step() const { return episode_step_; }

protected:
    explicit Environment(EnvSpec spec);

    virtual std::vector<double> do_reset(std::uint64_t seed) = 0;

    /// Applies one action. Sets `done` for a task-level terminal; the step cap
    /// is handled by the caller.
    virtual std::vector<double> do_step(int action, double& reward, bool& done) = 0;

private:
    EnvSpec spec_;
    bool terminal_ = true;
    int episode_step_ = 0;
};

/// 1-D corridor of `length` cells. Start at cell 0, actions {0: left, 1: right}.
/// Reward 1 and terminal on reaching the last cell, 0 otherwise. One-hot state.
class SparseChain final : public Environment {
public:
    explicit SparseChain(int length = 10, int max_episode_steps = 0);

    int position() const { return position_; }

private:
    std::vector<double> do_reset(std::uint64_t seed) override;
    std::vector<double> do_step(int action, double& reward, bool& done) override;
    std::vector<double> observe() const;

    int length_;
    int position_ = 0;
};

/// size x size grid, start (0,0), goal (size-1,size-1). A horizontal wall
/// occupies row size/2, columns 0..size-2, leaving a gap in the last column.
/// Actions {0: up, 1: right, 2: down, 3: left}; blocked moves leave the agent
/// in place. Reward 1 at the goal (terminal), `step_penalty` otherwise.
class GridWorld final : public Environment {
public:
    static constexpr double kStepPenalty = -0.01;

    explicit GridWorld(int size = 5, int max_episode_steps = 100);

    bool is_wall(int row, int col) const;
    int row() const { return row_; }
    int col() const { return col_; }

private:
    std::vector<double> do_reset(std::uint64_t seed) override;
    std::vector<double> do_step(int action, double& reward, bool& done) override;
    std::vector<double> observe() const;

    int size_;
    int row_ = 0;
    int col_ = 0;
};

/// Cart-pole balancing with the classic Barto-Sutton-Anderson dynamics
/// (Euler integration, dt = 0.02). State (x, x_dot, theta, theta_dot).
/// Actions {0: push left, 1: push right}. Reward 1 per step, including the
/// failing one. Terminal when |theta| > 12 degrees or |x| > 2.4.
class PoleBalance final : public Environment {
public:
    static constexpr double kThetaLimit = 12.0 * 3.14159265358979323846 / 180.0;
    static constexpr double kPositionLimit = 2.4;

    explicit PoleBalance(int max_episode_steps = 200);

    std::span<const double> state() const { return state_; }

private:
    std::vector<double> do_reset(std::uint64_t seed) override;
    std::vector<double> do_step(int action, double& reward, bool& done) override;

    std::vector<double> state_;
};

using EnvArgs = std::map<std::string, std::string>;

/// Valid names: sparse-chain, gridworld, pole-balance.
const std::vector<std::string>& env_names();

/// Builds an environment by name. Recognised args: `length` (sparse-chain),
/// `size` (gridworld), `max_steps` (all). Throws UsageError for unknown names
/// or keys, InputError for bad values.
std::unique_ptr<Environment> make_env(const std::string& name, const EnvArgs& args = {});

}  // namespace vwrrl
