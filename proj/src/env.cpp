#include "vwrrl/env.hpp"

#include <cmath>
#include <sstream>

#include "vwrrl/errors.hpp"
#include "vwrrl/random.hpp"

namespace vwrrl {

Environment::Environment(EnvSpec spec) : spec_(std::move(spec)) {
    if (spec_.num_actions < 2) throw InputError("environment needs at least two actions");
    if (spec_.state_dim < 1) throw InputError("environment state_dim must be positive");
    if (spec_.max_episode_steps < 1) throw InputError("max_episode_steps must be positive");
}

std::vector<double> Environment::reset(std::uint64_t seed) {
    terminal_ = false;
    episode_step_ = 0;
    return do_reset(seed);
}

StepResult Environment::step(int action) {
    if (action < 0 || action >= spec_.num_actions) {
        throw InputError("action " + std::to_string(action) + " out of range for " + spec_.name);
    }
    if (terminal_) throw StateError(spec_.name + ": step called on a terminal episode; reset first");

    StepResult out;
    bool done = false;
    out.next_state = do_step(action, out.reward, done);
    ++episode_step_;
    terminal_ = done || episode_step_ >= spec_.max_episode_steps;
    out.terminal = terminal_;
    out.episode_step = episode_step_;
    return out;
}

// --- SparseChain ---

SparseChain::SparseChain(int length, int max_episode_steps)
    : Environment({"sparse-chain", length, 2, max_episode_steps > 0 ? max_episode_steps : 10 * length}),
      length_(length) {
    if (length < 2) throw InputError("sparse-chain length must be >= 2");
}

std::vector<double> SparseChain::do_reset(std::uint64_t) {
    position_ = 0;
    return observe();
}

std::vector<double> SparseChain::do_step(int action, double& reward, bool& done) {
    position_ = action == 1 ? position_ + 1 : std::max(0, position_ - 1);
    done = position_ == length_ - 1;
    reward = done ? 1.0 : 0.0;
    return observe();
}

std::vector<double> SparseChain::observe() const {
    std::vector<double> s(static_cast<std::size_t>(length_), 0.0);
    s[static_cast<std::size_t>(position_)] = 1.0;
    return s;
}

// --- GridWorld ---

GridWorld::GridWorld(int size, int max_episode_steps)
    : Environment({"gridworld", size * size, 4, max_episode_steps}), size_(size) {
    if (size < 2) throw InputError("gridworld size must be >= 2");
}

bool GridWorld::is_wall(int row, int col) const {
    return size_ >= 3 && row == size_ / 2 && col < size_ - 1;
}

std::vector<double> GridWorld::do_reset(std::uint64_t) {
    row_ = 0;
    col_ = 0;
    return observe();
}

std::vector<double> GridWorld::do_step(int action, double& reward, bool& done) {
    static constexpr int kRowDelta[4] = {-1, 0, 1, 0};
    static constexpr int kColDelta[4] = {0, 1, 0, -1};
    const int r = row_ + kRowDelta[action];
    const int c = col_ + kColDelta[action];
    if (r >= 0 && r < size_ && c >= 0 && c < size_ && !is_wall(r, c)) {
        row_ = r;
        col_ = c;
    }
    done = row_ == size_ - 1 && col_ == size_ - 1;
    reward = done ? 1.0 : kStepPenalty;
    return observe();
}

std::vector<double> GridWorld::observe() const {
    std::vector<double> s(static_cast<std::size_t>(size_ * size_), 0.0);
    s[static_cast<std::size_t>(row_ * size_ + col_)] = 1.0;
    return s;
}

// --- PoleBalance ---

PoleBalance::PoleBalance(int max_episode_steps)
    : Environment({"pole-balance", 4, 2, max_episode_steps}), state_(4, 0.0) {}

std::vector<double> PoleBalance::do_reset(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 0x706f6c65));
    for (double& v : state_) v = rng.uniform(-0.05, 0.05);
    return state_;
}

std::vector<double> PoleBalance::do_step(int action, double& reward, bool& done) {
    constexpr double gravity = 9.8;
    constexpr double cart_mass = 1.0;
    constexpr double pole_mass = 0.1;
    constexpr double total_mass = cart_mass + pole_mass;
    constexpr double half_length = 0.5;
    constexpr double pole_mass_length = pole_mass * half_length;
    constexpr double force_mag = 10.0;
    constexpr double dt = 0.02;

    double& x = state_[0];
    double& x_dot = state_[1];
    double& theta = state_[2];
    double& theta_dot = state_[3];

    const double force = action == 1 ? force_mag : -force_mag;
    const double cos_t = std::cos(theta);
    const double sin_t = std::sin(theta);
    const double temp = (force + pole_mass_length * theta_dot * theta_dot * sin_t) / total_mass;
    const double theta_acc = (gravity * sin_t - cos_t * temp) /
                             (half_length * (4.0 / 3.0 - pole_mass * cos_t * cos_t / total_mass));
    const double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;

    x += dt * x_dot;
    x_dot += dt * x_acc;
    theta += dt * theta_dot;
    theta_dot += dt * theta_acc;

    done = std::abs(x) > kPositionLimit || std::abs(theta) > kThetaLimit;
    reward = 1.0;
    return state_;
}

// --- factory ---

const std::vector<std::string>& env_names() {
    static const std::vector<std::string> names{"sparse-chain", "gridworld", "pole-balance"};
    return names;
}

namespace {

int int_arg(const EnvArgs& args, const std::string& key, int fallback) {
    const auto it = args.find(key);
    if (it == args.end()) return fallback;
    std::size_t used = 0;
    int value = 0;
    try {
        value = std::stoi(it->second, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != it->second.size()) {
        throw InputError("env arg " + key + "=" + it->second + " is not an integer");
    }
    return value;
}

void check_keys(const std::string& env, const EnvArgs& args, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : args) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw UsageError("unknown env arg '" + key + "' for " + env);
    }
}

}  // namespace

std::unique_ptr<Environment> make_env(const std::string& name, const EnvArgs& args) {
    if (name == "sparse-chain") {
        check_keys(name, args, {"length", "max_steps"});
        return std::make_unique<SparseChain>(int_arg(args, "length", 10), int_arg(args, "max_steps", 0));
    }
    if (name == "gridworld") {
        check_keys(name, args, {"size", "max_steps"});
        return std::make_unique<GridWorld>(int_arg(args, "size", 5), int_arg(args, "max_steps", 100));
    }
    if (name == "pole-balance") {
        check_keys(name, args, {"max_steps"});
        return std::make_unique<PoleBalance>(int_arg(args, "max_steps", 200));
    }
    std::ostringstream msg;
    msg << "unknown environment '" << name << "'; valid names:";
    for (const auto& n : env_names()) msg << ' ' << n;
    throw UsageError(msg.str());
}

}  // namespace vwrrl
