#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vwrrl/env.hpp"
#include "vwrrl/vwr.hpp"

namespace vwrrl {

enum class Mode { a2mc, a2c_baseline, a2mc_no_hotwire, a2mc_no_flip };
enum class HistoryReset { per_episode, persistent };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);
std::string_view to_string(HistoryReset reset);
HistoryReset history_reset_from_string(std::string_view name);

/// Hot-wiring is available in every A2MC variant except the explicit ablation.
bool uses_hotwire(Mode mode);
/// Only the single-critic baseline ignores the long-term critic.
bool uses_long_critic(Mode mode);

struct TrainConfig {
    std::string env = "sparse-chain";
    EnvArgs env_args;
    Mode mode = Mode::a2mc;
    std::uint64_t seed = 1;
    long long total_timesteps = 200000;

    /// Unset means "use the environment's default" (see default_gamma).
    std::optional<double> gamma;
    int n_steps = 20;

    double epsilon_hotwire = 0.20;
    double hotwire_fraction = 1.0 / 40.0;
    int hotwire_window = 1000;

    /// window_T, sigma_max, tau, std_mode. `flip` is derived from `mode`.
    VwrConfig vwr;
    HistoryReset history_reset = HistoryReset::per_episode;
    std::optional<double> reward_clip;

    int hidden_dim = 64;
    double step_size = 0.005;
    double momentum = 0.9;
    double entropy_coef = 0.01;
    double grad_clip = 10.0;
    double value_coef_short = 1.0;
    double value_coef_long = 1.0;

    double resolved_gamma() const;
    /// Copy with every optional default (gamma) filled in.
    TrainConfig resolved() const;
    /// vwr with `flip` set according to the mode.
    VwrConfig resolved_vwr() const;

    /// Throws InputError describing the first invalid field.
    void validate() const;

    bool operator==(const TrainConfig&) const = default;
};

double default_gamma(std::string_view env);

/// Every result-affecting field as (key, value) text, in a fixed order, with
/// `gamma` resolved. Keys match the CLI long-flag names; env args appear as
/// `env-arg.<name>`.
std::vector<std::pair<std::string, std::string>> to_key_values(const TrainConfig& cfg);

/// Sets one field from text. Throws UsageError for an unknown key and
/// InputError for an unparsable value.
void set_key_value(TrainConfig& cfg, std::string_view key, std::string_view value);

/// Parses a flat UTF-8 `key = value` file; `#` starts a comment line.
std::vector<std::pair<std::string, std::string>> parse_key_value_text(std::string_view text);

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig config_from_json(const nlohmann::json& j);

/// Shortest "%.17g"-style text that round-trips the double.
std::string format_exact(double v);

}  // namespace vwrrl
