#include "vwrrl/config.hpp"

#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "vwrrl/errors.hpp"

namespace vwrrl {

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::a2mc: return "a2mc";
        case Mode::a2c_baseline: return "a2c_baseline";
        case Mode::a2mc_no_hotwire: return "a2mc_no_hotwire";
        case Mode::a2mc_no_flip: return "a2mc_no_flip";
    }
    return "unknown";
}

Mode mode_from_string(std::string_view name) {
    for (Mode m : {Mode::a2mc, Mode::a2c_baseline, Mode::a2mc_no_hotwire, Mode::a2mc_no_flip}) {
        if (name == to_string(m)) return m;
    }
    throw InputError("unknown mode '" + std::string(name) +
                     "' (expected a2mc|a2c_baseline|a2mc_no_hotwire|a2mc_no_flip)");
}

std::string_view to_string(HistoryReset reset) {
    return reset == HistoryReset::per_episode ? "per_episode" : "persistent";
}

HistoryReset history_reset_from_string(std::string_view name) {
    if (name == "per_episode") return HistoryReset::per_episode;
    if (name == "persistent") return HistoryReset::persistent;
    throw InputError("unknown history reset '" + std::string(name) + "' (expected per_episode|persistent)");
}

bool uses_hotwire(Mode mode) { return mode != Mode::a2c_baseline && mode != Mode::a2mc_no_hotwire; }

bool uses_long_critic(Mode mode) { return mode != Mode::a2c_baseline; }

double default_gamma(std::string_view) { return 0.99; }

double TrainConfig::resolved_gamma() const { return gamma ? *gamma : default_gamma(env); }

TrainConfig TrainConfig::resolved() const {
    TrainConfig out = *this;
    out.gamma = resolved_gamma();
    return out;
}

VwrConfig TrainConfig::resolved_vwr() const {
    VwrConfig out = vwr;
    out.flip = mode != Mode::a2mc_no_flip;
    return out;
}

void TrainConfig::validate() const {
    vwr.validate();
    const double g = resolved_gamma();
    if (!(g >= 0.0 && g < 1.0)) throw InputError("gamma must be in [0, 1)");
    if (n_steps < 1) throw InputError("n-steps must be positive");
    if (total_timesteps < 0) throw InputError("timesteps must be >= 0");
    if (!(epsilon_hotwire >= 0.0 && epsilon_hotwire <= 1.0)) throw InputError("epsilon must be in [0, 1]");
    if (!(hotwire_fraction > 0.0 && hotwire_fraction <= 1.0)) throw InputError("hotwire-fraction must be in (0, 1]");
    if (hotwire_window < 1) throw InputError("hotwire-window must be positive");
    if (reward_clip && !(*reward_clip > 0.0)) throw InputError("reward-clip must be > 0");
    if (hidden_dim < 1) throw InputError("hidden-dim must be positive");
    if (!(step_size >= 0.0) || !std::isfinite(step_size)) throw InputError("lr must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw InputError("momentum must be in [0, 1)");
    if (!(entropy_coef >= 0.0)) throw InputError("entropy-coef must be >= 0");
    if (!(grad_clip >= 0.0)) throw InputError("grad-clip must be >= 0 (0 disables)");
    if (!(value_coef_short >= 0.0) || !(value_coef_long >= 0.0)) throw InputError("value coefficients must be >= 0");
}

std::string format_exact(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view key, std::string_view text) {
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || !std::isfinite(v)) {
        throw InputError(std::string(key) + ": expected a number, got '" + std::string(text) + "'");
    }
    return v;
}

template <class Int>
Int parse_int(std::string_view key, std::string_view text) {
    Int v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw InputError(std::string(key) + ": expected an integer, got '" + std::string(text) + "'");
    }
    return v;
}

enum class Kind { number, integer, text };

struct Field {
    const char* key;
    Kind kind;
    std::function<std::string(const TrainConfig&)> get;
    std::function<void(TrainConfig&, std::string_view)> set;
};

#define VWRRL_DOUBLE_FIELD(name, member)                                                   \
    Field {                                                                                \
        name, Kind::number, [](const TrainConfig& c) { return format_exact(c.member); },   \
            [](TrainConfig& c, std::string_view v) { c.member = parse_double(name, v); } \
    }
#define VWRRL_INT_FIELD(name, member, type)                                                  \
    Field {                                                                                  \
        name, Kind::integer, [](const TrainConfig& c) { return std::to_string(c.member); },  \
            [](TrainConfig& c, std::string_view v) { c.member = parse_int<type>(name, v); } \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> table{
        {"env", Kind::text, [](const TrainConfig& c) { return c.env; },
         [](TrainConfig& c, std::string_view v) { c.env = std::string(v); }},
        {"mode", Kind::text, [](const TrainConfig& c) { return std::string(to_string(c.mode)); },
         [](TrainConfig& c, std::string_view v) { c.mode = mode_from_string(v); }},
        VWRRL_INT_FIELD("seed", seed, std::uint64_t),
        VWRRL_INT_FIELD("timesteps", total_timesteps, long long),
        {"gamma", Kind::number, [](const TrainConfig& c) { return format_exact(c.resolved_gamma()); },
         [](TrainConfig& c, std::string_view v) { c.gamma = parse_double("gamma", v); }},
        VWRRL_INT_FIELD("n-steps", n_steps, int),
        VWRRL_DOUBLE_FIELD("epsilon", epsilon_hotwire),
        VWRRL_DOUBLE_FIELD("hotwire-fraction", hotwire_fraction),
        VWRRL_INT_FIELD("hotwire-window", hotwire_window, int),
        VWRRL_INT_FIELD("vwr-t", vwr.window_T, int),
        VWRRL_DOUBLE_FIELD("sigma-max", vwr.sigma_max),
        VWRRL_DOUBLE_FIELD("tau", vwr.tau),
        {"std-mode", Kind::text, [](const TrainConfig& c) { return std::string(to_string(c.vwr.std_mode)); },
         [](TrainConfig& c, std::string_view v) { c.vwr.std_mode = std_mode_from_string(v); }},
        {"history-reset", Kind::text,
         [](const TrainConfig& c) { return std::string(to_string(c.history_reset)); },
         [](TrainConfig& c, std::string_view v) { c.history_reset = history_reset_from_string(v); }},
        {"reward-clip", Kind::text,
         [](const TrainConfig& c) { return c.reward_clip ? format_exact(*c.reward_clip) : std::string("none"); },
         [](TrainConfig& c, std::string_view v) {
             if (v == "none" || v.empty()) {
                 c.reward_clip.reset();
             } else {
                 c.reward_clip = parse_double("reward-clip", v);
             }
         }},
        VWRRL_INT_FIELD("hidden-dim", hidden_dim, int),
        VWRRL_DOUBLE_FIELD("lr", step_size),
        VWRRL_DOUBLE_FIELD("momentum", momentum),
        VWRRL_DOUBLE_FIELD("entropy-coef", entropy_coef),
        VWRRL_DOUBLE_FIELD("grad-clip", grad_clip),
        VWRRL_DOUBLE_FIELD("value-coef-short", value_coef_short),
        VWRRL_DOUBLE_FIELD("value-coef-long", value_coef_long),
    };
    return table;
}

#undef VWRRL_DOUBLE_FIELD
#undef VWRRL_INT_FIELD

constexpr std::string_view kEnvArgPrefix = "env-arg.";

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> to_key_values(const TrainConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& f : fields()) out.emplace_back(f.key, f.get(cfg));
    for (const auto& [k, v] : cfg.env_args) out.emplace_back(std::string(kEnvArgPrefix) + k, v);
    return out;
}

void set_key_value(TrainConfig& cfg, std::string_view key, std::string_view value) {
    if (key.starts_with(kEnvArgPrefix) && key.size() > kEnvArgPrefix.size()) {
        cfg.env_args[std::string(key.substr(kEnvArgPrefix.size()))] = std::string(value);
        return;
    }
    for (const auto& f : fields()) {
        if (key == f.key) {
            f.set(cfg, value);
            return;
        }
    }
    throw UsageError("unknown config key '" + std::string(key) + "'");
}

std::vector<std::pair<std::string, std::string>> parse_key_value_text(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    int line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const std::string_view line = trim(text.substr(0, nl));
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw UsageError("config line " + std::to_string(line_no) + ": expected key=value");
        }
        out.emplace_back(std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))));
    }
    return out;
}

nlohmann::json to_json(const TrainConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& f : fields()) {
        const std::string v = f.get(cfg);
        switch (f.kind) {
            case Kind::number: j[f.key] = parse_double(f.key, v); break;
            case Kind::integer: j[f.key] = nlohmann::json::parse(v); break;
            case Kind::text: j[f.key] = v; break;
        }
    }
    nlohmann::json args = nlohmann::json::object();
    for (const auto& [k, v] : cfg.env_args) args[k] = v;
    j["env-args"] = args;
    return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "env-args") {
            for (const auto& [k, v] : value.items()) cfg.env_args[k] = v.get<std::string>();
        } else if (value.is_string()) {
            set_key_value(cfg, key, value.get<std::string>());
        } else if (value.is_number_float()) {
            set_key_value(cfg, key, format_exact(value.get<double>()));
        } else {
            set_key_value(cfg, key, value.dump());
        }
    }
    return cfg;
}

}  // namespace vwrrl
