#include "vwrrl/cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "vwrrl/errors.hpp"
#include "vwrrl/harness.hpp"
#include "vwrrl/training_log.hpp"

namespace fs = std::filesystem;

namespace vwrrl {

std::vector<unsigned long long> parse_seed_list(const std::string& text) {
    std::vector<unsigned long long> seeds;
    std::stringstream ss(text);
    std::string part;
    auto to_u64 = [&](const std::string& s) {
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != s.size()) throw UsageError("bad seed list '" + text + "'");
        return v;
    };
    while (std::getline(ss, part, ',')) {
        const auto dash = part.find('-');
        if (dash == std::string::npos) {
            seeds.push_back(to_u64(part));
        } else {
            const auto lo = to_u64(part.substr(0, dash));
            const auto hi = to_u64(part.substr(dash + 1));
            if (hi < lo) throw UsageError("bad seed range '" + part + "'");
            for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
        }
    }
    if (seeds.empty()) throw UsageError("empty seed list");
    return seeds;
}

namespace {

// Config keys exposed as --<key> flags on train and sweep.
const std::vector<std::string>& config_flag_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [key, value] : to_key_values(TrainConfig{})) k.push_back(key);
        return k;
    }();
    return keys;
}

const std::map<std::string, std::string>& flag_help() {
    static const std::map<std::string, std::string> help{
        {"env", "sparse-chain | gridworld | pole-balance"},
        {"mode", "a2mc | a2c_baseline | a2mc_no_hotwire | a2mc_no_flip"},
        {"seed", "master seed"},
        {"timesteps", "total environment steps"},
        {"gamma", "discount factor (default 0.99)"},
        {"n-steps", "rollout length per update"},
        {"epsilon", "hot-wire probability per rollout"},
        {"hotwire-fraction", "hot-wiring only before this fraction of timesteps"},
        {"hotwire-window", "steps since the last nonzero reward that disable hot-wiring"},
        {"vwr-t", "VWR reward window length T"},
        {"sigma-max", "VWR volatility cap"},
        {"tau", "VWR weight exponent"},
        {"std-mode", "population | sample"},
        {"history-reset", "per_episode | persistent"},
        {"reward-clip", "clip rewards to [-c, c], or none"},
        {"hidden-dim", "trunk width"},
        {"lr", "SGD step size"},
        {"momentum", "heavy-ball momentum"},
        {"entropy-coef", "entropy bonus weight"},
        {"grad-clip", "global gradient norm cap (0 disables)"},
        {"value-coef-short", "weight of the short-term critic loss"},
        {"value-coef-long", "weight of the long-term critic loss"},
    };
    return help;
}

struct ConfigFlags {
    std::map<std::string, std::string> values;
    std::vector<std::string> env_args;
    std::string config_file;
    std::string seeds;
    std::string out;

    void attach(CLI::App& app) {
        for (const auto& key : config_flag_keys()) {
            const auto it = flag_help().find(key);
            app.add_option("--" + key, values[key], it != flag_help().end() ? it->second : key);
        }
        app.add_option("--env-arg", env_args, "environment argument key=value (repeatable)");
        app.add_option("--config", config_file, "flat key=value config file (CLI flags take precedence)");
        app.add_option("--seeds", seeds, "seed battery, e.g. 1-5 or 1,2,3 (overrides --seed)");
        app.add_option("--out", out, "output directory (default: $VWRRL_OUT or ./runs)");
    }

    /// defaults < config file < flags.
    TrainConfig resolve(const CLI::App& app) const {
        TrainConfig cfg;
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw UsageError("cannot read config file " + config_file);
            std::stringstream buf;
            buf << in.rdbuf();
            for (const auto& [k, v] : parse_key_value_text(buf.str())) set_key_value(cfg, k, v);
        }
        for (const auto& key : config_flag_keys()) {
            if (app.count("--" + key) > 0) set_key_value(cfg, key, values.at(key));
        }
        for (const auto& kv : env_args) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0) throw UsageError("--env-arg expects key=value, got '" + kv + "'");
            cfg.env_args[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
        cfg.validate();
        make_env(cfg.env, cfg.env_args);  // unknown env / env args are usage errors
        return cfg;
    }

    fs::path out_dir() const {
        if (!out.empty()) return out;
        if (const char* env = std::getenv("VWRRL_OUT"); env && *env) return env;
        return "runs";
    }

    std::vector<unsigned long long> seed_list(const TrainConfig& cfg) const {
        return seeds.empty() ? std::vector<unsigned long long>{cfg.seed} : parse_seed_list(seeds);
    }
};

// Usage problems detected after CLI11 parsing.
bool is_usage_error(const std::exception& e) {
    return dynamic_cast<const UsageError*>(&e) != nullptr || dynamic_cast<const InputError*>(&e) != nullptr;
}

int cmd_train(const CLI::App& app, const ConfigFlags& flags, bool plot, bool no_steps, std::ostream& out) {
    const TrainConfig base = flags.resolve(app);
    const fs::path out_dir = flags.out_dir();
    const auto seeds = flags.seed_list(base);

    std::vector<std::vector<CurvePoint>> curves;
    std::vector<std::string> run_ids;
    for (auto seed : seeds) {
        TrainConfig cfg = base;
        cfg.seed = seed;
        RunOptions ro;
        ro.out_dir = out_dir;
        ro.write_steps = !no_steps;
        RunManifest m = run_training(cfg, ro);
        const fs::path dir = out_dir / m.run_id;
        if (plot) curves.push_back(read_learning_curve(m, dir));
        if (plot && seeds.size() == 1) {
            std::ofstream svg(dir / "curve.svg");
            svg << render_learning_curve_svg({{std::string(to_string(cfg.mode)), curves}}, m.run_id);
            m.outputs["plot"] = "curve.svg";
            std::ofstream(dir / "manifest.json") << to_json(m).dump(2) << "\n";
        }
        out << m.run_id << ": final_score=" << format_sig6(m.final_score) << " (" << format_sig6(m.wall_seconds)
            << " s) -> " << dir.string() << '\n';
        run_ids.push_back(m.run_id);
    }

    if (seeds.size() > 1) {
        // Battery manifest: ties the per-seed runs to the shared plot.
        const std::string stem = base.env + "_" + std::string(to_string(base.mode)) + "_battery";
        nlohmann::json battery;
        battery["runs"] = run_ids;
        battery["version"] = version_string();
        battery["outputs"] = nlohmann::json::object();
        if (plot) {
            std::ofstream svg(out_dir / (stem + ".svg"));
            svg << render_learning_curve_svg({{std::string(to_string(base.mode)), curves}}, stem);
            battery["outputs"]["plot"] = stem + ".svg";
        }
        std::ofstream(out_dir / (stem + ".json")) << battery.dump(2) << "\n";
    }
    return kExitOk;
}

int cmd_compare(const std::vector<std::string>& runs, const std::string& baseline, const std::string& csv_path,
                const std::string& plot_path, std::ostream& out) {
    std::vector<RunManifest> manifests;
    for (const auto& r : runs) manifests.push_back(load_manifest(r));
    const CompareTable table = compare_runs(manifests, baseline);
    out << format_compare_table(table);
    if (!csv_path.empty()) {
        std::ofstream csv(csv_path);
        if (!csv) throw std::runtime_error("cannot write " + csv_path);
        write_compare_csv(csv, table);
    }
    if (!plot_path.empty()) {
        std::map<std::string, std::vector<std::vector<CurvePoint>>> curves;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            curves[std::string(to_string(manifests[i].config.mode))].push_back(
                read_learning_curve(manifests[i], manifest_path(runs[i]).parent_path()));
        }
        std::ofstream svg(plot_path);
        svg << render_learning_curve_svg(curves, table.env);
    }
    if (!csv_path.empty() || !plot_path.empty()) {
        fs::path manifest = csv_path.empty() ? fs::path(plot_path) : fs::path(csv_path);
        manifest.replace_extension(".json");
        nlohmann::json j;
        j["version"] = version_string();
        j["env"] = table.env;
        j["baseline"] = table.baseline;
        j["runs"] = runs;
        j["outputs"] = nlohmann::json::object();
        if (!csv_path.empty()) j["outputs"]["table"] = fs::path(csv_path).filename().string();
        if (!plot_path.empty()) j["outputs"]["plot"] = fs::path(plot_path).filename().string();
        std::ofstream(manifest) << j.dump(2) << "\n";
    }
    return kExitOk;
}

int cmd_sweep(const CLI::App& app, const ConfigFlags& flags, const std::vector<std::string>& grid, int jobs,
              unsigned long long shuffle_seed, std::ostream& out) {
    SweepSpec spec;
    spec.base = flags.resolve(app);
    for (const auto& g : grid) {
        const auto eq = g.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError("--grid expects key=v1,v2,..., got '" + g + "'");
        SweepAxis axis{g.substr(0, eq), {}};
        std::stringstream ss(g.substr(eq + 1));
        std::string v;
        while (std::getline(ss, v, ',')) axis.values.push_back(v);
        if (axis.values.empty()) throw UsageError("--grid " + axis.key + " has no values");
        spec.axes.push_back(std::move(axis));
    }
    if (spec.axes.empty()) spec.axes = default_sweep_axes();
    spec.seeds.clear();
    for (auto s : flags.seed_list(spec.base)) spec.seeds.push_back(s);

    SweepOptions so;
    so.out_dir = flags.out_dir();
    so.jobs = jobs;
    so.shuffle_seed = shuffle_seed;
    fs::create_directories(so.out_dir);
    const auto results = run_sweep(spec, so);

    std::ostringstream csv;
    write_sweep_csv(csv, spec, results);
    std::ofstream(so.out_dir / "sweep.csv") << csv.str();
    nlohmann::json manifest;
    manifest["version"] = version_string();
    manifest["base_config"] = to_json(spec.base.resolved());
    manifest["seeds"] = spec.seeds;
    nlohmann::json axes = nlohmann::json::array();
    for (const auto& a : spec.axes) axes.push_back({{"key", a.key}, {"values", a.values}});
    manifest["axes"] = axes;
    manifest["outputs"] = {{"aggregate", "sweep.csv"}};
    nlohmann::json failures = nlohmann::json::array();
    for (const auto& r : results)
        for (const auto& f : r.failures) failures.push_back(f);
    manifest["failures"] = failures;
    std::ofstream(so.out_dir / "sweep.json") << manifest.dump(2) << "\n";

    out << csv.str();
    return failures.empty() ? kExitOk : kExitRuntime;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"vwrrl: actor multi-critic training with variability-weighted rewards"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string());

    auto* train_cmd = app.add_subcommand("train", "run one training run or a seed battery");
    ConfigFlags train_flags;
    train_flags.attach(*train_cmd);
    bool plot = false;
    bool no_steps = false;
    train_cmd->add_flag("--plot", plot, "also write SVG learning curves");
    train_cmd->add_flag("--no-steps", no_steps, "skip the per-step trace (steps.csv)");

    auto* compare_cmd = app.add_subcommand("compare", "compare final scores across modes");
    std::vector<std::string> compare_runs_arg;
    std::string baseline = "a2c_baseline";
    std::string compare_csv, compare_plot;
    compare_cmd->add_option("runs", compare_runs_arg, "run directories or manifest.json files")->required();
    compare_cmd->add_option("--baseline", baseline, "baseline mode");
    compare_cmd->add_option("--out", compare_csv, "write the table as CSV");
    compare_cmd->add_option("--plot", compare_plot, "write SVG learning curves per mode");

    auto* sweep_cmd = app.add_subcommand("sweep", "hyper-parameter grid over config keys");
    ConfigFlags sweep_flags;
    sweep_flags.attach(*sweep_cmd);
    std::vector<std::string> grid;
    int jobs = 1;
    unsigned long long shuffle_seed = 0;
    sweep_cmd->add_option("--grid", grid, "axis key=v1,v2,... (repeatable; default vwr-t x sigma-max)");
    sweep_cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    sweep_cmd->add_option("--shuffle-seed", shuffle_seed, "execute cells in shuffled order");

    auto* sparse_cmd = app.add_subcommand("sparseness", "reward sparseness of a run's step trace");
    std::string sparse_path;
    std::size_t horizon = 0;
    sparse_cmd->add_option("run", sparse_path, "run directory, manifest.json or steps.csv")->required();
    sparse_cmd->add_option("--horizon", horizon, "number of leading steps (default: whole trace)");

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    try {
        app.parse(argv_rev);
    } catch (const CLI::CallForHelp&) {
        const auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << version_string() << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front()) {
            err << sub->help();
        } else {
            err << app.help();
        }
        return kExitUsage;
    }

    try {
        if (*train_cmd) return cmd_train(*train_cmd, train_flags, plot, no_steps, out);
        if (*compare_cmd) return cmd_compare(compare_runs_arg, baseline, compare_csv, compare_plot, out);
        if (*sweep_cmd) return cmd_sweep(*sweep_cmd, sweep_flags, grid, jobs, shuffle_seed, out);
        if (*sparse_cmd) {
            const std::size_t h = horizon > 0 ? horizon : load_step_trace(sparse_path).size();
            out << format_sig6(sparseness_report(sparse_path, h)) << '\n';
            return kExitOk;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return is_usage_error(e) ? kExitUsage : kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace vwrrl
