#include "vwrrl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "vwrrl/errors.hpp"
#include "vwrrl/random.hpp"
#include "vwrrl/training_log.hpp"

#ifndef VWRRL_VERSION_STRING
#define VWRRL_VERSION_STRING "v0.0.0"
#endif

namespace fs = std::filesystem;

namespace vwrrl {

const char* version_string() { return VWRRL_VERSION_STRING; }

double sample_stddev(const std::vector<double>& values) {
    if (values.size() < 2) return 0.0;
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

namespace {

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

template <class Writer>
void write_with(const fs::path& path, Writer&& writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    writer(out);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

// --- manifest ---

nlohmann::json to_json(const RunManifest& m) {
    nlohmann::json j;
    j["run_id"] = m.run_id;
    j["version"] = m.version;
    j["config"] = to_json(m.config);
    j["env_spec"] = {{"name", m.env_spec.name},
                     {"state_dim", m.env_spec.state_dim},
                     {"num_actions", m.env_spec.num_actions},
                     {"max_episode_steps", m.env_spec.max_episode_steps}};
    j["wall_seconds"] = m.wall_seconds;
    j["outputs"] = m.outputs;
    j["final_score"] = m.final_score;
    return j;
}

RunManifest manifest_from_json(const nlohmann::json& j) {
    try {
        RunManifest m;
        m.run_id = j.at("run_id").get<std::string>();
        m.version = j.at("version").get<std::string>();
        m.config = config_from_json(j.at("config"));
        const auto& spec = j.at("env_spec");
        m.env_spec = {spec.at("name").get<std::string>(), spec.at("state_dim").get<int>(),
                      spec.at("num_actions").get<int>(), spec.at("max_episode_steps").get<int>()};
        m.wall_seconds = j.value("wall_seconds", 0.0);
        m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
        m.final_score = j.value("final_score", 0.0);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed manifest: ") + e.what());
    }
}

fs::path manifest_path(const fs::path& path) {
    return fs::is_directory(path) ? path / "manifest.json" : path;
}

RunManifest load_manifest(const fs::path& path) {
    const fs::path p = manifest_path(path);
    std::ifstream in(p);
    if (!in) throw InputError("cannot open manifest " + p.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("manifest " + p.string() + " is not valid JSON: " + e.what());
    }
    return manifest_from_json(j);
}

std::string run_id(const TrainConfig& cfg) {
    return cfg.env + "_" + std::string(to_string(cfg.mode)) + "_seed" + std::to_string(cfg.seed);
}

RunManifest run_training(const TrainConfig& cfg, const RunOptions& options) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    TrainOptions train_options;
    train_options.record_steps = options.write_steps;
    const TrainingResult result = train(cfg, train_options);
    const auto stop = std::chrono::steady_clock::now();

    RunManifest m;
    m.run_id = run_id(cfg);
    m.config = cfg.resolved();
    m.env_spec = make_env(cfg.env, cfg.env_args)->spec();
    m.version = version_string();
    m.wall_seconds = options.record_wall_time ? std::chrono::duration<double>(stop - start).count() : 0.0;
    m.final_score = result.log.final_score();

    const fs::path dir = options.out_dir / m.run_id;
    fs::create_directories(dir);
    write_with(dir / "log.csv", [&](std::ostream& o) { write_update_csv(o, result.log.updates); });
    m.outputs["log"] = "log.csv";
    write_with(dir / "episodes.csv", [&](std::ostream& o) { write_episode_csv(o, result.log.episodes); });
    m.outputs["episodes"] = "episodes.csv";
    if (options.write_steps) {
        write_with(dir / "steps.csv", [&](std::ostream& o) { write_step_csv(o, result.log.steps); });
        m.outputs["steps"] = "steps.csv";
    }
    if (options.write_checkpoint) {
        save_checkpoint((dir / "params.ckpt").string(), result.params);
        m.outputs["checkpoint"] = "params.ckpt";
    }
    write_file(dir / "manifest.json", to_json(m).dump(2) + "\n");
    return m;
}

// --- learning curves ---

std::vector<CurvePoint> read_learning_curve(const RunManifest& manifest, const fs::path& run_dir) {
    const auto it = manifest.outputs.find("log");
    if (it == manifest.outputs.end()) throw InputError("manifest " + manifest.run_id + " has no log output");
    const CsvTable t = read_csv_file((run_dir / it->second).string());
    const auto ts = t.column("timestep"), v = t.column("mean_return_100");
    std::vector<CurvePoint> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) out.push_back({std::stod(r[ts]), std::stod(r[v])});
    return out;
}

std::string render_learning_curve_svg(const std::map<std::string, std::vector<std::vector<CurvePoint>>>& curves,
                                      const std::string& title) {
    constexpr double width = 720, height = 420, left = 70, right = 160, top = 40, bottom = 50;
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

    struct Series {
        std::string label;
        std::vector<double> x, mean, sd;
    };
    std::vector<Series> series;
    double x_max = 1.0, y_min = std::numeric_limits<double>::infinity(), y_max = -y_min;
    for (const auto& [label, runs] : curves) {
        if (runs.empty()) continue;
        std::size_t len = runs.front().size();
        for (const auto& r : runs) len = std::min(len, r.size());
        Series s{label, {}, {}, {}};
        for (std::size_t i = 0; i < len; ++i) {
            std::vector<double> vals;
            for (const auto& r : runs) vals.push_back(r[i].value);
            const double mean = mean_of(vals);
            double ss = 0.0;
            for (double v : vals) ss += (v - mean) * (v - mean);
            const double sd = std::sqrt(ss / static_cast<double>(vals.size()));
            s.x.push_back(runs.front()[i].timestep);
            s.mean.push_back(mean);
            s.sd.push_back(sd);
            x_max = std::max(x_max, s.x.back());
            y_min = std::min(y_min, mean - sd);
            y_max = std::max(y_max, mean + sd);
        }
        series.push_back(std::move(s));
    }
    if (!std::isfinite(y_min)) {
        y_min = 0.0;
        y_max = 1.0;
    }
    if (y_max - y_min < 1e-12) {
        y_min -= 0.5;
        y_max += 0.5;
    }
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double x) { return left + pw * x / x_max; };
    auto py = [&](double y) { return top + ph * (1.0 - (y - y_min) / (y_max - y_min)); };

    std::ostringstream svg;
    svg << std::fixed << std::setprecision(2);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
    svg << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double yv = y_min + (y_max - y_min) * k / 4.0;
        const double xv = x_max * k / 4.0;
        svg << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" << format_sig6(yv) << "</text>\n";
        svg << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 16
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" << format_sig6(xv)
            << "</text>\n";
    }
    svg << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10
        << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">timestep</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const Series& s = series[si];
        const char* color = palette[si % std::size(palette)];
        if (s.x.empty()) continue;
        svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) svg << px(s.x[i]) << ',' << py(s.mean[i] + s.sd[i]) << ' ';
        for (std::size_t i = s.x.size(); i-- > 0;) svg << px(s.x[i]) << ',' << py(s.mean[i] - s.sd[i]) << ' ';
        svg << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) svg << px(s.x[i]) << ',' << py(s.mean[i]) << ' ';
        svg << "\"/>\n";
        const double ly = top + 16 + 18.0 * static_cast<double>(si);
        svg << "<rect x=\"" << left + pw + 12 << "\" y=\"" << ly - 9 << "\" width=\"12\" height=\"12\" fill=\""
            << color << "\"/>\n";
        svg << "<text x=\"" << left + pw + 30 << "\" y=\"" << ly + 1
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << s.label << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

// --- compare ---

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::win: return "win";
        case Verdict::fair: return "fair";
        case Verdict::lose: return "lose";
    }
    return "fair";
}

double relative_margin_percent(double baseline, double candidate) {
    if (candidate == baseline) return 0.0;
    if (baseline == 0.0) return candidate > 0.0 ? std::numeric_limits<double>::infinity()
                                                : -std::numeric_limits<double>::infinity();
    return 100.0 * (candidate - baseline) / std::abs(baseline);
}

Verdict verdict_for(double margin_percent) {
    if (margin_percent > 10.0) return Verdict::win;
    if (margin_percent < -10.0) return Verdict::lose;
    return Verdict::fair;
}

CompareTable compare_runs(const std::vector<RunManifest>& manifests, const std::string& baseline_mode) {
    if (manifests.size() < 2) throw InputError("compare needs at least two runs");
    const RunManifest& first = manifests.front();
    for (const auto& m : manifests) {
        if (m.config.env != first.config.env || m.config.env_args != first.config.env_args) {
            throw InputError("compare: runs use different environments (" + first.run_id + " vs " + m.run_id + ")");
        }
    }
    std::map<std::string, std::vector<double>> scores;
    std::vector<std::string> order;
    for (const auto& m : manifests) {
        const std::string mode(to_string(m.config.mode));
        if (!scores.count(mode)) order.push_back(mode);
        scores[mode].push_back(m.final_score);
    }
    if (!scores.count(baseline_mode)) throw InputError("compare: no runs for baseline mode '" + baseline_mode + "'");

    CompareTable table;
    table.env = first.config.env;
    table.baseline = baseline_mode;
    const double base_mean = mean_of(scores[baseline_mode]);
    for (const auto& mode : order) {
        CompareRow row;
        row.mode = mode;
        row.runs = scores[mode].size();
        row.mean = mean_of(scores[mode]);
        row.stddev = sample_stddev(scores[mode]);
        row.margin_percent = relative_margin_percent(base_mean, row.mean);
        row.verdict = verdict_for(row.margin_percent);
        table.rows.push_back(row);
    }
    return table;
}

void write_compare_csv(std::ostream& out, const CompareTable& table) {
    out << "env,mode,runs,mean_final_return,std_final_return,margin_percent,verdict\n";
    for (const auto& r : table.rows) {
        out << table.env << ',' << r.mode << ',' << r.runs << ',' << format_sig6(r.mean) << ','
            << format_sig6(r.stddev) << ',' << format_sig6(r.margin_percent) << ',' << to_string(r.verdict) << '\n';
    }
}

std::string format_compare_table(const CompareTable& table) {
    std::ostringstream out;
    out << "env: " << table.env << "   baseline: " << table.baseline << '\n';
    out << std::left << std::setw(18) << "mode" << std::right << std::setw(6) << "runs" << std::setw(14) << "mean"
        << std::setw(14) << "std" << std::setw(12) << "margin" << "  verdict\n";
    for (const auto& r : table.rows) {
        std::ostringstream margin;
        margin << std::showpos << std::fixed << std::setprecision(1) << r.margin_percent << '%';
        out << std::left << std::setw(18) << r.mode << std::right << std::setw(6) << r.runs << std::setw(14)
            << format_sig6(r.mean) << std::setw(14) << format_sig6(r.stddev) << std::setw(12) << margin.str()
            << "  " << to_string(r.verdict) << '\n';
    }
    return out.str();
}

// --- sweep ---

std::vector<SweepAxis> default_sweep_axes() {
    return {{"vwr-t", {"10", "20", "40"}}, {"sigma-max", {"1", "2"}}};
}

std::size_t SweepSpec::cells() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= a.values.size();
    return n;
}

std::vector<std::string> SweepSpec::cell_values(std::size_t cell) const {
    std::vector<std::string> values(axes.size());
    for (std::size_t k = axes.size(); k-- > 0;) {
        values[k] = axes[k].values[cell % axes[k].values.size()];
        cell /= axes[k].values.size();
    }
    return values;
}

TrainConfig SweepSpec::cell_config(std::size_t cell, std::uint64_t seed) const {
    TrainConfig cfg = base;
    const auto values = cell_values(cell);
    for (std::size_t k = 0; k < axes.size(); ++k) set_key_value(cfg, axes[k].key, values[k]);
    cfg.seed = seed;
    return cfg;
}

std::vector<SweepCellResult> run_sweep(const SweepSpec& spec, const SweepOptions& options) {
    for (const auto& a : spec.axes) {
        if (a.values.empty()) throw InputError("sweep axis '" + a.key + "' has no values");
        TrainConfig probe = spec.base;
        for (const auto& v : a.values) set_key_value(probe, a.key, v);
    }
    if (spec.seeds.empty()) throw InputError("sweep needs at least one seed");

    const std::size_t n_cells = spec.cells();
    const std::size_t n_seeds = spec.seeds.size();
    const std::size_t n_items = n_cells * n_seeds;

    std::vector<std::size_t> order(n_items);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (options.shuffle_seed != 0) {
        Rng rng(options.shuffle_seed);
        for (std::size_t i = n_items; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    }

    struct Outcome {
        bool ok = false;
        double score = 0.0;
        std::string error;
    };
    std::vector<Outcome> outcomes(n_items);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t k = next++; k < n_items; k = next++) {
            const std::size_t item = order[k];
            const std::size_t cell = item / n_seeds;
            const std::uint64_t seed = spec.seeds[item % n_seeds];
            Outcome& out = outcomes[item];
            try {
                const TrainConfig cfg = spec.cell_config(cell, seed);
                if (options.write_runs) {
                    RunOptions ro;
                    ro.out_dir = options.out_dir / ("cell" + std::to_string(cell));
                    ro.write_steps = false;
                    ro.write_checkpoint = false;
                    out.score = run_training(cfg, ro).final_score;
                } else {
                    out.score = train(cfg).log.final_score();
                }
                out.ok = true;
            } catch (const std::exception& e) {
                out.error = e.what();
            }
        }
    };
    const int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    std::vector<SweepCellResult> results(n_cells);
    for (std::size_t cell = 0; cell < n_cells; ++cell) {
        SweepCellResult& r = results[cell];
        r.values = spec.cell_values(cell);
        for (std::size_t s = 0; s < n_seeds; ++s) {
            const Outcome& o = outcomes[cell * n_seeds + s];
            if (o.ok) {
                r.scores.push_back(o.score);
            } else {
                r.failures.push_back("seed " + std::to_string(spec.seeds[s]) + ": " + o.error);
            }
        }
        r.mean = mean_of(r.scores);
        r.stddev = sample_stddev(r.scores);
    }
    return results;
}

void write_sweep_csv(std::ostream& out, const SweepSpec& spec, const std::vector<SweepCellResult>& results) {
    out << "cell";
    for (const auto& a : spec.axes) out << ',' << a.key;
    out << ",runs,failed,mean_final_return,std_final_return\n";
    for (std::size_t c = 0; c < results.size(); ++c) {
        const auto& r = results[c];
        out << c;
        for (const auto& v : r.values) out << ',' << v;
        out << ',' << r.scores.size() << ',' << r.failures.size() << ',' << format_sig6(r.mean) << ','
            << format_sig6(r.stddev) << '\n';
    }
}

// --- sparseness ---

std::vector<StepRecord> load_step_trace(const fs::path& path) {
    fs::path steps_path = path;
    if (fs::is_directory(path) || path.extension() == ".json") {
        const RunManifest m = load_manifest(path);
        const auto it = m.outputs.find("steps");
        if (it == m.outputs.end()) throw InputError("run " + m.run_id + " has no step trace");
        steps_path = manifest_path(path).parent_path() / it->second;
    }
    std::ifstream in(steps_path);
    if (!in) throw InputError("cannot open " + steps_path.string());
    return read_step_csv(in);
}

double sparseness_report(const fs::path& path, std::size_t horizon) {
    const auto steps = load_step_trace(path);
    if (steps.size() < horizon) {
        throw InputError("step trace has " + std::to_string(steps.size()) + " steps, fewer than horizon " +
                         std::to_string(horizon));
    }
    std::vector<double> rewards(horizon);
    for (std::size_t i = 0; i < horizon; ++i) rewards[i] = steps[i].reward;
    return sparseness(rewards);
}

}  // namespace vwrrl
