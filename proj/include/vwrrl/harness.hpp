#pragma once

// Experiment harness behind the CLI: single runs and seed batteries with
// manifests, cross-mode comparison tables, grid sweeps, sparseness reports,
// and SVG learning curves.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vwrrl/agent.hpp"
#include "vwrrl/config.hpp"

namespace vwrrl {

/// "v<project version>[-<git describe>]", fixed at configure time.
const char* version_string();

struct RunManifest {
    std::string run_id;
    TrainConfig config;
    EnvSpec env_spec;
    std::string version;
    double wall_seconds = 0.0;
    /// Output role ("log", "episodes", "steps", "checkpoint", "plot") -> file name
    /// relative to the manifest's directory.
    std::map<std::string, std::string> outputs;
    double final_score = 0.0;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
/// Accepts a manifest.json path or a run directory containing one.
RunManifest load_manifest(const std::filesystem::path& path);
std::filesystem::path manifest_path(const std::filesystem::path& path);

struct RunOptions {
    std::filesystem::path out_dir = "runs";
    bool write_steps = true;
    bool write_checkpoint = true;
    /// Wall-clock time is excluded from the manifest when false, so reruns
    /// produce byte-identical manifests.
    bool record_wall_time = true;
};

/// "<env>_<mode>_seed<seed>"
std::string run_id(const TrainConfig& cfg);

/// Trains once and writes log.csv, episodes.csv, [steps.csv], [params.ckpt]
/// and manifest.json under out_dir/run_id(cfg). Returns the manifest.
RunManifest run_training(const TrainConfig& cfg, const RunOptions& options);

/// Learning curve series for one run: (timestep, mean_return_100) per update.
struct CurvePoint {
    double timestep = 0.0;
    double value = 0.0;
};
std::vector<CurvePoint> read_learning_curve(const RunManifest& manifest, const std::filesystem::path& run_dir);

/// One curve per label; each label's runs are averaged pointwise with a
/// +-1 std band. Runs of a label must share timesteps (truncated to the shortest).
std::string render_learning_curve_svg(const std::map<std::string, std::vector<std::vector<CurvePoint>>>& curves,
                                      const std::string& title);

// --- compare ---

enum class Verdict { win, fair, lose };
std::string_view to_string(Verdict v);

struct CompareRow {
    std::string mode;
    std::size_t runs = 0;
    double mean = 0.0;
    /// Sample standard deviation across runs (0 for a single run).
    double stddev = 0.0;
    /// Percent relative to the baseline mean.
    double margin_percent = 0.0;
    Verdict verdict = Verdict::fair;
};

struct CompareTable {
    std::string env;
    std::string baseline;
    std::vector<CompareRow> rows;
};

/// Margin (candidate - baseline) / |baseline| in percent. Equal values give
/// 0; a zero baseline with a nonzero candidate gives +-infinity.
double relative_margin_percent(double baseline, double candidate);
/// Margins beyond +-10% are a win / loss.
Verdict verdict_for(double margin_percent);

/// Groups runs by mode; the final score of a run is its mean return over the
/// last 100 episodes. Throws InputError when fewer than two runs are given,
/// when environments differ, or when the baseline mode is absent.
CompareTable compare_runs(const std::vector<RunManifest>& manifests, const std::string& baseline_mode);
void write_compare_csv(std::ostream& out, const CompareTable& table);
std::string format_compare_table(const CompareTable& table);

// --- sweep ---

struct SweepAxis {
    std::string key;  // a config key, e.g. "vwr-t"
    std::vector<std::string> values;
};

struct SweepSpec {
    TrainConfig base;
    std::vector<SweepAxis> axes;
    std::vector<std::uint64_t> seeds{1};

    /// Cartesian product size.
    std::size_t cells() const;
    /// Config for a cell (row-major over axes) and seed.
    TrainConfig cell_config(std::size_t cell, std::uint64_t seed) const;
    std::vector<std::string> cell_values(std::size_t cell) const;
};

/// The T x sigma_max robustness grid: vwr-t in {10,20,40}, sigma-max in {1,2}.
std::vector<SweepAxis> default_sweep_axes();

struct SweepCellResult {
    std::vector<std::string> values;
    std::vector<double> scores;  // one per successful seed
    std::vector<std::string> failures;
    double mean = 0.0;
    double stddev = 0.0;
};

struct SweepOptions {
    std::filesystem::path out_dir = "runs/sweep";
    /// Number of worker threads; cells x seeds are the work items.
    int jobs = 1;
    /// When nonzero, work items are executed in an order shuffled with this seed.
    std::uint64_t shuffle_seed = 0;
    bool write_runs = true;
};

/// Runs every (cell, seed) pair. A failed pair is recorded and the sweep
/// continues. Results are indexed by cell regardless of execution order.
std::vector<SweepCellResult> run_sweep(const SweepSpec& spec, const SweepOptions& options);
void write_sweep_csv(std::ostream& out, const SweepSpec& spec, const std::vector<SweepCellResult>& results);

// --- sparseness ---

/// Step trace of a run (run dir, manifest.json or steps.csv).
std::vector<StepRecord> load_step_trace(const std::filesystem::path& path);

/// Sparseness of the per-step reward stream over the first `horizon` steps of
/// a run (run dir, manifest.json or steps.csv). Throws InputError when the
/// trace is shorter than the horizon.
double sparseness_report(const std::filesystem::path& path, std::size_t horizon);

/// Sample standard deviation (n - 1); 0 when fewer than two values.
double sample_stddev(const std::vector<double>& values);

}  // namespace vwrrl
