#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "vwrrl/errors.hpp"
#include "vwrrl/harness.hpp"
#include "vwrrl/training_log.hpp"

using namespace vwrrl;
namespace fs = std::filesystem;
using doctest::Approx;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::path(VWRRL_TEST_TMP) / "harness" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

TrainConfig small(Mode mode, std::uint64_t seed) {
    TrainConfig c;
    c.env = "sparse-chain";
    c.env_args["length"] = "6";
    c.mode = mode;
    c.seed = seed;
    c.total_timesteps = 2000;
    c.hidden_dim = 16;
    return c;
}

RunManifest fake_run(const std::string& env, Mode mode, double score) {
    RunManifest m;
    m.config.env = env;
    m.config.mode = mode;
    m.final_score = score;
    m.run_id = env + std::string(to_string(mode));
    return m;
}

}  // namespace

TEST_CASE("run outputs are reproducible byte for byte") {
    const auto a = scratch("repro_a");
    const auto b = scratch("repro_b");
    RunOptions opt;
    opt.record_wall_time = false;
    opt.out_dir = a;
    const auto ma = run_training(small(Mode::a2mc, 3), opt);
    opt.out_dir = b;
    const auto mb = run_training(small(Mode::a2mc, 3), opt);
    CHECK(ma.run_id == "sparse-chain_a2mc_seed3");
    for (const char* f : {"log.csv", "episodes.csv", "steps.csv", "params.ckpt", "manifest.json"}) {
        CHECK(fs::exists(a / ma.run_id / f));
        CHECK(slurp(a / ma.run_id / f) == slurp(b / mb.run_id / f));
    }
}

TEST_CASE("log.csv columns and manifest contents") {
    const auto dir = scratch("columns");
    RunOptions opt;
    opt.out_dir = dir;
    const auto m = run_training(small(Mode::a2c_baseline, 1), opt);
    const auto table = read_csv_file((dir / m.run_id / "log.csv").string());
    CHECK(table.header == std::vector<std::string>{"timestep", "episode", "episode_return", "mean_return_100",
                                                   "r_vwr_mean", "sigma_delta_mean", "policy_loss",
                                                   "value_loss_short", "value_loss_long", "entropy",
                                                   "hotwire_active"});
    CHECK(table.rows.size() == 100);
    const auto col = table.column("value_loss_long");
    for (const auto& row : table.rows) CHECK(row[col] == "0");
    CHECK_THROWS_AS(table.column("nope"), InputError);

    const auto loaded = load_manifest(dir / m.run_id);
    CHECK(loaded.run_id == m.run_id);
    CHECK(loaded.config == small(Mode::a2c_baseline, 1).resolved());
    CHECK(loaded.env_spec.state_dim == 6);
    CHECK(loaded.final_score == m.final_score);
    CHECK(loaded.version == version_string());
    CHECK(loaded.outputs.at("steps") == "steps.csv");
    CHECK(loaded.wall_seconds > 0.0);
    CHECK_THROWS_AS(load_manifest(dir / "missing"), InputError);

    const auto curve = read_learning_curve(loaded, dir / m.run_id);
    CHECK(curve.size() == 100);
    CHECK(curve.back().timestep == 2000);
    const auto svg = render_learning_curve_svg({{"a2c_baseline", {curve, curve}}}, "demo");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("a2c_baseline") != std::string::npos);
}

TEST_CASE("episode and step csv round trips") {
    const auto r = train(small(Mode::a2mc, 4), {true});
    std::stringstream eps, steps;
    write_episode_csv(eps, r.log.episodes);
    write_step_csv(steps, r.log.steps);
    const auto e2 = read_episode_csv(eps);
    const auto s2 = read_step_csv(steps);
    REQUIRE(e2.size() == r.log.episodes.size());
    REQUIRE(s2.size() == r.log.steps.size());
    for (std::size_t i = 0; i < e2.size(); ++i) {
        CHECK(e2[i].episode_return == r.log.episodes[i].episode_return);
        CHECK(e2[i].length == r.log.episodes[i].length);
    }
    for (std::size_t i = 0; i < s2.size(); ++i) {
        CHECK(s2[i].r_vwr == r.log.steps[i].r_vwr);
        CHECK(s2[i].sigma_delta == r.log.steps[i].sigma_delta);
        CHECK(s2[i].terminal == r.log.steps[i].terminal);
        CHECK(s2[i].hotwired == r.log.steps[i].hotwired);
    }
    CHECK(audit_vwr_stream(s2, small(Mode::a2mc, 4)) == 0);
    auto tampered = s2;
    tampered[tampered.size() / 2].r_vwr += 0.5;
    CHECK(audit_vwr_stream(tampered, small(Mode::a2mc, 4)) >= 1);
}

TEST_CASE("relative margin and verdicts") {
    CHECK(relative_margin_percent(100, 100) == 0.0);
    CHECK(relative_margin_percent(100, 120) == Approx(20.0));
    CHECK(relative_margin_percent(-50, -40) == Approx(20.0));
    CHECK(relative_margin_percent(0, 0) == 0.0);
    CHECK(relative_margin_percent(0, 1) == std::numeric_limits<double>::infinity());
    CHECK(relative_margin_percent(0, -1) == -std::numeric_limits<double>::infinity());
    CHECK(verdict_for(20.0) == Verdict::win);
    CHECK(verdict_for(10.0) == Verdict::fair);
    CHECK(verdict_for(0.0) == Verdict::fair);
    CHECK(verdict_for(-10.5) == Verdict::lose);
}

TEST_CASE("compare runs") {
    SUBCASE("identical runs are fair at zero margin") {
        const auto t = compare_runs({fake_run("gridworld", Mode::a2c_baseline, 3.0),
                                     fake_run("gridworld", Mode::a2mc, 3.0)},
                                    "a2c_baseline");
        REQUIRE(t.rows.size() == 2);
        CHECK(t.rows[1].margin_percent == 0.0);
        CHECK(t.rows[1].verdict == Verdict::fair);
    }
    SUBCASE("means, sample std and a win") {
        const auto t = compare_runs({fake_run("gridworld", Mode::a2c_baseline, 90.0),
                                     fake_run("gridworld", Mode::a2c_baseline, 110.0),
                                     fake_run("gridworld", Mode::a2mc, 110.0), fake_run("gridworld", Mode::a2mc, 130.0),
                                     fake_run("gridworld", Mode::a2mc, 120.0)},
                                    "a2c_baseline");
        CHECK(t.rows[0].mean == 100.0);
        CHECK(t.rows[0].stddev == Approx(std::sqrt(200.0)));
        CHECK(t.rows[1].runs == 3);
        CHECK(t.rows[1].mean == 120.0);
        CHECK(t.rows[1].stddev == Approx(10.0));
        CHECK(t.rows[1].margin_percent == Approx(20.0));
        CHECK(t.rows[1].verdict == Verdict::win);
        std::ostringstream csv;
        write_compare_csv(csv, t);
        CHECK(csv.str().rfind("env,mode,runs,mean_final_return,std_final_return,margin_percent,verdict\n", 0) == 0);
        CHECK(format_compare_table(t).find("win") != std::string::npos);
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(compare_runs({fake_run("gridworld", Mode::a2mc, 1.0)}, "a2c_baseline"), InputError);
        CHECK_THROWS_AS(compare_runs({fake_run("gridworld", Mode::a2c_baseline, 1.0),
                                      fake_run("pole-balance", Mode::a2mc, 1.0)},
                                     "a2c_baseline"),
                        InputError);
        CHECK_THROWS_AS(compare_runs({fake_run("gridworld", Mode::a2mc, 1.0),
                                      fake_run("gridworld", Mode::a2mc_no_flip, 1.0)},
                                     "a2c_baseline"),
                        InputError);
    }
}

TEST_CASE("sweep grid shape and cell configs") {
    SweepSpec spec;
    spec.base = small(Mode::a2mc, 1);
    spec.axes = default_sweep_axes();
    CHECK(spec.cells() == 6);
    CHECK(spec.cell_values(0) == std::vector<std::string>{"10", "1"});
    CHECK(spec.cell_values(5) == std::vector<std::string>{"40", "2"});
    const auto c = spec.cell_config(3, 7);
    CHECK(c.vwr.window_T == 20);
    CHECK(c.vwr.sigma_max == 2.0);
    CHECK(c.seed == 7);
}

TEST_CASE("a 1x1 sweep equals a single run") {
    SweepSpec spec;
    spec.base = small(Mode::a2mc, 1);
    spec.axes = {{"vwr-t", {"20"}}};
    spec.seeds = {5};
    SweepOptions opt;
    opt.write_runs = false;
    const auto res = run_sweep(spec, opt);
    REQUIRE(res.size() == 1);
    REQUIRE(res[0].scores.size() == 1);
    auto cfg = small(Mode::a2mc, 5);
    CHECK(res[0].scores[0] == train(cfg).log.final_score());
}

TEST_CASE("sweep results do not depend on execution order or thread count") {
    SweepSpec spec;
    spec.base = small(Mode::a2mc, 1);
    spec.base.total_timesteps = 600;
    spec.axes = default_sweep_axes();
    spec.seeds = {1, 2};
    SweepOptions opt;
    opt.write_runs = false;
    const auto plain = run_sweep(spec, opt);
    opt.shuffle_seed = 99;
    opt.jobs = 3;
    const auto shuffled = run_sweep(spec, opt);
    REQUIRE(plain.size() == 6);
    for (std::size_t c = 0; c < 6; ++c) {
        CHECK(plain[c].scores == shuffled[c].scores);
        CHECK(plain[c].failures.empty());
    }
    std::ostringstream a, b;
    write_sweep_csv(a, spec, plain);
    write_sweep_csv(b, spec, shuffled);
    CHECK(a.str() == b.str());
    CHECK(a.str().rfind("cell,vwr-t,sigma-max,runs,failed,mean_final_return,std_final_return\n", 0) == 0);
}

TEST_CASE("sweep records failing cells and keeps going") {
    SweepSpec spec;
    spec.base = small(Mode::a2mc, 1);
    spec.base.total_timesteps = 200;
    spec.axes = {{"n-steps", {"10", "0"}}};
    SweepOptions opt;
    opt.write_runs = false;
    const auto res = run_sweep(spec, opt);
    CHECK(res[0].failures.empty());
    CHECK(res[0].scores.size() == 1);
    CHECK(res[1].failures.size() == 1);
    CHECK(res[1].scores.empty());

    spec.axes = {{"no-such-key", {"1"}}};
    CHECK_THROWS_AS(run_sweep(spec, opt), UsageError);
}

TEST_CASE("sparseness report") {
    const auto dir = scratch("sparse");
    const fs::path run = dir / "run";
    fs::create_directories(run);
    std::ofstream(run / "steps.csv") << "timestep,episode,reward,r_vwr,sigma_delta,terminal,hotwired\n"
                                        "0,0,0,0,0,0,0\n1,0,0,0,0,0,0\n2,0,1,0,0,1,0\n3,1,0,0,0,0,0\n";
    CHECK(sparseness_report(run / "steps.csv", 4) == 1.0);
    CHECK(sparseness_report(run / "steps.csv", 2) == 1.0);
    CHECK_THROWS_AS(sparseness_report(run / "steps.csv", 5), InputError);
    CHECK_THROWS_AS(sparseness_report(dir / "absent.csv", 2), InputError);

    RunOptions opt;
    opt.out_dir = dir;
    auto cfg = small(Mode::a2mc, 2);
    const auto m = run_training(cfg, opt);
    const double phi = sparseness_report(dir / m.run_id, 1000);
    CHECK(phi > 0.0);
    CHECK(phi <= 1.0);

    opt.write_steps = false;
    cfg.seed = 3;
    const auto m2 = run_training(cfg, opt);
    CHECK_THROWS_AS(sparseness_report(dir / m2.run_id, 10), InputError);
}

TEST_CASE("sample_stddev") {
    CHECK(sample_stddev({}) == 0.0);
    CHECK(sample_stddev({4.0}) == 0.0);
    CHECK(sample_stddev({1.0, 3.0}) == Approx(std::sqrt(2.0)));
}
