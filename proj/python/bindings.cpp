#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "vwrrl/agent.hpp"
#include "vwrrl/cli.hpp"
#include "vwrrl/errors.hpp"
#include "vwrrl/harness.hpp"
#include "vwrrl/vwr.hpp"

namespace py = pybind11;
using namespace vwrrl;

namespace {

TrainConfig config_from_dict(const py::dict& d) {
    TrainConfig cfg;
    for (const auto& [k, v] : d) {
        const auto key = py::str(k).cast<std::string>();
        if (key == "env-args") {
            for (const auto& [ak, av] : v.cast<py::dict>())
                cfg.env_args[py::str(ak).cast<std::string>()] = py::str(av).cast<std::string>();
        } else if (py::isinstance<py::bool_>(v)) {
            throw InputError("config key '" + key + "' does not take a boolean");
        } else {
            set_key_value(cfg, key, py::str(v).cast<std::string>());
        }
    }
    return cfg;
}

py::dict config_to_dict(const TrainConfig& cfg) {
    return py::module_::import("json").attr("loads")(to_json(cfg).dump());
}

py::dict breakdown_to_dict(const VwrBreakdown& b) {
    py::dict d;
    d["r_vwr"] = b.r_vwr;
    d["r_high"] = b.r_high;
    d["sigma_delta"] = b.sigma_delta;
    d["omega"] = b.omega;
    d["processed"] = b.processed;
    d["reference"] = b.reference;
    d["differential"] = b.differential;
    d["zeroed_reason"] = std::string(to_string(b.zeroed_reason));
    return d;
}

}  // namespace

PYBIND11_MODULE(_vwrrl, m) {
    m.doc() = "Variability-weighted rewards and actor multi-critic training";
    m.attr("__version__") = version_string();

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<StateError>(m, "StateError", PyExc_RuntimeError);
    py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);

    m.def(
        "vwr",
        [](const std::vector<double>& rewards, double sigma_max, double tau, bool flip, const std::string& std_mode) {
            VwrConfig cfg;
            cfg.window_T = static_cast<int>(rewards.size());
            cfg.sigma_max = sigma_max;
            cfg.tau = tau;
            cfg.flip = flip;
            cfg.std_mode = std_mode_from_string(std_mode);
            cfg.validate();
            return breakdown_to_dict(vwr(rewards, cfg));
        },
        py::arg("rewards"), py::arg("sigma_max") = 1.0, py::arg("tau") = 2.0, py::arg("flip") = true,
        py::arg("std_mode") = "population",
        "VWR of a reward window (oldest first; the window length is T).");
    m.def("sparseness", [](const std::vector<double>& x) { return sparseness(x); }, py::arg("rewards"));

    m.def(
        "compute_returns",
        [](const std::vector<double>& rewards, const std::vector<bool>& terminals, double bootstrap, double gamma) {
            if (rewards.size() != terminals.size()) throw InputError("rewards and terminals differ in length");
            RolloutBatch b;
            b.env_rewards = rewards;
            b.vwr_rewards = rewards;
            b.terminals = terminals;
            b.actions.assign(rewards.size(), 0);
            b.bootstrap_short = bootstrap;
            b.bootstrap_long = bootstrap;
            return compute_returns(b, gamma).first;
        },
        py::arg("rewards"), py::arg("terminals"), py::arg("bootstrap"), py::arg("gamma"));

    py::class_<Environment>(m, "Environment")
        .def_property_readonly("name", [](const Environment& e) { return e.spec().name; })
        .def_property_readonly("state_dim", [](const Environment& e) { return e.spec().state_dim; })
        .def_property_readonly("num_actions", [](const Environment& e) { return e.spec().num_actions; })
        .def_property_readonly("max_episode_steps", [](const Environment& e) { return e.spec().max_episode_steps; })
        .def_property_readonly("terminal", &Environment::terminal)
        .def("reset", &Environment::reset, py::arg("seed") = 0)
        .def("step", [](Environment& e, int action) {
            auto r = e.step(action);
            return py::make_tuple(r.next_state, r.reward, r.terminal);
        });
    m.def("env_names", &env_names);
    m.def(
        "make_env", [](const std::string& name, const EnvArgs& args) { return make_env(name, args); },
        py::arg("name"), py::arg("args") = EnvArgs{});

    m.def("default_config", [] { return config_to_dict(TrainConfig{}.resolved()); });
    m.def(
        "train",
        [](const py::dict& config, bool record_steps) {
            const TrainConfig cfg = config_from_dict(config);
            TrainingResult result;
            {
                py::gil_scoped_release release;
                result = train(cfg, {record_steps});
            }
            py::dict out;
            out["config"] = config_to_dict(cfg.resolved());
            out["final_score"] = result.log.final_score();
            py::list episodes;
            for (const auto& e : result.log.episodes) {
                episodes.append(py::dict(py::arg("episode") = e.episode, py::arg("end_timestep") = e.end_timestep,
                                         py::arg("length") = e.length, py::arg("episode_return") = e.episode_return));
            }
            out["episodes"] = episodes;
            py::list updates;
            for (const auto& u : result.log.updates) {
                updates.append(py::dict(py::arg("timestep") = u.timestep,
                                        py::arg("mean_return_100") = u.mean_return_100,
                                        py::arg("r_vwr_mean") = u.r_vwr_mean,
                                        py::arg("policy_loss") = u.stats.policy_loss,
                                        py::arg("value_loss_short") = u.stats.value_loss_short,
                                        py::arg("value_loss_long") = u.stats.value_loss_long,
                                        py::arg("entropy") = u.stats.entropy,
                                        py::arg("hotwire_active") = u.hotwire_active));
            }
            out["updates"] = updates;
            if (record_steps) {
                std::vector<double> rewards, r_vwr;
                for (const auto& s : result.log.steps) {
                    rewards.push_back(s.reward);
                    r_vwr.push_back(s.r_vwr);
                }
                out["rewards"] = rewards;
                out["r_vwr"] = r_vwr;
            }
            return out;
        },
        py::arg("config") = py::dict(), py::arg("record_steps") = false,
        "Train once. `config` maps CLI key names (e.g. 'env', 'mode', 'timesteps', 'vwr-t') to values.");

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int code = 0;
            {
                py::gil_scoped_release release;
                code = run_cli(args, out, err);
            }
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
