// Copyright 2026 The mipt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mipt/io/config.hpp"
#include "mipt/trajectory.hpp"

namespace mipt::io {

using nlohmann::json;

inline double parse_renyi_index(const std::string& s)
{
    if (s == "inf") {
        return kRenyiInfinity;
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError("bad Renyi index '" + s + "'");
    }
    return v;
}

inline InitialState parse_initial_state(const std::string& s)
{
    if (s == "haar_product") {
        return InitialState::haar_product;
    }
    if (s == "z_product") {
        return InitialState::z_product;
    }
    if (s == "specified") {
        return InitialState::specified;
    }
    throw ConfigError("unknown initial state '" + s + "'");
}

inline Boundary parse_boundary(const std::string& s)
{
    if (s == "periodic") {
        return Boundary::periodic;
    }
    if (s == "open") {
        return Boundary::open;
    }
    throw ConfigError("unknown boundary '" + s + "'");
}

/// Canonical JSON echo of a configuration. Renyi indices are strings so that
/// infinity survives; the specified state is stored as [re, im] pairs.
inline json config_to_json(const TrajectoryConfig& c)
{
    json renyi = json::array();
    for (double n : c.observables.renyi_indices) {
        renyi.push_back(format_renyi_index(n));
    }
    json j{{"N", c.chain_length},
           {"W", c.disorder_strength},
           {"J", c.coupling},
           {"dt", c.dt},
           {"p", c.p},
           {"basis", to_string(c.basis)},
           {"boundary", to_string(c.boundary)},
           {"t_max", c.t_max},
           {"observables",
            {{"half_chain_entropy", c.observables.half_chain_entropy},
             {"entropy_vs_l", c.observables.entropy_vs_l},
             {"renyi_indices", renyi},
             {"tripartite", c.observables.tripartite},
             {"diagonal_entropy", c.observables.diagonal_entropy}}},
           {"initial_state", to_string(c.initial_state)},
           {"stride", c.stride},
           {"points_per_decade", c.points_per_decade},
           {"master_seed", c.master_seed},
           {"n_disorder", c.n_disorder},
           {"n_traj_per_disorder", c.n_traj_per_disorder}};
    if (c.specified_state) {
        json amps = json::array();
        for (const auto& a : *c.specified_state) {
            amps.push_back({a.real(), a.imag()});
        }
        j["specified_state"] = amps;
    }
    return j;
}

inline TrajectoryConfig config_from_json(const json& j)
{
    TrajectoryConfig c;
    c.chain_length = j.at("N").get<int>();
    c.disorder_strength = j.at("W").get<double>();
    c.coupling = j.at("J").get<double>();
    c.dt = j.at("dt").get<double>();
    c.p = j.at("p").get<double>();
    c.basis = parse_axis(j.at("basis").get<std::string>());
    c.boundary = parse_boundary(j.at("boundary").get<std::string>());
    c.t_max = j.at("t_max").get<double>();
    const auto& o = j.at("observables");
    c.observables.half_chain_entropy = o.at("half_chain_entropy").get<bool>();
    c.observables.entropy_vs_l = o.at("entropy_vs_l").get<bool>();
    for (const auto& n : o.at("renyi_indices")) {
        c.observables.renyi_indices.push_back(parse_renyi_index(n.get<std::string>()));
    }
    c.observables.tripartite = o.at("tripartite").get<bool>();
    c.observables.diagonal_entropy = o.at("diagonal_entropy").get<bool>();
    c.initial_state = parse_initial_state(j.at("initial_state").get<std::string>());
    c.stride = j.at("stride").get<int>();
    c.points_per_decade = j.at("points_per_decade").get<int>();
    c.master_seed = j.at("master_seed").get<std::uint64_t>();
    c.n_disorder = j.at("n_disorder").get<int>();
    c.n_traj_per_disorder = j.at("n_traj_per_disorder").get<int>();
    if (j.contains("specified_state")) {
        const auto& amps = j.at("specified_state");
        Eigen::VectorXcd v(static_cast<Eigen::Index>(amps.size()));
        for (std::size_t i = 0; i < amps.size(); ++i) {
            v[static_cast<Eigen::Index>(i)] = Complex(amps[i][0].get<double>(), amps[i][1].get<double>());
        }
        c.specified_state = std::move(v);
    }
    return c;
}

struct AncillaOptions {
    bool enabled = false;
    std::optional<double> t0; // empty: saturation time of |I3| in the same cell
    int reference_site = -1;  // -1: N/2
};

/// One grid point of a sweep.
struct Cell {
    std::string id;
    TrajectoryConfig config;
    AncillaOptions ancilla;
};

inline std::string cell_id(int n, double w, Axis basis, double p)
{
    return "N" + std::to_string(n) + "_W" + format_shortest(w) + "_" + to_string(basis) + "_p" + format_shortest(p);
}

/// A named fit over completed cells, e.g. `analysis.crit.kind = static_collapse`.
struct AnalysisRequest {
    std::string name;
    std::string kind;
    std::map<std::string, std::string> params;

    [[nodiscard]] std::string text(const std::string& key, const std::string& fallback) const
    {
        const auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }

    [[nodiscard]] double number(const std::string& key, double fallback) const
    {
        const auto it = params.find(key);
        if (it == params.end()) {
            return fallback;
        }
        return parse_renyi_index(it->second);
    }

    [[nodiscard]] std::vector<double> numbers(const std::string& key) const
    {
        std::vector<double> out;
        const auto it = params.find(key);
        if (it != params.end()) {
            for (const auto& s : detail::split_list(it->second)) {
                out.push_back(parse_renyi_index(s));
            }
        }
        return out;
    }
};

/// Parameters accepted by each analysis kind.
inline const std::map<std::string, std::set<std::string>>& analysis_kinds()
{
    static const std::map<std::string, std::set<std::string>> kinds{
        {"static_collapse",
         {"basis", "observable", "window", "N", "p", "W", "p_c_min", "p_c_max", "nu_min", "nu_max", "grid",
          "sem_weighted"}},
        {"dynamic_collapse", {"basis", "observable", "N", "p", "W", "t_min", "t_max", "sem_weighted"}},
        {"decay_rate", {"basis", "observable", "N", "p", "W", "t_max"}},
        {"peak_scaling", {"basis", "observable", "N", "p", "W"}},
        {"renyi_scaling", {"basis", "N", "p", "W", "window", "l_min"}},
        {"dynamical_exponent", {"basis", "N", "p", "W", "exclusion", "z_min", "z_max", "sem_weighted"}},
    };
    return kinds;
}

struct ExperimentPlan {
    TrajectoryConfig base;
    std::vector<int> sizes;
    std::vector<double> probabilities;
    std::vector<Axis> bases;
    std::vector<double> disorder;
    AncillaOptions ancilla;
    std::vector<AnalysisRequest> analyses;
    std::filesystem::path output_dir = "results";
    bool resume = false;
    double critical_p = 0.014; // cell used for fig6b/fig6c emission

    /// All grid cells, largest N first, then W, basis and p ascending.
    [[nodiscard]] std::vector<Cell> cells() const
    {
        std::vector<Cell> out;
        std::vector<int> ns = sizes;
        std::sort(ns.begin(), ns.end(), std::greater<>());
        std::vector<double> ws = disorder;
        std::sort(ws.begin(), ws.end());
        std::vector<double> ps = probabilities;
        std::sort(ps.begin(), ps.end());
        for (int n : ns) {
            for (double w : ws) {
                for (Axis b : bases) {
                    for (double p : ps) {
                        Cell c{cell_id(n, w, b, p), base, ancilla};
                        c.config.chain_length = n;
                        c.config.disorder_strength = w;
                        c.config.basis = b;
                        c.config.p = p;
                        out.push_back(std::move(c));
                    }
                }
            }
        }
        return out;
    }

    void validate() const
    {
        if (sizes.empty() || probabilities.empty() || bases.empty() || disorder.empty()) {
            throw ConfigError("sweep grids must be non-empty");
        }
        for (const auto& c : cells()) {
            try {
                c.config.validate();
            } catch (const std::exception& e) {
                throw ConfigError("cell " + c.id + ": " + e.what());
            }
            if (c.ancilla.enabled) {
                if (!c.config.observables.tripartite && !c.ancilla.t0) {
                    throw ConfigError("cell " + c.id + ": automatic ancilla t0 needs observables.tripartite");
                }
                if (c.ancilla.t0 && (*c.ancilla.t0 < 0.0 || *c.ancilla.t0 > c.config.t_max)) {
                    throw ConfigError("ancilla.t0 must lie within [0, t_max]");
                }
                if (c.ancilla.reference_site >= c.config.chain_length) {
                    throw ConfigError("ancilla.reference_site outside the chain for " + c.id);
                }
            }
        }
        std::set<std::string> ids;
        for (const auto& c : cells()) {
            if (!ids.insert(c.id).second) {
                throw ConfigError("duplicate sweep value produces cell " + c.id + " twice");
            }
        }
        for (const auto& a : analyses) {
            const auto it = analysis_kinds().find(a.kind);
            if (it == analysis_kinds().end()) {
                throw ConfigError("analysis '" + a.name + "': unknown kind '" + a.kind + "'");
            }
            for (const auto& [k, _] : a.params) {
                if (!it->second.count(k)) {
                    throw ConfigError("analysis '" + a.name + "': unknown parameter '" + k + "'");
                }
            }
        }
    }
};

inline const std::set<std::string>& plan_keys()
{
    static const std::set<std::string> keys{
        "model.N",
        "model.W",
        "model.J",
        "model.boundary",
        "dynamics.dt",
        "dynamics.p",
        "dynamics.basis",
        "dynamics.t_max",
        "dynamics.initial_state",
        "dynamics.initial_basis_state",
        "observables.half_chain_entropy",
        "observables.entropy_vs_l",
        "observables.renyi_indices",
        "observables.tripartite",
        "observables.diagonal_entropy",
        "sampling.stride",
        "sampling.points_per_decade",
        "ensemble.n_disorder",
        "ensemble.n_traj",
        "ensemble.master_seed",
        "ancilla.enabled",
        "ancilla.t0",
        "ancilla.reference_site",
        "sweep.N",
        "sweep.p",
        "sweep.basis",
        "sweep.W",
        "output.dir",
        "output.resume",
        "emit.critical_p",
    };
    return keys;
}

/// Builds and validates a plan. Sweep keys override their model/dynamics
/// counterparts; absent sweep keys fall back to the single base value.
inline ExperimentPlan parse_plan(const KeyValueConfig& kv)
{
    ExperimentPlan plan;
    std::map<std::string, AnalysisRequest> analyses;
    for (const auto& key : kv.keys()) {
        if (key.rfind("analysis.", 0) == 0) {
            const auto rest = key.substr(9);
            const auto dot = rest.find('.');
            if (dot == std::string::npos || dot == 0 || dot + 1 == rest.size()) {
                throw kv.error(key, "expected analysis.<name>.<parameter>");
            }
            auto& req = analyses[rest.substr(0, dot)];
            req.name = rest.substr(0, dot);
            const auto param = rest.substr(dot + 1);
            if (param == "kind") {
                req.kind = kv.raw(key);
            } else {
                req.params[param] = kv.raw(key);
            }
        } else if (!plan_keys().count(key)) {
            throw kv.error(key, "unknown key");
        }
    }
    for (auto& [name, req] : analyses) {
        if (req.kind.empty()) {
            throw ConfigError("analysis '" + name + "' has no kind");
        }
        plan.analyses.push_back(std::move(req));
    }

    auto& c = plan.base;
    const auto in_int = [&](const std::string& key, long long fallback, long long lo, long long hi) {
        const auto v = kv.get_int(key, fallback);
        if (v < lo || v > hi) {
            throw kv.error(key, "out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
        return static_cast<int>(v);
    };
    c.chain_length = in_int("model.N", 8, 2, kMaxChainLength);
    c.disorder_strength = kv.get_double("model.W", 10.0);
    c.coupling = kv.get_double("model.J", 1.0);
    try {
        c.boundary = parse_boundary(kv.get_string("model.boundary", "periodic"));
        c.basis = parse_axis(kv.get_string("dynamics.basis", "Z"));
        c.initial_state = parse_initial_state(kv.get_string("dynamics.initial_state", "haar_product"));
        for (const auto& s : kv.get_list("observables.renyi_indices")) {
            c.observables.renyi_indices.push_back(parse_renyi_index(s));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    c.dt = kv.get_double("dynamics.dt", 1.0);
    c.p = kv.get_double("dynamics.p", 0.0);
    c.t_max = kv.get_double("dynamics.t_max", 100.0);
    c.observables.half_chain_entropy = kv.get_bool("observables.half_chain_entropy", true);
    c.observables.entropy_vs_l = kv.get_bool("observables.entropy_vs_l", false);
    c.observables.tripartite = kv.get_bool("observables.tripartite", true);
    c.observables.diagonal_entropy = kv.get_bool("observables.diagonal_entropy", true);
    c.stride = in_int("sampling.stride", 1, 0, std::numeric_limits<int>::max());
    c.points_per_decade = in_int("sampling.points_per_decade", 0, 0, 1000);
    c.n_disorder = in_int("ensemble.n_disorder", 1, 1, std::numeric_limits<int>::max());
    c.n_traj_per_disorder = in_int("ensemble.n_traj", 1, 1, std::numeric_limits<int>::max());
    c.master_seed = kv.get_uint64("ensemble.master_seed", 1);

    for (auto n : kv.get_int_list("sweep.N")) {
        if (n < 2 || n > kMaxChainLength) {
            throw kv.error("sweep.N", "chain length outside [2, 16]");
        }
        plan.sizes.push_back(static_cast<int>(n));
    }
    if (plan.sizes.empty()) {
        plan.sizes.push_back(c.chain_length);
    }
    plan.probabilities = kv.get_double_list("sweep.p");
    if (plan.probabilities.empty()) {
        plan.probabilities.push_back(c.p);
    }
    for (const auto& b : kv.get_list("sweep.basis")) {
        try {
            plan.bases.push_back(parse_axis(b));
        } catch (const std::invalid_argument& e) {
            throw kv.error("sweep.basis", e.what());
        }
    }
    if (plan.bases.empty()) {
        plan.bases.push_back(c.basis);
    }
    plan.disorder = kv.get_double_list("sweep.W");
    if (plan.disorder.empty()) {
        plan.disorder.push_back(c.disorder_strength);
    }

    if (c.initial_state == InitialState::specified) {
        if (!kv.has("dynamics.initial_basis_state") || plan.sizes.size() != 1) {
            throw ConfigError("initial_state = specified needs dynamics.initial_basis_state and a single N");
        }
        const auto b = kv.get_uint64("dynamics.initial_basis_state", 0);
        const int n = plan.sizes.front();
        if (b >= (std::uint64_t{1} << n)) {
            throw kv.error("dynamics.initial_basis_state", "basis index outside [0, 2^N)");
        }
        c.specified_state = StateVector::basis_state(n, b).amplitudes();
    }

    plan.ancilla.enabled = kv.get_bool("ancilla.enabled", false);
    if (kv.has("ancilla.t0") && kv.raw("ancilla.t0") != "auto") {
        plan.ancilla.t0 = kv.get_double("ancilla.t0", 0.0);
    }
    plan.ancilla.reference_site = in_int("ancilla.reference_site", -1, -1, kMaxChainLength - 1);
    plan.output_dir = kv.get_string("output.dir", "results");
    plan.resume = kv.get_bool("output.resume", false);
    plan.critical_p = kv.get_double("emit.critical_p", 0.014);
    plan.validate();
    return plan;
}

inline ExperimentPlan load_plan(const std::string& path)
{
    return parse_plan(KeyValueConfig::load(path));
}

} // namespace mipt::io
