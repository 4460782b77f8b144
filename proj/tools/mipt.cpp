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

// Command-line front end: run sweeps, fit them and emit plot tables.
//
// Exit codes: 0 success, 1 cell or analysis failure, 2 invalid configuration.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "mipt/io/config.hpp"
#include "mipt/io/plan.hpp"
#include "mipt/io/report.hpp"
#include "mipt/io/runner.hpp"
#include "mipt/rng.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct GlobalOptions {
    std::string config;
    std::string output_dir;
    int threads = 0;
    bool resume = false;
};

mipt::io::ExperimentPlan load(const GlobalOptions& g)
{
    if (g.config.empty()) {
        throw mipt::io::ConfigError("--config is required");
    }
    auto plan = mipt::io::load_plan(g.config);
    if (!g.output_dir.empty()) {
        plan.output_dir = g.output_dir;
    }
    plan.resume = plan.resume || g.resume;
    return plan;
}

mipt::ExecutionOptions execution(const GlobalOptions& g)
{
    return {g.threads > 0 ? g.threads : mipt::default_thread_count()};
}

int cmd_validate(const GlobalOptions& g)
{
    const auto plan = load(g);
    const auto cells = plan.cells();
    std::cout << "valid: " << cells.size() << " cells, " << plan.analyses.size() << " analyses\n";
    for (const auto& c : cells) {
        std::cout << "  " << c.id << " steps=" << c.config.steps()
                  << " trajectories=" << c.config.n_disorder * c.config.n_traj_per_disorder
                  << (c.ancilla.enabled ? " +ancilla" : "") << "\n";
    }
    return kExitOk;
}

int cmd_run(const GlobalOptions& g)
{
    const auto plan = load(g);
    mipt::io::RunObserver obs;
    obs.on_start = [](const mipt::io::Cell& c) { std::cerr << "start " << c.id << "\n"; };
    obs.on_finish = [](const mipt::io::Cell& c, const mipt::io::CellRecord& r, bool executed) {
        std::cerr << (executed ? "done  " : "skip  ") << c.id << " " << mipt::io::to_string(r.status);
        if (executed) {
            std::fprintf(stderr, " %.1fs", r.wall_seconds);
        }
        if (!r.error.empty()) {
            std::cerr << ": " << r.error;
        }
        std::cerr << "\n";
    };
    const auto manifest = mipt::io::run_plan(plan, execution(g), obs);
    std::cout << "manifest: " << mipt::io::ResultManifest::path_in(manifest.dir).string() << "\n";
    return mipt::io::any_failed(manifest) ? kExitFailure : kExitOk;
}

int cmd_analyze(const GlobalOptions& g, const std::string& only)
{
    const auto plan = load(g);
    const auto manifest = mipt::io::ResultManifest::load(plan.output_dir);
    bool found = only.empty();
    int status = kExitOk;
    for (const auto& req : plan.analyses) {
        if (!only.empty() && req.name != only) {
            continue;
        }
        found = true;
        try {
            const auto out = mipt::io::run_analysis(manifest, req);
            std::cout << req.name << ": " << out.file.string() << "\n";
            if (out.summary.contains("result")) {
                std::cout << "  " << out.summary["result"].dump() << "\n";
            }
        } catch (const mipt::io::ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            std::cerr << req.name << " failed: " << e.what() << "\n";
            status = kExitFailure;
        }
    }
    if (!found) {
        throw mipt::io::ConfigError("no analysis named '" + only + "' in the config");
    }
    return status;
}

int cmd_emit(const GlobalOptions& g, const std::vector<std::string>& figures)
{
    const auto plan = load(g);
    const auto manifest = mipt::io::ResultManifest::load(plan.output_dir);
    mipt::io::EmitOptions o;
    o.critical_p = plan.critical_p;
    o.disorder = plan.base.disorder_strength;
    if (plan.disorder.size() == 1) {
        o.disorder = plan.disorder.front();
    }
    int status = kExitOk;
    for (const auto& fig : figures.empty() ? mipt::io::figure_names() : figures) {
        try {
            for (const auto& path : mipt::io::emit_plot_data(manifest, fig, o)) {
                std::cout << path.string() << "\n";
            }
        } catch (const mipt::io::ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            std::cerr << fig << " skipped: " << e.what() << "\n";
            status = kExitFailure;
        }
    }
    return status;
}

int cmd_seed_split(const GlobalOptions& g, std::optional<std::uint64_t> master, int disorder, int traj)
{
    mipt::TrajectoryConfig base;
    if (!g.config.empty()) {
        base = load(g).base;
    }
    const std::uint64_t m = master.value_or(base.master_seed);
    const int n_dis = disorder > 0 ? disorder : base.n_disorder;
    const int n_traj = traj > 0 ? traj : base.n_traj_per_disorder;
    std::cout << "master_seed " << m << "\n";
    for (int d = 0; d < n_dis; ++d) {
        std::cout << "disorder " << d << " " << mipt::disorder_seed(m, static_cast<std::uint64_t>(d)) << "\n";
        for (int j = 0; j < n_traj; ++j) {
            std::cout << "  trajectory " << d << " " << j << " "
                      << mipt::trajectory_seed(m, static_cast<std::uint64_t>(d), static_cast<std::uint64_t>(j)) << "\n";
        }
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Monitored disordered spin chains: sweeps, fits and plot data"};
    app.fallthrough();
    app.require_subcommand(1);
    app.set_version_flag("--version", mipt::io::kSoftwareVersion);

    GlobalOptions g;
    app.add_option("--config", g.config, "Experiment config file (key = value)");
    app.add_option("--output-dir", g.output_dir, "Override output.dir");
    app.add_option("--threads", g.threads, "Worker threads (default: hardware threads)")->check(CLI::NonNegativeNumber);
    app.add_flag("--resume", g.resume, "Skip cells already complete with matching hashes");

    auto* run = app.add_subcommand("run", "Run every cell of the sweep");
    auto* validate = app.add_subcommand("validate", "Check a config and list its cells");

    std::string only;
    auto* analyze = app.add_subcommand("analyze", "Run the configured analyses");
    analyze->add_option("--name", only, "Run only this analysis");

    std::vector<std::string> figures;
    auto* emit = app.add_subcommand("emit", "Write plot-ready tables");
    emit->add_option("--figure", figures, "Figure(s) to emit (default: all)");

    std::optional<std::uint64_t> master;
    int n_dis = 0;
    int n_traj = 0;
    auto* seeds = app.add_subcommand("seed-split", "Print derived disorder and trajectory seeds");
    seeds->add_option("--master-seed", master, "Master seed (default: from --config)");
    seeds->add_option("--n-disorder", n_dis, "Number of disorder realizations");
    seeds->add_option("--n-traj", n_traj, "Trajectories per realization");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*run) {
            return cmd_run(g);
        }
        if (*validate) {
            return cmd_validate(g);
        }
        if (*analyze) {
            return cmd_analyze(g, only);
        }
        if (*emit) {
            return cmd_emit(g, figures);
        }
        if (*seeds) {
            return cmd_seed_split(g, master, n_dis, n_traj);
        }
    } catch (const mipt::io::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}
