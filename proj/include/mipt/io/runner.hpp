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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "mipt/ancilla.hpp"
#include "mipt/io/manifest.hpp"
#include "mipt/io/plan.hpp"

namespace mipt::io {

/// Notified as cells start and finish; `executed` is false for cells
/// skipped on resume.
struct RunObserver {
    std::function<void(const Cell&)> on_start;
    std::function<void(const Cell&, const CellRecord&, bool executed)> on_finish;
};

namespace detail {

inline CellRecord execute_cell(const Cell& cell, const fs::path& dir, const ExecutionOptions& exec)
{
    const auto started = std::chrono::steady_clock::now();
    CellRecord rec;
    rec.id = cell.id;
    rec.config = cell.config;
    rec.config_hash = config_hash(cell);
    try {
        const auto series = run_ensemble(cell.config, exec);
        const auto csv = series_to_csv(series);
        rec.file = cell.id + ".csv";
        atomic_write(dir / rec.file, csv);
        rec.content_hash = sha256_hex(csv);
        rec.max_norm_drift = series.max_norm_drift;
        if (cell.ancilla.enabled) {
            const double t0 = cell.ancilla.t0 ? *cell.ancilla.t0 : saturation_time(series, "I3");
            const int t0_steps = static_cast<int>(std::llround(t0 / cell.config.dt));
            const auto anc = ancilla_entropy_series(cell.config, t0_steps, cell.ancilla.reference_site, exec);
            const auto anc_csv = series_to_csv(anc);
            rec.ancilla_file = cell.id + "_ancilla.csv";
            atomic_write(dir / rec.ancilla_file, anc_csv);
            rec.ancilla_hash = sha256_hex(anc_csv);
            rec.ancilla_norm_drift = anc.max_norm_drift;
            rec.t0 = t0_steps * cell.config.dt;
        }
        rec.status = CellStatus::complete;
    } catch (const std::exception& e) {
        rec.status = CellStatus::failed;
        rec.error = e.what();
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return rec;
}

} // namespace detail

/// Runs every cell of the plan and keeps `<output_dir>/manifest.ndjson`
/// current after each cell. With resume, complete cells whose configuration
/// and file hashes still match are skipped. Cells are dealt out largest-N
/// first; the thread budget is split between concurrent cells and the
/// trajectories inside each cell. A failing cell is recorded and does not
/// stop the others.
inline ResultManifest run_plan(const ExperimentPlan& plan, const ExecutionOptions& exec = {},
                               const RunObserver& observer = {})
{
    plan.validate();
    const fs::path dir = plan.output_dir;
    fs::create_directories(dir);

    ResultManifest previous;
    const bool have_previous = plan.resume && fs::exists(ResultManifest::path_in(dir));
    if (have_previous) {
        previous = ResultManifest::load(dir);
    }

    const auto cells = plan.cells();
    ResultManifest manifest;
    manifest.dir = dir;
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& cell = cells[i];
        const auto hash = config_hash(cell);
        const auto* old = have_previous ? previous.find(cell.id) : nullptr;
        if (old != nullptr && old->config_hash == hash && previous.verified(*old)) {
            manifest.cells.push_back(*old);
            if (observer.on_finish) {
                observer.on_finish(cell, *old, false);
            }
            continue;
        }
        CellRecord pending;
        pending.id = cell.id;
        pending.config = cell.config;
        pending.config_hash = hash;
        manifest.cells.push_back(std::move(pending));
        todo.push_back(i);
    }
    manifest.save();

    const int threads = std::max(1, exec.threads);
    const int concurrent = std::max(1, std::min<int>(threads, static_cast<int>(todo.size())));
    const ExecutionOptions inner{std::max(1, threads / concurrent)};
    std::mutex mutex;
    parallel_for(todo.size(), concurrent, [&](std::size_t k) {
        const auto& cell = cells[todo[k]];
        if (observer.on_start) {
            const std::lock_guard lock(mutex);
            observer.on_start(cell);
        }
        auto rec = detail::execute_cell(cell, dir, inner);
        const std::lock_guard lock(mutex);
        *manifest.find(cell.id) = rec;
        manifest.save();
        if (observer.on_finish) {
            observer.on_finish(cell, rec, true);
        }
    });
    return manifest;
}

[[nodiscard]] inline bool any_failed(const ResultManifest& m)
{
    return std::any_of(m.cells.begin(), m.cells.end(), [](const auto& c) { return c.status == CellStatus::failed; });
}

} // namespace mipt::io
