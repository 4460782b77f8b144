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

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mipt/observables.hpp"
#include "mipt/trajectory.hpp"

namespace mipt {

/// Chain state plus one reference qubit stored as the highest bit.
struct AncillaState {
    StateVector state; // chain_length + 1 qubits
    double t0 = 0.0;
    int reference_site = 0;

    [[nodiscard]] int chain_length() const noexcept { return state.qubits() - 1; }

    [[nodiscard]] double entropy() const
    {
        return entanglement_entropy(state, Subsystem({state.qubits() - 1}, state.qubits()));
    }
};

/// (|0>_a |psi> + |1>_a |psi_1>) / sqrt2 with psi_1 the part of X_ref|psi>
/// orthogonal to psi, normalized. The ancilla is then exactly maximally mixed.
inline AncillaState entangle_ancilla(const StateVector& state, int reference_site, double t0 = 0.0)
{
    const int n = state.qubits();
    if (reference_site < 0 || reference_site >= n) {
        throw std::out_of_range("reference site outside the chain");
    }
    if (std::abs(state.norm() - 1.0) > 1e-8) {
        throw std::invalid_argument("state must be normalized");
    }
    const Eigen::Index dim = state.dimension();
    const Eigen::Index bit = Eigen::Index{1} << reference_site;
    Eigen::VectorXcd flipped(dim);
    for (Eigen::Index b = 0; b < dim; ++b) {
        flipped[b] = state[b ^ bit];
    }
    const Complex overlap = state.amplitudes().dot(flipped);
    flipped -= overlap * state.amplitudes();
    const double residual = flipped.norm();
    if (residual < 1e-10) {
        throw std::invalid_argument("state is an X eigenstate at site " + std::to_string(reference_site) +
                                    "; no orthogonal partner");
    }
    flipped /= residual;
    Eigen::VectorXcd joint(2 * dim);
    joint.head(dim) = state.amplitudes() / std::numbers::sqrt2;
    joint.tail(dim) = flipped / std::numbers::sqrt2;
    return AncillaState{StateVector(n + 1, std::move(joint)), t0, reference_site};
}

namespace detail {

/// Entangles the ancilla at `reference_site`, moving right past sites where
/// the state is an X eigenstate (for example just after an X measurement).
inline AncillaState entangle_with_fallback(const StateVector& chain, int reference_site, double t0)
{
    const int n = chain.qubits();
    for (int shift = 0; shift < n; ++shift) {
        try {
            return entangle_ancilla(chain, (reference_site + shift) % n, t0);
        } catch (const std::invalid_argument&) {
        }
    }
    throw std::runtime_error("cannot entangle ancilla: state is an X eigenstate on every site");
}

} // namespace detail

/// Ancilla entropy protocol for trajectories sharing one realization: run the
/// standard dynamics for t0_steps, entangle the ancilla, then keep evolving
/// and measuring the chain only. Samples S_ancilla at the configured grid
/// shifted to start at t0. A negative reference site selects N/2.
inline std::vector<TrajectoryOutput> run_ancilla_batch(const TrajectoryConfig& config, const EigenSystem& eig,
                                                       std::span<const std::uint64_t> seeds, int t0_steps,
                                                       int reference_site)
{
    config.validate();
    const int n = config.chain_length;
    if (t0_steps < 0 || t0_steps > config.steps()) {
        throw std::invalid_argument("t0 must lie within [0, t_max]");
    }
    if (reference_site >= n) {
        throw std::out_of_range("reference site outside the chain");
    }
    if (reference_site < 0) {
        reference_site = n / 2;
    }
    const std::size_t k = seeds.size();
    std::vector<MonitoredDynamics> dyn;
    std::vector<StateVector> states;
    dyn.reserve(k);
    states.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        dyn.emplace_back(config, eig, seeds[i]);
        states.push_back(dyn[i].initial_state());
    }
    auto advance = [&](int step) {
        evolve_batch(states, eig, config.dt);
        for (std::size_t i = 0; i < k; ++i) {
            states[i] = dyn[i].measure(std::move(states[i]), step);
        }
    };
    for (int step = 1; step <= t0_steps; ++step) {
        advance(step);
    }
    for (auto& s : states) {
        s = detail::entangle_with_fallback(s, reference_site, t0_steps * config.dt).state;
    }

    const Subsystem ancilla_site({n}, n + 1);
    std::vector<TrajectoryOutput> out(k);
    auto record_samples = [&](int step) {
        for (std::size_t i = 0; i < k; ++i) {
            out[i].times.push_back(step * config.dt);
            out[i].values[0].push_back(entanglement_entropy(states[i], ancilla_site));
        }
    };
    for (auto& o : out) {
        o.names = {"S_ancilla"};
        o.values.assign(1, {});
    }
    record_samples(t0_steps);
    const auto steps = sample_steps(config);
    std::size_t next = 0;
    while (next < steps.size() && steps[next] <= t0_steps) {
        ++next;
    }
    for (int step = t0_steps + 1; step <= config.steps(); ++step) {
        advance(step);
        if (next < steps.size() && steps[next] == step) {
            record_samples(step);
            ++next;
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        out[i].record = std::move(dyn[i].record());
        out[i].max_norm_drift = dyn[i].max_norm_drift();
    }
    return out;
}

inline TrajectoryOutput run_ancilla_trajectory(const TrajectoryConfig& config, const EigenSystem& eig,
                                               std::uint64_t traj_seed, int t0_steps, int reference_site = -1)
{
    const std::uint64_t seeds[] = {traj_seed};
    return std::move(run_ancilla_batch(config, eig, seeds, t0_steps, reference_site).front());
}

/// Ensemble-averaged S_ancilla(t) for t >= t0.
inline TimeSeriesRecord ancilla_entropy_series(const TrajectoryConfig& config, int t0_steps, int reference_site = -1,
                                               const ExecutionOptions& exec = {})
{
    return run_ensemble_with(config, exec, [&](const EigenSystem& eig, std::span<const std::uint64_t> seeds) {
        return run_ancilla_batch(config, eig, seeds, t0_steps, reference_site);
    });
}

/// Saturation time of |I3|: the earliest sampled time from which the
/// remaining series passes the steady-state slope test.
inline double saturation_time(const TimeSeriesRecord& record, const std::string& observable = "I3")
{
    const auto& series = record.at(observable);
    std::vector<double> mag(series.mean.size());
    for (std::size_t i = 0; i < mag.size(); ++i) {
        mag[i] = std::abs(series.mean[i]);
    }
    const auto& t = record.times;
    for (std::size_t i = 0; i + 4 <= t.size(); ++i) {
        std::vector<double> tt(t.begin() + static_cast<std::ptrdiff_t>(i), t.end());
        std::vector<double> mm(mag.begin() + static_cast<std::ptrdiff_t>(i), mag.end());
        std::vector<double> ss(series.sem.begin() + static_cast<std::ptrdiff_t>(i), series.sem.end());
        if (!steady_state_value(tt, mm, ss, tt.front()).saturation_warning) {
            return t[i];
        }
    }
    return t.back();
}

} // namespace mipt
