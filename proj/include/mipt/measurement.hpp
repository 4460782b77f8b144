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
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "mipt/rng.hpp"
#include "mipt/state.hpp"

namespace mipt {

/// Single-site projective measurement axis. Outcome +1 projects onto the
/// +1/2 eigenstate of S^axis: spin up (bit 1) for Z, (|dn> + |up>)/sqrt2 for X.
enum class Axis { Z, X };

inline const char* to_string(Axis a) noexcept
{
    return a == Axis::Z ? "Z" : "X";
}

inline Axis parse_axis(const std::string& s)
{
    if (s == "Z" || s == "z") {
        return Axis::Z;
    }
    if (s == "X" || s == "x") {
        return Axis::X;
    }
    throw std::invalid_argument("unknown measurement basis '" + s + "'");
}

struct MeasurementEvent {
    int step;
    int site;
    Axis axis;
    int outcome; // +1 or -1

    bool operator==(const MeasurementEvent&) const = default;
};

struct MeasurementRecord {
    std::vector<MeasurementEvent> events;

    void append(const MeasurementRecord& other)
    {
        events.insert(events.end(), other.events.begin(), other.events.end());
    }
};

struct MeasurementResult {
    StateVector state;
    int outcome;
    double probability;
};

namespace detail {

/// Born probability of the +1 outcome.
inline double probability_plus(const StateVector& state, int site, Axis axis)
{
    const Eigen::Index bit = Eigen::Index{1} << site;
    const auto& a = state.amplitudes();
    if (axis == Axis::Z) {
        double p = 0.0;
        for (Eigen::Index b = 0; b < a.size(); ++b) {
            if (b & bit) {
                p += std::norm(a[b]);
            }
        }
        return p;
    }
    // (1 + <sigma^x>) / 2 with <sigma^x> = 2 Re sum conj(a_b) a_{b|bit}
    double total = 0.0;
    double cross = 0.0;
    for (Eigen::Index b = 0; b < a.size(); ++b) {
        total += std::norm(a[b]);
        if (!(b & bit)) {
            cross += (std::conj(a[b]) * a[b | bit]).real();
        }
    }
    return 0.5 * total + cross;
}

inline void project(StateVector& state, int site, Axis axis, int outcome)
{
    const Eigen::Index bit = Eigen::Index{1} << site;
    auto& a = state.amplitudes();
    if (axis == Axis::Z) {
        for (Eigen::Index b = 0; b < a.size(); ++b) {
            if (static_cast<bool>(b & bit) != (outcome > 0)) {
                a[b] = 0.0;
            }
        }
        return;
    }
    for (Eigen::Index b = 0; b < a.size(); ++b) {
        if (b & bit) {
            continue;
        }
        const Complex dn = a[b];
        const Complex up = a[b | bit];
        if (outcome > 0) {
            const Complex s = 0.5 * (dn + up);
            a[b] = s;
            a[b | bit] = s;
        } else {
            const Complex d = 0.5 * (dn - up);
            a[b] = d;
            a[b | bit] = -d;
        }
    }
}

} // namespace detail

/// Born-rule projective measurement of one site. Works on any StateVector,
/// so ancilla-augmented states can be measured on their chain sites.
inline MeasurementResult measure_site(StateVector state, int site, Axis axis, Rng& rng)
{
    if (site < 0 || site >= state.qubits()) {
        throw std::out_of_range("measurement site " + std::to_string(site) + " outside the state");
    }
    const double p_plus = std::clamp(detail::probability_plus(state, site, axis), 0.0, 1.0);
    const double p_minus = std::clamp(1.0 - p_plus, 0.0, 1.0);
    if (p_plus < 1e-14 && p_minus < 1e-14) {
        throw std::runtime_error("both Born probabilities vanish; state is corrupted");
    }
    const int outcome = uniform01(rng) < p_plus ? +1 : -1;
    detail::project(state, site, axis, outcome);
    state.normalize();
    return {std::move(state), outcome, outcome > 0 ? p_plus : p_minus};
}

struct SweepResult {
    StateVector state;
    MeasurementRecord record;
};

/// One measurement layer: every site in ascending order is measured with
/// independent probability p. Only sites [0, sites) are touched, which lets
/// the ancilla protocol leave its reference qubit alone.
inline SweepResult measurement_sweep(StateVector state, double p, Axis axis, int step, Rng& rng, int sites = -1)
{
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("measurement probability must lie in [0, 1]");
    }
    if (sites < 0) {
        sites = state.qubits();
    }
    SweepResult out{std::move(state), {}};
    for (int site = 0; site < sites; ++site) {
        if (!bernoulli(rng, p)) {
            continue;
        }
        auto m = measure_site(std::move(out.state), site, axis, rng);
        out.state = std::move(m.state);
        out.record.events.push_back({step, site, axis, m.outcome});
    }
    return out;
}

} // namespace mipt
