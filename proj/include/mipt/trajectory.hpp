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
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <new>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "mipt/hamiltonian.hpp"
#include "mipt/measurement.hpp"
#include "mipt/observables.hpp"
#include "mipt/rng.hpp"
#include "mipt/stats.hpp"

namespace mipt {

enum class InitialState { haar_product, z_product, specified };

inline const char* to_string(InitialState s) noexcept
{
    switch (s) {
    case InitialState::haar_product:
        return "haar_product";
    case InitialState::z_product:
        return "z_product";
    case InitialState::specified:
        return "specified";
    }
    return "?";
}

inline const char* to_string(Boundary b) noexcept
{
    return b == Boundary::periodic ? "periodic" : "open";
}

struct ObservableSet {
    bool half_chain_entropy = true;
    bool entropy_vs_l = false;         // S(l) averaged over all contiguous segments, l = 1..N/2
    std::vector<double> renyi_indices; // extra S_n(l) profiles; needs entropy_vs_l
    bool tripartite = true;
    bool diagonal_entropy = true;
};

/// Full parameterization of one monitored-dynamics experiment.
struct TrajectoryConfig {
    int chain_length = 8;
    double disorder_strength = 10.0; // W
    double coupling = 1.0;           // J
    double dt = 1.0;
    double p = 0.0;
    Axis basis = Axis::Z;
    Boundary boundary = Boundary::periodic;
    double t_max = 100.0;
    ObservableSet observables;
    InitialState initial_state = InitialState::haar_product;
    std::optional<Eigen::VectorXcd> specified_state;
    // Observables are sampled at step 0, the final step, every `stride`
    // steps (0 disables) and `points_per_decade` log-spaced steps (0 disables).
    int stride = 1;
    int points_per_decade = 0;
    std::uint64_t master_seed = 1;
    int n_disorder = 1;
    int n_traj_per_disorder = 1;

    [[nodiscard]] int steps() const { return static_cast<int>(std::llround(t_max / dt)); }

    void validate() const
    {
        if (chain_length < 2 || chain_length > kMaxChainLength) {
            throw std::invalid_argument("chain length outside [2, 16]");
        }
        if (!(dt > 0.0)) {
            throw std::invalid_argument("dt must be positive");
        }
        if (!(p >= 0.0 && p <= 1.0)) {
            throw std::invalid_argument("p must lie in [0, 1]");
        }
        if (!(coupling > 0.0) || !(disorder_strength >= 0.0)) {
            throw std::invalid_argument("need J > 0 and W >= 0");
        }
        if (!(t_max >= 0.0) || std::abs(t_max / dt - std::round(t_max / dt)) > 1e-9) {
            throw std::invalid_argument("t_max must be a non-negative multiple of dt");
        }
        if (stride < 0 || points_per_decade < 0) {
            throw std::invalid_argument("sampling stride and density must be non-negative");
        }
        if (n_disorder < 1 || n_traj_per_disorder < 1) {
            throw std::invalid_argument("ensemble needs n_disorder >= 1 and n_traj_per_disorder >= 1");
        }
        if (!observables.renyi_indices.empty() && !observables.entropy_vs_l) {
            throw std::invalid_argument("Renyi profiles require entropy_vs_l");
        }
        for (double n : observables.renyi_indices) {
            if (!(n > 0.0)) {
                throw std::invalid_argument("Renyi indices must be positive");
            }
        }
        if (observables.tripartite && chain_length < 4) {
            throw std::invalid_argument("tripartite information needs N >= 4");
        }
        if (initial_state == InitialState::specified &&
            (!specified_state || specified_state->size() != (Eigen::Index{1} << chain_length))) {
            throw std::invalid_argument("specified initial state missing or of wrong dimension");
        }
        if (chain_length == 2 && boundary == Boundary::periodic) {
            throw std::invalid_argument("periodic boundary is ambiguous for N = 2");
        }
    }
};

/// Steps at which observables are recorded, ascending.
inline std::vector<int> sample_steps(const TrajectoryConfig& c)
{
    const int last = c.steps();
    std::set<int> s{0, last};
    if (c.stride > 0) {
        for (int k = c.stride; k < last; k += c.stride) {
            s.insert(k);
        }
    }
    if (c.points_per_decade > 0 && last > 0) {
        const double decades = std::log10(static_cast<double>(last));
        const int count = static_cast<int>(std::ceil(decades * c.points_per_decade));
        for (int k = 0; k <= count; ++k) {
            const auto step =
                static_cast<int>(std::llround(std::pow(10.0, static_cast<double>(k) / c.points_per_decade)));
            if (step <= last) {
                s.insert(step);
            }
        }
    }
    return {s.begin(), s.end()};
}

/// Shortest text that parses back to the same double.
inline std::string format_shortest(double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string format_renyi_index(double n)
{
    return std::isinf(n) ? std::string("inf") : format_shortest(n);
}

/// Column name of the S_n(l) profile entry; n = 1 is the von Neumann entropy.
inline std::string profile_name(double n, int l)
{
    if (n == 1.0) {
        return "S_l" + std::to_string(l);
    }
    return "S" + format_renyi_index(n) + "_l" + std::to_string(l);
}

/// Evaluates the configured observables on a chain state. Names are fixed at
/// construction and match the order of the values returned by evaluate().
class ObservableEvaluator {
public:
    explicit ObservableEvaluator(const TrajectoryConfig& c)
        : n_(c.chain_length), set_(c.observables), boundary_(c.boundary)
    {
        if (set_.half_chain_entropy) {
            names_.emplace_back("S_half");
        }
        if (set_.tripartite) {
            names_.emplace_back("I3");
            quarters_.emplace(QuarterPartition::make(n_));
        }
        if (set_.diagonal_entropy) {
            names_.emplace_back("S_diag");
        }
        if (set_.entropy_vs_l) {
            indices_.push_back(1.0);
            for (double r : set_.renyi_indices) {
                if (r != 1.0) {
                    indices_.push_back(r);
                }
            }
            for (double r : indices_) {
                for (int l = 1; l <= n_ / 2; ++l) {
                    names_.push_back(profile_name(r, l));
                }
            }
        }
    }

    [[nodiscard]] const std::vector<std::string>& names() const noexcept { return names_; }
    [[nodiscard]] const std::vector<double>& profile_indices() const noexcept { return indices_; }

    [[nodiscard]] std::vector<double> evaluate(const StateVector& state, const EigenSystem& eig) const
    {
        std::vector<double> out;
        out.reserve(names_.size());
        if (set_.half_chain_entropy) {
            out.push_back(entanglement_entropy(state, contiguous_segment(n_, 0, n_ / 2)));
        }
        if (set_.tripartite) {
            out.push_back(tripartite_information(state, *quarters_));
        }
        if (set_.diagonal_entropy) {
            out.push_back(diagonal_entropy(state, eig));
        }
        if (set_.entropy_vs_l) {
            const int half = n_ / 2;
            std::vector<double> acc(indices_.size() * static_cast<std::size_t>(half), 0.0);
            for (int l = 1; l <= half; ++l) {
                const int starts = boundary_ == Boundary::periodic ? n_ : n_ - l + 1;
                for (int s = 0; s < starts; ++s) {
                    const auto spectrum = entanglement_spectrum(state, contiguous_segment(n_, s, l));
                    for (std::size_t r = 0; r < indices_.size(); ++r) {
                        acc[r * half + static_cast<std::size_t>(l - 1)] +=
                            detail::entropy_from_spectrum(spectrum, indices_[r]) / starts;
                    }
                }
            }
            out.insert(out.end(), acc.begin(), acc.end());
        }
        return out;
    }

private:
    int n_;
    ObservableSet set_;
    Boundary boundary_;
    std::optional<QuarterPartition> quarters_;
    std::vector<double> indices_;
    std::vector<std::string> names_;
};

/// Product state: haar_product draws each site uniformly on the Bloch sphere,
/// z_product a uniformly random computational basis state.
inline StateVector random_product_state(int chain_length, InitialState kind, Rng& rng)
{
    if (kind == InitialState::z_product) {
        const BasisIndex mask = (BasisIndex{1} << chain_length) - 1;
        return StateVector::basis_state(chain_length, rng() & mask);
    }
    if (kind != InitialState::haar_product) {
        throw std::invalid_argument("random_product_state supports haar_product and z_product");
    }
    Eigen::VectorXcd amps(1);
    amps[0] = 1.0;
    for (int site = 0; site < chain_length; ++site) {
        const double cos_theta = uniform(rng, -1.0, 1.0);
        const double phi = uniform(rng, 0.0, 2.0 * std::numbers::pi);
        const double up = std::sqrt(0.5 * (1.0 + cos_theta));
        const Complex dn = std::polar(std::sqrt(std::max(0.0, 0.5 * (1.0 - cos_theta))), phi);
        // Site `site` becomes the new highest bit.
        Eigen::VectorXcd next(2 * amps.size());
        next.head(amps.size()) = dn * amps;
        next.tail(amps.size()) = up * amps;
        amps = std::move(next);
    }
    return StateVector(chain_length, std::move(amps));
}

/// Raw per-trajectory output: values[obs][sample].
struct TrajectoryOutput {
    std::vector<double> times;
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;
    MeasurementRecord record;
    double max_norm_drift = 0.0;
};

/// Stepper for the evolve-then-measure protocol; shared with the ancilla
/// protocol, which measures only the chain sites of a larger register.
class MonitoredDynamics {
public:
    MonitoredDynamics(const TrajectoryConfig& c, const EigenSystem& eig, std::uint64_t seed)
        : config_(c), eig_(eig), rng_(seed)
    {
        if (eig.chain_length() != c.chain_length) {
            throw std::invalid_argument("eigensystem does not match the configured chain length");
        }
    }

    StateVector initial_state()
    {
        if (config_.initial_state == InitialState::specified) {
            StateVector s(config_.chain_length, *config_.specified_state);
            s.normalize();
            return s;
        }
        return random_product_state(config_.chain_length, config_.initial_state, rng_);
    }

    /// One unitary step followed by one measurement sweep over the chain.
    StateVector step(StateVector state, int step_index)
    {
        return measure(evolve(std::move(state), eig_, config_.dt), step_index);
    }

    /// The measurement half of step(), for callers that evolve states in a
    /// batch. Tracks the norm drift left by the preceding unitary.
    StateVector measure(StateVector state, int step_index)
    {
        max_norm_drift_ = std::max(max_norm_drift_, std::abs(state.norm() - 1.0));
        auto sweep =
            measurement_sweep(std::move(state), config_.p, config_.basis, step_index, rng_, config_.chain_length);
        record_.append(sweep.record);
        return std::move(sweep.state);
    }

    [[nodiscard]] Rng& rng() noexcept { return rng_; }
    [[nodiscard]] MeasurementRecord& record() noexcept { return record_; }
    [[nodiscard]] double max_norm_drift() const noexcept { return max_norm_drift_; }

private:
    const TrajectoryConfig& config_;
    const EigenSystem& eig_;
    Rng rng_;
    MeasurementRecord record_;
    double max_norm_drift_ = 0.0;
};

/// Trajectories sharing one disorder realization, advanced in lockstep so
/// each unitary step is a single batched product. Output i is fully
/// determined by (realization, seeds[i]); the random streams never mix.
/// Observables are recorded after the measurement sweep of each sampled step.
inline std::vector<TrajectoryOutput> run_trajectory_batch(const TrajectoryConfig& config, const EigenSystem& eig,
                                                          std::span<const std::uint64_t> seeds)
{
    config.validate();
    const ObservableEvaluator evaluator(config);
    const auto steps = sample_steps(config);
    const std::size_t k = seeds.size();

    std::vector<MonitoredDynamics> dyn;
    std::vector<StateVector> states;
    std::vector<TrajectoryOutput> out(k);
    dyn.reserve(k);
    states.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        dyn.emplace_back(config, eig, seeds[i]);
        states.push_back(dyn[i].initial_state());
        out[i].names = evaluator.names();
        out[i].values.assign(out[i].names.size(), {});
        for (auto& v : out[i].values) {
            v.reserve(steps.size());
        }
    }
    auto record_samples = [&](int step) {
        for (std::size_t i = 0; i < k; ++i) {
            out[i].times.push_back(step * config.dt);
            const auto vals = evaluator.evaluate(states[i], eig);
            for (std::size_t o = 0; o < vals.size(); ++o) {
                out[i].values[o].push_back(vals[o]);
            }
        }
    };

    std::size_t next = 0;
    if (steps[next] == 0) {
        record_samples(0);
        ++next;
    }
    for (int step = 1; step <= config.steps(); ++step) {
        evolve_batch(states, eig, config.dt);
        for (std::size_t i = 0; i < k; ++i) {
            states[i] = dyn[i].measure(std::move(states[i]), step);
        }
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

/// One quantum trajectory, fully determined by (realization, traj_seed).
inline TrajectoryOutput run_trajectory(const TrajectoryConfig& config, const EigenSystem& eig, std::uint64_t traj_seed)
{
    const std::uint64_t seeds[] = {traj_seed};
    return std::move(run_trajectory_batch(config, eig, seeds).front());
}

/// Convenience overload checking the realization against the configuration.
inline TrajectoryOutput run_trajectory(const TrajectoryConfig& config, const DisorderRealization& realization,
                                       const EigenSystem& eig, std::uint64_t traj_seed)
{
    if (static_cast<int>(realization.fields.size()) != config.chain_length) {
        throw std::invalid_argument("realization does not match the configured chain length");
    }
    return run_trajectory(config, eig, traj_seed);
}

struct ObservableSeries {
    std::string name;
    std::vector<double> mean;
    std::vector<double> sem;
    std::size_t n_samples = 0;

    bool operator==(const ObservableSeries&) const = default;
};

/// Ensemble-averaged time series plus the configuration that produced it.
struct TimeSeriesRecord {
    std::vector<double> times;
    std::vector<ObservableSeries> observables;
    TrajectoryConfig config;
    double max_norm_drift = 0.0;

    [[nodiscard]] const ObservableSeries& at(const std::string& name) const
    {
        for (const auto& o : observables) {
            if (o.name == name) {
                return o;
            }
        }
        throw std::out_of_range("no observable named '" + name + "' in record");
    }

    [[nodiscard]] bool has(const std::string& name) const
    {
        return std::any_of(observables.begin(), observables.end(), [&](const auto& o) { return o.name == name; });
    }
};

/// Pools per-sample values in a fixed (disorder, trajectory) order.
inline TimeSeriesRecord reduce_samples(const std::vector<double>& times, const std::vector<std::string>& names,
                                       const std::vector<TrajectoryOutput>& samples, const TrajectoryConfig& config)
{
    TimeSeriesRecord rec;
    rec.times = times;
    rec.config = config;
    for (std::size_t o = 0; o < names.size(); ++o) {
        ObservableSeries series{names[o], {}, {}, samples.size()};
        for (std::size_t t = 0; t < times.size(); ++t) {
            RunningStats acc;
            for (const auto& s : samples) {
                acc.add(s.values[o][t]);
            }
            series.mean.push_back(acc.mean);
            series.sem.push_back(acc.sem());
        }
        rec.observables.push_back(std::move(series));
    }
    for (const auto& s : samples) {
        rec.max_norm_drift = std::max(rec.max_norm_drift, s.max_norm_drift);
    }
    return rec;
}

struct ExecutionOptions {
    int threads = 1;
};

inline int default_thread_count()
{
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs tasks [0, count) on up to `threads` workers. The first exception is
/// rethrown after all workers stop.
template <typename Task> void parallel_for(std::size_t count, int threads, Task&& task)
{
    const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(threads, static_cast<int>(count))));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            task(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count && !failed; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    const std::lock_guard lock(error_mutex);
                    if (!error) {
                        error = std::current_exception();
                    }
                    failed = true;
                }
            }
        });
    }
    pool.clear();
    if (error) {
        std::rethrow_exception(error);
    }
}

/// Per-disorder eigensystem cache; each realization is diagonalized once and
/// released after its last user finishes.
class EigenCache {
public:
    EigenCache(const TrajectoryConfig& c, int users_per_realization)
        : config_(c), users_(users_per_realization), slots_(static_cast<std::size_t>(c.n_disorder))
    {
    }

    std::shared_ptr<const EigenSystem> acquire(std::size_t d)
    {
        auto& slot = slots_[d];
        std::call_once(slot.once, [&] {
            const auto realization = sample_disorder(config_.disorder_strength, config_.coupling, config_.chain_length,
                                                     disorder_seed(config_.master_seed, d));
            auto eig = std::make_shared<const EigenSystem>(
                diagonalize(build_hamiltonian(config_.chain_length, realization, config_.boundary)));
            const std::lock_guard lock(slot.mutex);
            slot.eig = std::move(eig);
        });
        const std::lock_guard lock(slot.mutex);
        return slot.eig;
    }

    void release(std::size_t d)
    {
        auto& slot = slots_[d];
        const std::lock_guard lock(slot.mutex);
        if (++slot.finished == users_) {
            slot.eig.reset();
        }
    }

private:
    struct Slot {
        std::once_flag once;
        std::mutex mutex;
        std::shared_ptr<const EigenSystem> eig;
        int finished = 0;
    };
    const TrajectoryConfig& config_;
    int users_;
    std::vector<Slot> slots_;
};

/// Trajectories per lockstep batch. Fixed so that results depend only on the
/// configuration; batching changes the rounding of the unitary step.
inline constexpr int kTrajectoryBatch = 32;

/// Runs n_disorder x n_traj_per_disorder trajectories and pools them. `fn`
/// maps (eigensystem, seeds) to one output per seed. The result depends only
/// on the configuration, never on the thread count.
template <typename BatchFn>
TimeSeriesRecord run_ensemble_with(const TrajectoryConfig& config, const ExecutionOptions& exec, BatchFn&& fn)
{
    config.validate();
    const auto n_dis = static_cast<std::size_t>(config.n_disorder);
    const auto n_traj = static_cast<std::size_t>(config.n_traj_per_disorder);
    const auto batch = static_cast<std::size_t>(kTrajectoryBatch);
    const std::size_t chunks = (n_traj + batch - 1) / batch;
    try {
        std::vector<TrajectoryOutput> samples(n_dis * n_traj);
        EigenCache cache(config, static_cast<int>(chunks));
        parallel_for(n_dis * chunks, exec.threads, [&](std::size_t task) {
            const std::size_t d = task / chunks;
            const std::size_t first = (task % chunks) * batch;
            const std::size_t last = std::min(n_traj, first + batch);
            std::vector<std::uint64_t> seeds;
            for (std::size_t j = first; j < last; ++j) {
                seeds.push_back(trajectory_seed(config.master_seed, d, j));
            }
            const auto eig = cache.acquire(d);
            auto outs = fn(*eig, std::span<const std::uint64_t>(seeds));
            for (std::size_t j = first; j < last; ++j) {
                auto& out = outs[j - first];
                out.record.events.clear();
                out.record.events.shrink_to_fit();
                samples[d * n_traj + j] = std::move(out);
            }
            cache.release(d);
        });
        const auto times = samples.front().times;
        const auto names = samples.front().names;
        return reduce_samples(times, names, samples, config);
    } catch (const std::bad_alloc&) {
        throw std::runtime_error("resource exhaustion while running ensemble; partial results discarded");
    }
}

inline TimeSeriesRecord run_ensemble(const TrajectoryConfig& config, const ExecutionOptions& exec = {})
{
    return run_ensemble_with(config, exec, [&](const EigenSystem& eig, std::span<const std::uint64_t> seeds) {
        return run_trajectory_batch(config, eig, seeds);
    });
}

struct SteadyStateValue {
    double value = 0.0;
    double sem = 0.0;          // max(ensemble_sem, temporal_sem)
    double ensemble_sem = 0.0; // mean per-time ensemble sem over the window
    double temporal_sem = 0.0; // std of the windowed means / sqrt(count)
    double slope = 0.0;        // least-squares slope over the window
    bool saturation_warning = false;
};

struct SteadyStateEstimate {
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<std::pair<std::string, SteadyStateValue>> values;

    [[nodiscard]] const SteadyStateValue& at(const std::string& name) const
    {
        for (const auto& [n, v] : values) {
            if (n == name) {
                return v;
            }
        }
        throw std::out_of_range("no steady-state value for '" + name + "'");
    }
};

/// Time average over the final `window_fraction` of the record. The
/// saturation warning fires when the fitted drift across the window exceeds
/// twice the pooled sem.
inline SteadyStateValue steady_state_value(const std::vector<double>& times, const std::vector<double>& mean,
                                           const std::vector<double>& sem, double t_start)
{
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] >= t_start - 1e-12) {
            idx.push_back(i);
        }
    }
    if (idx.size() < 4) {
        throw std::invalid_argument("steady-state window holds fewer than 4 samples");
    }
    const double k = static_cast<double>(idx.size());
    RunningStats vals;
    double tbar = 0.0;
    double ens = 0.0;
    for (auto i : idx) {
        vals.add(mean[i]);
        tbar += times[i] / k;
        ens += sem[i] / k;
    }
    double sxy = 0.0;
    double sxx = 0.0;
    for (auto i : idx) {
        sxy += (times[i] - tbar) * (mean[i] - vals.mean);
        sxx += (times[i] - tbar) * (times[i] - tbar);
    }
    SteadyStateValue v;
    v.value = vals.mean;
    v.ensemble_sem = ens;
    v.temporal_sem = std::sqrt(vals.variance() / k);
    v.sem = std::max(v.ensemble_sem, v.temporal_sem);
    v.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    const double drift = std::abs(v.slope) * (times[idx.back()] - times[idx.front()]);
    v.saturation_warning = drift > 2.0 * v.sem && drift > 1e-12 * std::max(1.0, std::abs(v.value));
    return v;
}

inline SteadyStateEstimate steady_state(const TimeSeriesRecord& record, double window_fraction = 0.25)
{
    if (!(window_fraction > 0.0 && window_fraction <= 0.5)) {
        throw std::invalid_argument("window fraction must lie in (0, 0.5]");
    }
    if (record.times.empty()) {
        throw std::invalid_argument("empty time series");
    }
    SteadyStateEstimate est;
    est.t_end = record.times.back();
    const double t0 = record.times.front();
    est.t_start = est.t_end - window_fraction * (est.t_end - t0);
    for (const auto& o : record.observables) {
        est.values.emplace_back(o.name, steady_state_value(record.times, o.mean, o.sem, est.t_start));
    }
    return est;
}

} // namespace mipt
