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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "mipt/trajectory.hpp"
#include "test_support.hpp"

namespace mipt {
namespace {

TrajectoryConfig small_config(int n, double p, Axis basis, double t_max)
{
    TrajectoryConfig c;
    c.chain_length = n;
    c.p = p;
    c.basis = basis;
    c.t_max = t_max;
    c.master_seed = 20260101;
    return c;
}

EigenSystem eigensystem_for(const TrajectoryConfig& c, std::size_t d = 0)
{
    const auto r = sample_disorder(c.disorder_strength, c.coupling, c.chain_length, disorder_seed(c.master_seed, d));
    return diagonalize(build_hamiltonian(c.chain_length, r, c.boundary));
}

double max_product_entropy(const StateVector& s)
{
    double worst = 0.0;
    const int n = s.qubits();
    for (int start = 0; start < n; ++start) {
        for (int len = 1; len < n; ++len) {
            worst = std::max(worst, entanglement_entropy(s, contiguous_segment(n, start, len)));
        }
    }
    return worst;
}

TEST(RandomProductState, ZProductIsUnentangledAndInOneSector)
{
    Rng rng(11);
    for (int k = 0; k < 20; ++k) {
        const auto s = random_product_state(8, InitialState::z_product, rng);
        EXPECT_NEAR(s.norm(), 1.0, 1e-14);
        EXPECT_LT(max_product_entropy(s), 1e-12);
        std::set<int> sectors;
        for (Eigen::Index b = 0; b < s.dimension(); ++b) {
            if (std::norm(s[b]) > 0.0) {
                sectors.insert(sector_of(static_cast<BasisIndex>(b), 8));
            }
        }
        EXPECT_EQ(sectors.size(), 1U);
    }
}

TEST(RandomProductState, HaarProductIsUnentangled)
{
    Rng rng(12);
    for (int k = 0; k < 20; ++k) {
        const auto s = random_product_state(7, InitialState::haar_product, rng);
        EXPECT_NEAR(s.norm(), 1.0, 1e-12);
        EXPECT_LT(max_product_entropy(s), 1e-10);
    }
}

TEST(RandomProductState, HaarProductIsIsotropicOnAverage)
{
    Rng rng(13);
    constexpr int kDraws = 10000;
    double z0 = 0.0;
    double x0 = 0.0;
    double z2 = 0.0;
    for (int k = 0; k < kDraws; ++k) {
        const auto s = random_product_state(3, InitialState::haar_product, rng);
        for (Eigen::Index b = 0; b < s.dimension(); ++b) {
            z0 += std::norm(s[b]) * ((b & 1) ? 1.0 : -1.0);
            z2 += std::norm(s[b]) * ((b & 4) ? 1.0 : -1.0);
            if ((b & 1) == 0) {
                x0 += 2.0 * std::real(std::conj(s[b]) * s[b | 1]);
            }
        }
    }
    EXPECT_NEAR(z0 / kDraws, 0.0, 0.02);
    EXPECT_NEAR(z2 / kDraws, 0.0, 0.02);
    EXPECT_NEAR(x0 / kDraws, 0.0, 0.02);
}

TEST(RandomProductState, RejectsSpecifiedKind)
{
    Rng rng(1);
    EXPECT_THROW(random_product_state(4, InitialState::specified, rng), std::invalid_argument);
}

TEST(TrajectoryConfig, Validation)
{
    auto c = small_config(8, 0.1, Axis::Z, 10);
    EXPECT_NO_THROW(c.validate());
    auto bad = c;
    bad.dt = 0.0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = c;
    bad.p = 1.5;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = c;
    bad.t_max = 10.5;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = c;
    bad.n_traj_per_disorder = 0;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = c;
    bad.observables.renyi_indices = {2.0};
    EXPECT_THROW(bad.validate(), std::invalid_argument);
    bad = c;
    bad.initial_state = InitialState::specified;
    EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(SampleSteps, IncludesEndpointsStrideAndLogGrid)
{
    auto c = small_config(8, 0.0, Axis::Z, 100);
    c.stride = 25;
    EXPECT_EQ(sample_steps(c), (std::vector<int>{0, 25, 50, 75, 100}));
    c.stride = 0;
    c.points_per_decade = 1;
    EXPECT_EQ(sample_steps(c), (std::vector<int>{0, 1, 10, 100}));
    c.stride = 1;
    EXPECT_EQ(sample_steps(c).size(), 101U);
}

TEST(ObservableEvaluator, NamesFollowConfiguration)
{
    auto c = small_config(8, 0.0, Axis::Z, 1);
    c.observables.entropy_vs_l = true;
    c.observables.renyi_indices = {2.0, kRenyiInfinity};
    const ObservableEvaluator ev(c);
    const std::vector<std::string> expected{"S_half", "I3",      "S_diag",  "S_l1",    "S_l2",
                                            "S_l3",   "S_l4",    "S2_l1",   "S2_l2",   "S2_l3",
                                            "S2_l4",  "Sinf_l1", "Sinf_l2", "Sinf_l3", "Sinf_l4"};
    EXPECT_EQ(ev.names(), expected);
}

TEST(ObservableEvaluator, ProfileAveragesOverTranslations)
{
    auto c = small_config(6, 0.0, Axis::Z, 1);
    c.observables = {};
    c.observables.half_chain_entropy = false;
    c.observables.tripartite = false;
    c.observables.diagonal_entropy = false;
    c.observables.entropy_vs_l = true;
    c.observables.renyi_indices = {2.0};
    const auto eig = eigensystem_for(c);
    Rng rng(5);
    const auto s = testing::random_state(6, rng);
    const auto vals = ObservableEvaluator(c).evaluate(s, eig);
    ASSERT_EQ(vals.size(), 6U);
    for (int l = 1; l <= 3; ++l) {
        double vn = 0.0;
        double r2 = 0.0;
        for (int start = 0; start < 6; ++start) {
            const Subsystem a = contiguous_segment(6, start, l);
            vn += entanglement_entropy(s, a) / 6.0;
            r2 += entanglement_entropy(s, a, 2.0) / 6.0;
        }
        EXPECT_NEAR(vals[static_cast<std::size_t>(l - 1)], vn, 1e-12);
        EXPECT_NEAR(vals[static_cast<std::size_t>(l + 2)], r2, 1e-12);
    }
    c.boundary = Boundary::open;
    const auto open_eig = eigensystem_for(c);
    const auto open_vals = ObservableEvaluator(c).evaluate(s, open_eig);
    double vn2 = 0.0;
    for (int start = 0; start <= 4; ++start) {
        vn2 += entanglement_entropy(s, contiguous_segment(6, start, 2)) / 5.0;
    }
    EXPECT_NEAR(open_vals[1], vn2, 1e-12);
}

TEST(RunTrajectory, UnmeasuredDiagonalEntropyIsConstant)
{
    auto c = small_config(8, 0.0, Axis::Z, 100);
    const auto eig = eigensystem_for(c);
    const auto out = run_trajectory(c, eig, 99);
    const auto& names = out.names;
    const auto it = std::find(names.begin(), names.end(), "S_diag");
    ASSERT_NE(it, names.end());
    const auto& sd = out.values[static_cast<std::size_t>(it - names.begin())];
    ASSERT_EQ(sd.size(), 101U);
    for (double v : sd) {
        EXPECT_NEAR(v, sd.front(), 1e-8);
    }
    EXPECT_GT(sd.front(), 1.0);
    EXPECT_TRUE(out.record.events.empty());
}

TEST(RunTrajectory, FullZMeasurementLeavesNoHalfChainEntropy)
{
    auto c = small_config(8, 1.0, Axis::Z, 30);
    const auto eig = eigensystem_for(c);
    const auto out = run_trajectory(c, eig, 4);
    ASSERT_EQ(out.names.front(), "S_half");
    for (std::size_t t = 1; t < out.times.size(); ++t) {
        EXPECT_LT(out.values[0][t], 1e-10);
    }
    EXPECT_EQ(out.record.events.size(), 30U * 8U);
}

TEST(RunTrajectory, SameSeedSameTrajectory)
{
    auto c = small_config(6, 0.3, Axis::X, 40);
    const auto eig = eigensystem_for(c);
    const auto a = run_trajectory(c, eig, 17);
    const auto b = run_trajectory(c, eig, 17);
    const auto other = run_trajectory(c, eig, 18);
    EXPECT_EQ(a.values, b.values);
    EXPECT_EQ(a.record.events, b.record.events);
    EXPECT_NE(a.record.events, other.record.events);
}

TEST(RunTrajectory, BatchMatchesIndividualRuns)
{
    auto c = small_config(8, 0.2, Axis::X, 50);
    const auto eig = eigensystem_for(c);
    const std::vector<std::uint64_t> seeds{3, 1, 4, 1, 5};
    const auto batch = run_trajectory_batch(c, eig, seeds);
    ASSERT_EQ(batch.size(), seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const auto single = run_trajectory(c, eig, seeds[i]);
        EXPECT_EQ(batch[i].record.events, single.record.events);
        for (std::size_t o = 0; o < single.values.size(); ++o) {
            for (std::size_t t = 0; t < single.times.size(); ++t) {
                EXPECT_NEAR(batch[i].values[o][t], single.values[o][t], 1e-9);
            }
        }
    }
    EXPECT_EQ(batch[1].values, batch[3].values);
}

TEST(RunTrajectory, UnmeasuredRunMatchesDirectEvolution)
{
    auto c = small_config(8, 0.0, Axis::Z, 60);
    c.observables.entropy_vs_l = true;
    const auto eig = eigensystem_for(c);
    const std::uint64_t seed = 31;
    const auto out = run_trajectory(c, eig, seed);

    Rng rng(seed);
    StateVector s = random_product_state(8, InitialState::haar_product, rng);
    const ObservableEvaluator ev(c);
    for (int k = 0; k <= 60; ++k) {
        if (k > 0) {
            s = evolve(std::move(s), eig, c.dt);
        }
        const auto vals = ev.evaluate(s, eig);
        for (std::size_t o = 0; o < vals.size(); ++o) {
            EXPECT_EQ(out.values[o][static_cast<std::size_t>(k)], vals[o]) << out.names[o] << " at t=" << k;
        }
    }
}

TEST(RunTrajectory, NormDriftOverThousandMonitoredSteps)
{
    auto c = small_config(10, 0.05, Axis::X, 1000);
    c.observables = {};
    c.observables.tripartite = false;
    c.observables.diagonal_entropy = false;
    c.stride = 0;
    const auto eig = eigensystem_for(c);
    const auto out = run_trajectory(c, eig, 8);
    EXPECT_LT(out.max_norm_drift, 1e-7);
    EXPECT_EQ(out.times.size(), 2U);
}

TEST(RunTrajectory, SpecifiedInitialState)
{
    auto c = small_config(6, 0.0, Axis::Z, 5);
    c.initial_state = InitialState::specified;
    Rng rng(2);
    c.specified_state = 3.0 * testing::random_state(6, rng).amplitudes();
    const auto eig = eigensystem_for(c);
    const auto out = run_trajectory(c, eig, 1);
    StateVector ref(6, *c.specified_state);
    ref.normalize();
    EXPECT_NEAR(out.values[0][0], entanglement_entropy(ref, contiguous_segment(6, 0, 3)), 1e-12);
}

TEST(RunTrajectory, RejectsMismatchedEigensystem)
{
    const auto c = small_config(6, 0.0, Axis::Z, 5);
    const auto eig = eigensystem_for(small_config(8, 0.0, Axis::Z, 5));
    EXPECT_THROW(run_trajectory(c, eig, 1), std::invalid_argument);
    const auto r = sample_disorder(10.0, 1.0, 8, 1);
    EXPECT_THROW(run_trajectory(c, r, eig, 1), std::invalid_argument);
}

TEST(SeedSplitting, StreamsAreDistinct)
{
    std::set<std::uint64_t> seen;
    for (std::size_t d = 0; d < 50; ++d) {
        seen.insert(disorder_seed(7, d));
        for (std::size_t j = 0; j < 50; ++j) {
            seen.insert(trajectory_seed(7, d, j));
        }
    }
    EXPECT_EQ(seen.size(), 50U + 50U * 50U);
    EXPECT_NE(trajectory_seed(7, 0, 1), trajectory_seed(8, 0, 1));
}

TEST(RunEnsemble, SingleSampleHasZeroSem)
{
    auto c = small_config(6, 0.2, Axis::Z, 20);
    const auto rec = run_ensemble(c);
    const auto single = run_trajectory(c, eigensystem_for(c), trajectory_seed(c.master_seed, 0, 0));
    ASSERT_EQ(rec.times, single.times);
    for (std::size_t o = 0; o < rec.observables.size(); ++o) {
        EXPECT_EQ(rec.observables[o].n_samples, 1U);
        EXPECT_EQ(rec.observables[o].mean, single.values[o]);
        for (double s : rec.observables[o].sem) {
            EXPECT_EQ(s, 0.0);
        }
    }
}

TEST(RunEnsemble, PoolsAllSamplesInIndexOrder)
{
    auto c = small_config(6, 0.3, Axis::X, 12);
    c.n_disorder = 3;
    c.n_traj_per_disorder = 4;
    const auto rec = run_ensemble(c);
    std::vector<std::vector<double>> half;
    for (std::size_t d = 0; d < 3; ++d) {
        const auto eig = eigensystem_for(c, d);
        std::vector<std::uint64_t> seeds;
        for (std::size_t j = 0; j < 4; ++j) {
            seeds.push_back(trajectory_seed(c.master_seed, d, j));
        }
        for (const auto& out : run_trajectory_batch(c, eig, seeds)) {
            half.push_back(out.values[0]);
        }
    }
    const auto& s = rec.at("S_half");
    EXPECT_EQ(s.n_samples, 12U);
    for (std::size_t t = 0; t < rec.times.size(); ++t) {
        RunningStats acc;
        for (const auto& h : half) {
            acc.add(h[t]);
        }
        EXPECT_EQ(s.mean[t], acc.mean);
        EXPECT_EQ(s.sem[t], acc.sem());
    }
}

TEST(RunEnsemble, DeterministicAcrossRunsAndThreadCounts)
{
    auto c = small_config(6, 0.2, Axis::X, 15);
    c.n_disorder = 3;
    c.n_traj_per_disorder = 40;
    const auto a = run_ensemble(c, {.threads = 1});
    const auto b = run_ensemble(c, {.threads = 1});
    const auto d = run_ensemble(c, {.threads = 4});
    EXPECT_EQ(a.observables, b.observables);
    EXPECT_EQ(a.observables, d.observables);
    EXPECT_EQ(a.times, d.times);
    c.master_seed += 1;
    EXPECT_NE(run_ensemble(c).observables, a.observables);
}

TEST(RunEnsemble, ZMeasurementsDrainDiagonalEntropyToProductFloor)
{
    auto c = small_config(10, 0.1, Axis::Z, 400);
    c.n_disorder = 4;
    c.n_traj_per_disorder = 8;
    c.stride = 20;
    c.observables.tripartite = false;
    c.observables.half_chain_entropy = false;
    const auto rec = run_ensemble(c);
    const auto& sd = rec.at("S_diag");

    // Oracle: Z measurements leave near-computational-basis states, so the
    // plateau is the diagonal entropy of Z product states in the same
    // realizations.
    double floor = 0.0;
    int count = 0;
    Rng rng(77);
    for (std::size_t d = 0; d < 4; ++d) {
        const auto eig = eigensystem_for(c, d);
        for (int k = 0; k < 200; ++k) {
            floor += diagonal_entropy(random_product_state(10, InitialState::z_product, rng), eig);
            ++count;
        }
    }
    floor /= count;
    EXPECT_GT(sd.mean.front(), 4.0);
    EXPECT_NEAR(sd.mean.back(), floor, 0.25 * floor);
    EXPECT_LT(sd.mean.back(), 0.2 * sd.mean.front());
}

TEST(ParallelFor, PropagatesFirstException)
{
    EXPECT_THROW(parallel_for(10, 3,
                              [](std::size_t i) {
                                  if (i == 4) {
                                      throw std::runtime_error("task failed");
                                  }
                              }),
                 std::runtime_error);
    std::vector<int> hit(100, 0);
    parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
    EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 100);
}

TimeSeriesRecord synthetic(const std::vector<double>& t, const std::vector<double>& y, double sem)
{
    TimeSeriesRecord rec;
    rec.times = t;
    rec.observables.push_back({"y", y, std::vector<double>(y.size(), sem), 10});
    return rec;
}

TEST(SteadyState, ConstantSeries)
{
    std::vector<double> t(41);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<double>(i);
    }
    const auto est = steady_state(synthetic(t, std::vector<double>(41, 1.75), 0.01));
    EXPECT_DOUBLE_EQ(est.t_end, 40.0);
    EXPECT_DOUBLE_EQ(est.t_start, 30.0);
    const auto& v = est.at("y");
    EXPECT_DOUBLE_EQ(v.value, 1.75);
    EXPECT_EQ(v.temporal_sem, 0.0);
    EXPECT_DOUBLE_EQ(v.sem, 0.01);
    EXPECT_FALSE(v.saturation_warning);
}

TEST(SteadyState, RampIsFlagged)
{
    std::vector<double> t(41);
    std::vector<double> y(41);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<double>(i);
        y[i] = 0.05 * t[i];
    }
    const auto v = steady_state(synthetic(t, y, 0.01)).at("y");
    EXPECT_TRUE(v.saturation_warning);
    EXPECT_NEAR(v.slope, 0.05, 1e-12);
    EXPECT_NEAR(v.value, 0.05 * 35.0, 1e-12);
}

TEST(SteadyState, NoisyPlateauIsNotFlagged)
{
    std::vector<double> t(200);
    std::vector<double> y(200);
    Rng rng(3);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = static_cast<double>(i);
        y[i] = 2.0 + uniform(rng, -0.1, 0.1);
    }
    const auto v = steady_state(synthetic(t, y, 0.05)).at("y");
    EXPECT_FALSE(v.saturation_warning);
    EXPECT_NEAR(v.value, 2.0, 0.03);
    EXPECT_GE(v.sem, v.temporal_sem);
}

TEST(SteadyState, Errors)
{
    const std::vector<double> t{0, 1, 2, 3, 4, 5, 6, 7};
    const std::vector<double> y(8, 1.0);
    EXPECT_THROW(steady_state(synthetic(t, y, 0.0)), std::invalid_argument); // 2 samples in the final quarter
    EXPECT_THROW(steady_state(synthetic(t, y, 0.0), 0.0), std::invalid_argument);
    EXPECT_THROW(steady_state(synthetic(t, y, 0.0), 0.6), std::invalid_argument);
    EXPECT_NO_THROW(steady_state(synthetic(t, y, 0.0), 0.5));
}

} // namespace
} // namespace mipt
