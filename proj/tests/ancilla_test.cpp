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

#include <cmath>
#include <numbers>
#include <vector>

#include "mipt/ancilla.hpp"
#include "test_support.hpp"

namespace mipt {
namespace {

constexpr double kLn2 = std::numbers::ln2;

EigenSystem eigensystem(int n, std::uint64_t seed, Boundary b = Boundary::periodic)
{
    return diagonalize(build_hamiltonian(n, sample_disorder(10.0, 1.0, n, seed), b));
}

TrajectoryConfig ancilla_config(int n, double p, Axis basis, double t_max)
{
    TrajectoryConfig c;
    c.chain_length = n;
    c.p = p;
    c.basis = basis;
    c.t_max = t_max;
    c.observables = {};
    c.observables.half_chain_entropy = false;
    c.observables.tripartite = false;
    c.observables.diagonal_entropy = false;
    c.master_seed = 4242;
    return c;
}

TEST(EntangleAncilla, MaximallyMixedOnRandomStates)
{
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const auto s = testing::random_state(6, rng);
        const auto a = entangle_ancilla(s, trial % 6, 3.0);
        EXPECT_EQ(a.chain_length(), 6);
        EXPECT_EQ(a.state.qubits(), 7);
        EXPECT_NEAR(a.state.norm(), 1.0, 1e-12);
        EXPECT_NEAR(a.entropy(), kLn2, 1e-10);
        EXPECT_DOUBLE_EQ(a.t0, 3.0);
        const auto rho = testing::brute_force_partial_trace(a.state, {6});
        EXPECT_NEAR(std::abs(rho(0, 0) - 0.5), 0.0, 1e-10);
        EXPECT_NEAR(std::abs(rho(1, 1) - 0.5), 0.0, 1e-10);
        EXPECT_NEAR(std::abs(rho(0, 1)), 0.0, 1e-10);
    }
}

TEST(EntangleAncilla, ZeroStateGivesTwoTermSuperposition)
{
    const auto zero = StateVector::basis_state(5, 0);
    for (int ref = 0; ref < 5; ++ref) {
        const auto a = entangle_ancilla(zero, ref);
        EXPECT_NEAR(a.entropy(), kLn2, 1e-14);
        int support = 0;
        for (Eigen::Index b = 0; b < a.state.dimension(); ++b) {
            if (std::abs(a.state[b]) > 1e-14) {
                ++support;
                EXPECT_NEAR(std::abs(a.state[b]), 1.0 / std::numbers::sqrt2, 1e-14);
            }
        }
        EXPECT_EQ(support, 2);
        EXPECT_NEAR(std::abs(a.state[0]), 1.0 / std::numbers::sqrt2, 1e-14);
        const Eigen::Index flipped = (Eigen::Index{1} << 5) | (Eigen::Index{1} << ref);
        EXPECT_NEAR(std::abs(a.state[flipped]), 1.0 / std::numbers::sqrt2, 1e-14);
    }
}

TEST(EntangleAncilla, RejectsXEigenstateAtReference)
{
    // |+> on site 1, arbitrary elsewhere: X_1 psi = psi.
    const double r = 1.0 / std::numbers::sqrt2;
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(8);
    v[0b000] = r;
    v[0b010] = r;
    const StateVector s(3, v);
    EXPECT_THROW(entangle_ancilla(s, 1), std::invalid_argument);
    EXPECT_NO_THROW(entangle_ancilla(s, 0));
    EXPECT_THROW(entangle_ancilla(s, 3), std::out_of_range);
    EXPECT_THROW(entangle_ancilla(StateVector(3, 2.0 * v), 0), std::invalid_argument);
}

TEST(AncillaEvolution, ActsLinearlyOnBranches)
{
    const auto eig = eigensystem(6, 9);
    Rng rng(2);
    const auto s = testing::random_state(6, rng);
    const auto a = entangle_ancilla(s, 2);
    const Eigen::Index dim = 64;
    const StateVector b0(6, a.state.amplitudes().head(dim));
    const StateVector b1(6, a.state.amplitudes().tail(dim));
    const auto joint = evolve(a.state, eig, 1.0);
    const auto e0 = evolve(b0, eig, 1.0);
    const auto e1 = evolve(b1, eig, 1.0);
    EXPECT_LT((joint.amplitudes().head(dim) - e0.amplitudes()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((joint.amplitudes().tail(dim) - e1.amplitudes()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(AncillaEvolution, FullMeasurementDisentanglesAncilla)
{
    // Projecting every chain spin leaves the chain in a product state, so the
    // ancilla entropy must vanish; checked against the brute-force trace.
    const auto c = ancilla_config(4, 1.0, Axis::Z, 5);
    const auto eig = eigensystem(4, 3);
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        auto joint = entangle_ancilla(testing::random_state(4, rng), trial % 4).state;
        for (int k = 1; k <= 3; ++k) {
            joint = evolve(std::move(joint), eig, 1.0);
            joint = measurement_sweep(std::move(joint), 1.0, trial % 2 ? Axis::X : Axis::Z, k, rng, 4).state;
            const Eigen::MatrixXcd rho = testing::brute_force_partial_trace(joint, {4});
            const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(rho).eigenvalues();
            EXPECT_NEAR(ev.minCoeff(), 0.0, 1e-10);
            EXPECT_NEAR(entanglement_entropy(joint, Subsystem({4}, 5)), 0.0, 1e-8);
        }
    }
    const auto out = run_ancilla_trajectory(c, eig, 5, 2, 1);
    ASSERT_EQ(out.times.front(), 2.0);
    EXPECT_NEAR(out.values[0].front(), kLn2, 1e-10);
    for (std::size_t t = 1; t < out.times.size(); ++t) {
        EXPECT_NEAR(out.values[0][t], 0.0, 1e-8);
    }
}

TEST(AncillaTrajectory, UnmeasuredKeepsMaximalEntropy)
{
    const auto c = ancilla_config(6, 0.0, Axis::X, 40);
    const auto eig = eigensystem(6, 12);
    const auto out = run_ancilla_trajectory(c, eig, 77, 10, -1);
    ASSERT_EQ(out.names, std::vector<std::string>{"S_ancilla"});
    EXPECT_EQ(out.times.size(), 31U);
    EXPECT_DOUBLE_EQ(out.times.front(), 10.0);
    for (double v : out.values[0]) {
        EXPECT_NEAR(v, kLn2, 1e-10);
    }
}

TEST(AncillaTrajectory, EntropyStaysWithinBounds)
{
    const auto c = ancilla_config(6, 0.3, Axis::X, 60);
    const auto eig = eigensystem(6, 13);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto out = run_ancilla_trajectory(c, eig, seed, 5, 3);
        EXPECT_NEAR(out.values[0].front(), kLn2, 1e-10);
        for (double v : out.values[0]) {
            EXPECT_GE(v, -1e-12);
            EXPECT_LE(v, kLn2 + 1e-10);
        }
        EXPECT_LT(out.max_norm_drift, 1e-10);
    }
}

TEST(AncillaTrajectory, ChainPhaseMatchesStandardEngine)
{
    // Up to t0 the ancilla run is the ordinary trajectory with the same seed.
    auto c = ancilla_config(6, 0.2, Axis::X, 12);
    const auto eig = eigensystem(6, 14);
    const auto plain = run_trajectory(c, eig, 31);
    const auto anc = run_ancilla_trajectory(c, eig, 31, 12, 0);
    EXPECT_EQ(plain.record.events, anc.record.events);
}

TEST(AncillaTrajectory, FallsBackWhenReferenceWasJustMeasured)
{
    // p = 1 in X leaves every site in an X eigenstate; no site can host the
    // partner branch.
    const auto c = ancilla_config(4, 1.0, Axis::X, 4);
    const auto eig = eigensystem(4, 15);
    EXPECT_THROW(run_ancilla_trajectory(c, eig, 1, 2, 0), std::runtime_error);
    EXPECT_THROW(run_ancilla_trajectory(c, eig, 1, 5, 0), std::invalid_argument);
    EXPECT_THROW(run_ancilla_trajectory(c, eig, 1, 1, 4), std::out_of_range);
}

TEST(AncillaEnsemble, MeasurementsPurifyTheAncilla)
{
    auto c = ancilla_config(8, 0.1, Axis::X, 60);
    c.n_disorder = 3;
    c.n_traj_per_disorder = 20;
    c.stride = 5;
    const auto rec = ancilla_entropy_series(c, 10);
    const auto& s = rec.at("S_ancilla");
    EXPECT_EQ(s.n_samples, 60U);
    EXPECT_NEAR(s.mean.front(), kLn2, 1e-10);
    EXPECT_LT(s.sem.front(), 1e-12);
    for (std::size_t t = 1; t < s.mean.size(); ++t) {
        EXPECT_LE(s.mean[t], s.mean[t - 1] + s.sem[t] + s.sem[t - 1]) << "t=" << rec.times[t];
    }
    EXPECT_LT(s.mean.back(), 0.5 * kLn2);
}

TEST(SaturationTime, DetectsEndOfGrowth)
{
    TimeSeriesRecord rec;
    std::vector<double> mean;
    for (int t = 0; t <= 100; ++t) {
        rec.times.push_back(t);
        mean.push_back(t < 30 ? -0.02 * t : -0.6);
    }
    rec.observables.push_back({"I3", mean, std::vector<double>(mean.size(), 0.01), 10});
    const double ts = saturation_time(rec);
    EXPECT_GE(ts, 20.0);
    EXPECT_LE(ts, 31.0);
}

} // namespace
} // namespace mipt
