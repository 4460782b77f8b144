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
#include <limits>
#include <numbers>
#include <random>
#include <vector>

#include "mipt/analysis/collapse.hpp"
#include "mipt/analysis/fits.hpp"
#include "mipt/analysis/minimize.hpp"
#include "mipt/rng.hpp"
#include "synthetic.hpp"

namespace mipt::analysis {
namespace {

using testing::ancilla_family;
using testing::dynamic_family;
using testing::linspace;
using testing::logspace;
using testing::static_family;

TEST(CollapseCost, PointsOnOneLineCostNothing)
{
    std::vector<ScaledPoint> pts;
    for (int i = 0; i < 20; ++i) {
        const double x = 0.1 * i + (i % 2 ? 0.03 : 0.0);
        pts.push_back({x, 2.0 * x - 1.0, 0.0, i % 3});
    }
    EXPECT_LT(collapse_cost(pts), 1e-20);
}

TEST(CollapseCost, IdenticalCurvesCostNothing)
{
    std::vector<CollapsePoint> pts;
    for (int n : {8, 10}) {
        for (double p : linspace(0.0, 1.0, 7)) {
            pts.push_back({p, n, std::sin(3.0 * p), 0.0});
        }
    }
    const double c = collapse_cost(std::span<const CollapsePoint>(pts), [](const CollapsePoint& p) {
        return ScaledPoint{p.control, p.value, p.sem, p.curve()};
    });
    EXPECT_EQ(c, 0.0);
}

TEST(CollapseCost, MatchesHandComputedResidual)
{
    // Curve 0 at x = 0, 2 with y = 0, 2; curve 1 at x = 1 with y = 3.
    // Only the middle point has neighbours on both sides: yhat = 1, r^2 = 4.
    const std::vector<ScaledPoint> pts{{0, 0, 0, 0}, {2, 2, 0, 0}, {1, 3, 0, 1}};
    EXPECT_DOUBLE_EQ(collapse_cost(pts), 4.0);
    const std::vector<ScaledPoint> weighted{{0, 0, 1, 0}, {2, 2, 1, 0}, {1, 3, 1, 1}};
    // Var of yhat = 0.25 + 0.25, own var 1 -> 4 / 1.5.
    EXPECT_DOUBLE_EQ(collapse_cost(weighted, {.sem_weighted = true}), 4.0 / 1.5);
}

TEST(CollapseCost, InvariantUnderInputOrder)
{
    auto pts = static_family(0.014, 1.3, 0.01, 5);
    std::vector<ScaledPoint> scaled;
    for (const auto& p : pts) {
        scaled.push_back({(p.control - 0.012) * std::pow(p.size, 1.0 / 1.1), p.value, p.sem, p.size});
    }
    const double ref = collapse_cost(scaled);
    Rng rng(9);
    for (int k = 0; k < 10; ++k) {
        std::shuffle(scaled.begin(), scaled.end(), rng);
        EXPECT_EQ(collapse_cost(scaled), ref);
    }
}

TEST(CollapseCost, Errors)
{
    EXPECT_THROW(collapse_cost(std::vector<ScaledPoint>{{0, 0, 0, 0}, {1, 1, 0, 1}}), std::invalid_argument);
    EXPECT_THROW(collapse_cost(std::vector<ScaledPoint>{{0, 0, 0, 0}, {1, 1, 0, 0}, {2, 1, 0, 0}}),
                 std::invalid_argument);
    EXPECT_THROW(collapse_cost(std::vector<ScaledPoint>{{1, 0, 0, 0}, {1, 1, 0, 1}, {1, 2, 0, 0}}),
                 std::invalid_argument);
    // Disjoint curves: nobody has neighbours on both sides.
    EXPECT_EQ(collapse_cost(std::vector<ScaledPoint>{{0, 0, 0, 0}, {1, 1, 0, 0}, {5, 1, 0, 1}}),
              std::numeric_limits<double>::infinity());
}

TEST(CollapseCost, MinimizedNearGeneratingParameters)
{
    const auto pts = static_family(0.014, 1.3, 0.0, 1);
    auto cost_at = [&](double pc, double nu) {
        return collapse_cost(std::span<const CollapsePoint>(pts), [&](const CollapsePoint& p) {
            return ScaledPoint{(p.control - pc) * std::pow(p.size, 1.0 / nu), p.value, p.sem, p.curve()};
        });
    };
    const double at_truth = cost_at(0.014, 1.3);
    for (double pc : {0.010, 0.012, 0.016, 0.018}) {
        EXPECT_GT(cost_at(pc, 1.3), at_truth);
    }
    for (double nu : {0.9, 1.1, 1.5, 1.8}) {
        EXPECT_GT(cost_at(0.014, nu), at_truth);
    }
}

TEST(StaticCollapse, RecoversParametersAtOnePercentNoise)
{
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto pts = static_family(0.014, 1.3, 0.01, seed);
        const auto r = fit_static_collapse(pts);
        EXPECT_NEAR(r.at("p_c").value, 0.014, 0.002) << "seed " << seed;
        EXPECT_NEAR(r.at("nu").value, 1.3, 0.1) << "seed " << seed;
        EXPECT_FALSE(r.non_convergent);
        for (const auto& p : r.parameters) {
            EXPECT_LE(p.lower, p.value);
            EXPECT_GE(p.upper, p.value);
        }
        EXPECT_GE(r.cost_min, 0.0);
        EXPECT_EQ(r.scaled_points.size(), pts.size());
    }
}

TEST(StaticCollapse, NoiselessRecoveryWithinGridResolution)
{
    const auto pts = static_family(0.014, 1.3, 0.0, 1);
    StaticCollapseOptions o;
    const auto r = fit_static_collapse(pts, o);
    EXPECT_NEAR(r.at("p_c").value, 0.014, (0.03 - 0.005) / (o.grid_points - 1));
    EXPECT_NEAR(r.at("nu").value, 1.3, (o.nu_upper - o.nu_lower) / (o.grid_points - 1));
}

TEST(StaticCollapse, SizeIndependentDataLeavesNuUnbounded)
{
    const auto pts = static_family(0.014, 1.3, 0.0, 1, false);
    const auto r = fit_static_collapse(pts);
    EXPECT_TRUE(r.unbounded);
    EXPECT_TRUE(r.at("nu").upper_unbounded);
}

TEST(StaticCollapse, ErrorBarsShrinkWithNoise)
{
    double prev_pc = std::numeric_limits<double>::infinity();
    double prev_nu = std::numeric_limits<double>::infinity();
    for (double noise : {0.02, 0.01, 0.005}) {
        const auto r = fit_static_collapse(static_family(0.014, 1.3, noise, 11));
        const double pc = r.at("p_c").half_width();
        const double nu = r.at("nu").half_width();
        EXPECT_LE(pc, prev_pc * (1.0 + 1e-9)) << "noise " << noise;
        EXPECT_LE(nu, prev_nu * (1.0 + 1e-9)) << "noise " << noise;
        prev_pc = pc;
        prev_nu = nu;
    }
}

TEST(StaticCollapse, Deterministic)
{
    const auto pts = static_family(0.014, 1.3, 0.01, 4);
    const auto a = fit_static_collapse(pts);
    const auto b = fit_static_collapse(pts);
    EXPECT_EQ(a.cost_min, b.cost_min);
    EXPECT_EQ(a.at("p_c").value, b.at("p_c").value);
    EXPECT_EQ(a.at("nu").upper, b.at("nu").upper);
}

TEST(DynamicCollapse, RecoversFourParametersAtOnePercentNoise)
{
    const auto pts = dynamic_family(0.80, 0.78, 0.81, 0.16, 0.01, 21);
    const auto r = fit_dynamic_collapse(pts);
    EXPECT_NEAR(r.at("alpha").value, 0.80, 0.05);
    EXPECT_NEAR(r.at("beta").value, 0.78, 0.05);
    EXPECT_NEAR(r.at("gamma").value, 0.81, 0.05);
    EXPECT_NEAR(r.at("delta").value, 0.16, 0.05);
}

TEST(DynamicCollapse, ZeroDeltaIntervalContainsZero)
{
    const auto pts = dynamic_family(0.6, 1.0, 1.2, 0.0, 0.01, 22);
    const auto r = fit_dynamic_collapse(pts);
    const auto& d = r.at("delta");
    EXPECT_LE(d.lower, 0.0);
    EXPECT_GE(d.upper, 0.0);
}

TEST(DynamicCollapse, RejectsNonPositiveInputs)
{
    std::vector<DynamicPoint> pts{{1.0, 0.0, 8, 1.0, 0.0}, {2.0, 0.1, 8, 1.0, 0.0}, {3.0, 0.1, 10, 1.0, 0.0}};
    EXPECT_THROW(fit_dynamic_collapse(pts), std::invalid_argument);
    DynamicCollapseOptions o;
    o.specs.pop_back();
    EXPECT_THROW(fit_dynamic_collapse(pts, o), std::invalid_argument);
}

TEST(DynamicalExponent, RecoversUnitZ)
{
    const auto r = fit_dynamical_exponent(ancilla_family(1.0, false), 0.0);
    EXPECT_NEAR(r.at("z").value, 1.0, 0.02);
    EXPECT_FALSE(r.non_convergent);
}

TEST(DynamicalExponent, ExclusionRemovesTransient)
{
    const auto series = ancilla_family(1.0, true);
    const auto all = fit_dynamical_exponent(series, 0.0);
    const auto excluded = fit_dynamical_exponent(series, 30.0);
    EXPECT_GT(all.cost_min, excluded.cost_min);
    EXPECT_NEAR(excluded.at("z").value, 1.0, 0.02);
}

TEST(DynamicalExponent, RejectsMismatchedSeries)
{
    std::vector<AncillaSeries> bad{{8, 0.0, {1.0, 2.0}, {0.5}, {}}};
    EXPECT_THROW(fit_dynamical_exponent(bad, 0.0), std::invalid_argument);
}

TEST(Minimizer, GridThenSimplexFindsInteriorMinimum)
{
    const std::vector<ParameterSpec> specs{{"a", -2.0, 2.0, 9}, {"b", 0.0, 5.0, 9}};
    detail::CostFn f = [](std::span<const double> x) {
        return (x[0] - 0.3) * (x[0] - 0.3) + 4.0 * (x[1] - 1.7) * (x[1] - 1.7) + 1.0;
    };
    const auto r = grid_then_simplex(f, specs);
    EXPECT_NEAR(r.x[0], 0.3, 1e-5);
    EXPECT_NEAR(r.x[1], 1.7, 1e-5);
    EXPECT_NEAR(r.cost, 1.0, 1e-10);
    EXPECT_FALSE(r.on_boundary);
    // cost < 1.3 -> (a - 0.3)^2 < 0.3 along a.
    const auto eb = error_bar(f, specs, r.x, r.cost, 0);
    EXPECT_NEAR(eb.lower, 0.3 - std::sqrt(0.3), 1e-4);
    EXPECT_NEAR(eb.upper, 0.3 + std::sqrt(0.3), 1e-4);
    EXPECT_FALSE(eb.lower_unbounded || eb.upper_unbounded);
}

TEST(Minimizer, FlagsBoundaryOptimum)
{
    const std::vector<ParameterSpec> specs{{"a", 0.0, 1.0, 11}};
    detail::CostFn f = [](std::span<const double> x) { return 1.0 + x[0]; };
    const auto r = grid_then_simplex(f, specs);
    EXPECT_TRUE(r.on_boundary);
    EXPECT_NEAR(r.x[0], 0.0, 1e-6);
    EXPECT_TRUE(error_bar(f, specs, r.x, r.cost, 0).lower_unbounded);
}

TEST(ExponentialFit, ExactDecay)
{
    std::vector<double> t;
    std::vector<double> y;
    for (int k = 0; k <= 60; ++k) {
        t.push_back(k);
        y.push_back(std::exp(-0.1 * k));
    }
    const auto f = fit_exponential_decay(t, y);
    EXPECT_NEAR(f.lambda, 0.1, 1e-6);
    EXPECT_NEAR(f.y_inf, 0.0, 1e-6);
    EXPECT_DOUBLE_EQ(f.y0, 1.0);
    EXPECT_FALSE(f.poor_fit);
}

TEST(ExponentialFit, SaturatingGrowth)
{
    std::vector<double> t;
    std::vector<double> y;
    for (int k = 0; k <= 80; k += 2) {
        t.push_back(k);
        y.push_back(2.0 * std::exp(-0.05 * k) + 5.0 * (1.0 - std::exp(-0.05 * k)));
    }
    const auto f = fit_exponential_decay(t, y);
    EXPECT_NEAR(f.lambda, 0.05, 1e-6);
    EXPECT_NEAR(f.y_inf, 5.0, 1e-6);
}

TEST(ExponentialFit, FlagsNonMonotoneSeries)
{
    std::vector<double> t;
    std::vector<double> y;
    for (int k = 0; k < 40; ++k) {
        t.push_back(k);
        y.push_back(std::sin(0.3 * k));
    }
    EXPECT_TRUE(fit_exponential_decay(t, y).poor_fit);
    const std::vector<double> few{0, 1, 2, 3, 4};
    EXPECT_THROW(fit_exponential_decay(few, few), std::invalid_argument);
    const std::vector<double> flat(10, 1.0);
    const auto tt = linspace(0, 9, 10);
    EXPECT_THROW(fit_exponential_decay(tt, flat), std::invalid_argument);
}

TEST(PowerLawFit, InverseLaw)
{
    const std::vector<double> x{0.01, 0.02, 0.05, 0.1, 0.3};
    std::vector<double> y;
    for (double v : x) {
        y.push_back(3.0 / v);
    }
    const auto f = fit_power_law(x, y);
    EXPECT_NEAR(f.exponent, -1.0, 1e-10);
    EXPECT_NEAR(f.prefactor, 3.0, 1e-9);
    const std::vector<double> neg{1.0, -2.0, 3.0};
    EXPECT_THROW(fit_power_law(neg, neg), std::invalid_argument);
}

TEST(LogScalingFit, ExactLogarithm)
{
    const std::vector<double> l{1, 2, 3, 4, 5, 6};
    std::vector<double> s;
    for (double v : l) {
        s.push_back(0.5 * std::log(v) + 0.1);
    }
    const auto f = fit_log_scaling(l, s);
    EXPECT_NEAR(f.alpha, 0.5, 1e-12);
    EXPECT_NEAR(f.beta, 0.1, 1e-12);
    const std::vector<double> two{2, 3};
    EXPECT_THROW(fit_log_scaling(two, two), std::invalid_argument);
    const std::vector<double> narrow{4, 5, 6};
    EXPECT_THROW(fit_log_scaling(narrow, narrow), std::invalid_argument);
}

TEST(RenyiCoefficient, RecoversUnitaryCftForm)
{
    const std::vector<double> n{1, 2, 3, 4, 5, std::numeric_limits<double>::infinity()};
    std::vector<double> a;
    for (double v : n) {
        a.push_back(0.34 * (1.0 + 1.0 / v));
    }
    const auto f = fit_renyi_coefficient(n, a);
    EXPECT_NEAR(f.alpha_inf, 0.34, 1e-12);
    EXPECT_FALSE(f.offset_preferred);
}

TEST(RenyiCoefficient, RecoversFromLogScalingFamily)
{
    // alpha(n) from S_n(l) = alpha(n) ln l + beta(n) with small noise.
    const std::vector<double> n{1, 2, 3, 4, std::numeric_limits<double>::infinity()};
    const std::vector<double> l{1, 2, 3, 4, 5, 6};
    Rng rng(8);
    std::normal_distribution<double> g;
    std::vector<double> alphas;
    for (double r : n) {
        std::vector<double> s;
        for (double v : l) {
            s.push_back(0.34 * (1.0 + 1.0 / r) * std::log(v) + 0.2 + 0.002 * g(rng));
        }
        alphas.push_back(fit_log_scaling(l, s).alpha);
    }
    EXPECT_NEAR(fit_renyi_coefficient(n, alphas).alpha_inf, 0.34, 0.01);
}

TEST(RenyiCoefficient, DetectsOffset)
{
    const std::vector<double> n{1, 2, 3, 5, 10};
    std::vector<double> a;
    for (double v : n) {
        a.push_back(0.3 * (1.0 + 1.0 / v) + 0.1);
    }
    const auto f = fit_renyi_coefficient(n, a);
    EXPECT_TRUE(f.offset_preferred);
    EXPECT_NEAR(f.offset_a, 0.3, 1e-12);
    EXPECT_NEAR(f.offset_b, 0.1, 1e-12);
    EXPECT_GT(f.rms_residual, 0.01 * 0.5);
    const std::vector<double> one{2.0};
    EXPECT_THROW(fit_renyi_coefficient(one, one), std::invalid_argument);
}

TEST(FindPeak, RefinesInLogTime)
{
    std::vector<double> t = logspace(1.0, 1000.0, 31);
    std::vector<double> y;
    for (double v : t) {
        const double u = std::log(v) - std::log(40.0);
        y.push_back(1.0 - u * u);
    }
    const auto pk = find_peak(t, y);
    EXPECT_NEAR(pk.t_peak, 40.0, 1e-8);
    EXPECT_NEAR(pk.value, 1.0, 1e-10);
}

} // namespace
} // namespace mipt::analysis
