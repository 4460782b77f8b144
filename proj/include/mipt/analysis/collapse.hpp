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
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "mipt/analysis/minimize.hpp"

namespace mipt::analysis {

/// One measured point of a finite-size family.
struct CollapsePoint {
    double control = 0.0; // p or t
    int size = 0;         // N
    double value = 0.0;
    double sem = 0.0;
    int series = -1; // curve label; -1 means "use size"

    [[nodiscard]] int curve() const noexcept { return series < 0 ? size : series; }
};

/// A point after the scaling transform.
struct ScaledPoint {
    double x = 0.0;
    double y = 0.0;
    double sem = 0.0;
    int series = 0;
};

struct CostOptions {
    bool sem_weighted = false;
    // Divide by the mean of y^2 so the cost cannot be lowered by shrinking
    // every rescaled value (needed when y itself is rescaled).
    bool scale_invariant = false;
};

/// Collapse quality: each point is compared with the linear interpolation
/// between its nearest left and right neighbours drawn from other curves.
/// Points without neighbours on both sides are skipped; the sum of squared
/// residuals is divided by the number of points used. Returns +inf when no
/// point has neighbours.
inline double collapse_cost(std::span<const ScaledPoint> points, const CostOptions& opt = {})
{
    if (points.size() < 3) {
        throw std::invalid_argument("collapse needs at least three points");
    }
    std::map<int, std::vector<ScaledPoint>> curves;
    double xmin = std::numeric_limits<double>::infinity();
    double xmax = -xmin;
    for (const auto& p : points) {
        curves[p.series].push_back(p);
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
    }
    if (curves.size() < 2) {
        throw std::invalid_argument("collapse needs at least two distinct curves");
    }
    if (!(xmax > xmin)) {
        throw std::invalid_argument("degenerate collapse: all scaled abscissae coincide");
    }
    auto key = [](const ScaledPoint& a, const ScaledPoint& b) { return std::tie(a.x, a.y) < std::tie(b.x, b.y); };
    for (auto& [_, c] : curves) {
        std::sort(c.begin(), c.end(), key);
    }

    // Iterate in sorted order so the result does not depend on input order.
    double sum = 0.0;
    double y2 = 0.0;
    std::size_t used = 0;
    for (const auto& [own, members] : curves) {
        for (const auto& p : members) {
            y2 += p.y * p.y;
            const ScaledPoint* left = nullptr;
            const ScaledPoint* right = nullptr;
            for (const auto& [label, c] : curves) {
                if (label == own) {
                    continue;
                }
                auto it =
                    std::lower_bound(c.begin(), c.end(), p.x, [](const ScaledPoint& a, double x) { return a.x < x; });
                if (it != c.end() && (!right || it->x < right->x || (it->x == right->x && it->y < right->y))) {
                    right = &*it;
                }
                if (it != c.begin()) {
                    const auto* l = &*std::prev(it);
                    if (!left || l->x > left->x || (l->x == left->x && l->y < left->y)) {
                        left = l;
                    }
                }
            }
            double yhat = 0.0;
            double var = 0.0;
            if (right && right->x == p.x) {
                yhat = right->y;
                var = right->sem * right->sem;
            } else if (left && right) {
                const double w = (p.x - left->x) / (right->x - left->x);
                yhat = (1.0 - w) * left->y + w * right->y;
                var = (1.0 - w) * (1.0 - w) * left->sem * left->sem + w * w * right->sem * right->sem;
            } else {
                continue;
            }
            double r2 = (p.y - yhat) * (p.y - yhat);
            if (opt.sem_weighted) {
                const double denom = p.sem * p.sem + var;
                if (denom > 0.0) {
                    r2 /= denom;
                }
            }
            sum += r2;
            ++used;
        }
    }
    if (used == 0) {
        return std::numeric_limits<double>::infinity();
    }
    double cost = sum / static_cast<double>(used);
    if (opt.scale_invariant && y2 > 0.0) {
        cost /= y2 / static_cast<double>(points.size());
    }
    return cost;
}

/// Applies `transform(point) -> ScaledPoint` and evaluates the cost.
template <typename Transform>
double collapse_cost(std::span<const CollapsePoint> points, Transform&& transform, const CostOptions& opt = {})
{
    std::vector<ScaledPoint> scaled;
    scaled.reserve(points.size());
    for (const auto& p : points) {
        scaled.push_back(transform(p));
    }
    return collapse_cost(std::span<const ScaledPoint>(scaled), opt);
}

struct CollapseResult {
    std::vector<FittedParameter> parameters;
    double cost_min = 0.0;
    std::vector<ScaledPoint> scaled_points;
    bool non_convergent = false; // optimum sits on the search box
    bool unbounded = false;      // some error bar reached the search box

    [[nodiscard]] const FittedParameter& at(const std::string& name) const
    {
        for (const auto& p : parameters) {
            if (p.name == name) {
                return p;
            }
        }
        throw std::out_of_range("no fitted parameter '" + name + "'");
    }
};

/// Minimizes the cost of `scale(params)` over the box and attaches 1.3x
/// error bars.
template <typename Scale>
CollapseResult fit_collapse(Scale&& scale, std::span<const ParameterSpec> specs, const CostOptions& opt)
{
    detail::CostFn cost = [&](std::span<const double> x) {
        const auto pts = scale(x);
        return collapse_cost(std::span<const ScaledPoint>(pts), opt);
    };
    const auto best = grid_then_simplex(cost, specs);
    CollapseResult r;
    r.cost_min = best.cost;
    r.non_convergent = best.on_boundary || !std::isfinite(best.cost);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        auto p = error_bar(cost, specs, best.x, best.cost, i);
        r.unbounded = r.unbounded || p.lower_unbounded || p.upper_unbounded;
        r.parameters.push_back(std::move(p));
    }
    r.scaled_points = scale(std::span<const double>(best.x));
    return r;
}

struct StaticCollapseOptions {
    double pc_lower = std::numeric_limits<double>::quiet_NaN(); // default: min control
    double pc_upper = std::numeric_limits<double>::quiet_NaN(); // default: max control
    double nu_lower = 0.3;
    double nu_upper = 5.0;
    int grid_points = 41;
    bool sem_weighted = false;
};

/// y = F[(p - p_c) N^(1/nu)].
inline CollapseResult fit_static_collapse(std::span<const CollapsePoint> points, const StaticCollapseOptions& o = {})
{
    if (points.empty()) {
        throw std::invalid_argument("no points to collapse");
    }
    auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                        [](const auto& a, const auto& b) { return a.control < b.control; });
    const std::vector<ParameterSpec> specs{{"p_c", std::isnan(o.pc_lower) ? lo->control : o.pc_lower,
                                            std::isnan(o.pc_upper) ? hi->control : o.pc_upper, o.grid_points},
                                           {"nu", o.nu_lower, o.nu_upper, o.grid_points}};
    auto scale = [&](std::span<const double> x) {
        std::vector<ScaledPoint> out;
        out.reserve(points.size());
        for (const auto& p : points) {
            const double f = std::pow(static_cast<double>(p.size), 1.0 / x[1]);
            out.push_back({(p.control - x[0]) * f, p.value, p.sem, p.curve()});
        }
        return out;
    };
    return fit_collapse(scale, specs, CostOptions{o.sem_weighted, false});
}

/// Point of a time series labelled by (p, N); value is -I3.
struct DynamicPoint {
    double t = 0.0;
    double p = 0.0;
    int size = 0;
    double value = 0.0;
    double sem = 0.0;
};

struct DynamicCollapseOptions {
    std::vector<ParameterSpec> specs{
        {"alpha", 0.0, 2.0, 13}, {"beta", 0.0, 2.0, 13}, {"gamma", 0.0, 2.0, 13}, {"delta", -0.5, 0.5, 13}};
    bool sem_weighted = false;
};

/// -I3(t, p, N) = F[t p^alpha / N^gamma] / (p^beta e^(N delta)); collapses
/// x = t p^alpha / N^gamma against y = -I3 p^beta e^(N delta).
inline CollapseResult fit_dynamic_collapse(std::span<const DynamicPoint> points, const DynamicCollapseOptions& o = {})
{
    if (o.specs.size() != 4) {
        throw std::invalid_argument("dynamic collapse has exactly four parameters");
    }
    std::map<std::pair<double, int>, int> labels;
    for (const auto& p : points) {
        if (!(p.p > 0.0) || !(p.t > 0.0)) {
            throw std::invalid_argument("dynamic collapse needs p > 0 and t > 0");
        }
        labels.try_emplace({p.p, p.size}, static_cast<int>(labels.size()));
    }
    auto scale = [&](std::span<const double> x) {
        std::vector<ScaledPoint> out;
        out.reserve(points.size());
        for (const auto& p : points) {
            const double n = static_cast<double>(p.size);
            const double fy = std::pow(p.p, x[1]) * std::exp(n * x[3]);
            out.push_back(
                {p.t * std::pow(p.p, x[0]) / std::pow(n, x[2]), p.value * fy, p.sem * fy, labels.at({p.p, p.size})});
        }
        return out;
    };
    return fit_collapse(scale, std::span<const ParameterSpec>(o.specs), CostOptions{o.sem_weighted, true});
}

/// S_ancilla(t) for one system size, t measured from the entangling time.
struct AncillaSeries {
    int size = 0;
    double t0 = 0.0;
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> sems;
};

struct DynamicalExponentOptions {
    double z_lower = 0.2;
    double z_upper = 3.0;
    int grid_points = 141;
    bool sem_weighted = false;
};

/// Collapse of S_ancilla against (t - t0) N^(-z), dropping t - t0 <= exclusion.
inline CollapseResult fit_dynamical_exponent(std::span<const AncillaSeries> series, double exclusion,
                                             const DynamicalExponentOptions& o = {})
{
    std::vector<CollapsePoint> pts;
    for (const auto& s : series) {
        if (s.times.size() != s.values.size()) {
            throw std::invalid_argument("ancilla series times and values differ in length");
        }
        for (std::size_t i = 0; i < s.times.size(); ++i) {
            const double dt = s.times[i] - s.t0;
            if (dt > exclusion) {
                pts.push_back({dt, s.size, s.values[i], i < s.sems.size() ? s.sems[i] : 0.0});
            }
        }
    }
    const std::vector<ParameterSpec> specs{{"z", o.z_lower, o.z_upper, o.grid_points}};
    auto scale = [&](std::span<const double> x) {
        std::vector<ScaledPoint> out;
        out.reserve(pts.size());
        for (const auto& p : pts) {
            out.push_back({p.control * std::pow(static_cast<double>(p.size), -x[0]), p.value, p.sem, p.size});
        }
        return out;
    };
    return fit_collapse(scale, specs, CostOptions{o.sem_weighted, false});
}

} // namespace mipt::analysis
