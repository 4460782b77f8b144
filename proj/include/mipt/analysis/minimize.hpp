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

#include <boost/math/tools/minima.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mipt::analysis {

/// Box-bounded parameter for a grid scan.
struct ParameterSpec {
    std::string name;
    double lower;
    double upper;
    int grid_points = 21;
};

/// Fitted value and the interval on which the cost stays below
/// error_bar_factor * cost_min (scanned along the parameter with the others
/// held at the optimum).
struct FittedParameter {
    std::string name;
    double value = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool lower_unbounded = false; // interval reached the search box
    bool upper_unbounded = false;

    [[nodiscard]] double half_width() const { return 0.5 * (upper - lower); }
};

struct MinimizerResult {
    std::vector<double> x;
    double cost = 0.0;
    bool on_boundary = false;
};

inline constexpr double kErrorBarFactor = 1.3;
inline constexpr double kSimplexTolerance = 1e-6;

namespace detail {

using CostFn = std::function<double(std::span<const double>)>;

/// Cost with a steep penalty outside the box so the simplex stays inside.
inline double boxed_cost(const CostFn& f, std::span<const ParameterSpec> specs, std::span<const double> x)
{
    double excess = 0.0;
    std::vector<double> clamped(x.begin(), x.end());
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const double width = specs[i].upper - specs[i].lower;
        if (x[i] < specs[i].lower) {
            excess += (specs[i].lower - x[i]) / width;
            clamped[i] = specs[i].lower;
        } else if (x[i] > specs[i].upper) {
            excess += (x[i] - specs[i].upper) / width;
            clamped[i] = specs[i].upper;
        }
    }
    const double c = f(clamped);
    if (!std::isfinite(c)) {
        return 1e300;
    }
    return excess > 0.0 ? c + (1.0 + std::abs(c)) * (1.0 + 1e3 * excess) : c;
}

struct GslContext {
    const CostFn* f;
    std::span<const ParameterSpec> specs;
};

inline double gsl_trampoline(const gsl_vector* v, void* params)
{
    const auto* ctx = static_cast<const GslContext*>(params);
    std::vector<double> x(v->size);
    for (std::size_t i = 0; i < v->size; ++i) {
        x[i] = gsl_vector_get(v, i);
    }
    return boxed_cost(*ctx->f, ctx->specs, x);
}

} // namespace detail

/// Nelder-Mead refinement (GSL nmsimplex2) from `start` with initial steps
/// `step`; converges when the simplex size drops below kSimplexTolerance.
inline MinimizerResult simplex_minimize(const detail::CostFn& f, std::span<const ParameterSpec> specs,
                                        std::vector<double> start, std::span<const double> step,
                                        int max_iterations = 5000)
{
    const std::size_t n = specs.size();
    if (n == 1) {
        // nmsimplex2 is unreliable in one dimension; use Brent in the bracket.
        const double a = std::max(specs[0].lower, start[0] - step[0]);
        const double b = std::min(specs[0].upper, start[0] + step[0]);
        auto eval = [&](double v) { return f(std::vector<double>{v}); };
        const auto [xm, fm] =
            boost::math::tools::brent_find_minima(eval, a, b, std::numeric_limits<double>::digits / 2);
        MinimizerResult r{{xm}, fm, false};
        const double fs = eval(start[0]);
        if (fs < r.cost) {
            r.x = {start[0]};
            r.cost = fs;
        }
        return r;
    }

    gsl_set_error_handler_off();
    detail::GslContext ctx{&f, specs};
    gsl_multimin_function fn{&detail::gsl_trampoline, n, &ctx};
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> x0(gsl_vector_alloc(n), &gsl_vector_free);
    std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)> ss(gsl_vector_alloc(n), &gsl_vector_free);
    for (std::size_t i = 0; i < n; ++i) {
        gsl_vector_set(x0.get(), i, start[i]);
        gsl_vector_set(ss.get(), i, step[i]);
    }
    std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), &gsl_multimin_fminimizer_free);
    gsl_multimin_fminimizer_set(s.get(), &fn, x0.get(), ss.get());
    for (int it = 0; it < max_iterations; ++it) {
        if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) {
            break;
        }
        if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), kSimplexTolerance) == GSL_SUCCESS) {
            break;
        }
    }
    MinimizerResult r;
    r.x.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.x[i] = std::clamp(gsl_vector_get(s->x, i), specs[i].lower, specs[i].upper);
    }
    r.cost = f(r.x);
    const double fs = f(start);
    if (fs < r.cost) {
        r.x = std::move(start);
        r.cost = fs;
    }
    return r;
}

/// Full tensor-grid scan followed by simplex refinement. Collapse costs are
/// rugged, so the refinement starts from each of the `starts` lowest grid
/// local minima (axis neighbours), restarts until no further gain, and keeps
/// the best. Ties resolve to the lexicographically smallest parameters.
inline MinimizerResult grid_then_simplex(const detail::CostFn& f, std::span<const ParameterSpec> specs, int starts = 6)
{
    const std::size_t n = specs.size();
    std::vector<int> dims(n);
    std::vector<std::size_t> stride(n);
    std::size_t total = 1;
    for (std::size_t i = n; i-- > 0;) {
        dims[i] = std::max(2, specs[i].grid_points);
        stride[i] = total;
        total *= static_cast<std::size_t>(dims[i]);
    }
    auto grid_point = [&](std::size_t flat) {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto k = static_cast<int>((flat / stride[i]) % static_cast<std::size_t>(dims[i]));
            x[i] = specs[i].lower + (specs[i].upper - specs[i].lower) * k / (dims[i] - 1);
        }
        return x;
    };
    std::vector<double> cost(total);
    for (std::size_t flat = 0; flat < total; ++flat) {
        cost[flat] = f(grid_point(flat));
    }

    // Flat index order is lexicographic in the parameters, so the stable
    // sort keeps the documented tie-break.
    std::vector<std::size_t> minima;
    for (std::size_t flat = 0; flat < total; ++flat) {
        bool is_min = std::isfinite(cost[flat]);
        for (std::size_t i = 0; i < n && is_min; ++i) {
            const auto k = static_cast<int>((flat / stride[i]) % static_cast<std::size_t>(dims[i]));
            if (k > 0 && cost[flat - stride[i]] < cost[flat]) {
                is_min = false;
            }
            if (k + 1 < dims[i] && cost[flat + stride[i]] < cost[flat]) {
                is_min = false;
            }
        }
        if (is_min) {
            minima.push_back(flat);
        }
    }
    const auto best_cell = static_cast<std::size_t>(std::min_element(cost.begin(), cost.end()) - cost.begin());
    if (minima.empty()) {
        minima.push_back(best_cell);
    }
    std::stable_sort(minima.begin(), minima.end(), [&](auto a, auto b) { return cost[a] < cost[b]; });
    minima.resize(std::min(minima.size(), static_cast<std::size_t>(std::max(1, starts))));

    std::vector<double> step(n);
    for (std::size_t i = 0; i < n; ++i) {
        step[i] = (specs[i].upper - specs[i].lower) / (dims[i] - 1);
    }
    MinimizerResult r{grid_point(best_cell), cost[best_cell], false};
    for (const auto start : minima) {
        auto local = simplex_minimize(f, specs, grid_point(start), step);
        // Nelder-Mead stalls in curved valleys; restart at full size until a
        // restart no longer helps.
        for (int restart = 0; restart < 50; ++restart) {
            auto again = simplex_minimize(f, specs, local.x, step);
            if (!(again.cost < local.cost * (1.0 - 1e-9))) {
                break;
            }
            local = std::move(again);
        }
        if (local.cost < r.cost) {
            r = std::move(local);
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double tol = 1e-9 * (specs[i].upper - specs[i].lower);
        if (r.x[i] <= specs[i].lower + tol || r.x[i] >= specs[i].upper - tol) {
            r.on_boundary = true;
        }
    }
    return r;
}

/// Interval along parameter `i` where cost < factor * cost_min, found by
/// stepping outward from the optimum and bisecting the crossing.
inline FittedParameter error_bar(const detail::CostFn& f, std::span<const ParameterSpec> specs,
                                 const std::vector<double>& optimum, double cost_min, std::size_t i,
                                 double factor = kErrorBarFactor, int steps = 400)
{
    FittedParameter p{specs[i].name, optimum[i], optimum[i], optimum[i]};
    const double threshold = factor * cost_min;
    const double h = (specs[i].upper - specs[i].lower) / steps;
    auto cost_at = [&](double v) {
        auto x = optimum;
        x[i] = v;
        return f(x);
    };
    for (int dir : {-1, +1}) {
        double inside = optimum[i];
        double outside = inside;
        bool crossed = false;
        while (true) {
            const double next = std::clamp(inside + dir * h, specs[i].lower, specs[i].upper);
            if (next == inside) {
                break;
            }
            if (!(cost_at(next) < threshold)) {
                outside = next;
                crossed = true;
                break;
            }
            inside = next;
        }
        if (crossed) {
            for (int k = 0; k < 40; ++k) {
                const double mid = 0.5 * (inside + outside);
                (cost_at(mid) < threshold ? inside : outside) = mid;
            }
        }
        if (dir < 0) {
            p.lower = inside;
            p.lower_unbounded = !crossed;
        } else {
            p.upper = inside;
            p.upper_unbounded = !crossed;
        }
    }
    return p;
}

} // namespace mipt::analysis
