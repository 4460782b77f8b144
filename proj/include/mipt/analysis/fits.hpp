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

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

namespace mipt::analysis {

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rms_residual = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("line fit needs at least two (x, y) pairs");
    }
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw std::invalid_argument("line fit needs at least two distinct abscissae");
    }
    LinearFit f{sxy / sxx, 0.0, 0.0};
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - f.slope * x[i] - f.intercept;
        ss += r * r;
    }
    f.rms_residual = std::sqrt(ss / n);
    return f;
}

struct ExponentialFit {
    double lambda = 0.0;
    double y0 = 0.0;
    double y_inf = 0.0;
    double rms_residual = 0.0;
    bool poor_fit = false;
};

/// Least-squares fit of y(t) = (y0 - y_inf) e^(-lambda (t - t_first)) + y_inf
/// with y0 taken from the first sample. For fixed lambda y_inf is linear, so
/// only lambda is searched (log grid, then Brent). `poor_fit` is set when the
/// rms residual exceeds `poor_fit_threshold` times the range of the data.
inline ExponentialFit fit_exponential_decay(std::span<const double> t, std::span<const double> y,
                                            double poor_fit_threshold = 0.1)
{
    if (t.size() != y.size() || t.size() < 6) {
        throw std::invalid_argument("exponential fit needs at least six points");
    }
    const auto [ymin, ymax] = std::minmax_element(y.begin(), y.end());
    if (*ymin == *ymax) {
        throw std::invalid_argument("exponential fit needs a non-constant series");
    }
    const double t_first = t[0];
    const double y0 = y[0];
    const double span = t.back() - t_first;
    if (!(span > 0.0)) {
        throw std::invalid_argument("exponential fit needs increasing times");
    }

    auto profile = [&](double lambda, double* y_inf_out) {
        double sgg = 0.0;
        double sgr = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double e = std::exp(-lambda * (t[i] - t_first));
            sgg += (1.0 - e) * (1.0 - e);
            sgr += (1.0 - e) * (y[i] - y0 * e);
        }
        const double y_inf = sgg > 0.0 ? sgr / sgg : y0;
        double ss = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double e = std::exp(-lambda * (t[i] - t_first));
            const double r = y[i] - ((y0 - y_inf) * e + y_inf);
            ss += r * r;
        }
        if (y_inf_out != nullptr) {
            *y_inf_out = y_inf;
        }
        return ss;
    };

    // Rates from 1e-3 / span up to 1e3 / span, 40 points per decade.
    const double log_lo = std::log(1e-3 / span);
    const double log_hi = std::log(1e3 / span);
    const int grid = 241;
    int best = 0;
    double best_ss = std::numeric_limits<double>::infinity();
    for (int k = 0; k < grid; ++k) {
        const double ss = profile(std::exp(log_lo + (log_hi - log_lo) * k / (grid - 1)), nullptr);
        if (ss < best_ss) {
            best_ss = ss;
            best = k;
        }
    }
    const double h = (log_hi - log_lo) / (grid - 1);
    const double a = log_lo + h * std::max(0, best - 1);
    const double b = log_lo + h * std::min(grid - 1, best + 1);
    const auto [log_lambda, ss] = boost::math::tools::brent_find_minima(
        [&](double l) { return profile(std::exp(l), nullptr); }, a, b, std::numeric_limits<double>::digits - 4);

    ExponentialFit f;
    f.lambda = std::exp(log_lambda);
    f.y0 = y0;
    profile(f.lambda, &f.y_inf);
    f.rms_residual = std::sqrt(ss / static_cast<double>(t.size()));
    f.poor_fit = f.rms_residual > poor_fit_threshold * (*ymax - *ymin);
    return f;
}

struct PowerLawFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double rms_log_residual = 0.0;
};

/// y = prefactor * x^exponent by least squares in log-log coordinates.
inline PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.size() < 3) {
        throw std::invalid_argument("power-law fit needs at least three points");
    }
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw std::invalid_argument("power-law fit needs positive data");
        }
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    const auto line = fit_line(lx, ly);
    return {line.slope, std::exp(line.intercept), line.rms_residual};
}

struct LogScalingFit {
    double alpha = 0.0; // coefficient of ln l
    double beta = 0.0;
    double rms_residual = 0.0;
};

/// S(l) = alpha ln l + beta.
inline LogScalingFit fit_log_scaling(std::span<const double> l, std::span<const double> s)
{
    if (l.size() != s.size()) {
        throw std::invalid_argument("subsystem sizes and entropies differ in length");
    }
    const std::set<double> distinct(l.begin(), l.end());
    if (distinct.size() < 3) {
        throw std::invalid_argument("log-scaling fit needs at least three distinct subsystem sizes");
    }
    if (!(*distinct.begin() > 0.0) || *distinct.rbegin() < 2.0 * *distinct.begin()) {
        throw std::invalid_argument("subsystem sizes must be positive and span at least a factor 2");
    }
    std::vector<double> ll;
    for (double v : l) {
        ll.push_back(std::log(v));
    }
    const auto line = fit_line(ll, s);
    return {line.slope, line.intercept, line.rms_residual};
}

struct RenyiCoefficientFit {
    double alpha_inf = 0.0;
    double rms_residual = 0.0;
    // Offset model alpha(n) = a (1 + 1/n) + b.
    double offset_a = 0.0;
    double offset_b = 0.0;
    double offset_rms_residual = 0.0;
    bool offset_preferred = false;
};

/// One-parameter fit alpha(n) = alpha_inf (1 + 1/n) (n = inf allowed), with
/// the two-parameter offset model reported alongside. The offset model is
/// preferred when the one-parameter residual exceeds `relative_threshold`
/// of the mean |alpha| and the offset model at least halves it.
inline RenyiCoefficientFit fit_renyi_coefficient(std::span<const double> n, std::span<const double> alpha,
                                                 double relative_threshold = 0.01)
{
    if (n.size() != alpha.size() || n.size() < 3) {
        throw std::invalid_argument("Renyi coefficient fit needs at least three indices");
    }
    std::vector<double> g;
    double sgg = 0.0;
    double sga = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (!(n[i] > 0.0)) {
            throw std::invalid_argument("Renyi indices must be positive");
        }
        g.push_back(1.0 + 1.0 / n[i]);
        sgg += g.back() * g.back();
        sga += g.back() * alpha[i];
        scale += std::abs(alpha[i]) / static_cast<double>(n.size());
    }
    RenyiCoefficientFit f;
    f.alpha_inf = sga / sgg;
    double ss = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        const double r = alpha[i] - f.alpha_inf * g[i];
        ss += r * r;
    }
    f.rms_residual = std::sqrt(ss / static_cast<double>(n.size()));
    if (std::set<double>(g.begin(), g.end()).size() >= 2) {
        const auto line = fit_line(g, alpha);
        f.offset_a = line.slope;
        f.offset_b = line.intercept;
        f.offset_rms_residual = line.rms_residual;
        f.offset_preferred =
            f.rms_residual > relative_threshold * scale && f.offset_rms_residual < 0.5 * f.rms_residual;
    }
    return f;
}

struct Peak {
    double t_peak = 0.0;
    double value = 0.0;
    std::size_t index = 0;
};

/// Maximum of a sampled curve, refined by a parabola through the three
/// samples around the discrete maximum in ln t (when t > 0 there).
inline Peak find_peak(std::span<const double> t, std::span<const double> y)
{
    if (t.size() != y.size() || t.empty()) {
        throw std::invalid_argument("peak search needs a non-empty series");
    }
    const auto it = std::max_element(y.begin(), y.end());
    const auto i = static_cast<std::size_t>(it - y.begin());
    Peak pk{t[i], *it, i};
    if (i == 0 || i + 1 >= t.size() || !(t[i - 1] > 0.0)) {
        return pk;
    }
    const double x0 = std::log(t[i - 1]);
    const double x1 = std::log(t[i]);
    const double x2 = std::log(t[i + 1]);
    const double y0 = y[i - 1];
    const double y1 = y[i];
    const double y2 = y[i + 1];
    const double denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    const double a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    const double b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if (a < 0.0) {
        const double xv = std::clamp(-b / (2.0 * a), x0, x2);
        const double c = y1 - a * x1 * x1 - b * x1;
        pk.t_peak = std::exp(xv);
        pk.value = a * xv * xv + b * xv + c;
    }
    return pk;
}

} // namespace mipt::analysis
