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
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "mipt/analysis/collapse.hpp"
#include "mipt/analysis/fits.hpp"
#include "mipt/io/manifest.hpp"
#include "mipt/io/plan.hpp"

namespace mipt::io {

/// Raised when an analysis or figure needs cells that are absent, pending or
/// failed; `ids` lists every such cell.
class MissingCellsError : public std::runtime_error {
public:
    MissingCellsError(const std::string& what, std::vector<std::string> ids)
        : std::runtime_error(message(what, ids)), ids_(std::move(ids))
    {
    }

    [[nodiscard]] const std::vector<std::string>& ids() const noexcept { return ids_; }

private:
    static std::string message(const std::string& what, const std::vector<std::string>& ids)
    {
        if (ids.empty()) {
            return what;
        }
        std::string m = what + ": missing cells";
        for (std::size_t i = 0; i < ids.size(); ++i) {
            m += (i ? ", " : " ") + ids[i];
        }
        return m;
    }

    std::vector<std::string> ids_;
};

/// A complete cell with its series loaded.
struct CellData {
    CellRecord record;
    TimeSeriesRecord series;

    [[nodiscard]] int size() const { return record.config.chain_length; }
    [[nodiscard]] double p() const { return record.config.p; }
};

struct CellFilter {
    Axis basis = Axis::X;
    double disorder = 10.0;
    std::vector<double> sizes;         // empty: any
    std::vector<double> probabilities; // empty: any
    bool need_ancilla = false;
};

namespace detail {

inline bool listed(const std::vector<double>& values, double v)
{
    return values.empty() || std::find(values.begin(), values.end(), v) != values.end();
}

} // namespace detail

/// Loads the cells selected by `f`, ordered by N then p. When both N and p
/// lists are given every combination is required; otherwise every matching
/// manifest entry is required to be complete.
inline std::vector<CellData> select_cells(const ResultManifest& m, const CellFilter& f, const std::string& what)
{
    std::vector<std::string> missing;
    std::vector<const CellRecord*> chosen;
    auto usable = [&](const CellRecord* c) {
        return c != nullptr && c->status == CellStatus::complete && (!f.need_ancilla || !c->ancilla_file.empty());
    };
    if (!f.sizes.empty() && !f.probabilities.empty()) {
        for (double n : f.sizes) {
            for (double p : f.probabilities) {
                const auto id = cell_id(static_cast<int>(n), f.disorder, f.basis, p);
                const auto* c = m.find(id);
                if (usable(c)) {
                    chosen.push_back(c);
                } else {
                    missing.push_back(id);
                }
            }
        }
    } else {
        for (const auto& c : m.cells) {
            const auto& k = c.config;
            if (k.basis != f.basis || k.disorder_strength != f.disorder || !detail::listed(f.sizes, k.chain_length) ||
                !detail::listed(f.probabilities, k.p)) {
                continue;
            }
            if (usable(&c)) {
                chosen.push_back(&c);
            } else {
                missing.push_back(c.id);
            }
        }
        if (chosen.empty() && missing.empty()) {
            throw MissingCellsError(what + ": no " + std::string(to_string(f.basis)) +
                                        "-basis cells with W = " + format_shortest(f.disorder),
                                    {});
        }
    }
    if (!missing.empty()) {
        throw MissingCellsError(what, missing);
    }
    std::sort(chosen.begin(), chosen.end(), [](const auto* a, const auto* b) {
        return std::make_tuple(a->config.chain_length, a->config.p) <
               std::make_tuple(b->config.chain_length, b->config.p);
    });
    std::vector<CellData> out;
    for (const auto* c : chosen) {
        out.push_back({*c, m.load_cell(c->id)});
    }
    return out;
}

/// Steady state of one observable over the final `window` fraction.
inline SteadyStateValue steady_value(const TimeSeriesRecord& r, const std::string& name, double window = 0.25)
{
    const auto& s = r.at(name);
    const double t_start = r.times.back() - window * (r.times.back() - r.times.front());
    return steady_state_value(r.times, s.mean, s.sem, t_start);
}

/// I3 is reported with its sign flipped so that the plotted quantity is
/// non-negative; every other observable keeps its sign.
inline double observable_sign(const std::string& name)
{
    return name == "I3" ? -1.0 : 1.0;
}

inline void require_observable(const std::vector<CellData>& cells, const std::string& name, const std::string& what)
{
    std::vector<std::string> lacking;
    for (const auto& c : cells) {
        if (!c.series.has(name)) {
            lacking.push_back(c.record.id);
        }
    }
    if (!lacking.empty()) {
        throw MissingCellsError(what + ": observable '" + name + "' not recorded", lacking);
    }
}

inline json parameters_json(const analysis::CollapseResult& r)
{
    json params = json::array();
    for (const auto& p : r.parameters) {
        params.push_back({{"name", p.name},
                          {"value", p.value},
                          {"lower", p.lower},
                          {"upper", p.upper},
                          {"lower_unbounded", p.lower_unbounded},
                          {"upper_unbounded", p.upper_unbounded}});
    }
    return params;
}

inline json collapse_json(const analysis::CollapseResult& r)
{
    return {{"parameters", parameters_json(r)},
            {"cost", r.cost_min},
            {"non_convergent", r.non_convergent},
            {"unbounded", r.unbounded}};
}

/// Steady-state points of a static finite-size family.
inline std::vector<analysis::CollapsePoint> steady_points(const std::vector<CellData>& cells, const std::string& obs,
                                                          double window)
{
    std::vector<analysis::CollapsePoint> pts;
    for (const auto& c : cells) {
        const auto v = steady_value(c.series, obs, window);
        pts.push_back({c.p(), c.size(), observable_sign(obs) * v.value, v.sem});
    }
    return pts;
}

/// Time-series points with t in [t_min, t_max], p > 0 and t > 0.
inline std::vector<analysis::DynamicPoint> dynamic_points(const std::vector<CellData>& cells, const std::string& obs,
                                                          double t_min, double t_max)
{
    std::vector<analysis::DynamicPoint> pts;
    for (const auto& c : cells) {
        if (!(c.p() > 0.0)) {
            continue;
        }
        const auto& s = c.series.at(obs);
        for (std::size_t i = 0; i < c.series.times.size(); ++i) {
            const double t = c.series.times[i];
            if (t > 0.0 && t >= t_min && t <= t_max) {
                pts.push_back({t, c.p(), c.size(), observable_sign(obs) * s.mean[i], s.sem[i]});
            }
        }
    }
    return pts;
}

/// Labels used by fit_dynamic_collapse for each (p, N) curve, in first-seen order.
inline std::vector<std::pair<double, int>> dynamic_labels(const std::vector<analysis::DynamicPoint>& pts)
{
    std::map<std::pair<double, int>, int> labels;
    for (const auto& p : pts) {
        labels.try_emplace({p.p, p.size}, static_cast<int>(labels.size()));
    }
    std::vector<std::pair<double, int>> out(labels.size());
    for (const auto& [key, k] : labels) {
        out[static_cast<std::size_t>(k)] = key;
    }
    return out;
}

inline analysis::ExponentialFit decay_fit(const TimeSeriesRecord& r, const std::string& obs, double t_max)
{
    std::vector<double> t;
    std::vector<double> y;
    const auto& s = r.at(obs);
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        if (r.times[i] <= t_max) {
            t.push_back(r.times[i]);
            y.push_back(s.mean[i]);
        }
    }
    return analysis::fit_exponential_decay(t, y);
}

inline analysis::Peak i3_peak(const TimeSeriesRecord& r, const std::string& obs)
{
    const auto& s = r.at(obs);
    std::vector<double> y;
    for (double v : s.mean) {
        y.push_back(observable_sign(obs) * v);
    }
    return analysis::find_peak(r.times, y);
}

/// Renyi indices of the recorded S_n(l) profiles, von Neumann first.
inline std::vector<double> profile_indices(const TrajectoryConfig& c)
{
    std::vector<double> out{1.0};
    for (double n : c.observables.renyi_indices) {
        if (n != 1.0) {
            out.push_back(n);
        }
    }
    return out;
}

struct ProfilePoint {
    int l = 0;
    double value = 0.0;
    double sem = 0.0;
};

inline std::vector<ProfilePoint> steady_profile(const CellData& c, double n, double window)
{
    std::vector<ProfilePoint> out;
    for (int l = 1; l <= c.size() / 2; ++l) {
        const auto v = steady_value(c.series, profile_name(n, l), window);
        out.push_back({l, v.value, v.sem});
    }
    return out;
}

inline void require_profiles(const std::vector<CellData>& cells, const std::string& what)
{
    std::vector<std::string> lacking;
    for (const auto& c : cells) {
        if (!c.record.config.observables.entropy_vs_l) {
            lacking.push_back(c.record.id);
        }
    }
    if (!lacking.empty()) {
        throw MissingCellsError(what + ": entropy_vs_l not recorded", lacking);
    }
}

struct RenyiAnalysis {
    std::vector<double> indices;
    std::vector<analysis::LogScalingFit> fits;
    analysis::RenyiCoefficientFit coefficient;
};

inline RenyiAnalysis renyi_analysis(const CellData& c, int l_min, double window)
{
    RenyiAnalysis r;
    r.indices = profile_indices(c.record.config);
    std::vector<double> alpha;
    for (double n : r.indices) {
        std::vector<double> l;
        std::vector<double> s;
        for (const auto& pt : steady_profile(c, n, window)) {
            if (pt.l >= l_min) {
                l.push_back(pt.l);
                s.push_back(pt.value);
            }
        }
        r.fits.push_back(analysis::fit_log_scaling(l, s));
        alpha.push_back(r.fits.back().alpha);
    }
    r.coefficient = analysis::fit_renyi_coefficient(r.indices, alpha);
    return r;
}

inline std::vector<analysis::AncillaSeries> ancilla_series(const ResultManifest& m, const std::vector<CellData>& cells)
{
    std::vector<analysis::AncillaSeries> out;
    for (const auto& c : cells) {
        const auto anc = m.load_ancilla(c.record.id);
        const auto& s = anc.at("S_ancilla");
        out.push_back({c.size(), c.record.t0.value_or(anc.times.front()), anc.times, s.mean, s.sem});
    }
    return out;
}

struct AnalysisOutput {
    fs::path file;
    json summary;
    std::string text;
};

/// Runs one analysis request against the completed cells of a manifest and
/// writes `<dir>/fits/<name>.ndjson`: a summary record followed by one
/// record per input cell or scaled point. Output depends only on the inputs.
inline AnalysisOutput run_analysis(const ResultManifest& m, const AnalysisRequest& req)
{
    const auto kinds = analysis_kinds();
    const auto kind_it = kinds.find(req.kind);
    if (kind_it == kinds.end()) {
        throw ConfigError("analysis '" + req.name + "': unknown kind '" + req.kind + "'");
    }
    for (const auto& [k, _] : req.params) {
        if (!kind_it->second.count(k)) {
            throw ConfigError("analysis '" + req.name + "': unknown parameter '" + k + "'");
        }
    }
    const bool z_default = req.kind == "decay_rate" || req.kind == "peak_scaling" || req.kind == "dynamic_collapse";
    CellFilter f;
    try {
        f.basis = parse_axis(req.text("basis", z_default ? "Z" : "X"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError("analysis '" + req.name + "': " + e.what());
    }
    f.disorder = req.number("W", 10.0);
    f.sizes = req.numbers("N");
    f.probabilities = req.numbers("p");
    f.need_ancilla = req.kind == "dynamical_exponent";
    const auto what = "analysis '" + req.name + "'";
    const auto cells = select_cells(m, f, what);
    const bool weighted = req.text("sem_weighted", "false") == "true";
    const double window = req.number("window", 0.25);

    json params = json::object();
    for (const auto& [k, v] : req.params) {
        params[k] = v;
    }
    json ids = json::array();
    for (const auto& c : cells) {
        ids.push_back(c.record.id);
    }
    json summary{{"record", "fit"},
                 {"name", req.name},
                 {"kind", req.kind},
                 {"software", kSoftwareName},
                 {"version", kSoftwareVersion},
                 {"params", params},
                 {"cells", ids}};
    std::vector<json> rows;

    if (req.kind == "static_collapse") {
        const auto obs = req.text("observable", "I3");
        require_observable(cells, obs, what);
        const auto pts = steady_points(cells, obs, window);
        analysis::StaticCollapseOptions o;
        o.pc_lower = req.number("p_c_min", o.pc_lower);
        o.pc_upper = req.number("p_c_max", o.pc_upper);
        o.nu_lower = req.number("nu_min", o.nu_lower);
        o.nu_upper = req.number("nu_max", o.nu_upper);
        o.grid_points = static_cast<int>(req.number("grid", o.grid_points));
        o.sem_weighted = weighted;
        const auto r = analysis::fit_static_collapse(pts, o);
        summary["result"] = collapse_json(r);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            rows.push_back({{"record", "scaled_point"},
                            {"cell", cells[i].record.id},
                            {"p", pts[i].control},
                            {"N", pts[i].size},
                            {"value", pts[i].value},
                            {"sem", pts[i].sem},
                            {"x", r.scaled_points[i].x},
                            {"y", r.scaled_points[i].y}});
        }
    } else if (req.kind == "dynamic_collapse") {
        const auto obs = req.text("observable", "I3");
        require_observable(cells, obs, what);
        const auto pts = dynamic_points(cells, obs, req.number("t_min", 0.0),
                                        req.number("t_max", std::numeric_limits<double>::infinity()));
        analysis::DynamicCollapseOptions o;
        o.sem_weighted = weighted;
        const auto r = analysis::fit_dynamic_collapse(pts, o);
        summary["result"] = collapse_json(r);
        const auto labels = dynamic_labels(pts);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto& sp = r.scaled_points[i];
            rows.push_back({{"record", "scaled_point"},
                            {"p", labels[static_cast<std::size_t>(sp.series)].first},
                            {"N", labels[static_cast<std::size_t>(sp.series)].second},
                            {"t", pts[i].t},
                            {"x", sp.x},
                            {"y", sp.y},
                            {"sem", sp.sem}});
        }
    } else if (req.kind == "decay_rate") {
        const auto obs = req.text("observable", "S_diag");
        require_observable(cells, obs, what);
        for (const auto& c : cells) {
            const auto fit = decay_fit(c.series, obs, req.number("t_max", std::numeric_limits<double>::infinity()));
            rows.push_back({{"record", "cell"},
                            {"cell", c.record.id},
                            {"p", c.p()},
                            {"N", c.size()},
                            {"lambda", fit.lambda},
                            {"y0", fit.y0},
                            {"y_inf", fit.y_inf},
                            {"rms_residual", fit.rms_residual},
                            {"poor_fit", fit.poor_fit}});
        }
        summary["result"] = {{"observable", obs}, {"fits", rows.size()}};
    } else if (req.kind == "peak_scaling") {
        const auto obs = req.text("observable", "I3");
        require_observable(cells, obs, what);
        std::map<int, std::vector<std::tuple<double, double, double>>> by_size;
        for (const auto& c : cells) {
            if (!(c.p() > 0.0)) {
                continue;
            }
            const auto pk = i3_peak(c.series, obs);
            by_size[c.size()].emplace_back(c.p(), pk.t_peak, pk.value);
            rows.push_back({{"record", "cell"},
                            {"cell", c.record.id},
                            {"p", c.p()},
                            {"N", c.size()},
                            {"t_peak", pk.t_peak},
                            {"peak_value", pk.value},
                            {"interior", pk.index > 0 && pk.index + 1 < c.series.times.size()}});
        }
        json fits = json::array();
        for (const auto& [n, peaks] : by_size) {
            if (peaks.size() < 3) {
                continue;
            }
            std::vector<double> p;
            std::vector<double> tp;
            std::vector<double> h;
            for (const auto& [pp, t, v] : peaks) {
                p.push_back(pp);
                tp.push_back(t);
                h.push_back(v);
            }
            const auto ft = analysis::fit_power_law(p, tp);
            json entry{{"N", n}, {"t_peak_exponent", ft.exponent}, {"t_peak_prefactor", ft.prefactor}};
            if (std::all_of(h.begin(), h.end(), [](double v) { return v > 0.0; })) {
                const auto fh = analysis::fit_power_law(p, h);
                entry["peak_value_exponent"] = fh.exponent;
                entry["peak_value_prefactor"] = fh.prefactor;
            }
            fits.push_back(entry);
        }
        if (fits.empty()) {
            throw MissingCellsError(what + ": power-law fit needs at least three p > 0 at one N", {});
        }
        summary["result"] = {{"observable", obs}, {"fits", fits}};
    } else if (req.kind == "renyi_scaling") {
        require_profiles(cells, what);
        const int l_min = static_cast<int>(req.number("l_min", 1.0));
        json results = json::array();
        for (const auto& c : cells) {
            const auto ra = renyi_analysis(c, l_min, window);
            for (std::size_t i = 0; i < ra.indices.size(); ++i) {
                rows.push_back({{"record", "log_fit"},
                                {"cell", c.record.id},
                                {"n", format_renyi_index(ra.indices[i])},
                                {"alpha", ra.fits[i].alpha},
                                {"beta", ra.fits[i].beta},
                                {"rms_residual", ra.fits[i].rms_residual}});
            }
            const auto& k = ra.coefficient;
            results.push_back({{"cell", c.record.id},
                               {"alpha_inf", k.alpha_inf},
                               {"rms_residual", k.rms_residual},
                               {"offset_a", k.offset_a},
                               {"offset_b", k.offset_b},
                               {"offset_rms_residual", k.offset_rms_residual},
                               {"offset_preferred", k.offset_preferred}});
        }
        summary["result"] = {{"coefficients", results}};
    } else if (req.kind == "dynamical_exponent") {
        std::set<double> ps;
        for (const auto& c : cells) {
            ps.insert(c.p());
        }
        if (ps.size() != 1) {
            throw ConfigError(what + ": ancilla cells span several p; select one with analysis." + req.name + ".p");
        }
        const auto series = ancilla_series(m, cells);
        analysis::DynamicalExponentOptions o;
        o.z_lower = req.number("z_min", o.z_lower);
        o.z_upper = req.number("z_max", o.z_upper);
        o.sem_weighted = weighted;
        const auto r = analysis::fit_dynamical_exponent(series, req.number("exclusion", 0.0), o);
        summary["result"] = collapse_json(r);
        for (const auto& sp : r.scaled_points) {
            rows.push_back({{"record", "scaled_point"}, {"N", sp.series}, {"x", sp.x}, {"y", sp.y}, {"sem", sp.sem}});
        }
    }

    AnalysisOutput out;
    out.summary = summary;
    out.text = dump17(summary) + "\n";
    for (const auto& r : rows) {
        out.text += dump17(r) + "\n";
    }
    out.file = m.dir / "fits" / (req.name + ".ndjson");
    atomic_write(out.file, out.text);
    return out;
}

inline const std::vector<std::string>& figure_names()
{
    static const std::vector<std::string> names{"fig2",  "fig3a", "fig3b", "fig4", "fig5",
                                                "fig6a", "fig6b", "fig6c", "fig7"};
    return names;
}

struct EmitOptions {
    double critical_p = 0.014;
    double disorder = 10.0;
    double window = 0.25;
};

namespace detail {

struct Table {
    std::string file;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline std::vector<CellData> nearest_p(std::vector<CellData> cells, double target)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : cells) {
        best = std::min(best, std::abs(c.p() - target));
    }
    std::erase_if(cells, [&](const auto& c) { return std::abs(c.p() - target) != best; });
    return cells;
}

inline std::size_t distinct_sizes(const std::vector<CellData>& cells)
{
    std::set<int> n;
    for (const auto& c : cells) {
        n.insert(c.size());
    }
    return n.size();
}

inline Table series_table(const std::string& file, const std::vector<CellData>& cells, const std::string& obs,
                          const std::string& mean_col, const std::string& sem_col)
{
    Table t{file, {"t", mean_col, sem_col, "p", "N"}, {}};
    for (const auto& c : cells) {
        const auto& s = c.series.at(obs);
        for (std::size_t i = 0; i < c.series.times.size(); ++i) {
            t.rows.push_back({c.series.times[i], s.mean[i], s.sem[i], c.p(), static_cast<double>(c.size())});
        }
    }
    return t;
}

inline Table profile_table(const std::string& file, const std::vector<CellData>& cells, double window)
{
    Table t{file, {"l", "S_mean", "sem", "p", "N"}, {}};
    for (const auto& c : cells) {
        for (const auto& pt : steady_profile(c, 1.0, window)) {
            t.rows.push_back({static_cast<double>(pt.l), pt.value, pt.sem, c.p(), static_cast<double>(c.size())});
        }
    }
    return t;
}

inline Table decay_inset(const std::string& file, const std::vector<CellData>& cells)
{
    Table t{file, {"p", "N", "lambda"}, {}};
    for (const auto& c : cells) {
        if (c.p() > 0.0) {
            const auto fit = decay_fit(c.series, "S_diag", std::numeric_limits<double>::infinity());
            t.rows.push_back({c.p(), static_cast<double>(c.size()), fit.lambda});
        }
    }
    return t;
}

} // namespace detail

/// Writes the plot-ready tables of one figure under `<dir>/plots` and
/// returns their paths. fig1 holds diagrams only and is rejected.
inline std::vector<fs::path> emit_plot_data(const ResultManifest& m, const std::string& figure,
                                            const EmitOptions& o = {})
{
    if (figure == "fig1") {
        throw ConfigError("fig1 shows partition and circuit diagrams, not data");
    }
    if (std::find(figure_names().begin(), figure_names().end(), figure) == figure_names().end()) {
        throw ConfigError("unknown figure '" + figure + "'");
    }
    const auto what = "figure " + figure;
    const bool z_basis = figure == "fig2" || figure == "fig3a" || figure == "fig3b" || figure == "fig4";
    CellFilter f{z_basis ? Axis::Z : Axis::X, o.disorder, {}, {}, figure == "fig7"};
    auto cells = select_cells(m, f, what);
    std::vector<detail::Table> tables;

    if (figure == "fig2") {
        require_observable(cells, "I3", what);
        tables.push_back(detail::series_table("fig2.csv", cells, "I3", "I3_mean", "I3_sem"));
        const auto pts = dynamic_points(cells, "I3", 0.0, std::numeric_limits<double>::infinity());
        const auto labels = dynamic_labels(pts);
        if (labels.size() >= 2) {
            const auto r = analysis::fit_dynamic_collapse(pts);
            detail::Table inset{"fig2_inset.csv", {"x", "y", "p", "N"}, {}};
            for (const auto& sp : r.scaled_points) {
                const auto& [p, n] = labels[static_cast<std::size_t>(sp.series)];
                inset.rows.push_back({sp.x, sp.y, p, static_cast<double>(n)});
            }
            tables.push_back(std::move(inset));
            detail::Table params{"fig2_inset_params.csv", {"alpha", "beta", "gamma", "delta", "cost"}, {{}}};
            for (const auto& p : r.parameters) {
                params.rows[0].push_back(p.value);
            }
            params.rows[0].push_back(r.cost_min);
            tables.push_back(std::move(params));
        }
    } else if (figure == "fig3a" || figure == "fig6a") {
        require_profiles(cells, what);
        tables.push_back(detail::profile_table(figure + ".csv", cells, o.window));
    } else if (figure == "fig3b") {
        require_observable(cells, "I3", what);
        detail::Table t{"fig3b.csv", {"p", "N", "t_peak", "I3_max"}, {}};
        for (const auto& c : cells) {
            if (c.p() > 0.0) {
                const auto pk = i3_peak(c.series, "I3");
                t.rows.push_back({c.p(), static_cast<double>(c.size()), pk.t_peak, pk.value});
            }
        }
        tables.push_back(std::move(t));
    } else if (figure == "fig4") {
        require_observable(cells, "S_diag", what);
        tables.push_back(detail::series_table("fig4.csv", cells, "S_diag", "S_diag_mean", "sem"));
        tables.push_back(detail::decay_inset("fig4_inset.csv", cells));
    } else if (figure == "fig5") {
        require_observable(cells, "I3", what);
        tables.push_back(detail::series_table("fig5.csv", cells, "I3", "I3_mean", "I3_sem"));
        detail::Table steady{"fig5_steady.csv", {"p", "N", "I3", "sem"}, {}};
        for (const auto& c : cells) {
            const auto v = steady_value(c.series, "I3", o.window);
            steady.rows.push_back({c.p(), static_cast<double>(c.size()), v.value, v.sem});
        }
        tables.push_back(std::move(steady));
        if (cells.front().series.has("S_diag")) {
            require_observable(cells, "S_diag", what);
            tables.push_back(detail::series_table("fig5_sdiag.csv", cells, "S_diag", "S_diag_mean", "sem"));
            tables.push_back(detail::decay_inset("fig5_sdiag_inset.csv", cells));
        }
        std::set<double> ps;
        for (const auto& c : cells) {
            ps.insert(c.p());
        }
        if (detail::distinct_sizes(cells) >= 2 && ps.size() >= 3) {
            const auto pts = steady_points(cells, "I3", o.window);
            const auto r = analysis::fit_static_collapse(pts);
            detail::Table col{"fig5_collapse.csv", {"x", "y", "sem", "N"}, {}};
            for (const auto& sp : r.scaled_points) {
                col.rows.push_back({sp.x, sp.y, sp.sem, static_cast<double>(sp.series)});
            }
            tables.push_back(std::move(col));
            const auto& pc = r.at("p_c");
            const auto& nu = r.at("nu");
            tables.push_back({"fig5_collapse_params.csv",
                              {"p_c", "p_c_lower", "p_c_upper", "nu", "nu_lower", "nu_upper", "cost"},
                              {{pc.value, pc.lower, pc.upper, nu.value, nu.lower, nu.upper, r.cost_min}}});
        }
    } else if (figure == "fig6b" || figure == "fig6c") {
        cells = detail::nearest_p(std::move(cells), o.critical_p);
        require_profiles(cells, what);
        const auto& c = cells.back(); // largest N at the critical p
        if (figure == "fig6b") {
            detail::Table t{"fig6b.csv", {"n", "l", "S_n", "sem"}, {}};
            for (double n : profile_indices(c.record.config)) {
                for (const auto& pt : steady_profile(c, n, o.window)) {
                    t.rows.push_back({n, static_cast<double>(pt.l), pt.value, pt.sem});
                }
            }
            tables.push_back(std::move(t));
        } else {
            const auto ra = renyi_analysis(c, 1, o.window);
            detail::Table t{"fig6c.csv", {"n", "alpha", "alpha_fit"}, {}};
            for (std::size_t i = 0; i < ra.indices.size(); ++i) {
                const double n = ra.indices[i];
                t.rows.push_back({n, ra.fits[i].alpha, ra.coefficient.alpha_inf * (1.0 + 1.0 / n)});
            }
            tables.push_back(std::move(t));
        }
    } else if (figure == "fig7") {
        cells = detail::nearest_p(std::move(cells), o.critical_p);
        const auto series = ancilla_series(m, cells);
        detail::Table t{"fig7.csv", {"t_minus_t0", "S_ancilla_mean", "sem", "p", "N"}, {}};
        for (std::size_t k = 0; k < series.size(); ++k) {
            const auto& s = series[k];
            for (std::size_t i = 0; i < s.times.size(); ++i) {
                t.rows.push_back(
                    {s.times[i] - s.t0, s.values[i], s.sems[i], cells[k].p(), static_cast<double>(s.size)});
            }
        }
        tables.push_back(std::move(t));
        if (detail::distinct_sizes(cells) >= 2) {
            const auto r = analysis::fit_dynamical_exponent(series, 0.0);
            detail::Table col{"fig7_collapse.csv", {"x", "y", "sem", "N"}, {}};
            for (const auto& sp : r.scaled_points) {
                col.rows.push_back({sp.x, sp.y, sp.sem, static_cast<double>(sp.series)});
            }
            tables.push_back(std::move(col));
            const auto& z = r.at("z");
            tables.push_back(
                {"fig7_params.csv", {"z", "z_lower", "z_upper", "cost"}, {{z.value, z.lower, z.upper, r.cost_min}}});
        }
    }

    std::vector<fs::path> written;
    for (const auto& t : tables) {
        const auto path = m.dir / "plots" / t.file;
        atomic_write(path, table_to_csv(t.header, t.rows));
        written.push_back(path);
    }
    return written;
}

} // namespace mipt::io
