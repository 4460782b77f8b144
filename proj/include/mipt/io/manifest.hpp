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

#include <openssl/evp.h>

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mipt/io/plan.hpp"
#include "mipt/trajectory.hpp"

#ifndef MIPT_VERSION
#define MIPT_VERSION "0.0.0"
#endif

namespace mipt::io {

namespace fs = std::filesystem;

inline constexpr const char* kSoftwareName = "mipt";
inline constexpr const char* kSoftwareVersion = MIPT_VERSION;

inline std::string sha256_hex(std::string_view data)
{
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
        throw std::runtime_error("SHA-256 computation failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 15]);
    }
    return out;
}

inline std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot read '" + path.string() + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes to a sibling temporary and renames it over `path`, so readers see
/// either the old or the new content.
inline void atomic_write(const fs::path& path, std::string_view content)
{
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            throw std::runtime_error("cannot write '" + tmp.string() + "'");
        }
    }
    fs::rename(tmp, path);
}

/// %.17g, which round-trips every finite double.
inline std::string format17(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Compact JSON with every float printed to 17 significant digits.
/// Non-finite floats are written as null.
inline void dump17(const json& j, std::string& out)
{
    switch (j.type()) {
    case json::value_t::object: {
        out.push_back('{');
        bool first = true;
        for (const auto& [k, v] : j.items()) {
            if (!first) {
                out.push_back(',');
            }
            first = false;
            out += json(k).dump();
            out.push_back(':');
            dump17(v, out);
        }
        out.push_back('}');
        break;
    }
    case json::value_t::array: {
        out.push_back('[');
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) {
                out.push_back(',');
            }
            dump17(j[i], out);
        }
        out.push_back(']');
        break;
    }
    case json::value_t::number_float: {
        const double v = j.get<double>();
        out += std::isfinite(v) ? format17(v) : "null";
        break;
    }
    default:
        out += j.dump();
    }
}

inline std::string dump17(const json& j)
{
    std::string out;
    dump17(j, out);
    return out;
}

/// Header `t,<obs>_mean,<obs>_sem,...,n_samples`, one row per sampled time.
inline std::string series_to_csv(const TimeSeriesRecord& r)
{
    std::string out = "t";
    for (const auto& o : r.observables) {
        out += "," + o.name + "_mean," + o.name + "_sem";
    }
    out += ",n_samples\n";
    const std::size_t n = r.observables.empty() ? 0 : r.observables.front().n_samples;
    for (std::size_t i = 0; i < r.times.size(); ++i) {
        out += format17(r.times[i]);
        for (const auto& o : r.observables) {
            out += "," + format17(o.mean[i]) + "," + format17(o.sem[i]);
        }
        out += "," + std::to_string(n) + "\n";
    }
    return out;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    [[nodiscard]] std::size_t column(const std::string& name) const
    {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        throw std::out_of_range("no column '" + name + "'");
    }
};

inline double parse_csv_number(const std::string& s)
{
    if (s == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (s == "inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (s == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::runtime_error("malformed CSV number '" + s + "'");
    }
    return v;
}

inline CsvTable parse_csv(const std::string& text)
{
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(l);
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        return cells;
    };
    if (!std::getline(in, line)) {
        throw std::runtime_error("empty CSV");
    }
    t.header = split(line);
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != t.header.size()) {
            throw std::runtime_error("CSV row width differs from header");
        }
        std::vector<double> row;
        for (const auto& c : cells) {
            row.push_back(parse_csv_number(c));
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline std::string table_to_csv(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows)
{
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        out += (i ? "," : "") + header[i];
    }
    out += "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out += (i ? "," : "") + format17(row[i]);
        }
        out += "\n";
    }
    return out;
}

/// Inverse of series_to_csv; config and drift come from the manifest.
inline TimeSeriesRecord series_from_csv(const std::string& text, const TrajectoryConfig& config, double drift)
{
    const auto t = parse_csv(text);
    if (t.header.size() < 2 || t.header.front() != "t" || t.header.back() != "n_samples" ||
        (t.header.size() - 2) % 2 != 0) {
        throw std::runtime_error("unexpected time-series header");
    }
    TimeSeriesRecord r;
    r.config = config;
    r.max_norm_drift = drift;
    const std::size_t n_obs = (t.header.size() - 2) / 2;
    for (std::size_t o = 0; o < n_obs; ++o) {
        const auto& h = t.header[1 + 2 * o];
        if (h.size() < 6 || h.substr(h.size() - 5) != "_mean") {
            throw std::runtime_error("unexpected column '" + h + "'");
        }
        r.observables.push_back({h.substr(0, h.size() - 5), {}, {}, 0});
    }
    for (const auto& row : t.rows) {
        r.times.push_back(row.front());
        for (std::size_t o = 0; o < n_obs; ++o) {
            r.observables[o].mean.push_back(row[1 + 2 * o]);
            r.observables[o].sem.push_back(row[2 + 2 * o]);
        }
        for (auto& o : r.observables) {
            o.n_samples = static_cast<std::size_t>(row.back());
        }
    }
    return r;
}

enum class CellStatus { pending, complete, failed };

inline const char* to_string(CellStatus s) noexcept
{
    switch (s) {
    case CellStatus::complete:
        return "complete";
    case CellStatus::failed:
        return "failed";
    default:
        return "pending";
    }
}

inline CellStatus parse_status(const std::string& s)
{
    if (s == "complete") {
        return CellStatus::complete;
    }
    if (s == "failed") {
        return CellStatus::failed;
    }
    if (s == "pending") {
        return CellStatus::pending;
    }
    throw std::runtime_error("unknown cell status '" + s + "'");
}

/// Hash of everything that determines a cell's output.
inline std::string config_hash(const Cell& c)
{
    json j{{"config", config_to_json(c.config)},
           {"ancilla", {{"enabled", c.ancilla.enabled}, {"reference_site", c.ancilla.reference_site}}}};
    if (c.ancilla.t0) {
        j["ancilla"]["t0"] = *c.ancilla.t0;
    }
    return sha256_hex(dump17(j));
}

struct CellRecord {
    std::string id;
    CellStatus status = CellStatus::pending;
    std::string config_hash;
    TrajectoryConfig config;
    std::string file;         // relative to the output directory
    std::string content_hash; // of `file`
    std::string ancilla_file;
    std::string ancilla_hash;
    std::optional<double> t0;
    double wall_seconds = 0.0;
    double max_norm_drift = 0.0;
    double ancilla_norm_drift = 0.0;
    std::string error;

    [[nodiscard]] json to_json() const
    {
        json j{{"record", "cell"},
               {"id", id},
               {"status", to_string(status)},
               {"config_hash", config_hash},
               {"config", config_to_json(config)}};
        if (status == CellStatus::complete) {
            j["file"] = file;
            j["content_hash"] = content_hash;
            j["wall_seconds"] = wall_seconds;
            j["max_norm_drift"] = max_norm_drift;
            if (!ancilla_file.empty()) {
                j["ancilla_file"] = ancilla_file;
                j["ancilla_hash"] = ancilla_hash;
                j["ancilla_norm_drift"] = ancilla_norm_drift;
            }
            if (t0) {
                j["t0"] = *t0;
            }
        }
        if (status == CellStatus::failed) {
            j["error"] = error;
            j["wall_seconds"] = wall_seconds;
        }
        return j;
    }

    static CellRecord from_json(const json& j)
    {
        CellRecord r;
        r.id = j.at("id").get<std::string>();
        r.status = parse_status(j.at("status").get<std::string>());
        r.config_hash = j.at("config_hash").get<std::string>();
        r.config = config_from_json(j.at("config"));
        r.file = j.value("file", "");
        r.content_hash = j.value("content_hash", "");
        r.ancilla_file = j.value("ancilla_file", "");
        r.ancilla_hash = j.value("ancilla_hash", "");
        if (j.contains("t0")) {
            r.t0 = j.at("t0").get<double>();
        }
        r.wall_seconds = j.value("wall_seconds", 0.0);
        r.max_norm_drift = j.value("max_norm_drift", 0.0);
        r.ancilla_norm_drift = j.value("ancilla_norm_drift", 0.0);
        r.error = j.value("error", "");
        return r;
    }
};

/// Per-cell status plus provenance; stored next to the data as
/// manifest.ndjson (one header line, then one line per cell).
struct ResultManifest {
    fs::path dir;
    std::string software = kSoftwareName;
    std::string version = kSoftwareVersion;
    std::vector<CellRecord> cells;

    static fs::path path_in(const fs::path& dir) { return dir / "manifest.ndjson"; }

    [[nodiscard]] const CellRecord* find(const std::string& id) const
    {
        for (const auto& c : cells) {
            if (c.id == id) {
                return &c;
            }
        }
        return nullptr;
    }

    [[nodiscard]] CellRecord* find(const std::string& id)
    {
        return const_cast<CellRecord*>(std::as_const(*this).find(id));
    }

    [[nodiscard]] std::string serialize() const
    {
        std::string out =
            dump17(json{{"record", "header"}, {"software", software}, {"version", version}, {"cells", cells.size()}});
        out += "\n";
        for (const auto& c : cells) {
            out += dump17(c.to_json()) + "\n";
        }
        return out;
    }

    void save() const { atomic_write(path_in(dir), serialize()); }

    static ResultManifest parse(const std::string& text, const fs::path& dir)
    {
        ResultManifest m;
        m.dir = dir;
        std::istringstream in(text);
        std::string line;
        bool header = false;
        while (std::getline(in, line)) {
            if (line.empty()) {
                continue;
            }
            json j;
            try {
                j = json::parse(line);
            } catch (const json::exception& e) {
                throw std::runtime_error("malformed manifest line: " + std::string(e.what()));
            }
            const auto kind = j.value("record", "");
            if (kind == "header") {
                m.software = j.value("software", "");
                m.version = j.value("version", "");
                header = true;
            } else if (kind == "cell") {
                m.cells.push_back(CellRecord::from_json(j));
            } else {
                throw std::runtime_error("unknown manifest record '" + kind + "'");
            }
        }
        if (!header) {
            throw std::runtime_error("manifest has no header record");
        }
        return m;
    }

    static ResultManifest load(const fs::path& dir) { return parse(read_file(path_in(dir)), dir); }

    /// A complete cell whose files still hash to the recorded values.
    [[nodiscard]] bool verified(const CellRecord& c) const
    {
        if (c.status != CellStatus::complete) {
            return false;
        }
        try {
            if (sha256_hex(read_file(dir / c.file)) != c.content_hash) {
                return false;
            }
            if (!c.ancilla_file.empty() && sha256_hex(read_file(dir / c.ancilla_file)) != c.ancilla_hash) {
                return false;
            }
        } catch (const std::exception&) {
            return false;
        }
        return true;
    }

    /// Time series of a complete cell, read back bit-exactly.
    [[nodiscard]] TimeSeriesRecord load_cell(const std::string& id) const
    {
        const auto* c = find(id);
        if (c == nullptr || c->status != CellStatus::complete) {
            throw std::runtime_error("cell " + id + " is not complete");
        }
        return series_from_csv(read_file(dir / c->file), c->config, c->max_norm_drift);
    }

    [[nodiscard]] TimeSeriesRecord load_ancilla(const std::string& id) const
    {
        const auto* c = find(id);
        if (c == nullptr || c->status != CellStatus::complete || c->ancilla_file.empty()) {
            throw std::runtime_error("cell " + id + " has no ancilla series");
        }
        return series_from_csv(read_file(dir / c->ancilla_file), c->config, c->ancilla_norm_drift);
    }
};

} // namespace mipt::io
