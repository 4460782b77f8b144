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

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mipt::io {

/// Raised for malformed or inconsistent configuration; maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(std::string_view s)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto item = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
        if (!item.empty()) {
            out.emplace_back(item);
        }
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

} // namespace detail

/// Flat `section.key = value` text. `#` starts a comment; values may be
/// comma-separated lists. Keys are case-sensitive and may appear once.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::string_view text)
    {
        KeyValueConfig c;
        int line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto eol = text.find('\n', pos);
            std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
            pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string_view::npos) {
                line = line.substr(0, hash);
            }
            line = detail::trim(line);
            if (line.empty()) {
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
            }
            const std::string key(detail::trim(line.substr(0, eq)));
            const std::string value(detail::trim(line.substr(eq + 1)));
            if (key.empty() || key.find_first_of(" \t") != std::string::npos) {
                throw ConfigError("line " + std::to_string(line_no) + ": malformed key '" + key + "'");
            }
            if (!c.values_.emplace(key, Entry{value, line_no}).second) {
                throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
            }
        }
        return c;
    }

    static KeyValueConfig load(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) {
            throw ConfigError("cannot read config file '" + path + "'");
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    [[nodiscard]] bool has(const std::string& key) const { return values_.count(key) != 0; }

    /// Keys present in the file, for unknown-key detection.
    [[nodiscard]] std::vector<std::string> keys() const
    {
        std::vector<std::string> out;
        for (const auto& [k, _] : values_) {
            out.push_back(k);
        }
        return out;
    }

    [[nodiscard]] std::string raw(const std::string& key) const { return entry(key).value; }

    [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const
    {
        return has(key) ? raw(key) : fallback;
    }

    [[nodiscard]] double get_double(const std::string& key, double fallback) const
    {
        return has(key) ? to_double(key, raw(key)) : fallback;
    }

    [[nodiscard]] long long get_int(const std::string& key, long long fallback) const
    {
        return has(key) ? to_int(key, raw(key)) : fallback;
    }

    [[nodiscard]] std::uint64_t get_uint64(const std::string& key, std::uint64_t fallback) const
    {
        if (!has(key)) {
            return fallback;
        }
        const auto s = raw(key);
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            throw error(key, "expected a non-negative 64-bit integer, got '" + s + "'");
        }
        return v;
    }

    [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const
    {
        if (!has(key)) {
            return fallback;
        }
        const auto s = raw(key);
        if (s == "true" || s == "yes" || s == "1") {
            return true;
        }
        if (s == "false" || s == "no" || s == "0") {
            return false;
        }
        throw error(key, "expected true or false, got '" + s + "'");
    }

    [[nodiscard]] std::vector<std::string> get_list(const std::string& key) const
    {
        return has(key) ? detail::split_list(raw(key)) : std::vector<std::string>{};
    }

    [[nodiscard]] std::vector<double> get_double_list(const std::string& key) const
    {
        std::vector<double> out;
        for (const auto& s : get_list(key)) {
            out.push_back(to_double(key, s));
        }
        return out;
    }

    [[nodiscard]] std::vector<long long> get_int_list(const std::string& key) const
    {
        std::vector<long long> out;
        for (const auto& s : get_list(key)) {
            out.push_back(to_int(key, s));
        }
        return out;
    }

    [[nodiscard]] ConfigError error(const std::string& key, const std::string& what) const
    {
        const auto it = values_.find(key);
        const std::string where = it == values_.end() ? "" : "line " + std::to_string(it->second.line) + ": ";
        return ConfigError(where + key + ": " + what);
    }

private:
    struct Entry {
        std::string value;
        int line = 0;
    };

    [[nodiscard]] const Entry& entry(const std::string& key) const
    {
        const auto it = values_.find(key);
        if (it == values_.end()) {
            throw ConfigError("missing required key '" + key + "'");
        }
        return it->second;
    }

    [[nodiscard]] double to_double(const std::string& key, const std::string& s) const
    {
        if (s == "inf" || s == "infinity") {
            return std::numeric_limits<double>::infinity();
        }
        double v = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
            throw error(key, "expected a number, got '" + s + "'");
        }
        return v;
    }

    [[nodiscard]] long long to_int(const std::string& key, const std::string& s) const
    {
        long long v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            throw error(key, "expected an integer, got '" + s + "'");
        }
        return v;
    }

    std::map<std::string, Entry> values_;
};

} // namespace mipt::io
