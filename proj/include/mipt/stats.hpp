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

#include <cmath>
#include <cstddef>

namespace mipt {

/// Mean and variance accumulator with Chan et al. pairwise merging.
struct RunningStats {
    std::size_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) noexcept
    {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }

    void merge(const RunningStats& other) noexcept
    {
        if (other.count == 0) {
            return;
        }
        if (count == 0) {
            *this = other;
            return;
        }
        const double n_a = static_cast<double>(count);
        const double n_b = static_cast<double>(other.count);
        const double n = n_a + n_b;
        const double delta = other.mean - mean;
        mean += delta * n_b / n;
        m2 += other.m2 + delta * delta * n_a * n_b / n;
        count += other.count;
    }

    [[nodiscard]] double variance() const noexcept { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }

    /// Standard error of the mean; zero for a single sample.
    [[nodiscard]] double sem() const noexcept
    {
        return count > 1 ? std::sqrt(variance() / static_cast<double>(count)) : 0.0;
    }
};

} // namespace mipt
