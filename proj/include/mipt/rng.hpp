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

#include <cstdint>
#include <random>

namespace mipt {

/// Per-trajectory random engine. mt19937_64 output is fixed by the standard,
/// and the helpers below avoid the implementation-defined std distributions,
/// so streams are reproducible across toolchains.
using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based seed derivation: each (master, stream kind, i, j) tuple maps
/// to an independent 64-bit seed without consuming any generator state.
enum class StreamKind : std::uint64_t { disorder = 1, trajectory = 2, cell = 3 };

inline constexpr std::uint64_t derive_seed(std::uint64_t master, StreamKind kind, std::uint64_t i,
                                           std::uint64_t j = 0) noexcept
{
    std::uint64_t h = splitmix64(master ^ 0x6a09e667f3bcc909ULL);
    h = splitmix64(h ^ static_cast<std::uint64_t>(kind));
    h = splitmix64(h ^ i);
    h = splitmix64(h ^ (j * 0xd1b54a32d192ed03ULL));
    return h;
}

inline std::uint64_t disorder_seed(std::uint64_t master, std::uint64_t disorder_index) noexcept
{
    return derive_seed(master, StreamKind::disorder, disorder_index);
}

inline std::uint64_t trajectory_seed(std::uint64_t master, std::uint64_t disorder_index,
                                     std::uint64_t trajectory_index) noexcept
{
    return derive_seed(master, StreamKind::trajectory, disorder_index, trajectory_index + 1);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) noexcept
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) noexcept
{
    return lo + (hi - lo) * uniform01(rng);
}

inline bool bernoulli(Rng& rng, double p) noexcept
{
    return uniform01(rng) < p;
}

} // namespace mipt
