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

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mipt {

/// Basis states are 64-bit integers; bit i encodes site i, 1 = spin up.
using BasisIndex = std::uint64_t;

inline constexpr int kMaxChainLength = 16;

/// A lattice site of an N-site chain.
class SiteIndex {
public:
    SiteIndex(int value, int chain_length) : value_(value)
    {
        if (value < 0 || value >= chain_length) {
            throw std::out_of_range("site " + std::to_string(value) + " outside chain of length " +
                                    std::to_string(chain_length));
        }
    }

    [[nodiscard]] int value() const noexcept { return value_; }
    operator int() const noexcept { return value_; }

private:
    int value_;
};

/// Twice the total S^z of a basis state: 2 * popcount(b) - N.
inline int sector_of(BasisIndex basis_index, int chain_length)
{
    if (chain_length < 1 || chain_length > 62 || basis_index >= (BasisIndex{1} << chain_length)) {
        throw std::out_of_range("basis index outside the 2^N computational basis");
    }
    return 2 * std::popcount(basis_index) - chain_length;
}

struct Sector {
    int magnetization;                     // 2 * total S^z
    std::vector<BasisIndex> basis_indices; // ascending
};

/// Computational basis grouped into total-S^z sectors.
///
/// Sectors are stored in ascending magnetization order. `position(b)` gives
/// the offset of basis state b inside its sector, so gathering a full-space
/// vector into sector order is a single indexed pass.
class SectorBasis {
public:
    explicit SectorBasis(int chain_length) : chain_length_(chain_length)
    {
        const BasisIndex dim = BasisIndex{1} << chain_length;
        sectors_.resize(static_cast<std::size_t>(chain_length) + 1);
        for (int k = 0; k <= chain_length; ++k) {
            sectors_[k].magnetization = 2 * k - chain_length;
        }
        position_.resize(dim);
        for (BasisIndex b = 0; b < dim; ++b) {
            auto& s = sectors_[std::popcount(b)];
            position_[b] = static_cast<std::uint32_t>(s.basis_indices.size());
            s.basis_indices.push_back(b);
        }
    }

    [[nodiscard]] int chain_length() const noexcept { return chain_length_; }
    [[nodiscard]] std::size_t dimension() const noexcept { return position_.size(); }
    [[nodiscard]] const std::vector<Sector>& sectors() const noexcept { return sectors_; }
    [[nodiscard]] std::size_t size() const noexcept { return sectors_.size(); }
    [[nodiscard]] const Sector& operator[](std::size_t i) const { return sectors_.at(i); }

    /// Index into sectors() of the sector holding magnetization m.
    [[nodiscard]] std::size_t sector_slot(int magnetization) const
    {
        if ((magnetization + chain_length_) % 2 != 0 || magnetization < -chain_length_ ||
            magnetization > chain_length_) {
            throw std::out_of_range("no sector with magnetization " + std::to_string(magnetization));
        }
        return static_cast<std::size_t>((magnetization + chain_length_) / 2);
    }

    [[nodiscard]] std::uint32_t position(BasisIndex b) const { return position_.at(b); }

private:
    int chain_length_;
    std::vector<Sector> sectors_;
    std::vector<std::uint32_t> position_;
};

inline SectorBasis enumerate_sectors(int chain_length)
{
    if (chain_length < 1 || chain_length > kMaxChainLength) {
        throw std::invalid_argument("chain length " + std::to_string(chain_length) + " outside supported range [1, " +
                                    std::to_string(kMaxChainLength) + "]");
    }
    return SectorBasis(chain_length);
}

} // namespace mipt
