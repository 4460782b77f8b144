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

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mipt/hilbert.hpp"
#include "mipt/rng.hpp"
#include "mipt/state.hpp"

namespace mipt {

enum class Boundary { periodic, open };

/// Random on-site fields h_i ~ U[-W J, W J], in units of J.
struct DisorderRealization {
    std::vector<double> fields;
    double disorder_strength = 0.0; // W = h / J
    double coupling = 1.0;          // J
    std::uint64_t seed = 0;
};

inline DisorderRealization sample_disorder(double disorder_strength, double coupling, int chain_length,
                                           std::uint64_t seed)
{
    if (!(coupling > 0.0)) {
        throw std::invalid_argument("coupling J must be positive");
    }
    if (!(disorder_strength >= 0.0)) {
        throw std::invalid_argument("disorder strength W must be non-negative");
    }
    if (chain_length < 1) {
        throw std::invalid_argument("chain length must be positive");
    }
    DisorderRealization r{{}, disorder_strength, coupling, seed};
    r.fields.reserve(static_cast<std::size_t>(chain_length));
    Rng rng(seed);
    const double h = disorder_strength * coupling;
    for (int i = 0; i < chain_length; ++i) {
        r.fields.push_back(uniform(rng, -h, h));
    }
    return r;
}

/// Nearest-neighbour bonds (i, j) of the chain.
inline std::vector<std::pair<int, int>> chain_bonds(int chain_length, Boundary boundary)
{
    std::vector<std::pair<int, int>> bonds;
    for (int i = 0; i + 1 < chain_length; ++i) {
        bonds.emplace_back(i, i + 1);
    }
    if (boundary == Boundary::periodic && chain_length >= 3) {
        bonds.emplace_back(chain_length - 1, 0);
    }
    return bonds;
}

/// Heisenberg Hamiltonian J sum S_i.S_j + sum h_i S^z_i stored per S^z sector.
/// All matrix elements are real, so blocks are real symmetric.
struct BlockHamiltonian {
    std::shared_ptr<const SectorBasis> basis;
    std::vector<Eigen::MatrixXd> blocks;
    Boundary boundary = Boundary::periodic;

    [[nodiscard]] int chain_length() const { return basis->chain_length(); }

    /// Assemble the full 2^N x 2^N matrix (small N only).
    [[nodiscard]] Eigen::MatrixXd dense() const
    {
        const auto dim = static_cast<Eigen::Index>(basis->dimension());
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
        for (std::size_t s = 0; s < blocks.size(); ++s) {
            const auto& idx = (*basis)[s].basis_indices;
            for (std::size_t a = 0; a < idx.size(); ++a) {
                for (std::size_t b = 0; b < idx.size(); ++b) {
                    h(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b])) =
                        blocks[s](static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
                }
            }
        }
        return h;
    }
};

inline BlockHamiltonian build_hamiltonian(int chain_length, const DisorderRealization& realization, Boundary boundary)
{
    if (static_cast<int>(realization.fields.size()) != chain_length) {
        throw std::invalid_argument("disorder realization has " + std::to_string(realization.fields.size()) +
                                    " fields for a chain of length " + std::to_string(chain_length));
    }
    if (chain_length < 2) {
        throw std::invalid_argument("Hamiltonian needs at least two sites");
    }
    if (chain_length == 2 && boundary == Boundary::periodic) {
        throw std::invalid_argument("periodic boundary is ambiguous for N = 2; use open");
    }
    const double j = realization.coupling;
    const auto bonds = chain_bonds(chain_length, boundary);

    BlockHamiltonian h;
    h.basis = std::make_shared<const SectorBasis>(enumerate_sectors(chain_length));
    h.boundary = boundary;
    h.blocks.reserve(h.basis->size());
    for (const auto& sector : h.basis->sectors()) {
        const auto d = static_cast<Eigen::Index>(sector.basis_indices.size());
        Eigen::MatrixXd block = Eigen::MatrixXd::Zero(d, d);
        for (Eigen::Index a = 0; a < d; ++a) {
            const BasisIndex state = sector.basis_indices[static_cast<std::size_t>(a)];
            double diag = 0.0;
            for (int i = 0; i < chain_length; ++i) {
                diag += realization.fields[static_cast<std::size_t>(i)] * (((state >> i) & 1U) ? 0.5 : -0.5);
            }
            for (const auto& [i, k] : bonds) {
                const bool same = ((state >> i) & 1U) == ((state >> k) & 1U);
                diag += same ? 0.25 * j : -0.25 * j;
                if (!same) {
                    const BasisIndex flipped = state ^ ((BasisIndex{1} << i) | (BasisIndex{1} << k));
                    block(a, h.basis->position(flipped)) += 0.5 * j;
                }
            }
            block(a, a) = diag;
        }
        h.blocks.push_back(std::move(block));
    }
    return h;
}

/// Spectral decomposition of each sector block; eigenvalues ascending.
struct EigenSystem {
    std::shared_ptr<const SectorBasis> basis;
    std::vector<Eigen::VectorXd> eigenvalues;
    std::vector<Eigen::MatrixXd> eigenvectors; // columns, real orthogonal

    [[nodiscard]] int chain_length() const { return basis->chain_length(); }
};

inline EigenSystem diagonalize(const BlockHamiltonian& h)
{
    EigenSystem eig;
    eig.basis = h.basis;
    eig.eigenvalues.reserve(h.blocks.size());
    eig.eigenvectors.reserve(h.blocks.size());
    for (const auto& block : h.blocks) {
        const double scale = std::max(1.0, block.norm());
        if ((block - block.transpose()).norm() > 1e-12 * scale) {
            throw std::invalid_argument("Hamiltonian block is not Hermitian");
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(block);
        if (solver.info() != Eigen::Success) {
            throw std::runtime_error("eigendecomposition failed");
        }
        eig.eigenvalues.push_back(solver.eigenvalues());
        eig.eigenvectors.push_back(solver.eigenvectors());
    }
    return eig;
}

namespace detail {

/// Applies exp(-i H dt) to every 2^N-dimensional column in `columns`. Each
/// sector of all columns is gathered into one (d x 2k) real matrix holding the
/// real and imaginary parts, so both rotations are real GEMMs and the
/// eigenvectors are streamed once per call rather than once per column.
inline void evolve_columns(std::span<Complex* const> columns, const EigenSystem& eig, double dt)
{
    const auto k = static_cast<Eigen::Index>(columns.size());
    const auto& sectors = eig.basis->sectors();
    for (std::size_t s = 0; s < sectors.size(); ++s) {
        const auto& idx = sectors[s].basis_indices;
        const auto d = static_cast<Eigen::Index>(idx.size());
        const auto& v = eig.eigenvectors[s];
        const auto& e = eig.eigenvalues[s];
        if (d == 1) {
            const Complex phase = std::polar(1.0, -e[0] * dt);
            for (Complex* c : columns) {
                c[idx[0]] *= phase;
            }
            continue;
        }
        Eigen::MatrixXd x(d, 2 * k);
        for (Eigen::Index j = 0; j < k; ++j) {
            const Complex* c = columns[static_cast<std::size_t>(j)];
            for (Eigen::Index a = 0; a < d; ++a) {
                const Complex z = c[idx[static_cast<std::size_t>(a)]];
                x(a, 2 * j) = z.real();
                x(a, 2 * j + 1) = z.imag();
            }
        }
        Eigen::MatrixXd y = v.transpose() * x;
        for (Eigen::Index m = 0; m < d; ++m) {
            const double cs = std::cos(e[m] * dt);
            const double sn = std::sin(e[m] * dt);
            for (Eigen::Index j = 0; j < k; ++j) {
                const double re = y(m, 2 * j);
                const double im = y(m, 2 * j + 1);
                y(m, 2 * j) = cs * re + sn * im;
                y(m, 2 * j + 1) = cs * im - sn * re;
            }
        }
        x.noalias() = v * y;
        for (Eigen::Index j = 0; j < k; ++j) {
            Complex* c = columns[static_cast<std::size_t>(j)];
            for (Eigen::Index a = 0; a < d; ++a) {
                c[idx[static_cast<std::size_t>(a)]] = Complex(x(a, 2 * j), x(a, 2 * j + 1));
            }
        }
    }
}

inline void append_slices(std::vector<Complex*>& columns, StateVector& state, int chain_length)
{
    if (state.qubits() < chain_length) {
        throw std::invalid_argument("state has " + std::to_string(state.qubits()) + " qubits; eigensystem is for " +
                                    std::to_string(chain_length));
    }
    const Eigen::Index block = Eigen::Index{1} << chain_length;
    for (Eigen::Index offset = 0; offset < state.dimension(); offset += block) {
        columns.push_back(state.amplitudes().data() + offset);
    }
}

} // namespace detail

/// exp(-i H dt)|state>. For a state with more qubits than the chain (ancilla
/// bits above the chain), the chain unitary acts on every ancilla branch.
inline StateVector evolve(StateVector state, const EigenSystem& eig, double dt)
{
    std::vector<Complex*> columns;
    detail::append_slices(columns, state, eig.chain_length());
    if (dt != 0.0) {
        detail::evolve_columns(columns, eig, dt);
    }
    return state;
}

/// Evolves several states under the same Hamiltonian in one pass. Agrees with
/// evolve() on each state up to rounding.
inline void evolve_batch(std::span<StateVector> states, const EigenSystem& eig, double dt)
{
    std::vector<Complex*> columns;
    for (auto& s : states) {
        detail::append_slices(columns, s, eig.chain_length());
    }
    if (dt != 0.0 && !columns.empty()) {
        detail::evolve_columns(columns, eig, dt);
    }
}

/// <psi|H|psi> using the block form.
inline double energy(const StateVector& state, const BlockHamiltonian& h)
{
    if (state.qubits() != h.chain_length()) {
        throw std::invalid_argument("state and Hamiltonian sizes differ");
    }
    double e = 0.0;
    for (std::size_t s = 0; s < h.blocks.size(); ++s) {
        const auto& idx = (*h.basis)[s].basis_indices;
        Eigen::VectorXcd v(static_cast<Eigen::Index>(idx.size()));
        for (std::size_t a = 0; a < idx.size(); ++a) {
            v[static_cast<Eigen::Index>(a)] = state[static_cast<Eigen::Index>(idx[a])];
        }
        e += v.dot(h.blocks[s].cast<Complex>() * v).real();
    }
    return e;
}

} // namespace mipt
