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

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "mipt/hamiltonian.hpp"
#include "mipt/state.hpp"

namespace mipt {

inline constexpr double kEigenvalueCutoff = 1e-14;
inline constexpr double kRenyiInfinity = std::numeric_limits<double>::infinity();

/// Ordered, duplicate-free set of sites of an n-qubit register.
class Subsystem {
public:
    Subsystem(std::vector<int> sites, int qubits) : sites_(std::move(sites)), qubits_(qubits)
    {
        std::sort(sites_.begin(), sites_.end());
        if (sites_.empty()) {
            throw std::invalid_argument("subsystem must be nonempty");
        }
        if (std::adjacent_find(sites_.begin(), sites_.end()) != sites_.end()) {
            throw std::invalid_argument("subsystem contains duplicate sites");
        }
        if (sites_.front() < 0 || sites_.back() >= qubits) {
            throw std::out_of_range("subsystem site outside [0, " + std::to_string(qubits) + ")");
        }
    }

    [[nodiscard]] const std::vector<int>& sites() const noexcept { return sites_; }
    [[nodiscard]] int size() const noexcept { return static_cast<int>(sites_.size()); }
    [[nodiscard]] int qubits() const noexcept { return qubits_; }

    [[nodiscard]] std::uint64_t mask() const noexcept
    {
        std::uint64_t m = 0;
        for (int s : sites_) {
            m |= std::uint64_t{1} << s;
        }
        return m;
    }

    [[nodiscard]] std::vector<int> complement_sites() const
    {
        std::vector<int> out;
        for (int s = 0; s < qubits_; ++s) {
            if (!std::binary_search(sites_.begin(), sites_.end(), s)) {
                out.push_back(s);
            }
        }
        return out;
    }

    [[nodiscard]] bool overlaps(const Subsystem& other) const noexcept { return (mask() & other.mask()) != 0; }

    [[nodiscard]] Subsystem united(const Subsystem& other) const
    {
        auto s = sites_;
        s.insert(s.end(), other.sites_.begin(), other.sites_.end());
        return Subsystem(std::move(s), qubits_);
    }

private:
    std::vector<int> sites_;
    int qubits_;
};

/// Contiguous segment of length `length` starting at `start`, wrapping around
/// the ring.
inline Subsystem contiguous_segment(int qubits, int start, int length)
{
    if (length < 1 || length > qubits) {
        throw std::invalid_argument("segment length outside [1, N]");
    }
    std::vector<int> sites;
    for (int k = 0; k < length; ++k) {
        sites.push_back((start + k) % qubits);
    }
    return Subsystem(std::move(sites), qubits);
}

/// Reduced state rho_A. Validated on construction.
class DensityMatrix {
public:
    explicit DensityMatrix(Eigen::MatrixXcd rho) : rho_(std::move(rho))
    {
        if (rho_.rows() != rho_.cols() || rho_.rows() == 0) {
            throw std::invalid_argument("density matrix must be square and nonempty");
        }
        if ((rho_ - rho_.adjoint()).cwiseAbs().maxCoeff() > 1e-10) {
            throw std::invalid_argument("density matrix is not Hermitian");
        }
        if (std::abs(rho_.trace() - Complex(1.0)) > 1e-10) {
            throw std::invalid_argument("density matrix trace differs from 1");
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(rho_, Eigen::EigenvaluesOnly);
        eigenvalues_ = solver.eigenvalues();
        if (eigenvalues_.minCoeff() < -1e-10) {
            throw std::invalid_argument("density matrix has a negative eigenvalue");
        }
    }

    [[nodiscard]] const Eigen::MatrixXcd& matrix() const noexcept { return rho_; }
    [[nodiscard]] const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }

private:
    Eigen::MatrixXcd rho_;
    Eigen::VectorXd eigenvalues_;
};

namespace detail {

/// Reshape |psi> into the matrix M[a, c] = psi(a, c) where a runs over the
/// sites of A (bit k of a = site A[k]) and c over the complement in
/// ascending site order.
inline Eigen::MatrixXcd bipartite_matrix(const StateVector& state, const Subsystem& a)
{
    const int n = state.qubits();
    if (a.qubits() != n) {
        throw std::invalid_argument("subsystem defined for a different register size");
    }
    const auto& in = a.sites();
    const auto out = a.complement_sites();
    Eigen::MatrixXcd m(Eigen::Index{1} << in.size(), Eigen::Index{1} << out.size());
    const auto& amps = state.amplitudes();
    for (Eigen::Index b = 0; b < amps.size(); ++b) {
        Eigen::Index row = 0;
        Eigen::Index col = 0;
        for (std::size_t k = 0; k < in.size(); ++k) {
            row |= ((b >> in[k]) & 1) << k;
        }
        for (std::size_t k = 0; k < out.size(); ++k) {
            col |= ((b >> out[k]) & 1) << k;
        }
        m(row, col) = amps[b];
    }
    return m;
}

inline double entropy_from_spectrum(const Eigen::VectorXd& spectrum, double n)
{
    if (!(n > 0.0)) {
        throw std::invalid_argument("Renyi index must be positive");
    }
    if (spectrum.minCoeff() < -1e-10) {
        throw std::invalid_argument("negative eigenvalue in spectrum");
    }
    if (std::isinf(n)) {
        return -std::log(spectrum.maxCoeff());
    }
    double acc = 0.0;
    if (n == 1.0) {
        for (double l : spectrum) {
            if (l > kEigenvalueCutoff) {
                acc -= l * std::log(l);
            }
        }
        return acc;
    }
    for (double l : spectrum) {
        if (l > kEigenvalueCutoff) {
            acc += std::pow(l, n);
        }
    }
    return std::log(acc) / (1.0 - n);
}

} // namespace detail

inline DensityMatrix reduced_density_matrix(const StateVector& state, const Subsystem& a)
{
    const Eigen::MatrixXcd m = detail::bipartite_matrix(state, a);
    return DensityMatrix(m * m.adjoint());
}

/// Nonzero Schmidt spectrum of the A|complement cut. Uses whichever side has
/// the smaller Hilbert space.
inline Eigen::VectorXd entanglement_spectrum(const StateVector& state, const Subsystem& a)
{
    const Eigen::MatrixXcd m = detail::bipartite_matrix(state, a);
    Eigen::MatrixXcd gram =
        m.rows() <= m.cols() ? Eigen::MatrixXcd(m * m.adjoint()) : Eigen::MatrixXcd(m.adjoint() * m);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(gram, Eigen::EigenvaluesOnly);
    return solver.eigenvalues();
}

inline double von_neumann_entropy(const DensityMatrix& rho)
{
    return detail::entropy_from_spectrum(rho.eigenvalues(), 1.0);
}

/// S_n = ln Tr rho^n / (1 - n); n = kRenyiInfinity gives -ln lambda_max and
/// n = 1 the von Neumann limit.
inline double renyi_entropy(const DensityMatrix& rho, double n)
{
    return detail::entropy_from_spectrum(rho.eigenvalues(), n);
}

/// Entanglement entropy of A in nats (Renyi index n, default von Neumann).
inline double entanglement_entropy(const StateVector& state, const Subsystem& a, double n = 1.0)
{
    if (a.size() == state.qubits()) {
        return 0.0;
    }
    return detail::entropy_from_spectrum(entanglement_spectrum(state, a), n);
}

inline double mutual_information(const StateVector& state, const Subsystem& a, const Subsystem& b)
{
    if (a.overlaps(b)) {
        throw std::invalid_argument("mutual information needs disjoint subsystems");
    }
    return entanglement_entropy(state, a) + entanglement_entropy(state, b) - entanglement_entropy(state, a.united(b));
}

/// Four contiguous quarters A, B, C, D covering the ring from site 0. When 4
/// does not divide N the larger quarters are spread out.
struct QuarterPartition {
    std::array<Subsystem, 4> quarters;

    [[nodiscard]] const Subsystem& a() const { return quarters[0]; }
    [[nodiscard]] const Subsystem& b() const { return quarters[1]; }
    [[nodiscard]] const Subsystem& c() const { return quarters[2]; }
    [[nodiscard]] const Subsystem& d() const { return quarters[3]; }

    static QuarterPartition make(int chain_length)
    {
        if (chain_length < 4) {
            throw std::invalid_argument("quarter partition needs at least four sites");
        }
        const int base = chain_length / 4;
        const int extra = chain_length % 4;
        std::array<int, 4> sizes{};
        for (int k = 0; k < 4; ++k) {
            sizes[k] = base + (((k * extra) % 4) < extra ? 1 : 0);
        }
        std::vector<Subsystem> parts;
        int start = 0;
        for (int k = 0; k < 4; ++k) {
            parts.push_back(contiguous_segment(chain_length, start, sizes[k]));
            start += sizes[k];
        }
        return QuarterPartition{{parts[0], parts[1], parts[2], parts[3]}};
    }
};

/// I3(X:Y:Z) = I(X:Y) + I(X:Z) - I(X:YZ).
inline double tripartite_information(const StateVector& state, const Subsystem& x, const Subsystem& y,
                                     const Subsystem& z)
{
    return mutual_information(state, x, y) + mutual_information(state, x, z) -
           mutual_information(state, x, y.united(z));
}

inline double tripartite_information(const StateVector& state, const QuarterPartition& q)
{
    const double sa = entanglement_entropy(state, q.a());
    const double sb = entanglement_entropy(state, q.b());
    const double sc = entanglement_entropy(state, q.c());
    const double sab = entanglement_entropy(state, q.a().united(q.b()));
    const double sac = entanglement_entropy(state, q.a().united(q.c()));
    const double sbc = entanglement_entropy(state, q.b().united(q.c()));
    const double sabc = entanglement_entropy(state, q.a().united(q.b()).united(q.c()));
    return sa + sb + sc - sab - sac - sbc + sabc;
}

/// Shannon entropy of the populations |<E_i|psi>|^2 over every sector's
/// eigenstates.
inline double diagonal_entropy(const StateVector& state, const EigenSystem& eig)
{
    if (state.qubits() != eig.chain_length()) {
        throw std::invalid_argument("state and eigensystem sizes differ");
    }
    double s = 0.0;
    const auto& sectors = eig.basis->sectors();
    for (std::size_t k = 0; k < sectors.size(); ++k) {
        const auto& idx = sectors[k].basis_indices;
        const auto d = static_cast<Eigen::Index>(idx.size());
        Eigen::MatrixXd x(d, 2);
        for (Eigen::Index a = 0; a < d; ++a) {
            const Complex c = state[static_cast<Eigen::Index>(idx[static_cast<std::size_t>(a)])];
            x(a, 0) = c.real();
            x(a, 1) = c.imag();
        }
        const Eigen::MatrixXd y = eig.eigenvectors[k].transpose() * x;
        for (Eigen::Index i = 0; i < d; ++i) {
            const double p = y(i, 0) * y(i, 0) + y(i, 1) * y(i, 1);
            if (p > kEigenvalueCutoff) {
                s -= p * std::log(p);
            }
        }
    }
    return s;
}

} // namespace mipt
