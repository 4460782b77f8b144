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

#include <complex>
#include <stdexcept>
#include <string>

#include "mipt/hilbert.hpp"

namespace mipt {

using Complex = std::complex<double>;

/// Pure state of `qubits` spin-1/2 sites in the computational basis.
///
/// Amplitude index follows the hilbert bit convention. Ancilla-augmented
/// states are plain StateVectors with one extra (highest) qubit.
class StateVector {
public:
    StateVector() = default;

    explicit StateVector(int qubits) : qubits_(qubits), amplitudes_(Eigen::VectorXcd::Zero(dim_for(qubits)))
    {
        amplitudes_[0] = 1.0;
    }

    StateVector(int qubits, Eigen::VectorXcd amplitudes) : qubits_(qubits), amplitudes_(std::move(amplitudes))
    {
        if (amplitudes_.size() != dim_for(qubits)) {
            throw std::invalid_argument("amplitude vector has size " + std::to_string(amplitudes_.size()) +
                                        ", expected 2^" + std::to_string(qubits));
        }
    }

    static StateVector basis_state(int qubits, BasisIndex b)
    {
        StateVector s(qubits);
        if (b >= static_cast<BasisIndex>(s.dimension())) {
            throw std::out_of_range("basis index outside Hilbert space");
        }
        s.amplitudes_[0] = 0.0;
        s.amplitudes_[static_cast<Eigen::Index>(b)] = 1.0;
        return s;
    }

    [[nodiscard]] int qubits() const noexcept { return qubits_; }
    [[nodiscard]] Eigen::Index dimension() const noexcept { return amplitudes_.size(); }
    [[nodiscard]] const Eigen::VectorXcd& amplitudes() const noexcept { return amplitudes_; }
    [[nodiscard]] Eigen::VectorXcd& amplitudes() noexcept { return amplitudes_; }
    [[nodiscard]] Complex operator[](Eigen::Index i) const { return amplitudes_[i]; }
    [[nodiscard]] Complex& operator[](Eigen::Index i) { return amplitudes_[i]; }

    [[nodiscard]] double norm() const { return amplitudes_.norm(); }

    void normalize()
    {
        const double n = amplitudes_.norm();
        if (n == 0.0) {
            throw std::runtime_error("cannot normalize the zero vector");
        }
        amplitudes_ /= n;
    }

    [[nodiscard]] Complex inner(const StateVector& other) const { return amplitudes_.dot(other.amplitudes_); }

    /// |<this|other>|^2
    [[nodiscard]] double fidelity(const StateVector& other) const { return std::norm(inner(other)); }

    bool operator==(const StateVector&) const = default;

private:
    static Eigen::Index dim_for(int qubits)
    {
        if (qubits < 1 || qubits > kMaxChainLength + 1) {
            throw std::invalid_argument("unsupported qubit count " + std::to_string(qubits));
        }
        return Eigen::Index{1} << qubits;
    }

    int qubits_ = 0;
    Eigen::VectorXcd amplitudes_;
};

} // namespace mipt
