// Copyright 2026 The trotterdiff Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Test-only dense reference implementations. Nothing here calls into the
// sparse Pauli action or the eigendecomposition propagator.

#include <complex>
#include <string>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "trotterdiff/circuit.hpp"
#include "trotterdiff/pauli.hpp"

namespace trotterdiff::oracle {

inline Eigen::Matrix2cd single_pauli(char c) {
  using C = std::complex<double>;
  Eigen::Matrix2cd m;
  switch (c) {
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, C(0, -1), C(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: m << 1, 0, 0, 1; break;
  }
  return m;
}

/** Qubit 0 is the least significant factor. */
inline Eigen::MatrixXcd pauli_matrix(const std::string& s) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
  for (char c : s) {
    Eigen::MatrixXcd next = Eigen::kroneckerProduct(single_pauli(c), m).eval();
    m = next;
  }
  return m;
}

inline Eigen::MatrixXcd hamiltonian_matrix(const Hamiltonian& h) {
  const auto dim = Eigen::Index{1} << h.num_qubits();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& term : h.terms()) m += term.coeff * pauli_matrix(term.string.str());
  return m;
}

inline Eigen::MatrixXcd expm_minus_i(const Eigen::MatrixXcd& h, double t) {
  Eigen::MatrixXcd a = (std::complex<double>(0, -t) * h).eval();
  return a.exp();
}

/** Embed a single-qubit matrix on qubit q of n. */
inline Eigen::MatrixXcd embed1(const Eigen::Matrix2cd& g, int q, int n) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
  for (int k = 0; k < n; ++k) {
    Eigen::MatrixXcd f = (k == q) ? Eigen::MatrixXcd(g) : Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXcd next = Eigen::kroneckerProduct(f, m).eval();
    m = next;
  }
  return m;
}

inline Eigen::MatrixXcd gate_matrix(const Gate& g, int n) {
  using C = std::complex<double>;
  const auto dim = Eigen::Index{1} << n;
  Eigen::Matrix2cd one;
  switch (g.kind) {
    case GateKind::H:
      one << 1, 1, 1, -1;
      return embed1(one / std::sqrt(2.0), g.q0, n);
    case GateKind::X:
      one << 0, 1, 1, 0;
      return embed1(one, g.q0, n);
    case GateKind::Rz:
      one << std::exp(C(0, -g.angle / 2)), 0, 0, std::exp(C(0, g.angle / 2));
      return embed1(one, g.q0, n);
    case GateKind::CX: {
      // |0><0|_c (x) I + |1><1|_c (x) X_t
      Eigen::Matrix2cd p0, p1, x;
      p0 << 1, 0, 0, 0;
      p1 << 0, 0, 0, 1;
      x << 0, 1, 1, 0;
      Eigen::MatrixXcd a = embed1(p0, g.q0, n);
      Eigen::MatrixXcd b = embed1(p1, g.q0, n) * embed1(x, g.q1, n);
      (void)dim;
      return a + b;
    }
  }
  return Eigen::MatrixXcd::Identity(dim, dim);
}

inline Eigen::MatrixXcd circuit_matrix(const Circuit& c) {
  const auto dim = Eigen::Index{1} << c.num_qubits;
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(dim, dim);
  for (const auto& g : c.gates) u = (gate_matrix(g, c.num_qubits) * u).eval();
  return u;
}

/** Frobenius distance after aligning the global phase by the trace. */
inline double phase_aligned_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  const std::complex<double> tr = (b.adjoint() * a).trace();
  const std::complex<double> phase = std::abs(tr) > 0 ? tr / std::abs(tr) : 1.0;
  return (a - phase * b).norm();
}

}  // namespace trotterdiff::oracle
