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

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace trotterdiff {

using Complex = std::complex<double>;
using StateVector = Eigen::VectorXcd;

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char to_char(Pauli p);
Pauli pauli_from_char(char c);

/**
 * Tensor product of single-qubit Paulis. Character i of the textual form acts
 * on qubit i, and qubit i is bit i of a computational-basis index.
 */
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::vector<Pauli> ops) : ops_(std::move(ops)) {}
  explicit PauliString(std::string_view text);

  std::size_t size() const { return ops_.size(); }
  Pauli operator[](std::size_t q) const { return ops_[q]; }
  const std::vector<Pauli>& ops() const { return ops_; }

  /** Qubits carrying a non-identity letter, ascending. */
  std::vector<int> support() const;
  bool is_identity() const;
  std::string str() const;

  /** Bits flipped by the operator (X or Y sites). */
  std::uint64_t x_mask() const;
  /** Bits contributing a sign (Z or Y sites). */
  std::uint64_t z_mask() const;
  int y_count() const;

  friend bool operator==(const PauliString&, const PauliString&) = default;

 private:
  std::vector<Pauli> ops_;
};

struct PauliTerm {
  PauliString string;
  double coeff = 0.0;

  friend bool operator==(const PauliTerm&, const PauliTerm&) = default;
};

/** H = sum_j coeff_j P_j on n qubits, to be evolved for time t. */
class Hamiltonian {
 public:
  /** Drops zero-coefficient terms; throws InputError on broken invariants. */
  Hamiltonian(int n, std::vector<PauliTerm> terms, double t);

  int num_qubits() const { return n_; }
  std::size_t num_terms() const { return terms_.size(); }
  double time() const { return t_; }
  const std::vector<PauliTerm>& terms() const { return terms_; }
  const PauliTerm& term(std::size_t j) const { return terms_[j]; }

  /** Same operator with terms reordered: result term j = this term perm[j]. */
  Hamiltonian permuted(const std::vector<std::size_t>& perm) const;
  Hamiltonian with_time(double t) const;

  friend bool operator==(const Hamiltonian&, const Hamiltonian&) = default;

 private:
  int n_;
  std::vector<PauliTerm> terms_;
  double t_;
};

/** Symplectic rule: anticommuting sites counted, even count commutes. */
bool commutes(const PauliString& p, const PauliString& q);

/** Operator norm of [P, Q]: 2 when they anticommute, else 0. */
double commutator_edge_weight(const PauliString& p, const PauliString& q);

/** Number of qubits in both supports. */
int shared_support(const PauliString& p, const PauliString& q);

/** out += coeff * P * in, without materializing P. */
void accumulate_pauli(const PauliString& p, Complex coeff,
                      const StateVector& in, StateVector& out);

/** coeff * P |state>. */
StateVector apply_term(const PauliTerm& term, const StateVector& state);

/** H |state>. */
StateVector apply_hamiltonian(const Hamiltonian& h, const StateVector& state);

/** Periodic transverse-field Ising chain: -J sum Z_i Z_{i+1} - h sum X_i. */
Hamiltonian build_tfim(int n, double coupling, double field, double t);

/** Periodic XYZ chain: -sum (Jx X_iX_{i+1} + Jy Y_iY_{i+1} + Jz Z_iZ_{i+1}). */
Hamiltonian build_heisenberg(int n, double jx, double jy, double jz, double t);

/** sum_j |coeff_j|, an upper bound on the spectral norm. */
double l1_coefficient_norm(const Hamiltonian& h);

// JSON: {"n": int, "t": float, "terms": [{"pauli": "XZIY", "coeff": float}]}
std::string hamiltonian_to_json(const Hamiltonian& h);
Hamiltonian hamiltonian_from_json(std::string_view text);
void save_hamiltonian(const std::filesystem::path& path, const Hamiltonian& h);
Hamiltonian load_hamiltonian(const std::filesystem::path& path);

}  // namespace trotterdiff
