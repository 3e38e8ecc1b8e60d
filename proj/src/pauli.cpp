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

#include "trotterdiff/pauli.hpp"

#include <bit>
#include <cmath>
#include <set>
#include <utility>

#include "trotterdiff/errors.hpp"

namespace trotterdiff {

char to_char(Pauli p) {
  switch (p) {
    case Pauli::I: return 'I';
    case Pauli::X: return 'X';
    case Pauli::Y: return 'Y';
    case Pauli::Z: return 'Z';
  }
  return '?';
}

Pauli pauli_from_char(char c) {
  switch (c) {
    case 'I': return Pauli::I;
    case 'X': return Pauli::X;
    case 'Y': return Pauli::Y;
    case 'Z': return Pauli::Z;
    default:
      throw InputError(std::string("unknown Pauli letter '") + c + "'");
  }
}

PauliString::PauliString(std::string_view text) {
  ops_.reserve(text.size());
  for (char c : text) ops_.push_back(pauli_from_char(c));
}

std::vector<int> PauliString::support() const {
  std::vector<int> out;
  for (std::size_t q = 0; q < ops_.size(); ++q) {
    if (ops_[q] != Pauli::I) out.push_back(static_cast<int>(q));
  }
  return out;
}

bool PauliString::is_identity() const {
  for (Pauli p : ops_) {
    if (p != Pauli::I) return false;
  }
  return true;
}

std::string PauliString::str() const {
  std::string out;
  out.reserve(ops_.size());
  for (Pauli p : ops_) out.push_back(to_char(p));
  return out;
}

std::uint64_t PauliString::x_mask() const {
  std::uint64_t m = 0;
  for (std::size_t q = 0; q < ops_.size(); ++q) {
    if (ops_[q] == Pauli::X || ops_[q] == Pauli::Y) m |= (1ULL << q);
  }
  return m;
}

std::uint64_t PauliString::z_mask() const {
  std::uint64_t m = 0;
  for (std::size_t q = 0; q < ops_.size(); ++q) {
    if (ops_[q] == Pauli::Z || ops_[q] == Pauli::Y) m |= (1ULL << q);
  }
  return m;
}

int PauliString::y_count() const {
  int c = 0;
  for (Pauli p : ops_) c += (p == Pauli::Y);
  return c;
}

Hamiltonian::Hamiltonian(int n, std::vector<PauliTerm> terms, double t)
    : n_(n), t_(t) {
  if (n < 1) throw InputError("Hamiltonian needs at least one qubit");
  if (!(t > 0.0) || !std::isfinite(t)) {
    throw InputError("evolution time must be positive and finite");
  }
  for (auto& term : terms) {
    if (term.string.size() != static_cast<std::size_t>(n)) {
      throw InputError("Pauli string '" + term.string.str() +
                       "' does not have length " + std::to_string(n));
    }
    if (!std::isfinite(term.coeff)) throw InputError("non-finite coefficient");
    if (term.coeff != 0.0) terms_.push_back(std::move(term));
  }
  if (terms_.empty()) throw InputError("Hamiltonian has no nonzero terms");
}

Hamiltonian Hamiltonian::permuted(const std::vector<std::size_t>& perm) const {
  if (perm.size() != terms_.size()) throw InputError("permutation size mismatch");
  std::vector<PauliTerm> out;
  out.reserve(perm.size());
  for (std::size_t j : perm) out.push_back(terms_.at(j));
  return Hamiltonian(n_, std::move(out), t_);
}

Hamiltonian Hamiltonian::with_time(double t) const {
  return Hamiltonian(n_, terms_, t);
}

namespace {

void check_same_length(const PauliString& p, const PauliString& q) {
  if (p.size() != q.size()) {
    throw InputError("Pauli strings of different lengths: " + p.str() + " vs " +
                     q.str());
  }
}

}  // namespace

bool commutes(const PauliString& p, const PauliString& q) {
  check_same_length(p, q);
  int anti = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] != Pauli::I && q[i] != Pauli::I && p[i] != q[i]) ++anti;
  }
  return anti % 2 == 0;
}

double commutator_edge_weight(const PauliString& p, const PauliString& q) {
  return commutes(p, q) ? 0.0 : 2.0;
}

int shared_support(const PauliString& p, const PauliString& q) {
  check_same_length(p, q);
  int c = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    c += (p[i] != Pauli::I && q[i] != Pauli::I);
  }
  return c;
}

void accumulate_pauli(const PauliString& p, Complex coeff,
                      const StateVector& in, StateVector& out) {
  const auto dim = static_cast<std::uint64_t>(in.size());
  if (p.size() >= 63 || dim != (1ULL << p.size()) ||
      out.size() != in.size()) {
    throw InputError("state dimension does not match Pauli string length");
  }
  const std::uint64_t xm = p.x_mask();
  const std::uint64_t zm = p.z_mask();
  static constexpr Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const Complex base = coeff * kIPow[p.y_count() % 4];
  for (std::uint64_t b = 0; b < dim; ++b) {
    const bool neg = std::popcount(b & zm) & 1;
    out[static_cast<Eigen::Index>(b ^ xm)] += (neg ? -base : base) * in[b];
  }
}

StateVector apply_term(const PauliTerm& term, const StateVector& state) {
  StateVector out = StateVector::Zero(state.size());
  accumulate_pauli(term.string, term.coeff, state, out);
  return out;
}

StateVector apply_hamiltonian(const Hamiltonian& h, const StateVector& state) {
  StateVector out = StateVector::Zero(state.size());
  for (const auto& term : h.terms()) {
    accumulate_pauli(term.string, term.coeff, state, out);
  }
  return out;
}

namespace {

// Nearest-neighbour edges of a ring; at n = 2 the two wrap-around edges
// coincide and are kept once.
std::vector<std::pair<int, int>> ring_edges(int n) {
  std::set<std::pair<int, int>> seen;
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    auto key = std::minmax(i, j);
    if (seen.insert(key).second) edges.emplace_back(i, j);
  }
  return edges;
}

PauliString two_site(int n, int i, int j, Pauli a, Pauli b) {
  std::vector<Pauli> ops(static_cast<std::size_t>(n), Pauli::I);
  ops[static_cast<std::size_t>(i)] = a;
  ops[static_cast<std::size_t>(j)] = b;
  return PauliString(std::move(ops));
}

}  // namespace

Hamiltonian build_tfim(int n, double coupling, double field, double t) {
  if (n < 2) throw InputError("TFIM needs n >= 2");
  std::vector<PauliTerm> terms;
  for (auto [i, j] : ring_edges(n)) {
    terms.push_back({two_site(n, i, j, Pauli::Z, Pauli::Z), -coupling});
  }
  for (int i = 0; i < n; ++i) {
    std::vector<Pauli> ops(static_cast<std::size_t>(n), Pauli::I);
    ops[static_cast<std::size_t>(i)] = Pauli::X;
    terms.push_back({PauliString(std::move(ops)), -field});
  }
  return Hamiltonian(n, std::move(terms), t);
}

Hamiltonian build_heisenberg(int n, double jx, double jy, double jz, double t) {
  if (n < 2) throw InputError("Heisenberg chain needs n >= 2");
  std::vector<PauliTerm> terms;
  for (auto [i, j] : ring_edges(n)) {
    terms.push_back({two_site(n, i, j, Pauli::X, Pauli::X), -jx});
    terms.push_back({two_site(n, i, j, Pauli::Y, Pauli::Y), -jy});
    terms.push_back({two_site(n, i, j, Pauli::Z, Pauli::Z), -jz});
  }
  return Hamiltonian(n, std::move(terms), t);
}

double l1_coefficient_norm(const Hamiltonian& h) {
  double s = 0.0;
  for (const auto& term : h.terms()) s += std::abs(term.coeff);
  return s;
}

}  // namespace trotterdiff
