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

#include "trotterdiff/exact_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "trotterdiff/errors.hpp"

namespace trotterdiff {

namespace {

std::size_t dim_of(int n) { return std::size_t{1} << n; }

void check_dense(int n) {
  if (n > kDenseQubitLimit) {
    throw InputError("dense simulation limited to " +
                     std::to_string(kDenseQubitLimit) + " qubits");
  }
}

}  // namespace

StateVector basis_state(int n, std::size_t index) {
  if (n < 1 || n >= 63) throw InputError("unsupported qubit count");
  StateVector psi = StateVector::Zero(static_cast<Eigen::Index>(dim_of(n)));
  psi[static_cast<Eigen::Index>(index)] = 1.0;
  return psi;
}

Eigen::MatrixXcd dense_hamiltonian(const Hamiltonian& h) {
  const int n = h.num_qubits();
  check_dense(n);
  const auto dim = static_cast<Eigen::Index>(dim_of(n));
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    m.col(b) = apply_hamiltonian(h, basis_state(n, static_cast<std::size_t>(b)));
  }
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-12) {
    throw InputError("assembled Hamiltonian is not Hermitian");
  }
  return m;
}

ExactPropagator::ExactPropagator(const Hamiltonian& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(dense_hamiltonian(h));
  if (solver.info() != Eigen::Success) throw InputError("eigendecomposition failed");
  energies_ = solver.eigenvalues();
  vectors_ = solver.eigenvectors();
}

StateVector ExactPropagator::evolve(const StateVector& psi0, double s) const {
  if (psi0.size() != vectors_.rows()) throw InputError("state dimension mismatch");
  Eigen::VectorXcd coeffs = vectors_.adjoint() * psi0;
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
    coeffs[k] *= std::exp(Complex(0.0, -energies_[k] * s));
  }
  return vectors_ * coeffs;
}

Eigen::MatrixXcd ExactPropagator::unitary(double s) const {
  Eigen::VectorXcd phases(energies_.size());
  for (Eigen::Index k = 0; k < energies_.size(); ++k) {
    phases[k] = std::exp(Complex(0.0, -energies_[k] * s));
  }
  return vectors_ * phases.asDiagonal() * vectors_.adjoint();
}

StateVector evolve_exact(const Hamiltonian& h, const StateVector& psi0, double s) {
  return ExactPropagator(h).evolve(psi0, s);
}

void apply_gate(const Gate& g, StateVector& state) {
  const auto dim = static_cast<std::size_t>(state.size());
  const std::size_t m0 = std::size_t{1} << g.q0;
  switch (g.kind) {
    case GateKind::H: {
      const double r = std::numbers::sqrt2 / 2.0;
      for (std::size_t b = 0; b < dim; ++b) {
        if (b & m0) continue;
        const Complex a0 = state[b];
        const Complex a1 = state[b | m0];
        state[b] = r * (a0 + a1);
        state[b | m0] = r * (a0 - a1);
      }
      break;
    }
    case GateKind::X:
      for (std::size_t b = 0; b < dim; ++b) {
        if (!(b & m0)) std::swap(state[b], state[b | m0]);
      }
      break;
    case GateKind::Rz: {
      const Complex p0 = std::exp(Complex(0.0, -g.angle / 2.0));
      const Complex p1 = std::exp(Complex(0.0, g.angle / 2.0));
      for (std::size_t b = 0; b < dim; ++b) state[b] *= (b & m0) ? p1 : p0;
      break;
    }
    case GateKind::CX: {
      const std::size_t mt = std::size_t{1} << g.q1;
      for (std::size_t b = 0; b < dim; ++b) {
        if ((b & m0) && !(b & mt)) std::swap(state[b], state[b | mt]);
      }
      break;
    }
  }
}

StateVector run_circuit(const Circuit& c, const StateVector& psi0) {
  if (psi0.size() != static_cast<Eigen::Index>(dim_of(c.num_qubits))) {
    throw InputError("state dimension does not match circuit width");
  }
  validate_circuit(c);
  StateVector psi = psi0;
  for (const auto& g : c.gates) apply_gate(g, psi);
  return psi;
}

Eigen::MatrixXcd circuit_unitary(const Circuit& c) {
  check_dense(c.num_qubits);
  const auto dim = static_cast<Eigen::Index>(dim_of(c.num_qubits));
  Eigen::MatrixXcd u(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    u.col(b) = run_circuit(c, basis_state(c.num_qubits, static_cast<std::size_t>(b)));
  }
  return u;
}

void apply_pauli_rotation(const PauliString& p, double theta, StateVector& state) {
  StateVector rotated = StateVector::Zero(state.size());
  accumulate_pauli(p, Complex(0.0, -std::sin(theta)), state, rotated);
  state = std::cos(theta) * state + rotated;
}

double fidelity(const StateVector& a, const StateVector& b) {
  if (a.size() != b.size()) throw InputError("state dimension mismatch");
  return std::norm(a.dot(b));
}

double policy_fidelity(const ExactPropagator& exact, const Hamiltonian& h,
                       const Policy& policy, const StateVector& psi0) {
  const StateVector target = exact.evolve(psi0, h.time());
  return fidelity(target, run_circuit(compile_policy(h, policy), psi0));
}

double policy_fidelity(const Hamiltonian& h, const Policy& policy,
                       const StateVector& psi0) {
  return policy_fidelity(ExactPropagator(h), h, policy, psi0);
}

std::vector<CheckpointState> trotter_checkpoint_states(const Hamiltonian& h,
                                                       const Policy& policy,
                                                       const StateVector& psi0) {
  const auto schedule = trotter_schedule(h, policy);
  std::vector<CheckpointState> out;
  StateVector psi = psi0;
  double s = 0.0;
  for (const auto& seg : schedule) {
    psi = run_circuit(synthesize(h, {seg}), psi);
    s += seg.duration;
    out.push_back({s, psi});
  }
  // Guard the last boundary against rounding in the running sum.
  if (!out.empty()) out.back().s = h.time();
  return out;
}

Eigen::VectorXd fidelity_grad_tau_raw(const Hamiltonian& h, const Policy& policy,
                                      const StateVector& psi0) {
  const auto schedule = trotter_schedule(h, policy);
  const StateVector target = evolve_exact(h, psi0, h.time());

  StateVector psi = psi0;
  for (const auto& seg : schedule) {
    for (const auto& r : seg.rotations) {
      apply_pauli_rotation(h.term(r.term).string, r.unit_angle * seg.duration, psi);
    }
  }
  const Complex amplitude = target.dot(psi);

  // Walk backwards: psi is the state just after rotation m, lambda the
  // target pulled back through every later rotation.
  StateVector lambda = target;
  Eigen::VectorXd grad(static_cast<Eigen::Index>(schedule.size()));
  for (std::size_t i = schedule.size(); i-- > 0;) {
    const auto& seg = schedule[i];
    Complex d_amp = 0.0;
    for (std::size_t m = seg.rotations.size(); m-- > 0;) {
      const auto& r = seg.rotations[m];
      const auto& p = h.term(r.term).string;
      StateVector p_psi = StateVector::Zero(psi.size());
      accumulate_pauli(p, 1.0, psi, p_psi);
      d_amp += Complex(0.0, -r.unit_angle) * lambda.dot(p_psi);
      const double theta = r.unit_angle * seg.duration;
      apply_pauli_rotation(p, -theta, psi);
      apply_pauli_rotation(p, -theta, lambda);
    }
    grad[static_cast<Eigen::Index>(i)] =
        2.0 * (std::conj(amplitude) * d_amp * h.time()).real();
  }
  return grad;
}

Eigen::VectorXd fidelity_grad_tau(const Hamiltonian& h, const Policy& policy,
                                  const StateVector& psi0) {
  Eigen::VectorXd g = fidelity_grad_tau_raw(h, policy, psi0);
  g.array() -= g.mean();
  return g;
}

double operator_error(const Hamiltonian& h, const Circuit& c, double t) {
  const int n = h.num_qubits();
  if (n > kOperatorErrorQubitLimit) throw InputError("operator_error is limited to 6 qubits");
  if (c.num_qubits != n) throw InputError("circuit width mismatch");
  const Eigen::MatrixXcd exact = ExactPropagator(h).unitary(t);
  const Eigen::MatrixXcd w = circuit_unitary(c).adjoint() * exact;
  // ||U_c^dag V - e^{i phi} I|| = max_k |e^{i theta_k} - e^{i phi}|: centre
  // phi on the shortest arc covering all eigenphases theta_k of W.
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(w, false);
  std::vector<double> phases;
  for (Eigen::Index k = 0; k < solver.eigenvalues().size(); ++k) {
    phases.push_back(std::arg(solver.eigenvalues()[k]));
  }
  std::sort(phases.begin(), phases.end());
  double largest_gap = phases.front() + 2.0 * std::numbers::pi - phases.back();
  for (std::size_t k = 1; k < phases.size(); ++k) {
    largest_gap = std::max(largest_gap, phases[k] - phases[k - 1]);
  }
  const double arc = 2.0 * std::numbers::pi - largest_gap;
  return 2.0 * std::sin(arc / 4.0);
}

double noise_survival(double count, double eps) {
  if (count < 0.0 || eps < 0.0 || eps > 1.0) {
    throw InputError("noise_survival needs count >= 0 and eps in [0, 1]");
  }
  return std::pow(1.0 - eps, count);
}

}  // namespace trotterdiff
