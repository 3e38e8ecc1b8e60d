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

#include <vector>

#include <Eigen/Dense>

#include "trotterdiff/circuit.hpp"
#include "trotterdiff/compiler.hpp"
#include "trotterdiff/pauli.hpp"
#include "trotterdiff/policy.hpp"

namespace trotterdiff {

/** Largest qubit count for which dense matrices are built. */
inline constexpr int kDenseQubitLimit = 10;
inline constexpr int kOperatorErrorQubitLimit = 6;

/** |index> on n qubits; the default initial state is |0...0>. */
StateVector basis_state(int n, std::size_t index = 0);

/** Dense 2^n x 2^n matrix of H; throws InputError above the dense limit. */
Eigen::MatrixXcd dense_hamiltonian(const Hamiltonian& h);

/** Cached eigendecomposition of H for repeated exact evolution. */
class ExactPropagator {
 public:
  explicit ExactPropagator(const Hamiltonian& h);

  /** exp(-i H s) |psi0>. */
  StateVector evolve(const StateVector& psi0, double s) const;
  Eigen::MatrixXcd unitary(double s) const;

 private:
  Eigen::VectorXd energies_;
  Eigen::MatrixXcd vectors_;
};

StateVector evolve_exact(const Hamiltonian& h, const StateVector& psi0, double s);

void apply_gate(const Gate& g, StateVector& state);
StateVector run_circuit(const Circuit& c, const StateVector& psi0);
Eigen::MatrixXcd circuit_unitary(const Circuit& c);

/** exp(-i theta P) |state>, in place. */
void apply_pauli_rotation(const PauliString& p, double theta, StateVector& state);

/** |<a|b>|^2. */
double fidelity(const StateVector& a, const StateVector& b);

double policy_fidelity(const Hamiltonian& h, const Policy& policy,
                       const StateVector& psi0);

/** Same as policy_fidelity but reuses a propagator. */
double policy_fidelity(const ExactPropagator& exact, const Hamiltonian& h,
                       const Policy& policy, const StateVector& psi0);

struct CheckpointState {
  double s;
  StateVector state;
};

/** Circuit-prefix states at cumulative segment boundaries s_i = t * sum_{j<=i} tau_j. */
std::vector<CheckpointState> trotter_checkpoint_states(const Hamiltonian& h,
                                                       const Policy& policy,
                                                       const StateVector& psi0);

/**
 * dF/dtau by the adjoint method, projected onto the simplex tangent so the
 * components sum to zero.
 */
Eigen::VectorXd fidelity_grad_tau(const Hamiltonian& h, const Policy& policy,
                                  const StateVector& psi0);

/** Unprojected gradient; F treated as a function of unconstrained tau. */
Eigen::VectorXd fidelity_grad_tau_raw(const Hamiltonian& h, const Policy& policy,
                                      const StateVector& psi0);

/** min over phi of || exp(-iHt) - e^{i phi} U_c ||_2, dense. */
double operator_error(const Hamiltonian& h, const Circuit& c, double t);

/** (1 - eps)^count. */
double noise_survival(double count, double eps);

}  // namespace trotterdiff
