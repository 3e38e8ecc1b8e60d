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

#include <cstddef>
#include <vector>

#include "trotterdiff/circuit.hpp"
#include "trotterdiff/pauli.hpp"
#include "trotterdiff/policy.hpp"

namespace trotterdiff {

/** Fourth-order Suzuki weight u = 1 / (4 - 4^(1/3)). */
double suzuki4_weight();

/** Block index and the fraction of the step duration it is evolved for. */
struct SplitStep {
  std::size_t block;
  double fraction;
};

/** Order-1 (Lie-Trotter), order-2 (symmetric) or order-4 (Suzuki) step. */
std::vector<SplitStep> product_formula_steps(int order, std::size_t num_blocks);

/** exp(-i * angle * P) with angle = unit_angle * segment duration. */
struct PauliRotation {
  std::size_t term;
  double unit_angle;
};

struct TrotterSegment {
  double duration;
  std::vector<PauliRotation> rotations;  // in application order
};

using TrotterSchedule = std::vector<TrotterSegment>;

/** Rotation schedule of a validated policy. */
TrotterSchedule trotter_schedule(const Hamiltonian& h, const Policy& policy);

/** Each segment replaced by `factor` consecutive copies of 1/factor the length. */
TrotterSchedule refine_schedule(const TrotterSchedule& schedule, int factor);

/** `reps` steps of the order-k formula, one block per term. */
TrotterSchedule uniform_schedule(const Hamiltonian& h, int order, int reps);

/**
 * exp(-i theta P) over {H, CX, Rz}: basis change (X: H; Y: Rz(-pi/2) then H),
 * CX ladder onto the last support qubit, Rz(2 theta), and the mirror image.
 * Identity strings and theta == 0 give an empty circuit.
 */
Circuit pauli_exponential(const PauliString& p, double theta);

Circuit synthesize(const Hamiltonian& h, const TrotterSchedule& schedule);

/** Gate-level circuit of a policy; throws InputError on an invalid policy. */
Circuit compile_policy(const Hamiltonian& h, const Policy& policy);

/** Uniform product-formula baseline with one block per term. */
Circuit compile_uniform(const Hamiltonian& h, int order, int reps);

}  // namespace trotterdiff
