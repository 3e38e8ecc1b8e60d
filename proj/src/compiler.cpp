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

#include "trotterdiff/compiler.hpp"

#include <cmath>
#include <numbers>

#include "trotterdiff/errors.hpp"

namespace trotterdiff {

double suzuki4_weight() { return 1.0 / (4.0 - std::cbrt(4.0)); }

std::vector<SplitStep> product_formula_steps(int order, std::size_t num_blocks) {
  if (num_blocks == 0) return {};
  std::vector<SplitStep> steps;
  switch (order) {
    case 1:
      for (std::size_t b = 0; b < num_blocks; ++b) steps.push_back({b, 1.0});
      return steps;
    case 2: {
      for (std::size_t b = 0; b + 1 < num_blocks; ++b) steps.push_back({b, 0.5});
      steps.push_back({num_blocks - 1, 1.0});
      for (std::size_t b = num_blocks - 1; b-- > 0;) steps.push_back({b, 0.5});
      return steps;
    }
    case 4: {
      const double u = suzuki4_weight();
      const auto s2 = product_formula_steps(2, num_blocks);
      for (double scale : {u, u, 1.0 - 4.0 * u, u, u}) {
        for (const auto& s : s2) steps.push_back({s.block, s.fraction * scale});
      }
      return steps;
    }
    default:
      throw InputError("product formula order must be 1, 2 or 4");
  }
}

namespace {

std::vector<PauliRotation> segment_rotations(
    const Hamiltonian& h, const std::vector<std::vector<std::size_t>>& blocks,
    int order) {
  std::vector<PauliRotation> out;
  for (const auto& step : product_formula_steps(order, blocks.size())) {
    for (std::size_t term : blocks[step.block]) {
      out.push_back({term, h.term(term).coeff * step.fraction});
    }
  }
  return out;
}

}  // namespace

TrotterSchedule trotter_schedule(const Hamiltonian& h, const Policy& policy) {
  validate_policy(policy, h.num_terms());
  const auto blocks = policy_blocks(policy);
  TrotterSchedule schedule;
  for (std::size_t i = 0; i < policy.orders.size(); ++i) {
    schedule.push_back({policy.tau[i] * h.time(),
                        segment_rotations(h, blocks, policy.orders[i])});
  }
  return schedule;
}

TrotterSchedule refine_schedule(const TrotterSchedule& schedule, int factor) {
  if (factor < 1) throw InputError("refinement factor must be positive");
  TrotterSchedule out;
  for (const auto& seg : schedule) {
    for (int r = 0; r < factor; ++r) out.push_back({seg.duration / factor, seg.rotations});
  }
  return out;
}

TrotterSchedule uniform_schedule(const Hamiltonian& h, int order, int reps) {
  if (reps < 1) throw InputError("repetitions must be positive");
  std::vector<std::vector<std::size_t>> blocks(h.num_terms());
  for (std::size_t j = 0; j < h.num_terms(); ++j) blocks[j] = {j};
  const auto rotations = segment_rotations(h, blocks, order);
  return TrotterSchedule(static_cast<std::size_t>(reps),
                         {h.time() / reps, rotations});
}

Circuit pauli_exponential(const PauliString& p, double theta) {
  Circuit c{static_cast<int>(p.size()), {}};
  const auto supp = p.support();
  if (supp.empty() || theta == 0.0) return c;
  constexpr double half_pi = std::numbers::pi / 2.0;
  for (int q : supp) {
    if (p[static_cast<std::size_t>(q)] == Pauli::X) {
      c.append(Gate::h(q));
    } else if (p[static_cast<std::size_t>(q)] == Pauli::Y) {
      c.append(Gate::rz(q, -half_pi));
      c.append(Gate::h(q));
    }
  }
  for (std::size_t i = 0; i + 1 < supp.size(); ++i) c.append(Gate::cx(supp[i], supp[i + 1]));
  c.append(Gate::rz(supp.back(), 2.0 * theta));
  for (std::size_t i = supp.size() - 1; i-- > 0;) c.append(Gate::cx(supp[i], supp[i + 1]));
  for (int q : supp) {
    if (p[static_cast<std::size_t>(q)] == Pauli::X) {
      c.append(Gate::h(q));
    } else if (p[static_cast<std::size_t>(q)] == Pauli::Y) {
      c.append(Gate::h(q));
      c.append(Gate::rz(q, half_pi));
    }
  }
  return c;
}

Circuit synthesize(const Hamiltonian& h, const TrotterSchedule& schedule) {
  Circuit c{h.num_qubits(), {}};
  for (const auto& seg : schedule) {
    if (seg.duration == 0.0) continue;
    for (const auto& r : seg.rotations) {
      c.append(pauli_exponential(h.term(r.term).string, r.unit_angle * seg.duration));
    }
  }
  return c;
}

Circuit compile_policy(const Hamiltonian& h, const Policy& policy) {
  return synthesize(h, trotter_schedule(h, policy));
}

Circuit compile_uniform(const Hamiltonian& h, int order, int reps) {
  return synthesize(h, uniform_schedule(h, order, reps));
}

}  // namespace trotterdiff
