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

#include <string>
#include <vector>

namespace trotterdiff {

enum class GateKind { H, CX, Rz, X };

/** Gate in the {H, CX, Rz, X} basis. For CX, q0 is control and q1 target. */
struct Gate {
  GateKind kind = GateKind::H;
  int q0 = 0;
  int q1 = -1;
  double angle = 0.0;  // Rz only, radians

  static Gate h(int q) { return {GateKind::H, q, -1, 0.0}; }
  static Gate x(int q) { return {GateKind::X, q, -1, 0.0}; }
  static Gate rz(int q, double angle) { return {GateKind::Rz, q, -1, angle}; }
  static Gate cx(int control, int target) { return {GateKind::CX, control, target, 0.0}; }

  bool two_qubit() const { return kind == GateKind::CX; }

  friend bool operator==(const Gate&, const Gate&) = default;
};

struct Circuit {
  int num_qubits = 0;
  std::vector<Gate> gates;

  void append(const Gate& g) { gates.push_back(g); }
  void append(const Circuit& other) {
    gates.insert(gates.end(), other.gates.begin(), other.gates.end());
  }
};

/** Throws InputError on out-of-range qubits, CX(q, q) or non-finite angles. */
void validate_circuit(const Circuit& c);

/**
 * Remove Rz(0) gates and adjacent CX pairs on the same (control, target)
 * with nothing in between on either wire. Cascades through nested ladders.
 */
Circuit peephole(const Circuit& c);

/** Longest per-wire chain, without the peephole pass. */
int schedule_depth(const Circuit& c);

/** Depth after peephole. */
int depth(const Circuit& c);

/** CX count after peephole. */
int cnot_count(const Circuit& c);

std::string circuit_to_json(const Circuit& c);

}  // namespace trotterdiff
