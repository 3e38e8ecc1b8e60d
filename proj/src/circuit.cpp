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

#include "trotterdiff/circuit.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "trotterdiff/errors.hpp"

namespace trotterdiff {

namespace {

constexpr double kZeroAngle = 1e-14;

const char* gate_name(GateKind k) {
  switch (k) {
    case GateKind::H: return "h";
    case GateKind::CX: return "cx";
    case GateKind::Rz: return "rz";
    case GateKind::X: return "x";
  }
  return "?";
}

}  // namespace

void validate_circuit(const Circuit& c) {
  for (const auto& g : c.gates) {
    if (g.q0 < 0 || g.q0 >= c.num_qubits) throw InputError("gate qubit out of range");
    if (g.two_qubit()) {
      if (g.q1 < 0 || g.q1 >= c.num_qubits) throw InputError("CX target out of range");
      if (g.q1 == g.q0) throw InputError("CX with identical control and target");
    }
    if (!std::isfinite(g.angle)) throw InputError("non-finite rotation angle");
  }
}

Circuit peephole(const Circuit& c) {
  // Output gates live in `kept`; each wire holds a stack of indices into it.
  std::vector<Gate> kept;
  std::vector<bool> alive;
  std::vector<std::vector<std::size_t>> wire(static_cast<std::size_t>(c.num_qubits));
  for (const auto& g : c.gates) {
    if (g.kind == GateKind::Rz && std::abs(g.angle) <= kZeroAngle) continue;
    if (g.kind == GateKind::CX) {
      auto& a = wire[static_cast<std::size_t>(g.q0)];
      auto& b = wire[static_cast<std::size_t>(g.q1)];
      if (!a.empty() && !b.empty() && a.back() == b.back()) {
        const Gate& prev = kept[a.back()];
        if (prev.kind == GateKind::CX && prev.q0 == g.q0 && prev.q1 == g.q1) {
          alive[a.back()] = false;
          a.pop_back();
          b.pop_back();
          continue;
        }
      }
    }
    const std::size_t idx = kept.size();
    kept.push_back(g);
    alive.push_back(true);
    wire[static_cast<std::size_t>(g.q0)].push_back(idx);
    if (g.two_qubit()) wire[static_cast<std::size_t>(g.q1)].push_back(idx);
  }
  Circuit out{c.num_qubits, {}};
  for (std::size_t i = 0; i < kept.size(); ++i) {
    if (alive[i]) out.gates.push_back(kept[i]);
  }
  return out;
}

int schedule_depth(const Circuit& c) {
  std::vector<int> frontier(static_cast<std::size_t>(c.num_qubits), 0);
  int best = 0;
  for (const auto& g : c.gates) {
    int level = frontier[static_cast<std::size_t>(g.q0)];
    if (g.two_qubit()) level = std::max(level, frontier[static_cast<std::size_t>(g.q1)]);
    ++level;
    frontier[static_cast<std::size_t>(g.q0)] = level;
    if (g.two_qubit()) frontier[static_cast<std::size_t>(g.q1)] = level;
    best = std::max(best, level);
  }
  return best;
}

int depth(const Circuit& c) { return schedule_depth(peephole(c)); }

int cnot_count(const Circuit& c) {
  const Circuit p = peephole(c);
  return static_cast<int>(std::count_if(p.gates.begin(), p.gates.end(),
                                        [](const Gate& g) { return g.two_qubit(); }));
}

std::string circuit_to_json(const Circuit& c) {
  nlohmann::json j;
  j["n"] = c.num_qubits;
  j["gates"] = nlohmann::json::array();
  for (const auto& g : c.gates) {
    nlohmann::json gj{{"gate", gate_name(g.kind)}};
    if (g.two_qubit()) {
      gj["qubits"] = {g.q0, g.q1};
    } else {
      gj["qubits"] = {g.q0};
    }
    if (g.kind == GateKind::Rz) gj["angle"] = g.angle;
    j["gates"].push_back(std::move(gj));
  }
  return j.dump();
}

}  // namespace trotterdiff
