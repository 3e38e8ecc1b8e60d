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

#include "trotterdiff/graph.hpp"

#include <cmath>

#include "trotterdiff/errors.hpp"

namespace trotterdiff {

NodeFeatures node_features(const PauliTerm& term, int n) {
  if (n > kMaxGraphQubits) {
    throw InputError("node features support at most 12 qubits");
  }
  if (term.string.size() != static_cast<std::size_t>(n)) {
    throw InputError("term length does not match qubit count");
  }
  NodeFeatures f{};
  const double c = term.coeff;
  f[0] = std::log(std::abs(c) + 1e-6);
  f[1] = (c > 0.0) - (c < 0.0);
  const auto supp = term.string.support();
  f[2] = static_cast<double>(supp.size());
  f[3] = supp.empty() ? 0.0 : static_cast<double>(supp.back() - supp.front());
  for (int q : supp) f[4 + static_cast<std::size_t>(q)] = 1.0;
  return f;
}

EdgeFeatures edge_features(const PauliString& p, const PauliString& q) {
  const bool comm = commutes(p, q);
  return {comm ? 0.0 : 2.0, static_cast<double>(shared_support(p, q)),
          comm ? 1.0 : 0.0};
}

HamiltonianGraph build_graph(const Hamiltonian& h) {
  const int m = static_cast<int>(h.num_terms());
  const int n = h.num_qubits();
  HamiltonianGraph g;
  g.node_features.resize(m, kNodeFeatureDim);
  for (int j = 0; j < m; ++j) {
    const auto f = node_features(h.term(static_cast<std::size_t>(j)), n);
    for (int c = 0; c < kNodeFeatureDim; ++c) g.node_features(j, c) = f[c];
  }
  std::vector<EdgeFeatures> feats;
  for (int j = 0; j < m; ++j) {
    for (int k = j + 1; k < m; ++k) {
      const auto& p = h.term(static_cast<std::size_t>(j)).string;
      const auto& q = h.term(static_cast<std::size_t>(k)).string;
      if (!commutes(p, q)) {
        g.edges.emplace_back(j, k);
        feats.push_back(edge_features(p, q));
      }
    }
  }
  g.edge_features.resize(static_cast<Eigen::Index>(feats.size()), kEdgeFeatureDim);
  for (std::size_t e = 0; e < feats.size(); ++e) {
    for (int c = 0; c < kEdgeFeatureDim; ++c) {
      g.edge_features(static_cast<Eigen::Index>(e), c) = feats[e][c];
    }
  }
  return g;
}

}  // namespace trotterdiff
