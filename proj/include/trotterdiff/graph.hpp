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

#include <array>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "trotterdiff/pauli.hpp"

namespace trotterdiff {

inline constexpr int kNodeFeatureDim = 16;
inline constexpr int kEdgeFeatureDim = 3;
inline constexpr int kMaxGraphQubits = 12;

using NodeFeatures = std::array<double, kNodeFeatureDim>;
using EdgeFeatures = std::array<double, kEdgeFeatureDim>;

/** Commutator graph: one node per term, one undirected edge per anticommuting pair. */
struct HamiltonianGraph {
  Eigen::MatrixXd node_features;            // M x 16
  std::vector<std::pair<int, int>> edges;   // j < k, stored once
  Eigen::MatrixXd edge_features;            // |E| x 3

  int num_nodes() const { return static_cast<int>(node_features.rows()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
};

/**
 * [log(|c| + 1e-6), sign(c), |supp|, max supp - min supp, support mask padded
 * to 12]. Requires n <= 12.
 */
NodeFeatures node_features(const PauliTerm& term, int n);

/** [2 * 1{anticommute}, |supp(p) & supp(q)|, 1{commute}]. */
EdgeFeatures edge_features(const PauliString& p, const PauliString& q);

HamiltonianGraph build_graph(const Hamiltonian& h);

}  // namespace trotterdiff
