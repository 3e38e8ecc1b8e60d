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

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "dense_oracle.hpp"
#include "trotterdiff/errors.hpp"
#include "trotterdiff/graph.hpp"

using namespace trotterdiff;
using Catch::Matchers::WithinAbs;

TEST_CASE("node features of single terms") {
  const auto f = node_features({PauliString("XIII"), -0.5}, 4);
  const NodeFeatures expected{std::log(0.500001), -1, 1, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  for (int i = 0; i < kNodeFeatureDim; ++i) CHECK_THAT(f[i], WithinAbs(expected[i], 1e-15));

  const auto g = node_features({PauliString("ZIZ"), 1.0}, 3);
  CHECK(g[1] == 1.0);
  CHECK(g[2] == 2.0);
  CHECK(g[3] == 2.0);
  CHECK(g[4] == 1.0);
  CHECK(g[5] == 0.0);
  CHECK(g[6] == 1.0);
  CHECK(std::all_of(g.begin() + 7, g.end(), [](double v) { return v == 0.0; }));

  const auto tiny = node_features({PauliString("Z"), 1e-300}, 1);
  CHECK_THAT(tiny[0], WithinAbs(-13.8155, 1e-4));

  const auto ident = node_features({PauliString("III"), 2.0}, 3);
  CHECK(ident[2] == 0.0);
  CHECK(ident[3] == 0.0);

  CHECK_THROWS_AS(node_features({PauliString(std::string(13, 'X')), 1.0}, 13), InputError);
}

TEST_CASE("edge features") {
  const auto a = edge_features(PauliString("XI"), PauliString("ZI"));
  CHECK((a == EdgeFeatures{2, 1, 0}));
  const auto b = edge_features(PauliString("XI"), PauliString("IZ"));
  CHECK((b == EdgeFeatures{0, 0, 1}));
  const auto c = edge_features(PauliString("XX"), PauliString("XX"));
  CHECK((c == EdgeFeatures{0, 2, 1}));
}

TEST_CASE("build_graph edge sets") {
  const auto g = build_graph(build_tfim(2, 1.0, 0.5, 1.0));
  CHECK(g.num_nodes() == 3);
  REQUIRE(g.num_edges() == 2);
  CHECK(g.edges[0] == std::pair{0, 1});
  CHECK(g.edges[1] == std::pair{0, 2});
  CHECK(g.node_features.cols() == 16);
  CHECK(g.edge_features.cols() == 3);

  const Hamiltonian all_z(3, {{PauliString("ZII"), 1.0}, {PauliString("ZZI"), 0.3}, {PauliString("IZZ"), -0.2}}, 1.0);
  CHECK(build_graph(all_z).num_edges() == 0);
  CHECK(build_graph(Hamiltonian(2, {{PauliString("XY"), 1.0}}, 1.0)).num_edges() == 0);
}

TEST_CASE("edge count equals dense-oracle count of anticommuting pairs") {
  std::mt19937_64 gen(11);
  std::uniform_int_distribution<int> letter(0, 3);
  std::uniform_int_distribution<int> size(1, 10);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 1 + rep % 3;
    const int m = size(gen);
    std::vector<PauliTerm> terms;
    for (int j = 0; j < m; ++j) {
      std::string s;
      for (int q = 0; q < n; ++q) s += "IXYZ"[letter(gen)];
      terms.push_back({PauliString(s), 0.5 + j});
    }
    const Hamiltonian h(n, terms, 1.0);
    int brute = 0;
    for (int j = 0; j < m; ++j) {
      for (int k = j + 1; k < m; ++k) {
        const auto a = oracle::pauli_matrix(terms[j].string.str());
        const auto b = oracle::pauli_matrix(terms[k].string.str());
        brute += (a * b - b * a).norm() > 1e-12;
      }
    }
    const auto g = build_graph(h);
    CHECK(g.num_edges() == brute);
    for (auto [j, k] : g.edges) CHECK(j < k);
  }
}

TEST_CASE("relabeling terms permutes nodes and edges consistently") {
  std::mt19937_64 gen(5);
  const auto h = build_heisenberg(4, 0.3, 1.1, 0.7, 1.0);
  const auto g = build_graph(h);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<std::size_t> perm(h.num_terms());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    const auto gp = build_graph(h.permuted(perm));
    // node j of the permuted graph is node perm[j] of the original
    for (std::size_t j = 0; j < perm.size(); ++j) {
      CHECK(gp.node_features.row(static_cast<Eigen::Index>(j)) ==
            g.node_features.row(static_cast<Eigen::Index>(perm[j])));
    }
    std::map<std::pair<int, int>, Eigen::RowVectorXd> original;
    for (int e = 0; e < g.num_edges(); ++e) original[g.edges[e]] = g.edge_features.row(e);
    REQUIRE(gp.num_edges() == g.num_edges());
    for (int e = 0; e < gp.num_edges(); ++e) {
      auto [a, b] = gp.edges[e];
      const int pa = static_cast<int>(perm[a]);
      const int pb = static_cast<int>(perm[b]);
      const std::pair<int, int> key{std::min(pa, pb), std::max(pa, pb)};
      REQUIRE(original.count(key) == 1);
      CHECK(original[key] == Eigen::RowVectorXd(gp.edge_features.row(e)));
    }
  }
}
