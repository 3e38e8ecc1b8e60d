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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include "trotterdiff/dataset.hpp"
#include "trotterdiff/errors.hpp"
#include "trotterdiff/exact_sim.hpp"

using namespace trotterdiff;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("trotterdiff_test_" + name);
}

}  // namespace

TEST_CASE("corpus split follows 6:3:1", "[dataset]") {
  CHECK(corpus_split(5000) == std::array<int, 3>{3000, 1500, 500});
  CHECK(corpus_split(10) == std::array<int, 3>{6, 3, 1});
  for (int c : {11, 17, 101, 999}) {
    const auto s = corpus_split(c);
    CHECK(s[0] + s[1] + s[2] == c);
    CHECK(s[2] >= 0);
  }
  CHECK_THROWS_AS(corpus_split(9), InputError);
  CHECK_THROWS_AS(gen_tfim_corpus(5, 1), InputError);
}

TEST_CASE("random policies are valid and bounded", "[dataset]") {
  Rng rng(4);
  std::map<int, int> ks;
  for (int i = 0; i < 500; ++i) {
    const std::size_t m = static_cast<std::size_t>(rng.uniform_int(1, 12));
    const Policy p = random_policy(m, kCorpusMaxGroups, rng);
    REQUIRE_NOTHROW(validate_policy(p, m));
    CHECK(p.num_groups() <= std::min<int>(static_cast<int>(m), kCorpusMaxGroups));
    ++ks[p.num_groups()];
  }
  CHECK(ks.size() == static_cast<std::size_t>(kCorpusMaxGroups));
}

TEST_CASE("TFIM corpus ranges, labels and determinism", "[dataset]") {
  const auto rows = gen_tfim_corpus(20, 7);
  REQUIRE(rows.size() == 20);
  std::map<int, int> per_n;
  for (const auto& r : rows) {
    ++per_n[r.n];
    CHECK(r.coupling >= kCouplingMin);
    CHECK(r.coupling <= kCouplingMax);
    CHECK(r.field >= kFieldMin);
    CHECK(r.field <= kFieldMax);
    CHECK(r.hamiltonian.time() == kCorpusTime);
    CHECK(r.hamiltonian == build_tfim(r.n, r.coupling, r.field, kCorpusTime));
    CHECK(r.fidelity >= 0.0);
    CHECK(r.fidelity <= 1.0 + 1e-12);
    CHECK_NOTHROW(validate_policy(r.policy, r.hamiltonian.num_terms()));
    // Labels recomputed through the exact simulator under the same build.
    CHECK(r.fidelity == policy_fidelity(r.hamiltonian, r.policy, basis_state(r.n)));
    CHECK(r.depth == depth(compile_policy(r.hamiltonian, r.policy)));
  }
  CHECK(per_n[4] == 12);
  CHECK(per_n[6] == 6);
  CHECK(per_n[8] == 2);

  const auto again = gen_tfim_corpus(20, 7);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(corpus_row_to_json(rows[i]) == corpus_row_to_json(again[i]));
  const auto other = gen_tfim_corpus(20, 8);
  CHECK(corpus_row_to_json(rows[0]) != corpus_row_to_json(other[0]));
}

TEST_CASE("log-uniform draws are centered in log space", "[dataset]") {
  Rng rng(12);
  const int n = 10000;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    const double j = rng.log_uniform(kCouplingMin, kCouplingMax);
    REQUIRE(j >= kCouplingMin);
    REQUIRE(j <= kCouplingMax);
    sum += std::log(j);
  }
  const double lo = std::log(kCouplingMin), hi = std::log(kCouplingMax);
  const double se = (hi - lo) / std::sqrt(12.0) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(sum / n - 0.5 * (lo + hi)) < 3 * se);
}

TEST_CASE("Heisenberg set", "[dataset]") {
  const auto set = gen_heisenberg_set(50, 3);
  REQUIRE(set.size() == 150);
  std::map<int, int> per_n;
  for (const auto& inst : set) {
    ++per_n[inst.n];
    for (double j : {inst.jx, inst.jy, inst.jz}) {
      CHECK(j >= kHeisenbergMin);
      CHECK(j <= kHeisenbergMax);
    }
    CHECK(inst.hamiltonian == build_heisenberg(inst.n, inst.jx, inst.jy, inst.jz, kCorpusTime));
    CHECK(inst.hamiltonian.num_terms() == static_cast<std::size_t>(3 * inst.n));
  }
  CHECK(per_n == std::map<int, int>{{4, 50}, {6, 50}, {8, 50}});
  CHECK_THROWS_AS(gen_heisenberg_set(0, 1), InputError);
}

TEST_CASE("JSON-lines round trip", "[dataset]") {
  const auto rows = gen_tfim_rows(4, 6, 2);
  const auto path = temp_file("corpus.jsonl");
  write_corpus(path, rows);
  const auto back = read_corpus(path);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].hamiltonian == rows[i].hamiltonian);
    CHECK(back[i].policy.grouping == rows[i].policy.grouping);
    CHECK(back[i].policy.orders == rows[i].policy.orders);
    CHECK(back[i].fidelity == rows[i].fidelity);
    CHECK(back[i].depth == rows[i].depth);
  }

  const auto set = gen_heisenberg_set(2, 5);
  const auto ipath = temp_file("heis.jsonl");
  write_instances(ipath, set);
  const auto iback = read_instances(ipath);
  REQUIRE(iback.size() == set.size());
  for (std::size_t i = 0; i < set.size(); ++i) CHECK(iback[i].hamiltonian == set[i].hamiltonian);

  {
    std::ofstream out(path);
    out << "{\"n\": 4}\n";
  }
  CHECK_THROWS_AS(read_corpus(path), FormatError);
  CHECK_THROWS_AS(read_corpus(temp_file("missing.jsonl")), InputError);
  std::filesystem::remove(path);
  std::filesystem::remove(ipath);
}
