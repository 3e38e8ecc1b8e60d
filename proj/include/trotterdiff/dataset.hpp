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
#include <filesystem>
#include <string>
#include <vector>

#include "trotterdiff/pauli.hpp"
#include "trotterdiff/policy.hpp"
#include "trotterdiff/rng.hpp"

namespace trotterdiff {

inline constexpr double kCorpusTime = 2.0;
inline constexpr int kCorpusMaxGroups = 6;
inline constexpr double kCouplingMin = 0.5, kCouplingMax = 2.0;
inline constexpr double kFieldMin = 0.1, kFieldMax = 0.5;
inline constexpr double kHeisenbergMin = 0.2, kHeisenbergMax = 2.0;

/** Labeled TFIM row. */
struct CorpusRow {
  int n;
  double coupling;
  double field;
  Hamiltonian hamiltonian;
  Policy policy;
  double fidelity;  // exact, from |0...0>
  int depth;
};

struct HeisenbergInstance {
  int n;
  double jx, jy, jz;
  Hamiltonian hamiltonian;
};

/**
 * K ~ U{1..min(M, max_groups)}, uniform grouping, orders uniform over {1,2,4},
 * tau ~ Dirichlet(1). Empty groups are dropped afterwards.
 */
Policy random_policy(std::size_t num_terms, int max_groups, Rng& rng);

/** Rows per n in {4, 6, 8} for a 6:3:1 split; throws InputError when count < 10. */
std::array<int, 3> corpus_split(int count);

CorpusRow make_tfim_row(int n, Rng& rng);
/** Fixed-n rows, row i drawn from Rng(seed).split(i). */
std::vector<CorpusRow> gen_tfim_rows(int n, int count, std::uint64_t seed);
/** Random policies on one fixed TFIM instance at the corpus time. */
std::vector<CorpusRow> gen_tfim_instance_rows(int n, double coupling, double field, int count, std::uint64_t seed);
/** Mixed n in {4, 6, 8}, ordered by n. */
std::vector<CorpusRow> gen_tfim_corpus(int count, std::uint64_t seed);

/** per_n instances for each n in {4, 6, 8}, couplings uniform in [0.2, 2.0], periodic. */
std::vector<HeisenbergInstance> gen_heisenberg_set(int per_n, std::uint64_t seed);

std::string corpus_row_to_json(const CorpusRow& row);
CorpusRow corpus_row_from_json(const std::string& line);
void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRow>& rows);
std::vector<CorpusRow> read_corpus(const std::filesystem::path& path);

std::string instance_to_json(const HeisenbergInstance& inst);
void write_instances(const std::filesystem::path& path, const std::vector<HeisenbergInstance>& set);
std::vector<HeisenbergInstance> read_instances(const std::filesystem::path& path);

}  // namespace trotterdiff
