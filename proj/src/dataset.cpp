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

#include "trotterdiff/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "trotterdiff/errors.hpp"
#include "trotterdiff/exact_sim.hpp"

namespace trotterdiff {

using nlohmann::json;

namespace {

constexpr std::array<int, 3> kCorpusSizes = {4, 6, 8};

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

Policy random_policy(std::size_t num_terms, int max_groups, Rng& rng) {
  if (num_terms == 0 || max_groups < 1) throw InputError("random_policy needs terms and groups");
  const int k = rng.uniform_int(1, std::min(static_cast<int>(num_terms), max_groups));
  RawPolicy raw;
  for (std::size_t j = 0; j < num_terms; ++j) raw.grouping.push_back(rng.uniform_int(0, k - 1));
  static constexpr int kOrders[] = {1, 2, 4};
  for (int i = 0; i < k; ++i) raw.orders.push_back(kOrders[rng.uniform_int(0, 2)]);
  raw.tau = rng.dirichlet(static_cast<std::size_t>(k), 1.0);
  return normalize_policy(raw);
}

std::array<int, 3> corpus_split(int count) {
  if (count < 10) throw InputError("corpus count must be at least 10");
  const int a = static_cast<int>(std::lround(0.6 * count));
  const int b = static_cast<int>(std::lround(0.3 * count));
  return {a, b, count - a - b};
}

CorpusRow make_tfim_row(int n, Rng& rng) {
  const double j = rng.log_uniform(kCouplingMin, kCouplingMax);
  const double f = rng.log_uniform(kFieldMin, kFieldMax);
  Hamiltonian h = build_tfim(n, j, f, kCorpusTime);
  Policy p = random_policy(h.num_terms(), kCorpusMaxGroups, rng);
  const double fid = policy_fidelity(h, p, basis_state(n));
  const int d = depth(compile_policy(h, p));
  return {n, j, f, std::move(h), std::move(p), fid, d};
}

std::vector<CorpusRow> gen_tfim_rows(int n, int count, std::uint64_t seed) {
  if (count < 0) throw InputError("negative row count");
  const Rng root(seed);
  std::vector<CorpusRow> rows;
  rows.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng r = root.split(static_cast<std::uint64_t>(i));
    rows.push_back(make_tfim_row(n, r));
  }
  return rows;
}

std::vector<CorpusRow> gen_tfim_instance_rows(int n, double coupling, double field, int count,
                                              std::uint64_t seed) {
  if (count < 0) throw InputError("negative row count");
  const Hamiltonian h = build_tfim(n, coupling, field, kCorpusTime);
  const ExactPropagator exact(h);
  const StateVector psi0 = basis_state(n);
  const Rng root(seed);
  std::vector<CorpusRow> rows;
  rows.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng r = root.split(static_cast<std::uint64_t>(i));
    Policy p = random_policy(h.num_terms(), kCorpusMaxGroups, r);
    const double fid = policy_fidelity(exact, h, p, psi0);
    const int d = depth(compile_policy(h, p));
    rows.push_back({n, coupling, field, h, std::move(p), fid, d});
  }
  return rows;
}

std::vector<CorpusRow> gen_tfim_corpus(int count, std::uint64_t seed) {
  const auto split = corpus_split(count);
  std::vector<CorpusRow> rows;
  for (std::size_t i = 0; i < kCorpusSizes.size(); ++i) {
    auto part = gen_tfim_rows(kCorpusSizes[i], split[i], mix_seed(seed + i));
    std::move(part.begin(), part.end(), std::back_inserter(rows));
  }
  return rows;
}

std::vector<HeisenbergInstance> gen_heisenberg_set(int per_n, std::uint64_t seed) {
  if (per_n < 1) throw InputError("per_n must be positive");
  const Rng root(seed);
  std::vector<HeisenbergInstance> set;
  std::uint64_t tag = 0;
  for (int n : kCorpusSizes) {
    for (int i = 0; i < per_n; ++i) {
      Rng r = root.split(tag++);
      const double jx = r.uniform(kHeisenbergMin, kHeisenbergMax);
      const double jy = r.uniform(kHeisenbergMin, kHeisenbergMax);
      const double jz = r.uniform(kHeisenbergMin, kHeisenbergMax);
      set.push_back({n, jx, jy, jz, build_heisenberg(n, jx, jy, jz, kCorpusTime)});
    }
  }
  return set;
}

std::string corpus_row_to_json(const CorpusRow& row) {
  json j;
  j["kind"] = "tfim";
  j["n"] = row.n;
  j["J"] = row.coupling;
  j["h"] = row.field;
  j["hamiltonian"] = json::parse(hamiltonian_to_json(row.hamiltonian));
  j["policy"] = json::parse(policy_to_json(row.policy));
  j["fidelity"] = row.fidelity;
  j["depth"] = row.depth;
  return j.dump();
}

CorpusRow corpus_row_from_json(const std::string& line) {
  try {
    const json j = json::parse(line);
    Hamiltonian h = hamiltonian_from_json(j.at("hamiltonian").dump());
    Policy p = policy_from_json(j.at("policy").dump());
    validate_policy(p, h.num_terms());
    const double fid = j.at("fidelity").get<double>();
    if (!(fid >= 0.0 && fid <= 1.0 + 1e-9)) throw FormatError("fidelity label outside [0, 1]");
    return {j.at("n").get<int>(), j.at("J").get<double>(), j.at("h").get<double>(), std::move(h), std::move(p),
            fid, j.at("depth").get<int>()};
  } catch (const json::exception& e) {
    throw FormatError(std::string("corpus row: ") + e.what());
  } catch (const InputError& e) {
    throw FormatError(std::string("corpus row: ") + e.what());
  }
}

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRow>& rows) {
  std::ofstream out = open_out(path);
  for (const auto& r : rows) out << corpus_row_to_json(r) << '\n';
}

std::vector<CorpusRow> read_corpus(const std::filesystem::path& path) {
  std::vector<CorpusRow> rows;
  for (const auto& line : read_lines(path)) rows.push_back(corpus_row_from_json(line));
  return rows;
}

std::string instance_to_json(const HeisenbergInstance& inst) {
  json j;
  j["kind"] = "heisenberg";
  j["n"] = inst.n;
  j["Jx"] = inst.jx;
  j["Jy"] = inst.jy;
  j["Jz"] = inst.jz;
  j["hamiltonian"] = json::parse(hamiltonian_to_json(inst.hamiltonian));
  return j.dump();
}

void write_instances(const std::filesystem::path& path, const std::vector<HeisenbergInstance>& set) {
  std::ofstream out = open_out(path);
  for (const auto& inst : set) out << instance_to_json(inst) << '\n';
}

std::vector<HeisenbergInstance> read_instances(const std::filesystem::path& path) {
  std::vector<HeisenbergInstance> set;
  for (const auto& line : read_lines(path)) {
    try {
      const json j = json::parse(line);
      set.push_back({j.at("n").get<int>(), j.at("Jx").get<double>(), j.at("Jy").get<double>(),
                     j.at("Jz").get<double>(), hamiltonian_from_json(j.at("hamiltonian").dump())});
    } catch (const json::exception& e) {
      throw FormatError(std::string("instance row: ") + e.what());
    }
  }
  return set;
}

}  // namespace trotterdiff
