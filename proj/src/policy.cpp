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

#include "trotterdiff/policy.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trotterdiff/errors.hpp"

namespace trotterdiff {

using nlohmann::json;

int snap_order(double raw) {
  if (!std::isfinite(raw)) throw InputError("non-finite order");
  if (raw <= 1.5) return 1;
  if (raw <= 3.0) return 2;
  return 4;
}

Policy normalize_policy(const RawPolicy& raw) {
  const std::size_t k_raw = raw.orders.size();
  if (raw.tau.size() != k_raw) throw InputError("orders and tau lengths differ");
  if (raw.grouping.empty()) throw InputError("empty grouping");
  std::vector<int> count(k_raw, 0);
  for (int g : raw.grouping) {
    if (g < 0 || static_cast<std::size_t>(g) >= k_raw) {
      throw InputError("group id " + std::to_string(g) + " outside [0, " +
                       std::to_string(k_raw) + ")");
    }
    ++count[static_cast<std::size_t>(g)];
  }
  std::vector<int> remap(k_raw, -1);
  Policy out;
  double mass = 0.0;
  for (std::size_t g = 0; g < k_raw; ++g) {
    if (count[g] == 0) continue;
    remap[g] = static_cast<int>(out.orders.size());
    out.orders.push_back(snap_order(raw.orders[g]));
    const double tau = std::isfinite(raw.tau[g]) ? std::max(raw.tau[g], 0.0) : 0.0;
    out.tau.push_back(tau);
    mass += tau;
  }
  if (!(mass > 0.0)) throw InputError("all time-step weights are zero");
  for (auto& tau : out.tau) tau /= mass;
  out.grouping.reserve(raw.grouping.size());
  for (int g : raw.grouping) out.grouping.push_back(remap[static_cast<std::size_t>(g)]);
  return out;
}

void validate_policy(const Policy& policy, std::size_t num_terms) {
  if (policy.grouping.size() != num_terms) {
    throw InputError("grouping length " + std::to_string(policy.grouping.size()) +
                     " does not match term count " + std::to_string(num_terms));
  }
  const std::size_t k = policy.orders.size();
  if (k == 0 || policy.tau.size() != k) throw InputError("orders/tau length mismatch");
  std::vector<int> count(k, 0);
  for (int g : policy.grouping) {
    if (g < 0 || static_cast<std::size_t>(g) >= k) throw InputError("group id out of range");
    ++count[static_cast<std::size_t>(g)];
  }
  for (int c : count) {
    if (c == 0) throw InputError("policy has an empty group");
  }
  for (int o : policy.orders) {
    if (o != 1 && o != 2 && o != 4) throw InputError("order must be 1, 2 or 4");
  }
  double sum = 0.0;
  for (double t : policy.tau) {
    if (!(t >= 0.0) || !std::isfinite(t)) throw InputError("tau must be nonnegative");
    sum += t;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("tau does not sum to 1");
}

std::vector<std::vector<std::size_t>> policy_blocks(const Policy& policy) {
  std::vector<std::vector<std::size_t>> blocks(policy.orders.size());
  for (std::size_t j = 0; j < policy.grouping.size(); ++j) {
    blocks.at(static_cast<std::size_t>(policy.grouping[j])).push_back(j);
  }
  return blocks;
}

Policy one_term_per_block_policy(std::size_t num_terms, int order) {
  Policy p;
  p.grouping.resize(num_terms);
  std::iota(p.grouping.begin(), p.grouping.end(), 0);
  p.orders.assign(num_terms, order);
  p.tau.assign(num_terms, 1.0 / static_cast<double>(num_terms));
  return p;
}

std::string policy_to_json(const Policy& policy) {
  json j;
  j["grouping"] = policy.grouping;
  j["orders"] = policy.orders;
  j["tau"] = policy.tau;
  return j.dump();
}

Policy policy_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    Policy p;
    p.grouping = j.at("grouping").get<std::vector<int>>();
    p.orders = j.at("orders").get<std::vector<int>>();
    p.tau = j.at("tau").get<std::vector<double>>();
    return p;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed policy JSON: ") + e.what());
  }
}

void save_policy(const std::filesystem::path& path, const Policy& policy) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << policy_to_json(policy) << '\n';
}

Policy load_policy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return policy_from_json(buf.str());
}

}  // namespace trotterdiff
