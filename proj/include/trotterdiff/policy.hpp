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

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace trotterdiff {

/**
 * Trotter-Suzuki policy over M terms and K groups.
 *
 * Group i is both a block of the split (terms with grouping == i) and a time
 * segment of length tau[i] * t, within which the order-orders[i] product
 * formula runs over all K blocks. Segments are applied in ascending order.
 */
struct Policy {
  std::vector<int> grouping;  // length M, ids dense in [0, K)
  std::vector<int> orders;    // length K, each in {1, 2, 4}
  std::vector<double> tau;    // length K, nonnegative, sums to 1

  int num_groups() const { return static_cast<int>(orders.size()); }
  std::size_t num_terms() const { return grouping.size(); }

  friend bool operator==(const Policy&, const Policy&) = default;
};

/** Unpost-processed generator output; orders may be any real value. */
struct RawPolicy {
  std::vector<int> grouping;
  std::vector<double> orders;
  std::vector<double> tau;
};

/** Snap to the nearest of {1, 2, 4}; ties go to the smaller order. */
int snap_order(double raw);

/**
 * Drop empty groups (compacting ids, preserving their relative order), clip
 * tau at zero and renormalize over surviving groups, snap orders.
 * Throws InputError on inconsistent lengths or when no tau mass survives.
 */
Policy normalize_policy(const RawPolicy& raw);

/** Throws InputError unless the policy satisfies every invariant for M terms. */
void validate_policy(const Policy& policy, std::size_t num_terms);

/** Term indices per group, ascending within each block. */
std::vector<std::vector<std::size_t>> policy_blocks(const Policy& policy);

/** Every term in its own group, K = M segments of equal length. */
Policy one_term_per_block_policy(std::size_t num_terms, int order);

// JSON: {"grouping": [int], "orders": [int], "tau": [float]}
std::string policy_to_json(const Policy& policy);
Policy policy_from_json(std::string_view text);
void save_policy(const std::filesystem::path& path, const Policy& policy);
Policy load_policy(const std::filesystem::path& path);

}  // namespace trotterdiff
