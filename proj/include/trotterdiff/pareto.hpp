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

#include <vector>

#include "trotterdiff/policy.hpp"

namespace trotterdiff {

/** Hypervolume reference: zero fidelity, depth 10000. */
inline constexpr double kReferenceFidelity = 0.0;
inline constexpr double kReferenceDepth = 10000.0;

struct ParetoPoint {
  double fidelity = 0;  // maximized
  double depth = 0;     // minimized
  int cnots = 0;
  Policy policy;
  long iteration = 0;
  int hamiltonian = 0;  // index into the Hamiltonian pool
};

/** a is no worse on both axes and strictly better on one. */
bool dominates(const ParetoPoint& a, const ParetoPoint& b);

class ParetoFront {
 public:
  /**
   * Inserts p unless it is dominated by or coincides with a member; removes
   * the members p dominates. Returns whether p was inserted.
   */
  bool insert(const ParetoPoint& p);
  const std::vector<ParetoPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

 private:
  std::vector<ParetoPoint> points_;
};

bool pareto_update(ParetoFront& front, const ParetoPoint& p);

/** Nondominated subset by a sort and sweep, sorted by ascending depth. */
std::vector<ParetoPoint> pareto_filter(std::vector<ParetoPoint> points);

ParetoFront merge_fronts(const std::vector<ParetoFront>& fronts);

/** Area dominated between the points and the reference, sweeping fidelity-sorted points. */
double hypervolume(const std::vector<ParetoPoint>& points, double ref_fidelity = kReferenceFidelity,
                   double ref_depth = kReferenceDepth);
double hypervolume(const ParetoFront& front, double ref_fidelity = kReferenceFidelity,
                   double ref_depth = kReferenceDepth);

}  // namespace trotterdiff
