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

#include "trotterdiff/pareto.hpp"

#include <algorithm>

namespace trotterdiff {

bool dominates(const ParetoPoint& a, const ParetoPoint& b) {
  return a.fidelity >= b.fidelity && a.depth <= b.depth && (a.fidelity > b.fidelity || a.depth < b.depth);
}

namespace {

bool same_objectives(const ParetoPoint& a, const ParetoPoint& b) {
  return a.fidelity == b.fidelity && a.depth == b.depth;
}

}  // namespace

bool ParetoFront::insert(const ParetoPoint& p) {
  for (const auto& q : points_) {
    if (dominates(q, p) || same_objectives(q, p)) return false;
  }
  std::erase_if(points_, [&](const ParetoPoint& q) { return dominates(p, q); });
  points_.push_back(p);
  return true;
}

bool pareto_update(ParetoFront& front, const ParetoPoint& p) { return front.insert(p); }

std::vector<ParetoPoint> pareto_filter(std::vector<ParetoPoint> points) {
  // Ascending depth, ties by descending fidelity: a point survives iff its
  // fidelity beats everything shallower.
  std::stable_sort(points.begin(), points.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.fidelity > b.fidelity;
  });
  std::vector<ParetoPoint> out;
  for (auto& p : points) {
    if (out.empty() || p.fidelity > out.back().fidelity) out.push_back(std::move(p));
  }
  return out;
}

ParetoFront merge_fronts(const std::vector<ParetoFront>& fronts) {
  ParetoFront merged;
  for (const auto& f : fronts)
    for (const auto& p : f.points()) merged.insert(p);
  return merged;
}

double hypervolume(const std::vector<ParetoPoint>& points, double ref_fidelity, double ref_depth) {
  std::vector<ParetoPoint> clipped;
  for (const auto& p : points) {
    if (p.fidelity > ref_fidelity && p.depth < ref_depth) clipped.push_back(p);
  }
  std::vector<ParetoPoint> front = pareto_filter(std::move(clipped));
  // Descending fidelity means descending depth on a front.
  std::reverse(front.begin(), front.end());
  double hv = 0;
  for (std::size_t i = 0; i < front.size(); ++i) {
    const double below = i + 1 < front.size() ? front[i + 1].fidelity : ref_fidelity;
    hv += (front[i].fidelity - below) * (ref_depth - front[i].depth);
  }
  return hv;
}

double hypervolume(const ParetoFront& front, double ref_fidelity, double ref_depth) {
  return hypervolume(front.points(), ref_fidelity, ref_depth);
}

}  // namespace trotterdiff
