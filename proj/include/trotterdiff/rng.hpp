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

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace trotterdiff {

/**
 * Seeded, splittable random stream.
 *
 * Every stochastic routine in the library takes an Rng& explicitly. Child
 * streams derived with split() are independent of the order in which the
 * parent is later consumed, so per-row or per-sample seeds stay stable.
 */
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  /** Child stream keyed by `tag`; does not advance this stream. */
  Rng split(std::uint64_t tag) const;

  std::uint64_t seed() const { return seed_; }

  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double log_uniform(double lo, double hi);
  double normal();
  int uniform_int(int lo, int hi);        // inclusive
  std::size_t categorical(std::span<const double> probs);
  std::vector<double> dirichlet(std::size_t k, double alpha);
  bool bernoulli(double p);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

/** SplitMix64 finalizer; used to derive child seeds. */
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace trotterdiff
