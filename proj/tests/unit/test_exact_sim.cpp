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
#include <numbers>
#include <random>

#include "dense_oracle.hpp"
#include "trotterdiff/errors.hpp"
#include "trotterdiff/exact_sim.hpp"

using namespace trotterdiff;
using Catch::Matchers::WithinAbs;

namespace {

StateVector random_state(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> d;
  StateVector v(Eigen::Index{1} << n);
  for (auto& a : v) a = Complex(d(gen), d(gen));
  return v.normalized();
}

Policy random_policy(std::size_t m, int max_k, std::mt19937_64& gen) {
  std::uniform_int_distribution<int> kdist(1, max_k);
  const int k = kdist(gen);
  std::uniform_int_distribution<int> gdist(0, k - 1);
  std::uniform_int_distribution<int> odist(0, 2);
  std::uniform_real_distribution<double> tdist(0.05, 1.0);
  RawPolicy raw;
  for (std::size_t j = 0; j < m; ++j) raw.grouping.push_back(gdist(gen));
  for (int i = 0; i < k; ++i) {
    raw.orders.push_back(std::array{1.0, 2.0, 4.0}[static_cast<std::size_t>(odist(gen))]);
    raw.tau.push_back(tdist(gen));
  }
  return normalize_policy(raw);
}

}  // namespace

TEST_CASE("evolve_exact known cases") {
  const Hamiltonian x(1, {{PauliString("X"), 1.0}}, 1.0);
  const StateVector out = evolve_exact(x, basis_state(1), std::numbers::pi / 2);
  CHECK(std::abs(out[0]) < 1e-12);
  CHECK(std::abs(out[1] - Complex(0, -1)) < 1e-12);

  std::mt19937_64 gen(2);
  const auto h = build_heisenberg(3, 0.4, 1.3, 0.8, 1.0);
  const StateVector psi = random_state(3, gen);
  CHECK((evolve_exact(h, psi, 0.0) - psi).norm() < 1e-12);
  for (double s : {0.3, 1.7, 12.0}) {
    const StateVector e = evolve_exact(h, psi, s);
    CHECK_THAT(e.norm(), WithinAbs(1.0, 1e-10));
    const StateVector dense = oracle::expm_minus_i(oracle::hamiltonian_matrix(h), s) * psi;
    CHECK((e - dense).norm() < 1e-10);
  }
}

TEST_CASE("run_circuit basics and dense agreement") {
  const StateVector one = run_circuit(Circuit{1, {Gate::x(0)}}, basis_state(1));
  CHECK(std::abs(one[1] - Complex(1.0)) < 1e-15);

  std::mt19937_64 gen(4);
  const StateVector psi = random_state(2, gen);
  CHECK((run_circuit(Circuit{2, {Gate::h(0), Gate::h(0)}}, psi) - psi).norm() < 1e-14);

  std::uniform_int_distribution<int> kind(0, 3), qubit(0, 2);
  std::uniform_real_distribution<double> angle(-3, 3);
  for (int rep = 0; rep < 20; ++rep) {
    Circuit c{3, {}};
    for (int i = 0; i < 25; ++i) {
      const int a = qubit(gen);
      switch (kind(gen)) {
        case 0: c.append(Gate::h(a)); break;
        case 1: c.append(Gate::x(a)); break;
        case 2: c.append(Gate::rz(a, angle(gen))); break;
        default: c.append(Gate::cx(a, (a + 1) % 3)); break;
      }
    }
    const StateVector in = random_state(3, gen);
    CHECK((run_circuit(c, in) - oracle::circuit_matrix(c) * in).norm() < 1e-12);
  }
  CHECK_THROWS_AS(run_circuit(Circuit{2, {Gate::cx(0, 0)}}, basis_state(2)), InputError);
  CHECK_THROWS_AS(run_circuit(Circuit{2, {}}, basis_state(3)), InputError);
}

TEST_CASE("fidelity") {
  std::mt19937_64 gen(6);
  const StateVector psi = random_state(2, gen);
  CHECK_THAT(fidelity(psi, psi), WithinAbs(1.0, 1e-14));
  CHECK(fidelity(basis_state(1, 0), basis_state(1, 1)) == 0.0);
  CHECK_THAT(fidelity(psi, std::polar(1.0, 0.77) * psi), WithinAbs(1.0, 1e-14));
}

TEST_CASE("policy_fidelity") {
  const Hamiltonian commuting(2, {{PauliString("ZZ"), 0.5}, {PauliString("ZI"), -0.3}}, 2.0);
  StateVector plus = StateVector::Constant(4, 0.5);
  CHECK_THAT(policy_fidelity(commuting, {{0, 0}, {1}, {1.0}}, plus), WithinAbs(1.0, 1e-12));
  CHECK_THAT(policy_fidelity(commuting, {{0, 1}, {2, 1}, {0.5, 0.5}}, plus), WithinAbs(1.0, 1e-12));

  // higher order wins at small t for a fixed grouping
  const auto h = build_tfim(2, 1.0, 0.5, 0.2);
  const StateVector psi0 = (StateVector(4) << 0.5, 0.5, Complex(0, 0.5), -0.5).finished();
  const double f1 = policy_fidelity(h, {{0, 1, 1}, {1, 1}, {0.5, 0.5}}, psi0);
  const double f4 = policy_fidelity(h, {{0, 1, 1}, {4, 4}, {0.5, 0.5}}, psi0);
  CHECK(f4 >= f1);
  CHECK(f1 < 1.0);

  // exactness when every block is internally commuting and blocks commute
  const Hamiltonian diag(3, {{PauliString("ZZI"), 0.3}, {PauliString("IZZ"), 0.4}, {PauliString("ZIZ"), -0.2}}, 1.5);
  std::mt19937_64 gen(8);
  for (int rep = 0; rep < 5; ++rep) {
    const Policy p = random_policy(diag.num_terms(), 3, gen);
    const StateVector in = random_state(3, gen);
    CHECK((run_circuit(compile_policy(diag, p), in) - evolve_exact(diag, in, diag.time())).norm() < 1e-10);
  }
}

TEST_CASE("tau refinement improves fidelity on 2-qubit TFIM") {
  // Splitting every segment in two is a strict refinement of the same
  // formula; averaged over random policies it should not lose fidelity.
  std::mt19937_64 gen(10);
  const auto h = build_tfim(2, 1.0, 0.8, 1.0);
  const StateVector psi0 = basis_state(2);
  const StateVector exact = evolve_exact(h, psi0, h.time());
  int improved = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const Policy p = random_policy(h.num_terms(), 3, gen);
    const auto sched = trotter_schedule(h, p);
    const double coarse = fidelity(exact, run_circuit(synthesize(h, sched), psi0));
    const double fine = fidelity(exact, run_circuit(synthesize(h, refine_schedule(sched, 4)), psi0));
    improved += fine >= coarse - 1e-12;
  }
  CHECK(improved >= 18);
}

TEST_CASE("trotter checkpoint states") {
  const auto h = build_tfim(2, 1.0, 0.5, 1.0);
  const StateVector psi0 = basis_state(2);
  const auto single = trotter_checkpoint_states(h, {{0, 0, 0}, {2}, {1.0}}, psi0);
  REQUIRE(single.size() == 1);
  CHECK(single[0].s == 1.0);

  const Policy p{{0, 1, 1}, {1, 4}, {0.5, 0.5}};
  const auto two = trotter_checkpoint_states(h, p, psi0);
  REQUIRE(two.size() == 2);
  CHECK_THAT(two[0].s, WithinAbs(0.5, 1e-15));
  CHECK(two[1].s == 1.0);
  CHECK((two[1].state - run_circuit(compile_policy(h, p), psi0)).norm() < 1e-12);
}

TEST_CASE("fidelity_grad_tau matches central finite differences") {
  std::mt19937_64 gen(12);
  const auto h = build_tfim(2, 1.0, 0.6, 1.5);
  const StateVector psi0 = basis_state(2);
  for (int rep = 0; rep < 10; ++rep) {
    const Policy p = random_policy(h.num_terms(), 3, gen);
    const Eigen::VectorXd g = fidelity_grad_tau_raw(h, p, psi0);
    const double step = 1e-5;
    for (int i = 0; i < p.num_groups(); ++i) {
      // F as a function of unconstrained tau: bypass validation by scaling t
      // so the perturbed weights still sum to one.
      auto f_at = [&](double delta) {
        std::vector<double> tau = p.tau;
        tau[static_cast<std::size_t>(i)] += delta;
        double sum = 0;
        for (double v : tau) sum += v;
        Policy q = p;
        for (auto& v : tau) v /= sum;
        q.tau = tau;
        const Hamiltonian hs = h.with_time(h.time() * sum);
        const StateVector exact = evolve_exact(h, psi0, h.time());
        return fidelity(exact, run_circuit(compile_policy(hs, q), psi0));
      };
      const double fd = (f_at(step) - f_at(-step)) / (2 * step);
      CHECK_THAT(g[i], WithinAbs(fd, 1e-5));
    }
    const Eigen::VectorXd projected = fidelity_grad_tau(h, p, psi0);
    CHECK(std::abs(projected.sum()) < 1e-9);
  }

  const Hamiltonian commuting(2, {{PauliString("ZZ"), 0.5}, {PauliString("ZI"), -0.3}}, 2.0);
  const Eigen::VectorXd zero = fidelity_grad_tau(commuting, {{0, 0}, {1}, {1.0}}, basis_state(2));
  CHECK(zero.norm() < 1e-12);
}

TEST_CASE("noise survival") {
  CHECK_THAT(noise_survival(72, 1e-3), WithinAbs(0.9306, 5e-4));
  CHECK_THAT(noise_survival(132, 1e-3), WithinAbs(0.876, 1e-3));
  CHECK(noise_survival(0, 0.3) == 1.0);
  CHECK(noise_survival(10, 1e-2) > noise_survival(11, 1e-2));
  CHECK(noise_survival(10, 1e-2) > noise_survival(10, 2e-2));
  CHECK_THROWS_AS(noise_survival(-1, 0.1), InputError);
}
