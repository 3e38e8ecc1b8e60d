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

// One line per acceptance criterion; exit status 1 when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <ctime>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trotterdiff/compiler.hpp"
#include "trotterdiff/dataset.hpp"
#include "trotterdiff/diffusion.hpp"
#include "trotterdiff/exact_sim.hpp"
#include "trotterdiff/gnn.hpp"
#include "trotterdiff/loop.hpp"
#include "trotterdiff/nn/ops.hpp"
#include "trotterdiff/pareto.hpp"
#include "trotterdiff/pinn.hpp"
#include "trotterdiff/schedule.hpp"
#include "unit/dense_oracle.hpp"
#include "unit/grad_check.hpp"

using namespace trotterdiff;
using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double budget_s;  // CPU seconds
  std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double tv(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return 0.5 * (a - b).cwiseAbs().sum(); }

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double sx = std::accumulate(x.begin(), x.end(), 0.0), sy = std::accumulate(y.begin(), y.end(), 0.0);
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// 1 ---------------------------------------------------------------------------
Outcome pauli_oracle() {
  const std::string letters = "IXYZ";
  std::vector<std::string> all;
  for (char a : letters)
    for (char b : letters) all.push_back(std::string{a, b});
  int agree = 0, total = 0;
  for (const auto& p : all) {
    for (const auto& q : all) {
      const Eigen::MatrixXcd a = oracle::pauli_matrix(p), b = oracle::pauli_matrix(q);
      const bool dense = (a * b - b * a).norm() < 1e-12;
      agree += dense == commutes(PauliString(p), PauliString(q));
      ++total;
    }
  }
  return {agree == total && total == 256, fmt("%d/%d pairs agree with dense commutators", agree, total)};
}

// 2 ---------------------------------------------------------------------------
Outcome trotter_scaling() {
  const struct {
    int order;
    double want, tol;
  } cases[] = {{1, 2.0, 0.3}, {2, 3.0, 0.3}, {4, 5.0, 0.5}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    std::vector<double> lx, ly;
    for (int i = 0; i < 8; ++i) {
      const double t = 0.05 * std::pow(8.0, i / 7.0);
      const Hamiltonian h = build_tfim(3, 1.0, 0.5, t);
      const Circuit circ = compile_uniform(h, c.order, 1);
      const Eigen::MatrixXcd exact = oracle::expm_minus_i(oracle::hamiltonian_matrix(h), t);
      const Eigen::MatrixXcd u = oracle::circuit_matrix(circ);
      const std::complex<double> phase = (exact.adjoint() * u).trace();
      const Eigen::MatrixXcd aligned = u * std::polar(1.0, -std::arg(phase));
      lx.push_back(std::log(t));
      ly.push_back(std::log((aligned - exact).operatorNorm()));
    }
    const double s = fit_slope(lx, ly);
    ok = ok && std::abs(s - c.want) <= c.tol;
    detail += fmt("order %d slope %.3f (want %.0f+-%.1f) ", c.order, s, c.want, c.tol);
  }
  return {ok, detail};
}

// 3 ---------------------------------------------------------------------------
Outcome pinn_gates() {
  const Hamiltonian h = build_tfim(2, 1.0, 0.3, 1.0);
  const StateVector psi0 = basis_state(2);
  Rng rng(7);
  PinnModel model(h, PinnConfig::desk(), rng);
  const PinnTrainResult res = train_pinn(model, h, psi0, 4000, rng);
  Rng pr(9);
  double err = 0;
  for (int i = 0; i < 50; ++i) {
    const Policy p = random_policy(h.num_terms(), kCorpusMaxGroups, pr);
    err += std::abs(surrogate_fidelity(model, h, p, psi0) - policy_fidelity(h, p, psi0)) / 50;
  }
  return {res.residual < 1e-4 && err < 1e-2,
          fmt("PDE residual %.3g (< 1e-4), mean |F~ - F| %.3g over 50 policies (< 1e-2)", res.residual, err)};
}

// 4 ---------------------------------------------------------------------------
Outcome gnn_invariance() {
  Rng rng(5);
  const GnnEncoder enc(GnnConfig::desk(), rng);
  std::mt19937_64 gen(6);
  const std::vector<Hamiltonian> hs{build_tfim(4, 1.0, 0.5, 2.0), build_tfim(6, 0.7, 0.2, 2.0),
                                    build_heisenberg(4, 0.3, 1.2, 1.9, 1.0), build_heisenberg(3, 1.0, 1.0, 1.0, 1.0),
                                    Hamiltonian(2, {{PauliString("XY"), 0.3}, {PauliString("ZI"), -2.0},
                                                    {PauliString("YY"), 0.9}}, 1.0)};
  double worst = 0;
  for (const auto& h : hs) {
    const Eigen::VectorXd c = enc.encode(h);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<std::size_t> perm(h.num_terms());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), gen);
      worst = std::max(worst, (enc.encode(h.permuted(perm)) - c).norm());
    }
  }
  return {worst < 1e-6, fmt("max ||encode(H_sigma) - encode(H)|| = %.3g over 100 permutations (< 1e-6)", worst)};
}

// 5 ---------------------------------------------------------------------------
Outcome diffusion_correctness() {
  // (a) closed-form marginal against the stepped chain
  const NoiseSchedule s50 = cosine_schedule(50);
  const int k = 5, t = 30, n = 20000;
  Rng rng(11);
  Eigen::VectorXd stepped = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < n; ++i) {
    int g = 2;
    for (int u = 1; u <= t; ++u) g = d3pm_step(g, s50.beta[static_cast<std::size_t>(u)], k, rng);
    stepped(g) += 1.0 / n;
  }
  const double tv_a = tv(stepped, d3pm_marginal(2, t, s50, k));

  // (b) final marginal at T = 1000
  const NoiseSchedule s1000 = cosine_schedule(1000);
  double tv_b = 0;
  for (int kk : {3, 6}) {
    tv_b = std::max(tv_b, tv(d3pm_marginal(0, 1000, s1000, kk), Eigen::VectorXd::Constant(kk, 1.0 / kk)));
  }

  // (c) w = 0 returns the conditional prediction
  std::mt19937_64 gen(3);
  const Matrix c = testing::random_matrix(7, 5, gen), u = testing::random_matrix(7, 5, gen);
  const bool id_c = cfg_mix(c, u, 0.0) == c && cfg_mix(0.37, -2.0, 0.0) == 0.37;

  // (d) oracle denoiser on a two-policy toy set at T = 50
  const int m = 4, slots = 3;
  const std::vector<Policy> data{{{0, 0, 1, 1}, {2, 4}, {0.7, 0.3}}, {{0, 1, 2, 0}, {1, 1, 2}, {0.2, 0.5, 0.3}}};
  DiffusionConfig cfg = DiffusionConfig::desk(m, 1);
  cfg.slots = slots;
  cfg.T = 50;
  std::vector<PolicyLatent> x0;
  for (const auto& p : data) x0.push_back(encode_policy(p, cfg));
  const DenoiseFn oracle_fn = [&](const NoisyBatch& batch) {
    DenoiserValues v;
    const auto nb = static_cast<Eigen::Index>(batch.size());
    v.group_logits = Matrix::Constant(nb * m, slots, -30.0);
    v.order_logits = Matrix::Constant(nb * slots, kOrderClasses, -30.0);
    v.eps = Matrix::Zero(nb, slots);
    for (Eigen::Index b = 0; b < nb; ++b) {
      const PolicyLatent& target = x0[static_cast<std::size_t>(batch.cond(b, 0))];
      for (int i = 0; i < m; ++i) v.group_logits(b * m + i, target.grouping[static_cast<std::size_t>(i)]) = 30.0;
      for (int i = 0; i < slots; ++i) v.order_logits(b * slots + i, target.orders[static_cast<std::size_t>(i)]) = 30.0;
      const int step = batch.t[static_cast<std::size_t>(b)];
      const Eigen::VectorXd xt = batch.x[static_cast<std::size_t>(b)].tau;
      v.eps.row(b) = ((xt - std::sqrt(s50.abar(step)) * target.tau) / std::sqrt(1 - s50.abar(step))).transpose();
    }
    return v;
  };
  const int draws = 200;
  Matrix conds(draws, 1);
  for (int i = 0; i < draws; ++i) conds(i, 0) = i % 2;
  Rng srng(21);
  const auto out = reverse_sample(oracle_fn, {m, slots}, conds, s50, 0.0, srng);
  int hit = 0;
  for (int i = 0; i < draws; ++i) {
    const Policy& want = data[static_cast<std::size_t>(i % 2)];
    const Policy& got = out[static_cast<std::size_t>(i)].policy;
    hit += got.grouping == want.grouping && got.orders == want.orders;
  }
  const double rec = static_cast<double>(hit) / draws;
  return {tv_a < 0.02 && tv_b < 0.05 && id_c && rec >= 0.95,
          fmt("(a) TV %.4f (< 0.02) (b) TV %.4f (< 0.05) (c) identity %s (d) recovery %.3f (>= 0.95)", tv_a, tv_b,
              id_c ? "yes" : "no", rec)};
}

// 6 ---------------------------------------------------------------------------
Outcome gradient_checks() {
  std::mt19937_64 gen(4);
  double worst = 0;
  int checked = 0;
  auto run = [&](const std::vector<Matrix>& in, const testing::Builder& f) {
    const testing::GradCheckResult r = testing::check_gradients(in, f, 3);
    worst = std::max(worst, r.max_rel_error);
    checked += r.checked;
  };
  const Matrix a = testing::random_matrix(6, 5, gen), b = testing::random_matrix(5, 4, gen);
  const Matrix row = testing::random_matrix(1, 5, gen), bias = testing::random_matrix(1, 4, gen);
  run({a, b}, [](Tape&, const auto& v) { return nn::matmul(v[0], v[1]); });
  run({a, b, bias}, [](Tape&, const auto& v) { return nn::linear(v[0], v[1], v[2]); });
  run({a}, [](Tape&, const auto& v) { return nn::gelu(v[0]); });
  run({a}, [](Tape&, const auto& v) { return nn::softmax_rows(v[0]); });
  run({a}, [](Tape&, const auto& v) { return nn::log_softmax_rows(v[0]); });
  run({a, row, row}, [](Tape&, const auto& v) { return nn::layer_norm(v[0], v[1], v[2]); });
  const Matrix q = testing::random_matrix(6, 3, gen), kk = testing::random_matrix(6, 3, gen),
               vv = testing::random_matrix(6, 2, gen);
  run({q, kk, vv}, [](Tape&, const auto& v) { return nn::attention(v[0], v[1], v[2]); });
  run({q, kk, vv}, [](Tape&, const auto& v) { return nn::block_attention(v[0], v[1], v[2], 3); });

  const Hamiltonian h = build_tfim(2, 1.0, 0.6, 1.5);
  const StateVector psi0 = basis_state(2);
  const StateVector exact = evolve_exact(h, psi0, h.time());
  Rng pr(12);
  double tau_err = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const Policy p = random_policy(h.num_terms(), 3, pr);
    const Eigen::VectorXd g = fidelity_grad_tau_raw(h, p, psi0);
    const double step = 1e-5;
    for (int i = 0; i < p.num_groups(); ++i) {
      auto f_at = [&](double delta) {
        std::vector<double> tau = p.tau;
        tau[static_cast<std::size_t>(i)] += delta;
        const double sum = std::accumulate(tau.begin(), tau.end(), 0.0);
        Policy scaled = p;
        for (auto& x : tau) x /= sum;
        scaled.tau = tau;
        return fidelity(exact, run_circuit(compile_policy(h.with_time(h.time() * sum), scaled), psi0));
      };
      tau_err = std::max(tau_err, std::abs(g[i] - (f_at(step) - f_at(-step)) / (2 * step)));
    }
  }
  return {worst <= 1e-4 && tau_err <= 1e-5,
          fmt("substrate max rel error %.3g over %d entries (<= 1e-4), fidelity_grad_tau max abs error %.3g (<= 1e-5)",
              worst, checked, tau_err)};
}

// 7 ---------------------------------------------------------------------------
Outcome reinforce_bandit() {
  auto logits = std::make_shared<nn::Parameter>("bandit.logits", Matrix::Zero(1, 2));
  const std::vector<nn::ParamPtr> params{logits};
  nn::OptimizerState opt = nn::make_optimizer(params, {0.01});
  BaselineState baseline;
  Rng rng(17);
  auto prob = [&] { return 1.0 / (1.0 + std::exp(logits->value(0, 1) - logits->value(0, 0))); };
  int updates = 0;
  while (updates < 500 && prob() < 0.8) {
    std::vector<int> arms;
    std::vector<double> losses;
    for (int i = 0; i < 8; ++i) {
      arms.push_back(rng.bernoulli(prob()) ? 0 : 1);
      losses.push_back(arms.back() == 0 ? 0.0 : 1.0);  // arm 0 is rewarded
    }
    Tape t;
    const std::vector<Var> rows(arms.size(), t.param(logits));
    reinforce_update(params, opt, t, nn::pick(nn::log_softmax_rows(nn::concat_rows(rows)), arms), losses, baseline);
    ++updates;
  }
  return {prob() >= 0.8, fmt("P(rewarded arm) = %.3f after %d updates (>= 0.8 within 500)", prob(), updates)};
}

// 8 and 11 --------------------------------------------------------------------
struct LoopRun {
  std::vector<double> terminal;  // per seed
  std::vector<bool> shallow;     // criterion 11 per seed
  std::vector<std::string> best;
  double cpu_s = 0;
  int d_ref = 0;
  double pinn_residual = 0;
};

const LoopRun& closed_loop() {
  static LoopRun run;
  static bool done = false;
  if (done) return run;
  done = true;
  const std::clock_t c0 = std::clock();
  const Hamiltonian h = build_tfim(4, 1.0, 0.3, kCorpusTime);
  run.d_ref = reference_depth(h);

  // Supervised warm start, shared by all seeds.
  const std::vector<CorpusRow> corpus = gen_tfim_instance_rows(4, 1.0, 0.3, 600, 101);
  Rng rng(1);
  Generator warm(GeneratorConfig::make(Profile::Desk, static_cast<int>(h.num_terms())), rng);
  pretrain_supervised(warm, corpus, PretrainConfig{}, rng);
  nn::Checkpoint snapshot;
  add_generator(snapshot, warm);

  PinnModel pinn(h, PinnConfig::desk(), rng);
  run.pinn_residual = train_pinn(pinn, h, basis_state(4), 15000, rng).residual;

  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto g = generator_from_checkpoint(snapshot);
    LoopState s(*g, {h}, LoopConfig::make(Profile::Desk), seed);
    s.set_pinn(0, pinn, run.pinn_residual);
    const auto logs = run_loop(s, 50);
    double term = 0;
    for (std::size_t i = logs.size() - 10; i < logs.size(); ++i) term += logs[i].mean_exact_fidelity / 10;
    run.terminal.push_back(term);
    double best_depth = 0.5 * run.d_ref;
    bool ok = false;
    std::string best = "none";
    for (const auto& p : s.front.points()) {
      const double f = policy_fidelity(h, p.policy, basis_state(4));
      if (f >= 0.8 && p.depth <= best_depth) {
        best_depth = p.depth;
        best = fmt("F=%.3f depth %.0f", f, p.depth);
        ok = true;
      }
    }
    run.shallow.push_back(ok);
    run.best.push_back(best);
    std::fprintf(stderr, "  loop seed %d: terminal-10 F %.3f, shallow policy %s\n", static_cast<int>(seed), term,
                 best.c_str());
  }
  run.cpu_s = static_cast<double>(std::clock() - c0) / CLOCKS_PER_SEC;
  return run;
}

Outcome closed_loop_smoke() {
  const LoopRun& r = closed_loop();
  int pass = 0;
  std::string list;
  for (double f : r.terminal) {
    pass += f >= 0.70;
    list += fmt("%.3f ", f);
  }
  return {pass >= 3 && r.cpu_s < 1800,
          fmt("terminal-10 mean F per seed: %s; %d/5 >= 0.70 (need 3); PINN residual %.2g; %.0f s CPU (< 1800)",
              list.c_str(), pass, r.pinn_residual, r.cpu_s)};
}

Outcome depth_reduction() {
  const LoopRun& r = closed_loop();
  const int pass = static_cast<int>(std::count(r.shallow.begin(), r.shallow.end(), true));
  std::string list;
  for (const auto& b : r.best) list += b + "; ";
  return {pass >= 3, fmt("baseline depth %d, cap %.1f; best per seed: %s%d/5 seeds (need 3)", r.d_ref,
                         0.5 * r.d_ref, list.c_str(), pass)};
}

// 9 ---------------------------------------------------------------------------
Outcome noise_accounting() {
  const struct {
    double count, eps, want, tol;
  } cases[] = {{132, 1e-3, 0.876, 1e-3}, {72, 1e-3, 0.9306, 5e-4}, {72, 1e-2, 0.4848, 5e-4}, {13.8, 1e-2, 0.8705, 5e-4}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    const double v = noise_survival(c.count, c.eps);
    ok = ok && std::abs(v - c.want) <= c.tol;
    detail += fmt("(1-%g)^%g=%.4f ", c.eps, c.count, v);
  }
  return {ok, detail};
}

// 10 --------------------------------------------------------------------------
Outcome hypervolume_checks() {
  auto pt = [](double f, double d) {
    ParetoPoint p;
    p.fidelity = f;
    p.depth = d;
    return p;
  };
  const std::vector<ParetoPoint> hand{pt(0.9, 500), pt(0.5, 100)};
  // midpoint grid at resolution 1e-3 x 1
  double grid = 0;
  for (int i = 0; i < 1000; ++i) {
    const double f = (i + 0.5) * 1e-3;
    double lo = 10000;
    for (const auto& p : hand)
      if (f <= p.fidelity) lo = std::min(lo, p.depth);
    grid += 1e-3 * (10000 - lo);
  }
  const double hv = hypervolume(hand);
  const double rel = std::abs(hv - grid) / grid;

  Rng rng(3);
  std::vector<ParetoPoint> pts;
  for (int i = 0; i < 200; ++i) pts.push_back(pt(std::round(rng.uniform() * 100) / 100, std::round(rng.uniform(0, 2000))));
  std::set<std::pair<double, double>> brute, fast;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dom = false;
    for (std::size_t j = 0; j < pts.size() && !dom; ++j) dom = j != i && dominates(pts[j], pts[i]);
    if (!dom) brute.insert({pts[i].fidelity, pts[i].depth});
  }
  for (const auto& p : pareto_filter(pts)) fast.insert({p.fidelity, p.depth});
  return {rel <= 1e-3 && brute == fast,
          fmt("HV %.2f vs grid %.2f (rel %.2g <= 1e-3); filter %zu points, brute force %zu, %s", hv, grid, rel,
              fast.size(), brute.size(), brute == fast ? "identical" : "different")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  app.add_option("--only", only, "criterion ids to run (default: all)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "Pauli oracle equivalence", 1, pauli_oracle},
      {2, "Trotter order scaling", 30, trotter_scaling},
      {3, "PINN gates", 600, pinn_gates},
      {4, "GNN permutation invariance", 10, gnn_invariance},
      {5, "diffusion correctness", 120, diffusion_correctness},
      {6, "gradient checks", 60, gradient_checks},
      {7, "REINFORCE bandit", 60, reinforce_bandit},
      {8, "closed-loop smoke", 1800, closed_loop_smoke},
      {9, "noise accounting", 1, noise_accounting},
      {10, "hypervolume and dominance", 5, hypervolume_checks},
      {11, "depth reduction", 1e9, depth_reduction},  // shares criterion 8's runs
  };
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const std::clock_t c0 = std::clock();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double cpu = static_cast<double>(std::clock() - c0) / CLOCKS_PER_SEC;
    const bool in_budget = cpu < c.budget_s;
    const bool pass = o.pass && in_budget;
    failed += !pass;
    std::printf("criterion %2d %s  %s: %s [%.2f s CPU%s]\n", c.id, pass ? "PASS" : "FAIL", c.title.c_str(),
                o.detail.c_str(), cpu, in_budget ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
