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

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "trotterdiff/circuit.hpp"
#include "trotterdiff/compiler.hpp"
#include "trotterdiff/dataset.hpp"
#include "trotterdiff/errors.hpp"
#include "trotterdiff/exact_sim.hpp"
#include "trotterdiff/loop.hpp"
#include "trotterdiff/pinn.hpp"

namespace trotterdiff::cli {
namespace {

namespace fs = std::filesystem;

const std::vector<double> kSurvivalEps = {1e-3, 5e-3, 1e-2};

std::string num(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

struct CircuitReport {
  double fidelity;
  int depth;
  int cnots;
  std::optional<double> operator_error;
};

CircuitReport report_circuit(const Hamiltonian& h, const Circuit& c) {
  const int n = h.num_qubits();
  if (n > kDenseQubitLimit) throw InputError("dense evaluation limited to " + std::to_string(kDenseQubitLimit) + " qubits");
  const StateVector psi0 = basis_state(n);
  CircuitReport r{fidelity(evolve_exact(h, psi0, h.time()), run_circuit(c, psi0)), depth(c), cnot_count(c), {}};
  if (n <= kOperatorErrorQubitLimit) r.operator_error = operator_error(h, c, h.time());
  return r;
}

void print_report(const CircuitReport& r, std::ostream& out) {
  out << "fidelity " << num("%.6f", r.fidelity) << '\n';
  out << "depth " << r.depth << '\n';
  out << "cnots " << r.cnots << '\n';
  if (r.operator_error) out << "operator_error " << num("%.6e", *r.operator_error) << '\n';
  out << "eps,survival,effective_fidelity\n";
  for (double eps : kSurvivalEps) {
    const double s = noise_survival(r.cnots, eps);
    out << num("%g", eps) << ',' << num("%.6f", s) << ',' << num("%.6f", s * r.fidelity) << '\n';
  }
}

// gen-data ------------------------------------------------------------------

struct GenDataArgs {
  std::string kind;
  int count = 0;
  std::uint64_t seed = 0;
  fs::path out;
  int qubits = 0;
};

int gen_data(const GenDataArgs& a, std::ostream& out) {
  if (a.kind == "heisenberg") {
    const auto set = gen_heisenberg_set(a.count, a.seed);
    write_instances(a.out, set);
    std::map<int, int> per_n;
    for (const auto& inst : set) ++per_n[inst.n];
    out << "wrote " << set.size() << " heisenberg instances to " << a.out.string() << '\n';
    for (const auto& [n, c] : per_n) out << "  n=" << n << ": " << c << '\n';
    return kExitOk;
  }
  const auto rows = a.qubits > 0 ? gen_tfim_rows(a.qubits, a.count, a.seed) : gen_tfim_corpus(a.count, a.seed);
  write_corpus(a.out, rows);
  std::map<int, int> per_n;
  for (const auto& r : rows) ++per_n[r.n];
  out << "wrote " << rows.size() << " tfim rows to " << a.out.string() << '\n';
  for (const auto& [n, c] : per_n) out << "  n=" << n << ": " << c << '\n';
  return kExitOk;
}

// pretrain-pinn ---------------------------------------------------------------

struct PinnArgs {
  fs::path hamiltonian;
  int steps = 0;
  fs::path out;
  std::string profile = "desk";
  std::uint64_t seed = 0;
};

int pretrain_pinn(const PinnArgs& a, std::ostream& out) {
  const Hamiltonian h = load_hamiltonian(a.hamiltonian);
  if (h.num_qubits() > kPinnMaxQubits) {
    throw InputError("PINN limited to " + std::to_string(kPinnMaxQubits) + " qubits");
  }
  const PinnConfig cfg = parse_profile(a.profile) == Profile::Desk ? PinnConfig::desk() : PinnConfig::paper();
  Rng rng(a.seed);
  PinnModel model(h, cfg, rng);
  const PinnTrainResult res = train_pinn(model, h, basis_state(h.num_qubits()), a.steps, rng);
  out << "residual " << num("%.2g", res.residual) << '\n';
  if (!(res.residual < kPinnResidualGate)) {
    out << "gate failed: residual >= " << num("%g", kPinnResidualGate) << '\n';
    return kExitGate;
  }
  save_pinn(a.out, model, res.residual);
  out << "saved " << a.out.string() << '\n';
  return kExitOk;
}

// train-loop ----------------------------------------------------------------

struct LoopArgs {
  fs::path corpus;
  int iters = 0;
  double lambda = 0.1;
  std::string profile = "desk";
  std::string ablate;
  fs::path out;
  std::uint64_t seed = 0;
  int pretrain_steps = PretrainConfig{}.diffusion_steps;
  int pool = 8;
  int pinn_steps = 0;
  int checkpoint_every = 100;
};

int train_loop(const LoopArgs& a, std::ostream& out) {
  std::vector<CorpusRow> rows = read_corpus(a.corpus);
  if (rows.empty()) throw InputError("corpus is empty");
  const std::size_t m = rows.front().hamiltonian.num_terms();
  std::erase_if(rows, [m](const CorpusRow& r) { return r.hamiltonian.num_terms() != m; });

  std::vector<Hamiltonian> pool;
  for (const auto& r : rows) {
    if (static_cast<int>(pool.size()) >= a.pool) break;
    if (std::find(pool.begin(), pool.end(), r.hamiltonian) == pool.end()) pool.push_back(r.hamiltonian);
  }

  const Profile profile = parse_profile(a.profile);
  const Ablations ablate = parse_ablations(a.ablate);
  const GeneratorConfig gcfg = GeneratorConfig::make(profile, static_cast<int>(m)).with(ablate);
  Rng rng(a.seed);
  Generator g(gcfg, rng);
  PretrainConfig pcfg;
  pcfg.diffusion_steps = a.pretrain_steps;
  const PretrainReport pre = pretrain_supervised(g, rows, pcfg, rng);
  fs::create_directories(a.out);
  save_generator(a.out / "warm_start", g);
  out << "warm start: " << pre.diffusion_rows << " rows, " << pre.diffusion_loss.size() << " steps";
  if (!pre.diffusion_loss.empty()) out << ", final loss " << num("%.4g", pre.diffusion_loss.back());
  out << '\n';

  LoopConfig lcfg = LoopConfig::make(profile);
  lcfg.lambda = a.lambda;
  lcfg.ablate = ablate;
  lcfg.out_dir = a.out;
  lcfg.checkpoint_every = a.checkpoint_every;
  LoopState state(g, pool, lcfg, a.seed);
  if (a.pinn_steps > 0 && !ablate.no_pinn_guidance) {
    state.pretrain_pinns(profile == Profile::Desk ? PinnConfig::desk() : PinnConfig::paper(), a.pinn_steps);
  }

  const std::string hash = config_hash(gcfg, lcfg);
  nlohmann::json meta = {{"generator", to_json(gcfg)},
                         {"loop", to_json(lcfg)},
                         {"config_hash", hash},
                         {"seed", a.seed},
                         {"corpus", a.corpus.string()},
                         {"pool", pool.size()},
                         {"pretrain_steps", a.pretrain_steps},
                         {"pinn_steps", a.pinn_steps}};
  open_out(a.out / "config.json") << meta.dump(2) << '\n';

  const auto log = run_loop(state, a.iters);
  out << "config_hash " << hash << '\n';
  out << "iterations " << state.iteration << '\n';
  if (!log.empty()) {
    out << "final mean_fidelity " << num("%.4f", log.back().mean_fidelity) << " mean_depth "
        << num("%.1f", log.back().mean_depth) << " hypervolume " << num("%.1f", log.back().hypervolume) << '\n';
  }
  out << "pareto points " << pareto_filter(state.front.points()).size() << '\n';
  out << "checkpoints " << state.checkpoints.size() << '\n';
  return kExitOk;
}

// sample --------------------------------------------------------------------

struct SampleArgs {
  fs::path ckpt;
  fs::path hamiltonian;
  int n_samples = 8;
  std::optional<double> guidance;
  std::uint64_t seed = 0;
  fs::path out;
};

int sample(const SampleArgs& a, std::ostream& out) {
  if (a.n_samples < 1) throw InputError("--n-samples must be positive");
  const Hamiltonian h = load_hamiltonian(a.hamiltonian);
  std::unique_ptr<Generator> g = load_generator(a.ckpt);
  const DiffusionConfig& dc = g->config().diffusion;
  if (static_cast<int>(h.num_terms()) != dc.num_terms) {
    throw InputError("generator expects " + std::to_string(dc.num_terms) + " terms, Hamiltonian has " +
                     std::to_string(h.num_terms()));
  }
  const double w = a.guidance.value_or(dc.guidance);
  const Eigen::VectorXd cond = g->condition(h);
  nn::Matrix conds(a.n_samples, cond.size());
  for (int b = 0; b < a.n_samples; ++b) conds.row(b) = cond.transpose();
  Rng rng(a.seed);
  const auto samples = sample_with_ema(g->diffusion, g->trainer.ema, conds, g->schedule, w, rng);

  fs::create_directories(a.out);
  std::ofstream csv = open_out(a.out / "samples.csv");
  csv << kSampleHeader << '\n';
  const bool dense = h.num_qubits() <= kDenseQubitLimit;
  const StateVector psi0 = basis_state(dense ? h.num_qubits() : 1);
  std::optional<ExactPropagator> exact;
  if (dense) exact.emplace(h);
  double best = -1;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Policy& p = samples[i].policy;
    char name[32];
    std::snprintf(name, sizeof name, "policy_%03zu.json", i);
    save_policy(a.out / name, p);
    const Circuit c = compile_policy(h, p);
    const double f = dense ? policy_fidelity(*exact, h, p, psi0) : -1;
    best = std::max(best, f);
    csv << i << ',' << (dense ? num("%.8f", f) : std::string()) << ',' << depth(c) << ',' << cnot_count(c) << ','
        << name << '\n';
  }
  out << "wrote " << samples.size() << " policies to " << a.out.string() << " (guidance " << num("%g", w) << ")\n";
  if (dense) out << "best fidelity " << num("%.6f", best) << '\n';
  return kExitOk;
}

// export-plots ----------------------------------------------------------------

struct PlotArgs {
  fs::path log;
  fs::path out;
  fs::path pareto;
};

std::vector<IterationLog> read_log_or_empty(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("cannot read " + path.string());
  if (fs::file_size(path) == 0) return {};
  return read_log_csv(path);
}

int export_plots(const PlotArgs& a, std::ostream& out) {
  const auto log = read_log_or_empty(a.log);
  fs::path pareto_path = a.pareto;
  if (pareto_path.empty()) pareto_path = a.log.parent_path() / "pareto.csv";
  std::vector<ParetoPoint> points;
  if (fs::exists(pareto_path) && fs::file_size(pareto_path) > 0) {
    points = read_pareto_csv(pareto_path);
  } else if (!a.pareto.empty()) {
    throw InputError("cannot read " + a.pareto.string());
  }

  fs::create_directories(a.out);
  {
    std::ofstream f = open_out(a.out / "convergence.csv");
    f << kConvergenceHeader << '\n';
    for (const auto& r : log) {
      f << r.iter << ',' << num("%.8g", r.mean_fidelity) << ',' << num("%.8g", r.mean_depth) << ','
        << num("%.8g", r.hypervolume) << '\n';
    }
  }
  {
    std::ofstream f = open_out(a.out / "pareto.csv");
    f << kScatterHeader << '\n';
    for (const auto& p : points) {
      f << num("%.8g", p.fidelity) << ',' << num("%.8g", p.depth) << ',' << p.cnots << ',' << p.iteration << '\n';
    }
  }
  {
    std::ofstream f = open_out(a.out / "survival.csv");
    f << kSurvivalHeader << '\n';
    for (const auto& p : points) {
      for (double eps : kSurvivalEps) {
        const double s = noise_survival(p.cnots, eps);
        f << num("%.8g", p.fidelity) << ',' << num("%.8g", p.depth) << ',' << p.cnots << ',' << num("%g", eps) << ','
          << num("%.8g", s) << ',' << num("%.8g", s * p.fidelity) << '\n';
      }
    }
  }
  out << "wrote convergence (" << log.size() << " rows), pareto (" << points.size() << " points), survival ("
      << points.size() * kSurvivalEps.size() << " rows) to " << a.out.string() << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned Trotter schedules: data, training, sampling and evaluation", "trotterdiff"};
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* c_gen = app.add_subcommand("gen-data", "Generate a TFIM corpus or Heisenberg instance set");
  c_gen->add_option("--kind", gd.kind, "tfim or heisenberg")->required()->check(CLI::IsMember({"tfim", "heisenberg"}));
  c_gen->add_option("--count", gd.count, "Rows (tfim) or instances per size (heisenberg)")->required()
      ->check(CLI::PositiveNumber);
  c_gen->add_option("--seed", gd.seed)->required();
  c_gen->add_option("--out", gd.out)->required();
  c_gen->add_option("--qubits", gd.qubits, "Single TFIM size instead of the default mix")->check(CLI::PositiveNumber);

  PinnArgs pa;
  auto* c_pinn = app.add_subcommand("pretrain-pinn", "Train the Schrodinger surrogate for one Hamiltonian");
  c_pinn->add_option("--hamiltonian", pa.hamiltonian)->required();
  c_pinn->add_option("--steps", pa.steps)->required()->check(CLI::PositiveNumber);
  c_pinn->add_option("--out", pa.out, "Checkpoint prefix")->required();
  c_pinn->add_option("--profile", pa.profile)->check(CLI::IsMember({"desk", "paper"}))->capture_default_str();
  c_pinn->add_option("--seed", pa.seed)->capture_default_str();

  LoopArgs la;
  auto* c_loop = app.add_subcommand("train-loop", "Supervised warm start followed by the closed loop");
  c_loop->add_option("--corpus", la.corpus)->required();
  c_loop->add_option("--iters", la.iters)->required()->check(CLI::NonNegativeNumber);
  c_loop->add_option("--lambda", la.lambda)->capture_default_str()->check(CLI::NonNegativeNumber);
  c_loop->add_option("--profile", la.profile)->check(CLI::IsMember({"desk", "paper"}))->capture_default_str();
  c_loop->add_option("--ablate", la.ablate, "Comma list of no_cfg,no_gnn_encoder,no_pinn_guidance");
  c_loop->add_option("--out", la.out, "Output directory")->required();
  c_loop->add_option("--seed", la.seed)->capture_default_str();
  c_loop->add_option("--pretrain-steps", la.pretrain_steps)->capture_default_str()->check(CLI::NonNegativeNumber);
  c_loop->add_option("--pool", la.pool, "Distinct Hamiltonians in the loop")->capture_default_str()
      ->check(CLI::PositiveNumber);
  c_loop->add_option("--pinn-steps", la.pinn_steps, "0 uses the exact oracle")->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  c_loop->add_option("--checkpoint-every", la.checkpoint_every)->capture_default_str()->check(CLI::PositiveNumber);

  SampleArgs sa;
  auto* c_sample = app.add_subcommand("sample", "Draw policies from a trained generator");
  c_sample->add_option("--ckpt", sa.ckpt, "Generator checkpoint prefix")->required();
  c_sample->add_option("--hamiltonian", sa.hamiltonian)->required();
  c_sample->add_option("--n-samples", sa.n_samples)->capture_default_str();
  c_sample->add_option("--guidance", sa.guidance, "Guidance weight (default: from the checkpoint)");
  c_sample->add_option("--seed", sa.seed)->capture_default_str();
  c_sample->add_option("--out", sa.out, "Output directory")->required();

  fs::path ev_h, ev_p;
  auto* c_eval = app.add_subcommand("evaluate", "Exact metrics of one policy");
  c_eval->add_option("--hamiltonian", ev_h)->required();
  c_eval->add_option("--policy", ev_p)->required();

  fs::path bl_h;
  int bl_order = 1, bl_reps = 1;
  auto* c_base = app.add_subcommand("baseline", "Uniform product formula, one block per term");
  c_base->add_option("--hamiltonian", bl_h)->required();
  c_base->add_option("--order", bl_order)->required()->check(CLI::IsMember({1, 2, 4}));
  c_base->add_option("--reps", bl_reps)->required()->check(CLI::PositiveNumber);

  PlotArgs pl;
  auto* c_plot = app.add_subcommand("export-plots", "Plot-ready CSVs from a training log");
  c_plot->add_option("--log", pl.log)->required();
  c_plot->add_option("--out", pl.out)->required();
  c_plot->add_option("--pareto", pl.pareto, "Pareto table (default: pareto.csv next to the log)");

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.emplace_back("trotterdiff");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*c_gen) return gen_data(gd, out);
    if (*c_pinn) return pretrain_pinn(pa, out);
    if (*c_loop) return train_loop(la, out);
    if (*c_sample) return sample(sa, out);
    if (*c_eval) {
      const Hamiltonian h = load_hamiltonian(ev_h);
      const Policy p = load_policy(ev_p);
      validate_policy(p, h.num_terms());
      print_report(report_circuit(h, compile_policy(h, p)), out);
      return kExitOk;
    }
    if (*c_base) {
      const Hamiltonian h = load_hamiltonian(bl_h);
      out << "order " << bl_order << " reps " << bl_reps << '\n';
      print_report(report_circuit(h, compile_uniform(h, bl_order, bl_reps)), out);
      return kExitOk;
    }
    if (*c_plot) return export_plots(pl, out);
  } catch (const TrainingDiverged& e) {
    err << "error: " << e.what() << '\n';
    return kExitGate;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace trotterdiff::cli
