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

#include "trotterdiff/loop.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "trotterdiff/errors.hpp"
#include "trotterdiff/exact_sim.hpp"
#include "trotterdiff/nn/checkpoint.hpp"
#include "trotterdiff/nn/ops.hpp"

namespace trotterdiff {

using nlohmann::json;
using nn::Matrix;
using nn::Tape;
using nn::Var;

// Reward and REINFORCE ------------------------------------------------------

double reward(double fidelity, double depth, const RewardConfig& cfg) {
  if (!(cfg.d_ref > 0)) throw InputError("D_ref must be positive");
  return fidelity - cfg.lambda * depth / cfg.d_ref;
}

double loop_loss(double fidelity, double depth, const RewardConfig& cfg) { return 1.0 - reward(fidelity, depth, cfg); }

int reference_depth(const Hamiltonian& h) { return depth(compile_uniform(h, 4, 5)); }

ReinforceResult reinforce_update(const std::vector<nn::ParamPtr>& params, nn::OptimizerState& opt, Tape& t,
                                 const Var& log_probs, const std::vector<double>& losses,
                                 BaselineState& baseline, double clip) {
  const auto nb = static_cast<Eigen::Index>(losses.size());
  if (nb == 0) throw InputError("REINFORCE needs at least one sample");
  if (log_probs.rows() != nb || log_probs.cols() != 1) throw InputError("log-prob batch does not match losses");
  const double mean = std::accumulate(losses.begin(), losses.end(), 0.0) / static_cast<double>(nb);
  if (!std::isfinite(mean)) throw TrainingDiverged("non-finite loop loss");
  if (!baseline.initialized) {
    baseline.value = mean;
    baseline.initialized = true;
  }
  ReinforceResult r;
  r.mean_loss = mean;
  r.baseline_used = baseline.value;

  Matrix adv(nb, 1);
  for (Eigen::Index i = 0; i < nb; ++i) adv(i, 0) = losses[static_cast<std::size_t>(i)] - baseline.value;
  if (adv.cwiseAbs().maxCoeff() > 0.0) {
    nn::zero_grad(params);
    const Var objective = nn::scale(nn::sum(nn::mul(log_probs, t.constant(adv))), 1.0 / static_cast<double>(nb));
    t.backward(objective);
    if (!nn::grads_finite(params)) throw TrainingDiverged("non-finite policy gradient");
    r.grad_norm = nn::clip_grad_norm(params, clip);
    nn::adamw_step(params, opt);
    r.stepped = true;
  }
  baseline.value = baseline.decay * baseline.value + (1.0 - baseline.decay) * mean;
  return r;
}

// Configuration -------------------------------------------------------------

Ablations parse_ablations(std::string_view list) {
  Ablations a;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t end = std::min(list.find(',', start), list.size());
    const std::string_view item = list.substr(start, end - start);
    if (item == "no_cfg") {
      a.no_cfg = true;
    } else if (item == "no_gnn_encoder") {
      a.no_gnn_encoder = true;
    } else if (item == "no_pinn_guidance") {
      a.no_pinn_guidance = true;
    } else if (!item.empty() && item != "none") {
      throw InputError("unknown ablation: " + std::string(item));
    }
    start = end + 1;
  }
  return a;
}

std::string ablation_string(const Ablations& a) {
  std::vector<std::string> parts;
  if (a.no_cfg) parts.emplace_back("no_cfg");
  if (a.no_gnn_encoder) parts.emplace_back("no_gnn_encoder");
  if (a.no_pinn_guidance) parts.emplace_back("no_pinn_guidance");
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
  return out.empty() ? "none" : out;
}

Profile parse_profile(std::string_view name) {
  if (name == "desk") return Profile::Desk;
  if (name == "paper") return Profile::Paper;
  throw InputError("profile must be desk or paper");
}

GeneratorConfig GeneratorConfig::make(Profile profile, int num_terms) {
  GeneratorConfig c;
  if (profile == Profile::Desk) {
    c.gnn = GnnConfig::desk();
    c.head_hidden = 64;
    c.diffusion = DiffusionConfig::desk(num_terms, c.gnn.out);
    c.diffusion_optimizer.lr = 1e-3;
  } else {
    c.gnn = GnnConfig::paper();
    c.head_hidden = 256;
    c.diffusion = DiffusionConfig::paper(num_terms, c.gnn.out);
    c.diffusion_optimizer.lr = 2e-4;
  }
  return c;
}

GeneratorConfig GeneratorConfig::with(const Ablations& a) const {
  GeneratorConfig c = *this;
  if (a.no_cfg) {
    c.diffusion.p_drop = 0.0;
    c.diffusion.guidance = 0.0;
  }
  if (a.no_gnn_encoder) c.zero_condition = true;
  return c;
}

namespace {

json adamw_json(const nn::AdamWConfig& c) {
  return {{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}, {"weight_decay", c.weight_decay}};
}

nn::AdamWConfig adamw_from_json(const json& j) {
  return {j.at("lr").get<double>(), j.at("beta1").get<double>(), j.at("beta2").get<double>(),
          j.at("eps").get<double>(), j.at("weight_decay").get<double>()};
}

}  // namespace

json to_json(const GeneratorConfig& c) {
  const DiffusionConfig& d = c.diffusion;
  return {{"gnn", {{"layers", c.gnn.layers}, {"hidden", c.gnn.hidden}, {"out", c.gnn.out}, {"dropout", c.gnn.dropout}}},
          {"head_hidden", c.head_hidden},
          {"diffusion",
           {{"num_terms", d.num_terms}, {"slots", d.slots}, {"cond_dim", d.cond_dim}, {"width", d.width},
            {"group_layers", d.group_layers}, {"order_layers", d.order_layers}, {"T", d.T}, {"p_drop", d.p_drop},
            {"guidance", d.guidance}, {"ema_decay", d.ema_decay}, {"tau_floor", d.tau_floor}}},
          {"diffusion_optimizer", adamw_json(c.diffusion_optimizer)},
          {"zero_condition", c.zero_condition}};
}

GeneratorConfig generator_config_from_json(const json& j) {
  try {
    GeneratorConfig c;
    const json& g = j.at("gnn");
    c.gnn = {g.at("layers").get<int>(), g.at("hidden").get<int>(), g.at("out").get<int>(),
             g.at("dropout").get<double>()};
    c.head_hidden = j.at("head_hidden").get<int>();
    const json& d = j.at("diffusion");
    c.diffusion.num_terms = d.at("num_terms").get<int>();
    c.diffusion.slots = d.at("slots").get<int>();
    c.diffusion.cond_dim = d.at("cond_dim").get<int>();
    c.diffusion.width = d.at("width").get<int>();
    c.diffusion.group_layers = d.at("group_layers").get<int>();
    c.diffusion.order_layers = d.at("order_layers").get<int>();
    c.diffusion.T = d.at("T").get<int>();
    c.diffusion.p_drop = d.at("p_drop").get<double>();
    c.diffusion.guidance = d.at("guidance").get<double>();
    c.diffusion.ema_decay = d.at("ema_decay").get<double>();
    c.diffusion.tau_floor = d.at("tau_floor").get<double>();
    c.diffusion_optimizer = adamw_from_json(j.at("diffusion_optimizer"));
    c.zero_condition = j.at("zero_condition").get<bool>();
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("generator config: ") + e.what());
  }
}

Generator::Generator(const GeneratorConfig& cfg, Rng& rng)
    : encoder(cfg.gnn, rng),
      head(cfg.gnn.out, cfg.head_hidden, rng),
      diffusion(cfg.diffusion, rng),
      trainer(diffusion, cfg.diffusion_optimizer),
      schedule(cosine_schedule(cfg.diffusion.T)),
      config_(cfg) {
  if (cfg.diffusion.cond_dim != cfg.gnn.out) throw InputError("diffusion condition width must equal the GNN output");
}

Eigen::VectorXd Generator::condition(const Hamiltonian& h) const {
  if (config_.zero_condition) return Eigen::VectorXd::Zero(config_.gnn.out);
  return encoder.encode(h);
}

void add_generator(nn::Checkpoint& ckpt, const Generator& g) {
  ckpt.metadata["generator"] = to_json(g.config());
  ckpt.metadata["diffusion_updates"] = g.trainer.updates;
  nn::add_parameters(ckpt, "gnn", g.encoder.parameters());
  nn::add_parameters(ckpt, "head", g.head.parameters());
  nn::add_parameters(ckpt, "diffusion", g.diffusion.parameters());
  nn::add_optimizer(ckpt, "diffusion", g.diffusion.parameters(), g.trainer.opt);
  nn::add_ema(ckpt, "diffusion", g.diffusion.parameters(), g.trainer.ema);
}

void save_generator(const std::filesystem::path& prefix, const Generator& g) {
  nn::Checkpoint ckpt;
  add_generator(ckpt, g);
  nn::save_checkpoint(prefix, ckpt);
}

std::unique_ptr<Generator> generator_from_checkpoint(const nn::Checkpoint& ckpt) {
  if (!ckpt.metadata.contains("generator")) throw FormatError("checkpoint holds no generator");
  const GeneratorConfig cfg = generator_config_from_json(ckpt.metadata.at("generator"));
  Rng rng(0);
  auto g = std::make_unique<Generator>(cfg, rng);
  nn::load_parameters(ckpt, "gnn", g->encoder.parameters());
  nn::load_parameters(ckpt, "head", g->head.parameters());
  nn::load_parameters(ckpt, "diffusion", g->diffusion.parameters());
  nn::load_optimizer(ckpt, "diffusion", g->diffusion.parameters(), g->trainer.opt);
  nn::load_ema(ckpt, "diffusion", g->diffusion.parameters(), g->trainer.ema);
  g->trainer.updates = ckpt.metadata.value("diffusion_updates", 0L);
  return g;
}

std::unique_ptr<Generator> load_generator(const std::filesystem::path& prefix) {
  return generator_from_checkpoint(nn::load_checkpoint(prefix));
}

void copy_parameters(const nn::Module& from, const nn::Module& to) {
  const auto& a = from.parameters();
  const auto& b = to.parameters();
  if (a.size() != b.size()) throw InputError("modules have different parameter counts");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i]->value.rows() != b[i]->value.rows() || a[i]->value.cols() != b[i]->value.cols()) {
      throw InputError("parameter shape mismatch: " + a[i]->name);
    }
    b[i]->value = a[i]->value;
  }
}

// Supervised warm start -----------------------------------------------------

PretrainReport pretrain_supervised(Generator& g, const std::vector<CorpusRow>& corpus, const PretrainConfig& cfg,
                                   Rng& rng) {
  PretrainReport report;
  const DiffusionConfig& dc = g.config().diffusion;

  if (cfg.gnn_epochs > 0 && !g.config().zero_condition && !corpus.empty()) {
    std::vector<RegressionExample> reg;
    reg.reserve(corpus.size());
    for (const auto& row : corpus) reg.push_back({row.hamiltonian, row.policy, row.fidelity});
    RegressionConfig rc;
    rc.epochs = cfg.gnn_epochs;
    rc.batch = cfg.gnn_batch;
    Rng r = rng.split(1);
    report.gnn_epoch_loss = train_fidelity_regression(g.encoder, g.head, reg, rc, r);
  }

  std::vector<const CorpusRow*> eligible;
  for (const auto& row : corpus) {
    if (static_cast<int>(row.hamiltonian.num_terms()) == dc.num_terms && row.policy.num_groups() <= dc.slots) {
      eligible.push_back(&row);
    } else {
      ++report.skipped_rows;
    }
  }
  std::stable_sort(eligible.begin(), eligible.end(),
                   [](const CorpusRow* a, const CorpusRow* b) { return a->fidelity > b->fidelity; });
  std::size_t keep = eligible.size();
  if (cfg.elite_label > 0.0) {
    const auto passing = static_cast<std::size_t>(std::count_if(
        eligible.begin(), eligible.end(), [&](const CorpusRow* r) { return r->fidelity >= cfg.elite_label; }));
    const auto floor_count = static_cast<std::size_t>(std::ceil(cfg.elite_fraction * static_cast<double>(eligible.size())));
    keep = std::min(eligible.size(), std::max({passing, floor_count, std::size_t{1}}));
  }
  eligible.resize(keep);
  report.diffusion_rows = static_cast<int>(keep);
  if (eligible.empty() || cfg.diffusion_steps <= 0) return report;

  // Conditions come from the trained encoder, one per distinct Hamiltonian row.
  std::vector<TrainingExample> data;
  data.reserve(eligible.size());
  for (const CorpusRow* row : eligible) data.push_back({row->policy, g.condition(row->hamiltonian)});

  Rng r = rng.split(2);
  std::vector<const TrainingExample*> batch(static_cast<std::size_t>(cfg.diffusion_batch));
  const double base_lr = g.trainer.opt.config.lr;
  for (int step = 0; step < cfg.diffusion_steps; ++step) {
    if (cfg.cosine_decay) {
      g.trainer.opt.config.lr = base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * step / cfg.diffusion_steps));
    }
    for (auto& b : batch) b = &data[static_cast<std::size_t>(r.uniform_int(0, static_cast<int>(data.size()) - 1))];
    report.diffusion_loss.push_back(g.trainer.step(g.diffusion, batch, g.schedule, r));
  }
  g.trainer.opt.config.lr = base_lr;
  return report;
}

double diffusion_eval_loss(const Generator& g, const std::vector<TrainingExample>& data, int batches, int batch,
                           std::uint64_t seed) {
  if (data.empty() || batches < 1 || batch < 1) throw InputError("empty evaluation");
  Rng rng(seed);
  double total = 0;
  std::size_t next = 0;
  for (int b = 0; b < batches; ++b) {
    std::vector<const TrainingExample*> items;
    for (int i = 0; i < batch; ++i) items.push_back(&data[next++ % data.size()]);
    Tape t(false);
    total += training_loss(t, g.diffusion, items, g.schedule, rng).total.scalar();
  }
  return total / batches;
}

// Closed loop ---------------------------------------------------------------

LoopConfig LoopConfig::make(Profile profile) {
  LoopConfig c;
  if (profile == Profile::Desk) {
    c.batch = 8;
    c.warm_start_steps = 20;
  }
  return c;
}

json to_json(const LoopConfig& c) {
  return {{"batch", c.batch},
          {"lambda", c.lambda},
          {"checkpoint_every", c.checkpoint_every},
          {"warm_start_steps", c.warm_start_steps},
          {"policy_optimizer", adamw_json(c.policy_optimizer)},
          {"clip", c.clip},
          {"baseline_decay", c.baseline_decay},
          {"depth_cap", c.depth_cap},
          {"ablate", ablation_string(c.ablate)},
          {"keep_last", c.keep_last}};
}

std::string config_hash(const GeneratorConfig& g, const LoopConfig& l) {
  const std::string text = json{{"generator", to_json(g)}, {"loop", to_json(l)}}.dump();
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string checkpoint_name(long iter, double fidelity, double depth) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "ckpt_iter_%06ld_fid%.4f_depth%04ld", iter, fidelity, std::lround(depth));
  return buf;
}

std::vector<std::size_t> retained_checkpoints(const std::vector<CheckpointRecord>& records, int keep_last) {
  std::vector<std::size_t> keep;
  if (records.empty()) return keep;
  auto best = [&](auto key) {
    std::size_t arg = 0;
    for (std::size_t i = 1; i < records.size(); ++i)
      if (key(records[i]) > key(records[arg])) arg = i;
    return arg;
  };
  keep.push_back(best([](const CheckpointRecord& r) { return r.fidelity; }));
  keep.push_back(best([](const CheckpointRecord& r) { return r.hypervolume; }));
  const std::size_t last = static_cast<std::size_t>(std::max(keep_last, 0));
  for (std::size_t i = records.size() > last ? records.size() - last : 0; i < records.size(); ++i) keep.push_back(i);
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  return keep;
}

LoopState::LoopState(Generator& gen, const std::vector<Hamiltonian>& hamiltonians, const LoopConfig& cfg,
                     std::uint64_t seed)
    : generator(gen), config(cfg), rng(seed) {
  if (hamiltonians.empty()) throw InputError("the loop needs at least one Hamiltonian");
  if (cfg.batch < 1) throw InputError("batch must be positive");
  const int m = gen.config().diffusion.num_terms;
  for (const auto& h : hamiltonians) {
    if (static_cast<int>(h.num_terms()) != m) {
      throw InputError("Hamiltonian has " + std::to_string(h.num_terms()) + " terms; the model expects " +
                       std::to_string(m));
    }
    pool.push_back({h, gen.condition(h), static_cast<double>(reference_depth(h)), nullptr, 0.0});
  }
  baseline.decay = cfg.baseline_decay;
  policy_opt = nn::make_optimizer(gen.diffusion.parameters(), cfg.policy_optimizer);
}

void LoopState::pretrain_pinns(const PinnConfig& pinn, int steps) {
  for (std::size_t i = 0; i < pool.size(); ++i) {
    PoolEntry& e = pool[i];
    if (e.hamiltonian.num_qubits() > kPinnMaxQubits) continue;
    Rng r = rng.split(1000 + i);
    auto model = std::make_shared<PinnModel>(e.hamiltonian, pinn, r);
    const PinnTrainResult res = train_pinn(*model, e.hamiltonian, basis_state(e.hamiltonian.num_qubits()), steps, r);
    e.pinn = std::move(model);
    e.pinn_residual = res.residual;
  }
}

void LoopState::set_pinn(std::size_t i, const PinnModel& trained, double residual) {
  PoolEntry& e = pool.at(i);
  e.pinn = clone_pinn(trained, e.hamiltonian);
  e.pinn_residual = residual;
}

double guidance_weight(const LoopState& s) {
  return s.config.ablate.no_cfg ? 0.0 : s.generator.config().diffusion.guidance;
}

SampleEvaluation evaluate_sample(LoopState& s, std::size_t entry, const Policy& p) {
  const PoolEntry& e = s.pool.at(entry);
  const Hamiltonian& h = e.hamiltonian;
  const int n = h.num_qubits();
  SampleEvaluation ev;
  const Circuit c = compile_policy(h, p);
  ev.depth = depth(c);
  ev.cnots = cnot_count(c);
  if (s.config.depth_cap > 0 && ev.depth > s.config.depth_cap) {
    ev.rejected = true;
    return ev;
  }
  const StateVector psi0 = basis_state(n);
  if (n <= kDenseQubitLimit) ev.exact_fidelity = policy_fidelity(h, p, psi0);
  const bool surrogate_ok = !s.config.ablate.no_pinn_guidance && e.pinn && e.pinn_residual < kPinnResidualGate;
  if (surrogate_ok) {
    ev.fidelity = surrogate_fidelity(*e.pinn, h, p, psi0);
  } else if (ev.exact_fidelity >= 0) {
    ev.fidelity = ev.exact_fidelity;
    ev.oracle = !s.config.ablate.no_pinn_guidance;
  } else {
    ev.skipped = true;
  }
  return ev;
}

IterationLog run_iteration(LoopState& s) {
  Generator& g = s.generator;
  const LoopConfig& cfg = s.config;
  const double w = guidance_weight(s);
  const auto nb = static_cast<std::size_t>(cfg.batch);

  // 1-2: Hamiltonians and their conditions.
  std::vector<std::size_t> which(nb);
  Matrix conds(static_cast<Eigen::Index>(nb), g.config().gnn.out);
  for (std::size_t b = 0; b < nb; ++b) {
    which[b] = static_cast<std::size_t>(s.rng.uniform_int(0, static_cast<int>(s.pool.size()) - 1));
    conds.row(static_cast<Eigen::Index>(b)) = s.pool[which[b]].condition.transpose();
  }

  // 3: guided samples from the shadow weights.
  std::vector<SampleResult> samples = sample_with_ema(g.diffusion, g.trainer.ema, conds, g.schedule, w, s.rng);

  // 4: per-Hamiltonian PINN fine-tuning on this minibatch, then evaluation.
  if (!cfg.ablate.no_pinn_guidance && cfg.warm_start_steps > 0) {
    std::map<std::size_t, std::vector<Policy>> by_entry;
    for (std::size_t b = 0; b < nb; ++b) by_entry[which[b]].push_back(samples[b].policy);
    for (auto& [i, policies] : by_entry) {
      PoolEntry& e = s.pool[i];
      if (!e.pinn || e.pinn_residual >= kPinnResidualGate) continue;
      const StateVector psi0 = basis_state(e.hamiltonian.num_qubits());
      const PinnTrainResult res = warm_start(*e.pinn, e.hamiltonian, policies, psi0, cfg.warm_start_steps, s.rng);
      e.pinn_residual = res.residual;
    }
  }

  IterationLog log;
  log.lambda = cfg.lambda;
  std::vector<SampleEvaluation> evals(nb);
  std::vector<double> losses;
  std::vector<const SampleResult*> used;
  std::vector<Eigen::Index> used_rows;
  double exact_sum = 0;
  int exact_count = 0;
  for (std::size_t b = 0; b < nb; ++b) {
    SampleEvaluation& ev = evals[b] = evaluate_sample(s, which[b], samples[b].policy);
    const RewardConfig rc{cfg.lambda, s.pool[which[b]].d_ref};
    if (ev.skipped) {
      ++log.skipped;
      continue;
    }
    if (ev.rejected) {
      ++log.rejected;
      losses.push_back(loop_loss(0.0, ev.depth, rc));
    } else {
      ++log.evaluated;
      log.oracle += ev.oracle;
      log.mean_fidelity += ev.fidelity;
      log.mean_depth += ev.depth;
      if (ev.exact_fidelity >= 0) {
        exact_sum += ev.exact_fidelity;
        ++exact_count;
      }
      losses.push_back(loop_loss(ev.fidelity, ev.depth, rc));
    }
    used.push_back(&samples[b]);
    used_rows.push_back(static_cast<Eigen::Index>(b));
  }
  if (log.evaluated > 0) {
    log.mean_fidelity /= log.evaluated;
    log.mean_depth /= log.evaluated;
  }
  if (exact_count > 0) log.mean_exact_fidelity = exact_sum / exact_count;

  // 5-6: REINFORCE through the recomputed trajectory log-probabilities.
  if (!used.empty()) {
    Matrix used_conds(static_cast<Eigen::Index>(used.size()), conds.cols());
    for (std::size_t i = 0; i < used.size(); ++i) used_conds.row(static_cast<Eigen::Index>(i)) = conds.row(used_rows[i]);
    Tape t;
    const Var lp = trajectory_log_prob(t, g.diffusion, used, used_conds, g.schedule, w);
    reinforce_update(g.diffusion.parameters(), s.policy_opt, t, lp, losses, s.baseline, cfg.clip);
    g.trainer.update_ema(g.diffusion);
    ++g.trainer.updates;
  }

  // 7: Pareto tracking.
  ++s.iteration;
  for (std::size_t b = 0; b < nb; ++b) {
    const SampleEvaluation& ev = evals[b];
    if (ev.skipped || ev.rejected) continue;
    pareto_update(s.front, {ev.fidelity, static_cast<double>(ev.depth), ev.cnots, samples[b].policy, s.iteration,
                            static_cast<int>(which[b])});
  }
  log.iter = s.iteration;
  log.hypervolume = hypervolume(s.front);
  log.baseline = s.baseline.value;
  s.history.push_back(log);

  // 8: checkpoint.
  if (!cfg.out_dir.empty() && cfg.checkpoint_every > 0 && s.iteration % cfg.checkpoint_every == 0) {
    save_loop_checkpoint(s);
  }
  return log;
}

std::vector<IterationLog> run_loop(LoopState& s, int iters) {
  std::vector<IterationLog> out;
  for (int i = 0; i < iters; ++i) out.push_back(run_iteration(s));
  if (!s.config.out_dir.empty()) {
    write_log_csv(s.config.out_dir / "train_log.csv", s.history);
    write_pareto_csv(s.config.out_dir / "pareto.csv", s.front);
  }
  return out;
}

namespace {

json front_json(const ParetoFront& front) {
  json arr = json::array();
  for (const auto& p : front.points()) {
    arr.push_back({{"fidelity", p.fidelity}, {"depth", p.depth}, {"cnots", p.cnots},
                   {"policy", json::parse(policy_to_json(p.policy))}, {"iteration", p.iteration},
                   {"hamiltonian", p.hamiltonian}});
  }
  return arr;
}

}  // namespace

void save_loop_checkpoint(LoopState& s) {
  const IterationLog& last = s.history.empty() ? IterationLog{} : s.history.back();
  const std::filesystem::path prefix = s.config.out_dir / checkpoint_name(s.iteration, last.mean_fidelity, last.mean_depth);
  std::filesystem::create_directories(s.config.out_dir);
  nn::Checkpoint ckpt;
  add_generator(ckpt, s.generator);
  nn::add_optimizer(ckpt, "policy", s.generator.diffusion.parameters(), s.policy_opt);
  ckpt.metadata["loop"] = to_json(s.config);
  ckpt.metadata["iteration"] = s.iteration;
  ckpt.metadata["baseline"] = {{"value", s.baseline.value}, {"decay", s.baseline.decay},
                               {"initialized", s.baseline.initialized}};
  ckpt.metadata["front"] = front_json(s.front);
  nn::save_checkpoint(prefix, ckpt);

  s.checkpoints.push_back({s.iteration, last.mean_fidelity, last.hypervolume, prefix});
  const auto keep = retained_checkpoints(s.checkpoints, s.config.keep_last);
  std::vector<CheckpointRecord> kept;
  for (std::size_t i = 0; i < s.checkpoints.size(); ++i) {
    if (std::binary_search(keep.begin(), keep.end(), i)) {
      kept.push_back(s.checkpoints[i]);
    } else {
      nn::remove_checkpoint(s.checkpoints[i].prefix);
    }
  }
  s.checkpoints = std::move(kept);
}

void load_loop_checkpoint(const std::filesystem::path& prefix, LoopState& s) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(prefix);
  const auto restored = generator_from_checkpoint(ckpt);
  if (to_json(restored->config()) != to_json(s.generator.config())) {
    throw FormatError("checkpoint generator configuration differs from the running one");
  }
  Generator& g = s.generator;
  copy_parameters(restored->encoder, g.encoder);
  copy_parameters(restored->head, g.head);
  copy_parameters(restored->diffusion, g.diffusion);
  g.trainer.opt = restored->trainer.opt;
  g.trainer.ema = restored->trainer.ema;
  g.trainer.updates = restored->trainer.updates;
  try {
    nn::load_optimizer(ckpt, "policy", g.diffusion.parameters(), s.policy_opt);
    s.iteration = ckpt.metadata.at("iteration").get<long>();
    const json& b = ckpt.metadata.at("baseline");
    s.baseline = {b.at("value").get<double>(), b.at("decay").get<double>(), b.at("initialized").get<bool>()};
    s.front = ParetoFront{};
    for (const auto& p : ckpt.metadata.at("front")) {
      s.front.insert({p.at("fidelity").get<double>(), p.at("depth").get<double>(), p.at("cnots").get<int>(),
                      policy_from_json(p.at("policy").dump()), p.at("iteration").get<long>(),
                      p.at("hamiltonian").get<int>()});
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("loop checkpoint: ") + e.what());
  }
  for (auto& e : s.pool) e.condition = g.condition(e.hamiltonian);
}

ParetoFront lambda_sweep(const std::function<std::unique_ptr<LoopState>(double)>& make_state,
                         const std::vector<double>& lambdas, int iters) {
  std::vector<ParetoFront> fronts;
  for (double lambda : lambdas) {
    if (lambda < 0) throw InputError("lambda must be nonnegative");
    auto state = make_state(lambda);
    state->config.lambda = lambda;
    run_loop(*state, iters);
    fronts.push_back(state->front);
  }
  return merge_fronts(fronts);
}

// CSV -----------------------------------------------------------------------

namespace {

std::ofstream open_csv(const std::filesystem::path& path, const char* header) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << header << '\n';
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, const char* header) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != header) throw FormatError("unexpected CSV header in " + path.string());
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(split(line, ','));
  }
  return rows;
}

double to_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw FormatError("bad number: " + s);
    return v;
  } catch (const std::logic_error&) {
    throw FormatError("bad number: " + s);
  }
}

// Comma-free policy cell: "g0 g1 ...|o0 o1 ...|t0 t1 ...".
std::string policy_cell(const Policy& p) {
  std::ostringstream out;
  out.precision(17);
  auto join = [&](const auto& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? " " : "") << v[i];
  };
  join(p.grouping);
  out << '|';
  join(p.orders);
  out << '|';
  join(p.tau);
  return out.str();
}

Policy policy_from_cell(const std::string& cell) {
  const auto parts = split(cell, '|');
  if (parts.size() != 3) throw FormatError("bad policy cell");
  Policy p;
  auto read = [](const std::string& s, auto& v) {
    std::istringstream in(s);
    typename std::decay_t<decltype(v)>::value_type x;
    while (in >> x) v.push_back(x);
  };
  read(parts[0], p.grouping);
  read(parts[1], p.orders);
  read(parts[2], p.tau);
  return p;
}

}  // namespace

void write_log_csv(const std::filesystem::path& path, const std::vector<IterationLog>& log) {
  std::ofstream out = open_csv(path, kLogHeader);
  out.precision(10);
  for (const auto& r : log) {
    out << r.iter << ',' << r.mean_fidelity << ',' << r.mean_depth << ',' << r.hypervolume << ',' << r.baseline
        << ',' << r.lambda << '\n';
  }
}

std::vector<IterationLog> read_log_csv(const std::filesystem::path& path) {
  std::vector<IterationLog> log;
  for (const auto& row : read_csv(path, kLogHeader)) {
    if (row.size() != 6) throw FormatError("log row needs 6 columns");
    IterationLog r;
    r.iter = std::lround(to_double(row[0]));
    r.mean_fidelity = to_double(row[1]);
    r.mean_depth = to_double(row[2]);
    r.hypervolume = to_double(row[3]);
    r.baseline = to_double(row[4]);
    r.lambda = to_double(row[5]);
    log.push_back(r);
  }
  return log;
}

void write_pareto_csv(const std::filesystem::path& path, const ParetoFront& front) {
  std::ofstream out = open_csv(path, kParetoHeader);
  out.precision(10);
  for (const auto& p : pareto_filter(front.points())) {
    out << p.fidelity << ',' << p.depth << ',' << p.cnots << ',' << p.iteration << ',' << p.hamiltonian << ','
        << policy_cell(p.policy) << '\n';
  }
}

std::vector<ParetoPoint> read_pareto_csv(const std::filesystem::path& path) {
  std::vector<ParetoPoint> pts;
  for (const auto& row : read_csv(path, kParetoHeader)) {
    if (row.size() != 6) throw FormatError("pareto row needs 6 columns");
    pts.push_back({to_double(row[0]), to_double(row[1]), static_cast<int>(to_double(row[2])),
                   policy_from_cell(row[5]), std::lround(to_double(row[3])), static_cast<int>(to_double(row[4]))});
  }
  return pts;
}

}  // namespace trotterdiff
