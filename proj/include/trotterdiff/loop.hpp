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
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trotterdiff/dataset.hpp"
#include "trotterdiff/diffusion.hpp"
#include "trotterdiff/gnn.hpp"
#include "trotterdiff/nn/checkpoint.hpp"
#include "trotterdiff/pareto.hpp"
#include "trotterdiff/pinn.hpp"

namespace trotterdiff {

// Reward and REINFORCE ------------------------------------------------------

struct RewardConfig {
  double lambda = 0.1;
  double d_ref = 1.0;
};

/** r = F - lambda * depth / D_ref (reported). */
double reward(double fidelity, double depth, const RewardConfig& cfg);
/** L = (1 - F) + lambda * depth / D_ref (minimized by REINFORCE). */
double loop_loss(double fidelity, double depth, const RewardConfig& cfg);

/** Depth of the order-4, 5-repetition uniform baseline. */
int reference_depth(const Hamiltonian& h);

struct BaselineState {
  double value = 0;
  double decay = 0.9;
  bool initialized = false;  // first batch seeds b with its mean loss
};

struct ReinforceResult {
  double mean_loss = 0;
  double baseline_used = 0;
  double grad_norm = 0;
  bool stepped = false;
};

/**
 * Descends mean((L_i - b) * log p_i), clips at `clip` and takes one AdamW
 * step; no step when every advantage is zero. b is updated afterwards.
 */
ReinforceResult reinforce_update(const std::vector<nn::ParamPtr>& params, nn::OptimizerState& opt, nn::Tape& t,
                                 const nn::Var& log_probs, const std::vector<double>& losses,
                                 BaselineState& baseline, double clip = 1.0);

// Configuration -------------------------------------------------------------

struct Ablations {
  bool no_cfg = false;            // p_drop = 0 and w = 0
  bool no_gnn_encoder = false;    // condition = zeros
  bool no_pinn_guidance = false;  // exact oracle instead of the surrogate

  friend bool operator==(const Ablations&, const Ablations&) = default;
};

/** Comma-separated subset of no_cfg, no_gnn_encoder, no_pinn_guidance. */
Ablations parse_ablations(std::string_view list);
std::string ablation_string(const Ablations& a);

enum class Profile { Desk, Paper };
Profile parse_profile(std::string_view name);

struct GeneratorConfig {
  GnnConfig gnn;
  int head_hidden = 64;
  DiffusionConfig diffusion;
  nn::AdamWConfig diffusion_optimizer;
  bool zero_condition = false;  // no_gnn_encoder

  static GeneratorConfig make(Profile profile, int num_terms);
  /** Folds generator-side ablations into the configuration. */
  GeneratorConfig with(const Ablations& a) const;
};

nlohmann::json to_json(const GeneratorConfig& cfg);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);

/** GNN encoder, fidelity head and diffusion model trained together. */
class Generator {
 public:
  Generator(const GeneratorConfig& cfg, Rng& rng);

  const GeneratorConfig& config() const { return config_; }
  /** Condition vector of H; zeros under the no_gnn_encoder ablation. */
  Eigen::VectorXd condition(const Hamiltonian& h) const;

  GnnEncoder encoder;
  FidelityHead head;
  DiffusionModel diffusion;
  DiffusionTrainer trainer;
  NoiseSchedule schedule;

 private:
  GeneratorConfig config_;
};

void add_generator(nn::Checkpoint& ckpt, const Generator& g);
void save_generator(const std::filesystem::path& prefix, const Generator& g);
/** Rebuilds the generator from the stored configuration and weights. */
std::unique_ptr<Generator> load_generator(const std::filesystem::path& prefix);
std::unique_ptr<Generator> generator_from_checkpoint(const nn::Checkpoint& ckpt);

/** Copies parameter values between structurally identical modules. */
void copy_parameters(const nn::Module& from, const nn::Module& to);

// Supervised warm start -----------------------------------------------------

struct PretrainConfig {
  int gnn_epochs = 5;
  int gnn_batch = 16;
  int diffusion_steps = 4000;
  int diffusion_batch = 8;
  /** Diffusion rows need a label at least this high; 0 keeps every row. */
  double elite_label = 0.95;
  /** Fallback when too few rows pass: keep the best fraction instead. */
  double elite_fraction = 0.2;
  /** Cosine decay of the diffusion learning rate to zero over the run. */
  bool cosine_decay = true;
};

struct PretrainReport {
  std::vector<double> gnn_epoch_loss;
  std::vector<double> diffusion_loss;  // one value per step
  int diffusion_rows = 0;
  int skipped_rows = 0;  // wrong term count or too many groups
};

/**
 * Fidelity regression for the encoder and head on every row, then the
 * diffusion objective on the rows selected by `elite_label`, conditioned on
 * the trained encoder.
 */
PretrainReport pretrain_supervised(Generator& g, const std::vector<CorpusRow>& corpus, const PretrainConfig& cfg,
                                   Rng& rng);

/** Mean diffusion training loss over `batches` fixed-seed batches of the given rows. */
double diffusion_eval_loss(const Generator& g, const std::vector<TrainingExample>& data, int batches, int batch,
                           std::uint64_t seed);

// Closed loop ---------------------------------------------------------------

struct LoopConfig {
  int batch = 32;
  double lambda = 0.1;
  int checkpoint_every = 100;
  int warm_start_steps = 200;
  nn::AdamWConfig policy_optimizer{1e-5, 0.9, 0.999, 1e-8, 0.0};
  double clip = 1.0;
  double baseline_decay = 0.9;
  /** Samples deeper than this are rejected (0 disables). */
  double depth_cap = 0;
  Ablations ablate;
  std::filesystem::path out_dir;  // empty: no files
  int keep_last = 3;

  static LoopConfig make(Profile profile);
};

nlohmann::json to_json(const LoopConfig& cfg);
/** Short hex digest of the canonical JSON of both configurations. */
std::string config_hash(const GeneratorConfig& g, const LoopConfig& l);

struct PoolEntry {
  Hamiltonian hamiltonian;
  Eigen::VectorXd condition;
  double d_ref;
  std::shared_ptr<PinnModel> pinn;  // null: exact oracle or skip
  double pinn_residual = 0;
};

struct SampleEvaluation {
  double fidelity = 0;        // value fed to the reward
  double exact_fidelity = -1; // when n is within the dense limit
  int depth = 0;
  int cnots = 0;
  bool skipped = false;
  bool oracle = false;        // exact fidelity used in place of the surrogate
  bool rejected = false;      // depth cap
};

struct IterationLog {
  long iter = 0;
  double mean_fidelity = 0;
  double mean_depth = 0;
  double hypervolume = 0;
  double baseline = 0;
  double lambda = 0;
  double mean_exact_fidelity = -1;
  int evaluated = 0;
  int skipped = 0;
  int oracle = 0;
  int rejected = 0;
};

struct CheckpointRecord {
  long iter;
  double fidelity;
  double hypervolume;
  std::filesystem::path prefix;
};

/** `ckpt_iter_{:06}_fid{:.4}_depth{:04}` */
std::string checkpoint_name(long iter, double fidelity, double depth);
/** Indices kept: best fidelity, best hypervolume, and the last `keep_last`. */
std::vector<std::size_t> retained_checkpoints(const std::vector<CheckpointRecord>& records, int keep_last);

class LoopState {
 public:
  LoopState(Generator& generator, const std::vector<Hamiltonian>& pool, const LoopConfig& cfg, std::uint64_t seed);

  /** Offline per-Hamiltonian PINN training; entries above the gate keep the model but fall back to the oracle. */
  void pretrain_pinns(const PinnConfig& pinn, int steps);
  /** Installs a trained PINN for pool entry i (copied, so later fine-tuning stays local). */
  void set_pinn(std::size_t i, const PinnModel& trained, double residual);

  Generator& generator;
  LoopConfig config;
  std::vector<PoolEntry> pool;
  BaselineState baseline;
  ParetoFront front;
  long iteration = 0;
  Rng rng;
  nn::OptimizerState policy_opt;
  std::vector<IterationLog> history;
  std::vector<CheckpointRecord> checkpoints;
};

double guidance_weight(const LoopState& s);

SampleEvaluation evaluate_sample(LoopState& s, std::size_t entry, const Policy& p);

/** Sample, evaluate, REINFORCE, Pareto update, and a checkpoint every `checkpoint_every` iterations. */
IterationLog run_iteration(LoopState& s);
/** Runs `iters` iterations and rewrites the CSV log and Pareto table when out_dir is set. */
std::vector<IterationLog> run_loop(LoopState& s, int iters);

void save_loop_checkpoint(LoopState& s);
/** Restores generator weights, optimizer, baseline, iteration and front. */
void load_loop_checkpoint(const std::filesystem::path& prefix, LoopState& s);

inline const std::vector<double> kSweepLambdas = {0.0, 0.01, 0.05, 0.1, 0.5, 1.0};

/** One fresh loop per lambda; merged front of all runs. */
ParetoFront lambda_sweep(const std::function<std::unique_ptr<LoopState>(double)>& make_state,
                         const std::vector<double>& lambdas, int iters);

// Plot-ready output -----------------------------------------------------------

inline constexpr const char* kLogHeader = "iter,mean_fidelity,mean_depth,hypervolume,baseline,lambda";
inline constexpr const char* kParetoHeader = "fidelity,depth,cnots,iteration,hamiltonian,policy";

void write_log_csv(const std::filesystem::path& path, const std::vector<IterationLog>& log);
std::vector<IterationLog> read_log_csv(const std::filesystem::path& path);
void write_pareto_csv(const std::filesystem::path& path, const ParetoFront& front);
std::vector<ParetoPoint> read_pareto_csv(const std::filesystem::path& path);

}  // namespace trotterdiff
