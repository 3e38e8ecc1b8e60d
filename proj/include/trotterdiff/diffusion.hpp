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

#include <functional>
#include <vector>

#include "trotterdiff/nn/layers.hpp"
#include "trotterdiff/nn/optim.hpp"
#include "trotterdiff/policy.hpp"
#include "trotterdiff/rng.hpp"
#include "trotterdiff/schedule.hpp"

namespace trotterdiff {

inline constexpr int kOrderClasses = 3;  // labels 0, 1, 2 for orders 1, 2, 4

int order_label(int order);
int order_value(int label);

struct DiffusionConfig {
  int num_terms = 8;  // M, fixed per model
  int slots = 6;      // K, fixed per model
  int cond_dim = 512;
  int width = 256;
  int group_layers = 4;
  int order_layers = 2;
  int T = 1000;
  double p_drop = 0.1;
  double guidance = 3.0;
  double ema_decay = 0.9999;
  double tau_floor = 1e-3;  // tau clipped here before taking logs

  static DiffusionConfig paper(int num_terms, int cond_dim);
  static DiffusionConfig desk(int num_terms, int cond_dim);
};

/** Diffusion state of a policy: labels for the two categorical branches, a latent for tau. */
struct PolicyLatent {
  std::vector<int> grouping;  // M labels in [0, K)
  std::vector<int> orders;    // K labels in [0, 3); unused slots hold label 0
  Eigen::VectorXd tau;        // K; softmax(tau) recovers the weights
};

/** Groups map to slots 0..k-1; tau latent = centered log of max(tau, floor). */
PolicyLatent encode_policy(const Policy& p, const DiffusionConfig& cfg);
/** softmax on tau, snap orders, drop empty groups. */
Policy decode_latent(const PolicyLatent& latent);
RawPolicy raw_from_latent(const PolicyLatent& latent);

/** Noisy inputs for a batch of B examples. */
struct NoisyBatch {
  std::vector<int> t;                // B steps in [1, T]
  std::vector<PolicyLatent> x;       // B noisy latents
  nn::Matrix cond;                   // B x cond_dim; a zero row is the unconditional input

  std::size_t size() const { return t.size(); }
};

/** x0 logits for both categorical branches and predicted noise for tau. */
struct DenoiserOutput {
  nn::Var group_logits;  // (B*M) x K
  nn::Var order_logits;  // (B*K) x 3
  nn::Var eps;           // B x K
};

class TransformerBlock : public nn::Module {
 public:
  TransformerBlock(const std::string& name, int width, Rng& rng);
  /** x holds consecutive blocks of `len` rows; attention never crosses blocks. */
  nn::Var operator()(nn::Tape& t, const nn::Var& x, Eigen::Index len) const;

 private:
  nn::LayerNorm ln1_, ln2_;
  nn::Linear q_, k_, v_, o_;
  nn::MLP mlp_;
};

/** Sinusoidal embedding rows for integer steps. */
nn::Matrix timestep_embedding(const std::vector<int>& t, int dim);

class DiffusionModel : public nn::Module {
 public:
  DiffusionModel(const DiffusionConfig& cfg, Rng& rng);
  const DiffusionConfig& config() const { return cfg_; }
  DenoiserOutput forward(nn::Tape& t, const NoisyBatch& batch) const;

 private:
  DiffusionConfig cfg_;
  nn::MLP time_mlp_;
  nn::Linear cond_proj_;
  nn::ParamPtr group_embed_, group_pos_;
  std::vector<TransformerBlock> group_blocks_;
  nn::LayerNorm group_ln_;
  nn::Linear group_out_;
  nn::ParamPtr order_embed_, order_pos_;
  nn::Linear occupancy_proj_;
  std::vector<TransformerBlock> order_blocks_;
  nn::LayerNorm order_ln_;
  nn::Linear order_out_;
  nn::MLP tau_mlp_;
};

/** Fraction of the M terms assigned to each slot, one row per example (B x K). */
nn::Matrix slot_occupancy(const NoisyBatch& batch, int slots);

struct TrainingTargets {
  std::vector<int> grouping;  // B*M clean labels
  std::vector<int> orders;    // B*K clean labels
  nn::Matrix eps;             // B x K injected noise
};

struct DiffusionLossTerms {
  nn::Var group;
  nn::Var tau;
  nn::Var order;
  nn::Var total;  // group + 0.5 tau + 0.3 order
};

inline constexpr double kTauLossWeight = 0.5;
inline constexpr double kOrderLossWeight = 0.3;

DiffusionLossTerms diffusion_loss(nn::Tape& t, const DenoiserOutput& out, const TrainingTargets& targets);

struct TrainingExample {
  Policy policy;
  Eigen::VectorXd cond;
};

/** Draw t, corrupt every branch, and drop conditions with probability p_drop. */
std::pair<NoisyBatch, TrainingTargets> make_training_batch(const std::vector<const TrainingExample*>& examples,
                                                           const DiffusionConfig& cfg,
                                                           const NoiseSchedule& schedule, Rng& rng);

DiffusionLossTerms training_loss(nn::Tape& t, const DiffusionModel& model,
                                 const std::vector<const TrainingExample*>& examples,
                                 const NoiseSchedule& schedule, Rng& rng);

/** Effective EMA decay after `updates` steps: min(decay, (1 + u) / (10 + u)). */
double ema_warmup_decay(double decay, long updates);

/** Optimizer, EMA shadow and step counter for one diffusion model. */
struct DiffusionTrainer {
  nn::OptimizerState opt;
  nn::EmaWeights ema;
  long updates = 0;
  double clip = 1.0;

  DiffusionTrainer(const DiffusionModel& model, const nn::AdamWConfig& optimizer);
  /** One optimizer step on the batch followed by an EMA update; returns the total loss. */
  double step(DiffusionModel& model, const std::vector<const TrainingExample*>& batch,
              const NoiseSchedule& schedule, Rng& rng);
  void update_ema(const DiffusionModel& model);
};

// Reverse process -----------------------------------------------------------

struct DenoiserValues {
  nn::Matrix group_logits;
  nn::Matrix order_logits;
  nn::Matrix eps;
};

using DenoiseFn = std::function<DenoiserValues(const NoisyBatch&)>;

DenoiseFn model_denoiser(const DiffusionModel& model);

struct StepRecord {
  int t;
  PolicyLatent x_t;
  PolicyLatent x_prev;
};

struct SampleResult {
  Policy policy;
  RawPolicy raw;
  double log_prob = 0;
  double log_prob_discrete = 0;
  double log_prob_continuous = 0;
  std::vector<StepRecord> trajectory;  // t = T, ..., 1
};

struct SamplerShape {
  int num_terms;
  int slots;
};

/**
 * Joint ancestral sampling of all three chains for each row of `conds`.
 * Guidance mixes conditional and unconditional outputs when w != 0.
 */
std::vector<SampleResult> reverse_sample(const DenoiseFn& denoise, const SamplerShape& shape,
                                         const nn::Matrix& conds, const NoiseSchedule& schedule, double w,
                                         Rng& rng);

std::vector<SampleResult> sample_policies(const DiffusionModel& model, const nn::Matrix& conds,
                                          const NoiseSchedule& schedule, double w, Rng& rng);

/** Seeded single sample with the model's current weights. */
SampleResult sample_policy(const DiffusionModel& model, const Eigen::VectorXd& cond,
                           const NoiseSchedule& schedule, double w, std::uint64_t seed);

/** Samples with the EMA shadow swapped in for the duration of the call. */
std::vector<SampleResult> sample_with_ema(DiffusionModel& model, const nn::EmaWeights& ema,
                                          const nn::Matrix& conds, const NoiseSchedule& schedule, double w,
                                          Rng& rng);

/**
 * Differentiable log p(trajectory) under the model's current weights
 * (B x 1), summing categorical posterior terms and Gaussian terms for t >= 2.
 */
nn::Var trajectory_log_prob(nn::Tape& t, const DiffusionModel& model, const std::vector<const SampleResult*>& samples,
                            const nn::Matrix& conds, const NoiseSchedule& schedule, double w);

}  // namespace trotterdiff
