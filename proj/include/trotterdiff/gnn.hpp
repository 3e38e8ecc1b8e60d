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

#include "trotterdiff/graph.hpp"
#include "trotterdiff/nn/layers.hpp"
#include "trotterdiff/nn/optim.hpp"
#include "trotterdiff/policy.hpp"
#include "trotterdiff/rng.hpp"

namespace trotterdiff {

struct GnnConfig {
  int layers = 4;
  int hidden = 256;
  int out = 512;
  double dropout = 0.1;

  static GnnConfig paper() { return {}; }
  static GnnConfig desk() { return {4, 64, 64, 0.1}; }
};

// Fixed affine standardization of graph features.
inline constexpr double kLogCoeffShift = 14.0;
inline constexpr double kLogCoeffScale = 1.0 / 14.0;
inline constexpr double kSupportScale = 1.0 / 12.0;

nn::Matrix standardized_node_features(const HamiltonianGraph& g);
nn::Matrix standardized_edge_features(const HamiltonianGraph& g);

/** Message-passing encoder with attention pooling; output is the condition vector c. */
class GnnEncoder : public nn::Module {
 public:
  GnnEncoder(const GnnConfig& config, Rng& rng);

  const GnnConfig& config() const { return config_; }

  /** Initial node states (M x hidden) from standardized features. */
  nn::Var embed_nodes(nn::Tape& t, const HamiltonianGraph& g) const;
  /**
   * m_j = sum over neighbours k of phi_msg(h_j, h_k, e_jk);
   * h_j' = LN(phi_update(h_j, m_j)). Layer `layer` in [0, layers).
   */
  nn::Var message_pass(nn::Tape& t, const HamiltonianGraph& g, const nn::Var& h, int layer,
                       Rng* rng = nullptr) const;
  /** alpha = softmax over nodes of phi_attn(h); returns {c (1 x out), alpha (1 x M)}. */
  std::pair<nn::Var, nn::Var> attention_pool(nn::Tape& t, const nn::Var& h) const;

  nn::Var encode(nn::Tape& t, const HamiltonianGraph& g, Rng* rng = nullptr) const;
  nn::Var encode(nn::Tape& t, const Hamiltonian& h, Rng* rng = nullptr) const;
  /** Evaluation-mode encoding. */
  Eigen::VectorXd encode(const Hamiltonian& h) const;

 private:
  GnnConfig config_;
  nn::Linear input_;
  std::vector<nn::MLP> msg_;
  std::vector<nn::MLP> update_;
  std::vector<nn::LayerNorm> norms_;
  nn::Linear attn_hidden_;
  nn::ParamPtr attn_out_;
};

inline constexpr int kPolicyEmbeddingDim = 8 + 3 + 8;

/**
 * [group-size histogram over sizes 1..7 and >= 8, normalized by K;
 *  counts of orders 1, 2, 4; tau sorted descending, zero padded to 8].
 */
Eigen::RowVectorXd policy_embedding(const Policy& p);

/** sigmoid(MLP([c, policy embedding])) */
class FidelityHead : public nn::Module {
 public:
  FidelityHead(int condition_dim, int hidden, Rng& rng);
  nn::Var operator()(nn::Tape& t, const nn::Var& c, const Policy& p) const;

 private:
  nn::MLP mlp_;
};

struct RegressionExample {
  Hamiltonian hamiltonian;
  Policy policy;
  double label;
};

struct RegressionConfig {
  int epochs = 20;
  int batch = 16;
  nn::AdamWConfig optimizer{1e-3, 0.9, 0.999, 1e-8, 0.0};
  double clip = 1.0;
};

/** Mean squared error of the head's predictions over a batch. */
nn::Var regression_loss(nn::Tape& t, const GnnEncoder& enc, const FidelityHead& head,
                        const std::vector<const RegressionExample*>& batch, Rng* rng);

/** Joint encoder + head training; returns the mean training loss of each epoch. */
std::vector<double> train_fidelity_regression(GnnEncoder& enc, FidelityHead& head,
                                              const std::vector<RegressionExample>& data,
                                              const RegressionConfig& config, Rng& rng);

}  // namespace trotterdiff
