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
#include <vector>

#include "trotterdiff/exact_sim.hpp"
#include "trotterdiff/nn/dual.hpp"
#include "trotterdiff/nn/layers.hpp"
#include "trotterdiff/nn/optim.hpp"
#include "trotterdiff/pauli.hpp"
#include "trotterdiff/policy.hpp"
#include "trotterdiff/rng.hpp"

namespace trotterdiff {

/** Output width grows as 2^(n+1); larger systems are rejected. */
inline constexpr int kPinnMaxQubits = 6;

/** Gate on the final PDE residual. */
inline constexpr double kPinnResidualGate = 1e-4;

struct PinnLossWeights {
  double ic = 10.0;
  double pde = 1.0;
  double circuit = 5.0;
  double norm = 0.1;
};

struct PinnConfig {
  int fourier_m = 256;
  int width = 512;
  int hidden_layers = 3;
  bool layer_norm = true;
  PinnLossWeights weights;
  int collocation = 128;
  int residual_grid = 257;
  double lr = 1e-3;
  double lr_final = 1e-5;
  double warm_lr = 1e-4;
  int warm_steps = 200;

  static PinnConfig paper() { return {}; }
  static PinnConfig desk();
};

/**
 * Real layout of a batch of states: row r holds [Re psi(s_r), Im psi(s_r)].
 * The same layout is used for network outputs and targets.
 */
Eigen::RowVectorXd to_real_row(const StateVector& psi);
StateVector from_real_row(const Eigen::RowVectorXd& row);

/**
 * Symmetric real 2D x 2D matrix acting on real-layout rows as H acts on
 * states: [a, b] M = [Re(H psi), Im(H psi)] with psi = a + i b.
 */
nn::Matrix real_hamiltonian(const Hamiltonian& h);

/** Value and d/ds of psi over a batch of times, in real layout. */
using StateField = std::function<nn::Dual(nn::Tape&, const Eigen::VectorXd& s)>;

/** Field of the exact solution exp(-iHs)psi0 (constants on the tape). */
StateField exact_field(const Hamiltonian& h, const StateVector& psi0);

/** ||psi(0) - psi0||^2 for a 1-row output. */
nn::Var ic_loss(nn::Tape& t, const nn::Var& psi_at_zero, const StateVector& psi0);
/** Mean over rows of ||i dpsi/ds - H psi||^2. */
nn::Var pde_loss(nn::Tape& t, const nn::Dual& out, const nn::Matrix& h_real);
/** Mean over rows of ||psi(s_i) - target_i||^2. */
nn::Var circuit_loss(nn::Tape& t, const nn::Var& out, const nn::Matrix& targets);
/** Mean over rows of (||psi(s)|| - 1)^2. */
nn::Var norm_loss(nn::Tape& t, const nn::Var& out);

/** Mean PDE residual of a field on a uniform grid over [0, t] (inclusive). */
double pde_residual(const StateField& field, const Hamiltonian& h, int grid);

class PinnModel : public nn::Module {
 public:
  /** B ~ N(0, sigma^2) with sigma = ||H||_1 / (2 pi); frozen. */
  PinnModel(const Hamiltonian& h, const PinnConfig& config, Rng& rng);

  const PinnConfig& config() const { return config_; }
  int num_qubits() const { return n_; }
  const nn::Matrix& fourier_matrix() const { return b_; }
  /** Replaces the frozen frequencies; shape must match. */
  void set_fourier_matrix(const nn::Matrix& b);

  nn::Var forward(nn::Tape& t, const Eigen::VectorXd& s) const;
  nn::Dual forward_dual(nn::Tape& t, const Eigen::VectorXd& s) const;
  StateField field() const;

  /** psi_theta(s), not normalized. */
  StateVector psi(double s) const;

 private:
  PinnConfig config_;
  int n_;
  nn::Matrix b_;
  nn::MLP mlp_;
};

struct PinnLosses {
  double ic = 0;
  double pde = 0;
  double circuit = 0;
  double norm = 0;
  double total = 0;
};

struct PinnTrainResult {
  PinnLosses last;      // losses of the final optimization step
  double residual = 0;  // pde_residual on the configured grid
  int steps = 0;
};

/** Training anchor: states the model must match at given times. */
struct CircuitAnchors {
  Eigen::VectorXd s;
  nn::Matrix targets;  // real layout, one row per time

  bool empty() const { return s.size() == 0; }
};

CircuitAnchors policy_anchors(const Hamiltonian& h, const std::vector<Policy>& policies,
                              const StateVector& psi0);

/**
 * Minimizes w_ic L_IC + w_pde L_PDE + w_circuit L_circuit + w_norm L_norm with
 * fresh uniform collocation points each step and cosine learning-rate decay
 * from lr to lr_final. Throws TrainingDiverged on a non-finite loss.
 */
PinnTrainResult train_pinn(PinnModel& model, const Hamiltonian& h, const StateVector& psi0, int steps,
                           Rng& rng, const CircuitAnchors& anchors = {});

/** Fine-tune at warm_lr with circuit anchors from the given policies. */
PinnTrainResult warm_start(PinnModel& model, const Hamiltonian& h, const std::vector<Policy>& policies,
                           const StateVector& psi0, int steps, Rng& rng);

/** Mean of each loss term on a given batch, evaluated without training. */
PinnLosses evaluate_losses(const PinnModel& model, const Hamiltonian& h, const StateVector& psi0,
                           const Eigen::VectorXd& collocation, const CircuitAnchors& anchors = {});

/** |<psi_theta(t)/||psi_theta(t)|| | psi_pi(t)>|^2 */
double surrogate_fidelity(const PinnModel& model, const Hamiltonian& h, const Policy& policy,
                          const StateVector& psi0);
/** Same overlap against an arbitrary state. */
double surrogate_fidelity(const StateVector& psi_theta, const StateVector& target);
/** Differentiable form on a tape (1x1). */
nn::Var surrogate_fidelity(nn::Tape& t, const PinnModel& model, double time, const StateVector& target);

/** Independent copy: same frequencies and weights, no shared parameters. */
std::unique_ptr<PinnModel> clone_pinn(const PinnModel& model, const Hamiltonian& h);

/** Weights, frequencies and configuration under `prefix`. */
void save_pinn(const std::filesystem::path& prefix, const PinnModel& model, double residual);
/** Throws FormatError when the checkpoint does not fit H. */
std::unique_ptr<PinnModel> load_pinn(const std::filesystem::path& prefix, const Hamiltonian& h,
                                     double* residual = nullptr);

}  // namespace trotterdiff
