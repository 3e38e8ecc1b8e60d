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

#include <Eigen/Dense>

#include "trotterdiff/nn/tape.hpp"
#include "trotterdiff/rng.hpp"

namespace trotterdiff {

inline constexpr double kBetaMin = 1e-4;
inline constexpr double kBetaMax = 0.02;

/** beta[t] and alpha_bar[t] for t = 0..T with beta[0] = 0 and alpha_bar[0] = 1. */
struct NoiseSchedule {
  int T = 0;
  std::vector<double> beta;
  std::vector<double> alpha_bar;

  double alpha(int t) const { return 1.0 - beta[static_cast<std::size_t>(t)]; }
  double abar(int t) const { return alpha_bar[static_cast<std::size_t>(t)]; }
};

/** Cosine alpha_bar (offset 0.008) with every beta clamped into [1e-4, 0.02]. */
NoiseSchedule cosine_schedule(int T);
/** Arbitrary per-step betas (betas[i] is step i + 1), each in [0, 1). */
NoiseSchedule schedule_from_betas(const std::vector<double>& betas);

// Uniform-kernel D3PM over K classes: Q_t = (1 - beta_t) I + beta_t / K.

/** q(G_t | G_0 = g0) = alpha_bar_t e_g0 + (1 - alpha_bar_t) / K. */
Eigen::VectorXd d3pm_marginal(int g0, int t, const NoiseSchedule& s, int k);
/** Independent corruption of each label straight to step t. */
std::vector<int> d3pm_forward(const std::vector<int>& g0, int t, const NoiseSchedule& s, int k, Rng& rng);
/** One transition with rate beta. */
int d3pm_step(int g, double beta, int k, Rng& rng);
/**
 * p(G_{t-1} | G_t = g_t) proportional to Q_t[j, g_t] * sum_x p0(x) Qbar_{t-1}[x, j],
 * normalized. t >= 1.
 */
Eigen::VectorXd d3pm_posterior(int g_t, const Eigen::VectorXd& x0_probs, int t, const NoiseSchedule& s, int k);

/** sqrt(abar_t) tau0 + sqrt(1 - abar_t) noise. */
Eigen::VectorXd ddpm_forward(const Eigen::VectorXd& tau0, int t, const NoiseSchedule& s,
                             const Eigen::VectorXd& noise);
/** Posterior mean of x_{t-1} given x_t and the predicted noise. */
Eigen::VectorXd ddpm_mean(const Eigen::VectorXd& x_t, const Eigen::VectorXd& eps, int t, const NoiseSchedule& s);
/** Posterior standard deviation sqrt(beta_tilde_t); zero at t = 1. */
double ddpm_sigma(int t, const NoiseSchedule& s);

/** (1 + w) cond - w uncond */
double cfg_mix(double cond, double uncond, double w);
nn::Matrix cfg_mix(const nn::Matrix& cond, const nn::Matrix& uncond, double w);

}  // namespace trotterdiff
