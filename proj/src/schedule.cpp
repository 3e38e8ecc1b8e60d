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

#include "trotterdiff/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "trotterdiff/errors.hpp"

namespace trotterdiff {

NoiseSchedule cosine_schedule(int T) {
  if (T < 1) throw InputError("diffusion needs at least one step");
  constexpr double offset = 0.008;
  auto f = [T](int t) {
    const double x = (static_cast<double>(t) / T + offset) / (1.0 + offset) * std::numbers::pi / 2.0;
    return std::cos(x) * std::cos(x);
  };
  std::vector<double> betas;
  for (int t = 1; t <= T; ++t) {
    const double natural = 1.0 - f(t) / f(t - 1);
    betas.push_back(std::clamp(natural, kBetaMin, kBetaMax));
  }
  return schedule_from_betas(betas);
}

NoiseSchedule schedule_from_betas(const std::vector<double>& betas) {
  if (betas.empty()) throw InputError("diffusion needs at least one step");
  NoiseSchedule s;
  s.T = static_cast<int>(betas.size());
  s.beta.push_back(0.0);
  s.alpha_bar.push_back(1.0);
  for (double b : betas) {
    if (!(b >= 0.0 && b < 1.0)) throw InputError("beta must lie in [0, 1)");
    s.beta.push_back(b);
    s.alpha_bar.push_back(s.alpha_bar.back() * (1.0 - b));
  }
  return s;
}

namespace {

void check_step(int t, const NoiseSchedule& s, int lo) {
  if (t < lo || t > s.T) throw InputError("diffusion step " + std::to_string(t) + " out of range");
}

}  // namespace

Eigen::VectorXd d3pm_marginal(int g0, int t, const NoiseSchedule& s, int k) {
  check_step(t, s, 0);
  if (k < 1 || g0 < 0 || g0 >= k) throw InputError("label out of range");
  Eigen::VectorXd p = Eigen::VectorXd::Constant(k, (1.0 - s.abar(t)) / k);
  p[g0] += s.abar(t);
  return p;
}

std::vector<int> d3pm_forward(const std::vector<int>& g0, int t, const NoiseSchedule& s, int k, Rng& rng) {
  check_step(t, s, 0);
  std::vector<int> out;
  out.reserve(g0.size());
  for (int g : g0) {
    if (g < 0 || g >= k) throw InputError("label out of range");
    // with probability 1 - abar the label is resampled uniformly
    out.push_back(rng.bernoulli(1.0 - s.abar(t)) ? rng.uniform_int(0, k - 1) : g);
  }
  return out;
}

int d3pm_step(int g, double beta, int k, Rng& rng) {
  return rng.bernoulli(beta) ? rng.uniform_int(0, k - 1) : g;
}

Eigen::VectorXd d3pm_posterior(int g_t, const Eigen::VectorXd& x0_probs, int t, const NoiseSchedule& s, int k) {
  check_step(t, s, 1);
  if (x0_probs.size() != k || g_t < 0 || g_t >= k) throw InputError("posterior shape mismatch");
  const double beta = s.beta[static_cast<std::size_t>(t)];
  const double prev = s.abar(t - 1);
  Eigen::VectorXd p = (prev * x0_probs).array() + (1.0 - prev) * x0_probs.sum() / k;
  Eigen::VectorXd like = Eigen::VectorXd::Constant(k, beta / k);
  like[g_t] += 1.0 - beta;
  p = p.cwiseProduct(like);
  return p / p.sum();
}

Eigen::VectorXd ddpm_forward(const Eigen::VectorXd& tau0, int t, const NoiseSchedule& s,
                             const Eigen::VectorXd& noise) {
  check_step(t, s, 0);
  if (tau0.size() != noise.size()) throw InputError("noise shape mismatch");
  return std::sqrt(s.abar(t)) * tau0 + std::sqrt(1.0 - s.abar(t)) * noise;
}

Eigen::VectorXd ddpm_mean(const Eigen::VectorXd& x_t, const Eigen::VectorXd& eps, int t, const NoiseSchedule& s) {
  check_step(t, s, 1);
  const double beta = s.beta[static_cast<std::size_t>(t)];
  if (beta == 0.0) return x_t;
  return (x_t - beta / std::sqrt(1.0 - s.abar(t)) * eps) / std::sqrt(s.alpha(t));
}

double ddpm_sigma(int t, const NoiseSchedule& s) {
  check_step(t, s, 1);
  const double beta = s.beta[static_cast<std::size_t>(t)];
  if (t == 1 || beta == 0.0) return 0.0;
  return std::sqrt(beta * (1.0 - s.abar(t - 1)) / (1.0 - s.abar(t)));
}

double cfg_mix(double cond, double uncond, double w) { return (1.0 + w) * cond - w * uncond; }

nn::Matrix cfg_mix(const nn::Matrix& cond, const nn::Matrix& uncond, double w) {
  if (cond.rows() != uncond.rows() || cond.cols() != uncond.cols()) throw InputError("cfg_mix shape mismatch");
  return (1.0 + w) * cond - w * uncond;
}

}  // namespace trotterdiff
