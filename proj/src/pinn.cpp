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

#include "trotterdiff/pinn.hpp"

#include <cmath>
#include <numbers>

#include "trotterdiff/errors.hpp"
#include "trotterdiff/nn/checkpoint.hpp"
#include "trotterdiff/nn/ops.hpp"

namespace trotterdiff {

using nn::Dual;
using nn::Matrix;
using nn::Tape;
using nn::Var;

PinnConfig PinnConfig::desk() {
  PinnConfig c;
  c.fourier_m = 32;
  c.width = 64;
  c.lr = 3e-3;
  c.warm_steps = 20;
  return c;
}

Eigen::RowVectorXd to_real_row(const StateVector& psi) {
  const Eigen::Index d = psi.size();
  Eigen::RowVectorXd row(2 * d);
  row.head(d) = psi.real().transpose();
  row.tail(d) = psi.imag().transpose();
  return row;
}

StateVector from_real_row(const Eigen::RowVectorXd& row) {
  if (row.size() % 2 != 0) throw InputError("real layout needs an even width");
  const Eigen::Index d = row.size() / 2;
  StateVector psi(d);
  for (Eigen::Index i = 0; i < d; ++i) psi[i] = Complex(row[i], row[d + i]);
  return psi;
}

Matrix real_hamiltonian(const Hamiltonian& h) {
  const Eigen::MatrixXcd dense = dense_hamiltonian(h);
  const Eigen::Index d = dense.rows();
  const Eigen::MatrixXd hr = dense.real();
  const Eigen::MatrixXd hi = dense.imag();
  Matrix m(2 * d, 2 * d);
  m.topLeftCorner(d, d) = hr;
  m.topRightCorner(d, d) = -hi;
  m.bottomLeftCorner(d, d) = hi;
  m.bottomRightCorner(d, d) = hr;
  return m;
}

StateField exact_field(const Hamiltonian& h, const StateVector& psi0) {
  auto prop = std::make_shared<ExactPropagator>(h);
  return [prop, h, psi0](Tape& t, const Eigen::VectorXd& s) {
    const Eigen::Index d = psi0.size();
    Matrix v(s.size(), 2 * d), dv(s.size(), 2 * d);
    for (Eigen::Index r = 0; r < s.size(); ++r) {
      const StateVector psi = prop->evolve(psi0, s[r]);
      v.row(r) = to_real_row(psi);
      dv.row(r) = to_real_row(Complex(0, -1) * apply_hamiltonian(h, psi));
    }
    return Dual{t.constant(std::move(v)), t.constant(std::move(dv))};
  };
}

Var ic_loss(Tape& t, const Var& psi_at_zero, const StateVector& psi0) {
  if (psi_at_zero.rows() != 1) throw InputError("ic_loss expects a single row");
  const Matrix target = to_real_row(psi0);
  if (target.cols() != psi_at_zero.cols()) throw InputError("ic_loss dimension mismatch");
  return nn::sum(nn::square(nn::sub(psi_at_zero, t.constant(target))));
}

Var pde_loss(Tape& t, const Dual& out, const Matrix& h_real) {
  const Eigen::Index d = out.v.cols() / 2;
  if (h_real.rows() != out.v.cols()) throw InputError("pde_loss dimension mismatch");
  // i dpsi/ds in real layout is [-Im dpsi, Re dpsi]
  const Var i_dpsi = nn::concat_cols({nn::scale(nn::slice_cols(out.d, d, d), -1.0), nn::slice_cols(out.d, 0, d)});
  const Var residual = nn::sub(i_dpsi, nn::matmul(out.v, t.constant(h_real)));
  return nn::mean(nn::row_sum(nn::square(residual)));
}

Var circuit_loss(Tape& t, const Var& out, const Matrix& targets) {
  if (out.rows() != targets.rows() || out.cols() != targets.cols()) {
    throw InputError("circuit_loss shape mismatch");
  }
  return nn::mean(nn::row_sum(nn::square(nn::sub(out, t.constant(targets)))));
}

Var norm_loss(Tape&, const Var& out) {
  const Var norms = nn::pow(nn::row_sum(nn::square(out)), 0.5);
  return nn::mean(nn::square(nn::add_scalar(norms, -1.0)));
}

double pde_residual(const StateField& field, const Hamiltonian& h, int grid) {
  if (grid < 2) throw InputError("residual grid needs at least two points");
  const Eigen::VectorXd s = Eigen::VectorXd::LinSpaced(grid, 0.0, h.time());
  Tape t(false);
  return pde_loss(t, field(t, s), real_hamiltonian(h)).scalar();
}

PinnModel::PinnModel(const Hamiltonian& h, const PinnConfig& config, Rng& rng)
    : config_(config),
      n_(h.num_qubits()),
      mlp_("pinn", [&] {
        if (h.num_qubits() > kPinnMaxQubits) throw InputError("PINN supports at most 6 qubits");
        if (config.fourier_m <= 0 || config.width <= 0 || config.hidden_layers < 1) {
          throw InputError("PINN widths must be positive");
        }
        nn::MLPSpec spec;
        spec.widths.push_back(2 * config.fourier_m);
        for (int i = 0; i < config.hidden_layers; ++i) spec.widths.push_back(config.width);
        spec.widths.push_back(Eigen::Index{2} << h.num_qubits());
        spec.activation = nn::Activation::Tanh;
        spec.layer_norm = config.layer_norm;
        return spec;
      }(), rng) {
  add_child(mlp_);
  const double sigma = l1_coefficient_norm(h) / (2.0 * std::numbers::pi);
  b_.resize(config.fourier_m, 1);
  for (Eigen::Index i = 0; i < b_.rows(); ++i) b_(i, 0) = sigma * rng.normal();
}

Var PinnModel::forward(Tape& t, const Eigen::VectorXd& s) const {
  return mlp_(t, t.constant(nn::fourier_features(s, b_)));
}

Dual PinnModel::forward_dual(Tape& t, const Eigen::VectorXd& s) const {
  const Dual in{t.constant(nn::fourier_features(s, b_)), t.constant(nn::fourier_features_ds(s, b_))};
  return nn::mlp_dual(t, mlp_, in);
}

StateField PinnModel::field() const {
  return [this](Tape& t, const Eigen::VectorXd& s) { return forward_dual(t, s); };
}

StateVector PinnModel::psi(double s) const {
  Tape t(false);
  return from_real_row(forward(t, Eigen::VectorXd::Constant(1, s)).value().row(0));
}

CircuitAnchors policy_anchors(const Hamiltonian& h, const std::vector<Policy>& policies,
                              const StateVector& psi0) {
  std::vector<CheckpointState> all;
  for (const auto& p : policies) {
    auto cps = trotter_checkpoint_states(h, p, psi0);
    all.insert(all.end(), cps.begin(), cps.end());
  }
  CircuitAnchors a;
  a.s.resize(static_cast<Eigen::Index>(all.size()));
  a.targets.resize(static_cast<Eigen::Index>(all.size()), 2 * psi0.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    a.s[static_cast<Eigen::Index>(i)] = all[i].s;
    a.targets.row(static_cast<Eigen::Index>(i)) = to_real_row(all[i].state);
  }
  return a;
}

namespace {

struct LossVars {
  Var ic, pde, circuit, norm, total;
};

LossVars build_losses(Tape& t, const PinnModel& model, const Matrix& h_real, const StateVector& psi0,
                      const Eigen::VectorXd& collocation, const CircuitAnchors& anchors) {
  const Eigen::Index c = collocation.size();
  const Eigen::Index a = anchors.s.size();
  Eigen::VectorXd s(1 + c + a);
  s[0] = 0.0;
  s.segment(1, c) = collocation;
  if (a > 0) s.tail(a) = anchors.s;
  const Dual out = model.forward_dual(t, s);
  const PinnLossWeights& w = model.config().weights;
  LossVars l;
  l.ic = ic_loss(t, nn::slice_rows(out.v, 0, 1), psi0);
  const Dual colloc{nn::slice_rows(out.v, 1, c), nn::slice_rows(out.d, 1, c)};
  l.pde = pde_loss(t, colloc, h_real);
  l.norm = norm_loss(t, colloc.v);
  l.total = nn::add(nn::add(nn::scale(l.ic, w.ic), nn::scale(l.pde, w.pde)), nn::scale(l.norm, w.norm));
  if (a > 0) {
    l.circuit = circuit_loss(t, nn::slice_rows(out.v, 1 + c, a), anchors.targets);
    l.total = nn::add(l.total, nn::scale(l.circuit, w.circuit));
  }
  return l;
}

PinnLosses values(const LossVars& l) {
  PinnLosses out;
  out.ic = l.ic.scalar();
  out.pde = l.pde.scalar();
  out.norm = l.norm.scalar();
  out.circuit = l.circuit.valid() ? l.circuit.scalar() : 0.0;
  out.total = l.total.scalar();
  return out;
}

PinnTrainResult optimize(PinnModel& model, const Hamiltonian& h, const StateVector& psi0, int steps,
                         double lr, double lr_final, Rng& rng, const CircuitAnchors& anchors) {
  if (steps < 0) throw InputError("negative step count");
  if (psi0.size() != (Eigen::Index{1} << model.num_qubits())) throw InputError("initial state dimension mismatch");
  PinnTrainResult result;
  const Matrix h_real = real_hamiltonian(h);
  const auto& params = model.parameters();
  auto opt = nn::make_optimizer(params, {lr, 0.9, 0.999, 1e-8, 0.0});
  const int c = model.config().collocation;
  for (int step = 0; step < steps; ++step) {
    const double frac = static_cast<double>(step) / steps;
    opt.config.lr = lr_final + 0.5 * (lr - lr_final) * (1.0 + std::cos(std::numbers::pi * frac));
    Eigen::VectorXd colloc(c);
    for (Eigen::Index i = 0; i < c; ++i) colloc[i] = rng.uniform(0.0, h.time());
    nn::zero_grad(params);
    Tape t;
    const LossVars l = build_losses(t, model, h_real, psi0, colloc, anchors);
    if (!std::isfinite(l.total.scalar())) {
      throw TrainingDiverged("PINN loss became non-finite at step " + std::to_string(step));
    }
    t.backward(l.total);
    nn::adamw_step(params, opt);
    result.last = values(l);
  }
  result.steps = steps;
  result.residual = pde_residual(model.field(), h, model.config().residual_grid);
  return result;
}

}  // namespace

PinnTrainResult train_pinn(PinnModel& model, const Hamiltonian& h, const StateVector& psi0, int steps,
                           Rng& rng, const CircuitAnchors& anchors) {
  return optimize(model, h, psi0, steps, model.config().lr, model.config().lr_final, rng, anchors);
}

PinnTrainResult warm_start(PinnModel& model, const Hamiltonian& h, const std::vector<Policy>& policies,
                           const StateVector& psi0, int steps, Rng& rng) {
  const double lr = model.config().warm_lr;
  return optimize(model, h, psi0, steps, lr, lr, rng, policy_anchors(h, policies, psi0));
}

PinnLosses evaluate_losses(const PinnModel& model, const Hamiltonian& h, const StateVector& psi0,
                           const Eigen::VectorXd& collocation, const CircuitAnchors& anchors) {
  Tape t(false);
  return values(build_losses(t, model, real_hamiltonian(h), psi0, collocation, anchors));
}

double surrogate_fidelity(const StateVector& psi_theta, const StateVector& target) {
  const double norm = psi_theta.norm();
  if (norm == 0.0) return 0.0;
  return std::norm(psi_theta.dot(target)) / (norm * norm * target.squaredNorm());
}

double surrogate_fidelity(const PinnModel& model, const Hamiltonian& h, const Policy& policy,
                          const StateVector& psi0) {
  return surrogate_fidelity(model.psi(h.time()), run_circuit(compile_policy(h, policy), psi0));
}

Var surrogate_fidelity(Tape& t, const PinnModel& model, double time, const StateVector& target) {
  const Var v = model.forward(t, Eigen::VectorXd::Constant(1, time));
  const Eigen::Index d = target.size();
  // columns give Re and Im of <psi_theta|target> as linear functions of v
  Matrix w(2 * d, 2);
  w.block(0, 0, d, 1) = target.real();
  w.block(d, 0, d, 1) = target.imag();
  w.block(0, 1, d, 1) = target.imag();
  w.block(d, 1, d, 1) = -target.real();
  const Var overlap = nn::sum(nn::square(nn::matmul(v, t.constant(w))));
  return nn::scale(nn::mul(overlap, nn::pow(nn::sum(nn::square(v)), -1.0)), 1.0 / target.squaredNorm());
}

void PinnModel::set_fourier_matrix(const Matrix& b) {
  if (b.rows() != b_.rows() || b.cols() != b_.cols()) throw InputError("Fourier matrix shape mismatch");
  b_ = b;
}

namespace {

void copy_values(const std::vector<nn::ParamPtr>& from, const std::vector<nn::ParamPtr>& to) {
  for (std::size_t i = 0; i < from.size(); ++i) to[i]->value = from[i]->value;
}

nlohmann::json pinn_config_json(const PinnConfig& c) {
  return {{"fourier_m", c.fourier_m}, {"width", c.width}, {"hidden_layers", c.hidden_layers},
          {"layer_norm", c.layer_norm}, {"collocation", c.collocation}, {"residual_grid", c.residual_grid},
          {"lr", c.lr}, {"lr_final", c.lr_final}, {"warm_lr", c.warm_lr}, {"warm_steps", c.warm_steps}};
}

PinnConfig pinn_config_from_json(const nlohmann::json& j) {
  PinnConfig c;
  c.fourier_m = j.at("fourier_m").get<int>();
  c.width = j.at("width").get<int>();
  c.hidden_layers = j.at("hidden_layers").get<int>();
  c.layer_norm = j.at("layer_norm").get<bool>();
  c.collocation = j.at("collocation").get<int>();
  c.residual_grid = j.at("residual_grid").get<int>();
  c.lr = j.at("lr").get<double>();
  c.lr_final = j.at("lr_final").get<double>();
  c.warm_lr = j.at("warm_lr").get<double>();
  c.warm_steps = j.at("warm_steps").get<int>();
  return c;
}

}  // namespace

std::unique_ptr<PinnModel> clone_pinn(const PinnModel& model, const Hamiltonian& h) {
  if (h.num_qubits() != model.num_qubits()) throw InputError("PINN does not match the Hamiltonian");
  Rng unused(0);
  auto copy = std::make_unique<PinnModel>(h, model.config(), unused);
  copy->set_fourier_matrix(model.fourier_matrix());
  copy_values(model.parameters(), copy->parameters());
  return copy;
}

void save_pinn(const std::filesystem::path& prefix, const PinnModel& model, double residual) {
  nn::Checkpoint ckpt;
  nn::add_parameters(ckpt, "pinn", model.parameters());
  ckpt.add("pinn.fourier", model.fourier_matrix());
  ckpt.metadata["pinn"] = pinn_config_json(model.config());
  ckpt.metadata["num_qubits"] = model.num_qubits();
  ckpt.metadata["residual"] = residual;
  nn::save_checkpoint(prefix, ckpt);
}

std::unique_ptr<PinnModel> load_pinn(const std::filesystem::path& prefix, const Hamiltonian& h, double* residual) {
  const nn::Checkpoint ckpt = nn::load_checkpoint(prefix);
  PinnConfig cfg;
  try {
    cfg = pinn_config_from_json(ckpt.metadata.at("pinn"));
    if (ckpt.metadata.at("num_qubits").get<int>() != h.num_qubits()) {
      throw FormatError("PINN checkpoint was trained for a different qubit count");
    }
    if (residual != nullptr) *residual = ckpt.metadata.at("residual").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("PINN checkpoint metadata: ") + e.what());
  }
  Rng unused(0);
  auto model = std::make_unique<PinnModel>(h, cfg, unused);
  model->set_fourier_matrix(ckpt.get("pinn.fourier"));
  nn::load_parameters(ckpt, "pinn", model->parameters());
  return model;
}

}  // namespace trotterdiff
