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

#include "trotterdiff/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "trotterdiff/errors.hpp"
#include "trotterdiff/nn/ops.hpp"

namespace trotterdiff {

using nn::Matrix;
using nn::Tape;
using nn::Var;

namespace {


Matrix one_hot(const std::vector<int>& labels, int classes) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) m(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  return m;
}

Matrix normal_init(Eigen::Index rows, Eigen::Index cols, double sd, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = sd * rng.normal();
  return m;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& x) {
  Eigen::VectorXd e = (x.array() - x.maxCoeff()).exp();
  return e / e.sum();
}

// Row-wise repeat of example indices: [0]*len, [1]*len, ...
std::vector<int> repeat_index(std::size_t blocks, int len) {
  std::vector<int> idx;
  idx.reserve(blocks * static_cast<std::size_t>(len));
  for (std::size_t b = 0; b < blocks; ++b)
    for (int i = 0; i < len; ++i) idx.push_back(static_cast<int>(b));
  return idx;
}

std::vector<int> tile_index(std::size_t blocks, int len) {
  std::vector<int> idx;
  idx.reserve(blocks * static_cast<std::size_t>(len));
  for (std::size_t b = 0; b < blocks; ++b)
    for (int i = 0; i < len; ++i) idx.push_back(i);
  return idx;
}

// B x (B*len) summing matrix.
Matrix block_sum(std::size_t blocks, int len) {
  const auto b = static_cast<Eigen::Index>(blocks);
  Matrix m = Matrix::Zero(b, b * len);
  for (Eigen::Index i = 0; i < b; ++i) m.block(i, i * len, 1, len).setOnes();
  return m;
}

void check_latent(const PolicyLatent& x, int m, int k) {
  if (static_cast<int>(x.grouping.size()) != m || static_cast<int>(x.orders.size()) != k || x.tau.size() != k) {
    throw InputError("latent does not match the model shape");
  }
}

NoisyBatch with_unconditional(const NoisyBatch& batch) {
  NoisyBatch d;
  d.t = batch.t;
  d.t.insert(d.t.end(), batch.t.begin(), batch.t.end());
  d.x = batch.x;
  d.x.insert(d.x.end(), batch.x.begin(), batch.x.end());
  d.cond = Matrix::Zero(2 * batch.cond.rows(), batch.cond.cols());
  d.cond.topRows(batch.cond.rows()) = batch.cond;
  return d;
}

Var mix_halves(const Var& v, Eigen::Index rows, double w) {
  return nn::sub(nn::scale(nn::slice_rows(v, 0, rows), 1.0 + w), nn::scale(nn::slice_rows(v, rows, rows), w));
}

}  // namespace

int order_label(int order) {
  switch (order) {
    case 1: return 0;
    case 2: return 1;
    case 4: return 2;
    default: throw InputError("order must be 1, 2 or 4");
  }
}

int order_value(int label) {
  static constexpr int kValues[kOrderClasses] = {1, 2, 4};
  if (label < 0 || label >= kOrderClasses) throw InputError("order label out of range");
  return kValues[label];
}

DiffusionConfig DiffusionConfig::paper(int num_terms, int cond_dim) {
  DiffusionConfig c;
  c.num_terms = num_terms;
  c.slots = std::min(num_terms, 6);
  c.cond_dim = cond_dim;
  return c;
}

DiffusionConfig DiffusionConfig::desk(int num_terms, int cond_dim) {
  DiffusionConfig c = paper(num_terms, cond_dim);
  c.width = 64;
  c.group_layers = 2;
  c.order_layers = 2;
  c.T = 100;
  return c;
}

PolicyLatent encode_policy(const Policy& p, const DiffusionConfig& cfg) {
  validate_policy(p, static_cast<std::size_t>(cfg.num_terms));
  if (p.num_groups() > cfg.slots) throw InputError("policy has more groups than the model has slots");
  PolicyLatent x;
  x.grouping = p.grouping;
  x.orders.assign(static_cast<std::size_t>(cfg.slots), 0);
  x.tau = Eigen::VectorXd::Constant(cfg.slots, std::log(cfg.tau_floor));
  for (int i = 0; i < p.num_groups(); ++i) {
    x.orders[static_cast<std::size_t>(i)] = order_label(p.orders[static_cast<std::size_t>(i)]);
    x.tau(i) = std::log(std::max(p.tau[static_cast<std::size_t>(i)], cfg.tau_floor));
  }
  x.tau.array() -= x.tau.mean();
  return x;
}

RawPolicy raw_from_latent(const PolicyLatent& latent) {
  RawPolicy raw;
  raw.grouping = latent.grouping;
  for (int o : latent.orders) raw.orders.push_back(order_value(o));
  const Eigen::VectorXd w = softmax(latent.tau);
  raw.tau.assign(w.data(), w.data() + w.size());
  return raw;
}

Policy decode_latent(const PolicyLatent& latent) { return normalize_policy(raw_from_latent(latent)); }

// Model ---------------------------------------------------------------------

TransformerBlock::TransformerBlock(const std::string& name, int width, Rng& rng)
    : ln1_(name + ".ln1", width),
      ln2_(name + ".ln2", width),
      q_(name + ".q", width, width, rng),
      k_(name + ".k", width, width, rng),
      v_(name + ".v", width, width, rng),
      o_(name + ".o", width, width, rng),
      mlp_(name + ".mlp", nn::MLPSpec{{width, 2 * width, width}, nn::Activation::Gelu, false, 0.0}, rng) {
  add_child(ln1_);
  add_child(ln2_);
  add_child(q_);
  add_child(k_);
  add_child(v_);
  add_child(o_);
  add_child(mlp_);
}

Var TransformerBlock::operator()(Tape& t, const Var& x, Eigen::Index len) const {
  const Var n1 = ln1_(t, x);
  const Var a = nn::block_attention(q_(t, n1), k_(t, n1), v_(t, n1), len);
  const Var h = nn::add(x, o_(t, a));
  return nn::add(h, mlp_(t, ln2_(t, h)));
}

Matrix timestep_embedding(const std::vector<int>& t, int dim) {
  const int half = std::max(dim / 2, 1);
  Matrix e = Matrix::Zero(static_cast<Eigen::Index>(t.size()), dim);
  for (std::size_t r = 0; r < t.size(); ++r) {
    for (int i = 0; i < half; ++i) {
      const double f = std::exp(-std::log(10000.0) * i / half);
      const double a = t[r] * f;
      e(static_cast<Eigen::Index>(r), i) = std::sin(a);
      if (half + i < dim) e(static_cast<Eigen::Index>(r), half + i) = std::cos(a);
    }
  }
  return e;
}

DiffusionModel::DiffusionModel(const DiffusionConfig& cfg, Rng& rng)
    : cfg_(cfg),
      time_mlp_("diff.time", nn::MLPSpec{{cfg.width, cfg.width, cfg.width}, nn::Activation::Gelu, false, 0.0}, rng),
      cond_proj_("diff.cond", std::max(cfg.cond_dim, 1), cfg.width, rng),
      group_ln_("diff.group.ln", cfg.width),
      group_out_("diff.group.out", cfg.width, std::max(cfg.slots, 1), rng),
      occupancy_proj_("diff.order.occ", 1, cfg.width, rng),
      order_ln_("diff.order.ln", cfg.width),
      order_out_("diff.order.out", cfg.width, kOrderClasses, rng),
      tau_mlp_("diff.tau",
               nn::MLPSpec{{2 * cfg.slots + cfg.width, cfg.width, cfg.width, cfg.slots}, nn::Activation::Gelu,
                           false, 0.0},
               rng) {
  if (cfg.num_terms < 1 || cfg.slots < 1 || cfg.cond_dim < 1 || cfg.width < 2 || cfg.T < 1) {
    throw InputError("invalid diffusion model shape");
  }
  if (cfg.slots > cfg.num_terms) throw InputError("more slots than terms");
  const double sd = 0.02;
  add_child(time_mlp_);
  add_child(cond_proj_);
  group_embed_ = add_param("diff.group.embed", normal_init(cfg.slots, cfg.width, sd, rng));
  group_pos_ = add_param("diff.group.pos", normal_init(cfg.num_terms, cfg.width, sd, rng));
  for (int l = 0; l < cfg.group_layers; ++l) {
    group_blocks_.emplace_back("diff.group.block" + std::to_string(l), cfg.width, rng);
    add_child(group_blocks_.back());
  }
  add_child(group_ln_);
  add_child(group_out_);
  order_embed_ = add_param("diff.order.embed", normal_init(kOrderClasses, cfg.width, sd, rng));
  order_pos_ = add_param("diff.order.pos", normal_init(cfg.slots, cfg.width, sd, rng));
  add_child(occupancy_proj_);
  for (int l = 0; l < cfg.order_layers; ++l) {
    order_blocks_.emplace_back("diff.order.block" + std::to_string(l), cfg.width, rng);
    add_child(order_blocks_.back());
  }
  add_child(order_ln_);
  add_child(order_out_);
  add_child(tau_mlp_);
}

Matrix slot_occupancy(const NoisyBatch& batch, int slots) {
  Matrix occ = Matrix::Zero(static_cast<Eigen::Index>(batch.size()), slots);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& g = batch.x[b].grouping;
    for (int label : g) occ(static_cast<Eigen::Index>(b), label) += 1.0;
    if (!g.empty()) occ.row(static_cast<Eigen::Index>(b)) /= static_cast<double>(g.size());
  }
  return occ;
}

DenoiserOutput DiffusionModel::forward(Tape& t, const NoisyBatch& batch) const {
  const std::size_t nb = batch.size();
  const int m = cfg_.num_terms, k = cfg_.slots;
  if (nb == 0) throw InputError("empty diffusion batch");
  if (batch.x.size() != nb || static_cast<std::size_t>(batch.cond.rows()) != nb) {
    throw InputError("diffusion batch fields have different lengths");
  }
  if (batch.cond.cols() != cfg_.cond_dim) throw InputError("condition width does not match the model");

  std::vector<int> g_labels, o_labels;
  Matrix z(static_cast<Eigen::Index>(nb), k);
  for (std::size_t b = 0; b < nb; ++b) {
    const PolicyLatent& x = batch.x[b];
    check_latent(x, m, k);
    if (batch.t[b] < 1 || batch.t[b] > cfg_.T) throw InputError("diffusion step out of range");
    g_labels.insert(g_labels.end(), x.grouping.begin(), x.grouping.end());
    o_labels.insert(o_labels.end(), x.orders.begin(), x.orders.end());
    z.row(static_cast<Eigen::Index>(b)) = x.tau.transpose();
  }

  const Var temb = time_mlp_(t, t.constant(timestep_embedding(batch.t, cfg_.width)));
  const Var ctx = nn::add(temb, cond_proj_(t, t.constant(batch.cond)));

  Var g = nn::matmul(t.constant(one_hot(g_labels, k)), t.param(group_embed_));
  g = nn::add(g, nn::gather_rows(t.param(group_pos_), tile_index(nb, m)));
  g = nn::add(g, nn::gather_rows(ctx, repeat_index(nb, m)));
  for (const auto& block : group_blocks_) g = block(t, g, m);
  const Var group_logits = group_out_(t, group_ln_(t, g));

  const Matrix occ = slot_occupancy(batch, k);
  Matrix occ_col = Eigen::Map<const Matrix>(occ.data(), occ.size(), 1);  // row-major: slots of example b contiguous

  Var o = nn::matmul(t.constant(one_hot(o_labels, kOrderClasses)), t.param(order_embed_));
  o = nn::add(o, nn::gather_rows(t.param(order_pos_), tile_index(nb, k)));
  o = nn::add(o, nn::gather_rows(ctx, repeat_index(nb, k)));
  o = nn::add(o, occupancy_proj_(t, t.constant(occ_col)));
  for (const auto& block : order_blocks_) o = block(t, o, k);
  const Var order_logits = order_out_(t, order_ln_(t, o));

  const Var eps = tau_mlp_(t, nn::concat_cols({t.constant(z), t.constant(occ), ctx}));
  return {group_logits, order_logits, eps};
}

// Training ------------------------------------------------------------------

DiffusionLossTerms diffusion_loss(Tape& t, const DenoiserOutput& out, const TrainingTargets& targets) {
  DiffusionLossTerms l;
  l.group = nn::scale(nn::mean(nn::pick(nn::log_softmax_rows(out.group_logits), targets.grouping)), -1.0);
  l.order = nn::scale(nn::mean(nn::pick(nn::log_softmax_rows(out.order_logits), targets.orders)), -1.0);
  l.tau = nn::mean(nn::square(nn::sub(out.eps, t.constant(targets.eps))));
  l.total = nn::add(nn::add(l.group, nn::scale(l.tau, kTauLossWeight)), nn::scale(l.order, kOrderLossWeight));
  return l;
}

std::pair<NoisyBatch, TrainingTargets> make_training_batch(const std::vector<const TrainingExample*>& examples,
                                                           const DiffusionConfig& cfg,
                                                           const NoiseSchedule& schedule, Rng& rng) {
  if (schedule.T != cfg.T) throw InputError("schedule length does not match the model");
  NoisyBatch batch;
  TrainingTargets targets;
  const auto nb = static_cast<Eigen::Index>(examples.size());
  batch.cond = Matrix::Zero(nb, cfg.cond_dim);
  targets.eps = Matrix::Zero(nb, cfg.slots);
  for (Eigen::Index b = 0; b < nb; ++b) {
    const TrainingExample& ex = *examples[static_cast<std::size_t>(b)];
    const PolicyLatent x0 = encode_policy(ex.policy, cfg);
    const int t = rng.uniform_int(1, cfg.T);
    Eigen::VectorXd eps(cfg.slots);
    for (int i = 0; i < cfg.slots; ++i) eps(i) = rng.normal();
    PolicyLatent xt;
    xt.grouping = d3pm_forward(x0.grouping, t, schedule, cfg.slots, rng);
    xt.orders = d3pm_forward(x0.orders, t, schedule, kOrderClasses, rng);
    xt.tau = ddpm_forward(x0.tau, t, schedule, eps);
    if (ex.cond.size() != cfg.cond_dim) throw InputError("condition width does not match the model");
    if (!rng.bernoulli(cfg.p_drop)) batch.cond.row(b) = ex.cond.transpose();
    batch.t.push_back(t);
    batch.x.push_back(std::move(xt));
    targets.grouping.insert(targets.grouping.end(), x0.grouping.begin(), x0.grouping.end());
    targets.orders.insert(targets.orders.end(), x0.orders.begin(), x0.orders.end());
    targets.eps.row(b) = eps.transpose();
  }
  return {std::move(batch), std::move(targets)};
}

DiffusionLossTerms training_loss(Tape& t, const DiffusionModel& model,
                                 const std::vector<const TrainingExample*>& examples,
                                 const NoiseSchedule& schedule, Rng& rng) {
  auto [batch, targets] = make_training_batch(examples, model.config(), schedule, rng);
  return diffusion_loss(t, model.forward(t, batch), targets);
}

double ema_warmup_decay(double decay, long updates) {
  const double u = static_cast<double>(std::max(updates, 0L));
  return std::min(decay, (1.0 + u) / (10.0 + u));
}

DiffusionTrainer::DiffusionTrainer(const DiffusionModel& model, const nn::AdamWConfig& optimizer)
    : opt(nn::make_optimizer(model.parameters(), optimizer)),
      ema(nn::make_ema(model.parameters(), model.config().ema_decay)) {}

void DiffusionTrainer::update_ema(const DiffusionModel& model) {
  const double base = ema.decay;
  ema.decay = ema_warmup_decay(base, updates);
  nn::ema_update(model.parameters(), ema);
  ema.decay = base;
}

double DiffusionTrainer::step(DiffusionModel& model, const std::vector<const TrainingExample*>& batch,
                              const NoiseSchedule& schedule, Rng& rng) {
  const auto& params = model.parameters();
  nn::zero_grad(params);
  Tape t;
  t.set_training(true);
  const DiffusionLossTerms loss = training_loss(t, model, batch, schedule, rng);
  const double value = loss.total.scalar();
  if (!std::isfinite(value)) throw TrainingDiverged("diffusion loss is not finite");
  t.backward(loss.total);
  if (!nn::grads_finite(params)) throw TrainingDiverged("diffusion gradients are not finite");
  nn::clip_grad_norm(params, clip);
  nn::adamw_step(params, opt);
  update_ema(model);
  ++updates;
  return value;
}

// Sampling ------------------------------------------------------------------

DenoiseFn model_denoiser(const DiffusionModel& model) {
  return [&model](const NoisyBatch& batch) {
    Tape t(false);
    const DenoiserOutput out = model.forward(t, batch);
    return DenoiserValues{out.group_logits.value(), out.order_logits.value(), out.eps.value()};
  };
}

std::vector<SampleResult> reverse_sample(const DenoiseFn& denoise, const SamplerShape& shape,
                                         const Matrix& conds, const NoiseSchedule& schedule, double w,
                                         Rng& rng) {
  const int m = shape.num_terms, k = shape.slots, T = schedule.T;
  const auto nb = static_cast<std::size_t>(conds.rows());
  if (m < 1 || k < 1 || T < 1) throw InputError("invalid sampler shape");
  const auto bm = static_cast<Eigen::Index>(nb) * m;
  const auto bk = static_cast<Eigen::Index>(nb) * k;

  std::vector<SampleResult> results(nb);
  NoisyBatch batch;
  batch.cond = conds;
  batch.x.resize(nb);
  for (auto& x : batch.x) {
    x.grouping.resize(static_cast<std::size_t>(m));
    for (int& g : x.grouping) g = rng.uniform_int(0, k - 1);
    x.orders.resize(static_cast<std::size_t>(k));
    for (int& o : x.orders) o = rng.uniform_int(0, kOrderClasses - 1);
    x.tau.resize(k);
    for (int i = 0; i < k; ++i) x.tau(i) = rng.normal();
  }

  for (int t = T; t >= 1; --t) {
    batch.t.assign(nb, t);
    DenoiserValues v;
    if (w != 0.0) {
      const DenoiserValues both = denoise(with_unconditional(batch));
      v.group_logits = cfg_mix(both.group_logits.topRows(bm), both.group_logits.bottomRows(bm), w);
      v.order_logits = cfg_mix(both.order_logits.topRows(bk), both.order_logits.bottomRows(bk), w);
      v.eps = cfg_mix(both.eps.topRows(static_cast<Eigen::Index>(nb)),
                      both.eps.bottomRows(static_cast<Eigen::Index>(nb)), w);
    } else {
      v = denoise(batch);
    }
    const double sigma = ddpm_sigma(t, schedule);
    for (std::size_t b = 0; b < nb; ++b) {
      SampleResult& r = results[b];
      const PolicyLatent& cur = batch.x[b];
      PolicyLatent prev = cur;
      const auto rb = static_cast<Eigen::Index>(b);
      for (int i = 0; i < m; ++i) {
        const Eigen::VectorXd p0 = softmax(v.group_logits.row(rb * m + i).transpose());
        const Eigen::VectorXd post = d3pm_posterior(cur.grouping[static_cast<std::size_t>(i)], p0, t, schedule, k);
        const std::size_t j = rng.categorical(std::span<const double>(post.data(), static_cast<std::size_t>(k)));
        prev.grouping[static_cast<std::size_t>(i)] = static_cast<int>(j);
        r.log_prob_discrete += std::log(post(static_cast<Eigen::Index>(j)));
      }
      for (int i = 0; i < k; ++i) {
        const Eigen::VectorXd p0 = softmax(v.order_logits.row(rb * k + i).transpose());
        const Eigen::VectorXd post =
            d3pm_posterior(cur.orders[static_cast<std::size_t>(i)], p0, t, schedule, kOrderClasses);
        const std::size_t j =
            rng.categorical(std::span<const double>(post.data(), static_cast<std::size_t>(kOrderClasses)));
        prev.orders[static_cast<std::size_t>(i)] = static_cast<int>(j);
        r.log_prob_discrete += std::log(post(static_cast<Eigen::Index>(j)));
      }
      const Eigen::VectorXd mu = ddpm_mean(cur.tau, v.eps.row(rb).transpose(), t, schedule);
      if (sigma > 0.0) {
        Eigen::VectorXd noise(k);
        for (int i = 0; i < k; ++i) noise(i) = rng.normal();
        prev.tau = mu + sigma * noise;
        r.log_prob_continuous += -0.5 * noise.squaredNorm() - k * std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
      } else {
        prev.tau = mu;
      }
      r.trajectory.push_back({t, cur, prev});
      batch.x[b] = std::move(prev);
    }
  }

  for (std::size_t b = 0; b < nb; ++b) {
    SampleResult& r = results[b];
    r.raw = raw_from_latent(batch.x[b]);
    r.policy = normalize_policy(r.raw);
    r.log_prob = r.log_prob_discrete + r.log_prob_continuous;
  }
  return results;
}

std::vector<SampleResult> sample_policies(const DiffusionModel& model, const Matrix& conds,
                                          const NoiseSchedule& schedule, double w, Rng& rng) {
  const DiffusionConfig& c = model.config();
  if (schedule.T != c.T) throw InputError("schedule length does not match the model");
  return reverse_sample(model_denoiser(model), {c.num_terms, c.slots}, conds, schedule, w, rng);
}

SampleResult sample_policy(const DiffusionModel& model, const Eigen::VectorXd& cond, const NoiseSchedule& schedule,
                           double w, std::uint64_t seed) {
  Rng rng(seed);
  Matrix c = cond.transpose();
  return sample_policies(model, c, schedule, w, rng).front();
}

std::vector<SampleResult> sample_with_ema(DiffusionModel& model, const nn::EmaWeights& ema, const Matrix& conds,
                                          const NoiseSchedule& schedule, double w, Rng& rng) {
  nn::EmaScope scope(model.parameters(), ema);
  return sample_policies(model, conds, schedule, w, rng);
}

Var trajectory_log_prob(Tape& t, const DiffusionModel& model, const std::vector<const SampleResult*>& samples,
                        const Matrix& conds, const NoiseSchedule& schedule, double w) {
  const DiffusionConfig& c = model.config();
  const int m = c.num_terms, k = c.slots;
  const std::size_t nb = samples.size();
  if (nb == 0 || static_cast<std::size_t>(conds.rows()) != nb) throw InputError("samples and conditions differ");
  const std::size_t steps = samples.front()->trajectory.size();
  for (const auto* s : samples) {
    if (s->trajectory.size() != steps) throw InputError("trajectories have different lengths");
  }
  const auto bm = static_cast<Eigen::Index>(nb) * m;
  const auto bk = static_cast<Eigen::Index>(nb) * k;
  const Matrix sum_m = block_sum(nb, m);
  const Matrix sum_k = block_sum(nb, k);

  auto categorical_term = [&](const Var& logits, const std::vector<int>& cur, const std::vector<int>& chosen,
                              int classes, int step) {
    const double beta = schedule.beta[static_cast<std::size_t>(step)];
    const double ab = schedule.abar(step - 1);
    Matrix like = Matrix::Constant(logits.rows(), classes, beta / classes);
    for (std::size_t r = 0; r < cur.size(); ++r) like(static_cast<Eigen::Index>(r), cur[r]) += 1.0 - beta;
    const Var q = nn::add_scalar(nn::scale(nn::softmax_rows(logits), ab), (1.0 - ab) / classes);
    const Var un = nn::mul(q, t.constant(like));
    return nn::sub(nn::log(nn::pick(un, chosen)), nn::log(nn::row_sum(un)));
  };

  Var total = t.constant(Matrix::Zero(static_cast<Eigen::Index>(nb), 1));
  for (std::size_t s = 0; s < steps; ++s) {
    NoisyBatch batch;
    batch.cond = conds;
    std::vector<int> g_cur, g_prev, o_cur, o_prev;
    Matrix z_cur(static_cast<Eigen::Index>(nb), k), z_prev(static_cast<Eigen::Index>(nb), k);
    const int step = samples.front()->trajectory[s].t;
    for (std::size_t b = 0; b < nb; ++b) {
      const StepRecord& rec = samples[b]->trajectory[s];
      if (rec.t != step) throw InputError("trajectories are not aligned");
      batch.t.push_back(step);
      batch.x.push_back(rec.x_t);
      g_cur.insert(g_cur.end(), rec.x_t.grouping.begin(), rec.x_t.grouping.end());
      g_prev.insert(g_prev.end(), rec.x_prev.grouping.begin(), rec.x_prev.grouping.end());
      o_cur.insert(o_cur.end(), rec.x_t.orders.begin(), rec.x_t.orders.end());
      o_prev.insert(o_prev.end(), rec.x_prev.orders.begin(), rec.x_prev.orders.end());
      z_cur.row(static_cast<Eigen::Index>(b)) = rec.x_t.tau.transpose();
      z_prev.row(static_cast<Eigen::Index>(b)) = rec.x_prev.tau.transpose();
    }
    Var gl, ol, eps;
    if (w != 0.0) {
      const DenoiserOutput out = model.forward(t, with_unconditional(batch));
      gl = mix_halves(out.group_logits, bm, w);
      ol = mix_halves(out.order_logits, bk, w);
      eps = mix_halves(out.eps, static_cast<Eigen::Index>(nb), w);
    } else {
      const DenoiserOutput out = model.forward(t, batch);
      gl = out.group_logits;
      ol = out.order_logits;
      eps = out.eps;
    }
    total = nn::add(total, nn::matmul(t.constant(sum_m), categorical_term(gl, g_cur, g_prev, k, step)));
    total = nn::add(total, nn::matmul(t.constant(sum_k), categorical_term(ol, o_cur, o_prev, kOrderClasses, step)));

    const double sigma = ddpm_sigma(step, schedule);
    if (sigma > 0.0) {
      const double beta = schedule.beta[static_cast<std::size_t>(step)];
      const double ra = std::sqrt(schedule.alpha(step));
      const double coef = beta / (std::sqrt(1.0 - schedule.abar(step)) * ra);
      const Var mu = nn::add(t.constant(z_cur / ra), nn::scale(eps, -coef));
      const Var diff = nn::sub(t.constant(z_prev), mu);
      const Var lp = nn::add_scalar(nn::scale(nn::row_sum(nn::square(diff)), -0.5 / (sigma * sigma)),
                                    -k * std::log(sigma * std::sqrt(2.0 * std::numbers::pi)));
      total = nn::add(total, lp);
    }
  }
  return total;
}

}  // namespace trotterdiff
