// Copyright 2026 The Authors.
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

#include "prefrec/models.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "json.hpp"
#include "prefrec/plackett.h"

namespace prefrec {
namespace {

constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw SpecError("learning_rate must be > 0");
  }
  if (epochs < 0) throw SpecError("epochs must be >= 0");
  if (!(l2_lambda >= 0.0)) throw SpecError("l2_lambda must be >= 0");
  if (batch_size < 1) throw SpecError("batch_size must be >= 1");
}

// ---------------------------------------------------------------------------
// ScoreModel

std::vector<double> ScoreModel::user_scores(UserId u) const {
  std::vector<double> out(static_cast<std::size_t>(num_items()));
  for (ItemId i = 0; i < num_items(); ++i) {
    out[static_cast<std::size_t>(i)] = score(u, i);
  }
  return out;
}

std::vector<double> ScoreModel::user_scores(
    UserId u, std::span<const ItemId> items) const {
  std::vector<double> out;
  out.reserve(items.size());
  for (ItemId i : items) out.push_back(score(u, i));
  return out;
}

void ScoreModel::check_ids(UserId u, ItemId i) const {
  if (u < 0 || u >= num_users()) {
    throw DataError("user id " + std::to_string(u) + " out of range [0, " +
                    std::to_string(num_users()) + ")");
  }
  if (i < 0 || i >= num_items()) {
    throw DataError("item id " + std::to_string(i) + " out of range [0, " +
                    std::to_string(num_items()) + ")");
  }
}

// ---------------------------------------------------------------------------
// Matrix factorization

MatrixFactorizationModel::MatrixFactorizationModel(int n_users, int n_items,
                                                   int dim)
    : n_users_(n_users), n_items_(n_items), dim_(dim) {
  if (n_users < 1 || n_items < 1 || dim < 1) {
    throw std::invalid_argument("MF dimensions must be positive");
  }
  params_.assign(static_cast<std::size_t>(n_users + n_items) *
                     static_cast<std::size_t>(dim),
                 0.0);
}

MatrixFactorizationModel::MatrixFactorizationModel(int n_users, int n_items,
                                                   int dim, double init_std,
                                                   std::uint64_t seed)
    : MatrixFactorizationModel(n_users, n_items, dim) {
  seed_ = seed;
  const double sd = init_std > 0.0 ? init_std : 1.0 / std::sqrt(dim);
  Rng rng = Rng(seed).stream({kInitStream});
  for (double& p : params_) p = rng.normal(0.0, sd);
}

double MatrixFactorizationModel::score(UserId u, ItemId i) const {
  check_ids(u, i);
  return dot(user_factors(u), item_factors(i));
}

std::unique_ptr<ScoreModel> MatrixFactorizationModel::clone() const {
  return std::make_unique<MatrixFactorizationModel>(*this);
}

void MatrixFactorizationModel::set_parameters(std::span<const double> params) {
  if (params.size() != params_.size()) {
    throw std::invalid_argument("MF parameter size mismatch");
  }
  std::copy(params.begin(), params.end(), params_.begin());
}

std::span<double> MatrixFactorizationModel::user_factors(UserId u) {
  return {params_.data() + user_offset(u), static_cast<std::size_t>(dim_)};
}
std::span<const double> MatrixFactorizationModel::user_factors(UserId u) const {
  return {params_.data() + user_offset(u), static_cast<std::size_t>(dim_)};
}
std::span<double> MatrixFactorizationModel::item_factors(ItemId i) {
  return {params_.data() + item_offset(i), static_cast<std::size_t>(dim_)};
}
std::span<const double> MatrixFactorizationModel::item_factors(ItemId i) const {
  return {params_.data() + item_offset(i), static_cast<std::size_t>(dim_)};
}

void MatrixFactorizationModel::accumulate_score_gradient(
    UserId u, ItemId i, double scale, std::span<double> grad) const {
  check_ids(u, i);
  const auto uu = user_factors(u);
  const auto vi = item_factors(i);
  for (int k = 0; k < dim_; ++k) {
    grad[user_offset(u) + static_cast<std::size_t>(k)] += scale * vi[k];
    grad[item_offset(i) + static_cast<std::size_t>(k)] += scale * uu[k];
  }
}

double MatrixFactorizationModel::ascend_pair(const ComparisonTriplet& t,
                                             double lr, double l2, Rng&) {
  check_ids(t.user, t.winner);
  check_ids(t.user, t.loser);
  auto uu = user_factors(t.user);
  auto vi = item_factors(t.winner);
  auto vj = item_factors(t.loser);
  const double diff = dot(uu, vi) - dot(uu, vj);
  const double loglik = log_sigmoid(diff);
  const double g = 1.0 - sigmoid(diff);
  for (int k = 0; k < dim_; ++k) {
    const double u_k = uu[k];
    const double vi_k = vi[k];
    const double vj_k = vj[k];
    uu[k] += lr * (g * (vi_k - vj_k) - l2 * u_k);
    vi[k] += lr * (g * u_k - l2 * vi_k);
    vj[k] += lr * (-g * u_k - l2 * vj_k);
  }
  return loglik;
}

// ---------------------------------------------------------------------------
// Neural preference model

struct NeuralPreferenceModel::Activations {
  std::vector<double> p, q, gmf, x0, a1, h1, a2, h2;
  double out = 0.0;
};

NeuralPreferenceModel::NeuralPreferenceModel(int n_users, int n_items,
                                             NeuralShape shape,
                                             std::vector<double> item_features,
                                             int feature_dim)
    : n_users_(n_users),
      n_items_(n_items),
      shape_(shape),
      feature_dim_(feature_dim),
      features_(std::move(item_features)) {
  if (n_users < 1 || n_items < 1 || shape.embedding_dim < 1 ||
      shape.hidden1 < 1 || shape.hidden2 < 1 || shape.z_dim < 0 ||
      feature_dim < 0) {
    throw std::invalid_argument("invalid neural model shape");
  }
  if (features_.size() != static_cast<std::size_t>(n_items) *
                              static_cast<std::size_t>(feature_dim)) {
    throw std::invalid_argument("item feature matrix has wrong size");
  }
  for (double f : features_) {
    if (!std::isfinite(f)) throw std::invalid_argument("non-finite feature");
  }
  epistemic_training_ = shape.z_dim > 0;
  build_layout();
  params_.assign(layout_.total, 0.0);
}

NeuralPreferenceModel::NeuralPreferenceModel(int n_users, int n_items,
                                             NeuralShape shape, double init_std,
                                             std::uint64_t seed,
                                             std::vector<double> item_features,
                                             int feature_dim)
    : NeuralPreferenceModel(n_users, n_items, shape, std::move(item_features),
                            feature_dim) {
  seed_ = seed;
  Rng rng = Rng(seed).stream({kInitStream});
  init_random(init_std, rng);
}

void NeuralPreferenceModel::build_layout() {
  const std::size_t e = static_cast<std::size_t>(shape_.embedding_dim);
  const std::size_t h1 = static_cast<std::size_t>(shape_.hidden1);
  const std::size_t h2 = static_cast<std::size_t>(shape_.hidden2);
  std::size_t at = 0;
  auto take = [&](std::size_t n) {
    const std::size_t begin = at;
    at += n;
    return begin;
  };
  layout_.user_emb = take(static_cast<std::size_t>(n_users_) * e);
  layout_.item_emb = take(static_cast<std::size_t>(n_items_) * e);
  layout_.dense_begin = at;
  layout_.wz = take(e * static_cast<std::size_t>(shape_.z_dim));
  layout_.wf = take(e * static_cast<std::size_t>(feature_dim_));
  layout_.w1 = take(h1 * 2 * e);
  layout_.b1 = take(h1);
  layout_.w2 = take(h2 * h1);
  layout_.b2 = take(h2);
  layout_.wout = take(e + h2);
  layout_.bout = take(1);
  layout_.total = at;
}

void NeuralPreferenceModel::init_random(double init_std, Rng& rng) {
  auto fill = [&](std::size_t begin, std::size_t count, double sd) {
    for (std::size_t k = 0; k < count; ++k) {
      params_[begin + k] = rng.normal(0.0, init_std > 0.0 ? init_std : sd);
    }
  };
  const std::size_t e = static_cast<std::size_t>(shape_.embedding_dim);
  const std::size_t h1 = static_cast<std::size_t>(shape_.hidden1);
  const std::size_t h2 = static_cast<std::size_t>(shape_.hidden2);
  const double emb_sd = 1.0 / std::sqrt(static_cast<double>(e));
  fill(layout_.user_emb, layout_.item_emb - layout_.user_emb, emb_sd);
  fill(layout_.item_emb, layout_.dense_begin - layout_.item_emb, emb_sd);
  if (shape_.z_dim > 0) {
    // Start with small epistemic perturbations relative to the embeddings.
    fill(layout_.wz, e * static_cast<std::size_t>(shape_.z_dim),
         0.1 / std::sqrt(static_cast<double>(shape_.z_dim)));
  }
  if (feature_dim_ > 0) {
    fill(layout_.wf, e * static_cast<std::size_t>(feature_dim_),
         1.0 / std::sqrt(static_cast<double>(feature_dim_)));
  }
  fill(layout_.w1, h1 * 2 * e, 1.0 / std::sqrt(2.0 * static_cast<double>(e)));
  fill(layout_.w2, h2 * h1, 1.0 / std::sqrt(static_cast<double>(h1)));
  fill(layout_.wout, e + h2, 1.0 / std::sqrt(static_cast<double>(e + h2)));
}

void NeuralPreferenceModel::forward_pass(UserId u, ItemId i,
                                         std::span<const double> z,
                                         Activations& act) const {
  check_ids(u, i);
  const int e = shape_.embedding_dim;
  const int h1 = shape_.hidden1;
  const int h2 = shape_.hidden2;
  if (!z.empty() && static_cast<int>(z.size()) != shape_.z_dim) {
    throw std::invalid_argument("z has dimension " + std::to_string(z.size()) +
                                ", model expects " +
                                std::to_string(shape_.z_dim));
  }
  const double* P = params_.data() + layout_.user_emb +
                    static_cast<std::size_t>(u) * static_cast<std::size_t>(e);
  const double* Q = params_.data() + layout_.item_emb +
                    static_cast<std::size_t>(i) * static_cast<std::size_t>(e);
  act.p.assign(P, P + e);
  act.q.assign(Q, Q + e);
  if (!z.empty()) {
    const double* wz = params_.data() + layout_.wz;
    for (int r = 0; r < e; ++r) {
      double acc = 0.0;
      for (int c = 0; c < shape_.z_dim; ++c) acc += wz[r * shape_.z_dim + c] * z[c];
      act.p[r] += acc;
    }
  }
  if (feature_dim_ > 0) {
    const double* wf = params_.data() + layout_.wf;
    const double* x = features_.data() + static_cast<std::size_t>(i) *
                                             static_cast<std::size_t>(feature_dim_);
    for (int r = 0; r < e; ++r) {
      double acc = 0.0;
      for (int c = 0; c < feature_dim_; ++c) acc += wf[r * feature_dim_ + c] * x[c];
      act.q[r] += acc;
    }
  }
  act.gmf.resize(static_cast<std::size_t>(e));
  for (int r = 0; r < e; ++r) act.gmf[r] = act.p[r] * act.q[r];
  act.x0.resize(2 * static_cast<std::size_t>(e));
  std::copy(act.p.begin(), act.p.end(), act.x0.begin());
  std::copy(act.q.begin(), act.q.end(), act.x0.begin() + e);

  const double* w1 = params_.data() + layout_.w1;
  const double* b1 = params_.data() + layout_.b1;
  act.a1.resize(static_cast<std::size_t>(h1));
  act.h1.resize(static_cast<std::size_t>(h1));
  for (int r = 0; r < h1; ++r) {
    double acc = b1[r];
    for (int c = 0; c < 2 * e; ++c) acc += w1[r * 2 * e + c] * act.x0[c];
    act.a1[r] = acc;
    act.h1[r] = acc > 0.0 ? acc : 0.0;
  }
  const double* w2 = params_.data() + layout_.w2;
  const double* b2 = params_.data() + layout_.b2;
  act.a2.resize(static_cast<std::size_t>(h2));
  act.h2.resize(static_cast<std::size_t>(h2));
  for (int r = 0; r < h2; ++r) {
    double acc = b2[r];
    for (int c = 0; c < h1; ++c) acc += w2[r * h1 + c] * act.h1[c];
    act.a2[r] = acc;
    act.h2[r] = acc > 0.0 ? acc : 0.0;
  }
  const double* wout = params_.data() + layout_.wout;
  double out = params_[layout_.bout];
  for (int r = 0; r < e; ++r) out += wout[r] * act.gmf[r];
  for (int r = 0; r < h2; ++r) out += wout[e + r] * act.h2[r];
  act.out = out;
}

void NeuralPreferenceModel::backward_pass(UserId u, ItemId i,
                                          std::span<const double> z,
                                          const Activations& act,
                                          double upstream,
                                          std::span<double> grad) const {
  const int e = shape_.embedding_dim;
  const int h1 = shape_.hidden1;
  const int h2 = shape_.hidden2;
  const double* wout = params_.data() + layout_.wout;
  double* gwout = grad.data() + layout_.wout;
  grad[layout_.bout] += upstream;
  std::vector<double> dp(static_cast<std::size_t>(e));
  std::vector<double> dq(static_cast<std::size_t>(e));
  for (int r = 0; r < e; ++r) {
    gwout[r] += upstream * act.gmf[r];
    const double dg = upstream * wout[r];
    dp[r] = dg * act.q[r];
    dq[r] = dg * act.p[r];
  }
  std::vector<double> da2(static_cast<std::size_t>(h2));
  for (int r = 0; r < h2; ++r) {
    gwout[e + r] += upstream * act.h2[r];
    da2[r] = act.a2[r] > 0.0 ? upstream * wout[e + r] : 0.0;
  }
  const double* w2 = params_.data() + layout_.w2;
  double* gw2 = grad.data() + layout_.w2;
  double* gb2 = grad.data() + layout_.b2;
  std::vector<double> dh1(static_cast<std::size_t>(h1), 0.0);
  for (int r = 0; r < h2; ++r) {
    if (da2[r] == 0.0) continue;
    gb2[r] += da2[r];
    for (int c = 0; c < h1; ++c) {
      gw2[r * h1 + c] += da2[r] * act.h1[c];
      dh1[c] += w2[r * h1 + c] * da2[r];
    }
  }
  const double* w1 = params_.data() + layout_.w1;
  double* gw1 = grad.data() + layout_.w1;
  double* gb1 = grad.data() + layout_.b1;
  for (int r = 0; r < h1; ++r) {
    const double da1 = act.a1[r] > 0.0 ? dh1[r] : 0.0;
    if (da1 == 0.0) continue;
    gb1[r] += da1;
    for (int c = 0; c < 2 * e; ++c) {
      gw1[r * 2 * e + c] += da1 * act.x0[c];
      if (c < e) {
        dp[c] += w1[r * 2 * e + c] * da1;
      } else {
        dq[c - e] += w1[r * 2 * e + c] * da1;
      }
    }
  }
  double* gP = grad.data() + layout_.user_emb +
               static_cast<std::size_t>(u) * static_cast<std::size_t>(e);
  double* gQ = grad.data() + layout_.item_emb +
               static_cast<std::size_t>(i) * static_cast<std::size_t>(e);
  for (int r = 0; r < e; ++r) {
    gP[r] += dp[r];
    gQ[r] += dq[r];
  }
  if (!z.empty()) {
    double* gwz = grad.data() + layout_.wz;
    for (int r = 0; r < e; ++r) {
      for (int c = 0; c < shape_.z_dim; ++c) gwz[r * shape_.z_dim + c] += dp[r] * z[c];
    }
  }
  if (feature_dim_ > 0) {
    double* gwf = grad.data() + layout_.wf;
    const double* x = features_.data() + static_cast<std::size_t>(i) *
                                             static_cast<std::size_t>(feature_dim_);
    for (int r = 0; r < e; ++r) {
      for (int c = 0; c < feature_dim_; ++c) gwf[r * feature_dim_ + c] += dq[r] * x[c];
    }
  }
}

double NeuralPreferenceModel::score(UserId u, ItemId i) const {
  return forward(u, i, {});
}

double NeuralPreferenceModel::forward(UserId u, ItemId i,
                                      std::span<const double> z) const {
  Activations act;
  forward_pass(u, i, z, act);
  return act.out;
}

std::unique_ptr<ScoreModel> NeuralPreferenceModel::clone() const {
  return std::make_unique<NeuralPreferenceModel>(*this);
}

void NeuralPreferenceModel::set_parameters(std::span<const double> params) {
  if (params.size() != params_.size()) {
    throw std::invalid_argument("neural parameter size mismatch");
  }
  std::copy(params.begin(), params.end(), params_.begin());
}

void NeuralPreferenceModel::accumulate_score_gradient(
    UserId u, ItemId i, double scale, std::span<double> grad) const {
  if (grad.size() != params_.size()) {
    throw std::invalid_argument("gradient buffer size mismatch");
  }
  Activations act;
  forward_pass(u, i, {}, act);
  backward_pass(u, i, {}, act, scale, grad);
}

double NeuralPreferenceModel::ascend_pair(const ComparisonTriplet& t,
                                          double lr, double l2, Rng& rng) {
  std::vector<double> z;
  if (epistemic_training_ && shape_.z_dim > 0) {
    z.resize(static_cast<std::size_t>(shape_.z_dim));
    for (double& v : z) v = rng.normal();
  }
  Activations act_i;
  Activations act_j;
  forward_pass(t.user, t.winner, z, act_i);
  forward_pass(t.user, t.loser, z, act_j);
  const double diff = act_i.out - act_j.out;
  const double loglik = log_sigmoid(diff);
  const PairGradients g = loss_gradients(act_i.out, act_j.out);

  scratch_.resize(params_.size());
  const std::size_t e = static_cast<std::size_t>(shape_.embedding_dim);
  const std::size_t rows[3] = {
      layout_.user_emb + static_cast<std::size_t>(t.user) * e,
      layout_.item_emb + static_cast<std::size_t>(t.winner) * e,
      layout_.item_emb + static_cast<std::size_t>(t.loser) * e};
  for (std::size_t begin : rows) {
    std::fill_n(scratch_.begin() + static_cast<std::ptrdiff_t>(begin), e, 0.0);
  }
  std::fill(scratch_.begin() + static_cast<std::ptrdiff_t>(layout_.dense_begin),
            scratch_.end(), 0.0);
  backward_pass(t.user, t.winner, z, act_i, g.g_winner, scratch_);
  backward_pass(t.user, t.loser, z, act_j, g.g_loser, scratch_);

  auto apply = [&](std::size_t begin, std::size_t count) {
    for (std::size_t k = begin; k < begin + count; ++k) {
      params_[k] += lr * (scratch_[k] - l2 * params_[k]);
    }
  };
  apply(rows[0], e);
  apply(rows[1], e);
  apply(rows[2], e);
  apply(layout_.dense_begin, params_.size() - layout_.dense_begin);
  return loglik;
}

// ---------------------------------------------------------------------------
// Loss, gradients, training

double pairwise_loss(const ScoreModel& model,
                     std::span<const ComparisonTriplet> data) {
  double total = 0.0;
  for (const auto& t : data) {
    total += log_sigmoid(model.score(t.user, t.winner) -
                         model.score(t.user, t.loser));
  }
  return total;
}

PairGradients loss_gradients(double s_ui, double s_uj) {
  if (!std::isfinite(s_ui) || !std::isfinite(s_uj)) {
    throw std::invalid_argument("loss_gradients: non-finite score");
  }
  // 1 - sigmoid(d) == sigmoid(-d), computed without cancellation.
  const double g = sigmoid(s_uj - s_ui);
  return {g, -g};
}

std::vector<double> pairwise_loss_gradient(
    const ScoreModel& model, std::span<const ComparisonTriplet> data) {
  std::vector<double> grad(model.num_parameters(), 0.0);
  for (const auto& t : data) {
    const PairGradients g =
        loss_gradients(model.score(t.user, t.winner), model.score(t.user, t.loser));
    model.accumulate_score_gradient(t.user, t.winner, g.g_winner, grad);
    model.accumulate_score_gradient(t.user, t.loser, g.g_loser, grad);
  }
  return grad;
}

TrainStats train_pairwise(ScoreModel& model,
                          std::span<const ComparisonTriplet> data,
                          const TrainConfig& cfg) {
  cfg.validate();
  for (const auto& t : data) {
    model.check_ids(t.user, t.winner);
    model.check_ids(t.user, t.loser);
  }
  TrainStats stats;
  if (data.empty()) return stats;
  const Rng root(cfg.seed);
  Rng noise = root.stream({kNoiseStream});
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> batch_grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle = root.stream({kShuffleStream, static_cast<std::uint64_t>(epoch)});
    shuffle.shuffle(order.begin(), order.end());
    double loglik = 0.0;
    if (cfg.batch_size == 1) {
      for (std::size_t idx : order) {
        loglik += model.ascend_pair(data[idx], cfg.learning_rate,
                                    cfg.l2_lambda, noise);
      }
    } else {
      // Mini-batch mode: mean gradient over the batch at z = 0, L2 decay on
      // all parameters once per batch.
      std::vector<double> params = model.parameters();
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t end = std::min(
            order.size(), start + static_cast<std::size_t>(cfg.batch_size));
        batch_grad.assign(params.size(), 0.0);
        for (std::size_t b = start; b < end; ++b) {
          const auto& t = data[order[b]];
          const double s_i = model.score(t.user, t.winner);
          const double s_j = model.score(t.user, t.loser);
          loglik += log_sigmoid(s_i - s_j);
          const PairGradients g = loss_gradients(s_i, s_j);
          model.accumulate_score_gradient(t.user, t.winner, g.g_winner, batch_grad);
          model.accumulate_score_gradient(t.user, t.loser, g.g_loser, batch_grad);
        }
        const double inv = 1.0 / static_cast<double>(end - start);
        for (std::size_t k = 0; k < params.size(); ++k) {
          params[k] += cfg.learning_rate *
                       (batch_grad[k] * inv - cfg.l2_lambda * params[k]);
        }
        model.set_parameters(params);
      }
    }
    const double mean = loglik / static_cast<double>(data.size());
    if (!std::isfinite(mean)) {
      throw TrainingDiverged("pairwise training diverged at epoch " +
                             std::to_string(epoch) +
                             " (lr=" + std::to_string(cfg.learning_rate) +
                             "); lower the learning rate");
    }
    stats.epoch_loglik.push_back(mean);
  }
  return stats;
}

double rating_mse(const MatrixFactorizationModel& model,
                  std::span<const RatingRecord> ratings) {
  if (ratings.empty()) return 0.0;
  double sse = 0.0;
  for (const auto& r : ratings) {
    const double e = r.rating - model.score(r.user, r.item);
    sse += e * e;
  }
  return sse / static_cast<double>(ratings.size());
}

RatingTrainStats train_rating_mse(MatrixFactorizationModel& model,
                                  std::span<const RatingRecord> ratings,
                                  const TrainConfig& cfg) {
  cfg.validate();
  for (const auto& r : ratings) model.check_ids(r.user, r.item);
  RatingTrainStats stats;
  stats.initial_mse = rating_mse(model, ratings);
  if (ratings.empty()) return stats;
  const Rng root(cfg.seed);
  std::vector<std::size_t> order(ratings.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const int dim = model.dim();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle = root.stream({kShuffleStream, static_cast<std::uint64_t>(epoch)});
    shuffle.shuffle(order.begin(), order.end());
    for (std::size_t idx : order) {
      const auto& r = ratings[idx];
      auto uu = model.user_factors(r.user);
      auto vi = model.item_factors(r.item);
      const double err = r.rating - dot(uu, vi);
      for (int k = 0; k < dim; ++k) {
        const double u_k = uu[k];
        uu[k] += cfg.learning_rate * (err * vi[k] - cfg.l2_lambda * u_k);
        vi[k] += cfg.learning_rate * (err * u_k - cfg.l2_lambda * vi[k]);
      }
    }
    const double mse = rating_mse(model, ratings);
    if (!std::isfinite(mse)) {
      throw TrainingDiverged("rating MF diverged at epoch " +
                             std::to_string(epoch) +
                             " (lr=" + std::to_string(cfg.learning_rate) + ")");
    }
    stats.epoch_mse.push_back(mse);
  }
  return stats;
}

std::unique_ptr<ScoreModel> clone_and_finetune(
    const ScoreModel& model, const ComparisonTriplet& new_triplet,
    std::span<const ComparisonTriplet> replay, const TrainConfig& cfg) {
  auto copy = model.clone();
  if (cfg.epochs == 0) return copy;
  std::vector<ComparisonTriplet> data;
  data.reserve(replay.size() + 1);
  data.push_back(new_triplet);
  data.insert(data.end(), replay.begin(), replay.end());
  train_pairwise(*copy, data, cfg);
  return copy;
}

std::vector<ComparisonTriplet> sample_replay(
    std::span<const ComparisonTriplet> data, int count, Rng& rng) {
  std::vector<ComparisonTriplet> out;
  if (count <= 0 || data.empty()) return out;
  if (static_cast<std::size_t>(count) >= data.size()) {
    out.assign(data.begin(), data.end());
    return out;
  }
  // Partial Fisher-Yates over indices.
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (int k = 0; k < count; ++k) {
    const std::size_t j =
        static_cast<std::size_t>(k) +
        static_cast<std::size_t>(rng.below(idx.size() - static_cast<std::size_t>(k)));
    std::swap(idx[static_cast<std::size_t>(k)], idx[j]);
    out.push_back(data[idx[static_cast<std::size_t>(k)]]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr const char* kFormat = "prefrec-model";
constexpr int kVersion = 1;
}  // namespace

std::string serialize_model(const ScoreModel& model) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["kind"] = model.kind();
  j["n_users"] = model.num_users();
  j["n_items"] = model.num_items();
  if (const auto* mf = dynamic_cast<const MatrixFactorizationModel*>(&model)) {
    j["dim"] = mf->dim();
    j["seed"] = mf->seed();
  } else if (const auto* nn = dynamic_cast<const NeuralPreferenceModel*>(&model)) {
    j["embedding_dim"] = nn->shape().embedding_dim;
    j["hidden"] = {nn->shape().hidden1, nn->shape().hidden2};
    j["z_dim"] = nn->shape().z_dim;
    j["feature_dim"] = nn->feature_dim();
    j["item_features"] = nn->item_features();
    j["epistemic_training"] = nn->epistemic_training();
    j["seed"] = nn->seed();
  } else {
    throw std::invalid_argument("cannot serialize model kind " + model.kind());
  }
  j["params"] = model.parameters();
  return j.dump();
}

std::unique_ptr<ScoreModel> deserialize_model(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kFormat) {
      throw DataError("not a prefrec model checkpoint");
    }
    if (j.at("version").get<int>() != kVersion) {
      throw DataError("unsupported checkpoint version " +
                      std::to_string(j.at("version").get<int>()));
    }
    const std::string kind = j.at("kind").get<std::string>();
    const int nu = j.at("n_users").get<int>();
    const int ni = j.at("n_items").get<int>();
    std::unique_ptr<ScoreModel> model;
    if (kind == "mf") {
      model = std::make_unique<MatrixFactorizationModel>(nu, ni,
                                                         j.at("dim").get<int>());
    } else if (kind == "neural") {
      NeuralShape shape;
      shape.embedding_dim = j.at("embedding_dim").get<int>();
      shape.hidden1 = j.at("hidden").at(0).get<int>();
      shape.hidden2 = j.at("hidden").at(1).get<int>();
      shape.z_dim = j.at("z_dim").get<int>();
      auto nn = std::make_unique<NeuralPreferenceModel>(
          nu, ni, shape, j.at("item_features").get<std::vector<double>>(),
          j.at("feature_dim").get<int>());
      nn->set_epistemic_training(j.at("epistemic_training").get<bool>());
      model = std::move(nn);
    } else {
      throw DataError("unknown model kind '" + kind + "'");
    }
    model->set_parameters(j.at("params").get<std::vector<double>>());
    const auto seed = j.at("seed").get<std::uint64_t>();
    if (auto* mf = dynamic_cast<MatrixFactorizationModel*>(model.get())) {
      mf->set_seed(seed);
    } else if (auto* nn = dynamic_cast<NeuralPreferenceModel*>(model.get())) {
      nn->set_seed(seed);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed model checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("inconsistent model checkpoint: ") + e.what());
  }
}

void save_model(const ScoreModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write checkpoint " + path);
  out << serialize_model(model) << '\n';
}

std::unique_ptr<ScoreModel> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read checkpoint " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str());
}

}  // namespace prefrec
