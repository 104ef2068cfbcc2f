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

#ifndef PREFREC_MODELS_H_
#define PREFREC_MODELS_H_

// Scoring models s_ui = f(u, i; params), the pairwise log-likelihood and
// SGD training.

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "prefrec/core.h"
#include "prefrec/rng.h"

namespace prefrec {

struct TrainConfig {
  double learning_rate = 0.05;
  int epochs = 50;
  double l2_lambda = 0.01;
  int batch_size = 1;
  std::uint64_t seed = 0;
  // Standard deviation for parameter init; <= 0 selects 1/sqrt(dim).
  double init_std = 0.0;

  void validate() const;
};

// Thrown when training produces a non-finite objective.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ScoreModel {
 public:
  virtual ~ScoreModel() = default;

  virtual std::string kind() const = 0;
  virtual int num_users() const = 0;
  virtual int num_items() const = 0;

  // Log-score s_ui. Deterministic given the parameters.
  virtual double score(UserId u, ItemId i) const = 0;

  virtual std::unique_ptr<ScoreModel> clone() const = 0;

  // Flat parameter snapshot and restore; layout is model specific but stable.
  virtual std::size_t num_parameters() const = 0;
  virtual std::vector<double> parameters() const = 0;
  virtual void set_parameters(std::span<const double> params) = 0;

  // grad += scale * d score(u, i) / d params, in the parameters() layout.
  virtual void accumulate_score_gradient(UserId u, ItemId i, double scale,
                                         std::span<double> grad) const = 0;

  // One SGD ascent step on ln sigmoid(s_ui - s_uj) for `t`, with L2 decay on
  // the parameters the step touches. Returns the log-likelihood term before
  // the update. `rng` feeds stochastic layers (epistemic noise); models
  // without them ignore it.
  virtual double ascend_pair(const ComparisonTriplet& t, double lr, double l2,
                             Rng& rng) = 0;

  // Scores of user `u` for every item, in id order.
  std::vector<double> user_scores(UserId u) const;
  // Scores of user `u` for `items`, in the given order.
  std::vector<double> user_scores(UserId u, std::span<const ItemId> items) const;

  void check_ids(UserId u, ItemId i) const;
};

// s_ui = dot(U_u, V_i). Parameters are laid out as [U row-major | V row-major].
class MatrixFactorizationModel final : public ScoreModel {
 public:
  // Zero-initialized factors.
  MatrixFactorizationModel(int n_users, int n_items, int dim);
  // Factors ~ Normal(0, init_std); init_std <= 0 selects 1/sqrt(dim).
  MatrixFactorizationModel(int n_users, int n_items, int dim, double init_std,
                           std::uint64_t seed);

  std::string kind() const override { return "mf"; }
  int num_users() const override { return n_users_; }
  int num_items() const override { return n_items_; }
  int dim() const { return dim_; }
  // Init seed, kept as checkpoint provenance.
  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  double score(UserId u, ItemId i) const override;
  std::unique_ptr<ScoreModel> clone() const override;
  std::size_t num_parameters() const override { return params_.size(); }
  std::vector<double> parameters() const override { return params_; }
  void set_parameters(std::span<const double> params) override;
  void accumulate_score_gradient(UserId u, ItemId i, double scale,
                                 std::span<double> grad) const override;
  double ascend_pair(const ComparisonTriplet& t, double lr, double l2,
                     Rng& rng) override;

  std::span<double> user_factors(UserId u);
  std::span<const double> user_factors(UserId u) const;
  std::span<double> item_factors(ItemId i);
  std::span<const double> item_factors(ItemId i) const;

 private:
  std::size_t user_offset(UserId u) const {
    return static_cast<std::size_t>(u) * static_cast<std::size_t>(dim_);
  }
  std::size_t item_offset(ItemId i) const {
    return (static_cast<std::size_t>(n_users_) + static_cast<std::size_t>(i)) *
           static_cast<std::size_t>(dim_);
  }

  int n_users_;
  int n_items_;
  int dim_;
  std::uint64_t seed_ = 0;
  std::vector<double> params_;
};

struct NeuralShape {
  int embedding_dim = 16;
  int hidden1 = 32;
  int hidden2 = 16;
  // Dimension of the epistemic noise vector z. 0 disables it.
  int z_dim = 8;
};

// Two-path preference network. The preference (user) embedding p_u is
// perturbed by a learned projection of z; the candidate embedding q_i adds a
// learned projection of the item's feature vector when features are given.
//   GMF path: p ⊙ q
//   MLP path: relu(W2 relu(W1 [p; q] + b1) + b2)
//   score:    w_out · [GMF; MLP] + b_out
class NeuralPreferenceModel final : public ScoreModel {
 public:
  // All parameters zero.
  NeuralPreferenceModel(int n_users, int n_items, NeuralShape shape,
                        std::vector<double> item_features = {},
                        int feature_dim = 0);
  // Parameters ~ Normal(0, init_std); init_std <= 0 selects per-layer
  // 1/sqrt(fan_in).
  NeuralPreferenceModel(int n_users, int n_items, NeuralShape shape,
                        double init_std, std::uint64_t seed,
                        std::vector<double> item_features = {},
                        int feature_dim = 0);

  std::string kind() const override { return "neural"; }
  int num_users() const override { return n_users_; }
  int num_items() const override { return n_items_; }
  const NeuralShape& shape() const { return shape_; }
  int feature_dim() const { return feature_dim_; }
  const std::vector<double>& item_features() const { return features_; }
  std::uint64_t seed() const { return seed_; }
  void set_seed(std::uint64_t seed) { seed_ = seed; }

  // Mean prediction (z = 0).
  double score(UserId u, ItemId i) const override;
  // Forward pass with an explicit z; an empty span means z = 0.
  double forward(UserId u, ItemId i, std::span<const double> z) const;

  std::unique_ptr<ScoreModel> clone() const override;
  std::size_t num_parameters() const override { return params_.size(); }
  std::vector<double> parameters() const override { return params_; }
  void set_parameters(std::span<const double> params) override;
  void accumulate_score_gradient(UserId u, ItemId i, double scale,
                                 std::span<double> grad) const override;
  double ascend_pair(const ComparisonTriplet& t, double lr, double l2,
                     Rng& rng) override;

  // Whether training draws z ~ N(0, I) per step. On by default when z_dim > 0.
  void set_epistemic_training(bool on) { epistemic_training_ = on; }
  bool epistemic_training() const { return epistemic_training_; }

 private:
  struct Layout {
    std::size_t user_emb, item_emb, dense_begin, wz, wf, w1, b1, w2, b2, wout,
        bout, total;
  };
  struct Activations;

  void build_layout();
  void init_random(double init_std, Rng& rng);
  void forward_pass(UserId u, ItemId i, std::span<const double> z,
                    Activations& act) const;
  void backward_pass(UserId u, ItemId i, std::span<const double> z,
                     const Activations& act, double upstream,
                     std::span<double> grad) const;

  int n_users_;
  int n_items_;
  NeuralShape shape_;
  int feature_dim_;
  std::vector<double> features_;
  std::uint64_t seed_ = 0;
  bool epistemic_training_ = true;
  Layout layout_{};
  std::vector<double> params_;
  std::vector<double> scratch_;
};

// Sum over triplets of ln sigmoid(s_ui - s_uj). Empty data gives 0.
double pairwise_loss(const ScoreModel& model,
                     std::span<const ComparisonTriplet> data);

struct PairGradients {
  double g_winner;  // d loss / d s_ui = 1 - sigmoid(s_ui - s_uj)
  double g_loser;   // d loss / d s_uj = sigmoid(s_ui - s_uj) - 1
};
PairGradients loss_gradients(double s_ui, double s_uj);

// Analytic gradient of pairwise_loss with respect to every parameter.
std::vector<double> pairwise_loss_gradient(
    const ScoreModel& model, std::span<const ComparisonTriplet> data);

struct TrainStats {
  // Mean log-likelihood per triplet, accumulated during each epoch.
  std::vector<double> epoch_loglik;
};

// SGD ascent on the pairwise log-likelihood. Mutates `model` in place.
TrainStats train_pairwise(ScoreModel& model,
                          std::span<const ComparisonTriplet> data,
                          const TrainConfig& cfg);

struct RatingTrainStats {
  std::vector<double> epoch_mse;  // train MSE after each epoch
  double initial_mse = 0.0;
};

// SGD on sum (r - U_u.V_i)^2 + lambda (|U|^2 + |V|^2).
RatingTrainStats train_rating_mse(MatrixFactorizationModel& model,
                                  std::span<const RatingRecord> ratings,
                                  const TrainConfig& cfg);

double rating_mse(const MatrixFactorizationModel& model,
                  std::span<const RatingRecord> ratings);

// Copy of `model` fine-tuned for cfg.epochs on {new_triplet} + replay. The
// input model is not modified.
std::unique_ptr<ScoreModel> clone_and_finetune(
    const ScoreModel& model, const ComparisonTriplet& new_triplet,
    std::span<const ComparisonTriplet> replay, const TrainConfig& cfg);

// Up to `count` triplets drawn without replacement from `data`.
std::vector<ComparisonTriplet> sample_replay(
    std::span<const ComparisonTriplet> data, int count, Rng& rng);

// Versioned JSON checkpoint: {"format":"prefrec-model","version":1,
// "kind":..., dimensions, "seed":..., "params":[...]}.
std::string serialize_model(const ScoreModel& model);
std::unique_ptr<ScoreModel> deserialize_model(std::string_view text);
void save_model(const ScoreModel& model, const std::string& path);
std::unique_ptr<ScoreModel> load_model(const std::string& path);

}  // namespace prefrec

#endif  // PREFREC_MODELS_H_
