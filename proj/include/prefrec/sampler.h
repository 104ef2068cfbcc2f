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

#ifndef PREFREC_SAMPLER_H_
#define PREFREC_SAMPLER_H_

// Query selection: utility-gain active sampling and the entropy, random and
// K-Means cluster baselines, plus the ground-truth oracle used in simulation.

#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include "prefrec/core.h"
#include "prefrec/models.h"
#include "prefrec/rng.h"
#include "prefrec/utility.h"

namespace prefrec {

// Unordered item pair for one user, stored canonically with i < j.
struct QueryPair {
  UserId user = 0;
  ItemId i = 0;
  ItemId j = 0;

  QueryPair() = default;
  QueryPair(UserId u, ItemId a, ItemId b);

  std::uint64_t key() const;
  friend bool operator==(const QueryPair&, const QueryPair&) = default;
  friend auto operator<=>(const QueryPair&, const QueryPair&) = default;
};

// Pairs that have already been asked. Queried pairs never return to a pool.
class PairRegistry {
 public:
  bool contains(const QueryPair& pair) const {
    return keys_.contains(pair.key());
  }
  bool insert(const QueryPair& pair) { return keys_.insert(pair.key()).second; }
  std::size_t size() const { return keys_.size(); }

 private:
  std::unordered_set<std::uint64_t> keys_;
};

struct SamplerConfig {
  int pool_size = 100;
  McConfig mc;  // R and depth for menu optimization and gain estimates
  TrainConfig finetune{.learning_rate = 0.05, .epochs = 5, .l2_lambda = 0.01};
  int replay_size = 20;
  int menu_size = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

// Row-major n_items x dim feature matrix.
struct CandidateFeatures {
  int n_items = 0;
  int dim = 0;
  std::vector<double> values;

  std::span<const double> row(ItemId i) const {
    return {values.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
  void validate() const;
};

// Everything the utility-gain sampler needs besides the pool.
struct GainContext {
  const ScoreModel* model = nullptr;
  UserId user = 0;
  // Items a menu may contain. Empty means every item of the model.
  std::span<const ItemId> candidates;
  // Utility over a universe of candidates.size() items (menu ids index into
  // `candidates`).
  const UtilityFunction* utility = nullptr;
  // Training data the hypothetical fine-tunes replay from.
  std::span<const ComparisonTriplet> history;
};

struct PairEvaluation {
  QueryPair pair;
  double p_i_wins = 0.5;  // current model's P(i beats j)
  double gain_i_wins = 0.0;
  double gain_j_wins = 0.0;
  double score = 0.0;     // p * gain_i_wins + (1 - p) * gain_j_wins
  std::vector<ItemId> menu_if_i_wins;  // catalog ids
  std::vector<ItemId> menu_if_j_wins;
};

// Recommended menu (catalog ids) under the current model.
std::vector<ItemId> current_best_menu(const GainContext& ctx,
                                      const SamplerConfig& cfg);

// Expected utility gain of each pair, in canonical pair order.
std::vector<PairEvaluation> evaluate_utility_gain(const GainContext& ctx,
                                                  std::span<const QueryPair> pool,
                                                  const SamplerConfig& cfg);

QueryPair utility_gain_query(const GainContext& ctx,
                             std::span<const QueryPair> pool,
                             const SamplerConfig& cfg);

QueryPair entropy_query(const ScoreModel& model, UserId user,
                        std::span<const QueryPair> pool);

QueryPair random_query(std::span<const QueryPair> pool, Rng& rng);

struct KMeansResult {
  std::vector<int> assignment;     // cluster per item
  std::vector<double> centroids;   // n_clusters x dim
  int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding.
KMeansResult kmeans(const CandidateFeatures& features, int n_clusters, Rng& rng,
                    int max_iterations = 100);

// Non-adaptive query sequence: cycles over distinct cluster pairs, each time
// emitting the unqueried cross-cluster pair whose members sit nearest their
// centroids. Falls back to random pairs when features are degenerate.
std::vector<QueryPair> cluster_queries(const CandidateFeatures& features,
                                       int n_queries, int n_clusters, Rng& rng,
                                       UserId user = 0);

// Winner is the pair member with the better (smaller) true position.
ComparisonTriplet simulate_oracle(const GroundTruthRanking& truth,
                                  const QueryPair& pair);

// Up to pool_size distinct unqueried pairs over `items`, uniformly at random.
std::vector<QueryPair> draw_pool(UserId user, std::span<const ItemId> items,
                                 const PairRegistry& queried, int pool_size,
                                 Rng& rng);

}  // namespace prefrec

#endif  // PREFREC_SAMPLER_H_
