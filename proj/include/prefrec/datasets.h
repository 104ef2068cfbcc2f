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

#ifndef PREFREC_DATASETS_H_
#define PREFREC_DATASETS_H_

// Data ingestion, comparison extraction, semi-synthetic ground truth and
// seeded splits.

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "prefrec/core.h"
#include "prefrec/models.h"
#include "prefrec/rng.h"
#include "prefrec/sampler.h"

namespace prefrec {

// Bijection between external string labels and dense 0-based ids.
class DenseIdMap {
 public:
  // Dense id of `label`, assigning the next id on first sight.
  int intern(const std::string& label);
  int dense(const std::string& label) const;  // throws DataError if unknown
  const std::string& label(int dense_id) const;
  int size() const { return static_cast<int>(labels_.size()); }
  const std::vector<std::string>& labels() const { return labels_; }

  // CSV with header "dense_id,original_id".
  void save_csv(const std::string& path) const;
  static DenseIdMap load_csv(const std::string& path);

 private:
  std::unordered_map<std::string, int> to_dense_;
  std::vector<std::string> labels_;
};

struct RatingsDataset {
  std::vector<RatingRecord> ratings;
  DenseIdMap users;
  DenseIdMap items;

  int n_users() const { return users.size(); }
  int n_items() const { return items.size(); }
};

// MovieLens ratings: `user\titem\trating\ttimestamp` (100k u.data) or
// `user::item::rating::timestamp` (1M ratings.dat), detected per line.
RatingsDataset load_movielens(const std::string& path);
RatingsDataset parse_movielens(const std::string& text);

// For each user, per_user distinct co-rated pairs with different ratings,
// uniformly at random; winner has the higher rating.
std::vector<ComparisonTriplet> ratings_to_comparisons(
    std::span<const RatingRecord> ratings, int per_user, Rng& rng);

inline constexpr const char* kAdmissionsColumns[] = {
    "Serial No.", "GRE Score", "TOEFL Score", "University Rating", "SOP",
    "LOR",        "CGPA",      "Research",    "Chance of Admit"};
inline constexpr int kAdmissionsFeatureCount = 7;

struct AdmissionsRecord {
  ItemId candidate = 0;
  std::int64_t serial = 0;
  std::vector<double> features;  // min-max normalized predictors
  double chance_of_admission = 0.0;
};

struct AdmissionsDataset {
  std::vector<AdmissionsRecord> records;
  GroundTruthRanking truth;  // by chance descending, serial ascending

  int size() const { return static_cast<int>(records.size()); }
  CandidateFeatures features() const;
};

AdmissionsDataset load_admissions(const std::string& path);
AdmissionsDataset parse_admissions(const std::string& text);

// CSV text with the admissions schema: n synthetic applicants whose scores
// share a latent ability factor.
std::string generate_admissions_csv(int n, std::uint64_t seed);

// Dense 1-5 star ratings from a low-rank model plus noise, each (u, i)
// observed with probability `density`.
RatingsDataset generate_synthetic_ratings(int n_users, int n_items, int rank,
                                          double density, std::uint64_t seed);

struct ShadowTruth {
  MatrixFactorizationModel shadow;
  // shadow_ratings[u * n_items + i] = dot(U_u, V_i)
  std::vector<double> shadow_ratings;
  std::vector<GroundTruthRanking> truth;  // per user, over all items
  int n_users = 0;
  int n_items = 0;

  double shadow_rating(UserId u, ItemId i) const {
    return shadow_ratings[static_cast<std::size_t>(u) * static_cast<std::size_t>(n_items) +
                          static_cast<std::size_t>(i)];
  }
};

// Per-user PL weights from shadow ratings: exp of the per-user standardized
// shadow rating.
std::vector<double> shadow_weights(std::span<const double> user_shadow);

// Fits rating MF on every rating, then samples one full PL ranking per user
// from the Laplace-smoothed shadow weights.
ShadowTruth build_shadow_truth(std::span<const RatingRecord> ratings,
                               int n_users, int n_items, int dim, double alpha,
                               const TrainConfig& fit, Rng& rng);

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;

  void validate() const;
};

// Seeded uniform partition of [0, n) into (train, test) index sets.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, const SplitSpec& spec);

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split(std::span<const T> data,
                                                const SplitSpec& spec) {
  auto [train_idx, test_idx] = split_indices(data.size(), spec);
  std::pair<std::vector<T>, std::vector<T>> out;
  out.first.reserve(train_idx.size());
  out.second.reserve(test_idx.size());
  for (std::size_t k : train_idx) out.first.push_back(data[k]);
  for (std::size_t k : test_idx) out.second.push_back(data[k]);
  return out;
}

// Item-level holdout: every user gets its own test items, which must never
// enter that user's training data or query pool.
struct ItemHoldout {
  std::vector<std::vector<ItemId>> train_items;  // per user, ascending
  std::vector<std::vector<ItemId>> test_items;   // per user, ascending
};

ItemHoldout holdout_items(int n_users, int n_items, int test_per_user,
                          Rng& rng);

}  // namespace prefrec

#endif  // PREFREC_DATASETS_H_
