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

#ifndef PREFREC_PLACKETT_H_
#define PREFREC_PLACKETT_H_

// Plackett-Luce ranking model over a single user's item weights.

#include <span>
#include <vector>

#include "prefrec/core.h"
#include "prefrec/rng.h"

namespace prefrec {

// Positive PL weights theta_i. Built from log-scores (theta = exp(s)) so
// positivity holds by construction.
class ScoreVector {
 public:
  static ScoreVector from_log_scores(std::span<const double> log_scores);
  // Accepts raw weights; every entry must be finite and > 0.
  static ScoreVector from_weights(std::vector<double> theta);

  int size() const { return static_cast<int>(theta_.size()); }
  double operator[](int i) const { return theta_[static_cast<size_t>(i)]; }
  const std::vector<double>& weights() const { return theta_; }

 private:
  explicit ScoreVector(std::vector<double> theta) : theta_(std::move(theta)) {}
  std::vector<double> theta_;
};

struct SmoothedScoreVector {
  std::vector<double> probs;
  double alpha = 0.0;
};

// Probability of the full permutation `ranking` (best first) under `scores`.
double ranking_probability(const ScoreVector& scores,
                           std::span<const ItemId> ranking);

// P(i beats j) = sigmoid(s_i - s_j), stable for any finite difference.
double pairwise_probability(double s_i, double s_j);

// Stable logistic function and log-sigmoid.
double sigmoid(double x);
double log_sigmoid(double x);

// Draws the first k entries of a ranking sequentially without replacement,
// each step proportional to the remaining weights.
PartialRanking sample_topk(const ScoreVector& scores, int k, Rng& rng);

// probs_i = (theta_i + alpha) / sum_j (theta_j + alpha). Accepts
// non-negative weights so that zero mass items can be smoothed.
SmoothedScoreVector laplace_smooth(std::span<const double> theta, double alpha);
SmoothedScoreVector laplace_smooth(const ScoreVector& theta, double alpha);

inline constexpr double kDefaultSmoothingAlpha = 0.1;

}  // namespace prefrec

#endif  // PREFREC_PLACKETT_H_
