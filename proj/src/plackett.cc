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

#include "prefrec/plackett.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace prefrec {

ScoreVector ScoreVector::from_log_scores(std::span<const double> log_scores) {
  if (log_scores.empty()) throw std::invalid_argument("empty score vector");
  double top = -std::numeric_limits<double>::infinity();
  for (double s : log_scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("non-finite log-score");
    top = std::max(top, s);
  }
  // PL is invariant to a common scale on theta; shifting by the max keeps
  // exp() in range for trained models.
  std::vector<double> theta(log_scores.size());
  for (size_t i = 0; i < theta.size(); ++i) {
    theta[i] = std::exp(log_scores[i] - top);
    if (theta[i] <= 0.0) theta[i] = std::numeric_limits<double>::min();
  }
  return ScoreVector(std::move(theta));
}

ScoreVector ScoreVector::from_weights(std::vector<double> theta) {
  if (theta.empty()) throw std::invalid_argument("empty score vector");
  for (double t : theta) {
    if (!std::isfinite(t) || t <= 0.0) {
      throw std::invalid_argument("PL weights must be finite and positive");
    }
  }
  return ScoreVector(std::move(theta));
}

double ranking_probability(const ScoreVector& scores,
                           std::span<const ItemId> ranking) {
  const int n = scores.size();
  if (static_cast<int>(ranking.size()) != n) {
    throw std::invalid_argument("ranking must be a permutation of all items");
  }
  std::vector<char> seen(static_cast<size_t>(n), 0);
  for (ItemId item : ranking) {
    if (item < 0 || item >= n || seen[static_cast<size_t>(item)]) {
      throw std::invalid_argument("ranking is not a permutation");
    }
    seen[static_cast<size_t>(item)] = 1;
  }
  // Suffix sums, accumulated from the back.
  double prob = 1.0;
  double tail = 0.0;
  for (int k = n - 1; k >= 0; --k) {
    const double w = scores[ranking[static_cast<size_t>(k)]];
    tail += w;
    prob *= w / tail;
  }
  return prob;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

double pairwise_probability(double s_i, double s_j) {
  if (!std::isfinite(s_i) || !std::isfinite(s_j)) {
    throw std::invalid_argument("pairwise_probability: non-finite score");
  }
  return sigmoid(s_i - s_j);
}

PartialRanking sample_topk(const ScoreVector& scores, int k, Rng& rng) {
  const int n = scores.size();
  if (k < 1 || k > n) {
    throw std::invalid_argument("sample_topk: need 1 <= k <= n, got k=" +
                                std::to_string(k) +
                                " n=" + std::to_string(n));
  }
  // Remaining ids and their weights, both kept in id order so draws depend
  // only on the seed.
  std::vector<ItemId> remaining(static_cast<size_t>(n));
  std::iota(remaining.begin(), remaining.end(), 0);
  std::vector<double> weight(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) weight[static_cast<size_t>(i)] = scores[i];
  std::vector<ItemId> out;
  out.reserve(static_cast<size_t>(k));
  for (int step = 0; step < k; ++step) {
    double total = 0.0;
    for (double w : weight) total += w;
    const double target = rng.uniform() * total;
    double acc = 0.0;
    size_t pick = weight.size() - 1;
    for (size_t r = 0; r < weight.size(); ++r) {
      acc += weight[r];
      if (target < acc) {
        pick = r;
        break;
      }
    }
    out.push_back(remaining[pick]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(pick));
    weight.erase(weight.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return PartialRanking(std::move(out), n);
}

SmoothedScoreVector laplace_smooth(std::span<const double> theta,
                                   double alpha) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
  if (theta.empty()) throw std::invalid_argument("empty weight vector");
  double denom = 0.0;
  for (double t : theta) {
    if (!std::isfinite(t) || t < 0.0) {
      throw std::invalid_argument("weights must be finite and non-negative");
    }
    denom += t + alpha;
  }
  if (denom <= 0.0) {
    throw std::invalid_argument("alpha = 0 requires positive total weight");
  }
  SmoothedScoreVector out;
  out.alpha = alpha;
  out.probs.reserve(theta.size());
  for (double t : theta) out.probs.push_back((t + alpha) / denom);
  return out;
}

SmoothedScoreVector laplace_smooth(const ScoreVector& theta, double alpha) {
  return laplace_smooth(std::span<const double>(theta.weights()), alpha);
}

}  // namespace prefrec
