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

#ifndef PREFREC_METRICS_H_
#define PREFREC_METRICS_H_

#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "prefrec/core.h"

namespace prefrec {

// Items with sort keys; equal keys are ties. Higher key = more preferred.
struct RankedList {
  std::vector<ItemId> items;
  std::vector<double> keys;

  // Strict order, best first: keys n, n-1, ..., 1.
  static RankedList from_order(std::span<const ItemId> best_first);
  // Keys given directly (e.g. model scores); ties allowed.
  static RankedList from_scores(std::span<const ItemId> items,
                                std::span<const double> keys);
  static RankedList from_truth(const GroundTruthRanking& truth);
};

struct PairCounts {
  long long concordant = 0;  // P
  long long discordant = 0;  // Q
  long long ties_a = 0;      // T: tied only in a
  long long ties_b = 0;      // U: tied only in b
};

// Pair counts in O(n log n): sort by (a, b) and count inversions of b.
PairCounts kendall_pair_counts(const RankedList& a, const RankedList& b);

// Kendall tau-b. Returns 0 when either list is entirely tied.
double kendall_tau(const RankedList& a, const RankedList& b);

double precision_at_k(std::span<const ItemId> recommended,
                      const std::unordered_set<ItemId>& relevant, int k);

// DCG@k / IDCG@k with gain / log2(position + 1).
double ndcg_at_k(std::span<const ItemId> recommended,
                 const std::unordered_map<ItemId, double>& relevance, int k);

// (n - best_position) / (n - 1): 1 when the menu holds the user's top item.
double max_rank_percentile(std::span<const ItemId> menu,
                           const GroundTruthRanking& truth);

}  // namespace prefrec

#endif  // PREFREC_METRICS_H_
