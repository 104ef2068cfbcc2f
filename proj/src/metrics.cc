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

#include "prefrec/metrics.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace prefrec {
namespace {

// Sum over groups of equal adjacent values of t(t-1)/2.
template <typename Eq>
long long tied_pairs(std::size_t n, Eq equal) {
  long long total = 0;
  std::size_t run = 1;
  for (std::size_t k = 1; k <= n; ++k) {
    if (k < n && equal(k - 1, k)) {
      ++run;
    } else {
      total += static_cast<long long>(run) * static_cast<long long>(run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

// Inversions (strictly decreasing pairs) of v, sorting it in the process.
long long count_inversions(std::vector<double>& v, std::vector<double>& buf,
                           std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  long long inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, out = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<long long>(mid - i);
      buf[out++] = v[j++];
    } else {
      buf[out++] = v[i++];
    }
  }
  while (i < mid) buf[out++] = v[i++];
  while (j < hi) buf[out++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo),
            buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

}  // namespace

RankedList RankedList::from_order(std::span<const ItemId> best_first) {
  RankedList out;
  out.items.assign(best_first.begin(), best_first.end());
  const double n = static_cast<double>(best_first.size());
  for (std::size_t p = 0; p < best_first.size(); ++p) out.keys.push_back(n - static_cast<double>(p));
  return out;
}

RankedList RankedList::from_scores(std::span<const ItemId> items,
                                   std::span<const double> keys) {
  if (items.size() != keys.size()) {
    throw std::invalid_argument("ranked list: items and keys differ in length");
  }
  return RankedList{{items.begin(), items.end()}, {keys.begin(), keys.end()}};
}

RankedList RankedList::from_truth(const GroundTruthRanking& truth) {
  return from_order(truth.order());
}

PairCounts kendall_pair_counts(const RankedList& a, const RankedList& b) {
  const std::size_t n = a.items.size();
  if (a.keys.size() != n || b.items.size() != b.keys.size()) {
    throw std::invalid_argument("ranked list: items and keys differ in length");
  }
  if (b.items.size() != n) throw std::invalid_argument("kendall_tau: item sets differ");
  std::unordered_map<ItemId, double> b_key;
  b_key.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!b_key.emplace(b.items[k], b.keys[k]).second) {
      throw std::invalid_argument("kendall_tau: duplicate item in list");
    }
  }
  std::vector<std::pair<double, double>> joint;
  joint.reserve(n);
  std::unordered_set<ItemId> seen;
  for (std::size_t k = 0; k < n; ++k) {
    auto it = b_key.find(a.items[k]);
    if (it == b_key.end()) throw std::invalid_argument("kendall_tau: item sets differ");
    if (!seen.insert(a.items[k]).second) {
      throw std::invalid_argument("kendall_tau: duplicate item in list");
    }
    joint.emplace_back(a.keys[k], it->second);
  }
  std::sort(joint.begin(), joint.end());
  const long long n0 = static_cast<long long>(n) * static_cast<long long>(n > 0 ? n - 1 : 0) / 2;
  const long long n1 = tied_pairs(n, [&](std::size_t x, std::size_t y) {
    return joint[x].first == joint[y].first;
  });
  const long long n3 = tied_pairs(n, [&](std::size_t x, std::size_t y) {
    return joint[x] == joint[y];
  });
  std::vector<double> bv(n);
  for (std::size_t k = 0; k < n; ++k) bv[k] = joint[k].second;
  std::vector<double> buf(n);
  const long long swaps = count_inversions(bv, buf, 0, n);
  // bv is now sorted, so b-ties are adjacent.
  const long long n2 = tied_pairs(n, [&](std::size_t x, std::size_t y) { return bv[x] == bv[y]; });

  PairCounts c;
  c.discordant = swaps;
  c.ties_a = n1 - n3;
  c.ties_b = n2 - n3;
  c.concordant = n0 - n1 - n2 + n3 - swaps;
  return c;
}

double kendall_tau(const RankedList& a, const RankedList& b) {
  const PairCounts c = kendall_pair_counts(a, b);
  const double pq = static_cast<double>(c.concordant + c.discordant);
  const double denom = std::sqrt((pq + static_cast<double>(c.ties_a)) *
                                 (pq + static_cast<double>(c.ties_b)));
  if (denom == 0.0) return 0.0;
  return static_cast<double>(c.concordant - c.discordant) / denom;
}

double precision_at_k(std::span<const ItemId> recommended,
                      const std::unordered_set<ItemId>& relevant, int k) {
  if (k < 1) throw std::invalid_argument("precision_at_k: k must be >= 1");
  if (static_cast<int>(recommended.size()) < k) {
    throw std::invalid_argument("precision_at_k: list shorter than k=" + std::to_string(k));
  }
  int hits = 0;
  for (int p = 0; p < k; ++p) hits += relevant.contains(recommended[static_cast<std::size_t>(p)]) ? 1 : 0;
  return static_cast<double>(hits) / k;
}

double ndcg_at_k(std::span<const ItemId> recommended,
                 const std::unordered_map<ItemId, double>& relevance, int k) {
  if (k < 1) throw std::invalid_argument("ndcg_at_k: k must be >= 1");
  std::vector<double> gains;
  gains.reserve(relevance.size());
  for (const auto& [item, gain] : relevance) {
    if (!(gain >= 0.0)) throw std::invalid_argument("ndcg_at_k: negative gain");
    gains.push_back(gain);
  }
  std::sort(gains.begin(), gains.end(), std::greater<>());
  double idcg = 0.0;
  for (int p = 0; p < k && p < static_cast<int>(gains.size()); ++p) {
    idcg += gains[static_cast<std::size_t>(p)] / std::log2(p + 2.0);
  }
  if (idcg <= 0.0) throw std::invalid_argument("ndcg_at_k: no positive gain");
  double dcg = 0.0;
  const int depth = std::min<int>(k, static_cast<int>(recommended.size()));
  for (int p = 0; p < depth; ++p) {
    auto it = relevance.find(recommended[static_cast<std::size_t>(p)]);
    if (it != relevance.end()) dcg += it->second / std::log2(p + 2.0);
  }
  return dcg / idcg;
}

double max_rank_percentile(std::span<const ItemId> menu,
                           const GroundTruthRanking& truth) {
  if (menu.empty()) throw std::invalid_argument("max_rank_percentile: empty menu");
  const int n = truth.size();
  int best = n;
  for (ItemId item : menu) best = std::min(best, truth.position_of(item));
  if (n <= 1) return 1.0;
  return static_cast<double>(n - best) / static_cast<double>(n - 1);
}

}  // namespace prefrec
