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

#include <cmath>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "doctest.h"
#include "oracles.h"
#include "prefrec/metrics.h"
#include "prefrec/rng.h"

namespace prefrec {

TEST_SUITE("metrics") {
  TEST_CASE("kendall tau examples") {
    const std::vector<ItemId> abc{0, 1, 2, 3};
    const std::vector<ItemId> rev{3, 2, 1, 0};
    CHECK(kendall_tau(RankedList::from_order(abc), RankedList::from_order(abc)) == 1.0);
    CHECK(kendall_tau(RankedList::from_order(abc), RankedList::from_order(rev)) == -1.0);
    const std::vector<ItemId> a{0, 1, 2}, b{1, 0, 2};
    CHECK(kendall_tau(RankedList::from_order(a), RankedList::from_order(b)) == doctest::Approx(1.0 / 3.0));
    const std::vector<ItemId> other{0, 1, 5};
    CHECK_THROWS(kendall_tau(RankedList::from_order(a), RankedList::from_order(other)));
  }

  TEST_CASE("kendall tau matches brute force with ties") {
    Rng rng(13);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 1 + static_cast<int>(rng.below(40));
      const int levels = 1 + static_cast<int>(rng.below(8));
      std::vector<ItemId> items(static_cast<std::size_t>(n));
      std::vector<double> ka(items.size()), kb(items.size());
      for (int i = 0; i < n; ++i) {
        items[static_cast<std::size_t>(i)] = i;
        ka[static_cast<std::size_t>(i)] = static_cast<double>(rng.below(static_cast<std::uint64_t>(levels)));
        kb[static_cast<std::size_t>(i)] = static_cast<double>(rng.below(static_cast<std::uint64_t>(levels + 3)));
      }
      const auto la = RankedList::from_scores(items, ka);
      const auto lb = RankedList::from_scores(items, kb);
      const auto c = kendall_pair_counts(la, lb);
      const auto o = oracle::brute_pair_counts(ka, kb);
      CHECK(c.concordant == o.p);
      CHECK(c.discordant == o.q);
      CHECK(c.ties_a == o.t);
      CHECK(c.ties_b == o.u);
      CHECK(kendall_tau(la, lb) == oracle::brute_tau_b(ka, kb));
      CHECK(kendall_tau(la, lb) == doctest::Approx(kendall_tau(lb, la)));
    }
  }

  TEST_CASE("precision at k") {
    std::vector<ItemId> rec(12);
    for (int k = 0; k < 12; ++k) rec[static_cast<std::size_t>(k)] = k;
    std::unordered_set<ItemId> all(rec.begin(), rec.begin() + 10);
    CHECK(precision_at_k(rec, all, 10) == 1.0);
    CHECK(precision_at_k(rec, {100, 101}, 10) == 0.0);
    CHECK(precision_at_k(rec, {0, 1, 2, 3, 4, 5, 6, 40}, 10) == doctest::Approx(0.7));
    CHECK_THROWS(precision_at_k(rec, all, 13));
    auto shuffled = rec;
    std::swap(shuffled[10], shuffled[11]);
    CHECK(precision_at_k(shuffled, all, 10) == precision_at_k(rec, all, 10));
  }

  TEST_CASE("ndcg at k") {
    const std::vector<ItemId> ideal{3, 1, 2, 0};
    const std::unordered_map<ItemId, double> graded{{3, 3.0}, {1, 2.0}, {2, 1.0}, {0, 0.0}};
    CHECK(ndcg_at_k(ideal, graded, 3) == doctest::Approx(1.0));
    CHECK(ndcg_at_k(std::vector<ItemId>{2, 1, 3, 0}, graded, 3) < 1.0);
    const std::unordered_map<ItemId, double> one{{7, 1.0}};
    CHECK(ndcg_at_k(std::vector<ItemId>{5, 7}, one, 2) == doctest::Approx(1.0 / std::log2(3.0)));
    CHECK(ndcg_at_k(std::vector<ItemId>{5, 7}, one, 2) == doctest::Approx(0.6309).epsilon(1e-4));
    CHECK(ndcg_at_k(std::vector<ItemId>{5, 6, 7}, one, 2) == 0.0);
    CHECK_THROWS(ndcg_at_k(std::vector<ItemId>{5, 7}, {{7, 0.0}}, 2));
  }

  TEST_CASE("max rank percentile") {
    std::vector<ItemId> order(11);
    for (int k = 0; k < 11; ++k) order[static_cast<std::size_t>(k)] = k;
    const GroundTruthRanking truth(order);
    CHECK(max_rank_percentile(std::vector<ItemId>{5, 0}, truth) == 1.0);
    CHECK(max_rank_percentile(std::vector<ItemId>{10}, truth) == 0.0);
    CHECK(max_rank_percentile(std::vector<ItemId>{2, 7}, truth) == doctest::Approx(0.8));
    CHECK_THROWS_AS(max_rank_percentile(std::vector<ItemId>{20}, truth), DataError);
  }
}

}  // namespace prefrec
