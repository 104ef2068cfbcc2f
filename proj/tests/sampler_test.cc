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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "prefrec/sampler.h"

namespace prefrec {
namespace {

// One user with a rank-1 model: U_0 = (1, 0), V_i = (s_i, 0).
MatrixFactorizationModel fixed_scores(const std::vector<double>& s) {
  MatrixFactorizationModel mf(1, static_cast<int>(s.size()), 2);
  std::vector<double> p(2 + 2 * s.size(), 0.0);
  p[0] = 1.0;
  for (std::size_t i = 0; i < s.size(); ++i) p[2 + 2 * i] = s[i];
  mf.set_parameters(p);
  return mf;
}

CandidateFeatures two_clouds(Rng& rng) {
  CandidateFeatures f;
  f.n_items = 20;
  f.dim = 2;
  for (int i = 0; i < 20; ++i) {
    const double cx = i < 10 ? 0.0 : 10.0;
    f.values.push_back(cx + rng.normal(0, 0.1));
    f.values.push_back(rng.normal(0, 0.1));
  }
  return f;
}

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("query pairs are canonical") {
    const QueryPair p(0, 5, 2);
    CHECK(p.i == 2);
    CHECK(p.j == 5);
    CHECK(p == QueryPair(0, 2, 5));
    CHECK(p.key() != QueryPair(1, 2, 5).key());
    CHECK_THROWS(QueryPair(0, 3, 3));
  }

  TEST_CASE("simulate_oracle follows true positions") {
    const GroundTruthRanking truth({4, 1, 0, 3, 2, 6, 5});  // 1 at position 2, 5 at 7
    const auto t = simulate_oracle(truth, QueryPair(0, 1, 5));
    CHECK(t.winner == 1);
    CHECK(t.loser == 5);
    const GroundTruthRanking flipped({4, 5, 0, 3, 2, 6, 1});
    CHECK(simulate_oracle(flipped, QueryPair(0, 1, 5)).winner == 5);
    CHECK_THROWS_AS(simulate_oracle(truth, QueryPair(0, 1, 9)), DataError);
    for (ItemId a = 0; a < 7; ++a) {
      for (ItemId b = a + 1; b < 7; ++b) {
        const auto w = simulate_oracle(truth, QueryPair(0, a, b));
        CHECK(((w.winner == a && w.loser == b) != (w.winner == b && w.loser == a)));
      }
    }
  }

  TEST_CASE("entropy_query picks the least certain pair") {
    // P(1 beats 2) = 0.9, P(3 beats 4) = 0.6, P(5 beats 6) = 0.99.
    const auto mf = fixed_scores({0, std::log(9.0), 0, std::log(1.5), 0, std::log(99.0), 0});
    std::vector<QueryPair> pool{{0, 1, 2}, {0, 3, 4}, {0, 5, 6}};
    CHECK(entropy_query(mf, 0, pool) == QueryPair(0, 3, 4));
    std::reverse(pool.begin(), pool.end());
    CHECK(entropy_query(mf, 0, pool) == QueryPair(0, 3, 4));
    pool.push_back({0, 0, 2});  // p = 0.5 exactly
    CHECK(entropy_query(mf, 0, pool) == QueryPair(0, 0, 2));
    const auto flat = fixed_scores({0, 0, 0, 0});
    const std::vector<QueryPair> ties{{0, 2, 3}, {0, 1, 3}, {0, 0, 1}};
    CHECK(entropy_query(flat, 0, ties) == QueryPair(0, 0, 1));
    CHECK_THROWS(entropy_query(flat, 0, std::vector<QueryPair>{}));
  }

  TEST_CASE("random_query frequencies are uniform") {
    std::vector<QueryPair> pool;
    for (ItemId k = 0; k < 10; ++k) pool.emplace_back(0, k, k + 10);
    Rng rng(5);
    std::map<QueryPair, int> counts;
    for (int r = 0; r < 10000; ++r) ++counts[random_query(pool, rng)];
    CHECK(counts.size() == 10);
    for (const auto& [pair, c] : counts) CHECK(std::abs(c / 10000.0 - 0.1) <= 0.02);
    Rng a(9), b(9);
    CHECK(random_query(pool, a) == random_query(pool, b));
    CHECK(random_query(std::vector<QueryPair>{{0, 1, 2}}, a) == QueryPair(0, 1, 2));
    CHECK_THROWS(random_query(std::vector<QueryPair>{}, a));
  }

  TEST_CASE("cluster_queries crosses well separated clouds") {
    Rng data_rng(1);
    const auto f = two_clouds(data_rng);
    Rng rng(3);
    const auto one = cluster_queries(f, 1, 2, rng);
    REQUIRE(one.size() == 1);
    CHECK((one[0].i < 10) != (one[0].j < 10));
    CHECK(cluster_queries(f, 0, 2, rng).empty());
    Rng a(4), b(4);
    const auto qa = cluster_queries(f, 40, 3, a);
    CHECK(qa == cluster_queries(f, 40, 3, b));
    std::set<QueryPair> uniq(qa.begin(), qa.end());
    CHECK(uniq.size() == qa.size());
    CHECK(qa.size() == 40);
  }

  TEST_CASE("cluster_queries falls back on degenerate features") {
    CandidateFeatures f;
    f.n_items = 6;
    f.dim = 2;
    f.values.assign(12, 0.5);
    Rng rng(2);
    const auto q = cluster_queries(f, 5, 2, rng);
    CHECK(q.size() == 5);
    CHECK(std::set<QueryPair>(q.begin(), q.end()).size() == 5);
  }

  TEST_CASE("kmeans separates clouds") {
    Rng data_rng(6);
    const auto f = two_clouds(data_rng);
    Rng rng(1);
    const auto km = kmeans(f, 2, rng);
    for (int i = 1; i < 10; ++i) CHECK(km.assignment[static_cast<std::size_t>(i)] == km.assignment[0]);
    for (int i = 11; i < 20; ++i) CHECK(km.assignment[static_cast<std::size_t>(i)] == km.assignment[10]);
    CHECK(km.assignment[0] != km.assignment[10]);
  }

  TEST_CASE("draw_pool returns distinct unqueried pairs") {
    std::vector<ItemId> items{1, 3, 5, 7, 9, 11};
    PairRegistry queried;
    queried.insert(QueryPair(2, 1, 3));
    Rng rng(4);
    const auto pool = draw_pool(2, items, queried, 10, rng);
    CHECK(pool.size() == 10);
    std::set<QueryPair> uniq(pool.begin(), pool.end());
    CHECK(uniq.size() == pool.size());
    CHECK_FALSE(uniq.contains(QueryPair(2, 1, 3)));
    for (const auto& p : pool) {
      CHECK(p.user == 2);
      CHECK(std::find(items.begin(), items.end(), p.i) != items.end());
    }
    CHECK(draw_pool(2, items, queried, 100, rng).size() == 14);
  }

  TEST_CASE("utility gain: single pair and no-op retraining") {
    const auto mf = fixed_scores({2.0, 1.0, 0.5, 0.0});
    AdmissionsUtility util(2);
    GainContext ctx{.model = &mf, .user = 0, .candidates = {}, .utility = &util, .history = {}};
    SamplerConfig cfg;
    cfg.menu_size = 2;
    cfg.mc.samples = 100;
    const std::vector<QueryPair> single{{0, 1, 3}};
    CHECK(utility_gain_query(ctx, single, cfg) == QueryPair(0, 1, 3));
    cfg.finetune.epochs = 0;
    const std::vector<QueryPair> pool{{0, 2, 3}, {0, 0, 3}, {0, 1, 2}};
    for (const auto& e : evaluate_utility_gain(ctx, pool, cfg)) {
      CHECK(e.gain_i_wins == 0.0);
      CHECK(e.gain_j_wins == 0.0);
    }
    CHECK(utility_gain_query(ctx, pool, cfg) == QueryPair(0, 0, 3));
    CHECK_THROWS(utility_gain_query(ctx, std::vector<QueryPair>{}, cfg));
  }

  TEST_CASE("utility gain prefers an open question at the menu boundary") {
    // Item 0 is settled at the top; items 1 and 2 tie for the second slot.
    const auto mf = fixed_scores({3.0, 1.0, 1.0, -2.0, -2.5, -3.0});
    AdmissionsUtility util(2);
    GainContext ctx{.model = &mf, .user = 0, .candidates = {}, .utility = &util, .history = {}};
    const std::vector<QueryPair> pool{{0, 0, 5}, {0, 1, 2}};
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      SamplerConfig cfg;
      cfg.menu_size = 2;
      cfg.mc.samples = 300;
      cfg.seed = seed;
      const auto evals = evaluate_utility_gain(ctx, pool, cfg);
      for (const auto& e : evals) {
        CHECK(e.p_i_wins + (1.0 - e.p_i_wins) == doctest::Approx(1.0));
      }
      hits += utility_gain_query(ctx, pool, cfg) == QueryPair(0, 1, 2) ? 1 : 0;
      std::vector<QueryPair> reversed(pool.rbegin(), pool.rend());
      CHECK(utility_gain_query(ctx, reversed, cfg) == utility_gain_query(ctx, pool, cfg));
    }
    CHECK(hits >= 18);
  }

  TEST_CASE("sampler config validation") {
    SamplerConfig cfg;
    cfg.pool_size = 0;
    CHECK_THROWS_AS(cfg.validate(), SpecError);
  }

  TEST_CASE("fine-tuned hypotheticals track full retraining on tiny instances") {
    // For every pair and outcome, the top item after the cheap clone-and-
    // finetune update is compared with the top item after retraining on the
    // whole history plus the new answer.
    int agree = 0, total = 0;
    for (std::uint64_t trial = 0; trial < 10; ++trial) {
      Rng rng(500 + trial);
      std::vector<ItemId> order{0, 1, 2, 3, 4};
      rng.shuffle(order.begin(), order.end());
      const GroundTruthRanking truth(order);
      std::vector<ComparisonTriplet> history;
      for (int k = 0; k < 4; ++k) {
        const auto a = static_cast<ItemId>(rng.below(5));
        const auto b = static_cast<ItemId>(rng.below(5));
        if (a != b) history.push_back(simulate_oracle(truth, QueryPair(0, a, b)));
      }
      MatrixFactorizationModel base(1, 5, 3, 0.0, trial);
      TrainConfig full;
      full.epochs = 300;
      full.seed = trial;
      train_pairwise(base, history, full);
      TrainConfig quick;
      quick.epochs = 5;
      quick.seed = trial + 1;
      auto top = [](const ScoreModel& m) {
        const auto s = m.user_scores(0);
        return std::max_element(s.begin(), s.end()) - s.begin();
      };
      for (ItemId i = 0; i < 5; ++i) {
        for (ItemId j = 0; j < 5; ++j) {
          if (i == j) continue;
          const ComparisonTriplet t(0, i, j);
          const auto tuned = clone_and_finetune(base, t, history, quick);
          auto retrained = base.clone();
          auto data = history;
          data.push_back(t);
          train_pairwise(*retrained, data, full);
          agree += top(*tuned) == top(*retrained) ? 1 : 0;
          ++total;
        }
      }
    }
    MESSAGE("top-item agreement " << agree << "/" << total);
    CHECK(agree >= total * 7 / 10);
  }
}

}  // namespace prefrec
