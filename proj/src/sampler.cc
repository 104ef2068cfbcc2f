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

#include "prefrec/sampler.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "prefrec/plackett.h"

namespace prefrec {
namespace {

constexpr std::uint64_t kMenuStream = 11;
constexpr std::uint64_t kEvalStream = 12;
constexpr std::uint64_t kFinetuneStream = 13;
constexpr std::uint64_t kReplayStream = 14;

std::vector<ItemId> candidate_list(const GainContext& ctx) {
  if (!ctx.candidates.empty()) {
    return {ctx.candidates.begin(), ctx.candidates.end()};
  }
  std::vector<ItemId> all(static_cast<std::size_t>(ctx.model->num_items()));
  std::iota(all.begin(), all.end(), 0);
  return all;
}

std::vector<QueryPair> canonical_order(std::span<const QueryPair> pool) {
  std::vector<QueryPair> sorted(pool.begin(), pool.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted;
}

std::vector<ItemId> to_catalog(const Menu& menu,
                               const std::vector<ItemId>& candidates) {
  std::vector<ItemId> out;
  out.reserve(menu.items().size());
  for (ItemId local : menu.items()) {
    out.push_back(candidates[static_cast<std::size_t>(local)]);
  }
  return out;
}

McConfig with_seed(const McConfig& base, std::uint64_t seed) {
  McConfig cfg = base;
  cfg.seed = seed;
  return cfg;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return s;
}

}  // namespace

QueryPair::QueryPair(UserId u, ItemId a, ItemId b)
    : user(u), i(std::min(a, b)), j(std::max(a, b)) {
  if (a == b) throw std::invalid_argument("query pair needs two distinct items");
}

std::uint64_t QueryPair::key() const {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(user)) << 42) ^
         (static_cast<std::uint64_t>(static_cast<std::uint32_t>(i)) << 21) ^
         static_cast<std::uint64_t>(static_cast<std::uint32_t>(j));
}

void SamplerConfig::validate() const {
  if (pool_size < 1) throw SpecError("pool_size must be >= 1");
  if (menu_size < 1) throw SpecError("menu_size must be >= 1");
  if (replay_size < 0) throw SpecError("replay_size must be >= 0");
  mc.validate();
  finetune.validate();
}

void CandidateFeatures::validate() const {
  if (n_items < 0 || dim < 0 ||
      values.size() != static_cast<std::size_t>(n_items) *
                           static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("feature matrix shape mismatch");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature");
  }
}

// ---------------------------------------------------------------------------
// Utility-gain sampling

std::vector<ItemId> current_best_menu(const GainContext& ctx,
                                      const SamplerConfig& cfg) {
  const std::vector<ItemId> candidates = candidate_list(ctx);
  const ScoreVector theta = ScoreVector::from_log_scores(
      ctx.model->user_scores(ctx.user, candidates));
  const Rng root(cfg.seed);
  const Menu menu =
      best_menu(theta, *ctx.utility, cfg.menu_size,
                with_seed(cfg.mc, root.stream({kMenuStream}).seed()));
  return to_catalog(menu, candidates);
}

std::vector<PairEvaluation> evaluate_utility_gain(
    const GainContext& ctx, std::span<const QueryPair> pool,
    const SamplerConfig& cfg) {
  if (ctx.model == nullptr || ctx.utility == nullptr) {
    throw std::invalid_argument("gain context needs a model and a utility");
  }
  cfg.validate();
  const std::vector<ItemId> candidates = candidate_list(ctx);
  if (cfg.menu_size > static_cast<int>(candidates.size())) {
    throw SpecError("menu_size exceeds the candidate set");
  }
  const Rng root(cfg.seed);
  // One seed per role, shared by every pair and outcome so that differences
  // between pairs are not drowned by sampling noise.
  const McConfig menu_mc = with_seed(cfg.mc, root.stream({kMenuStream}).seed());
  const std::uint64_t eval_seed = root.stream({kEvalStream}).seed();
  TrainConfig finetune = cfg.finetune;
  finetune.seed = root.stream({kFinetuneStream}).seed();
  Rng replay_rng = root.stream({kReplayStream});
  const std::vector<ComparisonTriplet> replay =
      sample_replay(ctx.history, cfg.replay_size, replay_rng);

  const ScoreVector theta = ScoreVector::from_log_scores(
      ctx.model->user_scores(ctx.user, candidates));
  const int n = theta.size();
  const int depth = effective_depth(cfg.mc, *ctx.utility, n);
  const Menu before = best_menu(theta, *ctx.utility, cfg.menu_size, menu_mc);

  auto outcome_gain = [&](const ComparisonTriplet& answer,
                          std::vector<ItemId>& menu_out) {
    const auto updated = clone_and_finetune(*ctx.model, answer, replay, finetune);
    const ScoreVector theta_q = ScoreVector::from_log_scores(
        updated->user_scores(ctx.user, candidates));
    const Menu after = best_menu(theta_q, *ctx.utility, cfg.menu_size, menu_mc);
    menu_out = to_catalog(after, candidates);
    if (after.same_items(before)) return 0.0;
    Rng eval_rng(eval_seed);
    const RankingSet set =
        sample_rankings(theta_q, cfg.mc.samples, depth, eval_rng);
    return expected_utility(after, set, *ctx.utility) -
           expected_utility(before, set, *ctx.utility);
  };

  std::vector<PairEvaluation> out;
  out.reserve(pool.size());
  for (const QueryPair& pair : canonical_order(pool)) {
    if (pair.user != ctx.user) {
      throw std::invalid_argument("pool pair belongs to a different user");
    }
    PairEvaluation ev;
    ev.pair = pair;
    ev.p_i_wins = pairwise_probability(ctx.model->score(pair.user, pair.i),
                                       ctx.model->score(pair.user, pair.j));
    ev.gain_i_wins = outcome_gain(ComparisonTriplet(pair.user, pair.i, pair.j),
                                  ev.menu_if_i_wins);
    ev.gain_j_wins = outcome_gain(ComparisonTriplet(pair.user, pair.j, pair.i),
                                  ev.menu_if_j_wins);
    ev.score = ev.p_i_wins * ev.gain_i_wins + (1.0 - ev.p_i_wins) * ev.gain_j_wins;
    out.push_back(std::move(ev));
  }
  return out;
}

QueryPair utility_gain_query(const GainContext& ctx,
                             std::span<const QueryPair> pool,
                             const SamplerConfig& cfg) {
  if (pool.empty()) throw std::invalid_argument("utility_gain_query: empty pool");
  if (pool.size() == 1) return pool.front();
  const auto evals = evaluate_utility_gain(ctx, pool, cfg);
  std::size_t best = 0;
  for (std::size_t k = 1; k < evals.size(); ++k) {
    if (evals[k].score > evals[best].score) best = k;
  }
  return evals[best].pair;
}

// ---------------------------------------------------------------------------
// Baselines

QueryPair entropy_query(const ScoreModel& model, UserId user,
                        std::span<const QueryPair> pool) {
  if (pool.empty()) throw std::invalid_argument("entropy_query: empty pool");
  const auto sorted = canonical_order(pool);
  auto entropy = [&](const QueryPair& pair) {
    if (pair.user != user) {
      throw std::invalid_argument("pool pair belongs to a different user");
    }
    const double p = pairwise_probability(model.score(user, pair.i),
                                          model.score(user, pair.j));
    double h = 0.0;
    if (p > 0.0) h -= p * std::log(p);
    if (p < 1.0) h -= (1.0 - p) * std::log1p(-p);
    return h;
  };
  std::size_t best = 0;
  double best_h = entropy(sorted[0]);
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    const double h = entropy(sorted[k]);
    if (h > best_h) {
      best = k;
      best_h = h;
    }
  }
  return sorted[best];
}

QueryPair random_query(std::span<const QueryPair> pool, Rng& rng) {
  if (pool.empty()) throw std::invalid_argument("random_query: empty pool");
  return pool[static_cast<std::size_t>(rng.below(pool.size()))];
}

KMeansResult kmeans(const CandidateFeatures& features, int n_clusters, Rng& rng,
                    int max_iterations) {
  features.validate();
  const int n = features.n_items;
  const int d = features.dim;
  if (n_clusters < 1 || n_clusters > n) {
    throw std::invalid_argument("kmeans: need 1 <= clusters <= items");
  }
  KMeansResult res;
  res.centroids.resize(static_cast<std::size_t>(n_clusters) * static_cast<std::size_t>(d));
  auto centroid = [&](int c) {
    return std::span<double>(res.centroids.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(d),
                             static_cast<std::size_t>(d));
  };
  // k-means++ seeding.
  std::vector<double> nearest(static_cast<std::size_t>(n),
                              std::numeric_limits<double>::infinity());
  ItemId first = static_cast<ItemId>(rng.below(static_cast<std::uint64_t>(n)));
  std::copy(features.row(first).begin(), features.row(first).end(), centroid(0).begin());
  for (int c = 1; c < n_clusters; ++c) {
    double total = 0.0;
    for (ItemId i = 0; i < n; ++i) {
      nearest[static_cast<std::size_t>(i)] =
          std::min(nearest[static_cast<std::size_t>(i)],
                   squared_distance(features.row(i), centroid(c - 1)));
      total += nearest[static_cast<std::size_t>(i)];
    }
    ItemId pick = static_cast<ItemId>(rng.below(static_cast<std::uint64_t>(n)));
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (ItemId i = 0; i < n; ++i) {
        acc += nearest[static_cast<std::size_t>(i)];
        if (target < acc) {
          pick = i;
          break;
        }
      }
    }
    std::copy(features.row(pick).begin(), features.row(pick).end(), centroid(c).begin());
  }

  res.assignment.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = false;
    for (ItemId i = 0; i < n; ++i) {
      int best = 0;
      double best_d = squared_distance(features.row(i), centroid(0));
      for (int c = 1; c < n_clusters; ++c) {
        const double dist = squared_distance(features.row(i), centroid(c));
        if (dist < best_d) {
          best = c;
          best_d = dist;
        }
      }
      if (res.assignment[static_cast<std::size_t>(i)] != best) {
        res.assignment[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    res.iterations = it + 1;
    if (!changed && it > 0) break;
    std::vector<double> sums(res.centroids.size(), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(n_clusters), 0);
    for (ItemId i = 0; i < n; ++i) {
      const int c = res.assignment[static_cast<std::size_t>(i)];
      ++counts[static_cast<std::size_t>(c)];
      for (int k = 0; k < d; ++k) {
        sums[static_cast<std::size_t>(c * d + k)] += features.row(i)[static_cast<std::size_t>(k)];
      }
    }
    for (int c = 0; c < n_clusters; ++c) {
      // Empty clusters keep their previous centroid.
      if (counts[static_cast<std::size_t>(c)] == 0) continue;
      for (int k = 0; k < d; ++k) {
        centroid(c)[static_cast<std::size_t>(k)] =
            sums[static_cast<std::size_t>(c * d + k)] / counts[static_cast<std::size_t>(c)];
      }
    }
  }
  return res;
}

std::vector<QueryPair> cluster_queries(const CandidateFeatures& features,
                                       int n_queries, int n_clusters, Rng& rng,
                                       UserId user) {
  if (n_clusters < 2) throw std::invalid_argument("cluster_queries: need >= 2 clusters");
  if (n_queries < 0) throw std::invalid_argument("cluster_queries: negative count");
  features.validate();
  std::vector<QueryPair> out;
  if (n_queries == 0) return out;
  const int n = features.n_items;
  if (n < 2) throw std::invalid_argument("cluster_queries: need >= 2 items");
  const long long max_pairs = static_cast<long long>(n) * (n - 1) / 2;
  n_queries = static_cast<int>(std::min<long long>(n_queries, max_pairs));

  PairRegistry used;
  std::vector<ItemId> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  auto fill_randomly = [&]() {
    while (static_cast<int>(out.size()) < n_queries) {
      auto pool = draw_pool(user, all, used, 1, rng);
      if (pool.empty()) break;
      used.insert(pool[0]);
      out.push_back(pool[0]);
    }
  };

  bool degenerate = true;
  for (ItemId i = 1; i < n && degenerate; ++i) {
    if (squared_distance(features.row(i), features.row(0)) > 0.0) degenerate = false;
  }
  if (degenerate) {
    std::cerr << "warning: cluster_queries: all feature vectors identical; "
                 "falling back to random pairs\n";
    fill_randomly();
    return out;
  }

  const KMeansResult km = kmeans(features, std::min(n_clusters, n), rng);
  const int k = std::min(n_clusters, n);
  std::vector<std::vector<ItemId>> members(static_cast<std::size_t>(k));
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (ItemId i = 0; i < n; ++i) {
    const int c = km.assignment[static_cast<std::size_t>(i)];
    members[static_cast<std::size_t>(c)].push_back(i);
    dist[static_cast<std::size_t>(i)] = std::sqrt(squared_distance(
        features.row(i),
        std::span<const double>(km.centroids.data() + static_cast<std::size_t>(c) * static_cast<std::size_t>(features.dim),
                                static_cast<std::size_t>(features.dim))));
  }
  std::vector<std::pair<int, int>> cluster_pairs;
  for (int a = 0; a < k; ++a) {
    for (int b = a + 1; b < k; ++b) {
      if (!members[static_cast<std::size_t>(a)].empty() && !members[static_cast<std::size_t>(b)].empty()) {
        cluster_pairs.emplace_back(a, b);
      }
    }
  }
  std::size_t cursor = 0;
  std::size_t exhausted_streak = 0;
  while (static_cast<int>(out.size()) < n_queries && !cluster_pairs.empty() &&
         exhausted_streak < cluster_pairs.size()) {
    const auto [a, b] = cluster_pairs[cursor];
    cursor = (cursor + 1) % cluster_pairs.size();
    double best = std::numeric_limits<double>::infinity();
    QueryPair pick;
    bool found = false;
    for (ItemId x : members[static_cast<std::size_t>(a)]) {
      for (ItemId y : members[static_cast<std::size_t>(b)]) {
        const QueryPair cand(user, x, y);
        if (used.contains(cand)) continue;
        const double cost = dist[static_cast<std::size_t>(x)] + dist[static_cast<std::size_t>(y)];
        if (cost < best || (cost == best && cand < pick)) {
          best = cost;
          pick = cand;
          found = true;
        }
      }
    }
    if (!found) {
      ++exhausted_streak;
      continue;
    }
    exhausted_streak = 0;
    used.insert(pick);
    out.push_back(pick);
  }
  // Cross-cluster pairs ran out; complete with random unqueried pairs.
  fill_randomly();
  return out;
}

ComparisonTriplet simulate_oracle(const GroundTruthRanking& truth,
                                  const QueryPair& pair) {
  const int pi = truth.position_of(pair.i);
  const int pj = truth.position_of(pair.j);
  return pi < pj ? ComparisonTriplet(pair.user, pair.i, pair.j)
                 : ComparisonTriplet(pair.user, pair.j, pair.i);
}

std::vector<QueryPair> draw_pool(UserId user, std::span<const ItemId> items,
                                 const PairRegistry& queried, int pool_size,
                                 Rng& rng) {
  std::vector<QueryPair> out;
  const std::size_t m = items.size();
  if (m < 2 || pool_size < 1) return out;
  const std::size_t total = m * (m - 1) / 2;
  constexpr std::size_t kEnumerateLimit = 20000;
  // Rejection sampling needs most pairs to be open; otherwise enumerate.
  if (total <= kEnumerateLimit || queried.size() * 2 >= total ||
      static_cast<std::size_t>(pool_size) * 2 > total - queried.size()) {
    std::vector<QueryPair> open;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) {
        QueryPair pair(user, items[a], items[b]);
        if (!queried.contains(pair)) open.push_back(pair);
      }
    }
    const std::size_t take = std::min(open.size(), static_cast<std::size_t>(pool_size));
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(rng.below(open.size() - k));
      std::swap(open[k], open[pick]);
      out.push_back(open[k]);
    }
    return out;
  }
  PairRegistry chosen;
  while (static_cast<int>(out.size()) < pool_size) {
    const std::size_t a = static_cast<std::size_t>(rng.below(m));
    const std::size_t b = static_cast<std::size_t>(rng.below(m));
    if (a == b) continue;
    QueryPair pair(user, items[a], items[b]);
    if (queried.contains(pair) || !chosen.insert(pair)) continue;
    out.push_back(pair);
  }
  return out;
}

}  // namespace prefrec
