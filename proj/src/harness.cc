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

#include "prefrec/harness.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "prefrec/datasets.h"
#include "prefrec/metrics.h"
#include "prefrec/models.h"
#include "prefrec/plackett.h"
#include "prefrec/sampler.h"
#include "prefrec/utility.h"

#ifndef PREFREC_VERSION
#define PREFREC_VERSION "unknown"
#endif

namespace prefrec {
namespace {

// Stream tags under each seed's root generator.
enum Stream : std::uint64_t {
  kWorld = 1,
  kHoldout = 2,
  kInitialPairs = 3,
  kModelInit = 4,
  kPool = 5,
  kSampler = 6,
  kRetrain = 7,
  kCluster = 8,
  kEval = 9,
  kUserPick = 10,
  kSplit = 11,
  kComparisons = 12,
};

// Seed of the synthetic admissions surrogate shipped in data/.
constexpr std::uint64_t kSurrogateSeed = 2024;

using MetricMap = std::map<std::string, std::vector<MetricRow>>;

bool one_of(const std::string& s, std::initializer_list<const char*> options) {
  for (const char* o : options) {
    if (s == o) return true;
  }
  return false;
}

TrainConfig train_config(const ExperimentSpec& spec, int epochs,
                         std::uint64_t seed) {
  TrainConfig cfg;
  cfg.learning_rate = spec.learning_rate;
  cfg.l2_lambda = spec.l2;
  cfg.epochs = epochs;
  cfg.seed = seed;
  return cfg;
}

SamplerConfig sampler_config(const ExperimentSpec& spec, int menu_size,
                             std::uint64_t seed) {
  SamplerConfig cfg;
  cfg.pool_size = spec.pool_size;
  cfg.mc.samples = spec.mc_samples;
  cfg.finetune = train_config(spec, spec.finetune_epochs, 0);
  cfg.replay_size = spec.replay_size;
  cfg.menu_size = menu_size;
  cfg.seed = seed;
  return cfg;
}

bool should_record(const ExperimentSpec& spec, int round) {
  return round % spec.eval_every == 0 || round == spec.rounds;
}

// Restriction of a full ranking to `items`, keeping relative order.
GroundTruthRanking restrict_truth(const GroundTruthRanking& truth,
                                  const std::vector<ItemId>& items) {
  std::unordered_set<ItemId> keep(items.begin(), items.end());
  std::vector<ItemId> order;
  order.reserve(items.size());
  for (ItemId i : truth.order()) {
    if (keep.contains(i)) order.push_back(i);
  }
  return GroundTruthRanking(std::move(order));
}

// Random distinct pairs among `items`, answered from `truth`.
std::vector<ComparisonTriplet> truth_comparisons(
    UserId user, const std::vector<ItemId>& items,
    const GroundTruthRanking& truth, int count, Rng& rng) {
  std::vector<QueryPair> all;
  for (std::size_t a = 0; a < items.size(); ++a) {
    for (std::size_t b = a + 1; b < items.size(); ++b) {
      all.emplace_back(user, items[a], items[b]);
    }
  }
  const std::size_t take = std::min(all.size(), static_cast<std::size_t>(std::max(count, 0)));
  for (std::size_t k = 0; k < take; ++k) {
    const std::size_t pick = k + static_cast<std::size_t>(rng.below(all.size() - k));
    std::swap(all[k], all[pick]);
  }
  std::vector<ComparisonTriplet> out;
  out.reserve(take);
  for (std::size_t k = 0; k < take; ++k) out.push_back(simulate_oracle(truth, all[k]));
  return out;
}

struct Subsample {
  std::vector<RatingRecord> ratings;
  std::vector<std::string> user_labels;
  std::vector<std::string> item_labels;
};

// Most active users and most rated items of a ratings file, re-indexed
// densely.
Subsample dense_subsample(const RatingsDataset& ds, int n_users, int n_items) {
  std::vector<int> user_count(static_cast<std::size_t>(ds.n_users()), 0);
  std::vector<int> item_count(static_cast<std::size_t>(ds.n_items()), 0);
  for (const auto& r : ds.ratings) {
    ++user_count[static_cast<std::size_t>(r.user)];
    ++item_count[static_cast<std::size_t>(r.item)];
  }
  auto top = [](const std::vector<int>& counts, int want) {
    std::vector<int> ids(counts.size());
    std::iota(ids.begin(), ids.end(), 0);
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
      return counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(b)];
    });
    ids.resize(std::min<std::size_t>(ids.size(), static_cast<std::size_t>(want)));
    std::sort(ids.begin(), ids.end());
    return ids;
  };
  auto index = [](const std::vector<int>& ids) {
    std::unordered_map<int, int> remap;
    for (std::size_t k = 0; k < ids.size(); ++k) remap[ids[k]] = static_cast<int>(k);
    return remap;
  };
  const auto user_ids = top(user_count, n_users);
  const auto item_ids = top(item_count, n_items);
  const auto users = index(user_ids);
  const auto items = index(item_ids);
  if (static_cast<int>(users.size()) < n_users || static_cast<int>(items.size()) < n_items) {
    throw DataError("ratings file has fewer than " + std::to_string(n_users) +
                    " users or " + std::to_string(n_items) + " items");
  }
  Subsample out;
  for (const auto& r : ds.ratings) {
    auto u = users.find(r.user);
    auto i = items.find(r.item);
    if (u == users.end() || i == items.end()) continue;
    out.ratings.push_back({u->second, i->second, r.rating, r.timestamp});
  }
  for (int u : user_ids) out.user_labels.push_back(ds.users.label(u));
  for (int i : item_ids) out.item_labels.push_back(ds.items.label(i));
  return out;
}

// ---------------------------------------------------------------------------
// Media recommendation with held-out items.

struct MediaWorld {
  std::vector<GroundTruthRanking> truth;       // per user, all items
  ItemHoldout holdout;
  std::vector<GroundTruthRanking> test_truth;  // per user, test items only
};

MediaWorld media_world(const ExperimentSpec& spec, const Rng& root,
                       const std::vector<RatingRecord>* ratings) {
  const int nu = spec.n_users;
  const int ni = spec.n_items;
  MediaWorld w;
  Rng world = root.stream({kWorld});
  std::vector<double> log_scores(static_cast<std::size_t>(nu) * static_cast<std::size_t>(ni));
  if (ratings == nullptr) {
    const int r = spec.true_rank;
    std::vector<double> a(static_cast<std::size_t>(nu * r)), b(static_cast<std::size_t>(ni * r));
    for (double& x : a) x = world.normal();
    for (double& x : b) x = world.normal();
    const double scale = spec.true_scale / std::sqrt(static_cast<double>(r));
    for (int u = 0; u < nu; ++u) {
      for (int i = 0; i < ni; ++i) {
        double s = 0.0;
        for (int k = 0; k < r; ++k) {
          s += a[static_cast<std::size_t>(u * r + k)] * b[static_cast<std::size_t>(i * r + k)];
        }
        log_scores[static_cast<std::size_t>(u * ni + i)] = scale * s;
      }
    }
    for (int u = 0; u < nu; ++u) {
      const std::span<const double> row(log_scores.data() + static_cast<std::size_t>(u * ni),
                                        static_cast<std::size_t>(ni));
      Rng ur = world.stream({static_cast<std::uint64_t>(u)});
      w.truth.emplace_back(sample_topk(ScoreVector::from_log_scores(row), ni, ur).ordered());
    }
  } else {
    TrainConfig fit = train_config(spec, spec.pretrain_epochs, 0);
    const ShadowTruth st = build_shadow_truth(*ratings, nu, ni, spec.true_rank,
                                              spec.alpha, fit, world);
    w.truth = st.truth;
  }
  Rng hold = root.stream({kHoldout});
  w.holdout = holdout_items(nu, ni, spec.test_items, hold);
  for (int u = 0; u < nu; ++u) {
    w.test_truth.push_back(restrict_truth(w.truth[static_cast<std::size_t>(u)],
                                          w.holdout.test_items[static_cast<std::size_t>(u)]));
  }
  return w;
}

MetricMap run_media_seed(const ExperimentSpec& spec, std::uint64_t seed,
                         const std::vector<RatingRecord>* ratings) {
  const Rng root(seed);
  const MediaWorld w = media_world(spec, root, ratings);
  const int nu = spec.n_users;
  const int n_test = spec.test_items;
  const MediaUtility utility(n_test);

  std::vector<ComparisonTriplet> data;
  std::vector<std::vector<ComparisonTriplet>> per_user(static_cast<std::size_t>(nu));
  PairRegistry queried;
  Rng initial = root.stream({kInitialPairs});
  for (UserId u = 0; u < nu; ++u) {
    for (const auto& t : truth_comparisons(u, w.holdout.train_items[static_cast<std::size_t>(u)],
                                           w.truth[static_cast<std::size_t>(u)],
                                           spec.pretrain_per_user, initial)) {
      data.push_back(t);
      per_user[static_cast<std::size_t>(u)].push_back(t);
      queried.insert(QueryPair(u, t.winner, t.loser));
    }
  }

  MatrixFactorizationModel model(nu, spec.n_items, spec.dim, 0.0,
                                 root.stream({kModelInit}).seed());
  train_pairwise(model, data, train_config(spec, spec.pretrain_epochs,
                                           root.stream({kModelInit, 1}).seed()));

  const std::uint64_t eval_seed = root.stream({kEval}).seed();
  auto evaluate = [&]() {
    SamplerConfig cfg = sampler_config(spec, spec.menu_size, eval_seed);
    cfg.mc.samples = spec.eval_samples;
    double total = 0.0;
    for (UserId u = 0; u < nu; ++u) {
      const auto& test = w.holdout.test_items[static_cast<std::size_t>(u)];
      const GainContext ctx{&model, u, test, &utility, {}};
      total += max_rank_percentile(current_best_menu(ctx, cfg),
                                   w.test_truth[static_cast<std::size_t>(u)]);
    }
    return total / nu;
  };

  MetricMap out;
  auto& rows = out["max_rank_percentile"];
  const int qpr = spec.effective_queries_per_round();
  Rng user_pick = root.stream({kUserPick});
  int answered = 0;
  int cursor = 0;
  for (int round = 1; round <= spec.rounds; ++round) {
    if (spec.strategy != "none") {
      for (int q = 0; q < qpr; ++q) {
        UserId u = 0;
        if (spec.user_selection == "random") {
          u = static_cast<UserId>(user_pick.below(static_cast<std::uint64_t>(nu)));
        } else {
          u = static_cast<UserId>(cursor++ % nu);
        }
        const auto uq = static_cast<std::size_t>(u);
        Rng pool_rng = root.stream({kPool, static_cast<std::uint64_t>(round),
                                    static_cast<std::uint64_t>(q)});
        const auto pool = draw_pool(u, w.holdout.train_items[uq], queried,
                                    spec.pool_size, pool_rng);
        if (pool.empty()) continue;
        QueryPair pick;
        if (spec.strategy == "utility") {
          const GainContext ctx{&model, u, w.holdout.test_items[uq], &utility,
                                per_user[uq]};
          pick = utility_gain_query(
              ctx, pool,
              sampler_config(spec, spec.menu_size,
                             root.stream({kSampler, static_cast<std::uint64_t>(round),
                                          static_cast<std::uint64_t>(q)}).seed()));
        } else if (spec.strategy == "entropy") {
          pick = entropy_query(model, u, pool);
        } else {
          Rng r = root.stream({kSampler, static_cast<std::uint64_t>(round),
                               static_cast<std::uint64_t>(q)});
          pick = random_query(pool, r);
        }
        const ComparisonTriplet t = simulate_oracle(w.truth[uq], pick);
        queried.insert(pick);
        data.push_back(t);
        per_user[uq].push_back(t);
        ++answered;
      }
    }
    train_pairwise(model, data, train_config(spec, spec.retrain_epochs,
                                             root.stream({kRetrain, static_cast<std::uint64_t>(round)}).seed()));
    if (should_record(spec, round)) rows.push_back({seed, round, answered, evaluate()});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Candidate selection with a neural scorer.

std::vector<ItemId> top_by_score(const ScoreModel& model, int k) {
  const std::vector<double> s = model.user_scores(0);
  std::vector<ItemId> ids(s.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::stable_sort(ids.begin(), ids.end(), [&](ItemId a, ItemId b) {
    return s[static_cast<std::size_t>(a)] > s[static_cast<std::size_t>(b)];
  });
  ids.resize(static_cast<std::size_t>(k));
  return ids;
}

MetricMap run_admissions_seed(const ExperimentSpec& spec, std::uint64_t seed,
                              const AdmissionsDataset& ds) {
  const Rng root(seed);
  const int n = ds.size();
  const CandidateFeatures features = ds.features();
  const AdmissionsUtility utility(spec.top_k);
  std::unordered_set<ItemId> relevant;
  std::unordered_map<ItemId, double> gains;
  for (int p = 0; p < spec.top_k; ++p) {
    relevant.insert(ds.truth.order()[static_cast<std::size_t>(p)]);
    gains[ds.truth.order()[static_cast<std::size_t>(p)]] = 1.0;
  }

  std::vector<ItemId> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  PairRegistry queried;
  Rng initial = root.stream({kInitialPairs});
  std::vector<ComparisonTriplet> data =
      truth_comparisons(0, all, ds.truth, spec.initial_queries, initial);
  for (const auto& t : data) queried.insert(QueryPair(0, t.winner, t.loser));

  NeuralShape shape{spec.embedding_dim, spec.hidden1, spec.hidden2, spec.z_dim};
  NeuralPreferenceModel model(1, n, shape, 0.0, root.stream({kModelInit}).seed(),
                              features.values, features.dim);
  train_pairwise(model, data, train_config(spec, spec.pretrain_epochs,
                                           root.stream({kModelInit, 1}).seed()));

  std::vector<QueryPair> sequence;
  std::size_t next_in_sequence = 0;
  if (spec.strategy == "cluster") {
    Rng cr = root.stream({kCluster});
    sequence = cluster_queries(features, spec.rounds * spec.effective_queries_per_round() +
                                             spec.initial_queries,
                               spec.clusters, cr);
  }

  MetricMap out;
  auto& precision = out["precision_at_" + std::to_string(spec.top_k)];
  auto& ndcg = out["ndcg_at_" + std::to_string(spec.top_k)];
  const int qpr = spec.effective_queries_per_round();
  int answered = 0;
  for (int round = 1; round <= spec.rounds; ++round) {
    if (spec.strategy != "none") {
      for (int q = 0; q < qpr; ++q) {
        std::optional<QueryPair> pick;
        if (spec.strategy == "cluster") {
          while (next_in_sequence < sequence.size() &&
                 queried.contains(sequence[next_in_sequence])) {
            ++next_in_sequence;
          }
          if (next_in_sequence < sequence.size()) pick = sequence[next_in_sequence++];
        } else {
          Rng pool_rng = root.stream({kPool, static_cast<std::uint64_t>(round),
                                      static_cast<std::uint64_t>(q)});
          const auto pool = draw_pool(0, all, queried, spec.pool_size, pool_rng);
          if (pool.empty()) continue;
          const std::uint64_t sseed =
              root.stream({kSampler, static_cast<std::uint64_t>(round),
                           static_cast<std::uint64_t>(q)}).seed();
          if (spec.strategy == "utility") {
            const GainContext ctx{&model, 0, {}, &utility, data};
            pick = utility_gain_query(ctx, pool, sampler_config(spec, spec.top_k, sseed));
          } else if (spec.strategy == "entropy") {
            pick = entropy_query(model, 0, pool);
          } else {
            Rng r(sseed);
            pick = random_query(pool, r);
          }
        }
        if (!pick) continue;
        queried.insert(*pick);
        data.push_back(simulate_oracle(ds.truth, *pick));
        ++answered;
      }
    }
    train_pairwise(model, data, train_config(spec, spec.retrain_epochs,
                                             root.stream({kRetrain, static_cast<std::uint64_t>(round)}).seed()));
    if (should_record(spec, round)) {
      const auto recommended = top_by_score(model, spec.top_k);
      precision.push_back({seed, round, answered, precision_at_k(recommended, relevant, spec.top_k)});
      ndcg.push_back({seed, round, answered, ndcg_at_k(recommended, gains, spec.top_k)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Rating-based versus comparison-based learning on semi-synthetic truth.

double mean_user_tau(const ScoreModel& model, const std::vector<GroundTruthRanking>& truth,
                     int n_items) {
  std::vector<ItemId> items(static_cast<std::size_t>(n_items));
  std::iota(items.begin(), items.end(), 0);
  double total = 0.0;
  for (UserId u = 0; u < static_cast<UserId>(truth.size()); ++u) {
    const auto scores = model.user_scores(u);
    total += kendall_tau(RankedList::from_scores(items, scores),
                         RankedList::from_truth(truth[static_cast<std::size_t>(u)]));
  }
  return total / static_cast<double>(truth.size());
}

MetricMap run_appendix_seed(const ExperimentSpec& spec, std::uint64_t seed,
                            const std::vector<RatingRecord>* file_ratings) {
  const Rng root(seed);
  const int nu = spec.n_users;
  const int ni = spec.n_items;
  std::vector<RatingRecord> ratings;
  if (file_ratings != nullptr) {
    ratings = *file_ratings;
  } else {
    ratings = generate_synthetic_ratings(nu, ni, spec.true_rank, spec.density,
                                         root.stream({kWorld}).seed())
                  .ratings;
  }
  Rng shadow_rng = root.stream({kWorld, 1});
  const ShadowTruth st = build_shadow_truth(
      ratings, nu, ni, spec.true_rank, spec.alpha,
      train_config(spec, spec.pretrain_epochs, 0), shadow_rng);

  std::vector<RatingRecord> dense;
  dense.reserve(static_cast<std::size_t>(nu) * static_cast<std::size_t>(ni));
  for (UserId u = 0; u < nu; ++u) {
    for (ItemId i = 0; i < ni; ++i) dense.push_back({u, i, st.shadow_rating(u, i), 0});
  }

  MetricMap out;
  auto& tau_cmp = out["kendall_tau_comparison"];
  auto& tau_rating = out["kendall_tau_rating"];
  for (std::size_t f = 0; f < spec.fractions.size(); ++f) {
    const SplitSpec split_spec{spec.fractions[f], root.stream({kSplit, f}).seed()};
    const auto [train, test] = split<RatingRecord>(dense, split_spec);
    (void)test;

    const std::uint64_t init_seed = root.stream({kModelInit, f}).seed();
    MatrixFactorizationModel rating_model(nu, ni, spec.dim, 0.0, init_seed);
    train_rating_mse(rating_model, train,
                     train_config(spec, spec.pretrain_epochs, root.stream({kRetrain, f, 1}).seed()));

    std::vector<std::vector<ItemId>> seen(static_cast<std::size_t>(nu));
    for (const auto& r : train) seen[static_cast<std::size_t>(r.user)].push_back(r.item);
    std::vector<ComparisonTriplet> comparisons;
    Rng cmp_rng = root.stream({kComparisons, f});
    for (UserId u = 0; u < nu; ++u) {
      auto& items = seen[static_cast<std::size_t>(u)];
      std::sort(items.begin(), items.end());
      for (const auto& t : truth_comparisons(u, items, st.truth[static_cast<std::size_t>(u)],
                                             spec.comparisons_per_user, cmp_rng)) {
        comparisons.push_back(t);
      }
    }
    MatrixFactorizationModel cmp_model(nu, ni, spec.dim, 0.0, init_seed);
    train_pairwise(cmp_model, comparisons,
                   train_config(spec, spec.pretrain_epochs, root.stream({kRetrain, f, 2}).seed()));

    const int round = static_cast<int>(f) + 1;
    const int size = static_cast<int>(train.size());
    tau_cmp.push_back({seed, round, size, mean_user_tau(cmp_model, st.truth, ni)});
    tau_rating.push_back({seed, round, size, mean_user_tau(rating_model, st.truth, ni)});
  }
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentSpec ExperimentSpec::defaults(const std::string& experiment) {
  ExperimentSpec s;
  s.experiment = experiment;
  if (experiment == "admissions") {
    s.rounds = 100;
    s.n_items = 100;
    s.pool_size = 30;
    s.mc_samples = 200;
    s.initial_queries = 5;
    s.pretrain_epochs = 50;
    s.retrain_epochs = 5;
    s.finetune_epochs = 5;
    s.strategy = "utility";
  } else if (experiment == "appendix") {
    s.n_users = 30;
    s.n_items = 40;
    s.dim = 100;
    s.rounds = 1;
    s.pretrain_epochs = 100;
    s.strategy = "none";
  }
  return s;
}

int ExperimentSpec::effective_queries_per_round() const {
  if (queries_per_round > 0) return queries_per_round;
  return experiment == "media" ? n_users : 1;
}

void ExperimentSpec::validate() const {
  if (!one_of(experiment, {"media", "admissions", "appendix"})) {
    throw SpecError("unknown experiment '" + experiment + "' (media|admissions|appendix)");
  }
  if (!one_of(strategy, {"utility", "entropy", "random", "cluster", "none"})) {
    throw SpecError("unknown strategy '" + strategy + "'");
  }
  if (experiment == "media" && strategy == "cluster") {
    throw SpecError("cluster strategy needs item features (admissions only)");
  }
  if (!one_of(user_selection, {"roundrobin", "random"})) {
    throw SpecError("user-selection must be roundrobin or random");
  }
  if (seeds.empty()) throw SpecError("at least one seed is required");
  if (rounds < 1) throw SpecError("rounds must be >= 1");
  if (queries_per_round < 0) throw SpecError("queries-per-round must be >= 0");
  if (eval_every < 1) throw SpecError("eval-every must be >= 1");
  if (threads < 1) throw SpecError("threads must be >= 1");
  if (n_users < 1 || n_items < 2) throw SpecError("need >= 1 user and >= 2 items");
  if (dim < 1 || true_rank < 1) throw SpecError("dimensions must be >= 1");
  if (pool_size < 1 || mc_samples < 1 || eval_samples < 1) {
    throw SpecError("pool-size and sample counts must be >= 1");
  }
  if (replay_size < 0 || pretrain_per_user < 0 || initial_queries < 0) {
    throw SpecError("counts must be non-negative");
  }
  if (pretrain_epochs < 0 || retrain_epochs < 0 || finetune_epochs < 0) {
    throw SpecError("epochs must be non-negative");
  }
  if (!(learning_rate > 0.0) || !(l2 >= 0.0)) {
    throw SpecError("learning-rate must be > 0 and l2 >= 0");
  }
  if (experiment == "media") {
    if (test_items < 1 || test_items > n_items - 2) {
      throw SpecError("test-items must leave at least two training items");
    }
    if (menu_size < 1 || menu_size > test_items) {
      throw SpecError("menu-size must be in [1, test-items]");
    }
  }
  if (experiment == "admissions") {
    if (top_k < 1) throw SpecError("top-k must be >= 1");
    if (clusters < 2) throw SpecError("clusters must be >= 2");
    if (embedding_dim < 1 || hidden1 < 1 || hidden2 < 1 || z_dim < 0) {
      throw SpecError("invalid network shape");
    }
  }
  if (experiment == "appendix") {
    if (fractions.empty()) throw SpecError("at least one train fraction is required");
    for (double f : fractions) {
      if (!(f > 0.0 && f <= 1.0)) throw SpecError("train fractions must be in (0, 1]");
    }
    if (!(alpha >= 0.0)) throw SpecError("alpha must be >= 0");
    if (!(density > 0.0 && density <= 1.0)) throw SpecError("density must be in (0, 1]");
  }
}

nlohmann::json ExperimentSpec::to_json() const {
  return {
      {"experiment", experiment},
      {"data", data},
      {"strategy", strategy},
      {"rounds", rounds},
      {"queries_per_round", effective_queries_per_round()},
      {"eval_every", eval_every},
      {"seeds", seeds},
      {"user_selection", user_selection},
      {"n_users", n_users},
      {"n_items", n_items},
      {"test_items", test_items},
      {"true_rank", true_rank},
      {"true_scale", true_scale},
      {"dim", dim},
      {"learning_rate", learning_rate},
      {"l2", l2},
      {"pretrain_epochs", pretrain_epochs},
      {"retrain_epochs", retrain_epochs},
      {"network", {{"embedding_dim", embedding_dim}, {"hidden", {hidden1, hidden2}}, {"z_dim", z_dim}}},
      {"pretrain_per_user", pretrain_per_user},
      {"initial_queries", initial_queries},
      {"pool_size", pool_size},
      {"mc_samples", mc_samples},
      {"eval_samples", eval_samples},
      {"finetune_epochs", finetune_epochs},
      {"replay_size", replay_size},
      {"menu_size", menu_size},
      {"top_k", top_k},
      {"clusters", clusters},
      {"fractions", fractions},
      {"alpha", alpha},
      {"density", density},
      {"comparisons_per_user", comparisons_per_user},
  };
}

std::vector<RoundSummary> ExperimentReport::summarize(const std::string& metric) const {
  auto it = metrics.find(metric);
  if (it == metrics.end()) throw std::invalid_argument("unknown metric " + metric);
  std::map<int, std::vector<const MetricRow*>> by_round;
  for (const auto& r : it->second) by_round[r.round].push_back(&r);
  std::vector<RoundSummary> out;
  for (const auto& [round, rows] : by_round) {
    RoundSummary s;
    s.round = round;
    s.n = static_cast<int>(rows.size());
    double sum = 0.0;
    long long queries = 0;
    for (const auto* r : rows) {
      sum += r->value;
      queries += r->queries;
    }
    s.mean = sum / s.n;
    s.queries = static_cast<int>(queries / s.n);
    if (s.n > 1) {
      double ss = 0.0;
      for (const auto* r : rows) ss += (r->value - s.mean) * (r->value - s.mean);
      s.stderr_ = std::sqrt(ss / (s.n - 1)) / std::sqrt(static_cast<double>(s.n));
    }
    out.push_back(s);
  }
  return out;
}

double ExperimentReport::final_mean(const std::string& metric) const {
  const auto s = summarize(metric);
  if (s.empty()) throw std::invalid_argument("metric " + metric + " has no rows");
  return s.back().mean;
}

std::map<std::uint64_t, double> ExperimentReport::final_values(const std::string& metric) const {
  auto it = metrics.find(metric);
  if (it == metrics.end()) throw std::invalid_argument("unknown metric " + metric);
  std::map<std::uint64_t, std::pair<int, double>> last;
  for (const auto& r : it->second) {
    auto [pos, inserted] = last.try_emplace(r.seed, r.round, r.value);
    if (!inserted && r.round >= pos->second.first) pos->second = {r.round, r.value};
  }
  std::map<std::uint64_t, double> out;
  for (const auto& [seed, rv] : last) out[seed] = rv.second;
  return out;
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  spec.validate();

  // Shared, read-only inputs are loaded once before any seed runs.
  std::optional<AdmissionsDataset> admissions;
  std::optional<Subsample> ratings;
  if (spec.experiment == "admissions") {
    admissions = spec.data == "synthetic"
                     ? parse_admissions(generate_admissions_csv(spec.n_items, kSurrogateSeed))
                     : load_admissions(spec.data);
    if (spec.top_k > admissions->size()) {
      throw SpecError("top-k exceeds the number of candidates");
    }
  } else if (spec.data != "synthetic") {
    ratings = dense_subsample(load_movielens(spec.data), spec.n_users, spec.n_items);
  }

  auto run_seed = [&](std::uint64_t seed) -> MetricMap {
    const std::vector<RatingRecord>* r = ratings ? &ratings->ratings : nullptr;
    if (spec.experiment == "media") return run_media_seed(spec, seed, r);
    if (spec.experiment == "admissions") return run_admissions_seed(spec, seed, *admissions);
    return run_appendix_seed(spec, seed, r);
  };

  std::vector<MetricMap> results(spec.seeds.size());
  std::vector<std::exception_ptr> errors(spec.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t k = next++; k < spec.seeds.size(); k = next++) {
      try {
        results[k] = run_seed(spec.seeds[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int n_threads = std::min<int>(spec.threads, static_cast<int>(spec.seeds.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  ExperimentReport report;
  if (ratings) {
    report.user_labels = ratings->user_labels;
    report.item_labels = ratings->item_labels;
  } else if (admissions && spec.data != "synthetic") {
    for (const auto& rec : admissions->records) report.item_labels.push_back(std::to_string(rec.serial));
  }
  for (const auto& m : results) {
    for (const auto& [name, rows] : m) {
      auto& dst = report.metrics[name];
      dst.insert(dst.end(), rows.begin(), rows.end());
    }
  }
  for (auto& [name, rows] : report.metrics) {
    std::stable_sort(rows.begin(), rows.end(), [](const MetricRow& a, const MetricRow& b) {
      return a.seed != b.seed ? a.seed < b.seed : a.round < b.round;
    });
  }
  return report;
}

std::string metric_csv(const std::vector<MetricRow>& rows) {
  std::string out = "seed,round,queries,value\n";
  for (const auto& r : rows) {
    out += std::to_string(r.seed) + "," + std::to_string(r.round) + "," +
           std::to_string(r.queries) + "," + format_double(r.value) + "\n";
  }
  return out;
}

void write_report(const ExperimentReport& report, const ExperimentSpec& spec,
                  const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir + ": " + ec.message());
  auto write = [&](const std::string& name, const std::string& text) {
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path.string());
    f << text;
  };
  nlohmann::json metrics = nlohmann::json::array();
  for (const auto& [name, rows] : report.metrics) {
    write("metrics_" + name + ".csv", metric_csv(rows));
    std::string summary = "round,queries,mean,stderr,n\n";
    for (const auto& s : report.summarize(name)) {
      summary += std::to_string(s.round) + "," + std::to_string(s.queries) + "," +
                 format_double(s.mean) + "," + format_double(s.stderr_) + "," +
                 std::to_string(s.n) + "\n";
    }
    write("summary_" + name + ".csv", summary);
    metrics.push_back(name);
  }
  auto write_ids = [&](const std::string& name, const std::vector<std::string>& labels) {
    if (labels.empty()) return;
    std::string text = "dense_id,original_id\n";
    for (std::size_t k = 0; k < labels.size(); ++k) text += std::to_string(k) + "," + labels[k] + "\n";
    write(name, text);
  };
  write_ids("user_ids.csv", report.user_labels);
  write_ids("item_ids.csv", report.item_labels);
  const nlohmann::json manifest = {
      {"format", "prefrec-report"},
      {"version", 1},
      {"code_version", version_string()},
      {"spec", spec.to_json()},
      {"seeds", spec.seeds},
      {"metrics", metrics},
  };
  write("manifest.json", manifest.dump(2) + "\n");
}

std::string version_string() { return PREFREC_VERSION; }

}  // namespace prefrec
