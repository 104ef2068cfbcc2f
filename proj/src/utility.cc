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

#include "prefrec/utility.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace prefrec {

double UtilityFunction::marginal_gain(const Menu& menu, double current,
                                      ItemId item,
                                      const PartialRanking& ranking,
                                      int /*position*/) const {
  if (menu.contains(item)) return 0.0;
  Menu bigger(menu.capacity() + 1, menu.items());
  bigger.insert(item);
  return evaluate(bigger, ranking) - current;
}

// ---------------------------------------------------------------------------

MediaUtility::MediaUtility(int n) : n_(n) {
  if (n < 1) throw std::invalid_argument("media utility needs n >= 1");
}

double MediaUtility::rank_value(int position) const {
  // Items outside a truncated prefix are treated as ranked last.
  if (position <= 0) return 1.0;
  return static_cast<double>(n_ + 1 - position);
}

double MediaUtility::evaluate(const Menu& menu,
                              const PartialRanking& ranking) const {
  if (menu.empty()) throw std::invalid_argument("media utility of empty menu");
  if (ranking.universe_size() != n_) {
    throw std::invalid_argument("ranking universe does not match utility n");
  }
  double best = 0.0;
  for (ItemId item : menu.items()) {
    best = std::max(best, rank_value(ranking.position(item)));
  }
  return best;
}

double MediaUtility::marginal_gain(const Menu&, double current, ItemId,
                                   const PartialRanking&, int position) const {
  return std::max(0.0, rank_value(position) - current);
}

double media_utility(const Menu& menu, const PartialRanking& ranking, int n) {
  return MediaUtility(n).evaluate(menu, ranking);
}

// ---------------------------------------------------------------------------

AdmissionsUtility::AdmissionsUtility(int k) : k_(k) {
  if (k < 1) throw std::invalid_argument("admissions utility needs k >= 1");
}

int AdmissionsUtility::required_depth(int n) const { return std::min(k_, n); }

double AdmissionsUtility::evaluate(const Menu& menu,
                                   const PartialRanking& ranking) const {
  const int top = std::min(k_, ranking.universe_size());
  if (ranking.depth() < top) {
    throw std::invalid_argument("ranking depth " +
                                std::to_string(ranking.depth()) +
                                " is shorter than k=" + std::to_string(k_));
  }
  int hits = 0;
  for (int p = 0; p < top; ++p) {
    if (menu.contains(ranking.ordered()[static_cast<std::size_t>(p)])) ++hits;
  }
  return hits;
}

double AdmissionsUtility::marginal_gain(const Menu&, double, ItemId,
                                        const PartialRanking&,
                                        int position) const {
  return position >= 1 && position <= k_ ? 1.0 : 0.0;
}

int admissions_utility(const Menu& menu, const PartialRanking& ranking, int k) {
  return static_cast<int>(AdmissionsUtility(k).evaluate(menu, ranking));
}

std::unique_ptr<UtilityFunction> make_utility(const std::string& name, int n,
                                              int k) {
  if (name == "media") return std::make_unique<MediaUtility>(n);
  if (name == "admissions") return std::make_unique<AdmissionsUtility>(k);
  throw SpecError("unknown utility '" + name + "' (expected media|admissions)");
}

// ---------------------------------------------------------------------------

void McConfig::validate() const {
  if (samples < 1) throw SpecError("Monte Carlo sample count R must be >= 1");
  if (depth < 0) throw SpecError("Monte Carlo depth must be >= 0");
}

void RankingSet::add(PartialRanking ranking, double weight) {
  if (rankings.empty() && universe_size == 0) {
    universe_size = ranking.universe_size();
  }
  if (ranking.universe_size() != universe_size) {
    throw std::invalid_argument("ranking set mixes universes");
  }
  const std::size_t base = positions.size();
  positions.resize(base + static_cast<std::size_t>(universe_size), 0);
  for (int p = 0; p < ranking.depth(); ++p) {
    positions[base + static_cast<std::size_t>(
                         ranking.ordered()[static_cast<std::size_t>(p)])] = p + 1;
  }
  rankings.push_back(std::move(ranking));
  weights.push_back(weight);
}

int effective_depth(const McConfig& cfg, const UtilityFunction& utility,
                    int n) {
  const int depth = cfg.depth > 0 ? cfg.depth : utility.required_depth(n);
  return std::clamp(depth, 1, n);
}

RankingSet sample_rankings(const ScoreVector& scores, int count, int depth,
                           Rng& rng) {
  if (count < 1) throw std::invalid_argument("need at least one sample");
  RankingSet set;
  set.universe_size = scores.size();
  set.depth = depth;
  set.rankings.reserve(static_cast<std::size_t>(count));
  const double w = 1.0 / static_cast<double>(count);
  for (int r = 0; r < count; ++r) set.add(sample_topk(scores, depth, rng), w);
  return set;
}

RankingSet enumerate_rankings(const ScoreVector& scores) {
  const int n = scores.size();
  if (n > kMaxExactItems) {
    throw std::invalid_argument(
        "exact enumeration supports n <= 8 items (got " + std::to_string(n) +
        "); use expected_utility_mc");
  }
  RankingSet set;
  set.universe_size = n;
  set.depth = n;
  std::vector<ItemId> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  do {
    set.add(PartialRanking(perm, n), ranking_probability(scores, perm));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return set;
}

double expected_utility(const Menu& menu, const RankingSet& set,
                        const UtilityFunction& utility) {
  double total = 0.0;
  for (int r = 0; r < set.size(); ++r) {
    total += set.weights[static_cast<std::size_t>(r)] *
             utility.evaluate(menu, set.rankings[static_cast<std::size_t>(r)]);
  }
  return total;
}

double expected_utility_mc(const Menu& menu, const ScoreVector& scores,
                           const UtilityFunction& utility,
                           const McConfig& cfg) {
  cfg.validate();
  const int depth = effective_depth(cfg, utility, scores.size());
  Rng rng(cfg.seed);
  double total = 0.0;
  for (int r = 0; r < cfg.samples; ++r) {
    total += utility.evaluate(menu, sample_topk(scores, depth, rng));
  }
  return total / static_cast<double>(cfg.samples);
}

double exact_expected_utility(const Menu& menu, const ScoreVector& scores,
                              const UtilityFunction& utility) {
  return expected_utility(menu, enumerate_rankings(scores), utility);
}

Menu greedy_menu(const RankingSet& set, const UtilityFunction& utility,
                 int menu_size) {
  const int n = set.universe_size;
  if (menu_size < 1 || menu_size > n) {
    throw std::invalid_argument("menu size must be in [1, n]");
  }
  Menu menu(menu_size);
  std::vector<double> current(static_cast<std::size_t>(set.size()),
                              utility.empty_value());
  for (int step = 0; step < menu_size; ++step) {
    ItemId best_item = -1;
    double best_gain = 0.0;
    for (ItemId item = 0; item < n; ++item) {
      if (menu.contains(item)) continue;
      double gain = 0.0;
      for (int r = 0; r < set.size(); ++r) {
        gain += set.weights[static_cast<std::size_t>(r)] *
                utility.marginal_gain(menu, current[static_cast<std::size_t>(r)],
                                      item,
                                      set.rankings[static_cast<std::size_t>(r)],
                                      set.position(r, item));
      }
      // Relative tolerance so that summation-order noise cannot override the
      // smallest-id tie-break.
      const double tol = 1e-12 * std::max(1.0, std::abs(best_gain));
      if (best_item < 0 || gain > best_gain + tol) {
        best_item = item;
        best_gain = gain;
      }
    }
    for (int r = 0; r < set.size(); ++r) {
      current[static_cast<std::size_t>(r)] += utility.marginal_gain(
          menu, current[static_cast<std::size_t>(r)], best_item,
          set.rankings[static_cast<std::size_t>(r)], set.position(r, best_item));
    }
    menu.insert(best_item);
  }
  return menu;
}

Menu best_menu(const ScoreVector& scores, const UtilityFunction& utility,
               int menu_size, const McConfig& cfg) {
  cfg.validate();
  if (menu_size < 1 || menu_size > scores.size()) {
    throw std::invalid_argument("menu size must be in [1, n]");
  }
  if (menu_size == scores.size()) {
    std::vector<ItemId> all(static_cast<std::size_t>(menu_size));
    std::iota(all.begin(), all.end(), 0);
    return Menu(menu_size, all);
  }
  Rng rng(cfg.seed);
  const RankingSet set = sample_rankings(
      scores, cfg.samples, effective_depth(cfg, utility, scores.size()), rng);
  return greedy_menu(set, utility, menu_size);
}

Menu best_menu_exact(const ScoreVector& scores, const UtilityFunction& utility,
                     int menu_size) {
  return greedy_menu(enumerate_rankings(scores), utility, menu_size);
}

}  // namespace prefrec
