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

#ifndef PREFREC_UTILITY_H_
#define PREFREC_UTILITY_H_

// Menu utilities U(m, pi), their expectation under a PL ranking distribution
// and greedy menu optimization.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "prefrec/core.h"
#include "prefrec/plackett.h"
#include "prefrec/rng.h"

namespace prefrec {

class UtilityFunction {
 public:
  virtual ~UtilityFunction() = default;

  virtual std::string name() const = 0;

  // Ranking prefix depth the utility needs over a universe of n items.
  virtual int required_depth(int n) const = 0;

  virtual double evaluate(const Menu& menu,
                          const PartialRanking& ranking) const = 0;

  // Utility credited to an empty menu during greedy construction.
  virtual double empty_value() const { return 0.0; }

  // U(menu + item) - U(menu), given current == U(menu) (or empty_value() for
  // an empty menu) and position == ranking.position(item). The default
  // re-evaluates; built-in utilities answer from `position` alone.
  virtual double marginal_gain(const Menu& menu, double current, ItemId item,
                               const PartialRanking& ranking,
                               int position) const;
};

// max over the menu of rank-value = n + 1 - position; an item outside a
// truncated prefix counts as position n (rank-value 1).
class MediaUtility final : public UtilityFunction {
 public:
  explicit MediaUtility(int n);

  std::string name() const override { return "media"; }
  int required_depth(int n) const override { return n; }
  double evaluate(const Menu& menu, const PartialRanking& ranking) const override;
  double marginal_gain(const Menu& menu, double current, ItemId item,
                       const PartialRanking& ranking,
                       int position) const override;

  int universe_size() const { return n_; }
  double rank_value(int position) const;

 private:
  int n_;
};

// |menu ∩ top-k(pi)|.
class AdmissionsUtility final : public UtilityFunction {
 public:
  explicit AdmissionsUtility(int k);

  std::string name() const override { return "admissions"; }
  int required_depth(int n) const override;
  double evaluate(const Menu& menu, const PartialRanking& ranking) const override;
  double marginal_gain(const Menu& menu, double current, ItemId item,
                       const PartialRanking& ranking,
                       int position) const override;

  int k() const { return k_; }

 private:
  int k_;
};

double media_utility(const Menu& menu, const PartialRanking& ranking, int n);
int admissions_utility(const Menu& menu, const PartialRanking& ranking, int k);

// "media" -> MediaUtility(n), "admissions" -> AdmissionsUtility(k).
std::unique_ptr<UtilityFunction> make_utility(const std::string& name, int n,
                                              int k);

struct McConfig {
  int samples = 500;  // R
  int depth = 0;      // prefix depth; 0 uses the utility's required depth
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr int kOptimizationSamples = 500;
inline constexpr int kEvaluationSamples = 5000;

// Weighted set of ranking prefixes: R Monte Carlo draws with weight 1/R, or
// every permutation with its exact probability.
struct RankingSet {
  int universe_size = 0;
  int depth = 0;
  std::vector<PartialRanking> rankings;
  std::vector<double> weights;
  // positions[r * universe_size + item]: 1-based, 0 when outside the prefix.
  std::vector<int> positions;

  int size() const { return static_cast<int>(rankings.size()); }
  int position(int r, ItemId item) const {
    return positions[static_cast<std::size_t>(r) *
                         static_cast<std::size_t>(universe_size) +
                     static_cast<std::size_t>(item)];
  }
  void add(PartialRanking ranking, double weight);
};

int effective_depth(const McConfig& cfg, const UtilityFunction& utility, int n);

RankingSet sample_rankings(const ScoreVector& scores, int count, int depth,
                           Rng& rng);

inline constexpr int kMaxExactItems = 8;

// All n! permutations with their PL probabilities (n <= kMaxExactItems).
RankingSet enumerate_rankings(const ScoreVector& scores);

double expected_utility(const Menu& menu, const RankingSet& set,
                        const UtilityFunction& utility);

// (1/R) sum_r U(menu, pi_r), pi_r sampled with cfg.seed.
double expected_utility_mc(const Menu& menu, const ScoreVector& scores,
                           const UtilityFunction& utility, const McConfig& cfg);

// sum over all permutations of P(pi) U(menu, pi). Throws for n > 8.
double exact_expected_utility(const Menu& menu, const ScoreVector& scores,
                              const UtilityFunction& utility);

// Greedy: repeatedly add the item with the largest weighted marginal gain
// over `set`; ties go to the smaller id.
Menu greedy_menu(const RankingSet& set, const UtilityFunction& utility,
                 int menu_size);

// Greedy menu over R rankings shared by every candidate (common random
// numbers), drawn with cfg.seed.
Menu best_menu(const ScoreVector& scores, const UtilityFunction& utility,
               int menu_size, const McConfig& cfg);

// Greedy menu under exact expected utility (n <= 8).
Menu best_menu_exact(const ScoreVector& scores, const UtilityFunction& utility,
                     int menu_size);

}  // namespace prefrec

#endif  // PREFREC_UTILITY_H_
