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
#include <set>
#include <vector>

#include "doctest.h"
#include "oracles.h"
#include "prefrec/utility.h"

namespace prefrec {
namespace {

std::set<ItemId> as_set(const Menu& m) { return {m.items().begin(), m.items().end()}; }

std::vector<double> random_theta(int n, Rng& rng) {
  std::vector<double> theta(static_cast<std::size_t>(n));
  for (double& t : theta) t = std::exp(rng.normal(0, 1));
  return theta;
}

}  // namespace

TEST_SUITE("utility") {
  TEST_CASE("media utility examples") {
    const PartialRanking pi({3, 1, 4, 0, 2}, 5);
    CHECK(media_utility(Menu(2, std::vector<ItemId>{3, 2}), pi, 5) == 5.0);
    CHECK(media_utility(Menu(2, std::vector<ItemId>{1, 0}), pi, 5) == 4.0);
    CHECK(media_utility(Menu(1, std::vector<ItemId>{2}), pi, 5) == 1.0);
    CHECK_THROWS(media_utility(Menu(1), pi, 5));
    // Truncated prefix: absent items take the worst rank-value.
    const PartialRanking prefix({3, 1}, 5);
    CHECK(media_utility(Menu(1, std::vector<ItemId>{4}), prefix, 5) == 1.0);
  }

  TEST_CASE("admissions utility examples") {
    const PartialRanking pi({3, 1, 4, 0, 2}, 5);
    CHECK(admissions_utility(Menu(3, std::vector<ItemId>{3, 1, 4}), pi, 3) == 3);
    CHECK(admissions_utility(Menu(2, std::vector<ItemId>{0, 2}), pi, 3) == 0);
    CHECK(admissions_utility(Menu(3, std::vector<ItemId>{1, 4, 2}), pi, 3) == 2);
    CHECK_THROWS(admissions_utility(Menu(1, std::vector<ItemId>{0}), PartialRanking({3, 1}, 5), 3));
  }

  TEST_CASE("make_utility dispatch") {
    CHECK(make_utility("media", 5, 2)->name() == "media");
    CHECK(make_utility("admissions", 5, 2)->required_depth(5) == 2);
    CHECK_THROWS_AS(make_utility("nope", 5, 2), SpecError);
  }

  TEST_CASE("expected utility examples") {
    const auto uniform = ScoreVector::from_weights({1, 1, 1, 1, 1});
    AdmissionsUtility top1(1);
    CHECK(exact_expected_utility(Menu(2, std::vector<ItemId>{0, 3}), uniform, top1) ==
          doctest::Approx(2.0 / 5.0));
    const auto skew = ScoreVector::from_weights({2, 1, 1});
    CHECK(exact_expected_utility(Menu(1, std::vector<ItemId>{0}), skew, top1) == doctest::Approx(0.5));
    AdmissionsUtility top2(2);
    CHECK(exact_expected_utility(Menu(3, std::vector<ItemId>{0, 1, 2}), skew, top2) == doctest::Approx(2.0));
    McConfig cfg;
    cfg.samples = 50;
    cfg.seed = 3;
    CHECK(expected_utility_mc(Menu(3, std::vector<ItemId>{0, 1, 2}), skew, top2, cfg) == 2.0);
    CHECK(expected_utility_mc(Menu(1, std::vector<ItemId>{1}), skew, top2, cfg) ==
          expected_utility_mc(Menu(1, std::vector<ItemId>{1}), skew, top2, cfg));
    std::vector<double> nine(9, 1.0);
    CHECK_THROWS_AS(exact_expected_utility(Menu(1, std::vector<ItemId>{0}), ScoreVector::from_weights(nine), top1),
                    std::invalid_argument);
  }

  TEST_CASE("exact expectation agrees with the permutation oracle") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 3 + trial % 4;
      const auto theta = random_theta(n, rng);
      const auto scores = ScoreVector::from_weights(theta);
      Menu m(2, std::vector<ItemId>{0, static_cast<ItemId>(n - 1)});
      const int k = 1 + trial % 2;
      CHECK(exact_expected_utility(m, scores, AdmissionsUtility(k)) ==
            doctest::Approx(oracle::exact_expectation(theta, as_set(m), [k](const auto& s, const auto& p) {
              return oracle::admissions_value(s, p, k);
            })).epsilon(1e-12));
      CHECK(exact_expected_utility(m, scores, MediaUtility(n)) ==
            doctest::Approx(oracle::exact_expectation(theta, as_set(m), oracle::media_value)).epsilon(1e-12));
    }
  }

  TEST_CASE("monte carlo estimate is close to exact") {
    Rng rng(41);
    const auto theta = random_theta(4, rng);
    const auto scores = ScoreVector::from_weights(theta);
    AdmissionsUtility top2(2);
    const Menu m(2, std::vector<ItemId>{1, 2});
    McConfig cfg;
    cfg.samples = 10000;
    cfg.seed = 8;
    CHECK(std::abs(expected_utility_mc(m, scores, top2, cfg) - exact_expected_utility(m, scores, top2)) <= 0.02);
  }

  TEST_CASE("truncated sampling is lossless for admissions") {
    Rng rng(51);
    for (int n = 2; n <= 5; ++n) {
      const auto scores = ScoreVector::from_weights(random_theta(n, rng));
      for (int k = 1; k <= n; ++k) {
        AdmissionsUtility util(k);
        const Menu m(2, std::vector<ItemId>{0, static_cast<ItemId>(n - 1)});
        const RankingSet full = enumerate_rankings(scores);
        // Depth-k prefixes: marginalize full permutations onto their prefix.
        RankingSet prefixes;
        prefixes.universe_size = n;
        prefixes.depth = k;
        for (int r = 0; r < full.size(); ++r) {
          const auto& ord = full.rankings[static_cast<std::size_t>(r)].ordered();
          prefixes.add(PartialRanking({ord.begin(), ord.begin() + k}, n), full.weights[static_cast<std::size_t>(r)]);
        }
        CHECK(expected_utility(m, prefixes, util) == doctest::Approx(expected_utility(m, full, util)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("adding an item never lowers utility") {
    Rng rng(61);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 6;
      std::vector<ItemId> perm{0, 1, 2, 3, 4, 5};
      rng.shuffle(perm.begin(), perm.end());
      const PartialRanking pi(perm, n);
      Menu small(2, std::vector<ItemId>{static_cast<ItemId>(rng.below(3))});
      Menu big(2, small.items());
      big.insert(static_cast<ItemId>(3 + rng.below(3)));
      CHECK(media_utility(big, pi, n) >= media_utility(small, pi, n));
      CHECK(admissions_utility(big, pi, 3) >= admissions_utility(small, pi, 3));
    }
  }

  TEST_CASE("best_menu examples") {
    AdmissionsUtility top2(2);
    McConfig cfg;
    cfg.samples = 200;
    const auto uniform = ScoreVector::from_weights({1, 1, 1, 1, 1});
    CHECK(best_menu_exact(uniform, top2, 2).items() == std::vector<ItemId>{0, 1});
    const auto ordered = ScoreVector::from_weights({4, 32, 2, 16, 8, 1});
    CHECK(as_set(best_menu_exact(ordered, top2, 2)) == std::set<ItemId>{1, 3});
    CHECK(as_set(best_menu(ordered, top2, 2, cfg)) == std::set<ItemId>{1, 3});
    CHECK(best_menu(ordered, top2, 6, cfg).size() == 6);
  }

  TEST_CASE("greedy admissions menus are exact argmax, media within 1-1/e") {
    Rng rng(71);
    for (int trial = 0; trial < 30; ++trial) {
      const int n = 3 + static_cast<int>(rng.below(6));
      const int size = 1 + static_cast<int>(rng.below(3));
      const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
      const auto theta = random_theta(n, rng);
      const auto scores = ScoreVector::from_weights(theta);
      const AdmissionsUtility adm(k);
      const Menu g = best_menu_exact(scores, adm, size);
      const auto adm_value = [k](const auto& s, const auto& p) { return oracle::admissions_value(s, p, k); };
      CHECK(exact_expected_utility(g, scores, adm) ==
            doctest::Approx(oracle::best_menu_value(theta, size, adm_value)).epsilon(1e-12));
      const MediaUtility media(n);
      const Menu gm = best_menu_exact(scores, media, size);
      CHECK(exact_expected_utility(gm, scores, media) >=
            (1.0 - std::exp(-1.0)) * oracle::best_menu_value(theta, size, oracle::media_value));
    }
  }

  TEST_CASE("mc config validation") {
    McConfig cfg;
    cfg.samples = 0;
    CHECK_THROWS_AS(cfg.validate(), SpecError);
  }
}

}  // namespace prefrec
