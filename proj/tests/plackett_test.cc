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

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "oracles.h"
#include "prefrec/plackett.h"

namespace prefrec {
namespace {

double chi_square_p(const std::vector<double>& observed,
                    const std::vector<double>& expected) {
  double stat = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double d = observed[k] - expected[k];
    stat += d * d / expected[k];
  }
  boost::math::chi_squared dist(static_cast<double>(observed.size() - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

}  // namespace

TEST_SUITE("plackett") {
  TEST_CASE("ranking_probability examples") {
    const auto uniform = ScoreVector::from_weights({1, 1, 1});
    for (const auto& perm : oracle::all_permutations(3)) {
      CHECK(ranking_probability(uniform, perm) == doctest::Approx(1.0 / 6.0));
    }
    const auto skewed = ScoreVector::from_weights({2, 1, 1});
    const std::vector<ItemId> perm{0, 1, 2};
    CHECK(ranking_probability(skewed, perm) == doctest::Approx(oracle::pl_probability({2, 1, 1}, perm)));
    CHECK(ranking_probability(skewed, perm) == doctest::Approx(0.25));
    CHECK(ranking_probability(ScoreVector::from_weights({7.5}), std::vector<ItemId>{0}) == 1.0);
    CHECK_THROWS(ranking_probability(skewed, std::vector<ItemId>{0, 0, 1}));
    CHECK_THROWS(ranking_probability(skewed, std::vector<ItemId>{0, 1}));
  }

  TEST_CASE("permutation probabilities sum to one and marginalize") {
    Rng rng(11);
    for (int n = 1; n <= 5; ++n) {
      std::vector<double> theta(static_cast<size_t>(n));
      for (double& t : theta) t = std::exp(rng.normal());
      const auto scores = ScoreVector::from_weights(theta);
      double total = 0.0;
      std::vector<double> first(static_cast<size_t>(n), 0.0);
      for (const auto& perm : oracle::all_permutations(n)) {
        const double p = ranking_probability(scores, perm);
        CHECK(p == doctest::Approx(oracle::pl_probability(theta, perm)).epsilon(1e-12));
        total += p;
        first[static_cast<size_t>(perm[0])] += p;
      }
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      if (n <= 4) {
        const double sum = std::accumulate(theta.begin(), theta.end(), 0.0);
        for (int i = 0; i < n; ++i) {
          CHECK(first[static_cast<size_t>(i)] == doctest::Approx(theta[static_cast<size_t>(i)] / sum).epsilon(1e-12));
        }
      }
    }
  }

  TEST_CASE("pairwise_probability examples and properties") {
    CHECK(pairwise_probability(0.3, 0.3) == 0.5);
    CHECK(pairwise_probability(std::log(3.0), 0.0) == doctest::Approx(0.75).epsilon(1e-14));
    const double saturated = pairwise_probability(1000.0, 0.0);
    CHECK(std::isfinite(saturated));
    CHECK(saturated >= 1.0 - 1e-12);
    CHECK(pairwise_probability(0.0, 1000.0) >= 0.0);
    CHECK_THROWS(pairwise_probability(NAN, 0.0));
    CHECK_THROWS(pairwise_probability(0.0, INFINITY));

    Rng rng(5);
    for (int k = 0; k < 1000; ++k) {
      const double a = rng.normal(0, 20);
      const double b = rng.normal(0, 20);
      CHECK(std::abs(pairwise_probability(a, b) + pairwise_probability(b, a) - 1.0) <= 1e-12);
    }
    double prev = 0.0;
    for (double d = -30.0; d <= 30.0; d += 0.25) {
      const double p = pairwise_probability(d, 0.0);
      CHECK(p > prev);
      prev = p;
    }
  }

  TEST_CASE("sample_topk first position frequency") {
    const auto scores = ScoreVector::from_weights({2, 1, 1});
    Rng rng(2024);
    int hits = 0;
    const int draws = 100000;
    for (int r = 0; r < draws; ++r) {
      const auto ranking = sample_topk(scores, 1, rng);
      CHECK(ranking.depth() == 1);
      hits += ranking.ordered()[0] == 0 ? 1 : 0;
    }
    CHECK(std::abs(hits / static_cast<double>(draws) - 0.5) <= 0.01);
  }

  TEST_CASE("sample_topk full rankings are uniform under equal weights") {
    const auto scores = ScoreVector::from_weights({1, 1, 1});
    Rng rng(99);
    std::map<std::vector<ItemId>, double> counts;
    const int draws = 100000;
    for (int r = 0; r < draws; ++r) counts[sample_topk(scores, 3, rng).ordered()] += 1.0;
    REQUIRE(counts.size() == 6);
    std::vector<double> observed;
    for (const auto& [perm, c] : counts) observed.push_back(c);
    CHECK(chi_square_p(observed, std::vector<double>(6, draws / 6.0)) > 0.001);
  }

  TEST_CASE("sample_topk first-position frequencies track weights") {
    const std::vector<double> theta{5, 3, 1, 0.5, 0.5};
    const auto scores = ScoreVector::from_weights(theta);
    Rng rng(7);
    std::vector<double> first(5, 0.0);
    const int draws = 50000;
    for (int r = 0; r < draws; ++r) first[static_cast<size_t>(sample_topk(scores, 2, rng).ordered()[0])] += 1.0;
    std::vector<double> expected;
    for (double t : theta) expected.push_back(draws * t / 10.0);
    CHECK(chi_square_p(first, expected) > 0.001);
  }

  TEST_CASE("sample_topk contract") {
    const auto scores = ScoreVector::from_weights({1, 2, 3, 4});
    Rng a(1), b(1);
    CHECK(sample_topk(scores, 3, a).ordered() == sample_topk(scores, 3, b).ordered());
    CHECK_THROWS(sample_topk(scores, 5, a));
    CHECK_THROWS(sample_topk(scores, 0, a));
    const auto full = sample_topk(scores, 4, a);
    CHECK(full.is_full());
  }

  TEST_CASE("laplace_smooth examples") {
    const std::vector<double> a{3, 1};
    auto s = laplace_smooth(a, 0.0);
    CHECK(s.probs[0] == doctest::Approx(0.75));
    CHECK(s.probs[1] == doctest::Approx(0.25));
    const std::vector<double> zeros{0, 0};
    s = laplace_smooth(zeros, 1.0);
    CHECK(s.probs[0] == doctest::Approx(0.5));
    CHECK(s.probs[1] == doctest::Approx(0.5));
    s = laplace_smooth(a, 1.0);
    CHECK(s.probs[0] == doctest::Approx(4.0 / 6.0));
    CHECK(s.probs[1] == doctest::Approx(2.0 / 6.0));
    CHECK_THROWS(laplace_smooth(a, -0.1));
    CHECK_THROWS(laplace_smooth(zeros, 0.0));
  }

  TEST_CASE("laplace_smooth yields a probability vector with a floor") {
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> theta(static_cast<size_t>(2 + trial % 9));
      for (double& t : theta) t = std::exp(rng.normal(0, 2));
      const double alpha = rng.uniform() * 2.0;
      const auto s = laplace_smooth(theta, alpha);
      double denom = 0.0;
      for (double t : theta) denom += t + alpha;
      CHECK(std::accumulate(s.probs.begin(), s.probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
      for (double p : s.probs) CHECK(p >= alpha / denom * (1 - 1e-12));
    }
  }

  TEST_CASE("from_log_scores is shift invariant and overflow safe") {
    const std::vector<double> s{800.0, 799.0, 790.0};
    const auto scores = ScoreVector::from_log_scores(s);
    CHECK(scores[0] == 1.0);
    CHECK(scores[1] == doctest::Approx(std::exp(-1.0)));
    const std::vector<double> bad{0.0, NAN};
    CHECK_THROWS(ScoreVector::from_log_scores(bad));
    CHECK_THROWS(ScoreVector::from_weights({1.0, 0.0}));
  }
}

}  // namespace prefrec
