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

#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "prefrec/core.h"
#include "prefrec/rng.h"

namespace prefrec {

TEST_SUITE("core") {
  TEST_CASE("position_of on a three item ranking") {
    const GroundTruthRanking r({10, 20, 30});
    CHECK(position_of(r, 10) == 1);
    CHECK(position_of(r, 30) == 3);
    CHECK_THROWS_AS(position_of(r, 40), DataError);
  }

  TEST_CASE("ground-truth positions are a bijection onto 1..n") {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<ItemId> order(17);
      for (int k = 0; k < 17; ++k) order[static_cast<size_t>(k)] = k * 3;
      rng.shuffle(order.begin(), order.end());
      const GroundTruthRanking r(order);
      std::vector<int> seen(18, 0);
      for (ItemId item : order) ++seen[static_cast<size_t>(r.position_of(item))];
      CHECK(seen[0] == 0);
      for (int p = 1; p <= 17; ++p) CHECK(seen[static_cast<size_t>(p)] == 1);
    }
    CHECK_THROWS_AS(GroundTruthRanking({1, 2, 1}), DataError);
  }

  TEST_CASE("menu insertion has set semantics") {
    Menu m(2);
    CHECK(m.insert(4));
    CHECK_FALSE(m.insert(4));
    CHECK(m.size() == 1);
    CHECK(m.insert(1));
    CHECK(m.full());
    CHECK_FALSE(m.insert(1));  // duplicate on a full menu is still a no-op
    CHECK_THROWS_AS(m.insert(7), std::length_error);
    CHECK(m.same_items(Menu(2, std::vector<ItemId>{1, 4})));
    CHECK_THROWS(Menu(0));
  }

  TEST_CASE("triplets reject self comparison") {
    CHECK_THROWS(ComparisonTriplet(0, 3, 3));
    const ComparisonTriplet t(1, 2, 3);
    CHECK(t.winner == 2);
  }

  TEST_CASE("partial rankings validate entries") {
    const PartialRanking p({2, 0}, 4);
    CHECK(p.position(2) == 1);
    CHECK(p.position(0) == 2);
    CHECK(p.position(3) == 0);
    CHECK_FALSE(p.is_full());
    CHECK_THROWS(PartialRanking({1, 1}, 3));
    CHECK_THROWS(PartialRanking({5}, 3));
    CHECK_THROWS(PartialRanking({0, 1, 2, 3}, 3));
  }

  TEST_CASE("rng streams are reproducible and independent of the parent") {
    Rng a(42);
    Rng b(42);
    const Rng sa = a.stream({1, 2});
    a();
    const Rng sb = b.stream({1, 2});
    CHECK(sa.seed() == sb.seed());
    CHECK(a.stream({1, 3}).seed() != sa.seed());
    Rng x(9), y(9);
    for (int k = 0; k < 100; ++k) CHECK(x.uniform() == y.uniform());
  }
}

}  // namespace prefrec
