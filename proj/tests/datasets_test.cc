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
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "prefrec/datasets.h"

namespace prefrec {

TEST_SUITE("datasets") {
  TEST_CASE("movielens parsing") {
    auto ds = parse_movielens("196\t242\t3\t881250949\n");
    REQUIRE(ds.ratings.size() == 1);
    CHECK(ds.ratings[0].user == 0);
    CHECK(ds.ratings[0].item == 0);
    CHECK(ds.ratings[0].rating == 3.0);
    CHECK(ds.users.label(0) == "196");
    CHECK(ds.items.label(0) == "242");

    ds = parse_movielens("1::10::5::1\n2::10::4::2\n1::11::3::3\n");
    CHECK(ds.n_users() == 2);
    CHECK(ds.n_items() == 2);
    CHECK(ds.ratings[2].item == 1);

    try {
      parse_movielens("a\tb\tc\n");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("line 1") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_movielens(""), DataError);
    CHECK_THROWS_AS(parse_movielens("1\t2\t9\t0\n"), DataError);
    CHECK_THROWS_AS(load_movielens("/nonexistent/u.data"), DataError);
  }

  TEST_CASE("id maps round trip") {
    DenseIdMap m;
    CHECK(m.intern("x") == 0);
    CHECK(m.intern("y") == 1);
    CHECK(m.intern("x") == 0);
    CHECK_THROWS_AS(m.dense("z"), DataError);
    const auto path = (std::filesystem::temp_directory_path() / "prefrec_ids_test.csv").string();
    m.save_csv(path);
    const DenseIdMap back = DenseIdMap::load_csv(path);
    std::remove(path.c_str());
    CHECK(back.labels() == m.labels());
    for (int k = 0; k < m.size(); ++k) CHECK(back.dense(m.label(k)) == k);
  }

  TEST_CASE("ratings to comparisons") {
    std::vector<RatingRecord> r{{0, 0, 5, 0}, {0, 1, 3, 0}};
    Rng rng(1);
    auto t = ratings_to_comparisons(r, 1, rng);
    REQUIRE(t.size() == 1);
    CHECK(t[0] == ComparisonTriplet(0, 0, 1));

    std::vector<RatingRecord> flat{{0, 0, 3, 0}, {0, 1, 3, 0}, {0, 2, 3, 0}};
    CHECK(ratings_to_comparisons(flat, 5, rng).empty());

    std::vector<RatingRecord> many;
    for (int i = 0; i < 6; ++i) many.push_back({0, i, 1.0 + i % 5, 0});
    for (int i = 0; i < 4; ++i) many.push_back({1, i, 1.0 + i, 0});
    t = ratings_to_comparisons(many, 5, rng);
    CHECK(std::count_if(t.begin(), t.end(), [](const auto& x) { return x.user == 0; }) == 5);
    CHECK(std::count_if(t.begin(), t.end(), [](const auto& x) { return x.user == 1; }) == 5);
    for (const auto& x : t) {
      double rw = 0, rl = 0;
      for (const auto& rec : many) {
        if (rec.user != x.user) continue;
        if (rec.item == x.winner) rw = rec.rating;
        if (rec.item == x.loser) rl = rec.rating;
      }
      CHECK(rw > rl);
    }
  }

  TEST_CASE("admissions parsing") {
    const std::string header = "Serial No.,GRE Score,TOEFL Score,University Rating,SOP,LOR ,CGPA,Research,Chance of Admit \n";
    const std::string rows =
        "1,337,118,4,4.5,4.5,9.65,1,0.92\n"
        "2,324,107,4,4,4.5,8.87,1,0.76\n"
        "3,316,104,3,3,3.5,8,1,0.76\n"
        "4,322,110,3,3.5,2.5,8.67,1,0.80\n";
    const auto ds = parse_admissions(header + rows);
    CHECK(ds.size() == 4);
    CHECK(ds.truth.size() == 4);
    CHECK(ds.truth.position_of(0) == 1);
    CHECK(ds.truth.position_of(3) == 2);
    CHECK(ds.truth.position_of(1) == 3);  // equal chance: earlier serial first
    CHECK(ds.truth.position_of(2) == 4);
    for (const auto& rec : ds.records) {
      CHECK(rec.features.size() == kAdmissionsFeatureCount);
      for (double f : rec.features) {
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
      }
    }
    CHECK(ds.records[0].features[0] == 1.0);
    CHECK(ds.records[2].features[0] == 0.0);

    try {
      parse_admissions("Serial No.,GRE Score\n1,300\n");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("TOEFL Score") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_admissions(header + "1,337,118,4,4.5,4.5,9.65,1,1.2\n"), DataError);
    try {
      parse_admissions(header + "1,337,abc,4,4.5,4.5,9.65,1,0.5\n");
      FAIL("expected DataError");
    } catch (const DataError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("TOEFL Score") != std::string::npos);
      CHECK(msg.find("2") != std::string::npos);
    }
  }

  TEST_CASE("generated admissions data parses") {
    const auto ds = parse_admissions(generate_admissions_csv(400, 3));
    CHECK(ds.size() == 400);
    std::set<int> positions;
    for (ItemId i = 0; i < 400; ++i) positions.insert(ds.truth.position_of(i));
    CHECK(positions.size() == 400);
    CHECK(*positions.begin() == 1);
    CHECK(*positions.rbegin() == 400);
    CHECK(generate_admissions_csv(50, 1) == generate_admissions_csv(50, 1));
  }

  TEST_CASE("shadow truth") {
    const auto ds = generate_synthetic_ratings(6, 8, 2, 0.7, 4);
    TrainConfig fit;
    fit.epochs = 30;
    Rng a(5), b(5);
    const auto st = build_shadow_truth(ds.ratings, 6, 8, 2, 0.1, fit, a);
    const auto st2 = build_shadow_truth(ds.ratings, 6, 8, 2, 0.1, fit, b);
    REQUIRE(st.truth.size() == 6);
    for (int u = 0; u < 6; ++u) {
      CHECK(st.truth[static_cast<std::size_t>(u)].order() == st2.truth[static_cast<std::size_t>(u)].order());
      std::vector<ItemId> sorted = st.truth[static_cast<std::size_t>(u)].order();
      std::sort(sorted.begin(), sorted.end());
      for (int i = 0; i < 8; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
    }
  }

  TEST_CASE("identical shadow ratings give uniform first positions") {
    // Three items all rated the same by every user: standardized weights are
    // equal, so every item should lead a third of the sampled rankings.
    std::vector<RatingRecord> ratings;
    for (int u = 0; u < 300; ++u) {
      for (int i = 0; i < 3; ++i) ratings.push_back({u, i, 3.0, 0});
    }
    TrainConfig fit;
    fit.epochs = 0;
    Rng rng(8);
    const auto st = build_shadow_truth(ratings, 300, 3, 1, 0.1, fit, rng);
    std::vector<int> first(3, 0);
    for (const auto& t : st.truth) ++first[static_cast<std::size_t>(t.order()[0])];
    for (int c : first) CHECK(std::abs(c / 300.0 - 1.0 / 3.0) < 0.1);
    const auto w = shadow_weights(std::vector<double>{2.0, 2.0, 2.0});
    CHECK(w[0] == w[1]);
  }

  TEST_CASE("splits") {
    SplitSpec spec{0.8, 3};
    auto [tr, te] = split_indices(100, spec);
    CHECK(tr.size() == 80);
    CHECK(te.size() == 20);
    std::set<std::size_t> all(tr.begin(), tr.end());
    for (auto k : te) CHECK(all.insert(k).second);
    CHECK(all.size() == 100);
    CHECK(split_indices(100, spec) == std::make_pair(tr, te));
    spec.train_fraction = 1.0;
    CHECK(split_indices(10, spec).second.empty());
    spec.train_fraction = 0.0;
    CHECK_THROWS_AS(spec.validate(), SpecError);
    spec.train_fraction = 1.5;
    CHECK_THROWS_AS(split_indices(10, spec), SpecError);
  }

  TEST_CASE("item holdout keeps test items apart") {
    Rng rng(2);
    const auto h = holdout_items(5, 20, 4, rng);
    for (int u = 0; u < 5; ++u) {
      const auto& tr = h.train_items[static_cast<std::size_t>(u)];
      const auto& te = h.test_items[static_cast<std::size_t>(u)];
      CHECK(te.size() == 4);
      CHECK(tr.size() == 16);
      for (ItemId i : te) CHECK(std::find(tr.begin(), tr.end(), i) == tr.end());
    }
  }
}

}  // namespace prefrec
