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

#ifndef PREFREC_CORE_H_
#define PREFREC_CORE_H_

// Shared domain types: dense ids, comparison triplets, menus and rankings.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace prefrec {

// Dense 0-based indices. String labels live in the dataset lookup tables.
using ItemId = std::int32_t;
using UserId = std::int32_t;

// Raised when inputs reference data that is missing or inconsistent
// (unknown ids, malformed files). Maps to CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for invalid experiment or session configuration. CLI exit code 2.
class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Observation that `user` prefers `winner` to `loser`.
struct ComparisonTriplet {
  UserId user = 0;
  ItemId winner = 0;
  ItemId loser = 0;

  ComparisonTriplet() = default;
  ComparisonTriplet(UserId u, ItemId w, ItemId l);

  friend bool operator==(const ComparisonTriplet&,
                         const ComparisonTriplet&) = default;
};

// One observed rating r_ui (MovieLens scale 1-5, or real-valued shadow
// ratings in semi-synthetic mode).
struct RatingRecord {
  UserId user = 0;
  ItemId item = 0;
  double rating = 0.0;
  std::int64_t timestamp = 0;
};

// A recommended set of at most `capacity` distinct items. Insertion order is
// preserved so greedy construction order doubles as a presentation order.
class Menu {
 public:
  explicit Menu(int capacity);
  Menu(int capacity, std::span<const ItemId> items);

  // Adds `item`. A duplicate insert is a no-op and returns false. Throws
  // std::length_error when the menu is full.
  bool insert(ItemId item);
  bool contains(ItemId item) const;

  int capacity() const { return capacity_; }
  int size() const { return static_cast<int>(items_.size()); }
  bool empty() const { return items_.empty(); }
  bool full() const { return size() == capacity_; }
  const std::vector<ItemId>& items() const { return items_; }

  // Same members regardless of insertion order.
  bool same_items(const Menu& other) const;

 private:
  int capacity_;
  std::vector<ItemId> items_;
};

// The first `ordered.size()` entries of a ranking over `universe_size` items.
class PartialRanking {
 public:
  PartialRanking(std::vector<ItemId> ordered, int universe_size);

  const std::vector<ItemId>& ordered() const { return ordered_; }
  int depth() const { return static_cast<int>(ordered_.size()); }
  int universe_size() const { return universe_size_; }
  bool is_full() const { return depth() == universe_size_; }

  // 1-based position of `item`, or 0 when it is not among the sampled prefix.
  int position(ItemId item) const;

 private:
  std::vector<ItemId> ordered_;
  int universe_size_;
};

// Complete ordering of a set of item ids; position 1 is most preferred.
class GroundTruthRanking {
 public:
  GroundTruthRanking() = default;
  // `best_first` lists every ranked item once, most preferred first.
  explicit GroundTruthRanking(std::vector<ItemId> best_first);

  int size() const { return static_cast<int>(order_.size()); }
  const std::vector<ItemId>& order() const { return order_; }
  bool contains(ItemId item) const { return position_.contains(item); }

  // Throws DataError if `item` is not ranked.
  int position_of(ItemId item) const;

 private:
  std::vector<ItemId> order_;
  std::unordered_map<ItemId, int> position_;
};

inline int position_of(const GroundTruthRanking& ranking, ItemId item) {
  return ranking.position_of(item);
}

}  // namespace prefrec

#endif  // PREFREC_CORE_H_
