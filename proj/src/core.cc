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

#include "prefrec/core.h"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace prefrec {

ComparisonTriplet::ComparisonTriplet(UserId u, ItemId w, ItemId l)
    : user(u), winner(w), loser(l) {
  if (w == l) {
    throw std::invalid_argument("comparison winner and loser must differ");
  }
}

Menu::Menu(int capacity) : capacity_(capacity) {
  if (capacity <= 0) throw std::invalid_argument("menu capacity must be > 0");
  items_.reserve(static_cast<size_t>(capacity));
}

Menu::Menu(int capacity, std::span<const ItemId> items) : Menu(capacity) {
  for (ItemId item : items) insert(item);
}

bool Menu::insert(ItemId item) {
  if (contains(item)) return false;
  if (full()) throw std::length_error("menu is full");
  items_.push_back(item);
  return true;
}

bool Menu::contains(ItemId item) const {
  return std::find(items_.begin(), items_.end(), item) != items_.end();
}

bool Menu::same_items(const Menu& other) const {
  if (size() != other.size()) return false;
  return std::all_of(items_.begin(), items_.end(),
                     [&](ItemId i) { return other.contains(i); });
}

PartialRanking::PartialRanking(std::vector<ItemId> ordered, int universe_size)
    : ordered_(std::move(ordered)), universe_size_(universe_size) {
  if (universe_size <= 0) {
    throw std::invalid_argument("ranking universe must be non-empty");
  }
  if (depth() > universe_size) {
    throw std::invalid_argument("ranking longer than its universe");
  }
  std::vector<char> seen(static_cast<std::size_t>(universe_size), 0);
  for (ItemId item : ordered_) {
    if (item < 0 || item >= universe_size) {
      throw std::invalid_argument("ranking entry outside universe: " +
                                  std::to_string(item));
    }
    if (std::exchange(seen[static_cast<std::size_t>(item)], 1) != 0) {
      throw std::invalid_argument("ranking repeats item " +
                                  std::to_string(item));
    }
  }
}

int PartialRanking::position(ItemId item) const {
  auto it = std::find(ordered_.begin(), ordered_.end(), item);
  if (it == ordered_.end()) return 0;
  return static_cast<int>(it - ordered_.begin()) + 1;
}

GroundTruthRanking::GroundTruthRanking(std::vector<ItemId> best_first)
    : order_(std::move(best_first)) {
  position_.reserve(order_.size());
  for (size_t p = 0; p < order_.size(); ++p) {
    if (!position_.emplace(order_[p], static_cast<int>(p) + 1).second) {
      throw DataError("ground-truth ranking repeats item " +
                      std::to_string(order_[p]));
    }
  }
}

int GroundTruthRanking::position_of(ItemId item) const {
  auto it = position_.find(item);
  if (it == position_.end()) {
    throw DataError("item " + std::to_string(item) +
                    " is not in the ground-truth ranking");
  }
  return it->second;
}

}  // namespace prefrec
