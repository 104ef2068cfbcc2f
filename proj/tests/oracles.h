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

#ifndef PREFREC_TESTS_ORACLES_H_
#define PREFREC_TESTS_ORACLES_H_

// Independent reference computations for tests. Nothing here calls into the
// code paths under test beyond plain data types.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "prefrec/core.h"

namespace prefrec::oracle {

// PL ranking probability written directly as a forward product with an
// explicitly re-summed denominator at every step.
inline double pl_probability(const std::vector<double>& theta,
                             const std::vector<ItemId>& perm) {
  double p = 1.0;
  for (std::size_t k = 0; k < perm.size(); ++k) {
    double denom = 0.0;
    for (std::size_t j = k; j < perm.size(); ++j) denom += theta[static_cast<std::size_t>(perm[j])];
    p *= theta[static_cast<std::size_t>(perm[k])] / denom;
  }
  return p;
}

inline std::vector<std::vector<ItemId>> all_permutations(int n) {
  std::vector<ItemId> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<ItemId>> out;
  do {
    out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

// Utility of a menu (given as a set) under a full best-first permutation.
inline double admissions_value(const std::set<ItemId>& menu,
                               const std::vector<ItemId>& perm, int k) {
  double v = 0.0;
  for (int p = 0; p < k && p < static_cast<int>(perm.size()); ++p) {
    v += menu.count(perm[static_cast<std::size_t>(p)]) ? 1.0 : 0.0;
  }
  return v;
}

inline double media_value(const std::set<ItemId>& menu,
                          const std::vector<ItemId>& perm) {
  const int n = static_cast<int>(perm.size());
  for (int p = 0; p < n; ++p) {
    if (menu.count(perm[static_cast<std::size_t>(p)])) return static_cast<double>(n - p);
  }
  return 0.0;
}

using MenuValue = std::function<double(const std::set<ItemId>&,
                                       const std::vector<ItemId>&)>;

inline double exact_expectation(const std::vector<double>& theta,
                                const std::set<ItemId>& menu,
                                const MenuValue& value) {
  double total = 0.0;
  for (const auto& perm : all_permutations(static_cast<int>(theta.size()))) {
    total += pl_probability(theta, perm) * value(menu, perm);
  }
  return total;
}

// Exhaustive argmax over all C(n, size) menus.
inline double best_menu_value(const std::vector<double>& theta, int size,
                              const MenuValue& value) {
  const int n = static_cast<int>(theta.size());
  std::vector<int> pick(static_cast<std::size_t>(n), 0);
  std::fill(pick.end() - size, pick.end(), 1);
  double best = -1.0;
  do {
    std::set<ItemId> menu;
    for (int i = 0; i < n; ++i) {
      if (pick[static_cast<std::size_t>(i)]) menu.insert(i);
    }
    best = std::max(best, exact_expectation(theta, menu, value));
  } while (std::next_permutation(pick.begin(), pick.end()));
  return best;
}

struct BruteCounts {
  long long p = 0, q = 0, t = 0, u = 0;
};

// O(n^2) pair enumeration. keys_a[k] and keys_b[k] belong to the same item.
inline BruteCounts brute_pair_counts(const std::vector<double>& keys_a,
                                     const std::vector<double>& keys_b) {
  BruteCounts c;
  const std::size_t n = keys_a.size();
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t y = x + 1; y < n; ++y) {
      const double da = keys_a[x] - keys_a[y];
      const double db = keys_b[x] - keys_b[y];
      if (da == 0.0 && db == 0.0) continue;
      if (da == 0.0) {
        ++c.t;
      } else if (db == 0.0) {
        ++c.u;
      } else if ((da > 0.0) == (db > 0.0)) {
        ++c.p;
      } else {
        ++c.q;
      }
    }
  }
  return c;
}

inline double brute_tau_b(const std::vector<double>& keys_a,
                          const std::vector<double>& keys_b) {
  const BruteCounts c = brute_pair_counts(keys_a, keys_b);
  const double denom = std::sqrt(static_cast<double>(c.p + c.q + c.t) *
                                 static_cast<double>(c.p + c.q + c.u));
  return denom == 0.0 ? 0.0 : static_cast<double>(c.p - c.q) / denom;
}

}  // namespace prefrec::oracle

#endif  // PREFREC_TESTS_ORACLES_H_
