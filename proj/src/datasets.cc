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

#include "prefrec/datasets.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>

#include "prefrec/plackett.h"

namespace prefrec {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r\n\"");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n\"");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split_on(std::string_view line, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t at = 0;
  while (true) {
    const auto next = line.find(sep, at);
    if (next == std::string_view::npos) {
      out.emplace_back(line.substr(at));
      return out;
    }
    out.emplace_back(line.substr(at, next - at));
    at = next + sep.size();
  }
}

bool parse_double(const std::string& text, double& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && std::isfinite(out);
}

bool parse_int64(const std::string& text, std::int64_t& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  return ec == std::errc() && ptr == t.data() + t.size();
}

}  // namespace

// ---------------------------------------------------------------------------

int DenseIdMap::intern(const std::string& label) {
  auto [it, inserted] = to_dense_.emplace(label, size());
  if (inserted) labels_.push_back(label);
  return it->second;
}

int DenseIdMap::dense(const std::string& label) const {
  auto it = to_dense_.find(label);
  if (it == to_dense_.end()) throw DataError("unknown id '" + label + "'");
  return it->second;
}

const std::string& DenseIdMap::label(int dense_id) const {
  if (dense_id < 0 || dense_id >= size()) {
    throw DataError("dense id " + std::to_string(dense_id) + " out of range");
  }
  return labels_[static_cast<std::size_t>(dense_id)];
}

void DenseIdMap::save_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << "dense_id,original_id\n";
  for (int k = 0; k < size(); ++k) out << k << ',' << labels_[static_cast<std::size_t>(k)] << '\n';
}

DenseIdMap DenseIdMap::load_csv(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::getline(in, line);
  DenseIdMap map;
  int expected = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    std::int64_t id = 0;
    if (comma == std::string::npos || !parse_int64(line.substr(0, comma), id) ||
        id != expected) {
      throw DataError(path + ":" + std::to_string(line_no) + ": bad id table row");
    }
    map.intern(trim(line.substr(comma + 1)));
    ++expected;
  }
  return map;
}

// ---------------------------------------------------------------------------
// MovieLens

RatingsDataset parse_movielens(const std::string& text) {
  RatingsDataset ds;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const bool double_colon = line.find("::") != std::string::npos;
    const auto fields = split_on(line, double_colon ? "::" : "\t");
    double rating = 0.0;
    std::int64_t ts = 0;
    if (fields.size() < 3 || trim(fields[0]).empty() || trim(fields[1]).empty() ||
        !parse_double(fields[2], rating) ||
        (fields.size() >= 4 && !parse_int64(fields[3], ts))) {
      throw DataError("malformed rating at line " + std::to_string(line_no) +
                      ": '" + line + "'");
    }
    if (rating < 0.5 || rating > 5.0) {
      throw DataError("rating out of the 1-5 scale at line " +
                      std::to_string(line_no));
    }
    RatingRecord rec;
    rec.user = ds.users.intern(trim(fields[0]));
    rec.item = ds.items.intern(trim(fields[1]));
    rec.rating = rating;
    rec.timestamp = ts;
    ds.ratings.push_back(rec);
  }
  if (ds.ratings.empty()) throw DataError("ratings file contains no records");
  return ds;
}

RatingsDataset load_movielens(const std::string& path) {
  try {
    return parse_movielens(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::vector<ComparisonTriplet> ratings_to_comparisons(
    std::span<const RatingRecord> ratings, int per_user, Rng& rng) {
  if (per_user < 0) throw std::invalid_argument("per_user must be >= 0");
  std::map<UserId, std::vector<std::pair<ItemId, double>>> by_user;
  for (const auto& r : ratings) by_user[r.user].emplace_back(r.item, r.rating);
  std::vector<ComparisonTriplet> out;
  if (per_user == 0) return out;
  for (auto& [user, rated] : by_user) {
    std::sort(rated.begin(), rated.end());
    rated.erase(std::unique(rated.begin(), rated.end(),
                            [](const auto& a, const auto& b) { return a.first == b.first; }),
                rated.end());
    // Every strict-preference pair, then a uniform draw without replacement.
    std::vector<std::pair<std::size_t, std::size_t>> valid;
    for (std::size_t a = 0; a < rated.size(); ++a) {
      for (std::size_t b = a + 1; b < rated.size(); ++b) {
        if (rated[a].second != rated[b].second) valid.emplace_back(a, b);
      }
    }
    const std::size_t take = std::min(valid.size(), static_cast<std::size_t>(per_user));
    for (std::size_t k = 0; k < take; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(rng.below(valid.size() - k));
      std::swap(valid[k], valid[pick]);
      const auto& [a, b] = valid[k];
      const bool a_wins = rated[a].second > rated[b].second;
      out.emplace_back(user, a_wins ? rated[a].first : rated[b].first,
                       a_wins ? rated[b].first : rated[a].first);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Admissions

CandidateFeatures AdmissionsDataset::features() const {
  CandidateFeatures f;
  f.n_items = size();
  f.dim = kAdmissionsFeatureCount;
  for (const auto& r : records) f.values.insert(f.values.end(), r.features.begin(), r.features.end());
  return f;
}

AdmissionsDataset parse_admissions(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("admissions file is empty");
  const auto header = split_on(line, ",");
  std::vector<int> column(std::size(kAdmissionsColumns), -1);
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    for (std::size_t k = 0; k < std::size(kAdmissionsColumns); ++k) {
      if (name == kAdmissionsColumns[k]) column[k] = static_cast<int>(c);
    }
  }
  for (std::size_t k = 0; k < column.size(); ++k) {
    if (column[k] < 0) {
      throw DataError(std::string("admissions file is missing column '") +
                      kAdmissionsColumns[k] + "'");
    }
  }
  AdmissionsDataset ds;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_on(line, ",");
    auto cell = [&](std::size_t k) -> double {
      const int c = column[k];
      double v = 0.0;
      if (static_cast<std::size_t>(c) >= cells.size() ||
          !parse_double(cells[static_cast<std::size_t>(c)], v)) {
        throw DataError("non-numeric value at row " + std::to_string(row) +
                        ", column '" + kAdmissionsColumns[k] + "'");
      }
      return v;
    };
    AdmissionsRecord rec;
    rec.candidate = static_cast<ItemId>(ds.records.size());
    rec.serial = static_cast<std::int64_t>(std::llround(cell(0)));
    for (int f = 1; f <= kAdmissionsFeatureCount; ++f) rec.features.push_back(cell(static_cast<std::size_t>(f)));
    rec.chance_of_admission = cell(8);
    if (rec.chance_of_admission < 0.0 || rec.chance_of_admission > 1.0) {
      throw DataError("Chance of Admit outside [0, 1] at row " + std::to_string(row));
    }
    ds.records.push_back(std::move(rec));
  }
  if (ds.records.size() < 2) throw DataError("admissions file needs >= 2 rows");

  for (int f = 0; f < kAdmissionsFeatureCount; ++f) {
    double lo = ds.records[0].features[static_cast<std::size_t>(f)];
    double hi = lo;
    for (const auto& r : ds.records) {
      lo = std::min(lo, r.features[static_cast<std::size_t>(f)]);
      hi = std::max(hi, r.features[static_cast<std::size_t>(f)]);
    }
    for (auto& r : ds.records) {
      double& v = r.features[static_cast<std::size_t>(f)];
      v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    }
  }
  std::vector<ItemId> order(ds.records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](ItemId a, ItemId b) {
    const auto& ra = ds.records[static_cast<std::size_t>(a)];
    const auto& rb = ds.records[static_cast<std::size_t>(b)];
    if (ra.chance_of_admission != rb.chance_of_admission) {
      return ra.chance_of_admission > rb.chance_of_admission;
    }
    return ra.serial < rb.serial;
  });
  ds.truth = GroundTruthRanking(std::move(order));
  return ds;
}

AdmissionsDataset load_admissions(const std::string& path) {
  try {
    return parse_admissions(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

std::string generate_admissions_csv(int n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("need at least two applicants");
  Rng rng(seed);
  std::ostringstream out;
  out << "Serial No.,GRE Score,TOEFL Score,University Rating,SOP,LOR,CGPA,"
         "Research,Chance of Admit\n";
  auto clampd = [](double v, double lo, double hi) { return std::clamp(v, lo, hi); };
  auto half_steps = [](double v) { return std::round(v * 2.0) / 2.0; };
  out << std::fixed;
  for (int s = 1; s <= n; ++s) {
    const double ability = rng.normal();
    const double gre = clampd(std::round(316.0 + 9.0 * ability + 6.0 * rng.normal()), 290, 340);
    const double toefl = clampd(std::round(107.0 + 4.5 * ability + 3.0 * rng.normal()), 92, 120);
    const double univ = clampd(std::round(3.1 + 0.9 * ability + 0.7 * rng.normal()), 1, 5);
    const double sop = clampd(half_steps(3.4 + 0.7 * ability + 0.6 * rng.normal()), 1, 5);
    const double lor = clampd(half_steps(3.5 + 0.6 * ability + 0.6 * rng.normal()), 1, 5);
    const double cgpa = clampd(8.6 + 0.45 * ability + 0.3 * rng.normal(), 6.8, 9.92);
    const int research = ability + rng.normal() > 0.0 ? 1 : 0;
    // Chance of admission is a noisy linear read-out of the standardized
    // scores, mirroring the real dataset's near-linear structure.
    const double signal = 0.30 * (gre - 316.0) / 11.0 + 0.15 * (toefl - 107.0) / 6.0 +
                          0.10 * (univ - 3.1) / 1.1 + 0.05 * (sop - 3.4) / 1.0 +
                          0.10 * (lor - 3.5) / 0.9 + 0.40 * (cgpa - 8.6) / 0.6 +
                          0.05 * (research - 0.5) * 2.0;
    const double chance = clampd(0.72 + 0.09 * signal + 0.015 * rng.normal(), 0.34, 0.97);
    out << s << ',' << std::setprecision(0) << gre << ',' << toefl << ',' << univ << ','
        << std::setprecision(1) << sop << ',' << lor << ',' << std::setprecision(2) << cgpa
        << ',' << research << ',' << chance << '\n';
  }
  return out.str();
}

RatingsDataset generate_synthetic_ratings(int n_users, int n_items, int rank,
                                          double density, std::uint64_t seed) {
  if (n_users < 1 || n_items < 2 || rank < 1 || !(density > 0.0 && density <= 1.0)) {
    throw std::invalid_argument("invalid synthetic rating shape");
  }
  Rng rng(seed);
  std::vector<double> U(static_cast<std::size_t>(n_users * rank));
  std::vector<double> V(static_cast<std::size_t>(n_items * rank));
  for (double& x : U) x = rng.normal();
  for (double& x : V) x = rng.normal();
  std::vector<double> item_bias(static_cast<std::size_t>(n_items));
  for (double& b : item_bias) b = 0.5 * rng.normal();
  RatingsDataset ds;
  for (int u = 0; u < n_users; ++u) ds.users.intern("u" + std::to_string(u + 1));
  for (int i = 0; i < n_items; ++i) ds.items.intern("i" + std::to_string(i + 1));
  const double scale = 1.0 / std::sqrt(static_cast<double>(rank));
  for (int u = 0; u < n_users; ++u) {
    for (int i = 0; i < n_items; ++i) {
      if (rng.uniform() >= density) continue;
      double affinity = item_bias[static_cast<std::size_t>(i)];
      for (int k = 0; k < rank; ++k) {
        affinity += scale * U[static_cast<std::size_t>(u * rank + k)] *
                    V[static_cast<std::size_t>(i * rank + k)];
      }
      const double raw = 3.0 + 1.1 * affinity + 0.5 * rng.normal();
      ds.ratings.push_back({u, i, std::clamp(std::round(raw), 1.0, 5.0), 0});
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Semi-synthetic ground truth

std::vector<double> shadow_weights(std::span<const double> user_shadow) {
  const double n = static_cast<double>(user_shadow.size());
  const double mean = std::accumulate(user_shadow.begin(), user_shadow.end(), 0.0) / n;
  double var = 0.0;
  for (double r : user_shadow) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / n);
  std::vector<double> theta;
  theta.reserve(user_shadow.size());
  for (double r : user_shadow) theta.push_back(std::exp(sd > 0.0 ? (r - mean) / sd : 0.0));
  return theta;
}

ShadowTruth build_shadow_truth(std::span<const RatingRecord> ratings,
                               int n_users, int n_items, int dim, double alpha,
                               const TrainConfig& fit, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("shadow model dimension must be >= 1");
  ShadowTruth out{MatrixFactorizationModel(n_users, n_items, dim, fit.init_std,
                                           rng.stream({1}).seed()),
                  {}, {}, n_users, n_items};
  TrainConfig cfg = fit;
  cfg.seed = rng.stream({2}).seed();
  train_rating_mse(out.shadow, ratings, cfg);
  out.shadow_ratings.resize(static_cast<std::size_t>(n_users) * static_cast<std::size_t>(n_items));
  for (UserId u = 0; u < n_users; ++u) {
    for (ItemId i = 0; i < n_items; ++i) {
      out.shadow_ratings[static_cast<std::size_t>(u) * static_cast<std::size_t>(n_items) +
                         static_cast<std::size_t>(i)] = out.shadow.score(u, i);
    }
  }
  out.truth.reserve(static_cast<std::size_t>(n_users));
  for (UserId u = 0; u < n_users; ++u) {
    const std::span<const double> row(
        out.shadow_ratings.data() + static_cast<std::size_t>(u) * static_cast<std::size_t>(n_items),
        static_cast<std::size_t>(n_items));
    const SmoothedScoreVector smoothed = laplace_smooth(shadow_weights(row), alpha);
    Rng user_rng = rng.stream({3, static_cast<std::uint64_t>(u)});
    const PartialRanking full = sample_topk(
        ScoreVector::from_weights(smoothed.probs), n_items, user_rng);
    out.truth.emplace_back(full.ordered());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Splits

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw SpecError("train fraction must be in (0, 1]");
  }
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, const SplitSpec& spec) {
  spec.validate();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(idx.begin(), idx.end());
  const auto n_train = std::min<std::size_t>(
      n, static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n))));
  std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

ItemHoldout holdout_items(int n_users, int n_items, int test_per_user, Rng& rng) {
  if (test_per_user < 1 || test_per_user >= n_items) {
    throw SpecError("test items per user must be in [1, n_items)");
  }
  ItemHoldout out;
  out.train_items.resize(static_cast<std::size_t>(n_users));
  out.test_items.resize(static_cast<std::size_t>(n_users));
  std::vector<ItemId> items(static_cast<std::size_t>(n_items));
  for (UserId u = 0; u < n_users; ++u) {
    std::iota(items.begin(), items.end(), 0);
    Rng user_rng = rng.stream({static_cast<std::uint64_t>(u)});
    user_rng.shuffle(items.begin(), items.end());
    auto& test = out.test_items[static_cast<std::size_t>(u)];
    auto& train = out.train_items[static_cast<std::size_t>(u)];
    test.assign(items.begin(), items.begin() + test_per_user);
    train.assign(items.begin() + test_per_user, items.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
  }
  return out;
}

}  // namespace prefrec
