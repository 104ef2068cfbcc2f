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

#ifndef PREFREC_HARNESS_H_
#define PREFREC_HARNESS_H_

// Desk-scale experiment runner: the media and admissions active-sampling
// loops and the rating-vs-comparison study. Results are metric curves keyed
// by (seed, round).

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace prefrec {

struct ExperimentSpec {
  std::string experiment = "media";  // media | admissions | appendix
  std::string data = "synthetic";    // "synthetic" or a dataset path
  std::string strategy = "utility";  // utility | entropy | random | cluster | none
  int rounds = 30;
  int queries_per_round = 0;  // 0: one per user (media), 1 (admissions)
  int eval_every = 1;
  std::vector<std::uint64_t> seeds{0};
  std::string out;
  std::string user_selection = "roundrobin";  // roundrobin | random
  int threads = 1;

  // Population.
  int n_users = 20;
  int n_items = 50;
  int test_items = 10;   // media: held-out items per user
  int true_rank = 3;     // synthetic low-rank world
  double true_scale = 2.0;  // spread of true log-scores

  // Model.
  int dim = 8;
  double learning_rate = 0.05;
  double l2 = 0.01;
  int pretrain_epochs = 50;
  int retrain_epochs = 5;
  int embedding_dim = 16;
  int hidden1 = 32;
  int hidden2 = 16;
  int z_dim = 8;

  // Queries.
  int pretrain_per_user = 5;  // media
  int initial_queries = 5;    // admissions
  int pool_size = 20;
  int mc_samples = 200;
  int eval_samples = 500;
  int finetune_epochs = 5;
  int replay_size = 20;
  int menu_size = 2;
  int top_k = 10;
  int clusters = 8;

  // Rating-vs-comparison study.
  std::vector<double> fractions{0.1, 0.4, 0.8};
  double alpha = 0.1;
  double density = 0.6;
  int comparisons_per_user = 200;

  // Defaults tuned per experiment.
  static ExperimentSpec defaults(const std::string& experiment);

  int effective_queries_per_round() const;
  // Throws SpecError.
  void validate() const;
  nlohmann::json to_json() const;
};

struct MetricRow {
  std::uint64_t seed = 0;
  int round = 0;
  int queries = 0;  // cumulative queries answered (or training size)
  double value = 0.0;
};

struct RoundSummary {
  int round = 0;
  int queries = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  int n = 0;
};

struct ExperimentReport {
  // Rows sorted by (seed, round).
  std::map<std::string, std::vector<MetricRow>> metrics;
  // Original labels of dense ids when the data came from a file; written as
  // user_ids.csv / item_ids.csv.
  std::vector<std::string> user_labels;
  std::vector<std::string> item_labels;

  std::vector<RoundSummary> summarize(const std::string& metric) const;
  double final_mean(const std::string& metric) const;
  // Value at the last recorded round, per seed.
  std::map<std::uint64_t, double> final_values(const std::string& metric) const;
};

ExperimentReport run_experiment(const ExperimentSpec& spec);

// "seed,round,queries,value" rows with round-trip precision.
std::string metric_csv(const std::vector<MetricRow>& rows);

// metrics_<name>.csv per metric, summary_<name>.csv and manifest.json.
void write_report(const ExperimentReport& report, const ExperimentSpec& spec,
                  const std::string& dir);

std::string version_string();

}  // namespace prefrec

#endif  // PREFREC_HARNESS_H_
