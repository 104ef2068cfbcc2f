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

// prefrec command line: experiment runs, data generation and the session
// server.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prefrec/core.h"
#include "prefrec/datasets.h"
#include "prefrec/harness.h"
#include "prefrec/service.h"

namespace {

using prefrec::ExperimentSpec;

// Options are parsed into a scratch spec; only those actually given (on the
// command line or in the config file) override the experiment's defaults.
class SpecBinder {
 public:
  explicit SpecBinder(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* bind(const std::string& flags, T ExperimentSpec::*field,
                    const std::string& help) {
    CLI::Option* opt = app_->add_option(flags, scratch_.*field, help);
    copies_.push_back([opt, field](ExperimentSpec& dst, const ExperimentSpec& src) {
      if (opt->count() > 0) dst.*field = src.*field;
    });
    return opt;
  }

  ExperimentSpec resolve() const {
    ExperimentSpec spec = ExperimentSpec::defaults(scratch_.experiment);
    for (const auto& copy : copies_) copy(spec, scratch_);
    return spec;
  }

 private:
  CLI::App* app_;
  ExperimentSpec scratch_;
  std::vector<std::function<void(ExperimentSpec&, const ExperimentSpec&)>> copies_;
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw prefrec::DataError("cannot write " + path);
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Preference learning from pairwise comparisons"};
  app.require_subcommand(1);
  app.set_version_flag("--version", prefrec::version_string());
  app.set_config("--config", "", "TOML/INI file; [run] and [serve] sections hold subcommand options, flags win");

  // run ---------------------------------------------------------------------
  CLI::App* run = app.add_subcommand("run", "Run an experiment and write metric CSVs");
  SpecBinder b(run);
  b.bind("--experiment", &ExperimentSpec::experiment, "media | admissions | appendix")
      ->required()
      ->check(CLI::IsMember({"media", "admissions", "appendix"}));
  b.bind("--data", &ExperimentSpec::data, "Dataset path or 'synthetic'");
  b.bind("--strategy", &ExperimentSpec::strategy, "utility | entropy | random | cluster | none");
  b.bind("--rounds", &ExperimentSpec::rounds, "Query rounds");
  b.bind("--queries-per-round", &ExperimentSpec::queries_per_round,
         "Queries per round (0: one per user for media, 1 for admissions)");
  b.bind("--eval-every", &ExperimentSpec::eval_every, "Record metrics every N rounds");
  b.bind("--seeds", &ExperimentSpec::seeds, "Comma-separated seeds")->delimiter(',');
  b.bind("--out", &ExperimentSpec::out, "Output directory")->required();
  b.bind("--user-selection", &ExperimentSpec::user_selection, "roundrobin | random");
  b.bind("--threads", &ExperimentSpec::threads, "Seeds run in parallel on this many threads");
  b.bind("--users", &ExperimentSpec::n_users, "Number of users");
  b.bind("--items", &ExperimentSpec::n_items, "Number of items (candidates for admissions)");
  b.bind("--test-items", &ExperimentSpec::test_items, "Held-out items per user (media)");
  b.bind("--true-rank", &ExperimentSpec::true_rank, "Rank of the synthetic world / shadow model");
  b.bind("--true-scale", &ExperimentSpec::true_scale, "Spread of synthetic true log-scores");
  b.bind("--dim", &ExperimentSpec::dim, "Matrix factorization latent dimension");
  b.bind("--learning-rate", &ExperimentSpec::learning_rate, "SGD learning rate");
  b.bind("--l2", &ExperimentSpec::l2, "L2 regularization");
  b.bind("--pretrain-epochs", &ExperimentSpec::pretrain_epochs, "Epochs of initial training");
  b.bind("--retrain-epochs", &ExperimentSpec::retrain_epochs, "Epochs of fine-tuning per round");
  b.bind("--embedding-dim", &ExperimentSpec::embedding_dim, "Neural embedding size");
  b.bind("--hidden1", &ExperimentSpec::hidden1, "Neural first hidden layer width");
  b.bind("--hidden2", &ExperimentSpec::hidden2, "Neural second hidden layer width");
  b.bind("--z-dim", &ExperimentSpec::z_dim, "Epistemic noise dimension");
  b.bind("--pretrain-per-user", &ExperimentSpec::pretrain_per_user, "Initial comparisons per user (media)");
  b.bind("--initial-queries", &ExperimentSpec::initial_queries, "Initial random comparisons (admissions)");
  b.bind("--pool-size", &ExperimentSpec::pool_size, "Candidate pairs per query");
  b.bind("--mc-samples", &ExperimentSpec::mc_samples, "Sampled rankings per utility estimate");
  b.bind("--eval-samples", &ExperimentSpec::eval_samples, "Sampled rankings for evaluation menus");
  b.bind("--finetune-epochs", &ExperimentSpec::finetune_epochs, "Epochs of hypothetical fine-tuning");
  b.bind("--replay-size", &ExperimentSpec::replay_size, "Replayed comparisons per fine-tune");
  b.bind("--menu-size", &ExperimentSpec::menu_size, "Recommended menu size (media)");
  b.bind("--top-k", &ExperimentSpec::top_k, "Top-k cutoff (admissions)");
  b.bind("--clusters", &ExperimentSpec::clusters, "K-Means clusters for the cluster strategy");
  b.bind("--fractions", &ExperimentSpec::fractions, "Comma-separated train fractions (appendix)")
      ->delimiter(',');
  b.bind("--alpha", &ExperimentSpec::alpha, "Laplace smoothing constant");
  b.bind("--density", &ExperimentSpec::density, "Observed rating density (synthetic appendix)");
  b.bind("--comparisons-per-user", &ExperimentSpec::comparisons_per_user,
         "Cap on training comparisons per user (appendix)");

  // gen-data ----------------------------------------------------------------
  CLI::App* gen = app.add_subcommand("gen-data", "Write a synthetic dataset");
  std::string gen_kind = "admissions";
  std::string gen_out;
  int gen_n = 100;
  int gen_users = 30;
  int gen_items = 40;
  std::uint64_t gen_seed = 2024;
  gen->add_option("--kind", gen_kind, "admissions | ratings")
      ->check(CLI::IsMember({"admissions", "ratings"}));
  gen->add_option("--n", gen_n, "Applicants (admissions)");
  gen->add_option("--users", gen_users, "Users (ratings)");
  gen->add_option("--items", gen_items, "Items (ratings)");
  gen->add_option("--seed", gen_seed, "Seed");
  gen->add_option("--out", gen_out, "Output file")->required();

  // serve -------------------------------------------------------------------
  CLI::App* serve = app.add_subcommand("serve", "Serve elicitation sessions over HTTP");
  prefrec::ServerOptions server = prefrec::ServerOptions::from_env();
  serve->add_option("--host", server.host, "Bind address (env PREFREC_HOST)");
  serve->add_option("--port", server.port, "Port (env PREFREC_PORT)");
  serve->add_option("--data-dir", server.data_dir, "Session log directory (env PREFREC_DATA_DIR)");
  serve->add_option("--static-dir", server.static_dir, "Serve static files from here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const ExperimentSpec spec = b.resolve();
      const prefrec::ExperimentReport report = prefrec::run_experiment(spec);
      prefrec::write_report(report, spec, spec.out);
      for (const auto& [name, rows] : report.metrics) {
        const auto summary = report.summarize(name);
        std::cout << name << ": final mean " << summary.back().mean << " (se "
                  << summary.back().stderr_ << ", n=" << summary.back().n << ")\n";
      }
    } else if (*gen) {
      if (gen_kind == "admissions") {
        write_file(gen_out, prefrec::generate_admissions_csv(gen_n, gen_seed));
      } else {
        const auto ds = prefrec::generate_synthetic_ratings(gen_users, gen_items, 3, 0.6, gen_seed);
        std::string text;
        for (const auto& r : ds.ratings) {
          text += ds.users.label(r.user) + "\t" + ds.items.label(r.item) + "\t" +
                  std::to_string(static_cast<int>(r.rating)) + "\t" + std::to_string(r.timestamp) + "\n";
        }
        write_file(gen_out, text);
      }
    } else if (*serve) {
      return prefrec::serve_http(server);
    }
  } catch (const prefrec::SpecError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return 2;
  } catch (const prefrec::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
