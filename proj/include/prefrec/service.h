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

#ifndef PREFREC_SERVICE_H_
#define PREFREC_SERVICE_H_

// Interactive elicitation sessions: serve the utility-maximizing query,
// take the answer, fine-tune, report the current best menu. Sessions persist
// as append-only JSON-lines answer logs and are rebuilt by replay.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "prefrec/models.h"
#include "prefrec/sampler.h"
#include "prefrec/utility.h"

namespace httplib {
class Server;
}

namespace prefrec {

// HTTP 400 / 404 / 409.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CatalogItem {
  nlohmann::json id;  // caller's identifier, echoed back verbatim
  std::string label;
  std::vector<double> features;
};

struct SessionConfig {
  std::string utility = "admissions";  // media | admissions
  int k = 1;                           // menu size; also the admissions cutoff
  int mc_samples = 200;
  std::uint64_t seed = 0;
  int pool_size = 20;
  int finetune_epochs = 5;
  int replay_size = 20;
  int dim = 4;
  double learning_rate = 0.1;
  double l2 = 0.01;
  // Upper bound on query selection time; 0 means evaluate the whole pool.
  int latency_budget_ms = 0;

  // Accepts {utility, k, mc:{R, seed}, sampler:{pool_size, finetune_epochs,
  // replay_size, latency_budget_ms}, model:{dim, learning_rate, l2}}.
  static SessionConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate(int n_items) const;  // throws ValidationError
};

std::vector<CatalogItem> catalog_from_json(const nlohmann::json& items);
nlohmann::json catalog_to_json(const std::vector<CatalogItem>& catalog);

struct QueryTicket {
  std::string query_id;
  QueryPair pair;
};

struct AnswerRecord {
  std::string query_id;
  QueryPair pair;
  ItemId winner = 0;
};

class Session {
 public:
  Session(std::string id, std::vector<CatalogItem> catalog, SessionConfig config);

  const std::string& id() const { return id_; }
  const std::vector<CatalogItem>& catalog() const { return catalog_; }
  const SessionConfig& config() const { return config_; }
  const std::vector<AnswerRecord>& answers() const { return answers_; }
  const ScoreModel& model() const { return *model_; }
  const std::optional<QueryTicket>& outstanding() const { return ticket_; }

  // nullopt when every pair has been asked. Throws ConflictError while a
  // ticket is outstanding.
  std::optional<QueryTicket> next_query();

  // Applies the answer to the outstanding ticket. `winner` is a catalog id.
  nlohmann::json submit_answer(const std::string& query_id,
                               const nlohmann::json& winner);

  // Re-applies a logged answer without ticket checks (used by replay).
  void apply(const AnswerRecord& answer);

  nlohmann::json summary() const;
  long long remaining_pairs() const;

  // Rebuilds a session from its answer log.
  static std::unique_ptr<Session> replay(std::string id,
                                         std::vector<CatalogItem> catalog,
                                         SessionConfig config,
                                         const std::vector<AnswerRecord>& log);

 private:
  void refresh_menu();
  nlohmann::json item_ref(ItemId i) const;

  std::string id_;
  std::vector<CatalogItem> catalog_;
  SessionConfig config_;
  std::unique_ptr<UtilityFunction> utility_;
  std::unique_ptr<MatrixFactorizationModel> model_;
  std::vector<ComparisonTriplet> history_;
  std::vector<AnswerRecord> answers_;
  PairRegistry queried_;
  std::optional<QueryTicket> ticket_;
  int tickets_issued_ = 0;
  std::vector<ItemId> menu_;
  double expected_utility_ = 0.0;
};

// Thread-safe registry of sessions. Mutations of one session are serialized;
// get_state reads a snapshot published after every mutation and never waits
// on query selection.
class SessionManager {
 public:
  // With a non-empty data_dir, sessions are logged there and existing logs
  // are replayed on construction.
  explicit SessionManager(std::string data_dir = "");

  nlohmann::json create(const nlohmann::json& body);
  nlohmann::json next_query(const std::string& id);
  nlohmann::json submit_answer(const std::string& id, const nlohmann::json& body);
  nlohmann::json get_state(const std::string& id) const;

  // Model parameters of a session (for replay checks).
  std::vector<double> parameters(const std::string& id) const;
  std::size_t size() const;

 private:
  struct Entry {
    std::mutex mutex;
    std::unique_ptr<Session> session;
    mutable std::mutex snapshot_mutex;
    std::shared_ptr<const nlohmann::json> snapshot;
  };

  std::shared_ptr<Entry> find(const std::string& id) const;
  void publish(Entry& entry);
  void append_log(const std::string& id, const nlohmann::json& record) const;
  void load_logs();
  std::string new_id();

  std::string data_dir_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t id_counter_ = 0;
};

// Registers the JSON API routes on `server`.
void register_routes(httplib::Server& server, SessionManager& manager);

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir;
  std::string static_dir;

  // PREFREC_HOST, PREFREC_PORT, PREFREC_DATA_DIR.
  static ServerOptions from_env();
};

// Blocks serving HTTP. Returns a process exit code.
int serve_http(const ServerOptions& options);

}  // namespace prefrec

#endif  // PREFREC_SERVICE_H_
