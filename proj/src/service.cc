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

#include "prefrec/service.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "httplib.h"
#include "prefrec/plackett.h"

namespace prefrec {
namespace {

using nlohmann::json;

constexpr std::uint64_t kUserInitStream = 1;
constexpr std::uint64_t kAnswerStream = 2;
constexpr std::uint64_t kQueryStream = 3;
constexpr std::uint64_t kMenuStream = 4;

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + key + "' has the wrong type");
  }
}

std::string pair_key(const QueryPair& p) {
  return std::to_string(p.i) + "-" + std::to_string(p.j);
}

}  // namespace

// ---------------------------------------------------------------------------
// Config and catalog

SessionConfig SessionConfig::from_json(const json& j) {
  if (!j.is_null() && !j.is_object()) throw ValidationError("config must be an object");
  SessionConfig c;
  c.utility = get_or<std::string>(j, "utility", c.utility);
  c.k = get_or<int>(j, "k", c.k);
  const json mc = j.is_object() && j.contains("mc") ? j.at("mc") : json::object();
  c.mc_samples = get_or<int>(mc, "R", c.mc_samples);
  c.seed = get_or<std::uint64_t>(mc, "seed", c.seed);
  const json sampler = j.is_object() && j.contains("sampler") ? j.at("sampler") : json::object();
  c.pool_size = get_or<int>(sampler, "pool_size", c.pool_size);
  c.finetune_epochs = get_or<int>(sampler, "finetune_epochs", c.finetune_epochs);
  c.replay_size = get_or<int>(sampler, "replay_size", c.replay_size);
  c.latency_budget_ms = get_or<int>(sampler, "latency_budget_ms", c.latency_budget_ms);
  const json model = j.is_object() && j.contains("model") ? j.at("model") : json::object();
  c.dim = get_or<int>(model, "dim", c.dim);
  c.learning_rate = get_or<double>(model, "learning_rate", c.learning_rate);
  c.l2 = get_or<double>(model, "l2", c.l2);
  return c;
}

json SessionConfig::to_json() const {
  return {{"utility", utility},
          {"k", k},
          {"mc", {{"R", mc_samples}, {"seed", seed}}},
          {"sampler",
           {{"pool_size", pool_size},
            {"finetune_epochs", finetune_epochs},
            {"replay_size", replay_size},
            {"latency_budget_ms", latency_budget_ms}}},
          {"model", {{"dim", dim}, {"learning_rate", learning_rate}, {"l2", l2}}}};
}

void SessionConfig::validate(int n_items) const {
  if (utility != "media" && utility != "admissions") {
    throw ValidationError("utility must be 'media' or 'admissions'");
  }
  if (k < 1 || k > n_items) {
    throw ValidationError("k must be between 1 and the catalog size (" +
                          std::to_string(n_items) + ")");
  }
  if (mc_samples < 1) throw ValidationError("mc.R must be >= 1");
  if (pool_size < 1) throw ValidationError("sampler.pool_size must be >= 1");
  if (finetune_epochs < 0) throw ValidationError("sampler.finetune_epochs must be >= 0");
  if (replay_size < 0) throw ValidationError("sampler.replay_size must be >= 0");
  if (latency_budget_ms < 0) throw ValidationError("sampler.latency_budget_ms must be >= 0");
  if (dim < 1) throw ValidationError("model.dim must be >= 1");
  if (!(learning_rate > 0.0) || !(l2 >= 0.0)) {
    throw ValidationError("model.learning_rate must be > 0 and model.l2 >= 0");
  }
}

std::vector<CatalogItem> catalog_from_json(const json& items) {
  if (!items.is_array()) throw ValidationError("items must be an array");
  std::vector<CatalogItem> out;
  std::vector<json> seen;
  int feature_dim = -1;
  for (const auto& it : items) {
    if (!it.is_object() || !it.contains("id")) throw ValidationError("every item needs an id");
    CatalogItem c;
    c.id = it.at("id");
    if (!c.id.is_string() && !c.id.is_number_integer()) {
      throw ValidationError("item ids must be strings or integers");
    }
    if (std::find(seen.begin(), seen.end(), c.id) != seen.end()) {
      throw ValidationError("duplicate item id " + c.id.dump());
    }
    seen.push_back(c.id);
    c.label = get_or<std::string>(it, "label", c.id.is_string() ? c.id.get<std::string>() : c.id.dump());
    c.features = get_or<std::vector<double>>(it, "features", {});
    for (double f : c.features) {
      if (!std::isfinite(f)) throw ValidationError("features must be finite");
    }
    if (!c.features.empty()) {
      if (feature_dim >= 0 && static_cast<int>(c.features.size()) != feature_dim) {
        throw ValidationError("items have feature vectors of different lengths");
      }
      feature_dim = static_cast<int>(c.features.size());
    }
    out.push_back(std::move(c));
  }
  if (out.size() < 2) throw ValidationError("catalog needs at least 2 items");
  return out;
}

json catalog_to_json(const std::vector<CatalogItem>& catalog) {
  json out = json::array();
  for (const auto& c : catalog) {
    json item = {{"id", c.id}, {"label", c.label}};
    if (!c.features.empty()) item["features"] = c.features;
    out.push_back(item);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Session

Session::Session(std::string id, std::vector<CatalogItem> catalog, SessionConfig config)
    : id_(std::move(id)), catalog_(std::move(catalog)), config_(config) {
  const int n = static_cast<int>(catalog_.size());
  if (n < 2) throw ValidationError("catalog needs at least 2 items");
  config_.validate(n);
  utility_ = make_utility(config_.utility, n, config_.k);
  // Item factors start at zero so every item scores 0: a uniform prior. User
  // factors are random so the first comparison moves the items apart.
  model_ = std::make_unique<MatrixFactorizationModel>(1, n, config_.dim);
  model_->set_seed(config_.seed);
  Rng init = Rng(config_.seed).stream({kUserInitStream});
  for (double& x : model_->user_factors(0)) {
    x = init.normal(0.0, 1.0 / std::sqrt(static_cast<double>(config_.dim)));
  }
  refresh_menu();
}

long long Session::remaining_pairs() const {
  const long long n = static_cast<long long>(catalog_.size());
  return n * (n - 1) / 2 - static_cast<long long>(queried_.size());
}

json Session::item_ref(ItemId i) const {
  const auto& c = catalog_[static_cast<std::size_t>(i)];
  return {{"id", c.id}, {"label", c.label}};
}

std::optional<QueryTicket> Session::next_query() {
  if (ticket_) throw ConflictError("query " + ticket_->query_id + " is still unanswered");
  if (remaining_pairs() <= 0) return std::nullopt;

  const int n = static_cast<int>(catalog_.size());
  std::vector<ItemId> items(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) items[static_cast<std::size_t>(i)] = i;
  Rng pool_rng = Rng(config_.seed).stream({kQueryStream, static_cast<std::uint64_t>(tickets_issued_)});
  const std::vector<QueryPair> pool = draw_pool(0, items, queried_, config_.pool_size, pool_rng);

  SamplerConfig sc;
  sc.pool_size = config_.pool_size;
  sc.mc.samples = config_.mc_samples;
  sc.finetune.learning_rate = config_.learning_rate;
  sc.finetune.l2_lambda = config_.l2;
  sc.finetune.epochs = config_.finetune_epochs;
  sc.replay_size = config_.replay_size;
  sc.menu_size = config_.k;
  sc.seed = Rng(config_.seed).stream({kQueryStream, static_cast<std::uint64_t>(tickets_issued_), 1}).seed();
  const GainContext ctx{model_.get(), 0, {}, utility_.get(), history_};

  QueryPair best = pool.front();
  if (pool.size() > 1) {
    // Every pair is scored against the same seeds, so scoring the pool in
    // chunks gives the same numbers as scoring it at once. Under a latency
    // budget we stop after the chunk that exhausts it.
    const auto start = std::chrono::steady_clock::now();
    const std::size_t chunk = config_.latency_budget_ms > 0 ? 1 : pool.size();
    std::optional<PairEvaluation> top;
    for (std::size_t at = 0; at < pool.size(); at += chunk) {
      const std::size_t end = std::min(pool.size(), at + chunk);
      const std::span<const QueryPair> part(pool.data() + at, end - at);
      for (const auto& e : evaluate_utility_gain(ctx, part, sc)) {
        if (!top || e.score > top->score || (e.score == top->score && e.pair < top->pair)) {
          top = e;
        }
      }
      if (config_.latency_budget_ms > 0) {
        const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        if (elapsed.count() >= config_.latency_budget_ms) break;
      }
    }
    best = top->pair;
  }
  ++tickets_issued_;
  ticket_ = QueryTicket{"q" + std::to_string(tickets_issued_), best};
  return ticket_;
}

void Session::apply(const AnswerRecord& answer) {
  const int n = static_cast<int>(catalog_.size());
  if (answer.pair.i < 0 || answer.pair.j >= n) throw ValidationError("pair outside the catalog");
  if (answer.winner != answer.pair.i && answer.winner != answer.pair.j) {
    throw ValidationError("winner is not part of the pair");
  }
  if (queried_.contains(answer.pair)) throw ValidationError("pair " + pair_key(answer.pair) + " was already answered");
  const ItemId loser = answer.winner == answer.pair.i ? answer.pair.j : answer.pair.i;
  const ComparisonTriplet t(0, answer.winner, loser);

  // Fine-tune on the new answer plus replayed earlier answers. Every random
  // choice derives from (seed, answer index), so a log replays exactly.
  const auto index = static_cast<std::uint64_t>(answers_.size());
  const Rng root = Rng(config_.seed).stream({kAnswerStream, index});
  Rng replay_rng = root.stream({1});
  std::vector<ComparisonTriplet> batch = sample_replay(history_, config_.replay_size, replay_rng);
  batch.push_back(t);
  TrainConfig cfg;
  cfg.learning_rate = config_.learning_rate;
  cfg.l2_lambda = config_.l2;
  cfg.epochs = config_.finetune_epochs;
  cfg.seed = root.stream({2}).seed();
  train_pairwise(*model_, batch, cfg);

  history_.push_back(t);
  answers_.push_back(answer);
  queried_.insert(answer.pair);
  refresh_menu();
}

json Session::submit_answer(const std::string& query_id, const json& winner) {
  if (!ticket_) throw ConflictError("no query is outstanding");
  if (query_id != ticket_->query_id) {
    throw ConflictError("query " + query_id + " is not the outstanding query " + ticket_->query_id);
  }
  const QueryPair pair = ticket_->pair;
  ItemId w = -1;
  if (catalog_[static_cast<std::size_t>(pair.i)].id == winner) w = pair.i;
  if (catalog_[static_cast<std::size_t>(pair.j)].id == winner) w = pair.j;
  if (w < 0) throw ValidationError("winner " + winner.dump() + " is not one of the queried items");
  apply(AnswerRecord{query_id, pair, w});
  ticket_.reset();
  json menu = json::array();
  for (ItemId i : menu_) menu.push_back(catalog_[static_cast<std::size_t>(i)].id);
  return {{"menu", menu},
          {"expected_utility", expected_utility_},
          {"queries_so_far", answers_.size()}};
}

void Session::refresh_menu() {
  const ScoreVector theta = ScoreVector::from_log_scores(model_->user_scores(0));
  McConfig mc;
  mc.samples = config_.mc_samples;
  mc.seed = Rng(config_.seed).stream({kMenuStream}).seed();
  // Small catalogs are scored exactly so the menu does not flicker with
  // sampling noise.
  if (theta.size() <= kMaxExactItems) {
    const Menu menu = best_menu_exact(theta, *utility_, config_.k);
    menu_ = menu.items();
    expected_utility_ = exact_expected_utility(menu, theta, *utility_);
    return;
  }
  const Menu menu = best_menu(theta, *utility_, config_.k, mc);
  menu_ = menu.items();
  expected_utility_ = expected_utility_mc(menu, theta, *utility_, mc);
}

json Session::summary() const {
  json history = json::array();
  for (const auto& a : answers_) {
    history.push_back({{"query_id", a.query_id},
                       {"pair", {item_ref(a.pair.i), item_ref(a.pair.j)}},
                       {"winner", catalog_[static_cast<std::size_t>(a.winner)].id}});
  }
  json menu = json::array();
  for (ItemId i : menu_) menu.push_back(catalog_[static_cast<std::size_t>(i)].id);
  json out = {{"session_id", id_},
              {"items", catalog_to_json(catalog_)},
              {"config", config_.to_json()},
              {"history", history},
              {"menu", menu},
              {"expected_utility", expected_utility_},
              {"queries_so_far", answers_.size()},
              {"remaining_pairs", remaining_pairs()},
              {"complete", remaining_pairs() == 0}};
  if (ticket_) {
    out["outstanding"] = {{"query_id", ticket_->query_id},
                          {"pair", {item_ref(ticket_->pair.i), item_ref(ticket_->pair.j)}}};
  } else {
    out["outstanding"] = nullptr;
  }
  return out;
}

std::unique_ptr<Session> Session::replay(std::string id, std::vector<CatalogItem> catalog,
                                         SessionConfig config,
                                         const std::vector<AnswerRecord>& log) {
  auto s = std::make_unique<Session>(std::move(id), std::move(catalog), config);
  for (const auto& a : log) s->apply(a);
  s->tickets_issued_ = static_cast<int>(log.size());
  return s;
}

// ---------------------------------------------------------------------------
// Manager

SessionManager::SessionManager(std::string data_dir) : data_dir_(std::move(data_dir)) {
  if (!data_dir_.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(data_dir_, ec);
    if (ec) throw DataError("cannot create data directory " + data_dir_ + ": " + ec.message());
    load_logs();
  }
}

std::string SessionManager::new_id() {
  static thread_local std::mt19937_64 gen{std::random_device{}()};
  char buf[32];
  std::snprintf(buf, sizeof buf, "s%06llu%08llx",
                static_cast<unsigned long long>(++id_counter_),
                static_cast<unsigned long long>(gen() & 0xffffffffULL));
  return buf;
}

std::shared_ptr<SessionManager::Entry> SessionManager::find(const std::string& id) const {
  std::shared_lock lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session " + id);
  return it->second;
}

void SessionManager::publish(Entry& entry) {
  auto snap = std::make_shared<const json>(entry.session->summary());
  std::lock_guard lock(entry.snapshot_mutex);
  entry.snapshot = std::move(snap);
}

void SessionManager::append_log(const std::string& id, const json& record) const {
  if (data_dir_.empty()) return;
  const auto path = std::filesystem::path(data_dir_) / (id + ".jsonl");
  std::ofstream f(path, std::ios::app | std::ios::binary);
  if (!f) throw DataError("cannot append to " + path.string());
  f << record.dump() << "\n";
  f.flush();
}

void SessionManager::load_logs() {
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(data_dir_)) {
    if (e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& path : files) {
    std::ifstream f(path);
    std::string line;
    std::optional<json> header;
    std::vector<AnswerRecord> log;
    int line_no = 0;
    while (std::getline(f, line)) {
      ++line_no;
      if (line.empty()) continue;
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::exception&) {
        throw DataError(path.string() + ": malformed record at line " + std::to_string(line_no));
      }
      const std::string type = rec.value("type", "");
      if (type == "session") {
        header = rec;
      } else if (type == "answer") {
        log.push_back(AnswerRecord{rec.at("query_id").get<std::string>(),
                                   QueryPair(0, rec.at("i").get<ItemId>(), rec.at("j").get<ItemId>()),
                                   rec.at("winner").get<ItemId>()});
      }
    }
    if (!header) throw DataError(path.string() + ": missing session header");
    const std::string id = header->at("session_id").get<std::string>();
    auto entry = std::make_shared<Entry>();
    entry->session = Session::replay(id, catalog_from_json(header->at("items")),
                                     SessionConfig::from_json(header->at("config")), log);
    publish(*entry);
    sessions_[id] = entry;
    ++id_counter_;
  }
}

json SessionManager::create(const json& body) {
  if (!body.is_object()) throw ValidationError("body must be a JSON object");
  if (!body.contains("items")) throw ValidationError("items are required");
  auto catalog = catalog_from_json(body.at("items"));
  const SessionConfig config = SessionConfig::from_json(body.value("config", json::object()));
  config.validate(static_cast<int>(catalog.size()));

  auto entry = std::make_shared<Entry>();
  std::string id;
  {
    std::unique_lock lock(mutex_);
    do {
      id = new_id();
    } while (sessions_.contains(id));
    sessions_[id] = entry;
  }
  std::lock_guard session_lock(entry->mutex);
  try {
    entry->session = std::make_unique<Session>(id, std::move(catalog), config);
  } catch (...) {
    std::unique_lock lock(mutex_);
    sessions_.erase(id);
    throw;
  }
  append_log(id, {{"type", "session"},
                  {"session_id", id},
                  {"items", catalog_to_json(entry->session->catalog())},
                  {"config", config.to_json()}});
  publish(*entry);
  return {{"session_id", id}};
}

json SessionManager::next_query(const std::string& id) {
  auto entry = find(id);
  std::unique_lock lock(entry->mutex, std::try_to_lock);
  // A concurrent caller holding the lock is selecting the query; the ticket
  // protocol allows only one of them to succeed.
  if (!lock.owns_lock()) throw ConflictError("a query for this session is being selected");
  if (!entry->session) throw NotFoundError("unknown session " + id);
  const auto ticket = entry->session->next_query();
  publish(*entry);
  if (!ticket) return {{"status", "complete"}};
  const auto& catalog = entry->session->catalog();
  auto ref = [&](ItemId i) {
    return json{{"id", catalog[static_cast<std::size_t>(i)].id},
                {"label", catalog[static_cast<std::size_t>(i)].label}};
  };
  return {{"query_id", ticket->query_id}, {"pair", {ref(ticket->pair.i), ref(ticket->pair.j)}}};
}

json SessionManager::submit_answer(const std::string& id, const json& body) {
  if (!body.is_object()) throw ValidationError("body must be a JSON object");
  if (!body.contains("query_id") || !body.at("query_id").is_string()) {
    throw ValidationError("query_id (string) is required");
  }
  if (!body.contains("winner")) throw ValidationError("winner is required");
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  if (!entry->session) throw NotFoundError("unknown session " + id);
  json out = entry->session->submit_answer(body.at("query_id").get<std::string>(), body.at("winner"));
  const AnswerRecord& a = entry->session->answers().back();
  append_log(id, {{"type", "answer"},
                  {"query_id", a.query_id},
                  {"i", a.pair.i},
                  {"j", a.pair.j},
                  {"winner", a.winner}});
  publish(*entry);
  return out;
}

json SessionManager::get_state(const std::string& id) const {
  auto entry = find(id);
  std::lock_guard lock(entry->snapshot_mutex);
  if (!entry->snapshot) throw NotFoundError("unknown session " + id);
  return *entry->snapshot;
}

std::vector<double> SessionManager::parameters(const std::string& id) const {
  auto entry = find(id);
  std::lock_guard lock(entry->mutex);
  return entry->session->model().parameters();
}

std::size_t SessionManager::size() const {
  std::shared_lock lock(mutex_);
  return sessions_.size();
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename F>
void guarded(httplib::Response& res, F&& f) {
  try {
    send_json(res, 200, f());
  } catch (const ValidationError& e) {
    send_json(res, 400, {{"error", "validation"}, {"detail", e.what()}});
  } catch (const NotFoundError& e) {
    send_json(res, 404, {{"error", "not_found"}, {"detail", e.what()}});
  } catch (const ConflictError& e) {
    send_json(res, 409, {{"error", "conflict"}, {"detail", e.what()}});
  } catch (const json::exception& e) {
    send_json(res, 400, {{"error", "validation"}, {"detail", e.what()}});
  } catch (const std::exception& e) {
    send_json(res, 500, {{"error", "internal"}, {"detail", e.what()}});
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception&) {
    throw ValidationError("request body is not valid JSON");
  }
}

}  // namespace

void register_routes(httplib::Server& server, SessionManager& manager) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/sessions.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
  });
  server.Post("/sessions", [&manager](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return manager.create(parse_body(req)); });
  });
  server.Post(R"(/sessions/([^/]+)/query)",
              [&manager](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] { return manager.next_query(req.matches[1]); });
              });
  server.Post(R"(/sessions/([^/]+)/answer)",
              [&manager](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] { return manager.submit_answer(req.matches[1], parse_body(req)); });
              });
  server.Get(R"(/sessions/([^/]+))", [&manager](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return manager.get_state(req.matches[1]); });
  });
}

ServerOptions ServerOptions::from_env() {
  ServerOptions o;
  if (const char* h = std::getenv("PREFREC_HOST")) o.host = h;
  if (const char* p = std::getenv("PREFREC_PORT")) o.port = std::atoi(p);
  if (const char* d = std::getenv("PREFREC_DATA_DIR")) o.data_dir = d;
  return o;
}

int serve_http(const ServerOptions& options) {
  SessionManager manager(options.data_dir);
  httplib::Server server;
  register_routes(server, manager);
  if (!options.static_dir.empty() && !server.set_mount_point("/", options.static_dir)) {
    std::cerr << "static directory not found: " << options.static_dir << "\n";
    return 3;
  }
  std::cerr << "listening on " << options.host << ":" << options.port << " ("
            << manager.size() << " sessions restored)\n";
  if (!server.listen(options.host, options.port)) {
    std::cerr << "cannot bind " << options.host << ":" << options.port << "\n";
    return 1;
  }
  return 0;
}

}  // namespace prefrec
