// Copyright 2026 The trajal Authors
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

#pragma once

#include "trajal/al/journal.hpp"
#include "trajal/al/session.hpp"
#include "trajal/core/embedding.hpp"
#include "trajal/core/io.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <regex>
#include <string>

/**
 * @file registry.hpp
 *
 * Human-oracle sessions behind the annotation service. Every session owns a journal
 * (`<id>.jsonl`) and a small metadata file (`<id>.meta.json`) naming its dataset and
 * embedding; both live in the journal directory, and on startup every session found there is
 * rebuilt by replaying its journal.
 *
 * Mutations of one session are serialized by its mutex. Reads are served from an immutable
 * snapshot that is swapped after each mutation, so polling never waits on a retrain.
 */

namespace trajal::service
{

struct ServiceConfig
{
  std::string data_dir = ".";
  std::string journal_dir = "journals";
  bool fsync = false;
};

/// Error carrying the HTTP status and extra fields of the response body.
class ApiError : public std::runtime_error
{
public:
  ApiError(int status, std::string code, const std::string & detail, Json extra = Json::object())
  : std::runtime_error(detail), status_(status), code_(std::move(code)), extra_(std::move(extra))
  {
  }

  int status() const noexcept { return status_; }

  Json body() const
  {
    Json b = extra_;
    b["error"] = code_;
    b["detail"] = what();
    return b;
  }

private:
  int status_;
  std::string code_;
  Json extra_;
};

inline int http_status(ErrorKind k) noexcept
{
  switch (k) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::Infeasible:
      return 422;
    case ErrorKind::NotFound:
      return 404;
    case ErrorKind::Conflict:
      return 409;
    case ErrorKind::Timeout:
      return 504;
    case ErrorKind::Numerical:
    case ErrorKind::Io:
      return 500;
  }
  return 500;
}

/// Session fields a request may set; everything else keeps its default.
inline al::SessionConfig config_from_request(const Json & j, EmbeddingTag tag)
{
  al::SessionConfig c;
  c.embedding = tag;
  if (j.contains("classifier")) {
    const auto & v = j.at("classifier");
    if (v.is_string()) {
      const auto t = classify::parse_classifier_tag(v.get<std::string>());
      if (!t) {
        fail(ErrorKind::InvalidArgument, "unknown classifier " + v.get<std::string>());
      }
      c.classifier.tag = *t;
    } else {
      c.classifier = al::classifier_from_json(v);
    }
  }
  if (j.contains("strategy")) {
    const auto s = al::parse_strategy(j.at("strategy").get<std::string>());
    if (!s) {
      fail(ErrorKind::InvalidArgument, "unknown strategy " + j.at("strategy").get<std::string>());
    }
    c.strategy = *s;
  }
  if (j.contains("mode")) {
    const auto m = al::parse_session_mode(j.at("mode").get<std::string>());
    if (!m) {
      fail(ErrorKind::InvalidArgument, "unknown mode " + j.at("mode").get<std::string>());
    }
    c.mode = *m;
  }
  c.budget = j.value("budget", c.budget);
  c.seed = j.value("seed", c.seed);
  c.batch_size = j.value("batch_size", std::size_t{1});
  if (c.batch_size != 1) {
    fail(ErrorKind::InvalidArgument, "human-oracle sessions query one trajectory at a time (batch_size must be 1)");
  }
  return c;
}

class Registry
{
public:
  explicit Registry(ServiceConfig config) : config_(std::move(config))
  {
    std::error_code ec;
    std::filesystem::create_directories(config_.journal_dir, ec);
    if (ec) {
      fail(ErrorKind::Io, "cannot create journal directory " + config_.journal_dir);
    }
  }

  const ServiceConfig & config() const noexcept { return config_; }

  /// Rebuilds every journaled session. Sessions waiting for a label come back Suspended.
  std::size_t recover()
  {
    std::size_t restored = 0;
    std::vector<std::filesystem::path> metas;
    for (const auto & entry : std::filesystem::directory_iterator(config_.journal_dir)) {
      const auto name = entry.path().filename().string();
      if (name.size() > 10 && name.substr(name.size() - 10) == ".meta.json") {
        metas.push_back(entry.path());
      }
    }
    std::sort(metas.begin(), metas.end());
    for (const auto & meta_path : metas) {
      std::ifstream in(meta_path);
      const auto meta = Json::parse(in);
      const auto id = meta.at("id").get<std::string>();
      const auto events = al::Journal::read(journal_file(id));
      if (events.empty()) {
        // Crashed before the init record: the session was never acknowledged.
        std::filesystem::remove(meta_path);
        std::filesystem::remove(journal_file(id));
        continue;
      }
      auto e = std::make_shared<Entry>();
      e->id = id;
      e->meta = meta;
      const auto config = al::config_from_json(events.front().at("config"));
      auto data = load_data(meta, config.mode);
      e->store = data.first;
      e->journal = std::make_unique<al::Journal>(journal_file(id), config_.fsync);
      al::Journal * j = e->journal.get();
      e->session = std::make_unique<al::Session>(
        al::Session::replay(events, data.second, [j](const Json & ev) { j->append(ev); }));
      e->session->suspend();
      publish(*e);
      std::lock_guard<std::mutex> lock(map_mutex_);
      sessions_[id] = e;
      ++restored;
    }
    return restored;
  }

  /// POST /sessions
  Json create(const Json & body)
  {
    if (!body.is_object()) {
      throw ApiError(400, "bad_request", "request body must be a JSON object");
    }
    const auto id = body.value("id", "");
    static const std::regex valid_id("[A-Za-z0-9_-]{1,64}");
    if (!std::regex_match(id, valid_id)) {
      throw ApiError(400, "bad_request", "session id must match [A-Za-z0-9_-]{1,64}");
    }
    if (!body.contains("dataset") || !body.contains("embedding")) {
      throw ApiError(400, "bad_request", "fields 'dataset' and 'embedding' are required");
    }
    const Json meta = {{"id", id}, {"dataset", body.at("dataset")}, {"embedding", body.at("embedding")}};

    std::lock_guard<std::mutex> create_lock(create_mutex_);
    if (find(id) || std::filesystem::exists(meta_file(id))) {
      throw ApiError(409, "conflict", "session " + id + " already exists");
    }
    const auto emb_tag = load_embedding_cached(resolve(meta.at("embedding").get<std::string>()))->tag();
    const auto config = config_from_request(body.value("config", Json::object()), emb_tag);
    auto data = load_data(meta, config.mode);

    auto e = std::make_shared<Entry>();
    e->id = id;
    e->meta = meta;
    e->store = data.first;
    {
      const auto tmp = meta_file(id) + ".tmp";
      open_output(tmp) << meta.dump() << '\n';
      std::filesystem::rename(tmp, meta_file(id));
    }
    try {
      std::filesystem::remove(journal_file(id));
      e->journal = std::make_unique<al::Journal>(journal_file(id), config_.fsync);
      al::Journal * j = e->journal.get();
      e->session = std::make_unique<al::Session>(
        config, manifest_cached(resolve(meta.at("dataset").get<std::string>())).partition, data.second,
        [j](const Json & ev) { j->append(ev); });
      e->session->start();
    } catch (...) {
      e->journal.reset();
      std::filesystem::remove(meta_file(id));
      std::filesystem::remove(journal_file(id));
      throw;
    }
    publish(*e);
    std::lock_guard<std::mutex> lock(map_mutex_);
    sessions_[id] = e;
    return snapshot(*e)->handle;
  }

  /// GET /sessions
  Json list() const
  {
    std::vector<std::shared_ptr<Entry>> entries;
    {
      std::lock_guard<std::mutex> lock(map_mutex_);
      for (const auto & [id, e] : sessions_) {
        entries.push_back(e);
      }
    }
    Json out = Json::array();
    for (const auto & e : entries) {
      out.push_back(snapshot(*e)->handle);
    }
    return out;
  }

  /// GET /sessions/{id}
  Json handle(const std::string & id) const { return snapshot(get(id))->handle; }

  /// GET /sessions/{id}/next
  Json next(const std::string & id) const
  {
    const auto s = snapshot(get(id));
    if (s->next.is_null()) {
      const auto status = s->handle.at("status").get<std::string>();
      throw ApiError(409, "conflict", "session is " + status + ", no query pending", {{"status", status}});
    }
    return s->next;
  }

  /// POST /sessions/{id}/labels with {"step", "trajectory_id", "label"}
  Json submit(const std::string & id, const Json & body)
  {
    auto & e = get(id);
    if (!body.is_object() || !body.contains("step") || !body.contains("trajectory_id") || !body.contains("label") ||
        !body["step"].is_number_unsigned() || !body["trajectory_id"].is_number_unsigned() || !body["label"].is_string()) {
      throw ApiError(400, "bad_request", "body must be {\"step\": uint, \"trajectory_id\": uint, \"label\": string}");
    }
    const auto answer = al::parse_answer(body["label"].get<std::string>());
    if (!answer) {
      throw ApiError(422, "invalid_argument", "unknown label " + body["label"].get<std::string>());
    }
    const auto step = body["step"].get<std::size_t>();
    const TrajectoryId tid{body["trajectory_id"].get<std::uint32_t>()};

    std::lock_guard<std::mutex> lock(e.mutex);
    const auto & pending = e.session->pending();
    const bool will_retrain = !pending.empty() && pending.front().step == step && pending.front().id == tid;
    if (will_retrain) {
      auto busy = std::make_shared<Snapshot>(*snapshot(e));
      busy->handle["status"] = "Retraining";
      busy->next = nullptr;
      swap_snapshot(e, busy);
    }
    al::SubmitResult result;
    try {
      result = e.session->submit(step, tid, *answer);
    } catch (...) {
      publish(e);
      throw;
    }
    publish(e);
    Json out = snapshot(e)->handle;
    out["result"] = result == al::SubmitResult::Applied ? "applied" : "duplicate";
    return out;
  }

  /// GET /sessions/{id}/metrics
  Json metrics(const std::string & id) const { return snapshot(get(id))->metrics; }

  /// GET /sessions/{id}/log
  Json log(const std::string & id) const { return snapshot(get(id))->log; }

private:
  struct Snapshot
  {
    Json handle, next, metrics, log;
  };

  struct Entry
  {
    std::string id;
    Json meta;
    std::mutex mutex;  // serializes mutations
    std::unique_ptr<al::Journal> journal;
    std::unique_ptr<al::Session> session;
    std::shared_ptr<const TrajectoryStore> store;
    mutable std::mutex snapshot_mutex;  // guards only the pointer swap
    std::shared_ptr<const Snapshot> snapshot;
  };

  std::string journal_file(const std::string & id) const
  {
    return (std::filesystem::path(config_.journal_dir) / (id + ".jsonl")).string();
  }
  std::string meta_file(const std::string & id) const
  {
    return (std::filesystem::path(config_.journal_dir) / (id + ".meta.json")).string();
  }
  std::string resolve(const std::string & p) const
  {
    const std::filesystem::path path(p);
    return path.is_absolute() ? p : (std::filesystem::path(config_.data_dir) / path).string();
  }

  std::shared_ptr<Entry> find(const std::string & id) const
  {
    std::lock_guard<std::mutex> lock(map_mutex_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  Entry & get(const std::string & id) const
  {
    auto e = find(id);
    if (!e) {
      throw ApiError(404, "not_found", "no session " + id);
    }
    return *e;  // entries are never removed while the registry lives
  }

  static std::shared_ptr<const Snapshot> snapshot(const Entry & e)
  {
    std::lock_guard<std::mutex> lock(e.snapshot_mutex);
    return e.snapshot;
  }

  static void swap_snapshot(Entry & e, std::shared_ptr<const Snapshot> s)
  {
    std::lock_guard<std::mutex> lock(e.snapshot_mutex);
    e.snapshot = std::move(s);
  }

  void publish(Entry & e) const
  {
    const auto & s = *e.session;
    auto snap = std::make_shared<Snapshot>();
    const auto & cfg = s.config();
    Json pending = nullptr;
    if (!s.pending().empty()) {
      const auto & q = s.pending().front();
      pending = {{"step", q.step}, {"trajectory_id", to_index(q.id)}, {"informativeness", q.informativeness}};
    }
    snap->handle = {{"id", e.id},
                    {"status", to_string(s.status())},
                    {"step", s.steps_taken()},
                    {"budget", cfg.budget},
                    {"budget_remaining", s.budget_remaining()},
                    {"mode", to_string(cfg.mode)},
                    {"strategy", to_string(cfg.strategy)},
                    {"classifier", classify::to_string(cfg.classifier.tag)},
                    {"embedding", to_string(cfg.embedding)},
                    {"pending", pending}};

    if (!pending.is_null()) {
      const auto & q = s.pending().front();
      const auto & t = e.store->all()[to_index(q.id)];
      require(t.id() == q.id, "store is not indexed by id");
      Json frames = Json::array();
      for (const auto & f : t.frames()) {
        frames.push_back({f.lateral, f.longitudinal, f.relative_velocity});
      }
      Json allowed = Json::array();
      for (const auto & a : s.allowed_answers()) {
        allowed.push_back(al::to_string(a));
      }
      snap->next = {{"session", e.id},
                    {"step", q.step},
                    {"informativeness", q.informativeness},
                    {"budget_remaining", s.budget_remaining()},
                    {"trajectory",
                     {{"id", to_index(q.id)},
                      {"frame_count", t.frames().size()},
                      {"channels", {"lateral_m", "longitudinal_m", "relative_velocity_mps"}},
                      {"frames", frames}}},
                    {"allowed_labels", allowed}};
    }

    Json history = Json::array();
    for (std::size_t t = 0; t < s.metric_history().size(); ++t) {
      history.push_back({{"step", t}, {"value", s.metric_history()[t]}});
    }
    snap->metrics = {{"id", e.id},
                     {"mode", to_string(cfg.mode)},
                     {"metric", cfg.mode == al::SessionMode::Classification ? "macro_f1" : "unknown_count"},
                     {"history", history}};

    Json entries = Json::array();
    for (const auto & r : s.query_log()) {
      Json entry = {{"step", r.step},
                    {"trajectory_id", to_index(r.id)},
                    {"informativeness", r.informativeness},
                    {"strategy", to_string(r.strategy)},
                    {"label", nullptr},
                    {"wall_time_ms", r.wall_time_ms}};
      if (r.answer) {
        entry["label"] = al::to_string(*r.answer);
      }
      entries.push_back(std::move(entry));
    }
    snap->log = {{"id", e.id}, {"entries", entries}};
    swap_snapshot(e, std::move(snap));
  }

  // Artifacts are shared between sessions on the same files.
  const DatasetManifest & manifest_cached(const std::string & path)
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = manifests_.find(path);
    if (it == manifests_.end()) {
      it = manifests_.emplace(path, load_manifest(path)).first;
    }
    return it->second;
  }

  std::shared_ptr<const TrajectoryStore> store_cached(const std::string & manifest_path)
  {
    const auto & m = manifest_cached(manifest_path);
    std::filesystem::path file(m.trajectories_file);
    if (!file.is_absolute()) {
      file = std::filesystem::path(manifest_path).parent_path() / file;
    }
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = stores_.find(file.string());
    if (it == stores_.end()) {
      it = stores_.emplace(file.string(), std::make_shared<const TrajectoryStore>(load_trajectories(file.string()))).first;
    }
    return it->second;
  }

  std::shared_ptr<const Embedding> load_embedding_cached(const std::string & path)
  {
    std::lock_guard<std::mutex> lock(cache_mutex_);
    auto it = embeddings_.find(path);
    if (it == embeddings_.end()) {
      it = embeddings_.emplace(path, std::make_shared<const Embedding>(load_embedding(path))).first;
    }
    return it->second;
  }

  std::pair<std::shared_ptr<const TrajectoryStore>, std::shared_ptr<const al::SessionData>> load_data(
    const Json & meta, al::SessionMode mode)
  {
    const auto dataset = resolve(meta.at("dataset").get<std::string>());
    const auto store = store_cached(dataset);
    const auto & manifest = manifest_cached(dataset);
    const auto emb = load_embedding_cached(resolve(meta.at("embedding").get<std::string>()));
    for (std::size_t i = 0; i < store->all().size(); ++i) {
      require(to_index(store->all()[i].id()) == i, "dataset ids must be 0..n-1");
    }
    return {store, al::SessionData::from(*emb, *store, manifest.partition, mode)};
  }

  ServiceConfig config_;
  mutable std::mutex map_mutex_;
  std::mutex create_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::mutex cache_mutex_;
  std::map<std::string, DatasetManifest> manifests_;
  std::map<std::string, std::shared_ptr<const TrajectoryStore>> stores_;
  std::map<std::string, std::shared_ptr<const Embedding>> embeddings_;
};

}  // namespace trajal::service
