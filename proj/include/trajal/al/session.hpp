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

#include "trajal/al/strategy.hpp"
#include "trajal/classify/classifier.hpp"
#include "trajal/common/parallel.hpp"
#include "trajal/core/embedding.hpp"
#include "trajal/core/io.hpp"
#include "trajal/core/metrics.hpp"
#include "trajal/core/trajectory.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

/**
 * @file session.hpp
 *
 * Pool-based active learning session. The loop trains on the annotated set, scores every
 * unlabeled point, queries the best ones, folds the answers in and retrains until the budget
 * is spent. It is written as a state machine (issue queries, accept answers) so a human can
 * sit in the loop; the simulated driver simply answers every pending query in turn.
 */

namespace trajal::al
{

enum class SessionMode { Classification, UnknownClassDiscovery };

inline std::string_view to_string(SessionMode m) noexcept
{
  return m == SessionMode::Classification ? "classification" : "discovery";
}

inline std::optional<SessionMode> parse_session_mode(std::string_view s) noexcept
{
  if (s == "classification") {
    return SessionMode::Classification;
  }
  if (s == "discovery") {
    return SessionMode::UnknownClassDiscovery;
  }
  return std::nullopt;
}

enum class SessionStatus { AwaitingLabel, Retraining, Complete, Suspended };

inline std::string_view to_string(SessionStatus s) noexcept
{
  switch (s) {
    case SessionStatus::AwaitingLabel:
      return "AwaitingLabel";
    case SessionStatus::Retraining:
      return "Retraining";
    case SessionStatus::Complete:
      return "Complete";
    case SessionStatus::Suspended:
      return "Suspended";
  }
  return "?";
}

/// Oracle answer: a class label, or the explicit "other / unknown" option.
struct Answer
{
  std::optional<ClassLabel> label;

  static Answer unknown() { return {}; }
  bool is_unknown() const noexcept { return !label.has_value(); }
  bool operator==(const Answer &) const = default;
};

inline std::string to_string(const Answer & a)
{
  return a.label ? std::string(to_string(*a.label)) : std::string("Unknown");
}

inline std::optional<Answer> parse_answer(std::string_view s)
{
  if (s == "Unknown") {
    return Answer::unknown();
  }
  if (auto l = parse_class_label(s)) {
    return Answer{*l};
  }
  return std::nullopt;
}

struct SessionConfig
{
  EmbeddingTag embedding = EmbeddingTag::MTSNE;
  classify::ClassifierConfig classifier{};
  Strategy strategy = Strategy::Entropy;
  std::size_t budget = 60;
  std::size_t batch_size = 1;
  std::uint64_t seed = 0;
  SessionMode mode = SessionMode::Classification;
  std::vector<ClassLabel> known_classes = {ClassLabel::LeftDriveBy, ClassLabel::RightDriveBy};
  std::size_t workers = 1;

  /// Classes the classifier is trained on.
  std::vector<ClassLabel> model_classes() const
  {
    if (mode == SessionMode::Classification) {
      return {kAllClasses, kAllClasses + kNumClasses};
    }
    return known_classes;
  }

  bool is_known(ClassLabel c) const
  {
    const auto cls = model_classes();
    return std::find(cls.begin(), cls.end(), c) != cls.end();
  }

  void validate(const DatasetPartition & p) const
  {
    require(batch_size >= 1, "session: batch size must be >= 1");
    if (budget > p.unlabeled.size()) {
      fail(
        ErrorKind::InvalidArgument, "session: budget " + std::to_string(budget) + " exceeds the unlabeled pool (" +
                                      std::to_string(p.unlabeled.size()) + ")");
    }
    if (mode == SessionMode::UnknownClassDiscovery) {
      require(known_classes.size() >= 2, "session: discovery mode needs at least two known classes");
    }
  }
};

/// One answered or pending query. Wall time is informational and excluded from equality.
struct QueryRecord
{
  std::size_t step = 0;  //!< 1-based query number
  TrajectoryId id{};
  double informativeness = 0.0;
  Strategy strategy = Strategy::Random;
  std::optional<Answer> answer;
  double wall_time_ms = 0.0;

  bool operator==(const QueryRecord & o) const
  {
    return step == o.step && id == o.id && informativeness == o.informativeness && strategy == o.strategy &&
           answer == o.answer;
  }
};

/// Immutable inputs shared by every session on one dataset and embedding.
struct SessionData
{
  EmbeddingTag tag = EmbeddingTag::MTSNE;
  std::unordered_map<TrajectoryId, Eigen::RowVectorXd> points;
  std::unordered_map<TrajectoryId, ClassLabel> seed_labels;  //!< initial annotated set
  std::unordered_map<TrajectoryId, ClassLabel> test_labels;  //!< evaluator-side truth

  /// Reads labels of the annotated set and, for classification, of the test set only.
  static std::shared_ptr<const SessionData> from(
    const Embedding & embedding, const TrajectoryStore & store, const DatasetPartition & partition,
    SessionMode mode = SessionMode::Classification)
  {
    auto d = std::make_shared<SessionData>();
    d->tag = embedding.tag();
    for (const auto & p : embedding.points()) {
      d->points.emplace(p.id, p.coords.transpose());
    }
    auto label_of = [&](TrajectoryId id) {
      const auto l = store.at(id).label();
      if (!l) {
        fail(ErrorKind::InvalidArgument, "session: trajectory " + std::to_string(to_index(id)) + " has no label");
      }
      return *l;
    };
    for (auto id : partition.annotated) {
      d->seed_labels.emplace(id, label_of(id));
    }
    if (mode == SessionMode::Classification) {
      for (auto id : partition.test) {
        d->test_labels.emplace(id, label_of(id));
      }
    }
    return d;
  }

  const Eigen::RowVectorXd & point(TrajectoryId id) const
  {
    const auto it = points.find(id);
    if (it == points.end()) {
      fail(ErrorKind::NotFound, "session: embedding has no point for trajectory " + std::to_string(to_index(id)));
    }
    return it->second;
  }
};

inline Json classifier_to_json(const classify::ClassifierConfig & c)
{
  Json svm = {{"kernel", classify::to_string(c.svm.kernel)}, {"c", c.svm.c}, {"tolerance", c.svm.tolerance}};
  svm["gamma"] = c.svm.gamma ? Json(*c.svm.gamma) : Json(nullptr);
  Json nn = {{"hidden", c.nn.hidden},
             {"epochs", c.nn.epochs},
             {"batch_size", c.nn.batch_size},
             {"learning_rate", c.nn.adam.learning_rate},
             {"bn_momentum", c.nn.bn_momentum}};
  return {{"tag", classify::to_string(c.tag)}, {"svm", svm}, {"nn", nn}};
}

inline classify::ClassifierConfig classifier_from_json(const Json & j)
{
  classify::ClassifierConfig c;
  const auto tag = classify::parse_classifier_tag(j.at("tag").get<std::string>());
  require(tag.has_value(), "unknown classifier tag");
  c.tag = *tag;
  const auto & s = j.at("svm");
  c.svm.kernel = s.at("kernel").get<std::string>() == "linear" ? classify::KernelKind::Linear : classify::KernelKind::Rbf;
  c.svm.c = s.at("c").get<double>();
  c.svm.tolerance = s.at("tolerance").get<double>();
  if (!s.at("gamma").is_null()) {
    c.svm.gamma = s.at("gamma").get<double>();
  }
  const auto & n = j.at("nn");
  c.nn.hidden = n.at("hidden").get<std::vector<int>>();
  c.nn.epochs = n.at("epochs").get<int>();
  c.nn.batch_size = n.at("batch_size").get<std::size_t>();
  c.nn.adam.learning_rate = n.at("learning_rate").get<double>();
  c.nn.bn_momentum = n.at("bn_momentum").get<double>();
  return c;
}

inline Json config_to_json(const SessionConfig & c)
{
  std::vector<std::string> known;
  for (auto k : c.known_classes) {
    known.emplace_back(to_string(k));
  }
  return {{"embedding", to_string(c.embedding)},
          {"classifier", classifier_to_json(c.classifier)},
          {"strategy", to_string(c.strategy)},
          {"budget", c.budget},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"mode", to_string(c.mode)},
          {"known_classes", known}};
}

inline SessionConfig config_from_json(const Json & j)
{
  SessionConfig c;
  const auto tag = parse_embedding_tag(j.at("embedding").get<std::string>());
  const auto strategy = parse_strategy(j.at("strategy").get<std::string>());
  const auto mode = parse_session_mode(j.at("mode").get<std::string>());
  require(tag && strategy && mode, "session config: unknown embedding, strategy or mode");
  c.embedding = *tag;
  c.classifier = classifier_from_json(j.at("classifier"));
  c.strategy = *strategy;
  c.budget = j.at("budget").get<std::size_t>();
  c.batch_size = j.value("batch_size", std::size_t{1});
  c.seed = j.at("seed").get<std::uint64_t>();
  c.mode = *mode;
  c.known_classes.clear();
  for (const auto & k : j.at("known_classes")) {
    const auto l = parse_class_label(k.get<std::string>());
    require(l.has_value(), "session config: unknown class " + k.get<std::string>());
    c.known_classes.push_back(*l);
  }
  return c;
}

/// Outcome of a label submission.
enum class SubmitResult { Applied, Duplicate };

class Session
{
public:
  using Sink = std::function<void(const Json &)>;

  Session(SessionConfig config, DatasetPartition partition, std::shared_ptr<const SessionData> data, Sink sink = {})
  : config_(std::move(config)), partition_(std::move(partition)), data_(std::move(data)), sink_(std::move(sink)),
    rng_(mix_seed(config_.seed, 7))
  {
    require(data_ != nullptr, "session: missing data");
    partition_.normalize();
    require(partition_.is_disjoint(), "session: partition splits overlap");
    config_.validate(partition_);
    if (config_.embedding != data_->tag) {
      fail(ErrorKind::InvalidArgument, "session: configured embedding does not match the supplied points");
    }
    for (auto c : config_.model_classes()) {
      bool seen = false;
      for (auto id : partition_.annotated) {
        seen = seen || seed_label(id) == c;
      }
      if (!seen) {
        fail(
          ErrorKind::Infeasible, "session: initial annotated set has no " + std::string(to_string(c)) + " trajectory");
      }
    }
    initial_size_ = partition_.annotated.size() + partition_.unlabeled.size();
  }

  /// Journals the configuration, trains the initial model, records the step-0 metric and
  /// issues the first queries (or completes immediately for a zero budget).
  void start()
  {
    require(!started_, "session: already started");
    started_ = true;
    emit({{"event", "init"}, {"version", 1}, {"config", config_to_json(config_)}, {"partition", partition_to_json(partition_)}});
    retrain();
    record_metric(0);
    issue_round();
  }

  SessionStatus status() const noexcept { return status_; }
  const SessionConfig & config() const noexcept { return config_; }
  const DatasetPartition & partition() const noexcept { return partition_; }
  const std::vector<QueryRecord> & query_log() const noexcept { return log_; }
  const std::vector<QueryRecord> & pending() const noexcept { return pending_; }
  const std::vector<double> & metric_history() const noexcept { return metrics_; }
  const classify::Classifier & model() const { return *model_; }
  std::size_t steps_taken() const noexcept { return log_.size(); }
  /// Queries not yet answered; a pending query still counts as remaining.
  std::size_t budget_remaining() const noexcept { return config_.budget - log_.size(); }
  std::size_t retrain_count() const noexcept { return retrains_; }
  const SessionData & data() const noexcept { return *data_; }

  /// Ids and labels the current model was trained on.
  const std::vector<std::pair<TrajectoryId, ClassLabel>> & training_set() const noexcept { return training_; }

  /// Answers for every trajectory queried so far, by id.
  std::optional<Answer> answer_for(TrajectoryId id) const
  {
    for (const auto & r : log_) {
      if (r.id == id) {
        return r.answer;
      }
    }
    return std::nullopt;
  }

  /// Labels allowed in submissions for this mode.
  std::vector<Answer> allowed_answers() const
  {
    std::vector<Answer> out;
    for (auto c : kAllClasses) {
      out.push_back({c});
    }
    if (config_.mode == SessionMode::UnknownClassDiscovery) {
      out.push_back(Answer::unknown());
    }
    return out;
  }

  void suspend()
  {
    if (status_ == SessionStatus::AwaitingLabel) {
      status_ = SessionStatus::Suspended;
    }
  }

  /**
   * @brief Applies one answer.
   *
   * `step` and `id` must match a pending query. Re-sending an already applied (step, id, answer)
   * is acknowledged as a duplicate without any change; every other mismatch is a conflict.
   */
  SubmitResult submit(std::size_t step, TrajectoryId id, const Answer & answer, std::optional<double> wall_time_ms = {})
  {
    for (const auto & r : log_) {
      if (r.step == step) {
        if (r.id == id && r.answer == answer) {
          return SubmitResult::Duplicate;
        }
        fail(ErrorKind::Conflict, "step " + std::to_string(step) + " was already answered differently");
      }
    }
    if (status_ == SessionStatus::Complete) {
      fail(ErrorKind::Conflict, "session is complete");
    }
    const auto allowed = allowed_answers();
    if (std::find(allowed.begin(), allowed.end(), answer) == allowed.end()) {
      fail(ErrorKind::InvalidArgument, "label " + to_string(answer) + " is not allowed in " + std::string(to_string(config_.mode)) + " mode");
    }
    auto it = std::find_if(pending_.begin(), pending_.end(), [&](const auto & r) { return r.step == step; });
    if (it == pending_.end() || it->id != id) {
      fail(
        ErrorKind::Conflict, "no pending query for step " + std::to_string(step) + " and trajectory " +
                               std::to_string(to_index(id)));
    }
    const double wall = wall_time_ms ? *wall_time_ms : elapsed_ms(issued_at_);
    emit({{"event", "label-received"}, {"step", step}, {"id", to_index(id)}, {"label", to_string(answer)}, {"wall_time_ms", wall}});

    QueryRecord rec = *it;
    rec.answer = answer;
    rec.wall_time_ms = wall;
    pending_.erase(it);
    log_.push_back(rec);
    std::sort(log_.begin(), log_.end(), [](const auto & a, const auto & b) { return a.step < b.step; });
    partition_.annotate(id);

    if (pending_.empty()) {
      status_ = SessionStatus::Retraining;
      retrain();
      // Steps answered in this round but before the retrain carry the previous model's metric.
      while (metrics_.size() <= log_.size()) {
        record_metric(metrics_.size(), metrics_.size() == log_.size() ? std::nullopt : std::optional(metrics_.back()));
      }
      issue_round();
    }
    return SubmitResult::Applied;
  }

  /// Metric of the current model: macro F1 on the test set, or the number of answers outside
  /// the known classes in discovery mode.
  double evaluate() const
  {
    if (config_.mode == SessionMode::UnknownClassDiscovery) {
      std::size_t count = 0;
      for (const auto & r : log_) {
        count += (r.answer && (r.answer->is_unknown() || !config_.is_known(*r.answer->label))) ? 1 : 0;
      }
      return static_cast<double>(count);
    }
    if (partition_.test.empty()) {
      return 0.0;
    }
    std::vector<int> pred, truth;
    for (auto id : partition_.test) {
      pred.push_back(model_->predict(data_->point(id)));
      const auto it = data_->test_labels.find(id);
      if (it == data_->test_labels.end()) {
        fail(ErrorKind::NotFound, "session: no evaluation label for test trajectory " + std::to_string(to_index(id)));
      }
      truth.push_back(static_cast<int>(it->second));
    }
    return f1_score(pred, truth, kNumClasses, F1Averaging::Macro).score;
  }

  /// Scores of every currently unlabeled point under the current model (ascending id order).
  std::vector<double> score_unlabeled()
  {
    const auto & ids = partition_.unlabeled;
    if (config_.strategy == Strategy::Random) {
      return informativeness_random(ids.size(), rng_);
    }
    std::vector<double> scores(ids.size());
    parallel_for(ids.size(), config_.workers, [&](std::size_t i) {
      const auto dist = model_->predict_proba(data_->point(ids[i]));
      scores[i] = config_.strategy == Strategy::Margin ? informativeness_margin(dist) : informativeness_entropy(dist);
    });
    return scores;
  }

  /**
   * @brief Rebuilds a session from journal events.
   *
   * Re-runs the session from the init record, feeding the recorded answers in order. The journal
   * must be a prefix of the regenerated event stream; events the crash cut off after the last
   * recorded answer are regenerated and sent to `sink`.
   */
  static Session replay(const std::vector<Json> & events, std::shared_ptr<const SessionData> data, Sink sink = {})
  {
    if (events.empty() || events.front().value("event", "") != "init") {
      fail(ErrorKind::InvalidArgument, "journal: first record must be an init event");
    }
    auto regenerated = std::make_shared<std::vector<Json>>();
    Session s(
      config_from_json(events.front().at("config")), partition_from_json(events.front().at("partition")),
      std::move(data), [regenerated](const Json & e) { regenerated->push_back(e); });
    s.start();
    for (std::size_t k = 1; k < events.size(); ++k) {
      const auto & e = events[k];
      if (e.value("event", "") != "label-received") {
        continue;
      }
      const auto answer = parse_answer(e.at("label").get<std::string>());
      require(answer.has_value(), "journal: unknown label");
      s.submit(e.at("step").get<std::size_t>(), TrajectoryId{e.at("id").get<std::uint32_t>()}, *answer, e.at("wall_time_ms").get<double>());
    }
    if (regenerated->size() < events.size()) {
      fail(ErrorKind::Conflict, "journal: more records than the replay produces");
    }
    for (std::size_t k = 0; k < events.size(); ++k) {
      if ((*regenerated)[k] != events[k]) {
        fail(ErrorKind::Conflict, "journal: record " + std::to_string(k) + " diverges from replay: " + events[k].dump());
      }
    }
    if (sink) {
      for (std::size_t k = events.size(); k < regenerated->size(); ++k) {
        sink((*regenerated)[k]);
      }
    }
    s.sink_ = std::move(sink);
    return s;
  }

private:
  static double elapsed_ms(std::chrono::steady_clock::time_point since)
  {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
  }

  void emit(const Json & e)
  {
    if (sink_) {
      sink_(e);
    }
  }

  ClassLabel seed_label(TrajectoryId id) const
  {
    const auto it = data_->seed_labels.find(id);
    if (it == data_->seed_labels.end()) {
      fail(ErrorKind::NotFound, "session: no label for annotated trajectory " + std::to_string(to_index(id)));
    }
    return it->second;
  }

  void retrain()
  {
    training_.clear();
    for (auto id : partition_.annotated) {
      std::optional<ClassLabel> label;
      if (auto a = answer_for(id)) {
        label = a->label;
      } else {
        label = seed_label(id);
      }
      // Answers outside the model's classes stay in the log but never reach the classifier.
      if (label && config_.is_known(*label)) {
        training_.emplace_back(id, *label);
      }
    }
    classify::Points x(static_cast<Eigen::Index>(training_.size()), data_->point(training_.front().first).size());
    std::vector<int> y;
    for (std::size_t i = 0; i < training_.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = data_->point(training_[i].first);
      y.push_back(static_cast<int>(training_[i].second));
    }
    model_ = std::make_shared<classify::Classifier>(
      classify::Classifier::train(config_.classifier, x, y, mix_seed(config_.seed, 1000 + retrains_)));
    ++retrains_;
    emit({{"event", "retrain-complete"}, {"round", retrains_}, {"training_size", training_.size()}});
  }

  void record_metric(std::size_t step, std::optional<double> carried = std::nullopt)
  {
    const double v = carried ? *carried : evaluate();
    metrics_.push_back(v);
    emit({{"event", "metric"}, {"step", step}, {"value", v}});
  }

  void issue_round()
  {
    const std::size_t remaining = config_.budget - log_.size();
    if (remaining == 0) {
      status_ = SessionStatus::Complete;
      return;
    }
    const auto scores = score_unlabeled();
    const auto picks = select_top(scores, partition_.unlabeled, std::min(config_.batch_size, remaining));
    for (auto i : picks) {
      QueryRecord r;
      r.step = log_.size() + pending_.size() + 1;
      r.id = partition_.unlabeled[i];
      r.informativeness = scores[i];
      r.strategy = config_.strategy;
      pending_.push_back(r);
      emit({{"event", "query-issued"}, {"step", r.step}, {"id", to_index(r.id)}, {"informativeness", r.informativeness}, {"strategy", to_string(r.strategy)}});
    }
    issued_at_ = std::chrono::steady_clock::now();
    status_ = SessionStatus::AwaitingLabel;
  }

  SessionConfig config_;
  DatasetPartition partition_;
  std::shared_ptr<const SessionData> data_;
  Sink sink_;
  Rng rng_;
  bool started_ = false;
  SessionStatus status_ = SessionStatus::Retraining;
  std::shared_ptr<const classify::Classifier> model_;
  std::vector<std::pair<TrajectoryId, ClassLabel>> training_;
  std::vector<QueryRecord> log_, pending_;
  std::vector<double> metrics_;
  std::size_t retrains_ = 0;
  std::size_t initial_size_ = 0;
  std::chrono::steady_clock::time_point issued_at_{};
};

/// Source of answers. `ask` returns nothing when no answer arrived within `timeout`.
class Oracle
{
public:
  virtual ~Oracle() = default;
  virtual std::optional<Answer> ask(TrajectoryId id, std::chrono::milliseconds timeout) = 0;
};

/// Replays hidden ground truth instantly.
class SimulatedOracle : public Oracle
{
public:
  explicit SimulatedOracle(std::unordered_map<TrajectoryId, ClassLabel> truth) : truth_(std::move(truth)) {}

  static SimulatedOracle from_store(const TrajectoryStore & store)
  {
    std::unordered_map<TrajectoryId, ClassLabel> truth;
    for (const auto & t : store.all()) {
      if (t.label()) {
        truth.emplace(t.id(), *t.label());
      }
    }
    return SimulatedOracle(std::move(truth));
  }

  std::optional<Answer> ask(TrajectoryId id, std::chrono::milliseconds) override
  {
    const auto it = truth_.find(id);
    if (it == truth_.end()) {
      fail(ErrorKind::NotFound, "oracle: no ground truth for trajectory " + std::to_string(to_index(id)));
    }
    return Answer{it->second};
  }

  ClassLabel truth(TrajectoryId id) const { return truth_.at(id); }

private:
  std::unordered_map<TrajectoryId, ClassLabel> truth_;
};

/// Answers posted from another thread (e.g. a person at a terminal).
class MailboxOracle : public Oracle
{
public:
  void post(TrajectoryId id, Answer a)
  {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      box_[id] = a;
    }
    cv_.notify_all();
  }

  std::optional<Answer> ask(TrajectoryId id, std::chrono::milliseconds timeout) override
  {
    std::unique_lock<std::mutex> lock(mutex_);
    if (!cv_.wait_for(lock, timeout, [&] { return box_.count(id) > 0; })) {
      return std::nullopt;
    }
    auto a = box_.at(id);
    box_.erase(id);
    return a;
  }

private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::unordered_map<TrajectoryId, Answer> box_;
};

/**
 * @brief Drives a session to completion with `oracle`.
 *
 * If the oracle times out the session is suspended and returned as is; it can be resumed by
 * submitting the pending answers later.
 */
inline Session run_session(
  const SessionConfig & config, const DatasetPartition & partition, std::shared_ptr<const SessionData> data,
  Oracle & oracle, Session::Sink sink = {}, std::chrono::milliseconds timeout = std::chrono::hours(24))
{
  Session s(config, partition, std::move(data), std::move(sink));
  s.start();
  while (s.status() == SessionStatus::AwaitingLabel) {
    const auto q = s.pending().front();
    const auto a = oracle.ask(q.id, timeout);
    if (!a) {
      s.suspend();
      break;
    }
    s.submit(q.step, q.id, *a);
  }
  return s;
}

/// Cumulative number of queried trajectories whose hidden label is CutIn, from 0 queries on.
inline std::vector<std::size_t> discovery_metrics(const Session & s, const std::function<ClassLabel(TrajectoryId)> & truth)
{
  if (s.config().mode != SessionMode::UnknownClassDiscovery) {
    fail(ErrorKind::InvalidArgument, "discovery_metrics: session is not in discovery mode");
  }
  std::vector<std::size_t> curve{0};
  for (const auto & r : s.query_log()) {
    curve.push_back(curve.back() + (truth(r.id) == ClassLabel::CutIn ? 1 : 0));
  }
  return curve;
}

}  // namespace trajal::al
