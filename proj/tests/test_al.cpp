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

#include "al_fixture.hpp"

#include "trajal/al/journal.hpp"
#include "trajal/al/session.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace trajal;
using namespace trajal::al;
using trajal::testing::BlobSpec;
using trajal::testing::make_blobs;

namespace
{

classify::PredictiveDistribution dist(std::initializer_list<double> p)
{
  classify::PredictiveDistribution d;
  d.probabilities.resize(static_cast<Eigen::Index>(p.size()));
  int k = 0;
  for (double v : p) {
    d.classes.push_back(k);
    d.probabilities[k++] = v;
  }
  return d;
}

SessionConfig base_config(Strategy s, std::size_t budget, std::uint64_t seed = 3)
{
  SessionConfig c;
  c.strategy = s;
  c.budget = budget;
  c.seed = seed;
  return c;
}

Session run(const SessionConfig & cfg, const trajal::testing::BlobPool & pool, Session::Sink sink = {})
{
  SimulatedOracle oracle(pool.truth);
  return run_session(cfg, pool.partition, pool.data, oracle, std::move(sink));
}

std::vector<TrajectoryId> queried(const Session & s)
{
  std::vector<TrajectoryId> ids;
  for (const auto & r : s.query_log()) {
    ids.push_back(r.id);
  }
  return ids;
}

}  // namespace

TEST(Informativeness, MarginExamples)
{
  EXPECT_NEAR(informativeness_margin(dist({0.5, 0.3, 0.2})), -0.2, 1e-12);
  EXPECT_NEAR(informativeness_margin(dist({1.0 / 3, 1.0 / 3, 1.0 / 3})), 0.0, 1e-12);
  EXPECT_NEAR(informativeness_margin(dist({1, 0, 0})), -1.0, 1e-12);
  EXPECT_NEAR(informativeness_margin(dist({0.2, 0.2, 0.6})), -0.4, 1e-12);
}

TEST(Informativeness, EntropyExamples)
{
  EXPECT_NEAR(informativeness_entropy(dist({1.0 / 3, 1.0 / 3, 1.0 / 3})), std::log(3.0), 1e-12);
  EXPECT_EQ(informativeness_entropy(dist({1, 0, 0})), 0.0);
  // 0.5 ln 2 + 2 * 0.25 ln 4
  EXPECT_NEAR(informativeness_entropy(dist({0.5, 0.25, 0.25})), 0.5 * std::log(2.0) + 0.5 * std::log(4.0), 1e-12);
  EXPECT_NEAR(informativeness_entropy(dist({0.5, 0.25, 0.25})), 1.0397, 1e-4);
}

TEST(Informativeness, InvalidDistributionsAreRejected)
{
  EXPECT_THROW(informativeness_margin(dist({0.7, 0.7})), Error);
  EXPECT_THROW(informativeness_entropy(dist({1.0})), Error);
  Rng rng(1);
  EXPECT_THROW(informativeness_random(0, rng), Error);
}

TEST(Informativeness, RandomScoresAreUniformAndSeeded)
{
  Rng a(mix_seed(11, 7)), b(mix_seed(11, 7));
  const auto s = informativeness_random(10000, a);
  EXPECT_EQ(s, informativeness_random(10000, b));
  double mean = 0;
  for (double v : s) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    mean += v;
  }
  mean /= static_cast<double>(s.size());
  // sd of the mean is 1/sqrt(12e4) ~ 0.0029, so the band is about 7 sd wide
  EXPECT_GE(mean, 0.48);
  EXPECT_LE(mean, 0.52);
}

TEST(Informativeness, SelectionIsInvariantToMonotoneShifts)
{
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = static_cast<std::size_t>(uniform_int(rng, 1, 40));
    std::vector<double> scores(n);
    std::vector<TrajectoryId> ids(n);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = std::round(uniform(rng, -1, 0) * 8) / 8;  // coarse grid produces ties
      ids[i] = TrajectoryId{static_cast<std::uint32_t>(3 * i + 1)};
    }
    const auto base = select_top(scores, ids, 3);
    auto scaled = scores, shifted = scores;
    for (auto & v : scaled) {
      v *= 4.0;
    }
    for (auto & v : shifted) {
      v += 0.5;
    }
    EXPECT_EQ(select_top(scaled, ids, 3), base);
    EXPECT_EQ(select_top(shifted, ids, 3), base);
  }
}

TEST(Informativeness, TiesGoToTheLowestId)
{
  const std::vector<double> s = {0.5, 0.9, 0.9, 0.1};
  const std::vector<TrajectoryId> ids = {TrajectoryId{7}, TrajectoryId{9}, TrajectoryId{4}, TrajectoryId{1}};
  EXPECT_EQ(select_top(s, ids, 2), (std::vector<std::size_t>{2, 1}));
}

TEST(Session, ZeroBudgetRecordsOnlyTheInitialMetric)
{
  auto pool = make_blobs({});
  auto s = run(base_config(Strategy::Entropy, 0), pool);
  EXPECT_EQ(s.status(), SessionStatus::Complete);
  EXPECT_TRUE(s.query_log().empty());
  ASSERT_EQ(s.metric_history().size(), 1u);
  EXPECT_EQ(s.metric_history()[0], s.evaluate());
  EXPECT_EQ(s.partition(), pool.partition);
}

TEST(Session, BudgetAboveThePoolIsRejected)
{
  auto pool = make_blobs({});
  SimulatedOracle oracle(pool.truth);
  EXPECT_THROW(run_session(base_config(Strategy::Margin, pool.partition.unlabeled.size() + 1), pool.partition, pool.data, oracle), Error);
  auto cfg = base_config(Strategy::Margin, 5);
  cfg.batch_size = 0;
  EXPECT_THROW(run_session(cfg, pool.partition, pool.data, oracle), Error);
}

TEST(Session, MissingSeedClassIsRejected)
{
  BlobSpec spec;
  spec.annotated = {5, 5, 0};
  auto pool = make_blobs(spec);
  SimulatedOracle oracle(pool.truth);
  EXPECT_THROW(run_session(base_config(Strategy::Margin, 5), pool.partition, pool.data, oracle), Error);
}

TEST(Session, FullPoolConservesThePartition)
{
  BlobSpec spec;
  spec.unlabeled = {12, 12, 6};
  auto pool = make_blobs(spec);
  for (auto strategy : {Strategy::Random, Strategy::Margin, Strategy::Entropy}) {
    const auto cfg = base_config(strategy, pool.partition.unlabeled.size());
    Session s(cfg, pool.partition, pool.data);
    s.start();
    const std::size_t pool_size = pool.partition.annotated.size() + pool.partition.unlabeled.size();
    std::set<TrajectoryId> seen;
    while (s.status() == SessionStatus::AwaitingLabel) {
      const auto q = s.pending().front();
      EXPECT_TRUE(seen.insert(q.id).second);
      s.submit(q.step, q.id, {pool.truth.at(q.id)});
      EXPECT_EQ(s.partition().annotated.size() + s.partition().unlabeled.size(), pool_size);
      EXPECT_EQ(s.partition().test, pool.partition.test);
      EXPECT_TRUE(s.partition().is_disjoint());
    }
    EXPECT_EQ(s.status(), SessionStatus::Complete);
    EXPECT_TRUE(s.partition().unlabeled.empty());
    EXPECT_EQ(s.partition().annotated.size(), pool_size);
    EXPECT_EQ(s.query_log().size(), cfg.budget);
    EXPECT_EQ(s.metric_history().size(), cfg.budget + 1);
    for (std::size_t i = 0; i < s.query_log().size(); ++i) {
      EXPECT_EQ(s.query_log()[i].step, i + 1);
    }
    // Annotated set is the seed set plus every queried id.
    std::vector<TrajectoryId> expected = pool.partition.annotated;
    for (auto id : queried(s)) {
      expected.push_back(id);
    }
    std::sort(expected.begin(), expected.end());
    EXPECT_EQ(s.partition().annotated, expected);
  }
}

TEST(Session, SimulatedSessionsAreBitReproducible)
{
  auto pool = make_blobs({});
  for (auto tag : {classify::ClassifierTag::Svm, classify::ClassifierTag::Nn}) {
    for (auto strategy : {Strategy::Random, Strategy::Entropy}) {
      auto cfg = base_config(strategy, 6, 17);
      cfg.classifier.tag = tag;
      cfg.classifier.nn.epochs = 20;
      const auto a = run(cfg, pool);
      const auto b = run(cfg, pool);
      EXPECT_EQ(a.query_log(), b.query_log());
      EXPECT_EQ(a.metric_history(), b.metric_history());
      EXPECT_EQ(a.partition(), b.partition());
    }
  }
  // A different seed changes the random strategy's choices.
  EXPECT_NE(queried(run(base_config(Strategy::Random, 6, 1), pool)), queried(run(base_config(Strategy::Random, 6, 2), pool)));
}

TEST(Session, WorkerCountDoesNotChangeQueries)
{
  auto pool = make_blobs({});
  auto cfg = base_config(Strategy::Margin, 8);
  const auto a = run(cfg, pool);
  cfg.workers = 4;
  EXPECT_EQ(run(cfg, pool).query_log(), a.query_log());
}

TEST(Session, QueriedIdAttainsTheMaximalInformativeness)
{
  auto pool = make_blobs({});
  for (auto strategy : {Strategy::Margin, Strategy::Entropy}) {
    for (auto tag : {classify::ClassifierTag::Svm, classify::ClassifierTag::Nn}) {
      auto cfg = base_config(strategy, 8);
      cfg.classifier.tag = tag;
      cfg.classifier.nn.epochs = 30;
      Session s(cfg, pool.partition, pool.data);
      s.start();
      while (s.status() == SessionStatus::AwaitingLabel) {
        const auto q = s.pending().front();
        double best = -std::numeric_limits<double>::infinity();
        TrajectoryId best_id{};
        for (auto id : s.partition().unlabeled) {
          const auto d = s.model().predict_proba(pool.data->point(id));
          const double v = strategy == Strategy::Margin ? informativeness_margin(d) : informativeness_entropy(d);
          if (v > best) {
            best = v;
            best_id = id;
          }
        }
        EXPECT_EQ(q.id, best_id);
        EXPECT_EQ(q.informativeness, best);
        s.submit(q.step, q.id, {pool.truth.at(q.id)});
      }
    }
  }
}

TEST(Session, MarginFirstQueryIsNearTheBoundary)
{
  // Two separable clusters, two-class model.
  BlobSpec spec;
  spec.annotated = {5, 5, 0};
  spec.unlabeled = {100, 100, 0};
  spec.test = {10, 10, 0};
  spec.centers[0] = {-3, 0};
  spec.centers[1] = {3, 0};
  spec.sd = 1.0;
  auto pool = make_blobs(spec);
  auto cfg = base_config(Strategy::Margin, 1);
  cfg.mode = SessionMode::UnknownClassDiscovery;
  Session s(cfg, pool.partition, pool.data);
  s.start();
  const auto first = s.pending().front().id;
  const auto & svm = *s.model().svm();
  std::vector<std::pair<double, TrajectoryId>> closeness;
  for (auto id : pool.partition.unlabeled) {
    closeness.emplace_back(std::abs(svm.decision_values(pool.data->point(id))[0]), id);
  }
  std::sort(closeness.begin(), closeness.end());
  const auto decile = closeness.size() / 10;
  bool inside = false;
  for (std::size_t i = 0; i < decile; ++i) {
    inside = inside || closeness[i].second == first;
  }
  EXPECT_TRUE(inside);
}

TEST(Session, BatchQueriesTakeTheTopScores)
{
  auto pool = make_blobs({});
  auto cfg = base_config(Strategy::Entropy, 7);
  cfg.batch_size = 3;
  Session s(cfg, pool.partition, pool.data);
  s.start();
  ASSERT_EQ(s.pending().size(), 3u);
  EXPECT_GE(s.pending()[0].informativeness, s.pending()[1].informativeness);
  EXPECT_GE(s.pending()[1].informativeness, s.pending()[2].informativeness);
  const auto retrains = s.retrain_count();
  const auto round = s.pending();
  s.submit(round[1].step, round[1].id, {pool.truth.at(round[1].id)});
  EXPECT_EQ(s.retrain_count(), retrains);
  s.submit(round[0].step, round[0].id, {pool.truth.at(round[0].id)});
  s.submit(round[2].step, round[2].id, {pool.truth.at(round[2].id)});
  EXPECT_EQ(s.retrain_count(), retrains + 1);
  EXPECT_EQ(s.metric_history().size(), 4u);
  EXPECT_EQ(s.metric_history()[1], s.metric_history()[0]);
  EXPECT_EQ(s.metric_history()[2], s.metric_history()[0]);
  SimulatedOracle oracle(pool.truth);
  while (s.status() == SessionStatus::AwaitingLabel) {
    const auto q = s.pending().front();
    s.submit(q.step, q.id, *oracle.ask(q.id, {}));
  }
  EXPECT_EQ(s.query_log().size(), 7u);
  EXPECT_EQ(s.metric_history().size(), 8u);
}

TEST(Session, SubmissionsAreExactlyOnce)
{
  auto pool = make_blobs({});
  Session s(base_config(Strategy::Entropy, 3), pool.partition, pool.data);
  s.start();
  const auto q = s.pending().front();
  const Answer truth{pool.truth.at(q.id)};
  const Answer wrong{truth.label == ClassLabel::CutIn ? ClassLabel::LeftDriveBy : ClassLabel::CutIn};
  EXPECT_THROW(s.submit(q.step, TrajectoryId{9999}, truth), Error);
  EXPECT_THROW(s.submit(q.step + 1, q.id, truth), Error);
  EXPECT_THROW(s.submit(q.step, q.id, Answer::unknown()), Error);  // classification mode
  EXPECT_EQ(s.submit(q.step, q.id, truth), SubmitResult::Applied);
  EXPECT_EQ(s.steps_taken(), 1u);
  EXPECT_EQ(s.submit(q.step, q.id, truth), SubmitResult::Duplicate);
  EXPECT_EQ(s.steps_taken(), 1u);
  try {
    s.submit(q.step, q.id, wrong);
    FAIL() << "conflicting resubmission accepted";
  } catch (const Error & e) {
    EXPECT_EQ(e.kind(), ErrorKind::Conflict);
  }
}

TEST(Session, TimeoutSuspendsAndResumes)
{
  auto pool = make_blobs({});
  MailboxOracle oracle;
  auto s = run_session(base_config(Strategy::Margin, 2), pool.partition, pool.data, oracle, {}, std::chrono::milliseconds(10));
  EXPECT_EQ(s.status(), SessionStatus::Suspended);
  EXPECT_EQ(s.pending().size(), 1u);
  const auto q = s.pending().front();
  s.submit(q.step, q.id, {pool.truth.at(q.id)});
  EXPECT_EQ(s.status(), SessionStatus::AwaitingLabel);
  EXPECT_EQ(s.steps_taken(), 1u);
}

TEST(Session, MailboxOracleDeliversPostedAnswers)
{
  MailboxOracle oracle;
  std::thread poster([&] { oracle.post(TrajectoryId{5}, {ClassLabel::CutIn}); });
  const auto a = oracle.ask(TrajectoryId{5}, std::chrono::seconds(5));
  poster.join();
  ASSERT_TRUE(a.has_value());
  EXPECT_EQ(*a, Answer{ClassLabel::CutIn});
}

TEST(Session, ConfigJsonRoundTrip)
{
  SessionConfig c;
  c.embedding = EmbeddingTag::VRAE;
  c.classifier.tag = classify::ClassifierTag::Nn;
  c.classifier.nn.hidden = {64, 128, 256, 128, 64};
  c.classifier.svm.gamma = 0.25;
  c.strategy = Strategy::Margin;
  c.budget = 42;
  c.batch_size = 2;
  c.seed = 123456789012345ULL;
  c.mode = SessionMode::UnknownClassDiscovery;
  const auto back = config_from_json(Json::parse(config_to_json(c).dump()));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.classifier.nn.hidden, c.classifier.nn.hidden);
}

TEST(Discovery, UnknownAnswersAreLoggedButNeverTrainedOn)
{
  auto pool = make_blobs({});
  auto cfg = base_config(Strategy::Entropy, 30);
  cfg.mode = SessionMode::UnknownClassDiscovery;
  Session s(cfg, pool.partition, pool.data);
  s.start();
  EXPECT_EQ(s.model().classes(), (std::vector<int>{0, 1}));
  bool used_unknown = false;
  while (s.status() == SessionStatus::AwaitingLabel) {
    const auto q = s.pending().front();
    const auto c = pool.truth.at(q.id);
    // Alternate between the explicit Unknown option and the true CutIn label.
    Answer a{c};
    if (c == ClassLabel::CutIn && !used_unknown) {
      a = Answer::unknown();
      used_unknown = true;
    }
    s.submit(q.step, q.id, a);
    for (const auto & [id, label] : s.training_set()) {
      EXPECT_NE(label, ClassLabel::CutIn);
    }
    EXPECT_EQ(s.model().classes(), (std::vector<int>{0, 1}));
  }
  EXPECT_TRUE(used_unknown);
  const auto curve = discovery_metrics(s, [&](TrajectoryId id) { return pool.truth.at(id); });
  ASSERT_EQ(curve.size(), 31u);
  for (std::size_t t = 1; t < curve.size(); ++t) {
    EXPECT_GE(curve[t], curve[t - 1]);
    EXPECT_EQ(static_cast<double>(curve[t]), s.metric_history()[t]);
  }
}

TEST(Discovery, CurveWithoutCutInsIsZero)
{
  BlobSpec spec;
  spec.unlabeled = {30, 30, 0};
  auto pool = make_blobs(spec);
  auto cfg = base_config(Strategy::Margin, 20);
  cfg.mode = SessionMode::UnknownClassDiscovery;
  const auto s = run(cfg, pool);
  const auto curve = discovery_metrics(s, [&](TrajectoryId id) { return pool.truth.at(id); });
  EXPECT_EQ(curve, std::vector<std::size_t>(21, 0));
}

TEST(Discovery, CurveOfAllCutInsIsTheIdentity)
{
  BlobSpec spec;
  spec.unlabeled = {0, 0, 25};
  auto pool = make_blobs(spec);
  auto cfg = base_config(Strategy::Random, 25);
  cfg.mode = SessionMode::UnknownClassDiscovery;
  const auto s = run(cfg, pool);
  const auto curve = discovery_metrics(s, [&](TrajectoryId id) { return pool.truth.at(id); });
  for (std::size_t t = 0; t < curve.size(); ++t) {
    EXPECT_EQ(curve[t], t);
  }
}

TEST(Discovery, RandomStrategyMatchesTheBinomialExpectation)
{
  BlobSpec spec;
  spec.unlabeled = {81, 81, 18};  // alpha = 10 over a pool of 180
  const std::size_t budget = 60, reps = 10;
  double sum = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    spec.seed = 100 + r;
    auto pool = make_blobs(spec);
    auto cfg = base_config(Strategy::Random, budget, 500 + r);
    cfg.mode = SessionMode::UnknownClassDiscovery;
    const auto s = run(cfg, pool);
    sum += static_cast<double>(discovery_metrics(s, [&](TrajectoryId id) { return pool.truth.at(id); }).back());
  }
  const double mean = sum / static_cast<double>(reps);
  const double expected = 0.10 * static_cast<double>(budget);
  const double sd_of_mean = std::sqrt(static_cast<double>(budget) * 0.1 * 0.9 / static_cast<double>(reps));
  EXPECT_LE(std::abs(mean - expected), 3 * sd_of_mean) << "mean " << mean;
}

TEST(Discovery, MetricsNeedADiscoverySession)
{
  auto pool = make_blobs({});
  const auto s = run(base_config(Strategy::Margin, 1), pool);
  EXPECT_THROW(discovery_metrics(s, [&](TrajectoryId id) { return pool.truth.at(id); }), Error);
}

TEST(Journal, ReplayOfEveryPrefixRestoresTheSession)
{
  auto pool = make_blobs({});
  auto cfg = base_config(Strategy::Entropy, 6);
  cfg.batch_size = 2;
  std::vector<Json> events;
  const auto full = run(cfg, pool, [&](const Json & e) { events.push_back(e); });
  ASSERT_GT(events.size(), 10u);

  for (std::size_t k = 1; k <= events.size(); ++k) {
    const std::vector<Json> prefix(events.begin(), events.begin() + static_cast<std::ptrdiff_t>(k));
    std::vector<Json> tail;
    auto s = Session::replay(prefix, pool.data, [&](const Json & e) { tail.push_back(e); });

    // Journal prefix plus regenerated tail is again a prefix of the original journal.
    std::vector<Json> joined = prefix;
    joined.insert(joined.end(), tail.begin(), tail.end());
    ASSERT_LE(joined.size(), events.size()) << "prefix " << k;
    for (std::size_t i = 0; i < joined.size(); ++i) {
      EXPECT_EQ(joined[i], events[i]) << "prefix " << k << " record " << i;
    }

    // Answered steps so far equal the original log up to that point.
    std::size_t answered = 0;
    for (const auto & e : prefix) {
      answered += e["event"] == "label-received" ? 1 : 0;
    }
    ASSERT_EQ(s.query_log().size(), answered);
    for (std::size_t i = 0; i < answered; ++i) {
      EXPECT_EQ(s.query_log()[i], full.query_log()[i]);
    }

    // Finishing the restored session reproduces the uninterrupted one.
    SimulatedOracle oracle(pool.truth);
    while (s.status() == SessionStatus::AwaitingLabel) {
      const auto q = s.pending().front();
      s.submit(q.step, q.id, *oracle.ask(q.id, {}));
      tail.clear();
    }
    EXPECT_EQ(s.query_log(), full.query_log());
    EXPECT_EQ(s.metric_history(), full.metric_history());
    EXPECT_EQ(s.partition(), full.partition());
  }
}

TEST(Journal, TamperedJournalIsRejected)
{
  auto pool = make_blobs({});
  std::vector<Json> events;
  run(base_config(Strategy::Margin, 3), pool, [&](const Json & e) { events.push_back(e); });
  auto bad = events;
  for (auto & e : bad) {
    if (e["event"] == "query-issued") {
      e["id"] = to_index(pool.partition.unlabeled.front()) == e["id"].get<std::uint32_t>() ? to_index(pool.partition.unlabeled.back())
                                                                                          : to_index(pool.partition.unlabeled.front());
      break;
    }
  }
  EXPECT_THROW(Session::replay(bad, pool.data), Error);
  EXPECT_THROW(Session::replay({}, pool.data), Error);
  EXPECT_THROW(Session::replay(std::vector<Json>(events.begin() + 1, events.end()), pool.data), Error);
}

TEST(Journal, FileDropsAnInterruptedLastRecord)
{
  const auto path = (std::filesystem::temp_directory_path() / "trajal_journal_test.jsonl").string();
  std::filesystem::remove(path);
  {
    Journal j(path);
    j.append({{"event", "init"}, {"n", 1}});
    j.append({{"event", "metric"}, {"value", 0.5}});
  }
  {
    std::ofstream out(path, std::ios::app);
    out << R"({"event":"label-rec)";
  }
  auto events = Journal::read(path);
  ASSERT_EQ(events.size(), 2u);
  {
    Journal j(path);
    j.append({{"event", "metric"}, {"value", 0.75}});
  }
  events = Journal::read(path);
  ASSERT_EQ(events.size(), 3u);
  EXPECT_EQ(events[2]["value"], 0.75);
  EXPECT_TRUE(Journal::read(path + ".missing").empty());
  std::filesystem::remove(path);
}
