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

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.

#include "al_fixture.hpp"
#include "oracles.hpp"
#include "service_fixture.hpp"

#include "trajal/ae/train.hpp"
#include "trajal/al/journal.hpp"
#include "trajal/classify/classifier.hpp"
#include "trajal/classify/nn.hpp"
#include "trajal/dtw/dtw.hpp"
#include "trajal/experiments/plan.hpp"
#include "trajal/service/server.hpp"
#include "trajal/tsne/tsne.hpp"

#include <chrono>
#include <csignal>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

using namespace trajal;

namespace
{

struct Verdict
{
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string & what)
  {
    if (!ok) {
      pass = false;
      detail << "[violated] " << what << "; ";
    }
  }
};

int failures = 0;

void criterion(const std::string & name, double max_seconds, const std::function<void(Verdict &)> & body)
{
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception & e) {
    v.pass = false;
    v.detail << "exception: " << e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > max_seconds) {
    v.pass = false;
    v.detail << "[violated] runtime " << secs << " s > " << max_seconds << " s; ";
  }
  failures += v.pass ? 0 : 1;
  std::printf("%s  %-34s %6.1f s  %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), secs, v.detail.str().c_str());
  std::fflush(stdout);
}

Series random_series(Rng & rng, Eigen::Index len, Eigen::Index channels)
{
  Series s(len, channels);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    s.data()[i] = uniform(rng, -2.0, 2.0);
  }
  return s;
}

Eigen::VectorXd flatten(const TensorMap & m)
{
  Eigen::Index n = 0;
  for (const auto & [k, t] : m) {
    n += t.size();
  }
  Eigen::VectorXd v(n);
  Eigen::Index o = 0;
  for (const auto & [k, t] : m) {
    v.segment(o, t.size()) = Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
    o += t.size();
  }
  return v;
}

void unflatten(const Eigen::VectorXd & v, TensorMap & m)
{
  Eigen::Index o = 0;
  for (auto & [k, t] : m) {
    Eigen::Map<Eigen::VectorXd>(t.data(), t.size()) = v.segment(o, t.size());
    o += t.size();
  }
}

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

double max_kkt(const classify::SvmModel & m)
{
  const auto & x = m.training_points();
  const double gamma = m.kernel().gamma;
  const bool rbf = m.kernel().kind == classify::KernelKind::Rbf;
  auto k = [&](std::size_t i, std::size_t j) {
    const Eigen::RowVectorXd a = x.row(static_cast<Eigen::Index>(i));
    const Eigen::RowVectorXd b = x.row(static_cast<Eigen::Index>(j));
    return rbf ? std::exp(-gamma * (a - b).squaredNorm()) : a.dot(b);
  };
  double worst = 0.0;
  for (const auto & p : m.problems()) {
    worst = std::max(worst, oracle::kkt_residual(k, p.alpha, p.y, p.rho, m.params().c));
  }
  return worst;
}

std::string fmt(double v)
{
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------------------------

void dtw_oracle(Verdict & v)
{
  Rng rng(2718);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto a = random_series(rng, uniform_int(rng, 1, 6), 3);
    const auto b = random_series(rng, uniform_int(rng, 1, 6), 3);
    worst = std::max(worst, std::abs(dtw::dtw_distance(a, b) - oracle::brute_force_dtw(a, b)));
  }
  v.detail << "200 pairs, max |dp - enumeration| = " << worst << "; ";
  v.check(worst <= 1e-9, "max error <= 1e-9");
}

void perplexity_calibration(Verdict & v)
{
  Rng rng(375);
  double worst = 0.0;
  const int matrices = 20;
  for (int m = 0; m < matrices; ++m) {
    const std::size_t n = 50;
    Eigen::MatrixXd x(n, 1 + m % 6);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x.data()[i] = m % 2 ? gaussian(rng) : uniform(rng, 0.0, 10.0);
    }
    dtw::DistanceMatrix d(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        d.set(i, j, (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).norm());
      }
    }
    const auto a = tsne::calibrate_bandwidths(d, 37.5);
    for (std::size_t i = 0; i < n; ++i) {
      // Realized perplexity straight from the conditional row: exp of its Shannon entropy.
      double h = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double p = a.conditional(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        h -= p > 0.0 ? p * std::log(p) : 0.0;
      }
      worst = std::max(worst, std::abs(std::exp(h) - 37.5) / 37.5);
    }
  }
  v.detail << matrices << " matrices x 50 rows, max relative error " << worst << "; ";
  v.check(worst <= 1e-4, "relative error <= 1e-4");
}

void gradient_checks(Verdict & v)
{
  Rng rng(99);
  // t-SNE KL gradient, both output kernels.
  double tsne_worst = 0.0;
  for (auto mode : {tsne::LowDimMode::StudentT, tsne::LowDimMode::GaussianConditional}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Eigen::Index n = 6;
      tsne::Matrix p(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
          p(i, j) = i == j ? 0.0 : uniform(rng, 0.05, 1.0);
        }
      }
      if (mode == tsne::LowDimMode::StudentT) {
        p = (p + p.transpose()).eval();
        p /= p.sum();
      } else {
        for (Eigen::Index i = 0; i < n; ++i) {
          p.row(i) /= p.row(i).sum();
        }
      }
      tsne::Matrix y(n, 2);
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        y.data()[i] = gaussian(rng);
      }
      const tsne::Matrix g = tsne::kl_gradient(p, y, mode);
      const Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(y.data(), y.size());
      const auto fd = oracle::finite_difference_gradient(
        [&](const Eigen::VectorXd & z) { return tsne::kl_divergence(p, Eigen::Map<const tsne::Matrix>(z.data(), n, 2), mode); },
        flat);
      tsne_worst = std::max(tsne_worst, oracle::max_relative_error(Eigen::Map<const Eigen::VectorXd>(g.data(), g.size()), fd));
    }
  }

  // Classifier network with batch normalization; every parameter tensor.
  double nn_worst = 0.0;
  {
    classify::NnParams params;
    params.hidden = {5, 4};
    classify::NnModel m(3, {0, 1, 2}, params, 7);
    for (auto & [name, t] : m.parameters()) {
      if (name.find("gamma") != std::string::npos) {
        t = Tensor::Random(t.rows(), t.cols()).array() + 1.5;
      } else if (name.find("beta") != std::string::npos) {
        t = Tensor::Random(t.rows(), t.cols());
      }
    }
    classify::Mat x(3, 6);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      x.data()[k] = gaussian(rng);
    }
    const std::vector<Eigen::Index> targets = {0, 2, 1, 2, 0, 1};
    TensorMap grads;
    m.loss(x, targets, &grads);
    for (auto & [name, tensor] : m.parameters()) {
      auto & target = tensor;
      const Eigen::VectorXd flat = Eigen::Map<Eigen::VectorXd>(target.data(), target.size());
      const auto fd = oracle::finite_difference_gradient(
        [&](const Eigen::VectorXd & z) {
          const Tensor saved = target;
          Eigen::Map<Eigen::VectorXd>(target.data(), target.size()) = z;
          const double l = m.loss(x, targets, nullptr);
          target = saved;
          return l;
        },
        flat);
      const auto & g = grads.at(name);
      const Eigen::VectorXd analytic = Eigen::Map<const Eigen::VectorXd>(g.data(), g.size());
      if (fd.cwiseAbs().maxCoeff() < 1e-9) {
        // A bias followed by batch normalization has an identically zero gradient.
        nn_worst = std::max(nn_worst, analytic.cwiseAbs().maxCoeff() <= 1e-9 ? 0.0 : 1.0);
      } else {
        nn_worst = std::max(nn_worst, oracle::max_relative_error(analytic, fd));
      }
    }
  }

  // Auto-encoders: full backward pass through encoder, latent head, KL term and decoder.
  double ae_worst = 0.0;
  for (auto kind : {ae::AeKind::Rae, ae::AeKind::Vrae}) {
    for (auto cell : {ae::CellKind::Lstm, ae::CellKind::Gru}) {
      ae::ModelConfig c;
      c.kind = kind;
      c.cell = cell;
      c.hidden = 3;
      c.latent = 2;
      ae::Model m(c);
      m.initialize(5);
      std::vector<Series> data = {random_series(rng, 4, 3), random_series(rng, 4, 3)};
      const auto xs = ae::make_batch(m, {&data[0], &data[1]});
      ae::Mat eta(2, 2);
      for (Eigen::Index k = 0; k < eta.size(); ++k) {
        eta.data()[k] = gaussian(rng);
      }
      TensorMap grads;
      ae::batch_loss(m, xs, 0.6, &eta, &grads);
      auto probe = m;
      const auto fd = oracle::finite_difference_gradient(
        [&](const Eigen::VectorXd & z) {
          unflatten(z, probe.parameters());
          return ae::batch_loss(probe, xs, 0.6, &eta, nullptr).total;
        },
        flatten(m.parameters()));
      ae_worst = std::max(ae_worst, oracle::max_relative_error(flatten(grads), fd));
    }
  }
  v.detail << "max relative error: t-SNE " << tsne_worst << ", NN+BN " << nn_worst << ", RAE/VRAE " << ae_worst << "; ";
  v.check(tsne_worst <= 1e-4, "t-SNE gradient");
  v.check(nn_worst <= 1e-4, "NN gradient");
  v.check(ae_worst <= 1e-4, "auto-encoder gradient");
}

void strategy_formulas(Verdict & v)
{
  const double margin = al::informativeness_margin(dist({0.5, 0.3, 0.2}));
  const double uniform3 = al::informativeness_entropy(dist({1.0 / 3, 1.0 / 3, 1.0 / 3}));
  const double onehot = al::informativeness_entropy(dist({0.0, 1.0, 0.0}));
  v.detail << "margin " << margin << ", H(uniform3) - ln3 = " << uniform3 - std::log(3.0) << ", H(one-hot) " << onehot << "; ";
  v.check(std::abs(margin + 0.2) <= 1e-12, "margin(0.5, 0.3, 0.2) = -0.2");
  v.check(std::abs(uniform3 - std::log(3.0)) <= 1e-12, "entropy(uniform) = ln 3");
  v.check(std::abs(onehot) <= 1e-12, "entropy(one-hot) = 0");
}

/// Desk-scale dataset and mTSNE embedding used by the session-level criteria.
struct DeskPool
{
  Dataset dataset;
  std::shared_ptr<const al::SessionData> data;
};

const DeskPool & desk_pool()
{
  static const DeskPool pool = [] {
    DeskPool p;
    DatasetSpec spec;
    spec.alpha = 10;
    spec.counts = desk_counts(10);
    spec.seed = 21;
    p.dataset = generate_dataset(spec);
    const auto emb = experiments::build_embedding(p.dataset, EmbeddingTag::MTSNE, experiments::EmbeddingParams::desk(), 21);
    p.data = al::SessionData::from(emb, p.dataset.store, p.dataset.partition);
    return p;
  }();
  return pool;
}

void conservation_and_reproducibility(Verdict & v)
{
  const auto & pool = desk_pool();
  const auto & part = pool.dataset.partition;
  const std::size_t full = part.unlabeled.size();
  auto oracle = al::SimulatedOracle::from_store(pool.dataset.store);
  std::size_t sessions = 0;
  double worst_kkt = 0.0;

  auto run_once = [&](const al::SessionConfig & cfg, bool check_each_step) {
    std::vector<Json> events;
    al::Session s(cfg, part, pool.data, [&](const Json & e) { events.push_back(e); });
    s.start();
    const std::size_t pool_size = part.annotated.size() + part.unlabeled.size();
    std::set<TrajectoryId> seen;
    while (s.status() == al::SessionStatus::AwaitingLabel) {
      const auto q = s.pending().front();
      v.check(seen.insert(q.id).second, "no id is queried twice");
      v.check(std::find(part.unlabeled.begin(), part.unlabeled.end(), q.id) != part.unlabeled.end(), "queries come from the pool");
      s.submit(q.step, q.id, *oracle.ask(q.id, {}));
      if (check_each_step) {
        const auto & p = s.partition();
        v.check(p.annotated.size() + p.unlabeled.size() == pool_size, "|L| + |U| constant");
        v.check(p.annotated.size() == part.annotated.size() + s.query_log().size(), "|L| grows by one per answer");
        v.check(p.test == part.test, "test split untouched");
        v.check(p.is_disjoint(), "splits disjoint");
      }
    }
    v.check(s.status() == al::SessionStatus::Complete, "session completes");
    v.check(s.query_log().size() == cfg.budget, "budget spent exactly");
    v.check(s.metric_history().size() == cfg.budget + 1, "one metric per step");
    if (const auto * svm = s.model().svm()) {
      worst_kkt = std::max(worst_kkt, max_kkt(*svm));
    }
    ++sessions;
    return std::make_tuple(s.query_log(), s.metric_history(), s.partition(), events);
  };

  for (auto strategy : {al::Strategy::Random, al::Strategy::Margin, al::Strategy::Entropy}) {
    for (std::size_t budget : {std::size_t{0}, std::size_t{1}, std::size_t{60}, full}) {
      al::SessionConfig cfg;
      cfg.strategy = strategy;
      cfg.budget = budget;
      cfg.seed = 5;
      const auto a = run_once(cfg, true);
      const auto b = run_once(cfg, false);
      v.check(std::get<0>(a) == std::get<0>(b), "query log reproduces");
      v.check(std::get<1>(a) == std::get<1>(b), "metric history reproduces bit for bit");
      v.check(std::get<2>(a) == std::get<2>(b), "final partition reproduces");
      auto ea = std::get<3>(a), eb = std::get<3>(b);
      for (auto * events : {&ea, &eb}) {
        for (auto & e : *events) {
          e.erase("wall_time_ms");
        }
      }
      v.check(ea == eb, "journal reproduces");
    }
    al::SessionConfig nn;
    nn.strategy = strategy;
    nn.budget = 15;
    nn.seed = 6;
    nn.classifier.tag = classify::ClassifierTag::Nn;
    nn.classifier.nn.epochs = 40;
    const auto a = run_once(nn, true);
    const auto b = run_once(nn, false);
    v.check(std::get<0>(a) == std::get<0>(b) && std::get<1>(a) == std::get<1>(b), "NN session reproduces");
  }
  v.detail << sessions << " sessions, budgets {0, 1, 60, " << full << " = full pool}, KKT of final SVMs <= " << fmt(worst_kkt)
           << "; ";
}

struct StudyResult
{
  std::vector<experiments::CurveSummary> summaries;

  const experiments::CurveSummary & get(al::Strategy s) const
  {
    for (const auto & c : summaries) {
      if (c.cell.strategy == s) {
        return c;
      }
    }
    fail(ErrorKind::NotFound, "strategy missing from study");
  }
};

StudyResult run_study(double alpha, al::SessionMode mode, std::vector<al::Strategy> strategies)
{
  experiments::ExperimentPlan plan;
  plan.alphas = {alpha};
  plan.mode = mode;
  plan.strategies = std::move(strategies);
  plan.repetitions = 10;
  plan.budget = 60;
  plan.base_seed = 0;
  StudyResult r{experiments::run_plan(plan)};
  for (const auto & s : r.summaries) {
    require(s.ok(), s.cell.key() + ": " + s.error.value_or(""));
  }
  return r;
}

const StudyResult & alpha10_study()
{
  static const StudyResult r =
    run_study(10, al::SessionMode::Classification, {al::Strategy::Random, al::Strategy::Margin, al::Strategy::Entropy});
  return r;
}

void strategy_speedup(Verdict & v)
{
  const auto & study = alpha10_study();
  const auto & random = study.get(al::Strategy::Random);
  const std::size_t never = random.mean.size();  // budget + 1
  const auto t_random = experiments::first_step_reaching(random, 0.9).value_or(never);
  v.detail << "pool " << desk_counts(10).unlabeled << "; steps to mean F1 0.9: random "
           << (t_random == never ? std::string("never") : std::to_string(t_random));
  for (auto s : {al::Strategy::Margin, al::Strategy::Entropy}) {
    const auto & c = study.get(s);
    const auto t = experiments::first_step_reaching(c, 0.9).value_or(never);
    v.detail << ", " << al::to_string(s) << " " << (t == never ? std::string("never") : std::to_string(t));
    v.check(t + 10 <= t_random, std::string(al::to_string(s)) + " reaches 0.9 at least 10 queries before random");
  }
  v.detail << "; ";
  for (auto s : {al::Strategy::Margin, al::Strategy::Entropy}) {
    const auto & c = study.get(s);
    double closest = std::numeric_limits<double>::infinity();
    std::size_t at = 0;
    for (std::size_t t = 10; t <= 40; ++t) {
      const double gap = (c.mean[t] - std::sqrt(c.variance[t])) - (random.mean[t] + std::sqrt(random.variance[t]));
      if (gap < closest) {
        closest = gap;
        at = t;
      }
    }
    v.detail << al::to_string(s) << " band gap over steps 10-40 min " << fmt(closest) << " at step " << at << "; ";
    v.check(closest > 0.0, std::string(al::to_string(s)) + " +-1 sd band clear of random at every step 10-40");
  }
}

void fast_convergence(Verdict & v)
{
  const auto a33 = run_study(33, al::SessionMode::Classification, {al::Strategy::Entropy});
  for (const auto & [alpha, study] : {std::pair<double, const StudyResult *>{33, &a33}, {10, &alpha10_study()}}) {
    const auto & c = study->get(al::Strategy::Entropy);
    const auto t = experiments::first_step_reaching(c, 0.95);
    double best = 0.0;
    for (std::size_t s = 0; s <= 25; ++s) {
      best = std::max(best, c.mean[s]);
    }
    v.detail << "alpha " << alpha << ": best mean F1 in 25 queries " << fmt(best) << " (first >= 0.95 at step "
             << (t ? std::to_string(*t) : std::string("never")) << "); ";
    v.check(t && *t <= 25, "alpha " + fmt(alpha) + " reaches mean F1 0.95 within 25 queries");
  }
}

void discovery(Verdict & v)
{
  const auto study =
    run_study(10, al::SessionMode::UnknownClassDiscovery, {al::Strategy::Random, al::Strategy::Margin, al::Strategy::Entropy});
  const double random = study.get(al::Strategy::Random).mean.back();
  v.detail << "mean cut-ins queried after 60: random " << fmt(random);
  for (auto s : {al::Strategy::Margin, al::Strategy::Entropy}) {
    const double found = study.get(s).mean.back();
    v.detail << ", " << al::to_string(s) << " " << fmt(found) << " (" << fmt(found / random) << "x)";
    v.check(found >= 1.5 * random, std::string(al::to_string(s)) + " >= 1.5x random");
  }
  v.detail << "; ";
}

void smo(Verdict & v)
{
  Rng rng(404);
  auto blobs = [&](const std::vector<Eigen::RowVector2d> & centers, int per, double sd) {
    classify::Points x(static_cast<Eigen::Index>(centers.size()) * per, 2);
    std::vector<int> y;
    Eigen::Index r = 0;
    for (std::size_t c = 0; c < centers.size(); ++c) {
      for (int k = 0; k < per; ++k) {
        x.row(r++) = centers[c] + Eigen::RowVector2d(gaussian(rng, 0, sd), gaussian(rng, 0, sd));
        y.push_back(static_cast<int>(c));
      }
    }
    return std::make_pair(x, y);
  };

  double worst = 0.0;
  std::size_t problems = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int classes = uniform_int(rng, 2, 4);
    std::vector<Eigen::RowVector2d> centers;
    for (int c = 0; c < classes; ++c) {
      centers.emplace_back(uniform(rng, -2, 2), uniform(rng, -2, 2));
    }
    const auto [x, y] = blobs(centers, uniform_int(rng, 3, 30), uniform(rng, 0.2, 1.5));
    classify::SvmParams p;
    p.c = std::pow(10.0, uniform(rng, -1, 2));
    p.kernel = trial % 4 == 3 ? classify::KernelKind::Linear : classify::KernelKind::Rbf;
    const auto m = classify::SvmModel::train(x, y, p);
    worst = std::max(worst, max_kkt(m));
    problems += m.problems().size();
  }

  auto [x, y] = blobs({{1, 1}, {-1, -1}, {1, -1}, {-1, 1}}, 20, 0.25);
  for (auto & label : y) {
    label = label < 2 ? 0 : 1;
  }
  classify::SvmParams xor_params;
  xor_params.gamma = 1.0;
  xor_params.c = 10.0;
  const auto m = classify::SvmModel::train(x, y, xor_params);
  worst = std::max(worst, max_kkt(m));
  problems += m.problems().size();
  int correct = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    correct += m.predict_proba(x.row(i)).argmax() == y[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  const double acc = correct / static_cast<double>(x.rows());
  v.detail << problems << " binary problems, max KKT residual " << worst << "; XOR training accuracy " << acc << "; ";
  v.check(worst <= 1e-3, "KKT residual <= 1e-3");
  v.check(acc >= 0.95, "XOR accuracy >= 95%");
}

/// Runs `child` in a forked process and waits for it; returns the raw wait status.
int in_child(const std::function<void()> & child)
{
  std::fflush(stdout);
  const pid_t pid = ::fork();
  require(pid >= 0, "fork failed");
  if (pid == 0) {
    try {
      child();
    } catch (...) {
      ::_exit(3);
    }
    ::_exit(0);
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  return status;
}

void crash_restart(Verdict & v)
{
  // Session level: the child process SIGKILLs itself right after its k-th journal record.
  const auto pool = testing::make_blobs({});
  al::SessionConfig cfg;
  cfg.strategy = al::Strategy::Entropy;
  cfg.budget = 8;
  cfg.batch_size = 2;
  cfg.seed = 9;
  std::vector<Json> reference;
  al::SimulatedOracle oracle(pool.truth);
  const auto full = al::run_session(cfg, pool.partition, pool.data, oracle, [&](const Json & e) { reference.push_back(e); });
  auto strip = [](std::vector<Json> events) {
    for (auto & e : events) {
      e.erase("wall_time_ms");
    }
    return events;
  };

  const auto path = (std::filesystem::temp_directory_path() / ("trajal_accept_" + std::to_string(::getpid()) + ".jsonl")).string();
  std::size_t restarts = 0;
  for (std::size_t k = 1; k <= reference.size(); ++k) {
    std::filesystem::remove(path);
    const int status = in_child([&] {
      al::Journal journal(path, true);
      std::size_t written = 0;
      al::SimulatedOracle child_oracle(pool.truth);
      al::run_session(cfg, pool.partition, pool.data, child_oracle, [&](const Json & e) {
        journal.append(e);
        if (++written == k) {
          ::raise(SIGKILL);
        }
      });
    });
    v.check(WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL, "child killed after record " + std::to_string(k));

    const auto events = al::Journal::read(path);
    v.check(events.size() == k, "journal holds exactly the records written before the kill");
    std::vector<Json> tail;
    auto s = al::Session::replay(events, pool.data, [&](const Json & e) { tail.push_back(e); });
    // State after replay equals the reference state at the same point.
    std::size_t answered = 0;
    for (const auto & e : events) {
      answered += e["event"] == "label-received" ? 1 : 0;
    }
    const std::vector<al::QueryRecord> expected_log(full.query_log().begin(), full.query_log().begin() + static_cast<std::ptrdiff_t>(answered));
    v.check(s.query_log() == expected_log, "replayed log matches at record " + std::to_string(k));
    auto joined = events;
    joined.insert(joined.end(), tail.begin(), tail.end());
    const auto ref = strip(reference);
    const auto got = strip(joined);
    v.check(got.size() <= ref.size() && std::equal(got.begin(), got.end(), ref.begin()), "journal + regenerated tail is a prefix");
    while (s.status() == al::SessionStatus::AwaitingLabel) {
      const auto q = s.pending().front();
      s.submit(q.step, q.id, *oracle.ask(q.id, {}));
    }
    v.check(s.query_log() == full.query_log() && s.metric_history() == full.metric_history() && s.partition() == full.partition(),
            "restarted session finishes identically after record " + std::to_string(k));
    ++restarts;
  }
  std::filesystem::remove(path);

  // Service level: a live server process is killed mid-session and a new registry recovers it.
  const auto & data = testing::service_data();
  const auto journals = std::filesystem::temp_directory_path() / ("trajal_accept_service_" + std::to_string(::getpid()));
  std::filesystem::remove_all(journals);
  int fds[2];
  require(::pipe(fds) == 0, "pipe failed");
  std::fflush(stdout);
  const pid_t pid = ::fork();
  require(pid >= 0, "fork failed");
  if (pid == 0) {
    ::close(fds[0]);
    service::Registry registry(service::ServiceConfig{data.root.string(), journals.string(), true});
    service::Server server(registry);
    const int port = server.bind("127.0.0.1", 0);
    (void)!::write(fds[1], &port, sizeof port);
    server.serve();
    ::_exit(0);
  }
  ::close(fds[1]);
  int port = 0;
  require(::read(fds[0], &port, sizeof port) == static_cast<ssize_t>(sizeof port), "server did not report its port");
  ::close(fds[0]);

  Json handle, log, metrics, next;
  {
    httplib::Client client("127.0.0.1", port);
    client.set_read_timeout(60);
    auto created = client.Post(
      "/sessions", Json{{"id", "live"}, {"dataset", data.manifest}, {"embedding", data.embedding}, {"config", {{"budget", 8}}}}.dump(),
      "application/json");
    v.check(created && created->status == 201, "live session created");
    for (int k = 0; k < 3 && created; ++k) {
      const auto q = Json::parse(client.Get("/sessions/live/next")->body);
      const TrajectoryId tid{q["trajectory"]["id"].get<std::uint32_t>()};
      client.Post("/sessions/live/labels",
                  Json{{"step", q["step"]}, {"trajectory_id", to_index(tid)}, {"label", to_string(testing::truth(tid))}}.dump(),
                  "application/json");
    }
    handle = Json::parse(client.Get("/sessions/live")->body);
    log = Json::parse(client.Get("/sessions/live/log")->body);
    metrics = Json::parse(client.Get("/sessions/live/metrics")->body);
    next = Json::parse(client.Get("/sessions/live/next")->body);
  }
  ::kill(pid, SIGKILL);
  int status = 0;
  ::waitpid(pid, &status, 0);
  v.check(WIFSIGNALED(status) && WTERMSIG(status) == SIGKILL, "server process killed");

  service::Registry recovered(service::ServiceConfig{data.root.string(), journals.string(), true});
  v.check(recovered.recover() == 1, "one session recovered");
  auto restored = recovered.handle("live");
  v.check(restored["status"] == "Suspended", "recovered session is suspended");
  restored["status"] = handle["status"];
  v.check(restored == handle, "session handle identical");
  v.check(recovered.log("live") == log, "query log identical");
  v.check(recovered.metrics("live") == metrics, "metric history identical");
  v.check(recovered.next("live") == next, "pending query identical");
  std::filesystem::remove_all(journals);
  v.detail << restarts << " kill points (every journal record) replayed and finished; live server killed after 3 labels and recovered; ";
}

}  // namespace

int main()
{
  criterion("dtw-oracle-equivalence", 10, dtw_oracle);
  criterion("perplexity-calibration", 5, perplexity_calibration);
  criterion("gradient-checks", 60, gradient_checks);
  criterion("query-strategy-formulas", 1, strategy_formulas);
  criterion("conservation-reproducibility", 900, conservation_and_reproducibility);
  criterion("strategy-speedup-alpha10", 900, strategy_speedup);
  criterion("f1-0.95-within-25-queries", 900, fast_convergence);
  criterion("unknown-class-discovery", 900, discovery);
  criterion("smo-kkt-and-xor", 60, smo);
  criterion("crash-restart", 300, crash_restart);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
