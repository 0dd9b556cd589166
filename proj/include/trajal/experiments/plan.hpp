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
#include "trajal/experiments/pipeline.hpp"

#include <filesystem>
#include <map>
#include <sstream>

/**
 * @file plan.hpp
 *
 * Repeated AL sessions over a grid of embedding, classifier, strategy and cut-in share.
 * Repetition r uses seed base + r for the dataset, the embedding and the session, so the cells
 * of one repetition see the same data and the same embedding and differ only in the grid axes.
 */

namespace trajal::experiments
{

struct GridCell
{
  EmbeddingTag embedding = EmbeddingTag::MTSNE;
  classify::ClassifierTag classifier = classify::ClassifierTag::Svm;
  al::Strategy strategy = al::Strategy::Entropy;
  double alpha = 10.0;

  std::string key() const
  {
    std::ostringstream s;
    s << to_string(embedding) << '_' << classify::to_string(classifier) << '_' << al::to_string(strategy) << "_a"
      << format_number(alpha);
    return s.str();
  }

  bool operator==(const GridCell &) const = default;
};

inline Json cell_to_json(const GridCell & c)
{
  return {{"embedding", to_string(c.embedding)},
          {"classifier", classify::to_string(c.classifier)},
          {"strategy", al::to_string(c.strategy)},
          {"alpha", c.alpha}};
}

struct ExperimentPlan
{
  std::vector<EmbeddingTag> embeddings{EmbeddingTag::MTSNE};
  std::vector<classify::ClassifierTag> classifiers{classify::ClassifierTag::Svm};
  std::vector<al::Strategy> strategies{al::Strategy::Random, al::Strategy::Margin, al::Strategy::Entropy};
  std::vector<double> alphas{10.0};
  std::size_t repetitions = 10;
  std::size_t budget = 60;
  bool desk = true;  //!< tenth-size pools and small models
  std::uint64_t base_seed = 0;
  al::SessionMode mode = al::SessionMode::Classification;
  std::size_t workers = 1;
  std::optional<SplitCounts> counts;  //!< overrides the split sizes derived from alpha
  EmbeddingParams embedding = EmbeddingParams::desk();
  classify::ClassifierConfig classifier{};
  GeneratorParams generator{};
  std::optional<std::string> journal_dir;  //!< one session journal per (cell, repetition) when set

  void validate() const
  {
    require(repetitions >= 1, "plan: repetitions must be >= 1");
    require(
      !embeddings.empty() && !classifiers.empty() && !strategies.empty() && !alphas.empty(), "plan: empty grid axis");
    auto unique = [](auto v) {
      std::sort(v.begin(), v.end());
      return std::adjacent_find(v.begin(), v.end()) == v.end();
    };
    require(
      unique(embeddings) && unique(classifiers) && unique(strategies) && unique(alphas), "plan: repeated grid axis value");
  }

  std::vector<GridCell> cells() const
  {
    std::vector<GridCell> out;
    for (double a : alphas) {
      for (auto e : embeddings) {
        for (auto c : classifiers) {
          for (auto s : strategies) {
            out.push_back({e, c, s, a});
          }
        }
      }
    }
    return out;
  }

  SplitCounts split_counts(double alpha) const
  {
    if (counts) {
      return *counts;
    }
    return desk ? desk_counts(alpha) : reference_counts(alpha);
  }

  std::uint64_t seed(std::size_t repetition) const noexcept { return base_seed + repetition; }

  al::SessionConfig session_config(const GridCell & cell, std::size_t repetition) const
  {
    al::SessionConfig c;
    c.embedding = cell.embedding;
    c.classifier = classifier;
    c.classifier.tag = cell.classifier;
    if (cell.classifier == classify::ClassifierTag::Nn && cell.embedding == EmbeddingTag::VRAE) {
      c.classifier.nn.hidden = classify::NnParams::vrae_widths().hidden;
    }
    c.strategy = cell.strategy;
    c.budget = budget;
    c.seed = seed(repetition);
    c.mode = mode;
    return c;
  }
};

inline std::string journal_path(const std::string & dir, const GridCell & cell, std::size_t repetition)
{
  return (std::filesystem::path(dir) / (cell.key() + "_r" + std::to_string(repetition) + ".jsonl")).string();
}

struct CurveSummary
{
  GridCell cell;
  std::vector<double> mean;      //!< per step, length budget + 1
  std::vector<double> variance;  //!< unbiased across repetitions; 0 for a single repetition
  std::vector<std::vector<double>> curves;
  std::vector<std::uint64_t> seeds;
  std::optional<std::string> error;

  bool ok() const noexcept { return !error.has_value(); }
  bool operator==(const CurveSummary &) const = default;
};

inline void aggregate(CurveSummary & s)
{
  s.mean.clear();
  s.variance.clear();
  if (s.curves.empty()) {
    return;
  }
  const std::size_t steps = s.curves.front().size();
  const double n = static_cast<double>(s.curves.size());
  for (std::size_t t = 0; t < steps; ++t) {
    double sum = 0.0;
    for (const auto & c : s.curves) {
      sum += c.at(t);
    }
    const double m = sum / n;
    double ss = 0.0;
    for (const auto & c : s.curves) {
      ss += (c[t] - m) * (c[t] - m);
    }
    s.mean.push_back(m);
    s.variance.push_back(s.curves.size() > 1 ? ss / (n - 1.0) : 0.0);
  }
}

/**
 * @brief Runs every grid cell for every repetition.
 *
 * A failing session marks its cell with the error and drops it; the other cells still run.
 * Datasets and embeddings are built once per (alpha, repetition) and (alpha, embedding,
 * repetition) and shared by the cells that need them.
 */
inline std::vector<CurveSummary> run_plan(const ExperimentPlan & plan)
{
  plan.validate();
  const auto cells = plan.cells();
  const std::size_t reps = plan.repetitions;

  // Datasets.
  std::vector<std::optional<Dataset>> datasets(plan.alphas.size() * reps);
  std::vector<std::string> dataset_errors(datasets.size());
  parallel_for(datasets.size(), plan.workers, [&](std::size_t k) {
    const std::size_t a = k / reps, r = k % reps;
    try {
      DatasetSpec spec;
      spec.alpha = plan.alphas[a];
      spec.counts = plan.split_counts(spec.alpha);
      spec.seed = plan.seed(r);
      spec.generator = plan.generator;
      datasets[k] = generate_dataset(spec);
    } catch (const std::exception & e) {
      dataset_errors[k] = e.what();
    }
  });

  // Embeddings.
  const std::size_t n_emb = plan.embeddings.size();
  std::vector<std::shared_ptr<const al::SessionData>> data(plan.alphas.size() * n_emb * reps);
  std::vector<std::string> data_errors(data.size());
  std::optional<std::vector<ClassLabel>> ae_classes;
  if (plan.mode == al::SessionMode::UnknownClassDiscovery) {
    ae_classes = al::SessionConfig{}.known_classes;
  }
  parallel_for(data.size(), plan.workers, [&](std::size_t k) {
    const std::size_t a = k / (n_emb * reps), e = (k / reps) % n_emb, r = k % reps;
    const std::size_t d = a * reps + r;
    if (!datasets[d]) {
      data_errors[k] = dataset_errors[d];
      return;
    }
    try {
      const auto emb = build_embedding(*datasets[d], plan.embeddings[e], plan.embedding, plan.seed(r), 1, ae_classes);
      data[k] = al::SessionData::from(emb, datasets[d]->store, datasets[d]->partition, plan.mode);
    } catch (const std::exception & ex) {
      data_errors[k] = ex.what();
    }
  });

  auto data_index = [&](const GridCell & c, std::size_t r) {
    const auto a = static_cast<std::size_t>(std::find(plan.alphas.begin(), plan.alphas.end(), c.alpha) - plan.alphas.begin());
    const auto e = static_cast<std::size_t>(
      std::find(plan.embeddings.begin(), plan.embeddings.end(), c.embedding) - plan.embeddings.begin());
    return (a * n_emb + e) * reps + r;
  };

  // Sessions.
  std::vector<std::vector<double>> curves(cells.size() * reps);
  std::vector<std::string> errors(curves.size());
  parallel_for(curves.size(), plan.workers, [&](std::size_t k) {
    const auto & cell = cells[k / reps];
    const std::size_t r = k % reps;
    const auto di = data_index(cell, r);
    if (!data[di]) {
      errors[k] = data_errors[di];
      return;
    }
    try {
      const auto & ds = *datasets[(di / (n_emb * reps)) * reps + r];
      auto oracle = al::SimulatedOracle::from_store(ds.store);
      al::Session::Sink sink;
      std::shared_ptr<al::Journal> journal;
      if (plan.journal_dir) {
        const auto path = journal_path(*plan.journal_dir, cell, r);
        std::filesystem::remove(path);
        journal = std::make_shared<al::Journal>(path);
        sink = [journal](const Json & e) { journal->append(e); };
      }
      const auto s = al::run_session(plan.session_config(cell, r), ds.partition, data[di], oracle, sink);
      curves[k] = s.metric_history();
    } catch (const std::exception & e) {
      errors[k] = e.what();
    }
  });

  std::vector<CurveSummary> out;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CurveSummary s;
    s.cell = cells[c];
    for (std::size_t r = 0; r < reps; ++r) {
      s.seeds.push_back(plan.seed(r));
      const auto & err = errors[c * reps + r];
      if (!err.empty() && !s.error) {
        s.error = "repetition " + std::to_string(r) + ": " + err;
      }
      s.curves.push_back(curves[c * reps + r]);
    }
    if (s.error) {
      s.curves.clear();
    }
    aggregate(s);
    out.push_back(std::move(s));
  }
  return out;
}

/// Mean of each repetition's curve over steps [first, last].
inline std::vector<double> window_means(const CurveSummary & s, std::size_t first, std::size_t last)
{
  require(first <= last && last < s.mean.size(), "window outside the curve");
  std::vector<double> out;
  for (const auto & c : s.curves) {
    double sum = 0.0;
    for (std::size_t t = first; t <= last; ++t) {
      sum += c[t];
    }
    out.push_back(sum / static_cast<double>(last - first + 1));
  }
  return out;
}

/// First step whose mean metric reaches `threshold`; nothing if it never does.
inline std::optional<std::size_t> first_step_reaching(const CurveSummary & s, double threshold)
{
  for (std::size_t t = 0; t < s.mean.size(); ++t) {
    if (s.mean[t] >= threshold) {
      return t;
    }
  }
  return std::nullopt;
}

struct StrategyScore
{
  al::Strategy strategy;
  double mean = 0.0;            //!< across repetitions of the per-repetition window mean
  double standard_error = 0.0;  //!< sample sd / sqrt(repetitions)
};

struct StrategyComparison
{
  std::vector<StrategyScore> ranking;  //!< best first

  /// True when `a`'s two-standard-error band lies entirely above `b`'s.
  bool separated(al::Strategy a, al::Strategy b) const
  {
    const auto & sa = find(a);
    const auto & sb = find(b);
    return sa.mean - 2.0 * sa.standard_error > sb.mean + 2.0 * sb.standard_error;
  }

  const StrategyScore & find(al::Strategy s) const
  {
    for (const auto & r : ranking) {
      if (r.strategy == s) {
        return r;
      }
    }
    fail(ErrorKind::NotFound, "comparison has no strategy " + std::string(al::to_string(s)));
  }
};

inline StrategyComparison compare_strategies(const std::vector<CurveSummary> & summaries, std::size_t first, std::size_t last)
{
  require(!summaries.empty(), "compare_strategies: no summaries");
  const auto & ref = summaries.front();
  for (const auto & s : summaries) {
    if (!s.ok()) {
      fail(ErrorKind::InvalidArgument, "compare_strategies: cell " + s.cell.key() + " failed");
    }
    if (s.cell.embedding != ref.cell.embedding || s.cell.classifier != ref.cell.classifier || s.cell.alpha != ref.cell.alpha ||
        s.mean.size() != ref.mean.size() || s.seeds != ref.seeds) {
      fail(ErrorKind::InvalidArgument, "compare_strategies: summaries differ in more than the strategy");
    }
  }
  StrategyComparison out;
  for (const auto & s : summaries) {
    const auto w = window_means(s, first, last);
    double m = 0.0;
    for (double v : w) {
      m += v;
    }
    m /= static_cast<double>(w.size());
    double ss = 0.0;
    for (double v : w) {
      ss += (v - m) * (v - m);
    }
    const double sd = w.size() > 1 ? std::sqrt(ss / static_cast<double>(w.size() - 1)) : 0.0;
    out.ranking.push_back({s.cell.strategy, m, sd / std::sqrt(static_cast<double>(w.size()))});
  }
  std::stable_sort(out.ranking.begin(), out.ranking.end(), [](const auto & a, const auto & b) { return a.mean > b.mean; });
  return out;
}

/// One `<cell>.tsv` per successful cell (step, mean, variance, sd) plus `manifest.json`.
inline void write_summaries(const std::string & dir, const std::vector<CurveSummary> & summaries, const ExperimentPlan & plan)
{
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    fail(ErrorKind::Io, "cannot create output directory " + dir);
  }
  Json cells = Json::array();
  for (const auto & s : summaries) {
    Json entry = {{"cell", cell_to_json(s.cell)}, {"key", s.cell.key()}, {"seeds", s.seeds}};
    if (s.error) {
      entry["error"] = *s.error;
    } else {
      const auto file = s.cell.key() + ".tsv";
      auto out = open_output((std::filesystem::path(dir) / file).string());
      out << "step\tmean\tvariance\tsd\n";
      for (std::size_t t = 0; t < s.mean.size(); ++t) {
        out << t << '\t' << format_number(s.mean[t]) << '\t' << format_number(s.variance[t]) << '\t'
            << format_number(std::sqrt(s.variance[t])) << '\n';
      }
      entry["file"] = file;
    }
    cells.push_back(entry);
  }
  const Json manifest = {{"repetitions", plan.repetitions},
                         {"budget", plan.budget},
                         {"desk", plan.desk},
                         {"base_seed", plan.base_seed},
                         {"mode", al::to_string(plan.mode)},
                         {"cells", cells}};
  auto out = open_output((std::filesystem::path(dir) / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

}  // namespace trajal::experiments
