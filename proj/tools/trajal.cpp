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

// trajal: dataset generation, embeddings, simulated AL runs, experiment grids and the annotation service.

#include "trajal/ae/model.hpp"
#include "trajal/core/io.hpp"
#include "trajal/experiments/plan.hpp"
#include "trajal/service/server.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace trajal;

namespace
{

template <class T, class Parse>
T parse_or_throw(const std::string & text, Parse parse, const char * what)
{
  const auto v = parse(text);
  if (!v) {
    fail(ErrorKind::InvalidArgument, std::string("unknown ") + what + ": " + text);
  }
  return *v;
}

EmbeddingTag embedding_of(const std::string & s)
{
  return parse_or_throw<EmbeddingTag>(s, parse_embedding_tag, "embedding");
}

void print_json(const Json & j)
{
  std::cout << j.dump(2) << '\n';
}

Json read_json(const std::string & path)
{
  auto in = open_input(path);
  try {
    return Json::parse(in);
  } catch (const Json::exception & e) {
    fail(ErrorKind::Io, path + ": " + e.what());
  }
}

// Flags shared by every command that touches the generator.
struct GeneratorFlags
{
  std::string config_path;

  void add(CLI::App & app) { app.add_option("--generator-config", config_path, "JSON file with generator parameters"); }

  GeneratorParams params() const
  {
    return config_path.empty() ? GeneratorParams{} : read_json(config_path).get<GeneratorParams>();
  }
};

struct EmbeddingFlags
{
  bool full = false;
  double perplexity = 37.5;
  int iterations = -1;
  int output_dim = 2;
  std::string low_dim = "student-t";
  double learning_rate = 200.0;
  int window = -1;
  bool no_velocity = false;
  int hidden = -1;
  int latent = -1;
  int layers = 2;
  std::string cell = "lstm";
  int epochs = -1;
  double ae_learning_rate = 1e-3;
  std::size_t ae_batch = 32;

  void add(CLI::App & app)
  {
    app.add_flag("--full", full, "full-width models (1000 t-SNE iterations, H = L = 64)");
    app.add_option("--perplexity", perplexity, "t-SNE perplexity");
    app.add_option("--tsne-iterations", iterations, "t-SNE iterations (default from --full)");
    app.add_option("--output-dim", output_dim, "t-SNE output dimension");
    app.add_option("--low-dim", low_dim, "t-SNE output kernel")->check(CLI::IsMember({"student-t", "gaussian"}));
    app.add_option("--tsne-learning-rate", learning_rate);
    app.add_option("--dtw-window", window, "Sakoe-Chiba band half-width (unset: none)");
    app.add_flag("--no-velocity", no_velocity, "drop the velocity channel");
    app.add_option("--hidden", hidden, "auto-encoder hidden size");
    app.add_option("--latent", latent, "auto-encoder latent size");
    app.add_option("--layers", layers, "recurrent layers");
    app.add_option("--cell", cell, "recurrent cell")->check(CLI::IsMember({"lstm", "gru"}));
    app.add_option("--ae-epochs", epochs, "auto-encoder epochs");
    app.add_option("--ae-learning-rate", ae_learning_rate);
    app.add_option("--ae-batch", ae_batch, "largest same-length batch");
  }

  experiments::EmbeddingParams params() const
  {
    auto p = full ? experiments::EmbeddingParams::full() : experiments::EmbeddingParams::desk();
    p.tsne.perplexity = perplexity;
    p.tsne.output_dim = static_cast<std::size_t>(output_dim);
    p.tsne.learning_rate = learning_rate;
    if (low_dim == "gaussian") {
      p.tsne.mode = tsne::LowDimMode::GaussianConditional;
    }
    if (iterations >= 0) {
      p.tsne.iterations = iterations;
    }
    if (window >= 0) {
      p.dtw.dtw.window = static_cast<std::size_t>(window);
    }
    p.dtw.channels = ChannelSelection{!no_velocity};
    p.ae.use_velocity = !no_velocity;
    p.ae.layers = layers;
    p.ae.cell = ae::parse_cell_kind(cell);
    if (hidden > 0) {
      p.ae.hidden = hidden;
    }
    if (latent > 0) {
      p.ae.latent = latent;
    }
    if (epochs >= 0) {
      p.ae_train.epochs = epochs;
    }
    p.ae_train.adam.learning_rate = ae_learning_rate;
    p.ae_train.max_batch = ae_batch;
    return p;
  }
};

struct ClassifierFlags
{
  std::string tag = "SVM";
  std::string kernel = "rbf";
  double c = 1.0;
  double gamma = 0.0;
  double tolerance = 1e-3;
  std::vector<int> hidden;
  int epochs = 150;
  std::size_t batch = 32;
  double learning_rate = 1e-3;

  void add(CLI::App & app)
  {
    app.add_option("--classifier", tag, "SVM or NN")->check(CLI::IsMember({"SVM", "NN", "svm", "nn"}));
    app.add_option("--svm-kernel", kernel)->check(CLI::IsMember({"rbf", "linear"}));
    app.add_option("--svm-c", c, "box constraint");
    app.add_option("--svm-gamma", gamma, "RBF width (0: scale heuristic)");
    app.add_option("--svm-tolerance", tolerance);
    app.add_option("--nn-hidden", hidden, "hidden layer widths")->delimiter(',');
    app.add_option("--nn-epochs", epochs);
    app.add_option("--nn-batch", batch);
    app.add_option("--nn-learning-rate", learning_rate);
  }

  classify::ClassifierConfig config() const
  {
    classify::ClassifierConfig cfg;
    cfg.tag = parse_or_throw<classify::ClassifierTag>(tag, classify::parse_classifier_tag, "classifier");
    cfg.svm.kernel = kernel == "linear" ? classify::KernelKind::Linear : classify::KernelKind::Rbf;
    cfg.svm.c = c;
    cfg.svm.tolerance = tolerance;
    if (gamma > 0.0) {
      cfg.svm.gamma = gamma;
    }
    if (!hidden.empty()) {
      cfg.nn.hidden = hidden;
    }
    cfg.nn.epochs = epochs;
    cfg.nn.batch_size = batch;
    cfg.nn.adam.learning_rate = learning_rate;
    return cfg;
  }
};

int generate(double alpha, const std::optional<SplitCounts> & counts, bool full, std::uint64_t seed, const GeneratorFlags & gen,
             const std::string & out)
{
  DatasetSpec spec;
  spec.alpha = alpha;
  spec.counts = counts ? *counts : (full ? reference_counts(alpha) : desk_counts(alpha));
  spec.seed = seed;
  spec.generator = gen.params();
  const auto ds = generate_dataset(spec);
  print_json({{"manifest", save_dataset(out, ds)},
              {"trajectories", ds.store.size()},
              {"annotated", ds.partition.annotated.size()},
              {"unlabeled", ds.partition.unlabeled.size()},
              {"test", ds.partition.test.size()}});
  return 0;
}

std::optional<std::vector<ClassLabel>> known_only(bool discovery)
{
  if (!discovery) {
    return std::nullopt;
  }
  return std::vector<ClassLabel>{ClassLabel::LeftDriveBy, ClassLabel::RightDriveBy};
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Active learning for vehicle trajectory classification"};
  app.require_subcommand(1);
  std::size_t workers = 1;
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

  // generate
  auto * gen_cmd = app.add_subcommand("generate", "synthesize a labelled trajectory dataset");
  double alpha = 10.0;
  std::uint64_t seed = 0;
  bool full_counts = false;
  std::vector<std::size_t> counts;
  std::string out;
  GeneratorFlags gen_flags;
  gen_cmd->add_option("--alpha", alpha, "cut-in percentage of the unlabeled and test splits");
  gen_cmd->add_option("--seed", seed);
  gen_cmd->add_flag("--full", full_counts, "reference split sizes instead of the tenth-size desk splits");
  gen_cmd->add_option("--counts", counts, "annotated,unlabeled,test")->delimiter(',')->expected(3);
  gen_cmd->add_option("--out", out, "output directory")->required();
  gen_flags.add(*gen_cmd);

  // embed
  auto * embed_cmd = app.add_subcommand("embed", "embed every trajectory of a dataset");
  std::string dataset, method = "mTSNE", checkpoint;
  bool discovery_ae = false;
  EmbeddingFlags emb_flags;
  embed_cmd->add_option("--dataset", dataset, "dataset manifest")->required();
  embed_cmd->add_option("--method", method, "mTSNE, RAE or VRAE");
  embed_cmd->add_option("--checkpoint", checkpoint, "encode with a trained auto-encoder instead of training one");
  embed_cmd->add_flag("--known-only", discovery_ae, "train the auto-encoder on drive-bys only");
  embed_cmd->add_option("--seed", seed);
  embed_cmd->add_option("--out", out, "embedding file")->required();
  emb_flags.add(*embed_cmd);

  // train-ae
  auto * ae_cmd = app.add_subcommand("train-ae", "train a recurrent auto-encoder and save a checkpoint");
  std::string kind = "rae", trace;
  ae_cmd->add_option("--dataset", dataset, "dataset manifest")->required();
  ae_cmd->add_option("--kind", kind, "rae or vrae")->check(CLI::IsMember({"rae", "vrae", "RAE", "VRAE"}));
  ae_cmd->add_flag("--known-only", discovery_ae, "train on drive-bys only");
  ae_cmd->add_option("--seed", seed);
  ae_cmd->add_option("--out", out, "checkpoint file")->required();
  ae_cmd->add_option("--trace", trace, "loss trace file");
  emb_flags.add(*ae_cmd);

  // run-al
  auto * al_cmd = app.add_subcommand("run-al", "run one active-learning session against the ground-truth oracle");
  std::string embedding_path, strategy = "entropy", mode = "classification", journal;
  std::size_t budget = 60, batch = 1;
  ClassifierFlags clf_flags;
  al_cmd->add_option("--dataset", dataset, "dataset manifest")->required();
  al_cmd->add_option("--embedding", embedding_path, "embedding file")->required();
  al_cmd->add_option("--strategy", strategy, "random, margin or entropy");
  al_cmd->add_option("--mode", mode, "classification or discovery");
  al_cmd->add_option("--budget", budget);
  al_cmd->add_option("--batch-size", batch);
  al_cmd->add_option("--seed", seed);
  al_cmd->add_option("--journal", journal, "append session events to this file");
  clf_flags.add(*al_cmd);

  // run-plan
  auto * plan_cmd = app.add_subcommand("run-plan", "run a grid of repeated sessions and write averaged curves");
  std::vector<std::string> embeddings{"mTSNE"}, classifiers{"SVM"}, strategies{"random", "margin", "entropy"};
  std::vector<double> alphas{10.0};
  std::size_t reps = 10;
  std::string journal_dir;
  plan_cmd->add_option("--embeddings", embeddings)->delimiter(',');
  plan_cmd->add_option("--classifiers", classifiers)->delimiter(',');
  plan_cmd->add_option("--strategies", strategies)->delimiter(',');
  plan_cmd->add_option("--alphas", alphas)->delimiter(',');
  plan_cmd->add_option("--repetitions", reps);
  plan_cmd->add_option("--budget", budget);
  plan_cmd->add_option("--seed", seed, "base seed; repetition r uses seed + r");
  plan_cmd->add_option("--mode", mode, "classification or discovery");
  plan_cmd->add_option("--counts", counts, "annotated,unlabeled,test")->delimiter(',')->expected(3);
  plan_cmd->add_option("--journal-dir", journal_dir, "keep one journal per session here");
  plan_cmd->add_option("--out", out, "curve directory")->required();
  plan_cmd->add_flag("--full-counts", full_counts, "reference split sizes");
  emb_flags.add(*plan_cmd);
  clf_flags.add(*plan_cmd);
  gen_flags.add(*plan_cmd);

  // serve
  auto * serve_cmd = app.add_subcommand("serve", "run the annotation service");
  std::string host = "127.0.0.1", data_dir = ".", static_dir;
  int port = 8080;
  bool sync = false;
  std::string serve_journals = "journals";
  serve_cmd->add_option("--host", host);
  serve_cmd->add_option("--port", port, "0 picks a free port");
  serve_cmd->add_option("--data-dir", data_dir, "root for dataset and embedding paths");
  serve_cmd->add_option("--journal-dir", serve_journals, "session journals");
  serve_cmd->add_option("--static-dir", static_dir, "UI bundle served under /ui");
  serve_cmd->add_flag("--fsync", sync, "fsync every journal line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);
    }
    std::cerr << Json{{"error", "usage"}, {"detail", e.what()}}.dump() << '\n';
    return 2;
  }

  try {
    const auto opt_counts = [&]() -> std::optional<SplitCounts> {
      if (counts.empty()) {
        return std::nullopt;
      }
      return SplitCounts{counts[0], counts[1], counts[2]};
    };
    const auto session_mode = [&] { return parse_or_throw<al::SessionMode>(mode, al::parse_session_mode, "mode"); };

    if (*gen_cmd) {
      return generate(alpha, opt_counts(), full_counts, seed, gen_flags, out);
    }

    if (*embed_cmd) {
      const auto ds = load_dataset(dataset);
      const auto tag = embedding_of(method);
      Embedding emb = [&] {
        if (!checkpoint.empty()) {
          require(tag != EmbeddingTag::MTSNE, "--checkpoint needs an auto-encoder method");
          std::vector<TrajectoryId> all;
          for (const auto & t : ds.store.all()) {
            all.push_back(t.id());
          }
          return ae::embed_pool(ae::load_checkpoint(checkpoint), ds.store, all, workers);
        }
        return experiments::build_embedding(ds, tag, emb_flags.params(), seed, workers, known_only(discovery_ae));
      }();
      save_embedding(out, emb);
      print_json({{"embedding", out}, {"method", to_string(emb.tag())}, {"points", emb.size()}, {"dimension", emb.dimension()}});
      return 0;
    }

    if (*ae_cmd) {
      const auto ds = load_dataset(dataset);
      auto params = emb_flags.params();
      const auto tag = ae::embedding_tag(ae::parse_ae_kind(kind));
      auto model_cfg = params.ae;
      model_cfg.kind = ae::parse_ae_kind(kind);
      std::vector<TrajectoryId> ids = ds.partition.annotated;
      ids.insert(ids.end(), ds.partition.unlabeled.begin(), ds.partition.unlabeled.end());
      std::sort(ids.begin(), ids.end());
      if (discovery_ae) {
        ids = experiments::filter_by_class(ds.store, ids, *known_only(true));
      }
      ae::Model model(model_cfg);
      auto train_cfg = params.ae_train;
      train_cfg.seed = seed;
      const auto result = ae::train(model, ae::load_pool(ds.store, ids, ChannelSelection{model_cfg.use_velocity}), train_cfg);
      ae::save_checkpoint(out, model);
      if (!trace.empty()) {
        ae::save_loss_trace(trace, result.loss_trace);
      }
      print_json({{"checkpoint", out},
                  {"kind", to_string(tag)},
                  {"training_size", ids.size()},
                  {"final_loss", result.loss_trace.empty() ? Json(nullptr) : Json(result.loss_trace.back())}});
      return 0;
    }

    if (*al_cmd) {
      const auto ds = load_dataset(dataset);
      const auto emb = load_embedding(embedding_path);
      al::SessionConfig cfg;
      cfg.embedding = emb.tag();
      cfg.classifier = clf_flags.config();
      cfg.strategy = parse_or_throw<al::Strategy>(strategy, al::parse_strategy, "strategy");
      cfg.budget = budget;
      cfg.batch_size = batch;
      cfg.seed = seed;
      cfg.mode = session_mode();
      cfg.workers = workers;
      const auto data = al::SessionData::from(emb, ds.store, ds.partition, cfg.mode);
      auto oracle = al::SimulatedOracle::from_store(ds.store);
      std::optional<al::Journal> sink_journal;
      al::Session::Sink sink;
      if (!journal.empty()) {
        sink_journal.emplace(journal);
        sink = [&](const Json & e) { sink_journal->append(e); };
      }
      const auto session = al::run_session(cfg, ds.partition, data, oracle, sink);
      Json queries = Json::array();
      for (const auto & q : session.query_log()) {
        queries.push_back({{"step", q.step}, {"id", to_index(q.id)}, {"informativeness", q.informativeness},
                           {"label", q.answer ? Json(al::to_string(*q.answer)) : Json(nullptr)}});
      }
      print_json({{"status", al::to_string(session.status())},
                  {"metric", cfg.mode == al::SessionMode::Classification ? "macro_f1" : "unknown_count"},
                  {"history", session.metric_history()},
                  {"queries", queries}});
      return 0;
    }

    if (*plan_cmd) {
      experiments::ExperimentPlan plan;
      plan.embeddings.clear();
      for (const auto & e : embeddings) {
        plan.embeddings.push_back(embedding_of(e));
      }
      plan.classifiers.clear();
      for (const auto & c : classifiers) {
        plan.classifiers.push_back(parse_or_throw<classify::ClassifierTag>(c, classify::parse_classifier_tag, "classifier"));
      }
      plan.strategies.clear();
      for (const auto & s : strategies) {
        plan.strategies.push_back(parse_or_throw<al::Strategy>(s, al::parse_strategy, "strategy"));
      }
      plan.alphas = alphas;
      plan.repetitions = reps;
      plan.budget = budget;
      plan.desk = !full_counts;
      plan.base_seed = seed;
      plan.mode = session_mode();
      plan.workers = workers;
      plan.counts = opt_counts();
      plan.embedding = emb_flags.params();
      plan.classifier = clf_flags.config();
      plan.generator = gen_flags.params();
      if (!journal_dir.empty()) {
        std::filesystem::create_directories(journal_dir);
        plan.journal_dir = journal_dir;
      }
      const auto summaries = experiments::run_plan(plan);
      experiments::write_summaries(out, summaries, plan);
      std::size_t failed = 0;
      for (const auto & s : summaries) {
        if (!s.ok()) {
          ++failed;
          std::cerr << Json{{"error", "cell_failed"}, {"cell", s.cell.key()}, {"detail", *s.error}}.dump() << '\n';
        }
      }
      print_json({{"manifest", (std::filesystem::path(out) / "manifest.json").string()},
                  {"cells", summaries.size()},
                  {"failed", failed}});
      return failed == 0 ? 0 : 1;
    }

    if (*serve_cmd) {
      service::Registry registry(service::ServiceConfig{data_dir, serve_journals, sync});
      const auto restored = registry.recover();
      service::Server server(registry, static_dir);
      const int bound = server.bind(host, port);
      std::cout << Json{{"listening", host + ":" + std::to_string(bound)}, {"restored_sessions", restored}}.dump() << std::endl;
      server.serve();
      return 0;
    }
  } catch (const Error & e) {
    std::cerr << Json{{"error", to_string(e.kind())}, {"detail", e.what()}}.dump() << '\n';
    return 1;
  } catch (const std::exception & e) {
    std::cerr << Json{{"error", "internal"}, {"detail", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
