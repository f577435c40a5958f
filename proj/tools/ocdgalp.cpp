// Command-line front end: synth, train, diarize, score and sweep.
//
// Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
// error, 3 file I/O error, 4 malformed input data, 5 inconsistent sizes
// between inputs, 6 numerical failure.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ocdgalp/ocdgalp.hpp"

namespace fs = std::filesystem;
using namespace ocdgalp;

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kIo = 3,
  kData = 4,
  kDimension = 5,
  kNumeric = 6,
};

// Config keys settable from the command line as --key-with-dashes.
struct Settings {
  std::string config_path;
  std::map<std::string, std::string> flags;
  std::map<std::string, CLI::Option*> options;

  void add(CLI::App* cmd, const std::vector<std::string>& keys) {
    cmd->add_option("--config", config_path, "flat key = value config file");
    for (const auto& key : keys) {
      std::string flag = "--" + key;
      std::replace(flag.begin(), flag.end(), '_', '-');
      options[key] = cmd->add_option(flag, flags[key], "overrides config key '" + key + "'");
    }
  }

  // Flag > config file > default.
  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (!config_path.empty()) apply_settings(cfg, parse_key_values(read_file(config_path)));
    for (const auto& [key, opt] : options)
      if (opt->count() > 0) apply_setting(cfg, key, flags.at(key));
    validate(cfg);
    return cfg;
  }
};

void prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

void echo_config(const std::string& dir, const ExperimentConfig& cfg) {
  write_file((fs::path(dir) / "config.txt").string(), encode_key_values(effective_settings(cfg)));
}

std::string out_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

MatrixFile load_matrix(const std::string& path, const std::string& kind) {
  MatrixFile f = decode_matrix_file(read_file(path));
  if (f.kind != kind)
    throw DataError("'" + path + "' holds kind '" + f.kind + "', expected '" + kind + "'");
  return f;
}

std::optional<Matrix> load_affinity(const std::string& path, const MatrixFile& embeddings) {
  if (path.empty()) return std::nullopt;
  MatrixFile f = load_matrix(path, "affinity");
  if (f.values.rows() != embeddings.values.rows() || f.values.cols() != f.values.rows())
    throw DimensionError(dims_message("affinity size", embeddings.values.rows(), f.values.rows()));
  return std::move(f.values);
}

std::optional<GatModel> load_model(const std::string& path, std::size_t input_dim,
                                   const ExperimentConfig& cfg) {
  if (path.empty()) return std::nullopt;
  GatModel model = decode_checkpoint(read_file(path));
  if (model.dims.front() != input_dim)
    throw DimensionError(dims_message("model input dimension", input_dim, model.dims.front()));
  model.epsilon = cfg.pipeline.epsilon;
  return model;
}

const std::vector<std::string> kPipelineKeys = {"mu",   "epsilon", "tau",    "beta",
                                                "window", "shift", "seed",   "metric",
                                                "emit_overlap"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Overlapping-community clustering for speaker diarization"};
  app.require_subcommand(1);

  Settings synth_s, train_s, diarize_s, score_s, sweep_s;
  std::string out_dir, embeddings_path, labels_path, regions_path, model_path, affinity_path;
  std::string reference_path, hypothesis_path, uem_path;

  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic corpus");
  synth_s.add(synth, {"speakers", "duration", "dim", "separation", "noise", "overlap", "count",
                      "seed", "window", "shift"});
  synth->add_option("--out", out_dir, "output directory")->required();

  auto* train_cmd = app.add_subcommand("train", "train the attention encoder");
  train_s.add(train_cmd, {"mu", "epsilon", "seed", "learning_rate", "epochs", "gat_layers", "dims"});
  train_cmd->add_option("--embeddings", embeddings_path)->required();
  train_cmd->add_option("--labels", labels_path)->required();
  train_cmd->add_option("--out", out_dir, "output directory")->required();

  auto* diarize = app.add_subcommand("diarize", "cluster segments and write RTTM");
  diarize_s.add(diarize, kPipelineKeys);
  diarize->add_option("--embeddings", embeddings_path)->required();
  diarize->add_option("--regions", regions_path)->required();
  diarize->add_option("--model", model_path, "checkpoint; optional when epsilon = 1");
  diarize->add_option("--affinity", affinity_path, "external score matrix");
  diarize->add_option("--out", out_dir, "output directory")->required();

  auto* score = app.add_subcommand("score", "diarization error rate of a hypothesis");
  score_s.add(score, {"collar", "score_overlap"});
  score->add_option("--reference", reference_path)->required();
  score->add_option("--hypothesis", hypothesis_path)->required();
  score->add_option("--uem", uem_path, "scoring regions, same layout as a regions file");
  score->add_option("--out", out_dir, "also write the report into this directory");

  auto* sweep = app.add_subcommand("sweep", "mean DER over an (epsilon, beta) grid");
  auto sweep_keys = kPipelineKeys;
  for (const char* k : {"trials", "epsilons", "betas", "collar", "score_overlap"})
    sweep_keys.push_back(k);
  sweep_s.add(sweep, sweep_keys);
  sweep->add_option("--embeddings", embeddings_path)->required();
  sweep->add_option("--regions", regions_path)->required();
  sweep->add_option("--reference", reference_path)->required();
  sweep->add_option("--model", model_path, "checkpoint; optional when every epsilon is 1");
  sweep->add_option("--affinity", affinity_path, "external score matrix");
  sweep->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (synth->parsed()) {
      const ExperimentConfig cfg = synth_s.resolve();
      const Corpus corpus = generate_corpus(cfg.conversation, cfg.count);
      prepare_dir(out_dir);
      write_file(out_path(out_dir, "embeddings.bin"),
                 encode_matrix_file({"embeddings", corpus.segments, corpus.embeddings}));
      write_file(out_path(out_dir, "regions.tsv"), encode_regions(corpus.regions));
      write_file(out_path(out_dir, "reference.rttm"), write_rttm(corpus.reference));
      write_file(out_path(out_dir, "labels.tsv"), encode_labels(corpus.labels));
      echo_config(out_dir, cfg);
    } else if (train_cmd->parsed()) {
      const ExperimentConfig cfg = train_s.resolve();
      const MatrixFile emb = load_matrix(embeddings_path, "embeddings");
      const auto labels = decode_labels(read_file(labels_path));
      const auto dataset =
          training_examples(emb.segments, emb.values, labels, cfg.pipeline.mu);
      std::vector<std::size_t> dims = {emb.values.cols()};
      dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
      GatModel model = init_model(dims, cfg.gat_layers, cfg.pipeline.epsilon, cfg.pipeline.seed);
      const TrainResult result = train(std::move(model), dataset, {cfg.learning_rate, cfg.epochs});
      prepare_dir(out_dir);
      write_file(out_path(out_dir, "model.ckpt"), encode_checkpoint(result.model));
      write_file(out_path(out_dir, "loss.tsv"), encode_loss_trace(result.loss_trace));
      echo_config(out_dir, cfg);
    } else if (diarize->parsed()) {
      const ExperimentConfig cfg = diarize_s.resolve();
      const MatrixFile emb = load_matrix(embeddings_path, "embeddings");
      const SpeechRegions regions = decode_regions(read_file(regions_path));
      const auto affinity = load_affinity(affinity_path, emb);
      const auto model = load_model(model_path, emb.values.cols(), cfg);
      const PipelineResult result =
          run_pipeline(cfg.pipeline, emb.segments, emb.values, regions,
                       model ? &*model : nullptr, affinity);
      prepare_dir(out_dir);
      write_file(out_path(out_dir, "hypothesis.rttm"),
                 write_rttm(hypothesis_to_rttm(result.hypothesis)));
      write_file(out_path(out_dir, "diagnostics.txt"), encode_diagnostics(result));
      for (const auto& r : result.recordings)
        write_file(out_path(out_dir, "partition-" + r.recording + ".tsv"),
                   encode_partition(r.partition));
      echo_config(out_dir, cfg);
    } else if (score->parsed()) {
      const ExperimentConfig cfg = score_s.resolve();
      DerOptions options;
      options.collar = cfg.collar;
      options.score_overlap = cfg.score_overlap;
      if (!uem_path.empty()) options.uem = decode_regions(read_file(uem_path)).recordings();
      const DerReport report = compute_der(parse_rttm(read_file(reference_path)),
                                           parse_rttm(read_file(hypothesis_path)), options);
      const std::string text = format_der_report(report);
      std::cout << text;
      if (!out_dir.empty()) {
        prepare_dir(out_dir);
        write_file(out_path(out_dir, "report.txt"), text);
        echo_config(out_dir, cfg);
      }
    } else if (sweep->parsed()) {
      const ExperimentConfig cfg = sweep_s.resolve();
      const MatrixFile emb = load_matrix(embeddings_path, "embeddings");
      SweepInputs in{emb.segments, emb.values, decode_regions(read_file(regions_path)),
                     parse_rttm(read_file(reference_path)), load_affinity(affinity_path, emb)};
      const auto model = load_model(model_path, emb.values.cols(), cfg);
      const auto cells = run_sweep(cfg, in, model ? &*model : nullptr);
      prepare_dir(out_dir);
      write_file(out_path(out_dir, "sweep.tsv"), encode_sweep_table(cells));
      echo_config(out_dir, cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return kDimension;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
