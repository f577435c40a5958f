#pragma once

// Experiment configuration shared by the command-line tool: flat key/value
// resolution, synthetic corpus assembly and the (epsilon, beta) sweep.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ocdgalp/error.hpp"
#include "ocdgalp/eval.hpp"
#include "ocdgalp/gat.hpp"
#include "ocdgalp/io.hpp"
#include "ocdgalp/pipeline.hpp"
#include "ocdgalp/synth.hpp"

namespace ocdgalp {

struct ExperimentConfig {
  PipelineConfig pipeline;
  // training
  double learning_rate = 1e-2;
  std::size_t epochs = 200;
  std::size_t gat_layers = 2;
  std::vector<std::size_t> hidden = {128, 64, 64, 1};  // dims after the input
  // synthetic corpus
  ConversationSpec conversation;
  std::size_t count = 1;
  // scoring
  double collar = 0.0;
  bool score_overlap = true;
  // sweep grid
  std::vector<double> epsilons = {0.0, 0.25, 0.5, 0.75, 1.0};
  std::vector<std::size_t> betas = {1, 2, 3};
};

namespace detail {

inline double config_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size() && std::isfinite(v)) return v;
  } catch (const std::logic_error&) {
  }
  throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
}

inline std::uint64_t config_uint(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    if (!value.empty() && value.front() != '-') {
      const unsigned long long v = std::stoull(value, &used);
      if (used == value.size()) return v;
    }
  } catch (const std::logic_error&) {
  }
  throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + value +
                    "'");
}

inline bool config_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + value + "'");
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::istringstream in(value);
  for (std::string t; std::getline(in, t, ',');) {
    t.erase(0, t.find_first_not_of(" \t"));
    t.erase(t.find_last_not_of(" \t") + 1);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

template <typename T>
std::string join_list(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>)
      out += format_double(values[i]);
    else
      out += std::to_string(values[i]);
  }
  return out;
}

}  // namespace detail

inline std::string metric_name(SimilarityMetric m) {
  return m == SimilarityMetric::kCosine ? "cosine" : "precomputed";
}

inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  auto& p = cfg.pipeline;
  auto& c = cfg.conversation;
  if (key == "mu") p.mu = config_real(key, value);
  else if (key == "epsilon") p.epsilon = config_real(key, value);
  else if (key == "tau") p.tau = config_uint(key, value);
  else if (key == "beta") p.beta = config_uint(key, value);
  else if (key == "window") c.window = p.window = config_real(key, value);
  else if (key == "shift") c.shift = p.shift = config_real(key, value);
  else if (key == "seed") c.seed = p.seed = config_uint(key, value);
  else if (key == "trials") p.trials = config_uint(key, value);
  else if (key == "metric") {
    try {
      p.metric = parse_metric(value);
    } catch (const Error& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "emit_overlap") p.emit_overlap = config_bool(key, value);
  else if (key == "learning_rate") cfg.learning_rate = config_real(key, value);
  else if (key == "epochs") cfg.epochs = config_uint(key, value);
  else if (key == "gat_layers") cfg.gat_layers = config_uint(key, value);
  else if (key == "dims") {
    cfg.hidden.clear();
    for (const auto& t : split_list(value)) cfg.hidden.push_back(config_uint(key, t));
  } else if (key == "speakers") c.speakers = config_uint(key, value);
  else if (key == "duration") c.duration = config_real(key, value);
  else if (key == "dim") c.dim = config_uint(key, value);
  else if (key == "separation") c.separation = config_real(key, value);
  else if (key == "noise") c.noise = config_real(key, value);
  else if (key == "overlap") c.overlap = config_real(key, value);
  else if (key == "count") cfg.count = config_uint(key, value);
  else if (key == "collar") cfg.collar = config_real(key, value);
  else if (key == "score_overlap") cfg.score_overlap = config_bool(key, value);
  else if (key == "epsilons") {
    cfg.epsilons.clear();
    for (const auto& t : split_list(value)) cfg.epsilons.push_back(config_real(key, t));
  } else if (key == "betas") {
    cfg.betas.clear();
    for (const auto& t : split_list(value)) cfg.betas.push_back(config_uint(key, t));
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

inline void apply_settings(ExperimentConfig& cfg, const KeyValues& kv) {
  for (const auto& [k, v] : kv) apply_setting(cfg, k, v);
}

inline KeyValues effective_settings(const ExperimentConfig& cfg) {
  using detail::join_list;
  const auto& p = cfg.pipeline;
  const auto& c = cfg.conversation;
  return {
      {"mu", format_double(p.mu)},
      {"epsilon", format_double(p.epsilon)},
      {"tau", std::to_string(p.tau)},
      {"beta", std::to_string(p.beta)},
      {"window", format_double(p.window)},
      {"shift", format_double(p.shift)},
      {"seed", std::to_string(p.seed)},
      {"trials", std::to_string(p.trials)},
      {"metric", metric_name(p.metric)},
      {"emit_overlap", p.emit_overlap ? "true" : "false"},
      {"learning_rate", format_double(cfg.learning_rate)},
      {"epochs", std::to_string(cfg.epochs)},
      {"gat_layers", std::to_string(cfg.gat_layers)},
      {"dims", join_list(cfg.hidden)},
      {"speakers", std::to_string(c.speakers)},
      {"duration", format_double(c.duration)},
      {"dim", std::to_string(c.dim)},
      {"separation", format_double(c.separation)},
      {"noise", format_double(c.noise)},
      {"overlap", format_double(c.overlap)},
      {"count", std::to_string(cfg.count)},
      {"collar", format_double(cfg.collar)},
      {"score_overlap", cfg.score_overlap ? "true" : "false"},
      {"epsilons", join_list(cfg.epsilons)},
      {"betas", join_list(cfg.betas)},
  };
}

// Range checks that do not depend on the command.
inline void validate(const ExperimentConfig& cfg) {
  const auto& p = cfg.pipeline;
  if (!(p.mu >= 0.0 && p.mu <= 1.0)) throw ConfigError("mu must lie in [0, 1]");
  if (!(p.epsilon >= 0.0 && p.epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0, 1]");
  if (p.tau < 1) throw ConfigError("tau must be at least 1");
  if (p.beta < 1) throw ConfigError("beta must be at least 1");
  if (!(p.window > 0.0) || !(p.shift > 0.0) || p.shift > p.window)
    throw ConfigError("need window > 0 and 0 < shift <= window");
  if (p.trials < 1) throw ConfigError("trials must be at least 1");
  if (!(cfg.learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (cfg.gat_layers < 1 || cfg.hidden.size() < cfg.gat_layers + 1 || cfg.hidden.back() != 1)
    throw ConfigError("dims must list the GAT widths then the head widths ending in 1");
  if (cfg.count < 1) throw ConfigError("count must be at least 1");
  for (double e : cfg.epsilons)
    if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("epsilons must lie in [0, 1]");
  for (std::size_t b : cfg.betas)
    if (b < 1) throw ConfigError("betas must be at least 1");
  if (cfg.epsilons.empty() || cfg.betas.empty()) throw ConfigError("sweep grid is empty");
}

// Several seeded conversations concatenated into one corpus; conversation i
// uses seed base + i.
struct Corpus {
  SegmentTable segments;
  Matrix embeddings;
  SpeechRegions regions;
  std::vector<RttmRecord> reference;
  std::vector<std::vector<std::string>> labels;
};

inline std::string corpus_recording(std::size_t index, std::size_t count) {
  if (count == 1) return "synth";
  char buf[32];
  std::snprintf(buf, sizeof buf, "synth%03zu", index);
  return buf;
}

inline Corpus generate_corpus(const ConversationSpec& base, std::size_t count) {
  Corpus corpus;
  std::vector<Conversation> parts;
  std::size_t rows = 0;
  for (std::size_t i = 0; i < count; ++i) {
    ConversationSpec spec = base;
    spec.seed = base.seed + i;
    spec.recording = corpus_recording(i, count);
    parts.push_back(generate_conversation(spec));
    rows += parts.back().segments.size();
  }
  corpus.embeddings = Matrix(rows, base.dim);
  std::size_t r = 0;
  for (const auto& conv : parts) {
    for (std::size_t n = 0; n < conv.segments.size(); ++n, ++r) {
      Segment s = conv.segments[n];
      s.node = r;
      corpus.segments.push_back(s);
      auto src = conv.embeddings.values().row(n);
      std::copy(src.begin(), src.end(), corpus.embeddings.row(r).begin());
      std::vector<std::string> names;
      for (int spk : conv.truth[n]) names.push_back(synth_speaker(spk));
      corpus.labels.push_back(std::move(names));
    }
    for (const auto& [rec, spans] : conv.regions.recordings())
      for (const auto& s : spans) corpus.regions.add(rec, s);
    corpus.reference.insert(corpus.reference.end(), conv.reference.begin(), conv.reference.end());
  }
  return corpus;
}

// One training example per recording. Speaker names are only compared within
// a recording.
inline std::vector<TrainingExample> training_examples(const SegmentTable& segments,
                                                      const Matrix& embeddings,
                                                      const std::vector<std::vector<std::string>>& labels,
                                                      double mu, std::ostream* warn = &std::cerr) {
  if (labels.size() != segments.size())
    throw DimensionError(dims_message("label rows vs segment rows", segments.size(), labels.size()));
  if (embeddings.rows() != segments.size())
    throw DimensionError(dims_message("embedding rows vs segment rows", segments.size(),
                                      embeddings.rows()));
  std::map<std::string, std::vector<std::size_t>> by_recording;
  for (std::size_t n = 0; n < segments.size(); ++n) by_recording[segments[n].recording].push_back(n);
  std::vector<TrainingExample> out;
  for (const auto& [rec, rows] : by_recording) {
    std::map<std::string, int> ids;
    std::vector<std::vector<int>> local;
    for (std::size_t n : rows) {
      std::vector<int> l;
      for (const auto& name : labels[n]) l.push_back(ids.emplace(name, ids.size()).first->second);
      local.push_back(std::move(l));
    }
    out.push_back(make_training_example(EmbeddingMatrix(detail::rows_subset(embeddings, rows)),
                                        local, mu, warn));
  }
  return out;
}

inline std::uint64_t trial_seed(std::uint64_t base, std::size_t trial) { return base + trial; }

struct SweepCell {
  double epsilon = 0.0;
  std::size_t beta = 0;
  double mean_der = 0.0;
  double std_der = 0.0;  // population standard deviation over trials
  std::vector<double> ders;
};

struct SweepInputs {
  SegmentTable segments;
  Matrix embeddings;
  SpeechRegions regions;
  std::vector<RttmRecord> reference;
  std::optional<Matrix> external_affinity;
};

// Mean DER per (epsilon, beta) cell; trial t propagates with seed base + t.
inline std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const SweepInputs& in,
                                        const GatModel* model, std::ostream* warn = &std::cerr) {
  validate(cfg);
  std::set<double> eps(cfg.epsilons.begin(), cfg.epsilons.end());
  std::set<std::size_t> betas(cfg.betas.begin(), cfg.betas.end());
  if (!model && *eps.begin() < 1.0)
    throw ConfigError("sweeping epsilon below 1 requires a trained model");
  DerOptions der_options;
  der_options.collar = cfg.collar;
  der_options.score_overlap = cfg.score_overlap;
  std::vector<SweepCell> cells;
  for (double e : eps) {
    for (std::size_t b : betas) {
      SweepCell cell{e, b, 0.0, 0.0, {}};
      for (std::size_t t = 0; t < cfg.pipeline.trials; ++t) {
        PipelineConfig p = cfg.pipeline;
        p.epsilon = e;
        p.beta = b;
        p.seed = trial_seed(cfg.pipeline.seed, t);
        const auto result = run_pipeline(p, in.segments, in.embeddings, in.regions,
                                         e < 1.0 ? model : nullptr, in.external_affinity, warn);
        cell.ders.push_back(
            compute_der(in.reference, hypothesis_to_rttm(result.hypothesis), der_options).der);
      }
      double sum = 0.0;
      for (double d : cell.ders) sum += d;
      cell.mean_der = sum / static_cast<double>(cell.ders.size());
      double var = 0.0;
      for (double d : cell.ders) var += (d - cell.mean_der) * (d - cell.mean_der);
      cell.std_der = std::sqrt(var / static_cast<double>(cell.ders.size()));
      cells.push_back(std::move(cell));
    }
  }
  return cells;
}

inline std::string encode_sweep_table(const std::vector<SweepCell>& cells) {
  std::string out = "epsilon\tbeta\tmean_der\tstd_der\n";
  char buf[128];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%.4f\t%zu\t%.4f\t%.4f\n", c.epsilon, c.beta, c.mean_der,
                  c.std_der);
    out += buf;
  }
  return out;
}

inline std::string encode_diagnostics(const PipelineResult& result) {
  std::string out;
  char buf[256];
  for (const auto& r : result.recordings) {
    const auto& d = r.diagnostics;
    std::snprintf(buf, sizeof buf,
                  "[%s]\nnodes = %zu\ninitial_edges = %zu\nfused_edges = %zu\n"
                  "initial_mean_affinity = %.6f\nfused_mean_affinity = %.6f\n"
                  "iterations = %zu\nconverged = %s\ncommunities = %zu\noverlap_nodes = %zu\n\n",
                  d.recording.c_str(), d.nodes, d.initial_edges, d.fused_edges,
                  d.initial_mean_affinity, d.fused_mean_affinity, d.iterations,
                  d.converged ? "true" : "false", d.communities, d.overlap_nodes);
    out += buf;
  }
  return out;
}

}  // namespace ocdgalp
