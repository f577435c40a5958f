#pragma once

// End-to-end diarization of one or more recordings: affinity construction,
// attention refinement, fusion and overlapping label propagation.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ocdgalp/eval.hpp"
#include "ocdgalp/gat.hpp"
#include "ocdgalp/graph.hpp"
#include "ocdgalp/lpa.hpp"
#include "ocdgalp/timeline.hpp"

namespace ocdgalp {

struct PipelineConfig {
  double mu = 0.3;
  double epsilon = 0.5;
  std::size_t tau = 80;
  std::size_t beta = 2;
  double window = 1.5;
  double shift = 0.75;
  std::uint64_t seed = 0;
  std::size_t trials = 10;
  SimilarityMetric metric = SimilarityMetric::kCosine;
  bool emit_overlap = true;
};

struct RecordingDiagnostics {
  std::string recording;
  std::size_t nodes = 0;
  std::size_t initial_edges = 0;
  std::size_t fused_edges = 0;
  double initial_mean_affinity = 0.0;
  double fused_mean_affinity = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t communities = 0;
  std::size_t overlap_nodes = 0;
};

struct RecordingResult {
  std::string recording;
  SegmentTable segments;  // node ids local to the recording
  CommunityPartition partition;
  RecordingDiagnostics diagnostics;
};

struct PipelineResult {
  DiarizationHypothesis hypothesis;
  std::vector<RecordingResult> recordings;
};

namespace detail {

// Re-raises an error with the failing stage prepended, keeping its type.
template <typename F>
auto run_stage(const std::string& stage, F&& f) -> decltype(f()) {
  const std::string prefix = "stage '" + stage + "': ";
  try {
    return f();
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const NumericError& e) {
    throw NumericError(prefix + e.what());
  } catch (const IoError& e) {
    throw IoError(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  }
}

inline double mean_off_diagonal(const AffinityMatrix& a) {
  const std::size_t k = a.size();
  if (k < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) sum += a(i, j);
  return sum / static_cast<double>(k * (k - 1) / 2);
}

inline Matrix rows_subset(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto src = m.row(rows[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

inline Matrix block_subset(const Matrix& m, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < idx.size(); ++c) out(r, c) = m(idx[r], idx[c]);
  return out;
}

}  // namespace detail

// Initial normalized affinity for one recording.
inline AffinityMatrix initial_affinity(const EmbeddingMatrix& embeddings,
                                       SimilarityMetric metric, std::ostream* warn = &std::cerr) {
  return normalize_scores(build_affinity(embeddings, metric), warn);
}

// Training example from embeddings and per-segment speaker labels.
inline TrainingExample make_training_example(const EmbeddingMatrix& embeddings,
                                             const std::vector<std::vector<int>>& labels,
                                             double mu, std::ostream* warn = &std::cerr) {
  if (labels.size() != embeddings.rows())
    throw DimensionError(dims_message("label rows vs embedding rows", embeddings.rows(),
                                      labels.size()));
  AffinityMatrix initial = initial_affinity(embeddings, SimilarityMetric::kCosine, warn);
  SpeakerGraph graph = threshold_graph(initial, mu);
  return {std::move(graph), embeddings, std::move(initial), ground_truth_adjacency(labels)};
}

// Clusters one recording whose scores are already normalized.
inline RecordingResult cluster_recording(const std::string& recording, SegmentTable segments,
                                         const EmbeddingMatrix& embeddings,
                                         const AffinityMatrix& initial, const GatModel* model,
                                         const PipelineConfig& config) {
  RecordingResult out;
  out.recording = recording;
  auto& diag = out.diagnostics;
  diag.recording = recording;
  diag.nodes = initial.size();

  const SpeakerGraph graph =
      detail::run_stage("threshold", [&] { return threshold_graph(initial, config.mu); });
  diag.initial_edges = graph.edge_count();
  diag.initial_mean_affinity = detail::mean_off_diagonal(initial);

  AffinityMatrix fused = initial;
  if (model) {
    const AffinityMatrix reconstructed = detail::run_stage(
        "gat", [&] { return reconstruct_affinity(*model, graph, embeddings); });
    fused = detail::run_stage(
        "fuse", [&] { return fuse_affinity(reconstructed, initial, config.epsilon); });
  } else if (config.epsilon != 1.0) {
    throw ConfigError("stage 'gat': a model is required unless epsilon = 1");
  }
  const SpeakerGraph refined =
      detail::run_stage("rethreshold", [&] { return threshold_graph(fused, config.mu); });
  diag.fused_edges = refined.edge_count();
  diag.fused_mean_affinity = detail::mean_off_diagonal(fused);

  out.partition = detail::run_stage("propagate", [&] {
    return propagate(refined, {config.tau, config.beta, config.seed});
  });
  diag.iterations = out.partition.iterations_run;
  diag.converged = out.partition.converged;
  diag.communities = out.partition.community_count();
  diag.overlap_nodes = overlap_nodes(out.partition).size();

  for (std::size_t n = 0; n < segments.size(); ++n) segments[n].node = n;
  out.segments = std::move(segments);
  return out;
}

// `segments` and `embeddings` describe the same K nodes in order; an external
// affinity, when given, is a K x K score table over the same nodes.
inline PipelineResult run_pipeline(const PipelineConfig& config, const SegmentTable& segments,
                                   const Matrix& embeddings, const SpeechRegions& regions,
                                   const GatModel* model,
                                   const std::optional<Matrix>& external_affinity = std::nullopt,
                                   std::ostream* warn = &std::cerr) {
  if (segments.size() != embeddings.rows())
    throw DimensionError(dims_message("segment table rows vs embedding rows", embeddings.rows(),
                                      segments.size()));
  if (external_affinity && (external_affinity->rows() != segments.size() ||
                            external_affinity->cols() != segments.size()))
    throw DimensionError(dims_message("external affinity size", segments.size(),
                                      external_affinity->rows()));
  const SegmentTable expected = detail::run_stage(
      "subsegment", [&] { return subsegment(regions, config.window, config.shift); });
  if (expected.size() != segments.size())
    throw DimensionError(dims_message("segments implied by speech regions vs embedding rows",
                                      expected.size(), segments.size()));
  for (std::size_t n = 0; n < segments.size(); ++n)
    if (expected[n].recording != segments[n].recording ||
        std::llabs(expected[n].span.start - segments[n].span.start) > 1 ||
        std::llabs(expected[n].span.end - segments[n].span.end) > 1)
      throw DimensionError("segment " + std::to_string(n) +
                           " does not match the subsegmented speech regions");

  std::map<std::string, std::vector<std::size_t>> by_recording;
  for (std::size_t n = 0; n < segments.size(); ++n)
    by_recording[segments[n].recording].push_back(n);

  PipelineResult result;
  for (const auto& [rec, rows] : by_recording) {
    SegmentTable local;
    for (std::size_t n : rows) local.push_back(segments[n]);
    const EmbeddingMatrix emb = detail::run_stage(
        "embeddings", [&] { return EmbeddingMatrix(detail::rows_subset(embeddings, rows)); });
    const AffinityMatrix initial = detail::run_stage("affinity", [&] {
      if (external_affinity)
        return normalize_scores(ScoreMatrix(detail::block_subset(*external_affinity, rows)), warn);
      return initial_affinity(emb, config.metric, warn);
    });
    RecordingResult rr = cluster_recording(rec, std::move(local), emb, initial, model, config);
    auto hyp = detail::run_stage("assemble", [&] {
      return assemble_hypothesis(rr.segments, rr.partition, config.emit_overlap);
    });
    for (auto& [r, turns] : hyp) result.hypothesis[r] = std::move(turns);
    result.recordings.push_back(std::move(rr));
  }
  return result;
}

}  // namespace ocdgalp
