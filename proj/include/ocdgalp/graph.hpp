#pragma once

// Speaker-embedding graph: pairwise scores, [0,1] affinities, and the
// thresholded neighbourhood graph that the encoder and propagation consume.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "ocdgalp/error.hpp"
#include "ocdgalp/matrix.hpp"

namespace ocdgalp {

// K segment embeddings of dimension D, one per row.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  explicit EmbeddingMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.rows() == 0 || values_.cols() == 0)
      throw DataError("embedding matrix must have at least one row and column");
    if (!values_.all_finite()) throw DataError("embedding matrix contains non-finite values");
  }

  std::size_t rows() const { return values_.rows(); }
  std::size_t dim() const { return values_.cols(); }
  std::span<const double> row(std::size_t i) const { return values_.row(i); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

// Raw symmetric pairwise scores, before normalization to [0,1].
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  explicit ScoreMatrix(Matrix values) : values_(std::move(values)) {
    if (values_.rows() != values_.cols())
      throw DimensionError(dims_message("score matrix must be square; columns", values_.rows(),
                                        values_.cols()));
    if (!values_.all_finite()) throw DataError("score matrix contains non-finite values");
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = i + 1; j < size(); ++j)
        if (values_(i, j) != values_(j, i))
          throw DataError("score matrix is not symmetric at (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
  }

  std::size_t size() const { return values_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
  const Matrix& values() const { return values_; }

 private:
  Matrix values_;
};

// K x K symmetric weights in [0,1] with a unit diagonal.
class AffinityMatrix {
 public:
  AffinityMatrix() = default;
  explicit AffinityMatrix(Matrix weights) : weights_(std::move(weights)) {
    const std::size_t n = weights_.rows();
    if (weights_.cols() != n)
      throw DimensionError(dims_message("affinity matrix must be square; columns", n,
                                        weights_.cols()));
    for (std::size_t i = 0; i < n; ++i) {
      if (weights_(i, i) != 1.0)
        throw DataError("affinity diagonal must be 1 at node " + std::to_string(i));
      for (std::size_t j = 0; j < n; ++j) {
        const double w = weights_(i, j);
        if (!(w >= 0.0 && w <= 1.0))
          throw DataError("affinity entry outside [0,1] at (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
        if (w != weights_(j, i))
          throw DataError("affinity matrix is not symmetric at (" + std::to_string(i) + ", " +
                          std::to_string(j) + ")");
      }
    }
  }

  std::size_t size() const { return weights_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return weights_(i, j); }
  const Matrix& weights() const { return weights_; }

  friend bool operator==(const AffinityMatrix&, const AffinityMatrix&) = default;

 private:
  Matrix weights_;
};

struct Edge {
  std::size_t node;
  double weight;

  friend bool operator==(const Edge&, const Edge&) = default;
};

// Thresholded, weighted, undirected graph. Every node carries a self-loop of
// weight 1; adjacency lists are sorted by neighbour id.
class SpeakerGraph {
 public:
  SpeakerGraph() = default;

  // Builds from symmetric adjacency lists. Self-loops are added if missing.
  SpeakerGraph(std::vector<std::vector<Edge>> adjacency, double threshold)
      : adjacency_(std::move(adjacency)), threshold_(threshold) {
    const std::size_t n = adjacency_.size();
    for (std::size_t i = 0; i < n; ++i) {
      auto& list = adjacency_[i];
      std::erase_if(list, [i](const Edge& e) { return e.node == i; });
      list.push_back({i, 1.0});
      std::sort(list.begin(), list.end(),
                [](const Edge& a, const Edge& b) { return a.node < b.node; });
      for (std::size_t k = 0; k < list.size(); ++k) {
        const Edge& e = list[k];
        if (e.node >= n) throw DataError("edge to unknown node " + std::to_string(e.node));
        if (k > 0 && list[k - 1].node == e.node)
          throw DataError("duplicate edge at node " + std::to_string(i));
        if (!(e.weight > 0.0 && e.weight <= 1.0))
          throw DataError("edge weight outside (0,1] at node " + std::to_string(i));
      }
    }
    for (std::size_t i = 0; i < n; ++i)
      for (const Edge& e : adjacency_[i])
        if (weight(e.node, i) != e.weight)
          throw DataError("graph is not undirected between " + std::to_string(i) + " and " +
                          std::to_string(e.node));
  }

  std::size_t size() const { return adjacency_.size(); }
  double threshold() const { return threshold_; }

  // Neighbourhood including the node itself.
  const std::vector<Edge>& neighbors(std::size_t i) const { return adjacency_[i]; }

  // Number of non-self edges incident to i.
  std::size_t degree(std::size_t i) const { return adjacency_[i].size() - 1; }

  // Weight of edge (i,j), 0 if absent.
  double weight(std::size_t i, std::size_t j) const {
    const auto& list = adjacency_[i];
    auto it = std::lower_bound(list.begin(), list.end(), j,
                               [](const Edge& e, std::size_t n) { return e.node < n; });
    return (it != list.end() && it->node == j) ? it->weight : 0.0;
  }

  // Count of undirected non-self edges.
  std::size_t edge_count() const {
    std::size_t total = 0;
    for (std::size_t i = 0; i < size(); ++i) total += degree(i);
    return total / 2;
  }

  friend bool operator==(const SpeakerGraph&, const SpeakerGraph&) = default;

 private:
  std::vector<std::vector<Edge>> adjacency_;
  double threshold_ = 0.0;
};

enum class SimilarityMetric { kCosine, kPrecomputed };

inline SimilarityMetric parse_metric(const std::string& name) {
  if (name == "cosine") return SimilarityMetric::kCosine;
  if (name == "precomputed") return SimilarityMetric::kPrecomputed;
  throw ConfigError("unknown similarity metric '" + name + "'");
}

// Raw pairwise scores. For kCosine the rows are embeddings; for kPrecomputed
// the input must already be a symmetric K x K score table and is passed
// through unchanged.
inline ScoreMatrix build_affinity(const EmbeddingMatrix& embeddings, SimilarityMetric metric) {
  const std::size_t k = embeddings.rows();
  if (metric == SimilarityMetric::kPrecomputed) {
    if (embeddings.dim() != k)
      throw DimensionError(dims_message("precomputed scores must be square; columns", k,
                                        embeddings.dim()));
    return ScoreMatrix(embeddings.values());
  }

  std::vector<double> norms(k);
  for (std::size_t i = 0; i < k; ++i) {
    norms[i] = std::sqrt(dot(embeddings.row(i), embeddings.row(i)));
    if (norms[i] == 0.0)
      throw DataError("embedding row " + std::to_string(i) + " has zero norm");
  }
  Matrix scores(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    scores(i, i) = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      double c = dot(embeddings.row(i), embeddings.row(j)) / (norms[i] * norms[j]);
      c = std::clamp(c, -1.0, 1.0);
      scores(i, j) = c;
      scores(j, i) = c;
    }
  }
  return ScoreMatrix(std::move(scores));
}

// Min-max normalization over the off-diagonal entries; diagonal forced to 1.
// A constant off-diagonal maps to 0.5 and emits a warning on `warn`.
inline AffinityMatrix normalize_scores(const ScoreMatrix& raw, std::ostream* warn = &std::cerr) {
  const std::size_t k = raw.size();
  Matrix out(k, k);
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      lo = std::min(lo, raw(i, j));
      hi = std::max(hi, raw(i, j));
    }
  const bool degenerate = k > 1 && hi == lo;
  if (degenerate && warn)
    *warn << "warning: constant off-diagonal scores; mapping all pairs to 0.5\n";
  for (std::size_t i = 0; i < k; ++i) {
    out(i, i) = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      double w = degenerate ? 0.5 : (raw(i, j) - lo) / (hi - lo);
      w = std::clamp(w, 0.0, 1.0);
      out(i, j) = w;
      out(j, i) = w;
    }
  }
  return AffinityMatrix(std::move(out));
}

// Keeps edges with weight strictly above mu; self-loops are always kept.
inline SpeakerGraph threshold_graph(const AffinityMatrix& affinity, double mu) {
  if (!(mu >= 0.0 && mu <= 1.0))
    throw ConfigError("threshold mu must lie in [0,1], got " + std::to_string(mu));
  const std::size_t k = affinity.size();
  std::vector<std::vector<Edge>> adj(k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      if (i != j && affinity(i, j) > mu) adj[i].push_back({j, affinity(i, j)});
  return SpeakerGraph(std::move(adj), mu);
}

// Binary training target: 1 where the speaker sets of two nodes intersect.
inline AffinityMatrix ground_truth_adjacency(const std::vector<std::vector<int>>& labels) {
  const std::size_t k = labels.size();
  for (std::size_t i = 0; i < k; ++i)
    if (labels[i].empty())
      throw DataError("node " + std::to_string(i) + " has an empty speaker label set");
  Matrix out(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    out(i, i) = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      bool shared = false;
      for (int a : labels[i])
        if (std::find(labels[j].begin(), labels[j].end(), a) != labels[j].end()) shared = true;
      out(i, j) = out(j, i) = shared ? 1.0 : 0.0;
    }
  }
  return AffinityMatrix(std::move(out));
}

}  // namespace ocdgalp
