#pragma once

#include <random>
#include <vector>

#include "ocdgalp/ocdgalp.hpp"

namespace fixture {

using ocdgalp::Edge;
using ocdgalp::SpeakerGraph;

inline void link(std::vector<std::vector<Edge>>& adj, std::size_t a, std::size_t b, double w) {
  adj[a].push_back({b, w});
  adj[b].push_back({a, w});
}

// Cliques of the given sizes with unit weights, optionally joined through one
// extra node wired to the first `bridge_links` members of each clique.
inline SpeakerGraph cliques(const std::vector<std::size_t>& sizes, std::size_t bridge_links = 0) {
  std::size_t n = 0;
  for (std::size_t s : sizes) n += s;
  const bool bridged = bridge_links > 0;
  std::vector<std::vector<Edge>> adj(n + (bridged ? 1 : 0));
  std::size_t base = 0;
  for (std::size_t s : sizes) {
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = i + 1; j < s; ++j) link(adj, base + i, base + j, 1.0);
    if (bridged)
      for (std::size_t i = 0; i < bridge_links; ++i) link(adj, n, base + i, 1.0);
    base += s;
  }
  return SpeakerGraph(std::move(adj), 0.3);
}

// Erdos-Renyi graph with weights uniform in [lo, 1].
inline SpeakerGraph random_graph(std::mt19937_64& rng, std::size_t n, double p, double lo = 0.1) {
  std::bernoulli_distribution edge(p);
  std::uniform_real_distribution<double> weight(lo, 1.0);
  std::vector<std::vector<Edge>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (edge(rng)) link(adj, i, j, weight(rng));
  return SpeakerGraph(std::move(adj), 0.0);
}

inline ocdgalp::AffinityMatrix random_affinity(std::mt19937_64& rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ocdgalp::Matrix m(k, k, 1.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) m(i, j) = m(j, i) = u(rng);
  return ocdgalp::AffinityMatrix(std::move(m));
}

inline ocdgalp::EmbeddingMatrix random_embeddings(std::mt19937_64& rng, std::size_t k,
                                                  std::size_t d) {
  std::normal_distribution<double> g(0.0, 1.0);
  ocdgalp::Matrix m(k, d);
  for (double& x : m.data()) x = g(rng);
  return ocdgalp::EmbeddingMatrix(std::move(m));
}

// Random labels over `speakers` speakers; roughly a third of nodes carry two.
inline std::vector<std::vector<int>> random_labels(std::mt19937_64& rng, std::size_t k,
                                                   int speakers) {
  std::uniform_int_distribution<int> spk(0, speakers - 1);
  std::bernoulli_distribution second(0.33);
  std::vector<std::vector<int>> labels(k);
  for (auto& l : labels) {
    l.push_back(spk(rng));
    const int b = spk(rng);
    if (second(rng) && b != l[0]) l.push_back(b);
  }
  return labels;
}

// One gradient-check instance: small random graph, features, initial
// affinity from the features and a random binary target.
struct GradientCase {
  ocdgalp::GatModel model;
  SpeakerGraph graph;
  ocdgalp::EmbeddingMatrix features;
  ocdgalp::AffinityMatrix initial;
  ocdgalp::AffinityMatrix target;
};

inline GradientCase gradient_case(std::uint64_t seed, std::size_t nodes,
                                  const std::vector<std::size_t>& dims, double epsilon = 0.5) {
  std::mt19937_64 rng(seed);
  GradientCase c;
  c.features = random_embeddings(rng, nodes, dims.front());
  c.initial = ocdgalp::normalize_scores(
      ocdgalp::build_affinity(c.features, ocdgalp::SimilarityMetric::kCosine), nullptr);
  c.graph = ocdgalp::threshold_graph(c.initial, 0.3);
  c.target = ocdgalp::ground_truth_adjacency(random_labels(rng, nodes, 3));
  c.model = ocdgalp::init_model(dims, dims.size() - 3, epsilon, seed);
  // Non-zero biases exercise every gradient path.
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto& l : c.model.scoring_head.layers)
    for (double& b : l.bias) b = u(rng);
  return c;
}

}  // namespace fixture
