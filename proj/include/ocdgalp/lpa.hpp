#pragma once

// Overlapping community detection by label propagation with neighbour node
// influence. Each node holds a set of (community, belonging) labels; nodes are
// visited in ascending importance and absorb the dominant labels of their
// neighbours weighted by influence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "ocdgalp/error.hpp"
#include "ocdgalp/graph.hpp"

namespace ocdgalp {

using CommunityId = std::size_t;

// Normalized weighted degree: sum of non-self edge weights over the maximum.
inline std::vector<double> node_importance(const SpeakerGraph& graph) {
  std::vector<double> ni(graph.size(), 0.0);
  double peak = 0.0;
  for (std::size_t u = 0; u < graph.size(); ++u) {
    for (const Edge& e : graph.neighbors(u))
      if (e.node != u) ni[u] += e.weight;
    peak = std::max(peak, ni[u]);
  }
  if (peak > 0.0)
    for (double& v : ni) v /= peak;
  return ni;
}

// Sparse symmetric table of path similarities; rows sorted by node id.
class SimilarityTable {
 public:
  SimilarityTable() = default;
  explicit SimilarityTable(std::vector<std::vector<Edge>> rows) : rows_(std::move(rows)) {}

  std::size_t size() const { return rows_.size(); }
  const std::vector<Edge>& row(std::size_t u) const { return rows_[u]; }

  double operator()(std::size_t u, std::size_t v) const {
    const auto& r = rows_[u];
    auto it = std::lower_bound(r.begin(), r.end(), v,
                               [](const Edge& e, std::size_t n) { return e.node < n; });
    return (it != r.end() && it->node == v) ? it->weight : 0.0;
  }

 private:
  std::vector<std::vector<Edge>> rows_;
};

namespace detail {

inline void similarity_paths_dfs(const SpeakerGraph& graph, std::size_t node, double product,
                                 std::size_t depth, std::size_t beta,
                                 std::vector<char>& on_path, std::vector<double>& acc) {
  for (const Edge& e : graph.neighbors(node)) {
    if (on_path[e.node]) continue;
    const double p = product * e.weight;
    acc[e.node] += p;
    if (depth + 1 < beta) {
      on_path[e.node] = 1;
      similarity_paths_dfs(graph, e.node, p, depth + 1, beta, on_path, acc);
      on_path[e.node] = 0;
    }
  }
}

// Weight-product sums over simple paths of length <= beta starting at u.
// Lengths up to 3 are accumulated from walk sums with the non-simple walks
// removed; longer bounds fall back to depth-first enumeration.
inline std::vector<double> similarity_row(const SpeakerGraph& graph, std::size_t u,
                                          std::size_t beta) {
  const std::size_t k = graph.size();
  if (beta > 3) {
    std::vector<double> acc(k, 0.0);
    std::vector<char> on_path(k, 0);
    on_path[u] = 1;
    similarity_paths_dfs(graph, u, 1.0, 0, beta, on_path, acc);
    acc[u] = 0.0;
    return acc;
  }
  std::vector<double> one(k, 0.0), two(k, 0.0), three(k, 0.0);
  for (const Edge& x : graph.neighbors(u))
    if (x.node != u) one[x.node] = x.weight;
  if (beta >= 2) {
    for (const Edge& x : graph.neighbors(u)) {
      if (x.node == u) continue;
      for (const Edge& y : graph.neighbors(x.node))
        if (y.node != x.node && y.node != u) two[y.node] += x.weight * y.weight;
    }
  }
  if (beta >= 3) {
    // two[y] sums u-x-y over x; extend by y-v, then drop walks u-v-y-v.
    for (std::size_t y = 0; y < k; ++y) {
      if (two[y] == 0.0) continue;
      for (const Edge& v : graph.neighbors(y))
        if (v.node != y && v.node != u) three[v.node] += two[y] * v.weight;
    }
    for (const Edge& x : graph.neighbors(u)) {
      if (x.node == u) continue;
      double back = 0.0;
      for (const Edge& y : graph.neighbors(x.node))
        if (y.node != x.node && y.node != u) back += y.weight * y.weight;
      three[x.node] -= x.weight * back;
    }
    for (double& v : three) v = std::max(v, 0.0);
  }
  std::vector<double> total(k, 0.0);
  for (std::size_t v = 0; v < k; ++v) {
    if (v == u) continue;
    double s = one[v];
    if (beta >= 2) s += two[v];
    if (beta >= 3) s += three[v];
    total[v] = s;
  }
  return total;
}

}  // namespace detail

// Sim(u,v): sum over simple paths of length <= beta of the product of edge
// weights. Symmetric; only pairs within beta hops are stored.
inline SimilarityTable node_similarity(const SpeakerGraph& graph, std::size_t beta) {
  if (beta < 1) throw ConfigError("path length threshold beta must be at least 1");
  const std::size_t k = graph.size();
  std::vector<std::vector<Edge>> rows(k);
  for (std::size_t u = 0; u < k; ++u) {
    const std::vector<double> row = detail::similarity_row(graph, u, beta);
    for (std::size_t v = u + 1; v < k; ++v)
      if (row[v] > 0.0) {
        rows[u].push_back({v, row[v]});
        rows[v].push_back({u, row[v]});
      }
  }
  for (auto& r : rows)
    std::sort(r.begin(), r.end(), [](const Edge& a, const Edge& b) { return a.node < b.node; });
  return SimilarityTable(std::move(rows));
}

// Per node u: (neighbour v, NNI_v(u)) over non-self neighbours in graph order,
// where NNI_v(u) = Sim(u,v) NI(v) / max over neighbours of the same product.
using InfluenceMap = std::vector<std::vector<Edge>>;

inline InfluenceMap neighbor_influence(const std::vector<double>& ni, const SimilarityTable& sim,
                                       const SpeakerGraph& graph) {
  if (ni.size() != graph.size() || sim.size() != graph.size())
    throw DimensionError(dims_message("node score count vs graph nodes", graph.size(),
                                      ni.size() != graph.size() ? ni.size() : sim.size()));
  InfluenceMap nni(graph.size());
  for (std::size_t u = 0; u < graph.size(); ++u) {
    double peak = 0.0;
    for (const Edge& e : graph.neighbors(u)) {
      if (e.node == u) continue;
      const double p = sim(u, e.node) * ni[e.node];
      nni[u].push_back({e.node, p});
      peak = std::max(peak, p);
    }
    for (Edge& e : nni[u]) e.weight = peak > 0.0 ? e.weight / peak : 0.0;
  }
  return nni;
}

struct NodeScores {
  std::vector<double> ni;
  SimilarityTable sim;
  InfluenceMap nni;
};

inline NodeScores compute_node_scores(const SpeakerGraph& graph, std::size_t beta) {
  NodeScores scores;
  scores.ni = node_importance(graph);
  scores.sim = node_similarity(graph, beta);
  scores.nni = neighbor_influence(scores.ni, scores.sim, graph);
  return scores;
}

struct Label {
  CommunityId community;
  double belonging;

  friend bool operator==(const Label&, const Label&) = default;
};

// Labels sorted by community id; belongings sum to 1.
struct LabelSet {
  std::vector<Label> entries;
  CommunityId dominant = 0;

  double belonging(CommunityId c) const {
    for (const Label& l : entries)
      if (l.community == c) return l.belonging;
    return 0.0;
  }
  bool contains(CommunityId c) const {
    return std::any_of(entries.begin(), entries.end(),
                       [c](const Label& l) { return l.community == c; });
  }

  friend bool operator==(const LabelSet&, const LabelSet&) = default;
};

// The dominant label of one neighbour together with its influence on the
// node being updated.
struct NeighborLabel {
  CommunityId community;
  double belonging;
  double influence;
};

// One label update: weighted vote over neighbour dominant labels, removal of
// labels below 1/|L'|, renormalization, then dominant selection with
// preference for labels held in the previous iteration.
inline LabelSet update_node(const std::vector<NeighborLabel>& neighbor_labels,
                            const LabelSet& previous, std::mt19937_64& rng) {
  if (neighbor_labels.empty()) throw DataError("update_node needs at least one neighbour label");

  const bool all_zero = std::all_of(neighbor_labels.begin(), neighbor_labels.end(),
                                    [](const NeighborLabel& n) { return n.influence == 0.0; });
  std::map<CommunityId, double> votes;
  double total = 0.0;
  for (const NeighborLabel& n : neighbor_labels) {
    const double w = n.belonging * (all_zero ? 1.0 : n.influence);
    votes[n.community] += w;
    total += w;
  }
  if (!(total > 0.0)) {
    // Neighbours with zero belonging: treat as an unweighted vote.
    total = 0.0;
    for (auto& [c, v] : votes) v = 0.0;
    for (const NeighborLabel& n : neighbor_labels) {
      votes[n.community] += 1.0;
      total += 1.0;
    }
  }

  const double cutoff = 1.0 / static_cast<double>(votes.size());
  double best = 0.0;
  for (auto& [c, v] : votes) {
    v /= total;
    best = std::max(best, v);
  }
  LabelSet out;
  double kept = 0.0;
  for (const auto& [c, v] : votes)
    if (v >= cutoff || v == best) {
      out.entries.push_back({c, v});
      kept += v;
    }
  best = 0.0;
  for (Label& l : out.entries) {
    l.belonging /= kept;
    best = std::max(best, l.belonging);
  }

  std::vector<CommunityId> tied;
  for (const Label& l : out.entries)
    if (l.belonging >= best - 1e-12) tied.push_back(l.community);
  if (std::find(tied.begin(), tied.end(), previous.dominant) != tied.end() &&
      previous.contains(previous.dominant)) {
    out.dominant = previous.dominant;
    return out;
  }
  std::vector<CommunityId> historical;
  for (CommunityId c : tied)
    if (previous.contains(c)) historical.push_back(c);
  const auto& pool = historical.empty() ? tied : historical;
  if (pool.size() == 1) {
    out.dominant = pool.front();
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    out.dominant = pool[pick(rng)];
  }
  return out;
}

struct CommunityPartition {
  std::vector<LabelSet> labels;
  std::size_t iterations_run = 0;
  bool converged = false;

  std::size_t community_count() const {
    std::size_t top = 0;
    bool any = false;
    for (const auto& ls : labels)
      for (const Label& l : ls.entries) {
        top = std::max(top, l.community);
        any = true;
      }
    return any ? top + 1 : 0;
  }

  friend bool operator==(const CommunityPartition&, const CommunityPartition&) = default;
};

struct PropagationConfig {
  std::size_t tau = 80;
  std::size_t beta = 2;
  std::uint64_t seed = 0;
};

namespace detail {

// Renumbers communities 0..n-1 by first appearance (node order, dominant
// label first).
inline void relabel_contiguous(std::vector<LabelSet>& labels) {
  std::map<CommunityId, CommunityId> remap;
  auto id_for = [&remap](CommunityId c) {
    auto [it, inserted] = remap.emplace(c, remap.size());
    return it->second;
  };
  for (const LabelSet& ls : labels) {
    if (ls.entries.empty()) continue;
    id_for(ls.dominant);
    for (const Label& l : ls.entries) id_for(l.community);
  }
  for (LabelSet& ls : labels) {
    for (Label& l : ls.entries) l.community = remap.at(l.community);
    if (!ls.entries.empty()) ls.dominant = remap.at(ls.dominant);
    std::sort(ls.entries.begin(), ls.entries.end(),
              [](const Label& a, const Label& b) { return a.community < b.community; });
  }
}

}  // namespace detail

// One asynchronous sweep over `order`. Returns true if any node changed its
// label-set size or dominant label.
inline bool propagation_sweep(const NodeScores& scores, const std::vector<std::size_t>& order,
                              std::vector<LabelSet>& labels, std::mt19937_64& rng) {
  bool changed = false;
  std::vector<NeighborLabel> incoming;
  for (std::size_t u : order) {
    if (scores.nni[u].empty()) continue;
    incoming.clear();
    for (const Edge& e : scores.nni[u]) {
      const LabelSet& nb = labels[e.node];
      incoming.push_back({nb.dominant, nb.belonging(nb.dominant), e.weight});
    }
    LabelSet next = update_node(incoming, labels[u], rng);
    if (next.dominant != labels[u].dominant || next.entries.size() != labels[u].entries.size())
      changed = true;
    labels[u] = std::move(next);
  }
  return changed;
}

// Nodes in ascending importance, ties by id.
inline std::vector<std::size_t> update_order(const std::vector<double>& ni) {
  std::vector<std::size_t> order(ni.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&ni](std::size_t a, std::size_t b) { return ni[a] < ni[b]; });
  return order;
}

inline CommunityPartition propagate(const SpeakerGraph& graph, const PropagationConfig& config) {
  if (config.tau < 1) throw ConfigError("maximum iteration count tau must be at least 1");
  const NodeScores scores = compute_node_scores(graph, config.beta);
  const std::vector<std::size_t> order = update_order(scores.ni);

  CommunityPartition part;
  part.labels.resize(graph.size());
  for (std::size_t u = 0; u < graph.size(); ++u) part.labels[u] = {{{u, 1.0}}, u};

  std::mt19937_64 rng(config.seed);
  while (part.iterations_run < config.tau) {
    ++part.iterations_run;
    if (!propagation_sweep(scores, order, part.labels, rng)) {
      part.converged = true;
      break;
    }
  }
  detail::relabel_contiguous(part.labels);
  return part;
}

// Nodes carrying two or more community labels.
inline std::vector<std::size_t> overlap_nodes(const CommunityPartition& partition) {
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < partition.labels.size(); ++u)
    if (partition.labels[u].entries.size() >= 2) out.push_back(u);
  return out;
}

}  // namespace ocdgalp
