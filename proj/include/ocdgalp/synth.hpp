#pragma once

// Seeded synthetic fixtures: planted overlapping-community graphs and
// multi-speaker conversations with embeddings and reference RTTM.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "ocdgalp/eval.hpp"
#include "ocdgalp/graph.hpp"
#include "ocdgalp/timeline.hpp"

namespace ocdgalp {

struct PlantedGraphSpec {
  std::vector<std::size_t> community_sizes;
  double intra_probability = 1.0;
  double intra_weight_lo = 1.0;
  double intra_weight_hi = 1.0;
  double noise_probability = 0.0;
  double noise_weight_lo = 0.1;
  double noise_weight_hi = 0.3;
  // Extra nodes appended after the community members, each listing the
  // communities it joins.
  std::vector<std::vector<std::size_t>> bridges;
  // Members of each community a bridge links to; 0 links to every member.
  std::size_t bridge_links = 0;
  std::uint64_t seed = 0;
};

struct PlantedGraph {
  SpeakerGraph graph;
  std::vector<std::vector<int>> truth;
  std::vector<std::size_t> bridge_nodes;
};

inline PlantedGraph generate_planted_graph(const PlantedGraphSpec& spec) {
  auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  auto range_ok = [](double lo, double hi) { return lo > 0.0 && lo <= hi && hi <= 1.0; };
  if (!prob_ok(spec.intra_probability) || !prob_ok(spec.noise_probability))
    throw ConfigError("edge probabilities must lie in [0,1]");
  if (!range_ok(spec.intra_weight_lo, spec.intra_weight_hi) ||
      !range_ok(spec.noise_weight_lo, spec.noise_weight_hi))
    throw ConfigError("edge weight ranges must lie within (0,1]");
  if (spec.community_sizes.empty()) throw ConfigError("at least one community is required");
  for (std::size_t s : spec.community_sizes)
    if (s == 0) throw ConfigError("community of size 0");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> intra_w(spec.intra_weight_lo, spec.intra_weight_hi);
  std::uniform_real_distribution<double> noise_w(spec.noise_weight_lo, spec.noise_weight_hi);

  std::vector<std::vector<std::size_t>> members(spec.community_sizes.size());
  std::vector<int> home;
  for (std::size_t c = 0; c < spec.community_sizes.size(); ++c)
    for (std::size_t n = 0; n < spec.community_sizes[c]; ++n) {
      members[c].push_back(home.size());
      home.push_back(static_cast<int>(c));
    }
  const std::size_t core = home.size();
  const std::size_t total = core + spec.bridges.size();

  std::vector<std::vector<Edge>> adj(total);
  auto link = [&adj](std::size_t a, std::size_t b, double w) {
    adj[a].push_back({b, w});
    adj[b].push_back({a, w});
  };
  for (std::size_t a = 0; a < core; ++a)
    for (std::size_t b = a + 1; b < core; ++b) {
      const bool same = home[a] == home[b];
      if (coin(rng) < (same ? spec.intra_probability : spec.noise_probability))
        link(a, b, same ? intra_w(rng) : noise_w(rng));
    }

  PlantedGraph out;
  out.truth.resize(total);
  for (std::size_t n = 0; n < core; ++n) out.truth[n] = {home[n]};
  for (std::size_t b = 0; b < spec.bridges.size(); ++b) {
    const std::size_t node = core + b;
    out.bridge_nodes.push_back(node);
    for (std::size_t c : spec.bridges[b]) {
      if (c >= members.size()) throw ConfigError("bridge names an unknown community");
      out.truth[node].push_back(static_cast<int>(c));
      const std::size_t count =
          spec.bridge_links == 0 ? members[c].size() : std::min(spec.bridge_links, members[c].size());
      for (std::size_t m = 0; m < count; ++m) link(node, members[c][m], intra_w(rng));
    }
    if (out.truth[node].empty()) throw ConfigError("bridge node joins no community");
  }
  out.graph = SpeakerGraph(std::move(adj), 0.0);
  return out;
}

struct ConversationSpec {
  std::string recording = "synth";
  std::size_t speakers = 3;
  double duration = 60.0;      // seconds
  std::size_t dim = 32;
  double separation = 1.2;     // minimum pairwise centroid angle, radians
  double noise = 0.3;          // expected norm of the additive embedding noise
  double overlap = 0.1;        // fraction of the duration with two speakers
  double window = 1.5;
  double shift = 0.75;
  std::uint64_t seed = 0;
};

struct Conversation {
  EmbeddingMatrix embeddings;
  SpeechRegions regions;
  SegmentTable segments;
  std::vector<RttmRecord> reference;
  std::vector<std::vector<int>> truth;  // speakers per segment, primary first
  Matrix centroids;                     // speakers x dim
};

inline std::string synth_speaker(int index) { return "spk" + std::to_string(index); }

namespace detail {

inline std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (;;) {
    std::vector<double> v(dim);
    for (double& x : v) x = gauss(rng);
    const double n = std::sqrt(dot(v, v));
    if (n > 1e-12) {
      for (double& x : v) x /= n;
      return v;
    }
  }
}

}  // namespace detail

inline Conversation generate_conversation(const ConversationSpec& spec) {
  if (spec.speakers < 2) throw ConfigError("a conversation needs at least two speakers");
  if (!(spec.overlap >= 0.0 && spec.overlap <= 0.5))
    throw ConfigError("overlap fraction must lie in [0, 0.5]");
  if (!(spec.duration > 0.0)) throw ConfigError("duration must be positive");
  if (spec.dim == 0) throw ConfigError("embedding dimension must be positive");
  if (!(spec.noise >= 0.0)) throw ConfigError("noise scale must be non-negative");

  std::mt19937_64 rng(spec.seed);
  Conversation conv;

  // Centroids by rejection sampling under the minimum-angle constraint.
  const double min_cos = std::cos(spec.separation);
  conv.centroids = Matrix(spec.speakers, spec.dim);
  for (std::size_t s = 0; s < spec.speakers; ++s) {
    bool placed = false;
    for (int attempt = 0; attempt < 20000 && !placed; ++attempt) {
      auto c = detail::random_unit(rng, spec.dim);
      placed = true;
      for (std::size_t t = 0; t < s && placed; ++t)
        if (dot(c, conv.centroids.row(t)) > min_cos) placed = false;
      if (placed) std::copy(c.begin(), c.end(), conv.centroids.row(s).begin());
    }
    if (!placed)
      throw ConfigError("cannot place " + std::to_string(spec.speakers) +
                        " centroids with the requested separation in dimension " +
                        std::to_string(spec.dim));
  }

  // Speech regions separated by short pauses.
  const TimeMs total = to_ms(spec.duration);
  std::uniform_int_distribution<TimeMs> pause(200, 1000);
  std::uniform_int_distribution<TimeMs> talk(4000, 12000);
  for (TimeMs t = std::uniform_int_distribution<TimeMs>(0, 500)(rng); t < total;) {
    const TimeMs end = std::min(total, t + talk(rng));
    if (end - t >= 500) conv.regions.add(spec.recording, {t, end});
    t = end + pause(rng);
  }
  conv.segments = subsegment(conv.regions, spec.window, spec.shift);
  const std::vector<TimeSpan> owned = owned_spans(conv.segments);
  const std::size_t k = conv.segments.size();
  if (k == 0) throw ConfigError("duration too short to hold any speech");

  // Speaker turns over consecutive segments; every speaker appears early.
  std::vector<int> primary(k);
  std::vector<std::size_t> turn_starts;
  {
    std::vector<int> order(spec.speakers);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_int_distribution<std::size_t> turn_len(3, 10);
    std::uniform_int_distribution<int> other(0, static_cast<int>(spec.speakers) - 2);
    int current = order[0];
    std::size_t turn = 0;
    for (std::size_t n = 0; n < k; ++turn) {
      if (turn > 0) {
        if (turn < order.size()) {
          current = order[turn];
        } else {
          int next = other(rng);
          current = next >= current ? next + 1 : next;
        }
      }
      turn_starts.push_back(n);
      const std::size_t len = std::min(turn_len(rng), k - n);
      for (std::size_t m = 0; m < len; ++m) primary[n + m] = current;
      n += len;
    }
  }

  // Overlap: the previous speaker keeps talking into the start of a turn.
  std::vector<int> secondary(k, -1);
  const TimeMs overlap_target = to_ms(spec.overlap * spec.duration);
  TimeMs overlap_acc = 0;
  auto try_add = [&](std::size_t n, int who) {
    if (secondary[n] >= 0 || who == primary[n]) return false;
    const TimeMs d = owned[n].duration();
    if (std::llabs(overlap_acc + d - overlap_target) >= std::llabs(overlap_acc - overlap_target))
      return false;
    secondary[n] = who;
    overlap_acc += d;
    return true;
  };
  if (overlap_target > 0) {
    std::vector<std::size_t> boundaries(turn_starts.begin() + 1, turn_starts.end());
    std::shuffle(boundaries.begin(), boundaries.end(), rng);
    std::uniform_int_distribution<std::size_t> run(1, 3);
    for (std::size_t b : boundaries) {
      const int prev = primary[b - 1];
      const std::size_t len = run(rng);
      for (std::size_t m = 0; m < len && b + m < k && primary[b + m] == primary[b]; ++m)
        if (!try_add(b + m, prev)) break;
    }
    std::vector<std::size_t> rest(k);
    std::iota(rest.begin(), rest.end(), 0);
    std::shuffle(rest.begin(), rest.end(), rng);
    std::uniform_int_distribution<int> other(0, static_cast<int>(spec.speakers) - 2);
    for (std::size_t n : rest) {
      int who = other(rng);
      if (who >= primary[n]) ++who;
      try_add(n, who);
    }
  }

  // Embeddings: noisy centroid, or noisy mean of two centroids on overlap.
  Matrix emb(k, spec.dim);
  std::normal_distribution<double> gauss(0.0, spec.noise / std::sqrt(static_cast<double>(spec.dim)));
  conv.truth.resize(k);
  for (std::size_t n = 0; n < k; ++n) {
    auto row = emb.row(n);
    auto ca = conv.centroids.row(static_cast<std::size_t>(primary[n]));
    conv.truth[n] = {primary[n]};
    if (secondary[n] >= 0) {
      auto cb = conv.centroids.row(static_cast<std::size_t>(secondary[n]));
      conv.truth[n].push_back(secondary[n]);
      for (std::size_t c = 0; c < spec.dim; ++c) row[c] = 0.5 * (ca[c] + cb[c]);
    } else {
      std::copy(ca.begin(), ca.end(), row.begin());
    }
    if (spec.noise > 0.0)
      for (double& x : row) x += gauss(rng);
    const double norm = std::sqrt(dot(row, row));
    if (norm == 0.0) throw ConfigError("degenerate embedding; increase centroid separation");
    for (double& x : row) x /= norm;
  }
  conv.embeddings = EmbeddingMatrix(std::move(emb));

  std::vector<SpeakerTurn> turns;
  for (std::size_t n = 0; n < k; ++n)
    for (int s : conv.truth[n]) turns.push_back({synth_speaker(s), owned[n]});
  for (const auto& t : merge_turns(std::move(turns)))
    conv.reference.push_back(
        {spec.recording, to_seconds(t.span.start), to_seconds(t.span.duration()), t.speaker});
  return conv;
}

}  // namespace ocdgalp
