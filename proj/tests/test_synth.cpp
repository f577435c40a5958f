#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ocdgalp;

namespace {

TimeMs overlap_between_speakers(const std::vector<RttmRecord>& recs) {
  std::vector<std::pair<TimeMs, int>> events;
  for (const auto& r : recs) {
    events.push_back({to_ms(r.start), +1});
    events.push_back({to_ms(r.start + r.duration), -1});
  }
  std::sort(events.begin(), events.end());
  TimeMs total = 0, last = 0;
  int active = 0;
  for (const auto& [t, d] : events) {
    if (active >= 2) total += t - last;
    active += d;
    last = t;
  }
  return total;
}

}  // namespace

TEST(PlantedGraph, NoNoiseGivesDisconnectedCommunities) {
  PlantedGraphSpec spec;
  spec.community_sizes = {8, 8};
  spec.intra_probability = 1.0;
  spec.noise_probability = 0.0;
  const auto pg = generate_planted_graph(spec);
  for (std::size_t u = 0; u < 8; ++u)
    for (std::size_t v = 8; v < 16; ++v) EXPECT_EQ(pg.graph.weight(u, v), 0.0);
  EXPECT_EQ(pg.graph.edge_count(), 2u * 28u);
}

TEST(PlantedGraph, BridgeTruthHasBothCommunities) {
  PlantedGraphSpec spec;
  spec.community_sizes = {5, 5};
  spec.bridges = {{0, 1}};
  const auto pg = generate_planted_graph(spec);
  ASSERT_EQ(pg.bridge_nodes.size(), 1u);
  EXPECT_EQ(pg.truth[pg.bridge_nodes[0]].size(), 2u);
}

TEST(PlantedGraph, EdgeCountsWithinThreeSigma) {
  PlantedGraphSpec spec;
  spec.community_sizes = {20, 20, 20};
  spec.intra_probability = 0.4;
  spec.noise_probability = 0.05;
  spec.seed = 17;
  const auto pg = generate_planted_graph(spec);
  std::size_t intra = 0, inter = 0;
  for (std::size_t u = 0; u < 60; ++u)
    for (const auto& e : pg.graph.neighbors(u))
      if (e.node > u) (u / 20 == e.node / 20 ? intra : inter)++;
  const double n_intra = 3 * 190, n_inter = 3 * 400;
  auto within = [](double count, double n, double p) {
    return std::abs(count - n * p) <= 3.0 * std::sqrt(n * p * (1 - p));
  };
  EXPECT_TRUE(within(intra, n_intra, 0.4)) << intra;
  EXPECT_TRUE(within(inter, n_inter, 0.05)) << inter;
}

TEST(PlantedGraph, WeightsFromTheirRanges) {
  PlantedGraphSpec spec;
  spec.community_sizes = {10, 10};
  spec.intra_weight_lo = 0.6;
  spec.intra_weight_hi = 0.9;
  spec.noise_probability = 0.3;
  spec.noise_weight_lo = 0.1;
  spec.noise_weight_hi = 0.2;
  const auto pg = generate_planted_graph(spec);
  for (std::size_t u = 0; u < 20; ++u)
    for (const auto& e : pg.graph.neighbors(u)) {
      if (e.node == u) continue;
      if (u / 10 == e.node / 10) {
        EXPECT_GE(e.weight, 0.6);
        EXPECT_LE(e.weight, 0.9);
      } else {
        EXPECT_GE(e.weight, 0.1);
        EXPECT_LE(e.weight, 0.2);
      }
    }
}

TEST(PlantedGraph, InvalidSpecs) {
  PlantedGraphSpec spec;
  spec.community_sizes = {4, 0};
  EXPECT_THROW(generate_planted_graph(spec), ConfigError);
  spec.community_sizes = {4};
  spec.intra_probability = 1.5;
  EXPECT_THROW(generate_planted_graph(spec), ConfigError);
  spec.intra_probability = 0.5;
  spec.intra_weight_lo = 0.0;
  EXPECT_THROW(generate_planted_graph(spec), ConfigError);
}

TEST(Conversation, NoiselessTwoSpeakersAreBlockStructured) {
  ConversationSpec spec;
  spec.speakers = 2;
  spec.noise = 0.0;
  spec.overlap = 0.0;
  const auto conv = generate_conversation(spec);
  const auto a = build_affinity(conv.embeddings, SimilarityMetric::kCosine);
  const double cross = dot(conv.centroids.row(0), conv.centroids.row(1));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) {
      if (conv.truth[i] == conv.truth[j])
        EXPECT_NEAR(a(i, j), 1.0, 1e-12);
      else
        EXPECT_NEAR(a(i, j), cross, 1e-12);
    }
  PipelineConfig cfg;
  cfg.epsilon = 1.0;
  const auto r = run_pipeline(cfg, conv.segments, conv.embeddings.values(), conv.regions, nullptr,
                              std::nullopt, nullptr);
  EXPECT_EQ(compute_der(conv.reference, hypothesis_to_rttm(r.hypothesis)).der, 0.0);
}

TEST(Conversation, ZeroOverlapMeansDisjointSpeakers) {
  ConversationSpec spec;
  spec.overlap = 0.0;
  spec.speakers = 4;
  EXPECT_EQ(overlap_between_speakers(generate_conversation(spec).reference), 0);
}

TEST(Conversation, OverlapFractionWithinOneSegment) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ConversationSpec spec;
    spec.overlap = 0.2;
    spec.duration = 100.0;
    spec.seed = seed;
    const auto conv = generate_conversation(spec);
    const TimeMs measured = overlap_between_speakers(conv.reference);
    EXPECT_LE(std::llabs(measured - 20000), 1500) << measured;
  }
}

TEST(Conversation, ReferenceCoversSpeechExactly) {
  ConversationSpec spec;
  spec.overlap = 0.15;
  spec.seed = 4;
  const auto conv = generate_conversation(spec);
  std::vector<TimeSpan> spans;
  for (const auto& r : conv.reference) spans.push_back({to_ms(r.start), to_ms(r.start + r.duration)});
  std::sort(spans.begin(), spans.end(), [](auto a, auto b) { return a.start < b.start; });
  std::vector<TimeSpan> merged;
  for (const auto& s : spans) {
    if (!merged.empty() && s.start <= merged.back().end)
      merged.back().end = std::max(merged.back().end, s.end);
    else
      merged.push_back(s);
  }
  EXPECT_EQ(merged, conv.regions.recordings().at(spec.recording));
  EXPECT_EQ(write_rttm(parse_rttm(write_rttm(conv.reference))), write_rttm(conv.reference));
}

TEST(Conversation, CentroidSeparationHolds) {
  ConversationSpec spec;
  spec.speakers = 6;
  spec.separation = 1.3;
  const auto conv = generate_conversation(spec);
  for (std::size_t a = 0; a < 6; ++a)
    for (std::size_t b = a + 1; b < 6; ++b)
      EXPECT_LE(dot(conv.centroids.row(a), conv.centroids.row(b)), std::cos(1.3) + 1e-12);
  spec.separation = 3.0;
  EXPECT_THROW(generate_conversation(spec), ConfigError);
}

TEST(Conversation, DeterministicUnderSeed) {
  ConversationSpec spec;
  spec.seed = 99;
  const auto a = generate_conversation(spec);
  const auto b = generate_conversation(spec);
  EXPECT_EQ(a.embeddings.values(), b.embeddings.values());
  EXPECT_EQ(a.reference, b.reference);
  EXPECT_EQ(a.truth, b.truth);
}

TEST(Conversation, OverlapEmbeddingsCloserToParents) {
  // Checked on seeded instances with noise below half the smallest centroid
  // gap.
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ConversationSpec spec;
    spec.speakers = 4;
    spec.overlap = 0.3;
    spec.noise = 0.2;
    spec.separation = 1.4;
    spec.seed = seed;
    const auto conv = generate_conversation(spec);
    for (std::size_t n = 0; n < conv.truth.size(); ++n) {
      if (conv.truth[n].size() != 2) continue;
      const auto e = conv.embeddings.row(n);
      double parent_min = INFINITY, other_max = -INFINITY;
      for (std::size_t s = 0; s < spec.speakers; ++s) {
        const double c = dot(e, conv.centroids.row(s));
        const bool parent = std::count(conv.truth[n].begin(), conv.truth[n].end(), int(s)) > 0;
        if (parent)
          parent_min = std::min(parent_min, c);
        else
          other_max = std::max(other_max, c);
      }
      EXPECT_GT(parent_min, other_max) << "seed " << seed << " node " << n;
    }
  }
}

TEST(Conversation, InvalidSpecs) {
  ConversationSpec spec;
  spec.speakers = 1;
  EXPECT_THROW(generate_conversation(spec), ConfigError);
  spec.speakers = 2;
  spec.overlap = 0.6;
  EXPECT_THROW(generate_conversation(spec), ConfigError);
}
