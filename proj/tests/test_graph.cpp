#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace ocdgalp;

namespace {

ScoreMatrix scores(const oracle::Dense& d) { return ScoreMatrix(oracle::to_matrix(d)); }

std::set<std::pair<std::size_t, std::size_t>> edge_set(const SpeakerGraph& g) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < g.size(); ++i)
    for (const auto& e : g.neighbors(i))
      if (e.node > i) out.insert({i, e.node});
  return out;
}

}  // namespace

TEST(BuildAffinity, IdenticalVectorsScoreOne) {
  const EmbeddingMatrix e(oracle::to_matrix({{0.6, 0.8}, {0.6, 0.8}}));
  EXPECT_DOUBLE_EQ(build_affinity(e, SimilarityMetric::kCosine)(0, 1), 1.0);
}

TEST(BuildAffinity, OrthogonalVectorsScoreZero) {
  const EmbeddingMatrix e(oracle::to_matrix({{1.0, 0.0}, {0.0, 1.0}}));
  EXPECT_EQ(build_affinity(e, SimilarityMetric::kCosine)(0, 1), 0.0);
}

TEST(BuildAffinity, MatchesPairwiseLoop) {
  std::mt19937_64 rng(11);
  const auto x = oracle::random_dense(rng, 3, 5);
  const auto got = build_affinity(EmbeddingMatrix(oracle::to_matrix(x)), SimilarityMetric::kCosine);
  const auto want = oracle::cosine(x);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(got(i, j), want[i][j], 1e-12);
}

TEST(BuildAffinity, ZeroRowIsNamed) {
  const EmbeddingMatrix e(oracle::to_matrix({{1.0, 0.0}, {0.0, 0.0}}));
  try {
    build_affinity(e, SimilarityMetric::kCosine);
    FAIL() << "expected an error";
  } catch (const DataError& err) {
    EXPECT_NE(std::string(err.what()).find("row 1"), std::string::npos) << err.what();
  }
}

TEST(BuildAffinity, PrecomputedPassesThrough) {
  const oracle::Dense raw = {{5.0, -2.0}, {-2.0, 5.0}};
  const auto got = build_affinity(EmbeddingMatrix(oracle::to_matrix(raw)),
                                  SimilarityMetric::kPrecomputed);
  EXPECT_EQ(got(0, 1), -2.0);
  EXPECT_EQ(got(0, 0), 5.0);
  EXPECT_THROW(build_affinity(EmbeddingMatrix(oracle::to_matrix({{1.0, 2.0, 3.0}})),
                              SimilarityMetric::kPrecomputed),
               DimensionError);
}

TEST(BuildAffinity, PermutationEquivariant) {
  std::mt19937_64 rng(3);
  const auto x = oracle::random_dense(rng, 6, 4);
  std::vector<std::size_t> perm = {3, 0, 5, 1, 4, 2};
  oracle::Dense px;
  for (std::size_t p : perm) px.push_back(x[p]);
  const auto a = build_affinity(EmbeddingMatrix(oracle::to_matrix(x)), SimilarityMetric::kCosine);
  const auto b = build_affinity(EmbeddingMatrix(oracle::to_matrix(px)), SimilarityMetric::kCosine);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(b(i, j), a(perm[i], perm[j]));
}

TEST(ParseMetric, KnownNames) {
  EXPECT_EQ(parse_metric("cosine"), SimilarityMetric::kCosine);
  EXPECT_EQ(parse_metric("precomputed"), SimilarityMetric::kPrecomputed);
  EXPECT_THROW(parse_metric("plda"), ConfigError);
}

TEST(NormalizeScores, AffineEndpoints) {
  // Off-diagonals 2, 4, 6.
  const auto got = normalize_scores(scores({{9, 2, 4}, {2, 9, 6}, {4, 6, 9}}), nullptr);
  EXPECT_EQ(got(0, 1), 0.0);
  EXPECT_EQ(got(0, 2), 0.5);
  EXPECT_EQ(got(1, 2), 1.0);
  EXPECT_EQ(got(0, 0), 1.0);
}

TEST(NormalizeScores, FixedPointAndIdempotent) {
  const oracle::Dense a = {{1, 0, 0.25}, {0, 1, 1}, {0.25, 1, 1}};
  const auto once = normalize_scores(scores(a), nullptr);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(once(i, j), a[i][j]);
  EXPECT_EQ(normalize_scores(ScoreMatrix(once.weights()), nullptr), once);
}

TEST(NormalizeScores, MatchesScalarLoop) {
  std::mt19937_64 rng(5);
  auto raw = oracle::random_dense(rng, 5, 5, -3.0, 3.0);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < i; ++j) raw[i][j] = raw[j][i];
  const auto got = normalize_scores(scores(raw), nullptr);
  const auto want = oracle::min_max(raw);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(got(i, j), want[i][j], 1e-15);
}

TEST(NormalizeScores, ConstantMapsToHalfWithWarning) {
  std::ostringstream warn;
  const auto got = normalize_scores(scores({{1, 0.7, 0.7}, {0.7, 1, 0.7}, {0.7, 0.7, 1}}), &warn);
  EXPECT_EQ(got(0, 1), 0.5);
  EXPECT_EQ(got(1, 2), 0.5);
  EXPECT_FALSE(warn.str().empty());
}

TEST(NormalizeScores, SingleNodeIsTrivial) {
  const auto got = normalize_scores(scores({{0.3}}), nullptr);
  EXPECT_EQ(got.size(), 1u);
  EXPECT_EQ(got(0, 0), 1.0);
}

TEST(AffinityMatrix, RejectsBrokenInvariants) {
  EXPECT_THROW(AffinityMatrix(oracle::to_matrix({{1, 0.2}, {0.3, 1}})), DataError);
  EXPECT_THROW(AffinityMatrix(oracle::to_matrix({{0.9, 0.2}, {0.2, 1}})), DataError);
  EXPECT_THROW(AffinityMatrix(oracle::to_matrix({{1, 1.2}, {1.2, 1}})), DataError);
  EXPECT_THROW(EmbeddingMatrix(oracle::to_matrix({{NAN}})), DataError);
  EXPECT_THROW(EmbeddingMatrix(Matrix(0, 3)), DataError);
}

TEST(ThresholdGraph, ZeroKeepsEveryPositiveEdge) {
  std::mt19937_64 rng(1);
  const auto a = fixture::random_affinity(rng, 6);
  const auto g = threshold_graph(a, 0.0);
  EXPECT_EQ(g.edge_count(), 15u);
}

TEST(ThresholdGraph, OneKeepsOnlySelfLoops) {
  std::mt19937_64 rng(2);
  const auto g = threshold_graph(fixture::random_affinity(rng, 5), 1.0);
  EXPECT_EQ(g.edge_count(), 0u);
  for (std::size_t i = 0; i < 5; ++i) {
    ASSERT_EQ(g.neighbors(i).size(), 1u);
    EXPECT_EQ(g.neighbors(i)[0].node, i);
    EXPECT_EQ(g.neighbors(i)[0].weight, 1.0);
  }
}

TEST(ThresholdGraph, KeepsEdgesAboveMu) {
  // Pairs (0,1)=0.2, (1,2)=0.35, (2,3)=0.9; everything else 0.
  const oracle::Dense a = {{1, 0.2, 0, 0}, {0.2, 1, 0.35, 0}, {0, 0.35, 1, 0.9}, {0, 0, 0.9, 1}};
  const auto g = threshold_graph(AffinityMatrix(oracle::to_matrix(a)), 0.3);
  const std::set<std::pair<std::size_t, std::size_t>> want = {{1, 2}, {2, 3}};
  EXPECT_EQ(edge_set(g), want);
  EXPECT_EQ(g.weight(1, 2), 0.35);
  EXPECT_EQ(g.weight(3, 2), 0.9);
}

TEST(ThresholdGraph, EqualToMuIsDropped) {
  const auto g = threshold_graph(AffinityMatrix(oracle::to_matrix({{1, 0.3}, {0.3, 1}})), 0.3);
  EXPECT_EQ(g.edge_count(), 0u);
}

TEST(ThresholdGraph, RejectsMuOutsideUnitInterval) {
  const AffinityMatrix a(oracle::to_matrix({{1}}));
  EXPECT_THROW(threshold_graph(a, -0.1), ConfigError);
  EXPECT_THROW(threshold_graph(a, 1.5), ConfigError);
}

TEST(ThresholdGraph, MonotoneInMu) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = fixture::random_affinity(rng, 9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double m1 = u(rng), m2 = u(rng);
    if (m1 > m2) std::swap(m1, m2);
    const auto low = edge_set(threshold_graph(a, m1));
    for (const auto& e : edge_set(threshold_graph(a, m2))) EXPECT_TRUE(low.count(e));
  }
}

TEST(ThresholdGraph, GraphInvariants) {
  std::mt19937_64 rng(4);
  const auto a = fixture::random_affinity(rng, 12);
  const auto g = threshold_graph(a, 0.4);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(g.weight(i, i), 1.0);
    for (const auto& e : g.neighbors(i)) {
      EXPECT_EQ(g.weight(e.node, i), e.weight);
      if (e.node != i) {
        EXPECT_GT(e.weight, 0.4);
      }
    }
  }
}

TEST(SpeakerGraph, RejectsAsymmetricInput) {
  std::vector<std::vector<Edge>> adj(2);
  adj[0].push_back({1, 0.5});
  EXPECT_THROW(SpeakerGraph(adj, 0.0), DataError);
  adj[1].push_back({0, 0.6});
  EXPECT_THROW(SpeakerGraph(adj, 0.0), DataError);
}

TEST(GroundTruthAdjacency, SharedSpeaker) {
  const auto a = ground_truth_adjacency({{0}, {0}, {1}});
  EXPECT_EQ(a(0, 1), 1.0);
  EXPECT_EQ(a(0, 2), 0.0);
  EXPECT_EQ(a(1, 2), 0.0);
  EXPECT_EQ(a(2, 2), 1.0);
}

TEST(GroundTruthAdjacency, OverlapNodeLinksBoth) {
  const auto a = ground_truth_adjacency({{0}, {0, 1}, {1}});
  EXPECT_EQ(a(0, 1), 1.0);
  EXPECT_EQ(a(1, 2), 1.0);
  EXPECT_EQ(a(0, 2), 0.0);
}

TEST(GroundTruthAdjacency, MatchesSetIntersection) {
  std::mt19937_64 rng(6);
  const auto labels = fixture::random_labels(rng, 6, 3);
  const auto got = ground_truth_adjacency(labels);
  const auto want = oracle::intersection_adjacency(labels);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) EXPECT_EQ(got(i, j), want[i][j]);
}

TEST(GroundTruthAdjacency, EmptyLabelSetFails) {
  EXPECT_THROW(ground_truth_adjacency({{0}, {}}), DataError);
}
