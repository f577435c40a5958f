#pragma once

// Graph-attention encoder, pairwise scoring head, affinity fusion and the BCE
// training objective, with hand-derived gradients.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ocdgalp/error.hpp"
#include "ocdgalp/graph.hpp"
#include "ocdgalp/matrix.hpp"

namespace ocdgalp {

enum class Activation { kLinear, kElu, kSigmoid };

inline double activate(Activation act, double x) {
  switch (act) {
    case Activation::kLinear: return x;
    case Activation::kElu: return x > 0.0 ? x : std::expm1(x);
    case Activation::kSigmoid:
      return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return x;
}

// Derivative expressed through the pre-activation x and output y = act(x).
inline double activate_grad(Activation act, double x, double y) {
  switch (act) {
    case Activation::kLinear: return 1.0;
    case Activation::kElu: return x > 0.0 ? 1.0 : y + 1.0;
    case Activation::kSigmoid: return y * (1.0 - y);
  }
  return 1.0;
}

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }

struct GatLayerParams {
  Matrix weight;                  // D1 x D2
  std::vector<double> attention;  // 2 * D2: source half then neighbour half
  double leaky_slope = 0.2;

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
};

struct DenseLayer {
  Matrix weight;  // in x out
  std::vector<double> bias;
  Activation activation = Activation::kElu;
};

struct ScoringHeadParams {
  std::vector<DenseLayer> layers;

  std::size_t in_dim() const { return layers.empty() ? 0 : layers.front().weight.rows(); }
};

struct GatModel {
  std::vector<GatLayerParams> gat_layers;
  ScoringHeadParams scoring_head;
  // Full architecture, e.g. {d, 128, 64, 64, 1}; the first gat_layers.size()
  // transitions are attention layers, the rest are the scoring head.
  std::vector<std::size_t> dims;
  Activation gat_activation = Activation::kElu;
  double epsilon = 0.5;
  std::uint64_t seed = 0;
};

inline std::vector<std::size_t> default_dims(std::size_t input_dim) {
  return {input_dim, 128, 64, 64, 1};
}

// Glorot-uniform initialisation. ELU on hidden layers, sigmoid on the output.
inline GatModel init_model(const std::vector<std::size_t>& dims, std::size_t gat_layer_count,
                           double epsilon, std::uint64_t seed) {
  if (dims.size() < gat_layer_count + 2)
    throw ConfigError("architecture needs at least one scoring layer after the attention layers");
  if (gat_layer_count == 0) throw ConfigError("at least one attention layer is required");
  if (dims.back() != 1) throw ConfigError("scoring head must end in a single output");
  for (std::size_t d : dims)
    if (d == 0) throw ConfigError("layer dimensions must be positive");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("epsilon must lie in [0,1]");

  std::mt19937_64 rng(seed);
  auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    return std::uniform_real_distribution<double>(-limit, limit);
  };

  GatModel model;
  model.dims = dims;
  model.epsilon = epsilon;
  model.seed = seed;
  for (std::size_t l = 0; l < gat_layer_count; ++l) {
    GatLayerParams layer;
    layer.weight = Matrix(dims[l], dims[l + 1]);
    auto dist = glorot(dims[l], dims[l + 1]);
    for (double& w : layer.weight.data()) w = dist(rng);
    auto adist = glorot(2 * dims[l + 1], 1);
    layer.attention.resize(2 * dims[l + 1]);
    for (double& a : layer.attention) a = adist(rng);
    model.gat_layers.push_back(std::move(layer));
  }
  for (std::size_t l = gat_layer_count; l + 1 < dims.size(); ++l) {
    DenseLayer layer;
    layer.weight = Matrix(dims[l], dims[l + 1]);
    auto dist = glorot(dims[l], dims[l + 1]);
    for (double& w : layer.weight.data()) w = dist(rng);
    layer.bias.assign(dims[l + 1], 0.0);
    layer.activation = (l + 2 == dims.size()) ? Activation::kSigmoid : Activation::kElu;
    model.scoring_head.layers.push_back(std::move(layer));
  }
  if (model.scoring_head.in_dim() != dims[gat_layer_count])
    throw ConfigError("scoring head input must equal the last attention layer width");
  return model;
}

// Parameter tensors in declaration order: per attention layer (weight,
// attention), then per dense layer (weight, bias).
inline std::vector<std::span<double>> parameter_blocks(GatModel& model) {
  std::vector<std::span<double>> blocks;
  for (auto& layer : model.gat_layers) {
    blocks.emplace_back(layer.weight.data());
    blocks.emplace_back(layer.attention);
  }
  for (auto& layer : model.scoring_head.layers) {
    blocks.emplace_back(layer.weight.data());
    blocks.emplace_back(layer.bias);
  }
  return blocks;
}

inline std::vector<std::span<const double>> parameter_blocks(const GatModel& model) {
  std::vector<std::span<const double>> blocks;
  for (const auto& p : parameter_blocks(const_cast<GatModel&>(model))) blocks.emplace_back(p);
  return blocks;
}

// Row i lists (neighbour, alpha) over N_i in graph order.
struct AttentionEntry {
  std::size_t node;
  double alpha;
};
using AttentionMatrix = std::vector<std::vector<AttentionEntry>>;

namespace detail {

inline void check_layer_input(const Matrix& features, const SpeakerGraph& graph,
                              const GatLayerParams& layer) {
  if (features.cols() != layer.in_dim())
    throw DimensionError(dims_message("attention layer input dimension", layer.in_dim(),
                                      features.cols()));
  if (features.rows() != graph.size())
    throw DimensionError(dims_message("graph node count vs feature rows", features.rows(),
                                      graph.size()));
  if (layer.attention.size() != 2 * layer.out_dim())
    throw DimensionError(dims_message("attention vector length", 2 * layer.out_dim(),
                                      layer.attention.size()));
}

// Intermediate values of one attention layer, kept for the backward pass.
struct GatLayerCache {
  Matrix input;      // K x D1
  Matrix projected;  // K x D2, rows W^T z_j
  std::vector<std::vector<double>> logits;  // pre-LeakyReLU scores, graph order
  AttentionMatrix attention;
  Matrix aggregated;  // K x D2, before the nonlinearity
  Matrix output;      // K x D2
};

inline AttentionMatrix attention_from_projection(const Matrix& projected,
                                                 const SpeakerGraph& graph,
                                                 const GatLayerParams& layer,
                                                 std::vector<std::vector<double>>* logits_out) {
  const std::size_t k = graph.size();
  const std::size_t d2 = layer.out_dim();
  std::span<const double> a_src(layer.attention.data(), d2);
  std::span<const double> a_dst(layer.attention.data() + d2, d2);
  std::vector<double> src(k), dst(k);
  for (std::size_t i = 0; i < k; ++i) {
    src[i] = dot(a_src, projected.row(i));
    dst[i] = dot(a_dst, projected.row(i));
  }
  AttentionMatrix attention(k);
  if (logits_out) logits_out->assign(k, {});
  for (std::size_t i = 0; i < k; ++i) {
    const auto& nbrs = graph.neighbors(i);
    std::vector<double> e(nbrs.size());
    double peak = -INFINITY;
    for (std::size_t n = 0; n < nbrs.size(); ++n) {
      const double s = src[i] + dst[nbrs[n].node];
      if (logits_out) (*logits_out)[i].push_back(s);
      e[n] = leaky_relu(s, layer.leaky_slope);
      peak = std::max(peak, e[n]);
    }
    double total = 0.0;
    for (double& v : e) total += (v = std::exp(v - peak));
    attention[i].reserve(nbrs.size());
    for (std::size_t n = 0; n < nbrs.size(); ++n)
      attention[i].push_back({nbrs[n].node, e[n] / total});
  }
  return attention;
}

inline GatLayerCache gat_layer_forward_cached(const Matrix& features, const SpeakerGraph& graph,
                                              const GatLayerParams& layer,
                                              Activation activation) {
  check_layer_input(features, graph, layer);
  GatLayerCache cache;
  cache.input = features;
  cache.projected = matmul(features, layer.weight);
  cache.attention = attention_from_projection(cache.projected, graph, layer, &cache.logits);
  const std::size_t k = graph.size();
  const std::size_t d2 = layer.out_dim();
  cache.aggregated = Matrix(k, d2);
  cache.output = Matrix(k, d2);
  for (std::size_t i = 0; i < k; ++i) {
    auto agg = cache.aggregated.row(i);
    for (const auto& [j, alpha] : cache.attention[i]) {
      auto yj = cache.projected.row(j);
      for (std::size_t c = 0; c < d2; ++c) agg[c] += alpha * yj[c];
    }
    auto out = cache.output.row(i);
    for (std::size_t c = 0; c < d2; ++c) out[c] = activate(activation, agg[c]);
  }
  return cache;
}

}  // namespace detail

// alpha_ij = softmax over j in N_i of LeakyReLU(a^T [W z_i || W z_j]).
inline AttentionMatrix attention_coefficients(const EmbeddingMatrix& features,
                                              const SpeakerGraph& graph,
                                              const GatLayerParams& layer) {
  detail::check_layer_input(features.values(), graph, layer);
  return detail::attention_from_projection(matmul(features.values(), layer.weight), graph,
                                           layer, nullptr);
}

// z_i' = act(sum_{j in N_i} alpha_ij W z_j).
inline EmbeddingMatrix gat_layer_forward(const EmbeddingMatrix& features,
                                         const SpeakerGraph& graph, const GatLayerParams& layer,
                                         Activation activation) {
  return EmbeddingMatrix(
      detail::gat_layer_forward_cached(features.values(), graph, layer, activation).output);
}

// Runs every attention layer of the model.
inline EmbeddingMatrix encode(const GatModel& model, const SpeakerGraph& graph,
                              const EmbeddingMatrix& features) {
  Matrix z = features.values();
  for (std::size_t l = 0; l < model.gat_layers.size(); ++l) {
    z = detail::gat_layer_forward_cached(z, graph, model.gat_layers[l], model.gat_activation)
            .output;
    if (!z.all_finite())
      throw NumericError("non-finite output from attention layer " + std::to_string(l));
  }
  return EmbeddingMatrix(std::move(z));
}

namespace detail {

// Head activations for a block of pair features, layer by layer.
struct HeadBlock {
  std::vector<Matrix> inputs;  // inputs[l] feeds dense layer l
  std::vector<Matrix> pre;     // pre-activation of layer l
  Matrix output;               // n x 1
};

inline HeadBlock head_forward(const ScoringHeadParams& head, Matrix features) {
  HeadBlock block;
  Matrix x = std::move(features);
  for (const auto& layer : head.layers) {
    Matrix a = matmul(x, layer.weight);
    for (std::size_t r = 0; r < a.rows(); ++r) {
      auto row = a.row(r);
      for (std::size_t c = 0; c < a.cols(); ++c) row[c] += layer.bias[c];
    }
    Matrix y(a.rows(), a.cols());
    for (std::size_t n = 0; n < a.size(); ++n)
      y.data()[n] = activate(layer.activation, a.data()[n]);
    block.inputs.push_back(std::move(x));
    block.pre.push_back(std::move(a));
    x = std::move(y);
  }
  block.output = std::move(x);
  return block;
}

// Pair features z_i * z_j for all j > i.
inline Matrix pair_block(const Matrix& z, std::size_t i) {
  const std::size_t k = z.rows();
  const std::size_t d = z.cols();
  Matrix out(k - i - 1, d);
  auto zi = z.row(i);
  for (std::size_t j = i + 1; j < k; ++j) {
    auto zj = z.row(j);
    auto row = out.row(j - i - 1);
    for (std::size_t c = 0; c < d; ++c) row[c] = zi[c] * zj[c];
  }
  return out;
}

inline void check_head(const Matrix& z, const ScoringHeadParams& head) {
  if (head.layers.empty()) throw ConfigError("scoring head has no layers");
  if (z.cols() != head.in_dim())
    throw DimensionError(dims_message("scoring head input dimension", head.in_dim(), z.cols()));
  if (head.layers.back().weight.cols() != 1)
    throw DimensionError(dims_message("scoring head output dimension", 1,
                                      head.layers.back().weight.cols()));
}

inline Matrix score_pairs_raw(const Matrix& z, const ScoringHeadParams& head) {
  check_head(z, head);
  const std::size_t k = z.rows();
  Matrix out(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    out(i, i) = 1.0;
    if (i + 1 == k) break;
    HeadBlock block = head_forward(head, pair_block(z, i));
    for (std::size_t j = i + 1; j < k; ++j) {
      const double s = block.output(j - i - 1, 0);
      out(i, j) = s;
      out(j, i) = s;
    }
  }
  return out;
}

}  // namespace detail

// Reconstructed affinity: every unordered pair scored from z_i * z_j.
inline AffinityMatrix score_pairs(const EmbeddingMatrix& refined, const SpeakerGraph& graph,
                                  const ScoringHeadParams& head) {
  if (refined.rows() != graph.size())
    throw DimensionError(dims_message("graph node count vs refined rows", refined.rows(),
                                      graph.size()));
  Matrix scores = detail::score_pairs_raw(refined.values(), head);
  if (!scores.all_finite()) throw NumericError("non-finite output from scoring head");
  return AffinityMatrix(std::move(scores));
}

// (1 - epsilon) * reconstructed + epsilon * initial.
inline AffinityMatrix fuse_affinity(const AffinityMatrix& reconstructed,
                                    const AffinityMatrix& initial, double epsilon) {
  if (reconstructed.size() != initial.size())
    throw DimensionError(dims_message("fusion matrix size", reconstructed.size(),
                                      initial.size()));
  if (!(epsilon >= 0.0 && epsilon <= 1.0))
    throw ConfigError("epsilon must lie in [0,1], got " + std::to_string(epsilon));
  const std::size_t k = initial.size();
  Matrix out(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    out(i, i) = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      const double v = std::clamp((1.0 - epsilon) * reconstructed(i, j) + epsilon * initial(i, j),
                                  0.0, 1.0);
      out(i, j) = out(j, i) = v;
    }
  }
  return AffinityMatrix(std::move(out));
}

inline constexpr double kProbabilityFloor = 1e-7;

// Mean BCE over unordered off-diagonal pairs; probabilities clamped to
// [1e-7, 1 - 1e-7].
inline double bce_loss(const AffinityMatrix& fused, const AffinityMatrix& target) {
  if (fused.size() != target.size())
    throw DimensionError(dims_message("loss matrix size", target.size(), fused.size()));
  const std::size_t k = fused.size();
  if (k < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const double t = target(i, j);
      if (t != 0.0 && t != 1.0) throw DataError("loss target must be binary");
      const double p = std::clamp(fused(i, j), kProbabilityFloor, 1.0 - kProbabilityFloor);
      total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
    }
  return total / static_cast<double>(k * (k - 1) / 2);
}

// Gradients laid out like GatModel parameters.
struct GatGradients {
  std::vector<Matrix> gat_weight;
  std::vector<std::vector<double>> gat_attention;
  std::vector<Matrix> head_weight;
  std::vector<std::vector<double>> head_bias;

  static GatGradients zeros_like(const GatModel& model) {
    GatGradients g;
    for (const auto& l : model.gat_layers) {
      g.gat_weight.emplace_back(l.weight.rows(), l.weight.cols());
      g.gat_attention.emplace_back(l.attention.size(), 0.0);
    }
    for (const auto& l : model.scoring_head.layers) {
      g.head_weight.emplace_back(l.weight.rows(), l.weight.cols());
      g.head_bias.emplace_back(l.bias.size(), 0.0);
    }
    return g;
  }

  // Same order as parameter_blocks(GatModel&).
  std::vector<std::span<double>> blocks() {
    std::vector<std::span<double>> out;
    for (std::size_t l = 0; l < gat_weight.size(); ++l) {
      out.emplace_back(gat_weight[l].data());
      out.emplace_back(gat_attention[l]);
    }
    for (std::size_t l = 0; l < head_weight.size(); ++l) {
      out.emplace_back(head_weight[l].data());
      out.emplace_back(head_bias[l]);
    }
    return out;
  }
};

struct LossAndGradients {
  double loss = 0.0;
  GatGradients gradients;
};

namespace detail {

inline void require_finite(const Matrix& m, const std::string& where) {
  if (!m.all_finite()) throw NumericError("non-finite values in " + where);
}

// Backpropagates d loss / d output of one attention layer; returns d loss / d input.
inline Matrix gat_layer_backward(const GatLayerCache& cache, const SpeakerGraph& graph,
                                 const GatLayerParams& layer, Activation activation,
                                 const Matrix& grad_output, Matrix& grad_weight,
                                 std::vector<double>& grad_attention) {
  const std::size_t k = graph.size();
  const std::size_t d2 = layer.out_dim();
  std::span<const double> a_src(layer.attention.data(), d2);
  std::span<const double> a_dst(layer.attention.data() + d2, d2);

  Matrix grad_projected(k, d2);
  std::vector<double> grad_src(k, 0.0), grad_dst(k, 0.0);
  std::vector<double> grad_agg(d2);
  for (std::size_t i = 0; i < k; ++i) {
    auto agg = cache.aggregated.row(i);
    auto out = cache.output.row(i);
    auto gout = grad_output.row(i);
    for (std::size_t c = 0; c < d2; ++c)
      grad_agg[c] = gout[c] * activate_grad(activation, agg[c], out[c]);

    const auto& row = cache.attention[i];
    std::vector<double> grad_alpha(row.size());
    double weighted = 0.0;
    for (std::size_t n = 0; n < row.size(); ++n) {
      const std::size_t j = row[n].node;
      auto yj = cache.projected.row(j);
      auto gyj = grad_projected.row(j);
      double ga = 0.0;
      for (std::size_t c = 0; c < d2; ++c) {
        gyj[c] += row[n].alpha * grad_agg[c];
        ga += grad_agg[c] * yj[c];
      }
      grad_alpha[n] = ga;
      weighted += row[n].alpha * ga;
    }
    for (std::size_t n = 0; n < row.size(); ++n) {
      const double grad_e = row[n].alpha * (grad_alpha[n] - weighted);
      const double s = cache.logits[i][n];
      const double grad_s = grad_e * (s > 0.0 ? 1.0 : layer.leaky_slope);
      grad_src[i] += grad_s;
      grad_dst[row[n].node] += grad_s;
    }
  }
  // s_ij = a_src . y_i + a_dst . y_j
  for (std::size_t i = 0; i < k; ++i) {
    auto yi = cache.projected.row(i);
    auto gyi = grad_projected.row(i);
    for (std::size_t c = 0; c < d2; ++c) {
      grad_attention[c] += grad_src[i] * yi[c];
      grad_attention[d2 + c] += grad_dst[i] * yi[c];
      gyi[c] += grad_src[i] * a_src[c] + grad_dst[i] * a_dst[c];
    }
  }
  Matrix gw = matmul_tn(cache.input, grad_projected);
  for (std::size_t n = 0; n < gw.size(); ++n) grad_weight.data()[n] += gw.data()[n];
  return matmul_nt(grad_projected, layer.weight);
}

}  // namespace detail

// Loss and exact gradients of bce(fuse(score(encode(H))), target).
inline LossAndGradients loss_and_gradients(const GatModel& model, const SpeakerGraph& graph,
                                           const EmbeddingMatrix& features,
                                           const AffinityMatrix& initial,
                                           const AffinityMatrix& target) {
  const std::size_t k = graph.size();
  if (features.rows() != k)
    throw DimensionError(dims_message("feature rows vs graph nodes", k, features.rows()));
  if (initial.size() != k || target.size() != k)
    throw DimensionError(dims_message("affinity size vs graph nodes", k,
                                      initial.size() != k ? initial.size() : target.size()));
  const double eps = model.epsilon;

  std::vector<detail::GatLayerCache> caches;
  Matrix z = features.values();
  for (std::size_t l = 0; l < model.gat_layers.size(); ++l) {
    caches.push_back(
        detail::gat_layer_forward_cached(z, graph, model.gat_layers[l], model.gat_activation));
    z = caches.back().output;
    detail::require_finite(z, "attention layer " + std::to_string(l) + " forward");
  }
  detail::check_head(z, model.scoring_head);

  LossAndGradients result;
  result.gradients = GatGradients::zeros_like(model);
  auto& grads = result.gradients;
  if (k < 2) return result;

  const double pairs = static_cast<double>(k * (k - 1) / 2);
  const auto& head = model.scoring_head;
  const std::size_t head_layers = head.layers.size();
  Matrix grad_z(k, z.cols());
  double total = 0.0;

  for (std::size_t i = 0; i + 1 < k; ++i) {
    detail::HeadBlock block = detail::head_forward(head, detail::pair_block(z, i));
    const std::size_t n = k - i - 1;
    Matrix grad(n, 1);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t j = i + 1 + r;
      const double t = target(i, j);
      if (t != 0.0 && t != 1.0) throw DataError("loss target must be binary");
      const double fused = (1.0 - eps) * block.output(r, 0) + eps * initial(i, j);
      const double p = std::clamp(fused, kProbabilityFloor, 1.0 - kProbabilityFloor);
      total -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
      const bool inside = fused > kProbabilityFloor && fused < 1.0 - kProbabilityFloor;
      const double dp = inside ? (-t / p + (1.0 - t) / (1.0 - p)) / pairs : 0.0;
      grad(r, 0) = (1.0 - eps) * dp;
    }
    for (std::size_t l = head_layers; l-- > 0;) {
      const auto& layer = head.layers[l];
      const Matrix& pre = block.pre[l];
      const Matrix& post = (l + 1 < head_layers) ? block.inputs[l + 1] : block.output;
      for (std::size_t e = 0; e < grad.size(); ++e)
        grad.data()[e] *= activate_grad(layer.activation, pre.data()[e], post.data()[e]);
      Matrix gw = matmul_tn(block.inputs[l], grad);
      for (std::size_t e = 0; e < gw.size(); ++e) grads.head_weight[l].data()[e] += gw.data()[e];
      for (std::size_t r = 0; r < grad.rows(); ++r)
        for (std::size_t c = 0; c < grad.cols(); ++c) grads.head_bias[l][c] += grad(r, c);
      grad = matmul_nt(grad, layer.weight);
    }
    // pair feature x_j = z_i * z_j
    auto zi = z.row(i);
    auto gzi = grad_z.row(i);
    for (std::size_t r = 0; r < n; ++r) {
      const std::size_t j = i + 1 + r;
      auto zj = z.row(j);
      auto gzj = grad_z.row(j);
      auto gx = grad.row(r);
      for (std::size_t c = 0; c < z.cols(); ++c) {
        gzi[c] += gx[c] * zj[c];
        gzj[c] += gx[c] * zi[c];
      }
    }
  }
  result.loss = total / pairs;
  if (!std::isfinite(result.loss)) throw NumericError("non-finite loss");
  detail::require_finite(grad_z, "scoring head backward");

  for (std::size_t l = model.gat_layers.size(); l-- > 0;) {
    grad_z = detail::gat_layer_backward(caches[l], graph, model.gat_layers[l],
                                        model.gat_activation, grad_z, grads.gat_weight[l],
                                        grads.gat_attention[l]);
    detail::require_finite(grad_z, "attention layer " + std::to_string(l) + " backward");
  }
  return result;
}

inline GatGradients backward(const GatModel& model, const SpeakerGraph& graph,
                             const EmbeddingMatrix& features, const AffinityMatrix& initial,
                             const AffinityMatrix& target) {
  return loss_and_gradients(model, graph, features, initial, target).gradients;
}

// Full inference: reconstructed affinity from the refined embeddings.
inline AffinityMatrix reconstruct_affinity(const GatModel& model, const SpeakerGraph& graph,
                                           const EmbeddingMatrix& features) {
  return score_pairs(encode(model, graph, features), graph, model.scoring_head);
}

inline double model_loss(const GatModel& model, const SpeakerGraph& graph,
                         const EmbeddingMatrix& features, const AffinityMatrix& initial,
                         const AffinityMatrix& target) {
  return bce_loss(fuse_affinity(reconstruct_affinity(model, graph, features), initial,
                                model.epsilon),
                  target);
}

struct TrainingExample {
  SpeakerGraph graph;
  EmbeddingMatrix features;
  AffinityMatrix initial;  // normalized affinity that feeds the fusion
  AffinityMatrix target;   // binary ground-truth adjacency
};

struct TrainConfig {
  double learning_rate = 1e-2;
  std::size_t epochs = 200;
};

struct TrainResult {
  GatModel model;
  std::vector<double> loss_trace;  // mean loss before each epoch's update
};

// Full-batch gradient descent on the mean loss over the dataset.
inline TrainResult train(GatModel model, const std::vector<TrainingExample>& dataset,
                         const TrainConfig& config) {
  if (dataset.empty()) throw DataError("training dataset is empty");
  if (!(config.learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
  TrainResult result;
  const double scale = 1.0 / static_cast<double>(dataset.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    GatGradients sum = GatGradients::zeros_like(model);
    double loss = 0.0;
    for (const auto& ex : dataset) {
      LossAndGradients lg;
      try {
        lg = loss_and_gradients(model, ex.graph, ex.features, ex.initial, ex.target);
      } catch (const NumericError& e) {
        throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " +
                           e.what());
      }
      loss += lg.loss;
      auto dst = sum.blocks();
      auto src = lg.gradients.blocks();
      for (std::size_t b = 0; b < dst.size(); ++b)
        for (std::size_t e = 0; e < dst[b].size(); ++e) dst[b][e] += src[b][e];
    }
    loss *= scale;
    if (!std::isfinite(loss))
      throw NumericError("training diverged at epoch " + std::to_string(epoch));
    result.loss_trace.push_back(loss);
    auto params = parameter_blocks(model);
    auto grads = sum.blocks();
    for (std::size_t b = 0; b < params.size(); ++b)
      for (std::size_t e = 0; e < params[b].size(); ++e)
        params[b][e] -= config.learning_rate * scale * grads[b][e];
  }
  result.model = std::move(model);
  return result;
}

}  // namespace ocdgalp
