#include "lerp/model.hpp"

#include <cmath>
#include <random>

#include "lerp/errors.hpp"

namespace lerp {

using ad::Node;
using ad::Tape;
using ad::Tensor;

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Lerp: return "lerp";
    case Variant::LerpMinus: return "lerp-minus";
    case Variant::Ts: return "ts";
  }
  return "lerp";
}

Variant variant_from_name(const std::string& name) {
  if (name == "lerp") return Variant::Lerp;
  if (name == "lerp-minus") return Variant::LerpMinus;
  if (name == "ts") return Variant::Ts;
  throw ConfigError("unknown variant '" + name + "' (expected lerp, lerp-minus or ts)");
}

void ModelConfig::validate() const {
  if (d < 1) throw ConfigError("model: D must be >= 1");
  if (f < 1) throw ConfigError("model: F must be >= 1");
  if (k1 % 2 == 0) throw ConfigError("model: k1 must be odd, got " + std::to_string(k1));
  if (k2 < 1) throw ConfigError("model: k2 must be >= 1");
  if (n_y < 1) throw ConfigError("model: N_Y must be >= 1");
  if (h < 1) throw ConfigError("model: H must be >= 1");
}

namespace {

Tensor gaussian(std::vector<std::size_t> shape, std::size_t fan_in, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  for (std::size_t i = 0; i < t.numel(); ++i) t.at(i) = dist(rng);
  return t;
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ModelParams p;
  p.w1 = gaussian({config.f, config.d}, config.d, rng);
  p.b1 = Tensor({config.f});
  // Conv kernels start near identity (center tap 1 plus noise) so the
  // score chain passes raw similarities through from the first step and
  // the attention pathway gets gradient before the kernels specialize.
  if (config.variant == Variant::Lerp) {
    p.conv_event_k = gaussian({config.k1}, config.k1, rng);
    for (std::size_t t = 0; t < config.k1; ++t) p.conv_event_k.at(t) *= 0.1;
    p.conv_event_k.at((config.k1 - 1) / 2) += 1.0;
    p.conv_event_b = Tensor({1});
  }
  if (config.variant != Variant::Ts) {
    p.conv_label_k = gaussian({config.n_y, config.n_y, config.k1}, config.n_y * config.k1, rng);
    for (std::size_t i = 0; i < p.conv_label_k.numel(); ++i) p.conv_label_k.at(i) *= 0.1;
    for (std::size_t o = 0; o < config.n_y; ++o)
      p.conv_label_k.at(o, o, (config.k1 - 1) / 2) += 1.0;
    p.conv_label_b = Tensor({config.n_y});
  }
  p.w2 = gaussian({config.h, 2 * config.d}, 2 * config.d, rng);
  p.b2 = Tensor({config.h});
  p.w1f = gaussian({config.f, config.h}, config.h, rng);
  p.b1f = Tensor({config.f});
  p.w3 = gaussian({config.n_y, config.f}, config.f, rng);
  p.b3 = Tensor({config.n_y});
  return p;
}

void ModelParams::for_each(const ModelConfig& config,
                           const std::function<void(const std::string&, Tensor&)>& fn) {
  fn("w1", w1);
  fn("b1", b1);
  if (config.variant == Variant::Lerp) {
    fn("conv_event_k", conv_event_k);
    fn("conv_event_b", conv_event_b);
  }
  if (config.variant != Variant::Ts) {
    fn("conv_label_k", conv_label_k);
    fn("conv_label_b", conv_label_b);
  }
  fn("w2", w2);
  fn("b2", b2);
  fn("w1f", w1f);
  fn("b1f", b1f);
  fn("w3", w3);
  fn("b3", b3);
}

void ModelParams::for_each(const ModelConfig& config,
                           const std::function<void(const std::string&, const Tensor&)>& fn) const {
  const_cast<ModelParams*>(this)->for_each(
      config, [&fn](const std::string& name, Tensor& t) { fn(name, t); });
}

ParamLeaves make_leaves(Tape& tape, const ModelConfig& config, ModelParams& params,
                        const EmbeddingTable& table) {
  ParamLeaves leaves;
  leaves.table = tape.leaf(table.weights);
  params.for_each(config, [&](const std::string&, Tensor& t) {
    leaves.params.push_back(tape.leaf(t));
  });
  return leaves;
}

namespace {

// Leaf order must match ModelParams::for_each.
struct LeafView {
  Node* w1;
  Node* b1;
  Node* conv_event_k = nullptr;
  Node* conv_event_b = nullptr;
  Node* conv_label_k = nullptr;
  Node* conv_label_b = nullptr;
  Node* w2;
  Node* b2;
  Node* w1f;
  Node* b1f;
  Node* w3;
  Node* b3;
};

LeafView view(const ModelConfig& config, const ParamLeaves& leaves) {
  LeafView v;
  std::size_t i = 0;
  v.w1 = leaves.params[i++];
  v.b1 = leaves.params[i++];
  if (config.variant == Variant::Lerp) {
    v.conv_event_k = leaves.params[i++];
    v.conv_event_b = leaves.params[i++];
  }
  if (config.variant != Variant::Ts) {
    v.conv_label_k = leaves.params[i++];
    v.conv_label_b = leaves.params[i++];
  }
  v.w2 = leaves.params[i++];
  v.b2 = leaves.params[i++];
  v.w1f = leaves.params[i++];
  v.b1f = leaves.params[i++];
  v.w3 = leaves.params[i++];
  v.b3 = leaves.params[i++];
  return v;
}

Node* project(Tape& tape, Node* e, Node* w1, Node* b1) {
  return ad::add_col_bias(tape, ad::matmul(tape, w1, e), b1);
}

}  // namespace

Node* scaled_dot_similarity(Tape& tape, Node* em, Node* ex, Node* w1, Node* b1, std::size_t f) {
  Node* pm = project(tape, em, w1, b1);  // [F × N_M]
  Node* px = project(tape, ex, w1, b1);  // [F × N_X]
  Node* g = ad::matmul(tape, ad::transpose(tape, pm), px);
  return ad::scale(tape, g, 1.0 / std::sqrt(static_cast<double>(f)));
}

Node* attention_score(Tape& tape, Node* g, Node* kernel, Node* bias, std::size_t k2,
                      const std::vector<std::uint8_t>& keep) {
  const std::size_t n_m = g->value.dim(0);
  const std::size_t n_x = g->value.dim(1);
  if (n_x < 1) throw DataError("attention_score: similarity matrix has no entity columns");
  if (k2 > n_m) {
    throw ConfigError("attention_score: k2 = " + std::to_string(k2) + " exceeds N_M = " +
                      std::to_string(n_m));
  }
  Node* channels = ad::transpose(tape, g);  // [N_X × N_M]
  Node* conv = kernel->value.rank() == 3 ? ad::conv1d(tape, channels, kernel, bias)
                                         : ad::conv1d_depthwise_shared(tape, channels, kernel, bias);
  Node* activated = ad::relu(tape, conv);
  // Padding words must look exactly like the conv's zero padding to the
  // pooling below, otherwise appending padding would shift the scores.
  Node* masked = ad::mask_cols(tape, activated, keep);
  Node* channel_max = ad::maxpool_axis(tape, masked, /*axis=*/0, /*window=*/n_x, /*stride=*/n_x);
  Node* smoothed =
      ad::maxpool_axis(tape, channel_max, /*axis=*/1, k2, /*stride=*/1, /*same_pad=*/true);
  return ad::reshape(tape, smoothed, {n_m});
}

WeightedPool weighted_pool(Tape& tape, Node* em, Node* u,
                           const std::vector<std::uint8_t>& keep) {
  Node* alpha = ad::masked_softmax(tape, u, keep);
  Node* z = ad::matvec(tape, em, alpha);
  return {alpha, z};
}

Node* fusion_head(Tape& tape, Node* z_e, Node* z_y, const FusionLeaves& leaves) {
  Node* joined = ad::concat(tape, z_e, z_y);
  Node* hidden = ad::add(tape, ad::matvec(tape, leaves.w2, joined), leaves.b2);
  Node* squeezed = ad::add(tape, ad::matvec(tape, leaves.w1f, hidden), leaves.b1f);
  Node* logits = ad::add(tape, ad::matvec(tape, leaves.w3, squeezed), leaves.b3);
  return ad::sigmoid(tape, logits);
}

ForwardNodes build_forward(Tape& tape, const ModelConfig& config, const ParamLeaves& leaves,
                           const EncodedRecord& record,
                           const std::vector<std::vector<int>>& catalog_entities) {
  if (catalog_entities.size() != config.n_y) {
    throw ConfigError("forward: catalog has " + std::to_string(catalog_entities.size()) +
                      " labels, config expects " + std::to_string(config.n_y));
  }
  const LeafView v = view(config, leaves);
  const FusionLeaves fusion{v.w2, v.b2, v.w1f, v.b1f, v.w3, v.b3};
  Node* em = embed_note(tape, leaves.table, record.note_ids, record.id);
  const auto& keep = record.keep;

  if (config.variant == Variant::Ts) {
    // Self-attention scoring: scaled-dot of the projected note against
    // itself, averaged over real rows.
    Node* g = scaled_dot_similarity(tape, em, em, v.w1, v.b1, config.f);
    Node* g_masked = ad::mask_rows(tape, g, keep);
    std::size_t n_real = 0;
    for (auto k : keep) n_real += k;
    if (n_real == 0) throw DataError("forward: record '" + record.id + "' is all padding");
    Node* u = ad::scale(tape, ad::sum_axis(tape, g_masked, /*axis=*/0),
                        1.0 / static_cast<double>(n_real));
    auto pooled = weighted_pool(tape, em, u, keep);
    Node* y = fusion_head(tape, pooled.z, pooled.z, fusion);
    return {y, pooled.alpha, pooled.alpha};
  }

  Node* ey = embed_entities(tape, leaves.table, catalog_entities, record.id);
  Node* gy = ad::mask_rows(tape, scaled_dot_similarity(tape, em, ey, v.w1, v.b1, config.f), keep);
  Node* uy = attention_score(tape, gy, v.conv_label_k, v.conv_label_b, config.k2, keep);
  auto label_pool = weighted_pool(tape, em, uy, keep);

  if (config.variant == Variant::LerpMinus) {
    // No event branch: duplicate z^Y so the head keeps its shape.
    Node* y = fusion_head(tape, label_pool.z, label_pool.z, fusion);
    return {y, label_pool.alpha, label_pool.alpha};
  }

  if (record.events.empty()) {
    throw DataError("forward: record '" + record.id + "' has no events (required by LERP)");
  }
  Node* ee = embed_entities(tape, leaves.table, record.events, record.id);
  Node* ge = ad::mask_rows(tape, scaled_dot_similarity(tape, em, ee, v.w1, v.b1, config.f), keep);
  Node* ue = attention_score(tape, ge, v.conv_event_k, v.conv_event_b, config.k2, keep);
  auto event_pool = weighted_pool(tape, em, ue, keep);

  Node* y = fusion_head(tape, event_pool.z, label_pool.z, fusion);
  return {y, event_pool.alpha, label_pool.alpha};
}

ForwardOutput forward(const ModelConfig& config, ModelParams& params, const EmbeddingTable& table,
                      const EncodedRecord& record,
                      const std::vector<std::vector<int>>& catalog_entities) {
  Tape tape;
  ParamLeaves leaves = make_leaves(tape, config, params, table);
  ForwardNodes nodes = build_forward(tape, config, leaves, record, catalog_entities);
  ForwardOutput out;
  out.y_hat = nodes.y_hat->value.values();
  out.alpha_e = nodes.alpha_e->value.values();
  out.alpha_y = nodes.alpha_y->value.values();
  return out;
}

}  // namespace lerp
