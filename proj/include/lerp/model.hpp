#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "lerp/autodiff.hpp"
#include "lerp/data.hpp"
#include "lerp/embedding.hpp"

namespace lerp {

enum class Variant { Lerp, LerpMinus, Ts };

std::string variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
  Variant variant = Variant::Lerp;
  std::size_t d = 64;   // embedding size
  std::size_t f = 32;   // projected size
  std::size_t k1 = 3;   // conv kernel width along the word axis (odd)
  std::size_t k2 = 2;   // max-pool window along the word axis
  std::size_t n_y = 4;  // number of risk labels
  std::size_t h = 64;   // fusion hidden size

  void validate() const;
};

// All learnable weights of one model variant. The event branch uses one
// shared width-k1 kernel applied per channel, since the channel count N_E
// differs per record; the label branch has a fixed channel count N_Y and
// uses a dense kernel. Unused branches are left empty per variant, so
// every allocated parameter takes part in every forward pass.
struct ModelParams {
  ad::Tensor w1, b1;                  // shared projection, D→F
  ad::Tensor conv_event_k, conv_event_b;  // [k1], [1]       (LERP only)
  ad::Tensor conv_label_k, conv_label_b;  // [N_Y×N_Y×k1], [N_Y]  (LERP, LERP⁻)
  ad::Tensor w2, b2;                  // fusion 2D→H
  ad::Tensor w1f, b1f;                // fusion H→F
  ad::Tensor w3, b3;                  // fusion F→N_Y

  // Gaussian init, mean 0, std sqrt(2/fan_in) for weights; zero biases.
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  // Visits every tensor this variant owns, in a fixed order.
  void for_each(const ModelConfig& config,
                const std::function<void(const std::string&, ad::Tensor&)>& fn);
  void for_each(const ModelConfig& config,
                const std::function<void(const std::string&, const ad::Tensor&)>& fn) const;
};

struct ForwardOutput {
  std::vector<double> y_hat;    // N_Y probabilities, each in (0,1)
  std::vector<double> alpha_e;  // N_M, sums to 1 over real tokens, 0 on padding
  std::vector<double> alpha_y;  // same
};

// Tape leaves for one training/eval step. The embedding table is always a
// leaf; whether its gradient is applied is the optimizer's concern.
struct ParamLeaves {
  ad::Node* table = nullptr;
  std::vector<ad::Node*> params;  // aligned with ModelParams::for_each order
};

ParamLeaves make_leaves(ad::Tape& tape, const ModelConfig& config, ModelParams& params,
                        const EmbeddingTable& table);

// --- graph-building ops -----------------------------------------------------

// G = (f1(Em))ᵀ · f1(Ex) / sqrt(F), with the shared projection f1 = W1·x + b1.
ad::Node* scaled_dot_similarity(ad::Tape& tape, ad::Node* em, ad::Node* ex, ad::Node* w1,
                                ad::Node* b1, std::size_t f);

// Conv/ReLU/max-pool scoring of a similarity matrix G [N_M×N_X] down to one
// score per word, u [N_M]: transpose to channels×words, convolve along the
// word axis, ReLU, zero out padding words, reduce the channel axis by max,
// then smooth along the word axis with a width-k2 same-padded max.
// Kernel rank picks the conv: rank-3 dense (requires N_X channels), rank-1
// shared per-channel.
ad::Node* attention_score(ad::Tape& tape, ad::Node* g, ad::Node* kernel, ad::Node* bias,
                          std::size_t k2, const std::vector<std::uint8_t>& keep);

// alpha = masked softmax of u over real tokens; z = Σ_n alpha_n · Em[:,n].
struct WeightedPool {
  ad::Node* alpha;
  ad::Node* z;
};
WeightedPool weighted_pool(ad::Tape& tape, ad::Node* em, ad::Node* u,
                           const std::vector<std::uint8_t>& keep);

// y = Sigmoid(f3(f1f(f2(zE ⊕ zY)))) with three linear layers 2D→H→F→N_Y.
struct FusionLeaves {
  ad::Node* w2;
  ad::Node* b2;
  ad::Node* w1f;
  ad::Node* b1f;
  ad::Node* w3;
  ad::Node* b3;
};
ad::Node* fusion_head(ad::Tape& tape, ad::Node* z_e, ad::Node* z_y, const FusionLeaves& leaves);

// --- whole-graph forward ------------------------------------------------------

struct ForwardNodes {
  ad::Node* y_hat;
  ad::Node* alpha_e;
  ad::Node* alpha_y;
};

// Builds the forward graph for one record. catalog_entities are the encoded
// label names (identical for every record).
ForwardNodes build_forward(ad::Tape& tape, const ModelConfig& config, const ParamLeaves& leaves,
                           const EncodedRecord& record,
                           const std::vector<std::vector<int>>& catalog_entities);

// Convenience wrapper: runs one record on a private tape.
ForwardOutput forward(const ModelConfig& config, ModelParams& params, const EmbeddingTable& table,
                      const EncodedRecord& record,
                      const std::vector<std::vector<int>>& catalog_entities);

}  // namespace lerp
