#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lerp/data.hpp"
#include "lerp/model.hpp"

namespace lerp {

enum class OptimizerKind { Sgd, Adam };

std::string optimizer_name(OptimizerKind k);
OptimizerKind optimizer_from_name(const std::string& name);

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  std::size_t max_epochs = 100;
  std::size_t patience = 5;  // epochs without validation-loss improvement
  std::uint64_t seed = 42;
  OptimizerKind optimizer = OptimizerKind::Adam;
  std::size_t max_note_len = 256;

  void validate() const;
};

// Mean binary cross-entropy over the N_Y labels of one record.
// Logs are clamped at eps = 1e-12 so saturated sigmoids cannot produce -inf.
ad::Node* bce_loss(ad::Tape& tape, ad::Node* y_hat, const std::vector<int>& y);

// Adam moments (empty tensors for SGD), aligned with the parameter order.
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  std::vector<ad::Tensor> m;
  std::vector<ad::Tensor> v;
  std::uint64_t step = 0;
};

// Everything a training run mutates. A saved+restored TrainState continues
// on the exact same trajectory.
struct TrainState {
  ModelConfig model_config;
  ModelParams params;
  EmbeddingTable table;
  OptimizerState opt;
  std::size_t epoch = 0;
  double best_val_loss = 0.0;
  bool has_best = false;
  std::mt19937_64 rng;

  static TrainState init(const ModelConfig& config, const TrainConfig& train,
                         const Vocab& vocab, std::optional<EmbeddingTable> pretrained);

  // Parameter tensors in update order (table first when trainable).
  std::vector<ad::Tensor*> parameter_tensors();
};

// One pass over the training records: deterministic shuffle from the state
// RNG, one optimizer step per batch. Returns the mean per-record loss.
double train_epoch(TrainState& state, const std::vector<EhrRecord>& records, const Vocab& vocab,
                   const LabelCatalog& catalog, const TrainConfig& config);

// Mean per-record loss without updates.
double evaluate_loss(TrainState& state, const std::vector<EhrRecord>& records, const Vocab& vocab,
                     const LabelCatalog& catalog, const TrainConfig& config);

// Scores for every record, one row per record. Also used by eval/explain.
std::vector<std::vector<double>> predict(const ModelConfig& config, ModelParams& params,
                                         const EmbeddingTable& table, const Vocab& vocab,
                                         const std::vector<EhrRecord>& records,
                                         const LabelCatalog& catalog, std::size_t max_note_len);

struct EpochStats {
  std::size_t epoch;
  double train_loss;
  double val_loss;
  double val_micro_auc;  // NaN when undefined
};

struct FitResult {
  ModelParams best_params;
  EmbeddingTable best_table;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  std::vector<EpochStats> log;
};

// Full training loop with early stopping: returns the parameters from the
// epoch with the lowest validation loss, stopping after `patience` epochs
// without improvement or at max_epochs.
FitResult fit(const TrainConfig& train_config, const ModelConfig& model_config,
              const std::vector<EhrRecord>& train_records,
              const std::vector<EhrRecord>& val_records, const Vocab& vocab,
              const LabelCatalog& catalog, std::optional<EmbeddingTable> pretrained);

}  // namespace lerp
