#pragma once

#include <string>

#include "lerp/data.hpp"
#include "lerp/model.hpp"
#include "lerp/training.hpp"

namespace lerp {

// A trained model, self-contained for eval/explain: config, catalog, vocab,
// embedding table and parameters. Binary; save→load round-trips bit-exactly.
struct Checkpoint {
  ModelConfig config;
  std::size_t max_note_len = 256;
  LabelCatalog catalog;
  Vocab vocab;
  EmbeddingTable table;
  ModelParams params;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Full training snapshot (checkpoint + optimizer moments + RNG state);
// restoring reproduces the remaining trajectory bit-exactly.
void save_train_state(const std::string& path, const TrainState& state, const Vocab& vocab,
                      const LabelCatalog& catalog, std::size_t max_note_len);

struct RestoredTrainState {
  TrainState state;
  Vocab vocab;
  LabelCatalog catalog;
  std::size_t max_note_len = 256;
};

RestoredTrainState load_train_state(const std::string& path);

}  // namespace lerp
