#include "lerp/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lerp/errors.hpp"
#include "lerp/metrics.hpp"

namespace lerp {

using ad::Node;
using ad::Tape;
using ad::Tensor;

std::string optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::Sgd ? "sgd" : "adam";
}

OptimizerKind optimizer_from_name(const std::string& name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd or adam)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("training: learning rate must be > 0");
  if (batch_size < 1) throw ConfigError("training: batch size must be >= 1");
  if (patience < 1) throw ConfigError("training: patience must be >= 1");
  if (max_note_len < 1) throw ConfigError("training: max_note_len must be >= 1");
}

namespace {
constexpr double kLogEps = 1e-12;
constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
}  // namespace

Node* bce_loss(Tape& tape, Node* y_hat, const std::vector<int>& y) {
  const std::size_t n = y_hat->value.numel();
  if (y_hat->value.rank() != 1 || y.size() != n) {
    throw DimensionError("bce_loss: predictions " + y_hat->value.shape_str() + " vs " +
                         std::to_string(y.size()) + " targets");
  }
  double loss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double p = y_hat->value.at(j);
    loss -= y[j] ? std::log(std::max(p, kLogEps)) : std::log(std::max(1.0 - p, kLogEps));
  }
  loss /= static_cast<double>(n);
  return tape.emplace(Tensor::scalar(loss), {y_hat}, [y_hat, y, n](Node& self) {
    const double g = self.grad.at(0) / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
      const double p = y_hat->value.at(j);
      if (y[j]) {
        if (p > kLogEps) y_hat->grad.at(j) -= g / p;
      } else {
        if (1.0 - p > kLogEps) y_hat->grad.at(j) += g / (1.0 - p);
      }
    }
  });
}

std::vector<Tensor*> TrainState::parameter_tensors() {
  std::vector<Tensor*> out;
  if (table.trainable) out.push_back(&table.weights);
  params.for_each(model_config, [&out](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

TrainState TrainState::init(const ModelConfig& config, const TrainConfig& train,
                            const Vocab& vocab, std::optional<EmbeddingTable> pretrained) {
  config.validate();
  train.validate();
  TrainState state;
  state.model_config = config;
  state.params = ModelParams::init(config, train.seed);
  state.table = pretrained ? std::move(*pretrained)
                           : EmbeddingTable::random(vocab.size(), config.d, train.seed + 1);
  if (state.table.dim() != config.d) {
    throw ConfigError("training: embedding table D = " + std::to_string(state.table.dim()) +
                      " but model D = " + std::to_string(config.d));
  }
  state.opt.kind = train.optimizer;
  state.rng.seed(train.seed + 2);
  for (Tensor* t : state.parameter_tensors()) {
    state.opt.m.emplace_back(t->shape());
    state.opt.v.emplace_back(t->shape());
  }
  return state;
}

namespace {

// One optimizer step. Gradients arrive aligned with tensors.
void apply_update(TrainState& state, const TrainConfig& config,
                  const std::vector<Tensor*>& tensors, const std::vector<const Tensor*>& grads) {
  if (state.opt.kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      Tensor& p = *tensors[i];
      const Tensor& g = *grads[i];
      for (std::size_t k = 0; k < p.numel(); ++k) p.at(k) -= config.learning_rate * g.at(k);
    }
    return;
  }
  ++state.opt.step;
  const double t = static_cast<double>(state.opt.step);
  const double corr1 = 1.0 - std::pow(kAdamBeta1, t);
  const double corr2 = 1.0 - std::pow(kAdamBeta2, t);
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    Tensor& p = *tensors[i];
    const Tensor& g = *grads[i];
    Tensor& m = state.opt.m[i];
    Tensor& v = state.opt.v[i];
    for (std::size_t k = 0; k < p.numel(); ++k) {
      const double gk = g.at(k);
      m.at(k) = kAdamBeta1 * m.at(k) + (1.0 - kAdamBeta1) * gk;
      v.at(k) = kAdamBeta2 * v.at(k) + (1.0 - kAdamBeta2) * gk * gk;
      const double mhat = m.at(k) / corr1;
      const double vhat = v.at(k) / corr2;
      p.at(k) -= config.learning_rate * mhat / (std::sqrt(vhat) + kAdamEps);
    }
  }
}

double run_batch(TrainState& state, const Batch& batch,
                 const std::vector<std::vector<int>>& catalog_entities,
                 const TrainConfig& config, bool update, std::size_t batch_index,
                 std::size_t epoch) {
  Tape tape;
  ParamLeaves leaves = make_leaves(tape, state.model_config, state.params, state.table);
  std::vector<Node*> losses;
  losses.reserve(batch.records.size());
  for (const auto& record : batch.records) {
    ForwardNodes nodes = build_forward(tape, state.model_config, leaves, record, catalog_entities);
    losses.push_back(bce_loss(tape, nodes.y_hat, record.labels));
  }
  Node* batch_loss = ad::mean_scalars(tape, losses);
  const double loss_value = batch_loss->value.at(0);
  if (!std::isfinite(loss_value)) {
    throw ContractError("training: non-finite loss in batch " + std::to_string(batch_index) +
                        " of epoch " + std::to_string(epoch));
  }
  if (update) {
    tape.backward(batch_loss);
    std::vector<Tensor*> tensors = state.parameter_tensors();
    std::vector<const Tensor*> grads;
    if (state.table.trainable) grads.push_back(&leaves.table->grad);
    for (Node* leaf : leaves.params) grads.push_back(&leaf->grad);
    apply_update(state, config, tensors, grads);
  }
  return loss_value;
}

double run_pass(TrainState& state, const std::vector<EhrRecord>& records,
                const std::vector<std::size_t>& order, const Vocab& vocab,
                const LabelCatalog& catalog, const TrainConfig& config, bool update,
                std::size_t epoch) {
  const auto catalog_entities = encode_catalog(vocab, catalog);
  double total = 0.0;
  std::size_t batch_index = 0;
  for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++batch_index) {
    const std::size_t count = std::min(config.batch_size, order.size() - begin);
    Batch batch = make_batch_indexed(vocab, records, order, begin, count, config.max_note_len);
    const double loss = run_batch(state, batch, catalog_entities, config, update, batch_index,
                                  epoch);
    total += loss * static_cast<double>(count);
  }
  return total / static_cast<double>(order.size());
}

}  // namespace

double train_epoch(TrainState& state, const std::vector<EhrRecord>& records, const Vocab& vocab,
                   const LabelCatalog& catalog, const TrainConfig& config) {
  if (records.empty()) throw DataError("train_epoch: no training records");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), state.rng);
  ++state.epoch;
  return run_pass(state, records, order, vocab, catalog, config, /*update=*/true, state.epoch);
}

double evaluate_loss(TrainState& state, const std::vector<EhrRecord>& records, const Vocab& vocab,
                     const LabelCatalog& catalog, const TrainConfig& config) {
  if (records.empty()) throw DataError("evaluate_loss: no records");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  return run_pass(state, records, order, vocab, catalog, config, /*update=*/false, state.epoch);
}

std::vector<std::vector<double>> predict(const ModelConfig& config, ModelParams& params,
                                         const EmbeddingTable& table, const Vocab& vocab,
                                         const std::vector<EhrRecord>& records,
                                         const LabelCatalog& catalog, std::size_t max_note_len) {
  const auto catalog_entities = encode_catalog(vocab, catalog);
  std::vector<std::vector<double>> scores;
  scores.reserve(records.size());
  for (const auto& record : records) {
    const std::size_t note_len = std::min(record.note.size(), max_note_len);
    EncodedRecord enc = encode_record(vocab, record, note_len, max_note_len);
    scores.push_back(forward(config, params, table, enc, catalog_entities).y_hat);
  }
  return scores;
}

FitResult fit(const TrainConfig& train_config, const ModelConfig& model_config,
              const std::vector<EhrRecord>& train_records,
              const std::vector<EhrRecord>& val_records, const Vocab& vocab,
              const LabelCatalog& catalog, std::optional<EmbeddingTable> pretrained) {
  if (val_records.empty()) throw DataError("fit: validation set is empty");
  TrainState state = TrainState::init(model_config, train_config, vocab, std::move(pretrained));
  FitResult result;
  result.best_params = state.params;
  result.best_table = state.table;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    const double train_loss = train_epoch(state, train_records, vocab, catalog, train_config);
    const double val_loss = evaluate_loss(state, val_records, vocab, catalog, train_config);

    auto scores = predict(state.model_config, state.params, state.table, vocab, val_records,
                          catalog, train_config.max_note_len);
    PredictionSet pred;
    pred.scores = std::move(scores);
    for (const auto& r : val_records) pred.targets.push_back(r.labels);
    auto auc = report(pred).micro_roc_auc;

    result.log.push_back({epoch, train_loss, val_loss,
                          auc ? *auc : std::numeric_limits<double>::quiet_NaN()});

    if (!state.has_best || val_loss < state.best_val_loss) {
      state.best_val_loss = val_loss;
      state.has_best = true;
      result.best_params = state.params;
      result.best_table = state.table;
      result.best_epoch = epoch;
      result.best_val_loss = val_loss;
      stale = 0;
    } else {
      ++stale;
      if (stale >= train_config.patience) break;
    }
  }
  return result;
}

}  // namespace lerp
