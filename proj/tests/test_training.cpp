#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "lerp/data.hpp"
#include "lerp/errors.hpp"
#include "lerp/metrics.hpp"
#include "lerp/serialize.hpp"
#include "lerp/training.hpp"
#include "oracles.hpp"

using lerp::EhrRecord;
using lerp::LabelCatalog;
using lerp::ModelConfig;
using lerp::TrainConfig;
using lerp::TrainState;
using lerp::Variant;
using lerp::Vocab;
using lerp::ad::Node;
using lerp::ad::Tape;
using lerp::ad::Tensor;

namespace {

ModelConfig small_model(Variant variant = Variant::Lerp) {
  ModelConfig config;
  config.variant = variant;
  config.d = 8;
  config.f = 4;
  config.k1 = 3;
  config.k2 = 2;
  config.n_y = 2;
  config.h = 8;
  return config;
}

TrainConfig small_train(std::uint64_t seed = 7) {
  TrainConfig config;
  config.learning_rate = 1e-2;
  config.batch_size = 4;
  config.max_epochs = 5;
  config.patience = 5;
  config.seed = seed;
  config.max_note_len = 32;
  return config;
}

struct Fixture {
  LabelCatalog catalog = LabelCatalog::from_names({"risk alpha", "risk beta"});
  std::vector<EhrRecord> records;
  Vocab vocab;

  explicit Fixture(std::size_t n = 8) {
    std::mt19937_64 rng(3);
    for (std::size_t i = 0; i < n; ++i) {
      EhrRecord r;
      r.id = "r" + std::to_string(i);
      for (int w = 0; w < 5; ++w)
        r.note.push_back("word" + std::to_string(rng() % 12));
      r.events = {{"therapy", "one"}};
      r.labels = {int(rng() % 2), int(rng() % 2)};
      records.push_back(r);
    }
    lerp::build_vocab(vocab, records, catalog);
  }
};

bool params_equal(const ModelConfig& config, const lerp::ModelParams& a,
                  const lerp::ModelParams& b) {
  bool equal = true;
  a.for_each(config, [&](const std::string& name, const Tensor& ta) {
    b.for_each(config, [&](const std::string& other, const Tensor& tb) {
      if (name == other && !(ta == tb)) equal = false;
    });
  });
  return equal;
}

}  // namespace

TEST_CASE("bce_loss") {
  SUBCASE("half probabilities give ln 2") {
    Tape tape;
    Node* y_hat = tape.leaf(Tensor::from({2}, {0.5, 0.5}));
    Node* loss = lerp::bce_loss(tape, y_hat, {1, 0});
    CHECK(loss->value.at(0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  }

  SUBCASE("perfect predictions give ~0") {
    Tape tape;
    Node* y_hat = tape.leaf(Tensor::from({3}, {1.0 - 1e-13, 1e-13, 1.0 - 1e-13}));
    Node* loss = lerp::bce_loss(tape, y_hat, {1, 0, 1});
    CHECK(loss->value.at(0) == doctest::Approx(0.0).epsilon(1e-9));
  }

  SUBCASE("matches the loop oracle and the analytic gradient") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> prob(0.05, 0.95);
    for (int trial = 0; trial < 10; ++trial) {
      const std::size_t n = 4;
      Tensor p({n});
      std::vector<int> y(n);
      for (std::size_t j = 0; j < n; ++j) {
        p.at(j) = prob(rng);
        y[j] = rng() % 2;
      }
      Tape tape;
      Node* y_hat = tape.leaf(p);
      Node* loss = lerp::bce_loss(tape, y_hat, y);
      CHECK(loss->value.at(0) == doctest::Approx(oracle::bce(p.values(), y)).epsilon(1e-12));
      tape.backward(loss);
      for (std::size_t j = 0; j < n; ++j) {
        const double expect =
            (p.at(j) - y[j]) / (double(n) * p.at(j) * (1.0 - p.at(j)));
        CHECK(std::abs(y_hat->grad.at(j) - expect) < 1e-6);
      }
    }
  }

  SUBCASE("length mismatch is a dimension error") {
    Tape tape;
    Node* y_hat = tape.leaf(Tensor::from({2}, {0.5, 0.5}));
    CHECK_THROWS_AS(lerp::bce_loss(tape, y_hat, {1}), lerp::DimensionError);
  }
}

TEST_CASE("one SGD step moves each parameter by exactly -lr * grad") {
  Fixture fx;
  auto mc = small_model();
  auto tc = small_train();
  tc.optimizer = lerp::OptimizerKind::Sgd;
  tc.batch_size = fx.records.size();  // single batch per epoch
  TrainState state = TrainState::init(mc, tc, fx.vocab, std::nullopt);

  // capture params and compute the batch gradient on a copy
  TrainState probe = TrainState::init(mc, tc, fx.vocab, std::nullopt);
  const auto before = probe.params;
  const auto table_before = probe.table;

  // replicate the epoch's shuffle to line up the batch the optimizer sees
  std::vector<std::size_t> order(fx.records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto rng_copy = state.rng;
  std::shuffle(order.begin(), order.end(), rng_copy);
  auto batch = lerp::make_batch_indexed(fx.vocab, fx.records, order, 0, order.size(),
                                        tc.max_note_len);
  const auto catalog_entities = lerp::encode_catalog(fx.vocab, fx.catalog);

  Tape tape;
  auto leaves = lerp::make_leaves(tape, mc, probe.params, probe.table);
  std::vector<Node*> losses;
  for (const auto& rec : batch.records) {
    auto nodes = lerp::build_forward(tape, mc, leaves, rec, catalog_entities);
    losses.push_back(lerp::bce_loss(tape, nodes.y_hat, rec.labels));
  }
  tape.backward(lerp::ad::mean_scalars(tape, losses));

  lerp::train_epoch(state, fx.records, fx.vocab, fx.catalog, tc);

  std::size_t index = 0;
  before.for_each(mc, [&](const std::string& name, const Tensor& old) {
    CAPTURE(name);
    state.params.for_each(mc, [&](const std::string& other, const Tensor& updated) {
      if (other != name) return;
      for (std::size_t k = 0; k < old.numel(); ++k) {
        const double expect = old.at(k) - tc.learning_rate * leaves.params[index]->grad.at(k);
        CHECK(updated.at(k) == doctest::Approx(expect).epsilon(1e-12));
      }
    });
    ++index;
  });
  for (std::size_t k = 0; k < table_before.weights.numel(); ++k) {
    const double expect =
        table_before.weights.at(k) - tc.learning_rate * leaves.table->grad.at(k);
    CHECK(state.table.weights.at(k) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  Fixture fx;
  auto mc = small_model();
  auto tc = small_train();
  tc.optimizer = lerp::OptimizerKind::Sgd;
  TrainState state = TrainState::init(mc, tc, fx.vocab, std::nullopt);
  const auto before = state.params;
  const auto table_before = state.table.weights;
  const double eval_before = lerp::evaluate_loss(state, fx.records, fx.vocab, fx.catalog, tc);

  TrainConfig zero_lr = tc;
  zero_lr.learning_rate = 0.0;  // train_epoch mechanics only; validate() rejects this in fit
  const double epoch_loss = lerp::train_epoch(state, fx.records, fx.vocab, fx.catalog, zero_lr);

  CHECK(params_equal(mc, before, state.params));
  CHECK(state.table.weights == table_before);
  CHECK(epoch_loss == doctest::Approx(eval_before).epsilon(1e-12));
  CHECK_THROWS_AS(zero_lr.validate(), lerp::ConfigError);
}

TEST_CASE("batch loss equals the mean of per-record losses") {
  Fixture fx(6);
  auto mc = small_model();
  auto tc = small_train();
  TrainState state = TrainState::init(mc, tc, fx.vocab, std::nullopt);

  tc.batch_size = 6;
  const double batched = lerp::evaluate_loss(state, fx.records, fx.vocab, fx.catalog, tc);
  tc.batch_size = 1;
  const double one_by_one = lerp::evaluate_loss(state, fx.records, fx.vocab, fx.catalog, tc);
  CHECK(batched == doctest::Approx(one_by_one).epsilon(1e-10));

  // against direct per-record forwards
  const auto catalog_entities = lerp::encode_catalog(fx.vocab, fx.catalog);
  double total = 0.0;
  for (const auto& r : fx.records) {
    auto enc = lerp::encode_record(fx.vocab, r, std::min<std::size_t>(r.note.size(), 32), 32);
    auto out = lerp::forward(mc, state.params, state.table, enc, catalog_entities);
    Tape tape;
    total += lerp::bce_loss(tape, tape.leaf(Tensor::from({2}, {out.y_hat[0], out.y_hat[1]})),
                            r.labels)->value.at(0);
  }
  CHECK(one_by_one == doctest::Approx(total / 6.0).epsilon(1e-10));
}

TEST_CASE("two-record batch gradients match finite differences end to end") {
  Fixture fx(2);
  auto mc = small_model();
  auto tc = small_train();
  TrainState state = TrainState::init(mc, tc, fx.vocab, std::nullopt);
  const auto catalog_entities = lerp::encode_catalog(fx.vocab, fx.catalog);
  auto batch = lerp::make_batch(fx.vocab, fx.records, 0, 2, tc.max_note_len);

  auto eval = [&]() {
    Tape tape;
    auto leaves = lerp::make_leaves(tape, mc, state.params, state.table);
    std::vector<Node*> losses;
    for (const auto& rec : batch.records) {
      auto nodes = lerp::build_forward(tape, mc, leaves, rec, catalog_entities);
      losses.push_back(lerp::bce_loss(tape, nodes.y_hat, rec.labels));
    }
    return lerp::ad::mean_scalars(tape, losses)->value.at(0);
  };

  Tape tape;
  auto leaves = lerp::make_leaves(tape, mc, state.params, state.table);
  std::vector<Node*> losses;
  for (const auto& rec : batch.records) {
    auto nodes = lerp::build_forward(tape, mc, leaves, rec, catalog_entities);
    losses.push_back(lerp::bce_loss(tape, nodes.y_hat, rec.labels));
  }
  tape.backward(lerp::ad::mean_scalars(tape, losses));

  std::size_t index = 0;
  state.params.for_each(mc, [&](const std::string& name, Tensor& tensor) {
    CAPTURE(name);
    for (std::size_t k = 0; k < tensor.numel(); ++k) {
      const double fd = oracle::central_diff(eval, &tensor.values()[k]);
      CHECK(oracle::rel_err(leaves.params[index]->grad.at(k), fd) < 1e-3);
    }
    ++index;
  });
}

TEST_CASE("training is deterministic given the seed") {
  Fixture fx;
  auto mc = small_model();
  auto tc = small_train(99);
  tc.max_epochs = 3;

  auto run = [&]() {
    TrainState state = TrainState::init(mc, tc, fx.vocab, std::nullopt);
    for (int e = 0; e < 3; ++e) lerp::train_epoch(state, fx.records, fx.vocab, fx.catalog, tc);
    return state;
  };
  TrainState a = run();
  TrainState b = run();
  CHECK(params_equal(mc, a.params, b.params));
  CHECK(a.table.weights == b.table.weights);
}

TEST_CASE("a frozen table is byte-identical across an epoch") {
  Fixture fx;
  auto mc = small_model();
  auto tc = small_train();
  lerp::EmbeddingTable frozen = lerp::EmbeddingTable::random(fx.vocab.size(), mc.d, 5);
  frozen.trainable = false;
  TrainState state = TrainState::init(mc, tc, fx.vocab, frozen);
  lerp::train_epoch(state, fx.records, fx.vocab, fx.catalog, tc);
  CHECK(state.table.weights == frozen.weights);
  // while a trainable table moves
  TrainState moving = TrainState::init(mc, tc, fx.vocab, std::nullopt);
  const auto before = moving.table.weights;
  lerp::train_epoch(moving, fx.records, fx.vocab, fx.catalog, tc);
  CHECK(!(moving.table.weights == before));
}

TEST_CASE("overfitting a single record drives the loss below 0.01") {
  // desk-scale defaults
  ModelConfig mc;
  mc.variant = Variant::Lerp;
  mc.n_y = 4;
  LabelCatalog catalog = LabelCatalog::from_names(
      {"risk alpha", "risk beta", "risk gamma", "risk delta"});
  EhrRecord record;
  record.id = "solo";
  record.note = {"chest", "pain", "radiating", "left", "arm", "sweating"};
  record.events = {{"therapy", "nitroglycerin"}};
  record.labels = {1, 0, 1, 0};
  std::vector<EhrRecord> records{record};
  Vocab vocab;
  lerp::build_vocab(vocab, records, catalog);

  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.batch_size = 1;
  tc.seed = 17;
  TrainState state = TrainState::init(mc, tc, vocab, std::nullopt);
  double loss = 1.0;
  std::size_t epochs = 0;
  for (; epochs < 300 && loss >= 0.01; ++epochs)
    loss = lerp::train_epoch(state, records, vocab, catalog, tc);
  CAPTURE(epochs);
  CHECK(loss < 0.01);
}

TEST_CASE("fit") {
  SUBCASE("max_epochs = 0 returns the initialized parameters") {
    Fixture fx;
    auto mc = small_model();
    auto tc = small_train();
    tc.max_epochs = 0;
    auto result = lerp::fit(tc, mc, fx.records, fx.records, fx.vocab, fx.catalog, std::nullopt);
    TrainState reference = TrainState::init(mc, tc, fx.vocab, std::nullopt);
    CHECK(result.log.empty());
    CHECK(params_equal(mc, result.best_params, reference.params));
    CHECK(result.best_table.weights == reference.table.weights);
  }

  SUBCASE("patience 1 with rising validation loss stops at epoch 2 with epoch-1 params") {
    // One training record; validation is the same note with inverted labels,
    // so fitting the train record strictly hurts validation.
    LabelCatalog catalog = LabelCatalog::from_names({"risk alpha", "risk beta"});
    EhrRecord train_rec{"t", {"alpha", "beta", "gamma", "delta"}, {{"therapy", "x"}}, {1, 1}};
    EhrRecord val_rec = train_rec;
    val_rec.id = "v";
    val_rec.labels = {0, 0};
    Vocab vocab;
    lerp::build_vocab(vocab, {train_rec}, catalog);

    auto mc = small_model();
    auto tc = small_train();
    tc.learning_rate = 0.05;
    tc.patience = 1;
    tc.max_epochs = 50;
    auto result = lerp::fit(tc, mc, {train_rec}, {val_rec}, vocab, catalog, std::nullopt);
    REQUIRE(result.log.size() >= 2);
    CHECK(result.log[1].val_loss > result.log[0].val_loss);  // the premise holds
    CHECK(result.log.size() == 2);                           // stopped at epoch 2
    CHECK(result.best_epoch == 1);

    // returned params are the epoch-1 snapshot: one epoch of training reproduces them
    TrainState replay = TrainState::init(mc, tc, vocab, std::nullopt);
    lerp::train_epoch(replay, {train_rec}, vocab, catalog, tc);
    CHECK(params_equal(mc, result.best_params, replay.params));
  }

  SUBCASE("empty validation set is a data error") {
    Fixture fx;
    CHECK_THROWS_AS(lerp::fit(small_train(), small_model(), fx.records, {}, fx.vocab, fx.catalog,
                              std::nullopt),
                    lerp::DataError);
  }
}

TEST_CASE("planted signal is recoverable at small scale") {
  lerp::GeneratorConfig gen;
  gen.n_records = 160;
  gen.n_labels = 2;
  gen.vocab_size = 40;
  gen.signal_strength = 1.0;
  gen.seed = 5;
  gen.note_len_min = 6;
  gen.note_len_max = 12;
  const auto data = lerp::generate_synthetic(gen);
  auto [train_records, val_records] = lerp::split(data.records, 0.8, 1);
  Vocab vocab;
  lerp::build_vocab(vocab, data.records, data.catalog);

  ModelConfig mc = small_model();
  mc.d = 16;
  mc.f = 8;
  mc.h = 16;
  TrainConfig tc;
  tc.learning_rate = 3e-3;
  tc.batch_size = 16;
  tc.max_epochs = 40;
  tc.patience = 40;
  tc.seed = 23;
  tc.max_note_len = 16;
  auto result = lerp::fit(tc, mc, train_records, val_records, vocab, data.catalog, std::nullopt);

  auto scores = lerp::predict(mc, result.best_params, result.best_table, vocab, val_records,
                              data.catalog, tc.max_note_len);
  lerp::PredictionSet pred;
  pred.scores = std::move(scores);
  for (const auto& r : val_records) pred.targets.push_back(r.labels);
  const auto rep = lerp::report(pred);
  REQUIRE(rep.micro_roc_auc.has_value());
  CAPTURE(*rep.micro_roc_auc);
  CHECK(*rep.micro_roc_auc > 0.8);
}

TEST_CASE("train state snapshots resume the exact trajectory") {
  Fixture fx;
  auto mc = small_model();
  auto tc = small_train(41);
  tc.max_epochs = 4;

  const auto dir = std::filesystem::temp_directory_path() / "lerp_train_tests";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "state.bin").string();

  // run 1 epoch, snapshot, then 2 more
  TrainState state = TrainState::init(mc, tc, fx.vocab, std::nullopt);
  lerp::train_epoch(state, fx.records, fx.vocab, fx.catalog, tc);
  lerp::save_train_state(path, state, fx.vocab, fx.catalog, tc.max_note_len);
  lerp::train_epoch(state, fx.records, fx.vocab, fx.catalog, tc);
  lerp::train_epoch(state, fx.records, fx.vocab, fx.catalog, tc);

  // restore and replay the 2 epochs
  auto restored = lerp::load_train_state(path);
  CHECK(restored.state.epoch == 1);
  lerp::train_epoch(restored.state, fx.records, restored.vocab, restored.catalog, tc);
  lerp::train_epoch(restored.state, fx.records, restored.vocab, restored.catalog, tc);

  CHECK(params_equal(mc, restored.state.params, state.params));
  CHECK(restored.state.table.weights == state.table.weights);
  CHECK(restored.state.opt.step == state.opt.step);
  for (std::size_t i = 0; i < state.opt.m.size(); ++i) {
    CHECK(restored.state.opt.m[i] == state.opt.m[i]);
    CHECK(restored.state.opt.v[i] == state.opt.v[i]);
  }
}

TEST_CASE("non-finite loss aborts with a batch diagnostic") {
  Fixture fx(4);
  auto mc = small_model();
  auto tc = small_train();
  TrainState state = TrainState::init(mc, tc, fx.vocab, std::nullopt);
  state.params.w3.fill(std::numeric_limits<double>::quiet_NaN());
  try {
    lerp::train_epoch(state, fx.records, fx.vocab, fx.catalog, tc);
    FAIL("expected ContractError");
  } catch (const lerp::ContractError& e) {
    CHECK(std::string(e.what()).find("batch") != std::string::npos);
  }
}

TEST_CASE("train config validation") {
  TrainConfig tc;
  tc.batch_size = 0;
  CHECK_THROWS_AS(tc.validate(), lerp::ConfigError);
  tc = TrainConfig{};
  tc.patience = 0;
  CHECK_THROWS_AS(tc.validate(), lerp::ConfigError);
  CHECK(lerp::optimizer_from_name("sgd") == lerp::OptimizerKind::Sgd);
  CHECK_THROWS_AS(lerp::optimizer_from_name("momentum"), lerp::ConfigError);
}
