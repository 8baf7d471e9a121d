#include "lerp/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lerp/data.hpp"
#include "lerp/embedding.hpp"
#include "lerp/errors.hpp"
#include "lerp/explain.hpp"
#include "lerp/metrics.hpp"
#include "lerp/model.hpp"
#include "lerp/serialize.hpp"
#include "lerp/training.hpp"

namespace lerp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void apply(RunConfig& c, const json& j, const std::string& source) {
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "variant") c.variant = value.get<std::string>();
      else if (key == "d") c.d = value.get<std::size_t>();
      else if (key == "f") c.f = value.get<std::size_t>();
      else if (key == "k1") c.k1 = value.get<std::size_t>();
      else if (key == "k2") c.k2 = value.get<std::size_t>();
      else if (key == "hidden") c.h = value.get<std::size_t>();
      else if (key == "lr") c.lr = value.get<double>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "max_epochs") c.max_epochs = value.get<std::size_t>();
      else if (key == "patience") c.patience = value.get<std::size_t>();
      else if (key == "optimizer") c.optimizer = value.get<std::string>();
      else if (key == "max_note_len") c.max_note_len = value.get<std::size_t>();
      else if (key == "val_fraction") c.val_fraction = value.get<double>();
      else if (key == "threshold") c.threshold = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "data") c.data = value.get<std::string>();
      else if (key == "catalog") c.catalog = value.get<std::string>();
      else if (key == "out") c.out = value.get<std::string>();
      else if (key == "embeddings") c.embeddings = value.get<std::string>();
      else if (key == "checkpoint") c.checkpoint = value.get<std::string>();
      else if (key == "ids") c.ids = value.get<std::vector<std::string>>();
      else if (key == "n_records") c.n_records = value.get<std::size_t>();
      else if (key == "n_labels") c.n_labels = value.get<std::size_t>();
      else if (key == "vocab_size") c.vocab_size = value.get<std::size_t>();
      else if (key == "signal_strength") c.signal_strength = value.get<double>();
      else if (key == "note_len_min") c.note_len_min = value.get<std::size_t>();
      else if (key == "note_len_max") c.note_len_max = value.get<std::size_t>();
      else if (key == "noise_events_min") c.noise_events_min = value.get<std::size_t>();
      else if (key == "noise_events_max") c.noise_events_max = value.get<std::size_t>();
      else if (key == "plant_prob") c.plant_prob = value.get<double>();
      else if (key == "background_rate") c.background_rate = value.get<double>();
      else if (key == "event_only_labels") c.event_only_labels = value.get<std::size_t>();
      else if (key == "command") { /* informational, written by previous runs */ }
      else throw ConfigError("config: unknown key '" + key + "' in " + source);
    } catch (const json::exception& e) {
      throw ConfigError("config: bad value for '" + key + "' in " + source + ": " + e.what());
    }
  }
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << content;
}

void write_resolved(const RunConfig& config, const std::string& command) {
  fs::create_directories(config.out);
  json j = config.to_json();
  j["command"] = command;
  write_text(fs::path(config.out) / "resolved_config.json", j.dump(2) + "\n");
}

ModelConfig model_config_from(const RunConfig& config, std::size_t n_y) {
  ModelConfig mc;
  mc.variant = variant_from_name(config.variant);
  mc.d = config.d;
  mc.f = config.f;
  mc.k1 = config.k1;
  mc.k2 = config.k2;
  mc.n_y = n_y;
  mc.h = config.h;
  mc.validate();
  return mc;
}

TrainConfig train_config_from(const RunConfig& config) {
  TrainConfig tc;
  tc.learning_rate = config.lr;
  tc.batch_size = config.batch_size;
  tc.max_epochs = config.max_epochs;
  tc.patience = config.patience;
  tc.seed = config.seed;
  tc.optimizer = optimizer_from_name(config.optimizer);
  tc.max_note_len = config.max_note_len;
  tc.validate();
  return tc;
}

std::string format_log(const std::vector<EpochStats>& log) {
  std::string text = "epoch, train_loss, val_loss, val_micro_auc\n";
  char line[160];
  for (const auto& row : log) {
    std::snprintf(line, sizeof(line), "%zu, %.17g, %.17g, %.17g\n", row.epoch, row.train_loss,
                  row.val_loss, row.val_micro_auc);
    text += line;
  }
  return text;
}

PredictionSet predictions_for(Checkpoint& ckpt, const std::vector<EhrRecord>& records,
                              double threshold) {
  PredictionSet pred;
  pred.scores = predict(ckpt.config, ckpt.params, ckpt.table, ckpt.vocab, records, ckpt.catalog,
                        ckpt.max_note_len);
  for (const auto& r : records) pred.targets.push_back(r.labels);
  pred.threshold = threshold;
  return pred;
}

}  // namespace

RunConfig RunConfig::resolve(const std::string& config_path, const json& overrides) {
  RunConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ConfigError("config file '" + config_path + "': cannot open");
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError("config file '" + config_path + "': " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file '" + config_path + "': expected an object");
    apply(config, j, "'" + config_path + "'");
  }
  apply(config, overrides, "command line");
  return config;
}

json RunConfig::to_json() const {
  json j;
  j["variant"] = variant;
  j["d"] = d;
  j["f"] = f;
  j["k1"] = k1;
  j["k2"] = k2;
  j["hidden"] = h;
  j["lr"] = lr;
  j["batch_size"] = batch_size;
  j["max_epochs"] = max_epochs;
  j["patience"] = patience;
  j["optimizer"] = optimizer;
  j["max_note_len"] = max_note_len;
  j["val_fraction"] = val_fraction;
  j["threshold"] = threshold;
  j["seed"] = seed;
  j["data"] = data;
  j["catalog"] = catalog;
  j["out"] = out;
  j["embeddings"] = embeddings;
  j["checkpoint"] = checkpoint;
  j["ids"] = ids;
  j["n_records"] = n_records;
  j["n_labels"] = n_labels;
  j["vocab_size"] = vocab_size;
  j["signal_strength"] = signal_strength;
  j["note_len_min"] = note_len_min;
  j["note_len_max"] = note_len_max;
  j["noise_events_min"] = noise_events_min;
  j["noise_events_max"] = noise_events_max;
  j["plant_prob"] = plant_prob;
  j["background_rate"] = background_rate;
  j["event_only_labels"] = event_only_labels;
  return j;
}

int cmd_generate(const RunConfig& config) {
  write_resolved(config, "generate");
  GeneratorConfig gen;
  gen.n_records = config.n_records;
  gen.n_labels = config.n_labels;
  gen.vocab_size = config.vocab_size;
  gen.signal_strength = config.signal_strength;
  gen.seed = config.seed;
  gen.note_len_min = config.note_len_min;
  gen.note_len_max = config.note_len_max;
  gen.noise_events_min = config.noise_events_min;
  gen.noise_events_max = config.noise_events_max;
  gen.plant_prob = config.plant_prob;
  gen.background_rate = config.background_rate;
  gen.n_event_only_labels = config.event_only_labels;
  SyntheticDataset data = generate_synthetic(gen);

  const fs::path out(config.out);
  save_dataset((out / "dataset.jsonl").string(), data.records);
  save_catalog((out / "catalog.json").string(), data.catalog);

  json truths = json::array();
  for (const auto& t : data.truths) {
    truths.push_back({{"id", t.record_id}, {"label", t.label}, {"position", t.note_position}});
  }
  json meta;
  meta["trigger_words"] = data.trigger_words;
  meta["planted"] = std::move(truths);
  write_text(out / "triggers.json", meta.dump(2) + "\n");
  std::cout << "generated " << data.records.size() << " records, " << data.catalog.size()
            << " labels -> " << out.string() << "\n";
  return 0;
}

int cmd_train(const RunConfig& config) {
  if (config.data.empty()) throw ConfigError("train: missing --data path");
  if (config.catalog.empty()) throw ConfigError("train: missing --catalog path");

  LabelCatalog catalog = load_catalog(config.catalog);
  std::vector<EhrRecord> records = load_dataset(config.data, catalog);
  auto [train_records, val_records] = split(records, 1.0 - config.val_fraction, config.seed);

  Vocab vocab;
  std::optional<EmbeddingTable> pretrained;
  RunConfig resolved = config;
  if (!config.embeddings.empty()) {
    auto [file_vocab, file_table] = load_pretrained(config.embeddings);
    vocab = std::move(file_vocab);
    resolved.d = file_table.dim();  // table fixes D
    pretrained = std::move(file_table);
  } else {
    build_vocab(vocab, records, catalog);
  }
  write_resolved(resolved, "train");

  ModelConfig mc = model_config_from(resolved, catalog.size());
  TrainConfig tc = train_config_from(resolved);
  FitResult result = fit(tc, mc, train_records, val_records, vocab, catalog, std::move(pretrained));

  const fs::path out(resolved.out);
  Checkpoint ckpt{mc, tc.max_note_len, catalog, vocab, result.best_table, result.best_params};
  save_checkpoint((out / "checkpoint.bin").string(), ckpt);
  write_text(out / "train_log.txt", format_log(result.log));

  PredictionSet pred = predictions_for(ckpt, val_records, resolved.threshold);
  write_text(out / "metrics.json", report(pred).to_json() + "\n");

  std::cout << "best epoch " << result.best_epoch << ", val loss " << result.best_val_loss
            << " -> " << out.string() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& config) {
  if (config.checkpoint.empty()) throw ConfigError("eval: missing --checkpoint path");
  if (config.data.empty()) throw ConfigError("eval: missing --data path");
  write_resolved(config, "eval");

  Checkpoint ckpt = load_checkpoint(config.checkpoint);
  if (!config.catalog.empty()) {
    LabelCatalog catalog = load_catalog(config.catalog);
    if (catalog.names != ckpt.catalog.names) {
      throw ConfigError("eval: catalog '" + config.catalog + "' has " +
                        std::to_string(catalog.size()) + " labels but the checkpoint was " +
                        "trained on " + std::to_string(ckpt.catalog.size()) +
                        " (names must match)");
    }
  }
  std::vector<EhrRecord> records = load_dataset(config.data, ckpt.catalog);
  if (records.empty()) throw DataError("eval: dataset '" + config.data + "' has no records");

  PredictionSet pred = predictions_for(ckpt, records, config.threshold);
  MetricsReport rep = report(pred);
  std::cout << rep.to_json() << "\n";
  if (!rep.micro_roc_auc) {
    std::cerr << "eval: micro ROC AUC is undefined (targets are single-class)\n";
    return 3;
  }
  return 0;
}

int cmd_explain(const RunConfig& config) {
  if (config.checkpoint.empty()) throw ConfigError("explain: missing --checkpoint path");
  if (config.data.empty()) throw ConfigError("explain: missing --data path");
  if (config.ids.empty()) throw ConfigError("explain: no record ids given (--id)");
  write_resolved(config, "explain");

  Checkpoint ckpt = load_checkpoint(config.checkpoint);
  std::vector<EhrRecord> records = load_dataset(config.data, ckpt.catalog);
  const auto catalog_entities = encode_catalog(ckpt.vocab, ckpt.catalog);

  const fs::path dir = fs::path(config.out) / "attention";
  fs::create_directories(dir);

  for (const auto& id : config.ids) {
    const EhrRecord* record = nullptr;
    for (const auto& r : records) {
      if (r.id == id) {
        record = &r;
        break;
      }
    }
    if (!record) throw DataError("explain: record id '" + id + "' not found in " + config.data);

    const std::size_t note_len = std::min(record->note.size(), ckpt.max_note_len);
    EncodedRecord enc = encode_record(ckpt.vocab, *record, note_len, ckpt.max_note_len);
    ForwardOutput out = forward(ckpt.config, ckpt.params, ckpt.table, enc, catalog_entities);

    std::vector<std::string> tokens(record->note.begin(),
                                    record->note.begin() + static_cast<std::ptrdiff_t>(note_len));
    AttentionReport rep = make_attention_report(id, ckpt.config.variant, tokens, out,
                                                ckpt.catalog.names);
    write_text(dir / (id + ".json"), attention_report_json(rep) + "\n");
    write_text(dir / (id + ".html"), attention_report_html(rep));
  }
  std::cout << "wrote " << config.ids.size() << " attention report(s) -> " << dir.string() << "\n";
  return 0;
}

}  // namespace lerp
