#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lerp/cli.hpp"
#include "lerp/errors.hpp"

namespace {

using nlohmann::json;

// Per-subcommand flag set. Only flags the user actually passed become
// overrides, so config-file values survive unless explicitly overridden.
struct Flags {
  std::string config;
  std::string variant, optimizer, data, catalog, out, embeddings, checkpoint;
  std::vector<std::string> ids;
  std::uint64_t seed = 0;
  std::size_t d = 0, f = 0, k1 = 0, k2 = 0, h = 0;
  std::size_t batch_size = 0, max_epochs = 0, patience = 0, max_note_len = 0;
  double lr = 0, val_fraction = 0, threshold = 0;
  std::size_t n_records = 0, n_labels = 0, vocab_size = 0;
  double signal_strength = 0, plant_prob = 0, background_rate = 0;
  std::size_t note_len_min = 0, note_len_max = 0, event_only_labels = 0;
  std::size_t noise_events_min = 0, noise_events_max = 0;
};

void add_common(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config, "JSON config file; flags override its keys");
  cmd->add_option("--seed", flags.seed, "RNG seed");
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--variant", flags.variant, "model variant: lerp, lerp-minus, ts")
      ->check(CLI::IsMember({"lerp", "lerp-minus", "ts"}));
  cmd->add_option("--embeddings", flags.embeddings, "pretrained embedding table (frozen)");
}

void add_model(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--d", flags.d, "embedding size D");
  cmd->add_option("--f", flags.f, "projected size F");
  cmd->add_option("--k1", flags.k1, "conv kernel width (odd)");
  cmd->add_option("--k2", flags.k2, "max-pool window along words");
  cmd->add_option("--hidden", flags.h, "fusion hidden size H");
  cmd->add_option("--max-note-len", flags.max_note_len, "note truncation length");
}

json overrides_from(const CLI::App* cmd, const Flags& flags) {
  json j = json::object();
  auto set = [&](const char* flag, const char* key, const json& value) {
    const CLI::Option* opt = cmd->get_option_no_throw(flag);
    if (opt && opt->count() > 0) j[key] = value;
  };
  set("--seed", "seed", flags.seed);
  set("--out", "out", flags.out);
  set("--variant", "variant", flags.variant);
  set("--embeddings", "embeddings", flags.embeddings);
  set("--d", "d", flags.d);
  set("--f", "f", flags.f);
  set("--k1", "k1", flags.k1);
  set("--k2", "k2", flags.k2);
  set("--hidden", "hidden", flags.h);
  set("--max-note-len", "max_note_len", flags.max_note_len);
  set("--lr", "lr", flags.lr);
  set("--batch-size", "batch_size", flags.batch_size);
  set("--max-epochs", "max_epochs", flags.max_epochs);
  set("--patience", "patience", flags.patience);
  set("--optimizer", "optimizer", flags.optimizer);
  set("--val-fraction", "val_fraction", flags.val_fraction);
  set("--threshold", "threshold", flags.threshold);
  set("--data", "data", flags.data);
  set("--catalog", "catalog", flags.catalog);
  set("--checkpoint", "checkpoint", flags.checkpoint);
  set("--id", "ids", flags.ids);
  set("--n-records", "n_records", flags.n_records);
  set("--n-labels", "n_labels", flags.n_labels);
  set("--vocab-size", "vocab_size", flags.vocab_size);
  set("--signal-strength", "signal_strength", flags.signal_strength);
  set("--note-len-min", "note_len_min", flags.note_len_min);
  set("--note-len-max", "note_len_max", flags.note_len_max);
  set("--noise-events-min", "noise_events_min", flags.noise_events_min);
  set("--noise-events-max", "noise_events_max", flags.noise_events_max);
  set("--plant-prob", "plant_prob", flags.plant_prob);
  set("--background-rate", "background_rate", flags.background_rate);
  set("--event-only-labels", "event_only_labels", flags.event_only_labels);
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LERP cross-attention risk prediction"};
  app.require_subcommand(1);

  Flags flags;

  CLI::App* generate = app.add_subcommand("generate", "write a synthetic dataset + catalog");
  add_common(generate, flags);
  generate->add_option("--n-records", flags.n_records, "number of records");
  generate->add_option("--n-labels", flags.n_labels, "number of risk labels (>= 2)");
  generate->add_option("--vocab-size", flags.vocab_size, "distinct tokens (>= 10*n_labels)");
  generate->add_option("--signal-strength", flags.signal_strength,
                       "P(label | its trigger present)");
  generate->add_option("--note-len-min", flags.note_len_min, "shortest note, tokens");
  generate->add_option("--note-len-max", flags.note_len_max, "longest note, tokens");
  generate->add_option("--noise-events-min", flags.noise_events_min, "min noise events");
  generate->add_option("--noise-events-max", flags.noise_events_max, "max noise events");
  generate->add_option("--plant-prob", flags.plant_prob, "P(trigger planted per label)");
  generate->add_option("--background-rate", flags.background_rate, "P(label | trigger absent)");
  generate->add_option("--event-only-labels", flags.event_only_labels,
                       "trailing labels whose signal is carried only by events");

  CLI::App* train = app.add_subcommand("train", "train a model and write a checkpoint");
  add_common(train, flags);
  add_model(train, flags);
  train->add_option("--data", flags.data, "dataset (JSON lines)");
  train->add_option("--catalog", flags.catalog, "label catalog (JSON array)");
  train->add_option("--lr", flags.lr, "learning rate");
  train->add_option("--batch-size", flags.batch_size, "records per optimizer step");
  train->add_option("--max-epochs", flags.max_epochs, "epoch cap");
  train->add_option("--patience", flags.patience, "early-stop patience, epochs");
  train->add_option("--optimizer", flags.optimizer, "sgd or adam")
      ->check(CLI::IsMember({"sgd", "adam"}));
  train->add_option("--val-fraction", flags.val_fraction, "validation share of the data");
  train->add_option("--threshold", flags.threshold, "decision threshold for metrics");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint, metrics JSON to stdout");
  add_common(eval, flags);
  eval->add_option("--checkpoint", flags.checkpoint, "model checkpoint");
  eval->add_option("--data", flags.data, "dataset (JSON lines)");
  eval->add_option("--catalog", flags.catalog, "optional catalog consistency check");
  eval->add_option("--threshold", flags.threshold, "decision threshold for metrics");

  CLI::App* explain = app.add_subcommand("explain", "per-word attention reports (JSON + HTML)");
  add_common(explain, flags);
  explain->add_option("--checkpoint", flags.checkpoint, "model checkpoint");
  explain->add_option("--data", flags.data, "dataset (JSON lines)");
  explain->add_option("--id", flags.ids, "record id (repeatable)");

  CLI11_PARSE(app, argc, argv);

  CLI::App* active = app.get_subcommands().front();
  try {
    lerp::RunConfig config = lerp::RunConfig::resolve(flags.config, overrides_from(active, flags));
    if (active == generate) return lerp::cmd_generate(config);
    if (active == train) return lerp::cmd_train(config);
    if (active == eval) return lerp::cmd_eval(config);
    return lerp::cmd_explain(config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
