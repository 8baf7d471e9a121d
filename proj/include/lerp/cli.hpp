#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace lerp {

// Fully-resolved run settings: defaults, overlaid by the config file,
// overlaid by command-line flags. A serialized copy goes to the output
// directory so any run can be reproduced from its resolved_config.json.
struct RunConfig {
  // model
  std::string variant = "lerp";
  std::size_t d = 64, f = 32, k1 = 3, k2 = 2, h = 64;
  // training
  double lr = 1e-3;
  std::size_t batch_size = 16, max_epochs = 100, patience = 5;
  std::string optimizer = "adam";
  std::size_t max_note_len = 256;
  double val_fraction = 0.2;
  double threshold = 0.5;
  std::uint64_t seed = 42;
  // paths
  std::string data, catalog, out = "out", embeddings, checkpoint;
  std::vector<std::string> ids;  // explain targets
  // generator
  std::size_t n_records = 1000, n_labels = 4, vocab_size = 200;
  double signal_strength = 0.95;
  std::size_t note_len_min = 12, note_len_max = 32;
  std::size_t noise_events_min = 1, noise_events_max = 2;
  double plant_prob = 0.5, background_rate = 0.02;
  std::size_t event_only_labels = 0;

  // Overlays `overrides` on top of the config file (if any) on top of the
  // defaults. Unknown keys are configuration errors.
  static RunConfig resolve(const std::string& config_path, const nlohmann::json& overrides);

  nlohmann::json to_json() const;
};

// Subcommand bodies; each writes resolved_config.json into `out` first and
// returns a process exit code.
int cmd_generate(const RunConfig& config);
int cmd_train(const RunConfig& config);
int cmd_eval(const RunConfig& config);
int cmd_explain(const RunConfig& config);

}  // namespace lerp
