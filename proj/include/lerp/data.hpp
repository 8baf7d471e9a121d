#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lerp/embedding.hpp"

namespace lerp {

// One training/eval sample: tokenized note, tokenized event names, and the
// binary label vector. Labels have the catalog's length for every record.
struct EhrRecord {
  std::string id;
  std::vector<std::string> note;                 // tokens
  std::vector<std::vector<std::string>> events;  // each event is a token list
  std::vector<int> labels;                       // 0/1, length N_Y
};

// Ordered risk-label names, identical for every record. Each name is kept
// as the raw string plus its token list.
struct LabelCatalog {
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> name_tokens;

  std::size_t size() const { return names.size(); }
  static LabelCatalog from_names(std::vector<std::string> names);
};

// Lowercases and splits on runs of non-alphanumeric characters.
std::vector<std::string> tokenize(const std::string& text);

// One JSON object per line: {"id", "note", "events", "labels"}.
std::vector<EhrRecord> load_dataset(const std::string& path, const LabelCatalog& catalog);
void save_dataset(const std::string& path, const std::vector<EhrRecord>& records);

// Catalog file: JSON array of label-name strings.
LabelCatalog load_catalog(const std::string& path);
void save_catalog(const std::string& path, const LabelCatalog& catalog);

// Deterministic shuffle by seed, then split into (train, validation) with
// the first `fraction` share going to train. Partition is disjoint and
// exhaustive; both sides are non-empty.
std::pair<std::vector<EhrRecord>, std::vector<EhrRecord>> split(
    const std::vector<EhrRecord>& records, double fraction, std::uint64_t seed);

// --- synthetic generator ---------------------------------------------------

struct GeneratorConfig {
  std::size_t n_records = 1000;
  std::size_t n_labels = 4;
  std::size_t vocab_size = 200;   // distinct tokens across fillers, triggers and names
  double signal_strength = 0.95;  // P(y_j = 1 | trigger for j present)
  std::uint64_t seed = 42;
  std::size_t note_len_min = 12;
  std::size_t note_len_max = 32;
  std::size_t noise_events_min = 1;  // every record keeps at least one event
  std::size_t noise_events_max = 2;
  double plant_prob = 0.5;        // P(trigger for label j planted in a record)
  double background_rate = 0.02;  // P(y_j = 1 | trigger absent)
  // The last `n_event_only_labels` labels carry their signal only through a
  // trigger event; their trigger word is never planted in the note.
  std::size_t n_event_only_labels = 0;
};

// Where each planted note trigger landed, for attention-quality checks.
struct PlantedTruth {
  std::string record_id;
  std::size_t label;           // which label's trigger
  std::size_t note_position;   // token index in the note
};

struct SyntheticDataset {
  std::vector<EhrRecord> records;
  LabelCatalog catalog;
  std::vector<std::string> trigger_words;  // per label
  std::vector<PlantedTruth> truths;
};

// Plants a dedicated trigger word and trigger event per label: when the
// trigger for label j is present, y_j = 1 with probability signal_strength,
// otherwise with probability background_rate. Filler tokens are drawn
// uniformly and never collide with triggers or names. Deterministic per seed.
SyntheticDataset generate_synthetic(const GeneratorConfig& config);

// --- encoding for the model -------------------------------------------------

// One record mapped to vocab ids and padded/truncated to a fixed length.
struct EncodedRecord {
  std::string id;
  std::vector<int> note_ids;              // length N_M, padded with Vocab::kPad
  std::vector<std::uint8_t> keep;         // 1 on real tokens, 0 on padding
  std::vector<std::vector<int>> events;   // entity id lists
  std::vector<int> labels;
};

// Records grouped for one optimizer step. N_M is the smaller of the longest
// note in the batch and max_note_len (notes are tail-truncated).
struct Batch {
  std::vector<EncodedRecord> records;
  std::size_t note_len = 0;
};

// Adds every note/event/label-name token to the vocab in first-seen order.
void build_vocab(Vocab& vocab, const std::vector<EhrRecord>& records,
                 const LabelCatalog& catalog);

std::vector<int> encode_tokens(const Vocab& vocab, const std::vector<std::string>& tokens);

EncodedRecord encode_record(const Vocab& vocab, const EhrRecord& record, std::size_t note_len,
                            std::size_t max_note_len);

Batch make_batch(const Vocab& vocab, const std::vector<EhrRecord>& records, std::size_t begin,
                 std::size_t count, std::size_t max_note_len);

// Same, but over an arbitrary selection of record indices.
Batch make_batch_indexed(const Vocab& vocab, const std::vector<EhrRecord>& records,
                         const std::vector<std::size_t>& indices, std::size_t begin,
                         std::size_t count, std::size_t max_note_len);

// Catalog names as entity id lists, for the label branch.
std::vector<std::vector<int>> encode_catalog(const Vocab& vocab, const LabelCatalog& catalog);

}  // namespace lerp
