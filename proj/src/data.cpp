#include "lerp/data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "lerp/errors.hpp"

namespace lerp {

using nlohmann::json;

LabelCatalog LabelCatalog::from_names(std::vector<std::string> names) {
  LabelCatalog catalog;
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (names[i] == names[j]) {
        throw DataError("catalog: duplicate label name '" + names[i] + "'");
      }
    }
    catalog.name_tokens.push_back(tokenize(names[i]));
    if (catalog.name_tokens.back().empty()) {
      throw DataError("catalog: label name '" + names[i] + "' has no tokens");
    }
  }
  catalog.names = std::move(names);
  return catalog;
}

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char ch : text) {
    if (std::isalnum(ch)) {
      current.push_back(static_cast<char>(std::tolower(ch)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

namespace {

EhrRecord parse_record_line(const json& j, const LabelCatalog& catalog, std::size_t line_no) {
  auto fail = [line_no](const std::string& what) -> void {
    throw DataError("dataset line " + std::to_string(line_no) + ": " + what);
  };
  if (!j.is_object()) fail("expected a JSON object");
  if (!j.contains("id") || !j["id"].is_string()) fail("missing string field 'id'");
  EhrRecord record;
  record.id = j["id"].get<std::string>();
  if (!j.contains("note") || !j["note"].is_string())
    fail("record '" + record.id + "': missing string field 'note'");
  record.note = tokenize(j["note"].get<std::string>());
  if (record.note.empty()) fail("record '" + record.id + "': note is empty after tokenization");
  if (!j.contains("events") || !j["events"].is_array())
    fail("record '" + record.id + "': missing array field 'events'");
  for (const auto& e : j["events"]) {
    if (!e.is_string()) fail("record '" + record.id + "': events must be strings");
    auto tokens = tokenize(e.get<std::string>());
    if (tokens.empty()) fail("record '" + record.id + "': event '" + e.get<std::string>() +
                             "' has no tokens");
    record.events.push_back(std::move(tokens));
  }
  if (!j.contains("labels") || !j["labels"].is_array())
    fail("record '" + record.id + "': missing array field 'labels'");
  for (const auto& v : j["labels"]) {
    if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1))
      fail("record '" + record.id + "': labels must be 0/1 integers");
    record.labels.push_back(v.get<int>());
  }
  if (record.labels.size() != catalog.size()) {
    fail("record '" + record.id + "': labels length " + std::to_string(record.labels.size()) +
         " != catalog size " + std::to_string(catalog.size()));
  }
  return record;
}

}  // namespace

std::vector<EhrRecord> load_dataset(const std::string& path, const LabelCatalog& catalog) {
  std::ifstream in(path);
  if (!in) throw DataError("dataset '" + path + "': cannot open");
  std::vector<EhrRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
    records.push_back(parse_record_line(j, catalog, line_no));
  }
  return records;
}

void save_dataset(const std::string& path, const std::vector<EhrRecord>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("dataset '" + path + "': cannot open for writing");
  for (const auto& record : records) {
    json j;
    j["id"] = record.id;
    std::string note;
    for (std::size_t i = 0; i < record.note.size(); ++i) {
      if (i) note += ' ';
      note += record.note[i];
    }
    j["note"] = note;
    json events = json::array();
    for (const auto& event : record.events) {
      std::string name;
      for (std::size_t i = 0; i < event.size(); ++i) {
        if (i) name += ' ';
        name += event[i];
      }
      events.push_back(name);
    }
    j["events"] = std::move(events);
    j["labels"] = record.labels;
    out << j.dump() << '\n';
  }
}

LabelCatalog load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("catalog '" + path + "': cannot open");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("catalog '" + path + "': " + e.what());
  }
  if (!j.is_array() || j.empty()) throw DataError("catalog '" + path + "': expected a non-empty JSON array");
  std::vector<std::string> names;
  for (const auto& v : j) {
    if (!v.is_string()) throw DataError("catalog '" + path + "': names must be strings");
    names.push_back(v.get<std::string>());
  }
  return LabelCatalog::from_names(std::move(names));
}

void save_catalog(const std::string& path, const LabelCatalog& catalog) {
  std::ofstream out(path);
  if (!out) throw DataError("catalog '" + path + "': cannot open for writing");
  out << json(catalog.names).dump(2) << '\n';
}

std::pair<std::vector<EhrRecord>, std::vector<EhrRecord>> split(
    const std::vector<EhrRecord>& records, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw ConfigError("split: fraction must be in (0,1), got " + std::to_string(fraction));
  }
  if (records.size() < 2) {
    throw DataError("split: need at least 2 records, got " + std::to_string(records.size()));
  }
  std::vector<std::size_t> order(records.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_train = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(records.size())));
  n_train = std::clamp<std::size_t>(n_train, 1, records.size() - 1);
  std::pair<std::vector<EhrRecord>, std::vector<EhrRecord>> result;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? result.first : result.second).push_back(records[order[i]]);
  }
  return result;
}

// --- synthetic generator ------------------------------------------------------

SyntheticDataset generate_synthetic(const GeneratorConfig& config) {
  if (config.n_labels < 2) {
    throw ConfigError("generator: n_labels must be >= 2, got " + std::to_string(config.n_labels));
  }
  if (config.vocab_size < 10 * config.n_labels) {
    throw ConfigError("generator: vocab_size must be >= 10*n_labels (" +
                      std::to_string(10 * config.n_labels) + "), got " +
                      std::to_string(config.vocab_size));
  }
  if (config.signal_strength < 0.0 || config.signal_strength > 1.0) {
    throw ConfigError("generator: signal_strength must be in [0,1]");
  }
  if (config.note_len_min < 1 || config.note_len_max < config.note_len_min) {
    throw ConfigError("generator: invalid note length range");
  }
  if (config.n_event_only_labels > config.n_labels) {
    throw ConfigError("generator: n_event_only_labels exceeds n_labels");
  }
  if (config.noise_events_min < 1 || config.noise_events_max < config.noise_events_min) {
    throw ConfigError("generator: need at least one noise event per record");
  }

  const std::size_t n = config.n_labels;
  // Token budget: shared name prefixes + per-label trigger/label/event nouns
  // + noise-event nouns; everything left is filler.
  const std::size_t n_noise_events = 2;
  SyntheticDataset data;
  std::vector<std::string> label_names, event_names, noise_event_names;
  for (std::size_t j = 0; j < n; ++j) {
    data.trigger_words.push_back("trigger" + std::to_string(j));
    label_names.push_back("risk condition" + std::to_string(j));
    event_names.push_back("remedy" + std::to_string(j));
  }
  for (std::size_t k = 0; k < n_noise_events; ++k)
    noise_event_names.push_back("routine" + std::to_string(k));
  data.catalog = LabelCatalog::from_names(label_names);

  const std::size_t reserved = 3 * n + n_noise_events + 1;  // +"risk"
  const std::size_t n_fillers = config.vocab_size - reserved;
  std::vector<std::string> fillers;
  fillers.reserve(n_fillers);
  for (std::size_t k = 0; k < n_fillers; ++k) fillers.push_back("word" + std::to_string(k));

  std::mt19937_64 rng(config.seed);
  std::uniform_int_distribution<std::size_t> filler_dist(0, n_fillers - 1);
  std::uniform_int_distribution<std::size_t> len_dist(config.note_len_min, config.note_len_max);
  std::uniform_int_distribution<std::size_t> noise_dist(config.noise_events_min,
                                                        config.noise_events_max);
  std::uniform_int_distribution<std::size_t> noise_pick(0, n_noise_events - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  const std::size_t first_event_only = n - config.n_event_only_labels;

  for (std::size_t r = 0; r < config.n_records; ++r) {
    EhrRecord record;
    record.id = "rec" + std::to_string(r);
    const std::size_t note_len = len_dist(rng);
    for (std::size_t i = 0; i < note_len; ++i) record.note.push_back(fillers[filler_dist(rng)]);

    // Distinct positions so one planted trigger never overwrites another.
    std::vector<std::size_t> free_pos(note_len);
    for (std::size_t i = 0; i < note_len; ++i) free_pos[i] = i;

    record.labels.assign(n, 0);
    bool event_only_used = false;
    for (std::size_t j = 0; j < n; ++j) {
      bool planted = coin(rng) < config.plant_prob;
      if (j >= first_event_only && planted) {
        // The channel-max attention reduction is winner-take-all across
        // events, so co-planted event-only triggers would occlude each
        // other; plant at most one per record.
        if (event_only_used) planted = false;
        event_only_used = true;
      }
      if (planted) {
        if (j < first_event_only && !free_pos.empty()) {
          const std::size_t pick =
              std::uniform_int_distribution<std::size_t>(0, free_pos.size() - 1)(rng);
          const std::size_t pos = free_pos[pick];
          free_pos[pick] = free_pos.back();
          free_pos.pop_back();
          record.note[pos] = data.trigger_words[j];
          data.truths.push_back({record.id, j, pos});
        }
        record.events.push_back(tokenize(event_names[j]));
      }
      const double p = planted ? config.signal_strength : config.background_rate;
      record.labels[j] = coin(rng) < p ? 1 : 0;
    }
    if (record.events.empty()) {
      // Noise events only pad otherwise event-free records, so planted
      // events never compete with uninformative channels.
      const std::size_t n_noise = noise_dist(rng);
      for (std::size_t k = 0; k < n_noise; ++k)
        record.events.push_back(tokenize(noise_event_names[noise_pick(rng)]));
    }
    data.records.push_back(std::move(record));
  }
  return data;
}

// --- encoding -------------------------------------------------------------------

void build_vocab(Vocab& vocab, const std::vector<EhrRecord>& records,
                 const LabelCatalog& catalog) {
  for (const auto& record : records) {
    for (const auto& token : record.note) vocab.add(token);
    for (const auto& event : record.events)
      for (const auto& token : event) vocab.add(token);
  }
  for (const auto& name : catalog.name_tokens)
    for (const auto& token : name) vocab.add(token);
}

std::vector<int> encode_tokens(const Vocab& vocab, const std::vector<std::string>& tokens) {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& token : tokens) ids.push_back(vocab.lookup(token));
  return ids;
}

EncodedRecord encode_record(const Vocab& vocab, const EhrRecord& record, std::size_t note_len,
                            std::size_t max_note_len) {
  EncodedRecord enc;
  enc.id = record.id;
  const std::size_t real = std::min({record.note.size(), note_len, max_note_len});
  enc.note_ids.assign(note_len, Vocab::kPad);
  enc.keep.assign(note_len, 0);
  for (std::size_t i = 0; i < real; ++i) {
    enc.note_ids[i] = vocab.lookup(record.note[i]);
    enc.keep[i] = 1;
  }
  for (const auto& event : record.events) enc.events.push_back(encode_tokens(vocab, event));
  enc.labels = record.labels;
  return enc;
}

Batch make_batch(const Vocab& vocab, const std::vector<EhrRecord>& records, std::size_t begin,
                 std::size_t count, std::size_t max_note_len) {
  std::vector<std::size_t> indices(records.size());
  for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  return make_batch_indexed(vocab, records, indices, begin, count, max_note_len);
}

Batch make_batch_indexed(const Vocab& vocab, const std::vector<EhrRecord>& records,
                         const std::vector<std::size_t>& indices, std::size_t begin,
                         std::size_t count, std::size_t max_note_len) {
  Batch batch;
  std::size_t longest = 0;
  for (std::size_t i = begin; i < begin + count; ++i)
    longest = std::max(longest, records[indices[i]].note.size());
  batch.note_len = std::min(longest, max_note_len);
  for (std::size_t i = begin; i < begin + count; ++i)
    batch.records.push_back(encode_record(vocab, records[indices[i]], batch.note_len, max_note_len));
  return batch;
}

std::vector<std::vector<int>> encode_catalog(const Vocab& vocab, const LabelCatalog& catalog) {
  std::vector<std::vector<int>> entities;
  entities.reserve(catalog.size());
  for (const auto& name : catalog.name_tokens) entities.push_back(encode_tokens(vocab, name));
  return entities;
}

}  // namespace lerp
