#include "lerp/serialize.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "lerp/errors.hpp"

namespace lerp {

namespace {

// Minimal little-endian binary container. All sizes are u64, doubles are
// raw IEEE-754 bits, strings are length-prefixed UTF-8.
class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw ParseError("checkpoint '" + path + "': cannot open for writing");
  }
  void u64(std::uint64_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void tensor(const ad::Tensor& t) {
    u64(t.rank());
    for (std::size_t d : t.shape()) u64(d);
    raw(t.data(), t.numel() * sizeof(double));
  }

 private:
  void raw(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), n); }
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw ParseError("checkpoint '" + path + "': cannot open");
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v);
    return v;
  }
  std::string str() {
    const std::uint64_t n = u64();
    if (n > (1ull << 32)) throw ParseError("checkpoint '" + path_ + "': corrupt string length");
    std::string s(n, '\0');
    raw(s.data(), n);
    return s;
  }
  ad::Tensor tensor() {
    const std::uint64_t rank = u64();
    if (rank > 4) throw ParseError("checkpoint '" + path_ + "': corrupt tensor rank");
    std::vector<std::size_t> shape(rank);
    std::size_t n = 1;
    for (auto& d : shape) {
      d = u64();
      n *= d;
    }
    if (n > (1ull << 31)) throw ParseError("checkpoint '" + path_ + "': corrupt tensor size");
    ad::Tensor t(shape);
    raw(t.data(), n * sizeof(double));
    return t;
  }

 private:
  void raw(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      throw ParseError("checkpoint '" + path_ + "': truncated file");
    }
  }
  std::string path_;
  std::ifstream in_;
};

constexpr char kModelMagic[] = "LERPMDL1";
constexpr char kTrainMagic[] = "LERPTRN1";

void write_magic(Writer& w, const char* magic) { w.str(std::string(magic)); }

void check_magic(Reader& r, const char* magic, const std::string& path) {
  if (r.str() != magic) {
    throw ParseError("checkpoint '" + path + "': bad magic (expected " + magic + ")");
  }
}

void write_model(Writer& w, const Checkpoint& ckpt) {
  w.u64(static_cast<std::uint64_t>(ckpt.config.variant));
  w.u64(ckpt.config.d);
  w.u64(ckpt.config.f);
  w.u64(ckpt.config.k1);
  w.u64(ckpt.config.k2);
  w.u64(ckpt.config.n_y);
  w.u64(ckpt.config.h);
  w.u64(ckpt.max_note_len);
  w.u64(ckpt.catalog.size());
  for (const auto& name : ckpt.catalog.names) w.str(name);
  w.u64(ckpt.vocab.size());
  for (std::size_t i = 2; i < ckpt.vocab.size(); ++i) w.str(ckpt.vocab.token(static_cast<int>(i)));
  w.u64(ckpt.table.trainable ? 1 : 0);
  w.tensor(ckpt.table.weights);
  std::uint64_t count = 0;
  ckpt.params.for_each(ckpt.config, [&count](const std::string&, const ad::Tensor&) { ++count; });
  w.u64(count);
  ckpt.params.for_each(ckpt.config, [&w](const std::string& name, const ad::Tensor& t) {
    w.str(name);
    w.tensor(t);
  });
}

Checkpoint read_model(Reader& r, const std::string& path) {
  Checkpoint ckpt;
  ckpt.config.variant = static_cast<Variant>(r.u64());
  ckpt.config.d = r.u64();
  ckpt.config.f = r.u64();
  ckpt.config.k1 = r.u64();
  ckpt.config.k2 = r.u64();
  ckpt.config.n_y = r.u64();
  ckpt.config.h = r.u64();
  ckpt.max_note_len = r.u64();
  ckpt.config.validate();
  const std::uint64_t n_labels = r.u64();
  std::vector<std::string> names;
  for (std::uint64_t i = 0; i < n_labels; ++i) names.push_back(r.str());
  ckpt.catalog = LabelCatalog::from_names(std::move(names));
  const std::uint64_t vocab_size = r.u64();
  if (vocab_size < 2) throw ParseError("checkpoint '" + path + "': corrupt vocab");
  for (std::uint64_t i = 2; i < vocab_size; ++i) ckpt.vocab.add(r.str());
  if (ckpt.vocab.size() != vocab_size) {
    throw ParseError("checkpoint '" + path + "': duplicate vocab tokens");
  }
  ckpt.table.trainable = r.u64() != 0;
  ckpt.table.weights = r.tensor();
  ckpt.params = ModelParams{};
  const std::uint64_t count = r.u64();
  std::uint64_t expected = 0;
  ckpt.params.for_each(ckpt.config, [&expected](const std::string&, ad::Tensor&) { ++expected; });
  if (count != expected) {
    throw ParseError("checkpoint '" + path + "': expected " + std::to_string(expected) +
                     " parameter tensors, found " + std::to_string(count));
  }
  ckpt.params.for_each(ckpt.config, [&r, &path](const std::string& name, ad::Tensor& t) {
    const std::string stored = r.str();
    if (stored != name) {
      throw ParseError("checkpoint '" + path + "': expected tensor '" + name + "', found '" +
                       stored + "'");
    }
    t = r.tensor();
  });
  return ckpt;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  Writer w(path);
  write_magic(w, kModelMagic);
  write_model(w, ckpt);
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  check_magic(r, kModelMagic, path);
  return read_model(r, path);
}

void save_train_state(const std::string& path, const TrainState& state, const Vocab& vocab,
                      const LabelCatalog& catalog, std::size_t max_note_len) {
  Writer w(path);
  write_magic(w, kTrainMagic);
  Checkpoint ckpt;
  ckpt.config = state.model_config;
  ckpt.max_note_len = max_note_len;
  ckpt.catalog = catalog;
  ckpt.vocab = vocab;
  ckpt.table = state.table;
  ckpt.params = state.params;
  write_model(w, ckpt);
  w.u64(static_cast<std::uint64_t>(state.opt.kind));
  w.u64(state.opt.step);
  w.u64(state.opt.m.size());
  for (const auto& t : state.opt.m) w.tensor(t);
  for (const auto& t : state.opt.v) w.tensor(t);
  w.u64(state.epoch);
  w.f64(state.best_val_loss);
  w.u64(state.has_best ? 1 : 0);
  std::ostringstream rng;
  rng << state.rng;  // textual mt19937_64 state round-trips exactly
  w.str(rng.str());
}

RestoredTrainState load_train_state(const std::string& path) {
  Reader r(path);
  check_magic(r, kTrainMagic, path);
  Checkpoint ckpt = read_model(r, path);
  RestoredTrainState out;
  out.vocab = std::move(ckpt.vocab);
  out.catalog = std::move(ckpt.catalog);
  out.max_note_len = ckpt.max_note_len;
  out.state.model_config = ckpt.config;
  out.state.params = std::move(ckpt.params);
  out.state.table = std::move(ckpt.table);
  out.state.opt.kind = static_cast<OptimizerKind>(r.u64());
  out.state.opt.step = r.u64();
  const std::uint64_t n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) out.state.opt.m.push_back(r.tensor());
  for (std::uint64_t i = 0; i < n; ++i) out.state.opt.v.push_back(r.tensor());
  out.state.epoch = r.u64();
  out.state.best_val_loss = r.f64();
  out.state.has_best = r.u64() != 0;
  std::istringstream rng(r.str());
  rng >> out.state.rng;
  return out;
}

}  // namespace lerp
