#include "lerp/embedding.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "lerp/errors.hpp"

namespace lerp {

using ad::Node;
using ad::Tape;
using ad::Tensor;

Vocab::Vocab() {
  add("<pad>");
  add("<unk>");
}

int Vocab::add(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  int id = static_cast<int>(id_to_token_.size());
  id_to_token_.push_back(token);
  token_to_id_.emplace(token, id);
  return id;
}

int Vocab::lookup(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnk : it->second;
}

bool Vocab::contains(const std::string& token) const {
  return token_to_id_.find(token) != token_to_id_.end();
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw DataError("vocab: id " + std::to_string(id) + " out of range (|V| = " +
                    std::to_string(id_to_token_.size()) + ")");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

EmbeddingTable EmbeddingTable::random(std::size_t vocab, std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ConfigError("embedding table: D must be > 0");
  EmbeddingTable table;
  table.weights = Tensor({vocab, dim});
  table.trainable = true;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
  for (std::size_t r = Vocab::kPad + 1; r < vocab; ++r)
    for (std::size_t c = 0; c < dim; ++c) table.weights.at(r, c) = dist(rng);
  return table;
}

namespace {

void check_token_id(int id, std::size_t vocab, const std::string& context) {
  if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
    std::string where = context.empty() ? std::string() : (" in record '" + context + "'");
    throw DataError("token id " + std::to_string(id) + " out of range (|V| = " +
                    std::to_string(vocab) + ")" + where);
  }
}

}  // namespace

Node* embed_note(Tape& tape, Node* table, const std::vector<int>& tokens,
                 const std::string& context) {
  const std::size_t vocab = table->value.dim(0);
  const std::size_t d = table->value.dim(1);
  const std::size_t n = tokens.size();
  for (int id : tokens) check_token_id(id, vocab, context);
  Tensor out({d, n});
  for (std::size_t j = 0; j < n; ++j) {
    if (tokens[j] == Vocab::kPad) continue;  // zero column regardless of row contents
    const std::size_t row = static_cast<std::size_t>(tokens[j]);
    for (std::size_t i = 0; i < d; ++i) out.at(i, j) = table->value.at(row, i);
  }
  return tape.emplace(std::move(out), {table}, [table, tokens, d, n](Node& self) {
    for (std::size_t j = 0; j < n; ++j) {
      if (tokens[j] == Vocab::kPad) continue;
      const std::size_t row = static_cast<std::size_t>(tokens[j]);
      for (std::size_t i = 0; i < d; ++i) table->grad.at(row, i) += self.grad.at(i, j);
    }
  });
}

Node* embed_entities(Tape& tape, Node* table, const std::vector<std::vector<int>>& entities,
                     const std::string& context) {
  const std::size_t vocab = table->value.dim(0);
  const std::size_t d = table->value.dim(1);
  const std::size_t n = entities.size();
  // Padding ids contribute nothing to an entity name.
  std::vector<std::vector<std::size_t>> rows(n);
  for (std::size_t e = 0; e < n; ++e) {
    for (int id : entities[e]) {
      check_token_id(id, vocab, context);
      if (id != Vocab::kPad) rows[e].push_back(static_cast<std::size_t>(id));
    }
    if (rows[e].empty()) {
      std::string where = context.empty() ? std::string() : (" in record '" + context + "'");
      throw DataError("entity " + std::to_string(e) + " is empty after dropping padding" + where);
    }
  }
  Tensor out({d, n});
  for (std::size_t e = 0; e < n; ++e) {
    const double inv = 1.0 / static_cast<double>(rows[e].size());
    for (std::size_t row : rows[e])
      for (std::size_t i = 0; i < d; ++i) out.at(i, e) += table->value.at(row, i) * inv;
  }
  return tape.emplace(std::move(out), {table}, [table, rows = std::move(rows), d, n](Node& self) {
    for (std::size_t e = 0; e < n; ++e) {
      const double inv = 1.0 / static_cast<double>(rows[e].size());
      for (std::size_t row : rows[e])
        for (std::size_t i = 0; i < d; ++i) table->grad.at(row, i) += self.grad.at(i, e) * inv;
    }
  });
}

std::pair<Vocab, EmbeddingTable> load_pretrained(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("embedding file '" + path + "': cannot open");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("embedding file '" + path + "': empty file");

  std::istringstream header(line);
  long long count = -1, dim = -1;
  if (!(header >> count >> dim) || count < 1 || dim < 1) {
    throw ParseError("embedding file '" + path + "': line 1: expected '<count> <D>' header");
  }

  Vocab vocab;
  EmbeddingTable table;
  const std::size_t d = static_cast<std::size_t>(dim);
  table.weights = Tensor({static_cast<std::size_t>(count) + 2, d});  // +pad +unk
  table.trainable = false;

  std::size_t line_no = 1;
  std::size_t loaded = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    if (!(ls >> token)) {
      throw ParseError("embedding file '" + path + "': line " + std::to_string(line_no) +
                       ": missing token");
    }
    if (loaded == static_cast<std::size_t>(count)) {
      throw ParseError("embedding file '" + path + "': line " + std::to_string(line_no) +
                       ": more rows than the declared count " + std::to_string(count));
    }
    if (vocab.contains(token)) {
      throw ParseError("embedding file '" + path + "': line " + std::to_string(line_no) +
                       ": duplicate token '" + token + "'");
    }
    const int id = vocab.add(token);
    for (std::size_t c = 0; c < d; ++c) {
      double v;
      if (!(ls >> v)) {
        throw ParseError("embedding file '" + path + "': line " + std::to_string(line_no) +
                         ": expected " + std::to_string(d) + " values for token '" + token + "'");
      }
      table.weights.at(static_cast<std::size_t>(id), c) = v;
    }
    double extra;
    if (ls >> extra) {
      throw ParseError("embedding file '" + path + "': line " + std::to_string(line_no) +
                       ": more than " + std::to_string(d) + " values for token '" + token + "'");
    }
    ++loaded;
  }
  if (loaded != static_cast<std::size_t>(count)) {
    throw ParseError("embedding file '" + path + "': declared " + std::to_string(count) +
                     " rows but found " + std::to_string(loaded));
  }
  // Unknown tokens map to the mean of all loaded vectors.
  for (std::size_t c = 0; c < d; ++c) {
    double s = 0.0;
    for (std::size_t r = 2; r < table.weights.dim(0); ++r) s += table.weights.at(r, c);
    table.weights.at(Vocab::kUnk, c) = s / static_cast<double>(loaded);
  }
  return {std::move(vocab), std::move(table)};
}

void save_embedding_table(const std::string& path, const Vocab& vocab,
                          const EmbeddingTable& table) {
  std::ofstream out(path);
  if (!out) throw ParseError("embedding file '" + path + "': cannot open for writing");
  const std::size_t n = table.vocab_size();
  const std::size_t d = table.dim();
  out << (n - 2) << ' ' << d << '\n';
  char buf[64];
  for (std::size_t r = 2; r < n; ++r) {
    out << vocab.token(static_cast<int>(r));
    for (std::size_t c = 0; c < d; ++c) {
      std::snprintf(buf, sizeof(buf), " %.17g", table.weights.at(r, c));
      out << buf;
    }
    out << '\n';
  }
}

}  // namespace lerp
