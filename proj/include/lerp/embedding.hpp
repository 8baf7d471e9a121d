#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lerp/autodiff.hpp"
#include "lerp/tensor.hpp"

namespace lerp {

// Token string ↔ integer id bijection. Id 0 is reserved for padding and
// id 1 for unknown tokens; lookup of an unseen token returns the unknown id.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocab();

  // Adds a token if unseen; returns its id either way.
  int add(const std::string& token);
  int lookup(const std::string& token) const;
  bool contains(const std::string& token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return id_to_token_.size(); }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

// Per-token embedding rows, |V|×D. Stands in for the contextual encoder:
// either randomly initialized and trained with the model, or frozen
// pretrained vectors loaded from file. Row kPad is all-zeros and is never
// read or written by the lookup ops.
struct EmbeddingTable {
  ad::Tensor weights;  // [|V| × D]
  bool trainable = true;

  std::size_t vocab_size() const { return weights.dim(0); }
  std::size_t dim() const { return weights.dim(1); }

  // Gaussian init, mean 0, std 1/sqrt(D); padding row stays zero.
  static EmbeddingTable random(std::size_t vocab, std::size_t dim, std::uint64_t seed);
};

// Column n of the result is the table row of tokens[n]; padding tokens give
// exact zero columns and route no gradient. `context` names the record in
// error messages. Result: [D × N].
ad::Node* embed_note(ad::Tape& tape, ad::Node* table, const std::vector<int>& tokens,
                     const std::string& context = {});

// Column i is the arithmetic mean of entity i's token rows (padding ids are
// dropped first; an entity empty after that is a data error). Result: [D × N].
ad::Node* embed_entities(ad::Tape& tape, ad::Node* table,
                         const std::vector<std::vector<int>>& entities,
                         const std::string& context = {});

// Text word-vector format: first line "<count> <D>", then one
// "<token> <v1> ... <vD>" line per token. Vocab gets the reserved ids plus
// the file tokens in file order; the returned table is frozen.
std::pair<Vocab, EmbeddingTable> load_pretrained(const std::string& path);

// Inverse of load_pretrained (reserved rows are not written). Values are
// printed with enough digits to round-trip exactly.
void save_embedding_table(const std::string& path, const Vocab& vocab,
                          const EmbeddingTable& table);

}  // namespace lerp
