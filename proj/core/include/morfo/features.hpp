#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "morfo/corpus.hpp"
#include "morfo/tensor.hpp"
#include "morfo/vectors.hpp"

namespace morfo {

// FNV-1a 64-bit over the seed's 8 little-endian bytes followed by the UTF-8
// bytes of the key. Stable across platforms.
std::uint64_t fnv1a64(const std::string& key, std::uint64_t seed);

// Row index into a hash-embedding table: fnv1a64(key, seed) mod rows.
std::size_t hash_row(const std::string& key, std::size_t rows,
                     std::uint64_t seed);

struct FeatureSet {
  std::string norm;    // lowercased form
  std::string prefix;  // first code point
  std::string suffix;  // last 3 code points (whole form if shorter)
  std::string shape;
};

// Upper -> 'X', lower -> 'x', digit -> 'd', anything else verbatim;
// runs longer than 4 collapse to 4.
std::string word_shape(const std::string& form);

FeatureSet extract_features(const std::string& form);

struct HashEmbedTable {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  Tensor weights;  // rows x dim

  HashEmbedTable() = default;
  HashEmbedTable(std::size_t r, std::size_t d, std::uint64_t s)
      : rows(r), dim(d), seed(s), weights(r, d) {}
};

// The embed stage: one hash table per lexical feature, an optional POS table,
// and a projection from the concatenated parts to the working width.
struct EmbedLayer {
  HashEmbedTable norm, prefix, suffix, shape;
  std::optional<HashEmbedTable> pos;
  std::size_t pretrained_dim = 0;
  Tensor proj_w;  // (sum of feature dims + pretrained_dim) x width
  Tensor proj_b;  // 1 x width

  std::size_t input_dim() const {
    return norm.dim + prefix.dim + suffix.dim + shape.dim +
           (pos ? pos->dim : 0) + pretrained_dim;
  }
  std::size_t width() const { return proj_w.cols; }
};

// Per-token embedding: concatenated hashed feature rows plus the pretrained
// vector of the lowercased form (zero when absent), projected and passed
// through ReLU. Output has one row per token.
Tensor embed_sequence(const Sentence& sentence, const EmbedLayer& layer,
                      const VectorTable& pretrained,
                      const std::vector<std::string>* pos_feature = nullptr);

}  // namespace morfo
