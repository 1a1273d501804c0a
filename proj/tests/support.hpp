#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "morfo/corpus.hpp"
#include "morfo/features.hpp"
#include "morfo/rng.hpp"
#include "morfo/vectors.hpp"

namespace morfo::testing {

// Deterministic stand-in for a pretrained vector file: each word's vector is
// the normalized sum of per-n-gram pseudo-random directions, so words sharing
// subwords get correlated vectors (which is what the backfill experiments
// rely on).
inline VectorTable make_pseudo_vectors(const std::set<std::string>& vocab,
                                       std::size_t dim, std::uint64_t seed) {
  VectorTable table;
  table.dim = dim;
  for (const std::string& w : vocab) {
    std::vector<double> v(dim, 0.0);
    for (const std::string& g : char_ngrams(w, 3, 6)) {
      Rng rng(fnv1a64(g, seed));
      for (std::size_t d = 0; d < dim; ++d) v[d] += rng.next_range(-1.0, 1.0);
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0)
      for (double& x : v) x /= norm;
    table.entries[w] = std::move(v);
  }
  return table;
}

inline std::set<std::string> norm_vocab(const Corpus& corpus) {
  std::set<std::string> vocab;
  for (const Sentence& s : corpus.sentences)
    for (const Token& t : s.tokens)
      vocab.insert(extract_features(t.form).norm);
  return vocab;
}

inline std::set<std::string> form_vocab(const Corpus& corpus) {
  std::set<std::string> vocab;
  for (const Sentence& s : corpus.sentences)
    for (const Token& t : s.tokens) vocab.insert(t.form);
  return vocab;
}

inline std::string temp_path(const std::string& name) {
  static const std::filesystem::path dir = [] {
    auto p = std::filesystem::temp_directory_path() / "morfo_tests";
    std::filesystem::create_directories(p);
    return p;
  }();
  return (dir / name).string();
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace morfo::testing
