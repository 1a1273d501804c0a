#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace morfo {

struct VectorTable {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> entries;

  const std::vector<double>* find(const std::string& token) const {
    auto it = entries.find(token);
    return it == entries.end() ? nullptr : &it->second;
  }
};

struct SubwordTable {
  std::size_t dim = 0;
  std::size_t bucket_count = 0;
  std::uint32_t min_n = 3;
  std::uint32_t max_n = 6;
  std::uint64_t seed = 0;
  std::vector<std::vector<double>> buckets;  // bucket_count x dim
  std::vector<std::uint64_t> counts;         // contributions per bucket
};

inline constexpr std::size_t kDefaultBucketCount = 100000;

// Text .vec format: header "<count> <dim>", then one token + dim floats per
// line. Later duplicates overwrite earlier entries with a warning on stderr.
VectorTable load_vec_text(const std::string& path);
void write_vec_text(const VectorTable& table, const std::string& path);

// All substrings of "<word>" (by code points) with length in [min_n, max_n],
// ordered by (start, length); duplicates retained.
std::vector<std::string> char_ngrams(const std::string& word, std::size_t min_n,
                                     std::size_t max_n);

// Distributes each vocabulary vector over the hash buckets of the word's
// n-grams, then normalizes every touched bucket to the mean of its
// contributions.
SubwordTable induce_subword_table(const VectorTable& table,
                                  std::size_t bucket_count, std::uint64_t seed);

struct SynthResult {
  std::vector<double> vector;
  std::size_t covered = 0;  // n-grams that hit a populated bucket
};

// Mean of the populated bucket vectors of the word's n-grams; zero vector
// when nothing is covered.
SynthResult synthesize_oov_vector(const std::string& word,
                                  const SubwordTable& sub);

enum class BackfillMode { kOovOnly, kAll };

VectorTable backfill_table(const VectorTable& table,
                           const std::vector<std::string>& oov_words,
                           BackfillMode mode,
                           std::size_t bucket_count = kDefaultBucketCount,
                           std::uint64_t seed = 0);

// Binary cache: magic "MSUB", version, dim, bucket count, min/max n, hash
// seed, then counts and buckets.
void save_subword_table(const SubwordTable& sub, const std::string& path);
SubwordTable load_subword_table(const std::string& path);

}  // namespace morfo
