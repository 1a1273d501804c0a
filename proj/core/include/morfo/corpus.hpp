#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace morfo {

inline constexpr std::array<const char*, 16> kUposCodes = {
    "ADJ", "ADP", "ADV", "CCONJ", "DET",  "INTJ",  "NOUN",  "NUM",
    "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};

bool is_upos_code(const std::string& s);

inline constexpr std::array<const char*, 4> kEntityClasses = {"LOC", "ORG",
                                                              "PERSON", "FAC"};

// Morph features are stored sorted by key for deterministic output.
using MorphFeatures = std::map<std::string, std::string>;

struct Token {
  std::string form;
  std::string fine_tag;  // empty = absent
  std::string upos;      // empty = absent
  MorphFeatures morph;
  std::string entity = "O";

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;

  bool operator==(const Sentence&) const = default;
};

struct Corpus {
  std::vector<Sentence> sentences;
  std::string name;

  bool operator==(const Corpus&) const = default;
};

struct TagEntry {
  std::string upos;
  MorphFeatures morph;

  bool operator==(const TagEntry&) const = default;
};

struct TagMap {
  std::map<std::string, TagEntry> entries;

  const TagEntry* lookup(const std::string& fine_tag) const;
};

struct SplitSpec {
  double train_frac = 0.7;
  double test_frac = 0.2;
  double dev_frac = 0.1;
  std::uint64_t seed = 0;
};

// Validates a BILOU label against `O | (B|I|L|U)-<CLASS>`; throws data_error.
void validate_entity_label(const std::string& label);

// Validates the whole per-sentence BILOU sequence; throws data_error with the
// given sentence index on violation.
void validate_bilou_sequence(const Sentence& sentence, std::size_t sent_index);

void validate_corpus(const Corpus& corpus);

Corpus parse_corpus_tsv(const std::string& path);
void write_corpus_tsv(const Corpus& corpus, const std::string& path);

TagMap load_tag_map(const std::string& path);
TagMap parse_tag_map_json(const std::string& json_text);
std::string tag_map_to_json(const TagMap& map);

std::tuple<Corpus, Corpus, Corpus> split_corpus(const Corpus& corpus,
                                                const SplitSpec& spec);

// Synthetic Greek mini-corpus used by the test and replication harnesses.
// Deterministic per seed. When oov_split is set, a fifth of the open-class
// lemmas only surface in the last 30% of the generated sentences.
Corpus generate_synthetic_corpus(std::size_t n_sentences, std::uint64_t seed,
                                 bool oov_split);

// Tag map covering every fine tag the synthetic generator emits.
const TagMap& builtin_tag_map();

}  // namespace morfo
