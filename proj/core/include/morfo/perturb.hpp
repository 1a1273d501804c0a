#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "morfo/corpus.hpp"

namespace morfo {

struct PerturbSpec {
  double rate = 0.2;
  std::uint64_t seed = 0;
  // Applied in order; the first suffix match wins.
  std::vector<std::pair<std::string, std::string>> verb_suffix_swaps = {
      {"ει", "ι"}, {"ουν", "ουνε"}, {"ω", "ο"}, {"εις", "ις"}};
};

// OOV test-set corruption: floor(rate * N) of the N alphabetic tokens get
// either a verb-suffix swap or a vowel substitution. Gold labels are kept.
Corpus perturb_corpus(const Corpus& corpus, const PerturbSpec& spec);

// Number of alphabetic tokens (every code point a letter).
std::size_t count_alphabetic_tokens(const Corpus& corpus);

}  // namespace morfo
