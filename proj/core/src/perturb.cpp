#include "morfo/perturb.hpp"

#include <algorithm>
#include <array>
#include <iostream>
#include <numeric>

#include "morfo/errors.hpp"
#include "morfo/rng.hpp"
#include "morfo/utf8.hpp"

namespace morfo {

namespace {

// Vowel classes: replacements stay within the same case/accent class.
const std::array<std::u32string, 4> kVowelClasses = {
    U"αεηιουω", U"άέήίόύώ", U"ΑΕΗΙΟΥΩ", U"ΆΈΉΊΌΎΏ"};

int vowel_class(char32_t cp) {
  for (std::size_t c = 0; c < kVowelClasses.size(); ++c)
    if (kVowelClasses[c].find(cp) != std::u32string::npos)
      return static_cast<int>(c);
  return -1;
}

bool is_alphabetic(const std::string& form) {
  const auto cps = utf8::decode(form);
  if (cps.empty()) return false;
  return std::all_of(cps.begin(), cps.end(),
                     [](char32_t cp) { return utf8::is_letter(cp); });
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Returns true and rewrites the form when a rule applies.
bool apply_perturbation(Token& tok, const PerturbSpec& spec, Rng& rng) {
  if (tok.upos == "VERB") {
    for (const auto& [old_suf, new_suf] : spec.verb_suffix_swaps) {
      if (ends_with(tok.form, old_suf)) {
        tok.form =
            tok.form.substr(0, tok.form.size() - old_suf.size()) + new_suf;
        return true;
      }
    }
  }
  auto cps = utf8::decode(tok.form);
  std::vector<std::size_t> vowel_positions;
  for (std::size_t i = 0; i < cps.size(); ++i)
    if (vowel_class(cps[i]) >= 0) vowel_positions.push_back(i);
  if (vowel_positions.empty()) return false;
  const std::size_t pos =
      vowel_positions[rng.next_below(vowel_positions.size())];
  const std::u32string& cls =
      kVowelClasses[static_cast<std::size_t>(vowel_class(cps[pos]))];
  char32_t replacement;
  do {
    replacement = cls[rng.next_below(cls.size())];
  } while (replacement == cps[pos]);
  cps[pos] = replacement;
  tok.form = utf8::encode(cps);
  return true;
}

}  // namespace

std::size_t count_alphabetic_tokens(const Corpus& corpus) {
  std::size_t n = 0;
  for (const Sentence& s : corpus.sentences)
    for (const Token& t : s.tokens) n += is_alphabetic(t.form);
  return n;
}

Corpus perturb_corpus(const Corpus& corpus, const PerturbSpec& spec) {
  if (spec.rate < 0 || spec.rate > 1)
    throw config_error("perturb rate must be in [0, 1]");
  for (const auto& [old_suf, new_suf] : spec.verb_suffix_swaps)
    if (old_suf == new_suf)
      throw config_error("verb suffix swap maps a suffix to itself");

  Corpus out = corpus;
  std::vector<Token*> alphabetic;
  for (Sentence& s : out.sentences)
    for (Token& t : s.tokens)
      if (is_alphabetic(t.form)) alphabetic.push_back(&t);

  const std::size_t target =
      static_cast<std::size_t>(spec.rate *
                               static_cast<double>(alphabetic.size()));
  Rng rng(spec.seed);
  std::vector<std::size_t> order(alphabetic.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  std::size_t changed = 0;
  for (std::size_t idx : order) {
    if (changed >= target) break;
    if (apply_perturbation(*alphabetic[idx], spec, rng)) ++changed;
  }
  if (changed < target)
    std::cerr << "warning: only " << changed << " of " << target
              << " requested tokens were perturbable\n";
  return out;
}

}  // namespace morfo
