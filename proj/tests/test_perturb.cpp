#include <doctest.h>

#include "morfo/corpus.hpp"
#include "morfo/errors.hpp"
#include "morfo/perturb.hpp"
#include "morfo/utf8.hpp"
#include "support.hpp"

using namespace morfo;

TEST_CASE("count_alphabetic_tokens") {
  Corpus c;
  Sentence s;
  for (const char* f : {"Καλημέρα", "COVID-19", "2024", ",", "σας"})
    s.tokens.push_back(Token{f, "", "", {}, "O"});
  c.sentences.push_back(s);
  CHECK(count_alphabetic_tokens(c) == 2);
}

TEST_CASE("rate 0 is the identity") {
  const Corpus c = generate_synthetic_corpus(20, 3, true);
  PerturbSpec spec;
  spec.rate = 0.0;
  CHECK(perturb_corpus(c, spec) == c);
}

TEST_CASE("invalid specs are rejected") {
  const Corpus c = generate_synthetic_corpus(3, 1, false);
  PerturbSpec bad_rate;
  bad_rate.rate = 1.5;
  CHECK_THROWS_AS(perturb_corpus(c, bad_rate), config_error);
  PerturbSpec self_map;
  self_map.verb_suffix_swaps = {{"ει", "ει"}};
  CHECK_THROWS_AS(perturb_corpus(c, self_map), config_error);
}

TEST_CASE("exactly floor(rate * N) alphabetic tokens change") {
  const Corpus c = generate_synthetic_corpus(60, 11, true);
  const std::size_t n_alpha = count_alphabetic_tokens(c);
  for (double rate : {0.1, 0.2, 0.5}) {
    PerturbSpec spec;
    spec.rate = rate;
    spec.seed = 4;
    const Corpus out = perturb_corpus(c, spec);
    std::size_t diff = 0;
    REQUIRE(out.sentences.size() == c.sentences.size());
    for (std::size_t i = 0; i < c.sentences.size(); ++i) {
      REQUIRE(out.sentences[i].tokens.size() == c.sentences[i].tokens.size());
      for (std::size_t j = 0; j < c.sentences[i].tokens.size(); ++j)
        diff += out.sentences[i].tokens[j].form != c.sentences[i].tokens[j].form;
    }
    CHECK(diff == static_cast<std::size_t>(rate *
                                           static_cast<double>(n_alpha)));
  }
}

TEST_CASE("verb suffix swaps apply in order") {
  Corpus c;
  Sentence s;
  s.tokens.push_back(Token{"τρέχει", "Vb03Sg", "VERB", {}, "O"});
  c.sentences.push_back(s);
  PerturbSpec spec;
  spec.rate = 1.0;
  const Corpus out = perturb_corpus(c, spec);
  CHECK(out.sentences[0].tokens[0].form == "τρέχι");
}

TEST_CASE("non-verb perturbations swap one vowel within its class") {
  Corpus c;
  Sentence s;
  s.tokens.push_back(Token{"νερό", "NoNeSgNm", "NOUN", {}, "O"});
  c.sentences.push_back(s);
  PerturbSpec spec;
  spec.rate = 1.0;
  spec.seed = 9;
  const Corpus out = perturb_corpus(c, spec);
  const std::string& form = out.sentences[0].tokens[0].form;
  CHECK(form != "νερό");
  // Same length in code points; exactly one position changed; the changed
  // code point keeps the accent class of the original.
  const auto a = morfo::utf8::decode("νερό");
  const auto b = morfo::utf8::decode(form);
  REQUIRE(a.size() == b.size());
  std::size_t changed = 0;
  for (std::size_t i = 0; i < a.size(); ++i) changed += a[i] != b[i];
  CHECK(changed == 1);
}

TEST_CASE("perturbation keeps gold labels") {
  const Corpus c = generate_synthetic_corpus(30, 5, true);
  PerturbSpec spec;
  spec.rate = 0.2;
  spec.seed = 1;
  const Corpus out = perturb_corpus(c, spec);
  for (std::size_t i = 0; i < c.sentences.size(); ++i)
    for (std::size_t j = 0; j < c.sentences[i].tokens.size(); ++j) {
      const Token& before = c.sentences[i].tokens[j];
      const Token& after = out.sentences[i].tokens[j];
      CHECK(after.fine_tag == before.fine_tag);
      CHECK(after.upos == before.upos);
      CHECK(after.entity == before.entity);
    }
}

TEST_CASE("perturbation is deterministic per seed") {
  const Corpus c = generate_synthetic_corpus(25, 8, false);
  PerturbSpec spec;
  spec.rate = 0.3;
  spec.seed = 42;
  CHECK(perturb_corpus(c, spec) == perturb_corpus(c, spec));
  PerturbSpec other = spec;
  other.seed = 43;
  CHECK(perturb_corpus(c, other) != perturb_corpus(c, spec));
}
