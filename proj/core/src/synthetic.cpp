#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "morfo/corpus.hpp"
#include "morfo/errors.hpp"
#include "morfo/rng.hpp"

// Template-grammar generator over a Greek mini-lexicon. Open-class words are
// built as stem + inflection ending, with endings of at least three code
// points so the tag is recoverable from the token suffix; closed-class words
// have one fixed tag per form.

namespace morfo {

namespace {

struct NounFamily {
  const char* gender;                      // Masc / Fem / Neut
  std::array<const char*, 3> endings;      // NomSg, GenSg, NomPl
  std::array<const char*, 3> tags;
  std::array<const char*, 3> dets;         // article per form
  std::array<const char*, 3> det_tags;
  std::vector<const char*> stems;
};

const std::array<const char*, 6> kVerbEndings = {"άρω",    "άρεις", "άρει",
                                                 "άρουμε", "άρετε", "άρουν"};
const std::array<const char*, 6> kVerbTags = {"Vb01Sg", "Vb02Sg", "Vb03Sg",
                                              "Vb01Pl", "Vb02Pl", "Vb03Pl"};

std::vector<NounFamily> make_noun_families() {
  return {
      {"Masc",
       {"ισμός", "ισμού", "ισμοί"},
       {"NoMaSgNm", "NoMaSgGe", "NoMaPlNm"},
       {"ο", "του", "οι"},
       {"AtMaSgNm", "AtMaSgGe", "AtMaPlNm"},
       {"μηχαν", "οργαν", "τουρ", "αθλητ", "ρεαλ", "ιδεαλ", "εθνικ", "μοντερν",
        "συνδικαλ", "καπιταλ"}},
      {"Fem",
       {"ότητα", "ότητας", "ότητες"},
       {"NoFeSgNm", "NoFeSgGe", "NoFePlNm"},
       {"η", "της", "οι"},
       {"AtFeSgNm", "AtFeSgGe", "AtMaPlNm"},
       {"ποι", "ποσ", "λαμπρ", "σταθερ", "καθαρ", "ομαλ", "ταχ", "ασφαλ",
        "στεγαν", "ικαν"}},
      {"Neut",
       {"ωμα", "ώματος", "ώματα"},
       {"NoNeSgNm", "NoNeSgGe", "NoNePlNm"},
       {"το", "του", "τα"},
       {"AtNeSgNm", "AtMaSgGe", "AtNePlNm"},
       {"χρ", "στρ", "δικαι", "διπλ", "φορτ", "σκην", "απλ", "ιδρ", "κατακλ",
        "συμπλ"}},
  };
}

const std::vector<const char*> kVerbStems = {
    "παρκ", "τσεκ",  "φορμ", "σκαν",   "φιλτρ", "τρεν",
    "λασκ", "φρεν",  "μοντ", "γκουγκλ", "σουτ",  "μαρκ"};

const std::vector<const char*> kPersonFirst = {
    "Μαρία", "Ελένη", "Γιώργος", "Νίκος", "Κώστας", "Άννα", "Δημήτρης",
    "Σοφία"};
const std::vector<const char*> kPersonLast = {
    "Παπαδόπουλος", "Δημητρίου", "Οικονόμου", "Αλεξίου", "Καραγιάννης",
    "Βασιλείου"};
const std::vector<const char*> kLocations = {
    "Αθήνα", "Θεσσαλονίκη", "Πάτρα", "Κρήτη", "Λάρισα", "Βόλος", "Ιωάννινα",
    "Καβάλα"};

struct MentionPair {
  const char* det;
  const char* det_tag;
  const char* first;
  const char* second;
};
const std::vector<MentionPair> kOrgs = {
    {"η", "AtFeSgNm", "Τράπεζα", "Ελλάδος"},
    {"ο", "AtMaSgNm", "Δήμος", "Αθηναίων"},
    {"το", "AtNeSgNm", "Πανεπιστήμιο", "Κρήτης"},
    {"ο", "AtMaSgNm", "Οργανισμός", "Λιμένος"},
    {"το", "AtNeSgNm", "Υπουργείο", "Παιδείας"},
    {"η", "AtFeSgNm", "Εταιρεία", "Ύδρευσης"},
};
const std::vector<MentionPair> kFacs = {
    {"το", "AtNeSgNm", "Μουσείο", "Ακρόπολης"},
    {"το", "AtNeSgNm", "Στάδιο", "Ειρήνης"},
    {"η", "AtFeSgNm", "Γέφυρα", "Ρίου"},
    {"το", "AtNeSgNm", "Αεροδρόμιο", "Μακεδονίας"},
};
const std::vector<const char*> kFacSingle = {"Παρθενώνας", "Ηρώδειο"};

const std::vector<const char*> kAdverbs = {"τώρα", "εδώ", "χθες", "γρήγορα"};
const std::vector<std::pair<const char*, const char*>> kPronouns = {
    {"αυτός", "PrDe"}, {"αυτή", "PrDe"}, {"αυτό", "PrDe"}};
const std::vector<const char*> kNumerals = {"δύο", "τρία", "πέντε"};
const std::vector<std::pair<const char*, const char*>> kAdps = {
    {"σε", "ApPp"}, {"από", "ApPp"}, {"με", "ApPp"}, {"για", "ApPp"}};

TagMap build_builtin_tag_map() {
  TagMap map;
  auto add = [&](const std::string& fine, const std::string& upos,
                 MorphFeatures morph) {
    map.entries[fine] = TagEntry{upos, std::move(morph)};
  };
  const std::array<std::pair<const char*, const char*>, 3> genders = {
      {{"Ma", "Masc"}, {"Fe", "Fem"}, {"Ne", "Neut"}}};
  for (const auto& [gcode, gval] : genders) {
    add(std::string("No") + gcode + "SgNm",
        "NOUN", {{"Gender", gval}, {"Number", "Sing"}, {"Case", "Nom"}});
    add(std::string("No") + gcode + "SgGe",
        "NOUN", {{"Gender", gval}, {"Number", "Sing"}, {"Case", "Gen"}});
    add(std::string("No") + gcode + "PlNm",
        "NOUN", {{"Gender", gval}, {"Number", "Plur"}, {"Case", "Nom"}});
    add(std::string("At") + gcode + "SgNm",
        "DET", {{"Gender", gval}, {"Number", "Sing"}, {"Case", "Nom"}});
    add(std::string("At") + gcode + "SgGe",
        "DET", {{"Gender", gval}, {"Number", "Sing"}, {"Case", "Gen"}});
    add(std::string("At") + gcode + "PlNm",
        "DET", {{"Gender", gval}, {"Number", "Plur"}, {"Case", "Nom"}});
  }
  for (const char* person : {"01", "02", "03"})
    for (const char* number : {"Sg", "Pl"})
      add(std::string("Vb") + person + number, "VERB",
          {{"Person", std::string(1, person[1])},
           {"Number", number[0] == 'S' ? "Sing" : "Plur"}});
  add("PnPr", "PROPN", {});
  add("ApPp", "ADP", {});
  add("CjCo", "CCONJ", {});
  add("AdXx", "ADV", {});
  add("PrDe", "PRON", {});
  add("NmCd", "NUM", {});
  add("PuTe", "PUNCT", {});
  add("PuCm", "PUNCT", {});
  return map;
}

}  // namespace

const TagMap& builtin_tag_map() {
  static const TagMap map = build_builtin_tag_map();
  return map;
}

namespace {

class Generator {
 public:
  Generator(std::uint64_t seed, bool oov_split, std::size_t n_sentences)
      : rng_(seed), families_(make_noun_families()) {
    // Reserve a fifth of the open-class stems for the tail of the corpus.
    for (auto& fam : families_) {
      split_reserved(fam.stems, fam_open_.emplace_back(),
                     fam_reserved_.emplace_back(), oov_split);
    }
    split_reserved(kVerbStems, verb_open_, verb_reserved_, oov_split);
    tail_start_ = oov_split ? (n_sentences * 7) / 10 : n_sentences;
  }

  Sentence sentence(std::size_t index) {
    in_tail_ = index >= tail_start_;
    sent_ = Sentence{};
    switch (rng_.next_below(8)) {
      case 0: plain_clause(); break;
      case 1: person_clause(); break;
      case 2: mention_clause(kOrgs, "ORG"); break;
      case 3: mention_clause(kFacs, "FAC"); break;
      case 4: fac_single_clause(); break;
      case 5: pronoun_clause(); break;
      case 6: numeral_clause(); break;
      default: genitive_clause(); break;
    }
    token(".", "PuTe");
    return std::move(sent_);
  }

 private:
  template <typename T>
  void split_reserved(const std::vector<T>& stems, std::vector<T>& open,
                      std::vector<T>& reserved, bool oov_split) {
    std::vector<T> shuffled = stems;
    rng_.shuffle(shuffled);
    const std::size_t n_res = oov_split ? shuffled.size() / 5 : 0;
    reserved.assign(shuffled.begin(), shuffled.begin() + n_res);
    open.assign(shuffled.begin() + n_res, shuffled.end());
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[rng_.next_below(v.size())];
  }

  const char* pick_stem(const std::vector<const char*>& open,
                        const std::vector<const char*>& reserved) {
    if (in_tail_ && !reserved.empty() && rng_.next_below(2) == 0)
      return pick(reserved);
    return pick(open);
  }

  void token(std::string form, const std::string& fine,
             std::string entity = "O") {
    const TagEntry* e = builtin_tag_map().lookup(fine);
    if (!e) throw data_error("synthetic grammar: unknown fine tag " + fine);
    sent_.tokens.push_back(
        Token{std::move(form), fine, e->upos, e->morph, std::move(entity)});
  }

  // Noun phrase: article + inflected noun. slot: 0 NomSg, 1 GenSg, 2 NomPl.
  void noun_phrase(std::size_t slot) {
    std::size_t f = rng_.next_below(families_.size());
    const NounFamily& fam = families_[f];
    const char* stem = pick_stem(fam_open_[f], fam_reserved_[f]);
    token(fam.dets[slot], fam.det_tags[slot]);
    token(std::string(stem) + fam.endings[slot], fam.tags[slot]);
  }

  void verb(std::size_t slot) {
    const char* stem = pick_stem(verb_open_, verb_reserved_);
    token(std::string(stem) + kVerbEndings[slot], kVerbTags[slot]);
  }

  void plain_clause() {
    noun_phrase(0);
    verb(2);
    noun_phrase(rng_.next_below(2) == 0 ? 0 : 2);
  }

  void person_clause() {
    if (rng_.next_below(2) == 0) {
      token(pick(kPersonFirst), "PnPr", "U-PERSON");
    } else {
      token(pick(kPersonFirst), "PnPr", "B-PERSON");
      token(pick(kPersonLast), "PnPr", "L-PERSON");
    }
    verb(2);
    const auto& adp = pick(kAdps);
    token(adp.first, adp.second);
    token(pick(kLocations), "PnPr", "U-LOC");
  }

  void mention_clause(const std::vector<MentionPair>& pool,
                      const std::string& cls) {
    const MentionPair& m = pool[rng_.next_below(pool.size())];
    token(m.det, m.det_tag);
    token(m.first, "PnPr", "B-" + cls);
    token(m.second, "PnPr", "L-" + cls);
    verb(2);
    noun_phrase(rng_.next_below(2) == 0 ? 0 : 2);
  }

  void fac_single_clause() {
    token("το", "AtNeSgNm");
    token(pick(kFacSingle), "PnPr", "U-FAC");
    verb(2);
    token(pick(kAdverbs), "AdXx");
  }

  void pronoun_clause() {
    const auto& pr = pick(kPronouns);
    token(pr.first, pr.second);
    verb(2);
    token("και", "CjCo");
    verb(2);
    token(pick(kAdverbs), "AdXx");
  }

  void numeral_clause() {
    noun_phrase(2);
    verb(5);
    token(pick(kNumerals), "NmCd");
    token(",", "PuCm");
    token(pick(kAdverbs), "AdXx");
  }

  void genitive_clause() {
    noun_phrase(0);
    noun_phrase(1);
    std::size_t slot = 3 + rng_.next_below(3);  // 1sg/2sg is slot 0/1
    verb(slot % kVerbEndings.size());
  }

  Rng rng_;
  std::vector<NounFamily> families_;
  std::vector<std::vector<const char*>> fam_open_, fam_reserved_;
  std::vector<const char*> verb_open_, verb_reserved_;
  std::size_t tail_start_ = 0;
  bool in_tail_ = false;
  Sentence sent_;
};

}  // namespace

Corpus generate_synthetic_corpus(std::size_t n_sentences, std::uint64_t seed,
                                 bool oov_split) {
  if (n_sentences < 1) throw config_error("n_sentences must be >= 1");
  Generator gen(seed, oov_split, n_sentences);
  Corpus corpus;
  corpus.name = "synthetic";
  corpus.sentences.reserve(n_sentences);
  for (std::size_t i = 0; i < n_sentences; ++i)
    corpus.sentences.push_back(gen.sentence(i));
  validate_corpus(corpus);
  return corpus;
}

}  // namespace morfo
