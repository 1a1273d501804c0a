#include "morfo/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "morfo/errors.hpp"
#include "morfo/rng.hpp"
#include "morfo/utf8.hpp"

namespace morfo {

using nlohmann::json;

bool is_upos_code(const std::string& s) {
  return std::find(kUposCodes.begin(), kUposCodes.end(), s) != kUposCodes.end();
}

static bool is_entity_class(const std::string& s) {
  return std::find(kEntityClasses.begin(), kEntityClasses.end(), s) !=
         kEntityClasses.end();
}

const TagEntry* TagMap::lookup(const std::string& fine_tag) const {
  auto it = entries.find(fine_tag);
  return it == entries.end() ? nullptr : &it->second;
}

void validate_entity_label(const std::string& label) {
  if (label == "O") return;
  if (label.size() >= 3 && label[1] == '-' &&
      (label[0] == 'B' || label[0] == 'I' || label[0] == 'L' ||
       label[0] == 'U') &&
      is_entity_class(label.substr(2)))
    return;
  throw data_error("invalid entity label '" + label + "'");
}

void validate_bilou_sequence(const Sentence& sentence, std::size_t sent_index) {
  // open_class empty means no span in progress.
  std::string open_class;
  auto fail = [&](const std::string& what) {
    throw data_error("sentence " + std::to_string(sent_index) +
                     ": invalid BILOU sequence (" + what + ")");
  };
  for (const Token& tok : sentence.tokens) {
    validate_entity_label(tok.entity);
    const char head = tok.entity[0];
    const std::string cls = tok.entity == "O" ? "" : tok.entity.substr(2);
    switch (head) {
      case 'O':
        if (!open_class.empty()) fail("O inside span");
        break;
      case 'U':
        if (!open_class.empty()) fail("U inside span");
        break;
      case 'B':
        if (!open_class.empty()) fail("B inside span");
        open_class = cls;
        break;
      case 'I':
        if (open_class != cls) fail("I without matching B");
        break;
      case 'L':
        if (open_class != cls) fail("L without matching B");
        open_class.clear();
        break;
      default:
        break;
    }
  }
  if (!open_class.empty()) fail("unterminated span");
}

void validate_corpus(const Corpus& corpus) {
  for (std::size_t si = 0; si < corpus.sentences.size(); ++si) {
    const Sentence& s = corpus.sentences[si];
    for (const Token& t : s.tokens) {
      if (t.form.empty())
        throw data_error("sentence " + std::to_string(si) + ": empty form");
      if (t.form.find('\t') != std::string::npos ||
          t.form.find('\n') != std::string::npos)
        throw data_error("sentence " + std::to_string(si) +
                         ": form contains tab or newline");
      if (!t.upos.empty() && !is_upos_code(t.upos))
        throw data_error("sentence " + std::to_string(si) +
                         ": unknown POS code " + t.upos);
    }
    validate_bilou_sequence(s, si);
  }
}

static MorphFeatures parse_morph(const std::string& field, std::size_t lineno) {
  MorphFeatures out;
  if (field.empty() || field == "_") return out;
  std::size_t pos = 0;
  while (pos <= field.size()) {
    std::size_t bar = field.find('|', pos);
    std::string item = field.substr(pos, bar == std::string::npos
                                             ? std::string::npos
                                             : bar - pos);
    std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
      throw data_error("line " + std::to_string(lineno) +
                       ": malformed morph item '" + item + "'");
    out[item.substr(0, eq)] = item.substr(eq + 1);
    if (bar == std::string::npos) break;
    pos = bar + 1;
  }
  return out;
}

static std::string morph_to_string(const MorphFeatures& morph) {
  if (morph.empty()) return "_";
  std::string out;
  for (const auto& [k, v] : morph) {
    if (!out.empty()) out += '|';
    out += k + "=" + v;
  }
  return out;
}

Corpus parse_corpus_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path);
  Corpus corpus;
  corpus.name = path;
  Sentence current;
  std::string line;
  std::size_t lineno = 0;
  auto flush = [&]() {
    if (!current.tokens.empty()) {
      corpus.sentences.push_back(std::move(current));
      current = Sentence{};
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    std::vector<std::string> cols;
    std::size_t pos = 0;
    while (true) {
      std::size_t tab = line.find('\t', pos);
      cols.push_back(line.substr(
          pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (cols.size() != 4 && cols.size() != 5)
      throw data_error("line " + std::to_string(lineno) +
                       ": expected 4 or 5 columns, got " +
                       std::to_string(cols.size()));
    Token tok;
    tok.form = cols[0];
    utf8::decode(tok.form);  // rejects non-UTF-8 early
    if (cols[1] != "_") tok.fine_tag = cols[1];
    if (cols[2] != "_") tok.upos = cols[2];
    tok.entity = cols[3] == "_" ? "O" : cols[3];
    if (cols.size() == 5) tok.morph = parse_morph(cols[4], lineno);
    current.tokens.push_back(std::move(tok));
  }
  flush();
  validate_corpus(corpus);
  return corpus;
}

void write_corpus_tsv(const Corpus& corpus, const std::string& path) {
  validate_corpus(corpus);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  for (const Sentence& s : corpus.sentences) {
    for (const Token& t : s.tokens) {
      out << t.form << '\t' << (t.fine_tag.empty() ? "_" : t.fine_tag) << '\t'
          << (t.upos.empty() ? "_" : t.upos) << '\t' << t.entity;
      if (!t.morph.empty()) out << '\t' << morph_to_string(t.morph);
      out << '\n';
    }
    out << '\n';
  }
  if (!out) throw data_error("I/O failure writing " + path);
}

TagMap parse_tag_map_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw data_error(std::string("tag map: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw data_error("tag map: expected a JSON object");
  static const std::array<const char*, 9> kMorphKeys = {
      "Gender", "Number", "Case", "Tense", "Person",
      "Mood",   "Voice",  "Degree", "Aspect"};
  TagMap map;
  std::map<std::string, std::string> prefix_upos;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string fine = it.key();
    if (fine.size() < 2)
      throw data_error("tag map: fine tag '" + fine + "' shorter than 2 chars");
    const json& val = it.value();
    if (!val.is_object() || !val.contains("pos"))
      throw data_error("tag map: entry '" + fine + "' missing \"pos\"");
    TagEntry entry;
    entry.upos = val.at("pos").get<std::string>();
    if (!is_upos_code(entry.upos)) {
      std::string codes;
      for (const char* c : kUposCodes) codes += std::string(c) + " ";
      throw data_error("tag map: unknown POS code " + entry.upos +
                       " (valid: " + codes + ")");
    }
    if (val.contains("morph")) {
      for (auto mit = val.at("morph").begin(); mit != val.at("morph").end();
           ++mit) {
        if (std::find(kMorphKeys.begin(), kMorphKeys.end(), mit.key()) ==
            kMorphKeys.end())
          throw data_error("tag map: unknown morph key " + mit.key());
        entry.morph[mit.key()] = mit.value().get<std::string>();
      }
    }
    const std::string prefix = fine.substr(0, 2);
    auto [pit, inserted] = prefix_upos.emplace(prefix, entry.upos);
    if (!inserted && pit->second != entry.upos)
      throw data_error("tag map: prefix '" + prefix +
                       "' maps to two POS codes (" + pit->second + ", " +
                       entry.upos + ")");
    if (!map.entries.emplace(fine, std::move(entry)).second)
      throw data_error("tag map: duplicate fine tag '" + fine + "'");
  }
  return map;
}

TagMap load_tag_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_tag_map_json(ss.str());
}

std::string tag_map_to_json(const TagMap& map) {
  json doc = json::object();
  for (const auto& [fine, entry] : map.entries) {
    json e;
    e["pos"] = entry.upos;
    if (!entry.morph.empty()) {
      json m = json::object();
      for (const auto& [k, v] : entry.morph) m[k] = v;
      e["morph"] = m;
    }
    doc[fine] = e;
  }
  return doc.dump(2) + "\n";
}

std::tuple<Corpus, Corpus, Corpus> split_corpus(const Corpus& corpus,
                                                const SplitSpec& spec) {
  if (spec.train_frac <= 0 || spec.test_frac < 0 || spec.dev_frac < 0 ||
      std::abs(spec.train_frac + spec.test_frac + spec.dev_frac - 1.0) > 1e-9)
    throw config_error("split fractions must be positive and sum to 1");
  const std::size_t n = corpus.sentences.size();
  if (n < 3) throw data_error("split requires at least 3 sentences");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  rng.shuffle(order);
  const auto n_train = static_cast<std::size_t>(spec.train_frac * n);
  const auto n_test = static_cast<std::size_t>(spec.test_frac * n);
  Corpus train, test, dev;
  train.name = corpus.name + ".train";
  test.name = corpus.name + ".test";
  dev.name = corpus.name + ".dev";
  for (std::size_t i = 0; i < n; ++i) {
    const Sentence& s = corpus.sentences[order[i]];
    if (i < n_train)
      train.sentences.push_back(s);
    else if (i < n_train + n_test)
      test.sentences.push_back(s);
    else
      dev.sentences.push_back(s);
  }
  return {std::move(train), std::move(test), std::move(dev)};
}

}  // namespace morfo
