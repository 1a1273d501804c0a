#include "morfo/ner.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "morfo/errors.hpp"
#include "morfo/utf8.hpp"

namespace morfo {

using nlohmann::json;

std::vector<std::string> bilou_encode(const std::vector<EntitySpan>& spans,
                                      std::size_t len) {
  std::vector<std::string> labels(len, "O");
  std::vector<bool> used(len, false);
  for (const EntitySpan& sp : spans) {
    if (sp.start >= sp.end || sp.end > len)
      throw data_error("span out of range");
    for (std::size_t i = sp.start; i < sp.end; ++i) {
      if (used[i])
        throw data_error("overlap at " + std::to_string(i));
      used[i] = true;
    }
    if (sp.end - sp.start == 1) {
      labels[sp.start] = "U-" + sp.cls;
    } else {
      labels[sp.start] = "B-" + sp.cls;
      for (std::size_t i = sp.start + 1; i + 1 < sp.end; ++i)
        labels[i] = "I-" + sp.cls;
      labels[sp.end - 1] = "L-" + sp.cls;
    }
  }
  return labels;
}

std::vector<EntitySpan> bilou_decode(const std::vector<std::string>& labels) {
  std::vector<EntitySpan> spans;
  // Pending B run: class and start, extended over contiguous same-class I.
  std::string open_cls;
  std::size_t open_start = 0, open_last = 0;
  auto close_open = [&]() {
    if (open_cls.empty()) return;
    spans.push_back({open_start, open_last + 1, open_cls});
    open_cls.clear();
  };
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::string& lab = labels[i];
    const char head = lab.empty() ? 'O' : lab[0];
    const std::string cls = lab.size() > 2 ? lab.substr(2) : "";
    switch (head) {
      case 'B':
        close_open();
        open_cls = cls;
        open_start = open_last = i;
        break;
      case 'I':
        if (!open_cls.empty() && open_cls == cls) {
          open_last = i;
        } else {
          close_open();
          spans.push_back({i, i + 1, cls});  // repaired to U
        }
        break;
      case 'L':
        if (!open_cls.empty() && open_cls == cls) {
          spans.push_back({open_start, i + 1, open_cls});
          open_cls.clear();
        } else {
          close_open();
          spans.push_back({i, i + 1, cls});  // repaired to U
        }
        break;
      case 'U':
        close_open();
        spans.push_back({i, i + 1, cls});
        break;
      default:
        close_open();
        break;
    }
  }
  close_open();
  return spans;
}

namespace {

std::string join_surface(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

bool is_noise_surface(const std::vector<std::string>& tokens) {
  if (tokens.size() > 10) return true;
  const std::string joined = join_surface(tokens);
  const auto cps = utf8::decode(joined);
  if (tokens.size() == 1 && cps.size() == 1) return true;
  bool all_punct = true, all_digit = true;
  for (char32_t cp : cps) {
    if (cp == U' ') continue;
    if (utf8::is_letter(cp) || utf8::is_digit(cp)) all_punct = false;
    if (!utf8::is_digit(cp)) all_digit = false;
  }
  return all_punct || all_digit;
}

std::size_t class_priority(const std::string& cls) {
  if (cls == "PERSON") return 0;
  if (cls == "ORG") return 1;
  if (cls == "LOC") return 2;
  return 3;  // FAC
}

}  // namespace

KeywordList build_keyword_list(const Corpus& corpus) {
  // surface -> class -> frequency
  std::map<std::vector<std::string>, std::map<std::string, std::size_t>> seen;
  for (const Sentence& s : corpus.sentences) {
    std::vector<std::string> labels;
    for (const Token& t : s.tokens) labels.push_back(t.entity);
    for (const EntitySpan& sp : bilou_decode(labels)) {
      std::vector<std::string> surface;
      for (std::size_t i = sp.start; i < sp.end; ++i)
        surface.push_back(s.tokens[i].form);
      ++seen[surface][sp.cls];
    }
  }
  KeywordList list;
  for (const auto& [surface, classes] : seen) {
    if (is_noise_surface(surface)) continue;
    std::string best_cls;
    std::size_t best_freq = 0;
    for (const auto& [cls, freq] : classes) {
      if (freq > best_freq ||
          (freq == best_freq &&
           class_priority(cls) < class_priority(best_cls))) {
        best_cls = cls;
        best_freq = freq;
      }
    }
    list.records.push_back({surface, best_cls, best_freq});
  }
  std::sort(list.records.begin(), list.records.end(),
            [](const KeywordRecord& a, const KeywordRecord& b) {
              if (a.tokens.size() != b.tokens.size())
                return a.tokens.size() > b.tokens.size();
              return join_surface(a.tokens) < join_surface(b.tokens);
            });
  return list;
}

void write_keyword_list(const KeywordList& list, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  for (const KeywordRecord& r : list.records)
    out << join_surface(r.tokens) << '\t' << r.entity_class << '\t'
        << r.frequency << '\n';
  if (!out) throw data_error("I/O failure writing " + path);
}

KeywordList load_keyword_list(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path);
  KeywordList list;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string::npos ? std::string::npos
                                                : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos)
      throw data_error("keyword list line " + std::to_string(lineno) +
                       ": expected 3 columns");
    KeywordRecord rec;
    std::string surface = line.substr(0, tab1);
    std::size_t pos = 0;
    while (pos <= surface.size()) {
      const auto sp = surface.find(' ', pos);
      rec.tokens.push_back(surface.substr(
          pos, sp == std::string::npos ? std::string::npos : sp - pos));
      if (sp == std::string::npos) break;
      pos = sp + 1;
    }
    rec.entity_class = line.substr(tab1 + 1, tab2 - tab1 - 1);
    rec.frequency = std::stoull(line.substr(tab2 + 1));
    list.records.push_back(std::move(rec));
  }
  return list;
}

std::vector<EntitySpan> project_keywords(const std::vector<std::string>& tokens,
                                         const KeywordList& list) {
  std::unordered_map<std::string, const KeywordRecord*> index;
  std::size_t max_len = 0;
  for (const KeywordRecord& r : list.records) {
    index.emplace(join_surface(r.tokens), &r);
    max_len = std::max(max_len, r.tokens.size());
  }
  std::vector<EntitySpan> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    bool matched = false;
    const std::size_t cap = std::min(max_len, tokens.size() - i);
    for (std::size_t len = cap; len >= 1 && !matched; --len) {
      std::string key;
      for (std::size_t k = 0; k < len; ++k) {
        if (k) key += ' ';
        key += tokens[i + k];
      }
      auto it = index.find(key);
      if (it != index.end()) {
        out.push_back({i, i + len, it->second->entity_class});
        i += len;
        matched = true;
      }
    }
    if (!matched) ++i;
  }
  return out;
}

Corpus annotate_corpus(const Corpus& corpus, const KeywordList& list) {
  Corpus out = corpus;
  for (Sentence& s : out.sentences) {
    std::vector<std::string> forms;
    for (const Token& t : s.tokens) forms.push_back(t.form);
    const auto labels =
        bilou_encode(project_keywords(forms, list), forms.size());
    for (std::size_t i = 0; i < s.tokens.size(); ++i)
      s.tokens[i].entity = labels[i];
  }
  return out;
}

namespace {

std::vector<std::string> gold_pos_feature(const Sentence& s) {
  std::vector<std::string> out;
  for (const Token& t : s.tokens)
    out.push_back(!t.fine_tag.empty() ? t.fine_tag
                                      : (!t.upos.empty() ? t.upos : "_"));
  return out;
}

std::vector<std::string> pos_feature_for(const Sentence& s,
                                         bool use_pos,
                                         PosSource source,
                                         const PipelineModel* pos_model) {
  if (!use_pos) return {};
  if (source == PosSource::kGold) return gold_pos_feature(s);
  if (!pos_model)
    throw config_error("pos_source=model requires a tagger model");
  std::vector<std::string> out;
  for (std::size_t i : predict_indices(*pos_model, s))
    out.push_back(pos_model->tag_inventory[i]);
  return out;
}

}  // namespace

PipelineModel train_ner(const Corpus& train, const Corpus& dev,
                        const ModelConfig& config,
                        const VectorTable& pretrained, bool use_pos_feature,
                        PosSource pos_source, const PipelineModel* pos_model,
                        TrainLog* log, bool verbose) {
  std::set<std::string> labels;
  std::set<std::string> vocab;
  for (const Sentence& s : train.sentences)
    for (const Token& t : s.tokens) {
      labels.insert(t.entity);
      vocab.insert(t.form);
    }
  if (labels.empty()) throw data_error("training corpus carries no labels");
  std::vector<std::string> inventory(labels.begin(), labels.end());
  std::map<std::string, std::size_t> label_index;
  for (std::size_t i = 0; i < inventory.size(); ++i)
    label_index[inventory[i]] = i;

  ModelConfig cfg = config;
  cfg.use_pos = use_pos_feature;
  auto to_items = [&](const Corpus& c) {
    std::vector<TrainItem> items;
    for (const Sentence& s : c.sentences) {
      TrainItem item;
      item.sentence = s;
      item.pos = pos_feature_for(s, use_pos_feature, pos_source, pos_model);
      for (const Token& t : s.tokens) {
        auto it = label_index.find(t.entity);
        item.gold.push_back(it == label_index.end() ? 0 : it->second);
      }
      items.push_back(std::move(item));
    }
    return items;
  };
  return train_pipeline(to_items(train), to_items(dev), cfg, pretrained,
                        std::move(inventory), "ner",
                        {vocab.begin(), vocab.end()}, log, verbose);
}

std::vector<std::string> ner_labels(const PipelineModel& model,
                                    const Sentence& sentence,
                                    const PipelineModel* pos_model) {
  const auto pos = pos_feature_for(sentence, model.config.use_pos,
                                   pos_model ? PosSource::kModel
                                             : PosSource::kGold,
                                   pos_model);
  const auto idx =
      predict_indices(model, sentence, pos.empty() ? nullptr : &pos);
  std::vector<std::string> raw;
  raw.reserve(idx.size());
  for (std::size_t i : idx) raw.push_back(model.tag_inventory[i]);
  return bilou_encode(bilou_decode(raw), raw.size());
}

NerEvalReport evaluate_ner(const PipelineModel& model, const Corpus& test,
                           const PipelineModel* pos_model) {
  if (test.sentences.empty()) throw data_error("empty test set");
  auto token_classes = [](const std::vector<std::string>& labels) {
    std::vector<std::string> out(labels.size(), "NonEntity");
    for (const EntitySpan& sp : bilou_decode(labels))
      for (std::size_t i = sp.start; i < sp.end; ++i) out[i] = sp.cls;
    return out;
  };
  std::vector<std::string> gold, pred;
  std::size_t span_tp = 0, span_gold = 0, span_pred = 0;
  for (const Sentence& s : test.sentences) {
    std::vector<std::string> gold_labels;
    for (const Token& t : s.tokens) gold_labels.push_back(t.entity);
    const auto pred_labels = ner_labels(model, s, pos_model);
    for (const auto& c : token_classes(gold_labels)) gold.push_back(c);
    for (const auto& c : token_classes(pred_labels)) pred.push_back(c);

    auto gs = bilou_decode(gold_labels);
    auto ps = bilou_decode(pred_labels);
    std::sort(gs.begin(), gs.end());
    std::sort(ps.begin(), ps.end());
    std::vector<EntitySpan> inter;
    std::set_intersection(gs.begin(), gs.end(), ps.begin(), ps.end(),
                          std::back_inserter(inter));
    span_tp += inter.size();
    span_gold += gs.size();
    span_pred += ps.size();
  }
  const TagEvalReport flat = score_token_classification(gold, pred);
  NerEvalReport rep;
  rep.per_class = flat.per_class;
  rep.macro_f1 = flat.macro_f1;
  rep.n_tokens = flat.n_tokens;
  const double sp = span_pred ? static_cast<double>(span_tp) / span_pred : 0;
  const double sr = span_gold ? static_cast<double>(span_tp) / span_gold : 0;
  rep.span_f1 = sp + sr > 0 ? 2 * sp * sr / (sp + sr) : 0;
  return rep;
}

std::string ner_report_to_json(const NerEvalReport& report) {
  json per = json::object();
  for (const auto& [cls, s] : report.per_class)
    per[cls] = {{"precision", s.precision},
                {"recall", s.recall},
                {"f1", s.f1},
                {"support", s.support}};
  json doc = {{"per_class", per},
              {"macro_f1", report.macro_f1},
              {"span_f1", report.span_f1},
              {"n_tokens", report.n_tokens}};
  return doc.dump(2) + "\n";
}

}  // namespace morfo
