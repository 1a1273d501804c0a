#include "morfo/tagger.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "morfo/errors.hpp"

namespace morfo {

using nlohmann::json;

std::string gold_tag(const Token& token, TagMode mode, const TagMap& map) {
  if (mode == TagMode::kSupertag) {
    if (token.fine_tag.empty())
      throw data_error("token '" + token.form + "' has no fine tag");
    return token.fine_tag;
  }
  if (!token.upos.empty()) return token.upos;
  if (!token.fine_tag.empty()) {
    if (const TagEntry* e = map.lookup(token.fine_tag)) return e->upos;
    throw data_error("fine tag '" + token.fine_tag + "' not in tag map");
  }
  throw data_error("token '" + token.form + "' has no UPOS and no fine tag");
}

namespace {

std::vector<TrainItem> corpus_to_items(const Corpus& corpus, TagMode mode,
                                       const TagMap& map,
                                       const std::map<std::string, std::size_t>&
                                           tag_index) {
  std::vector<TrainItem> items;
  items.reserve(corpus.sentences.size());
  for (const Sentence& s : corpus.sentences) {
    TrainItem item;
    item.sentence = s;
    for (const Token& t : s.tokens) {
      const std::string g = gold_tag(t, mode, map);
      auto it = tag_index.find(g);
      // Dev tags outside the train inventory are mapped to slot 0; they can
      // never be predicted correctly, which is the intended penalty.
      item.gold.push_back(it == tag_index.end() ? 0 : it->second);
    }
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace

PipelineModel train_tagger(const Corpus& train, const Corpus& dev,
                           const ModelConfig& config,
                           const VectorTable& pretrained, const TagMap& map,
                           TagMode mode, TrainLog* log, bool verbose) {
  if (dev.sentences.empty()) throw data_error("empty dev set");
  std::set<std::string> tags;
  std::set<std::string> vocab;
  for (const Sentence& s : train.sentences)
    for (const Token& t : s.tokens) {
      tags.insert(gold_tag(t, mode, map));
      vocab.insert(t.form);
    }
  if (tags.empty()) throw data_error("empty tag inventory");
  std::vector<std::string> inventory(tags.begin(), tags.end());
  std::map<std::string, std::size_t> tag_index;
  for (std::size_t i = 0; i < inventory.size(); ++i)
    tag_index[inventory[i]] = i;

  ModelConfig cfg = config;
  cfg.use_pos = false;
  const auto train_items = corpus_to_items(train, mode, map, tag_index);
  const auto dev_items = corpus_to_items(dev, mode, map, tag_index);
  return train_pipeline(train_items, dev_items, cfg, pretrained,
                        std::move(inventory),
                        mode == TagMode::kSupertag ? "supertag" : "upos",
                        {vocab.begin(), vocab.end()}, log, verbose);
}

std::vector<std::string> tag(const PipelineModel& model,
                             const Sentence& sentence) {
  if (sentence.tokens.empty()) throw data_error("cannot tag empty sentence");
  const auto idx = predict_indices(model, sentence);
  std::vector<std::string> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(model.tag_inventory[i]);
  return out;
}

TagEvalReport score_token_classification(const std::vector<std::string>& gold,
                                         const std::vector<std::string>& pred,
                                         const std::vector<bool>* oov_mask) {
  if (gold.size() != pred.size())
    throw data_error("gold/pred length mismatch");
  if (gold.empty()) throw data_error("empty test set");
  std::map<std::string, std::size_t> tp, fp, fn, support;
  std::size_t correct = 0, oov_total = 0, oov_correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++support[gold[i]];
    if (gold[i] == pred[i]) {
      ++tp[gold[i]];
      ++correct;
    } else {
      ++fp[pred[i]];
      ++fn[gold[i]];
    }
    if (oov_mask && (*oov_mask)[i]) {
      ++oov_total;
      oov_correct += gold[i] == pred[i];
    }
  }
  std::set<std::string> classes;
  for (const auto& [k, _] : support) classes.insert(k);
  for (const auto& [k, _] : fp) classes.insert(k);

  TagEvalReport rep;
  rep.n_tokens = gold.size();
  rep.micro_accuracy =
      static_cast<double>(correct) / static_cast<double>(gold.size());
  rep.n_oov_tokens = oov_total;
  rep.oov_accuracy = oov_total == 0 ? 1.0
                                    : static_cast<double>(oov_correct) /
                                          static_cast<double>(oov_total);
  double sum_p = 0, sum_r = 0, sum_f = 0, wsum_f = 0;
  std::size_t n_macro = 0, total_support = 0;
  for (const std::string& c : classes) {
    ClassScore s;
    const double tpc = static_cast<double>(tp.count(c) ? tp.at(c) : 0);
    const double fpc = static_cast<double>(fp.count(c) ? fp.at(c) : 0);
    const double fnc = static_cast<double>(fn.count(c) ? fn.at(c) : 0);
    s.support = support.count(c) ? support.at(c) : 0;
    s.precision = tpc + fpc > 0 ? tpc / (tpc + fpc) : 0;
    s.recall = tpc + fnc > 0 ? tpc / (tpc + fnc) : 0;
    s.f1 = s.precision + s.recall > 0
               ? 2 * s.precision * s.recall / (s.precision + s.recall)
               : 0;
    if (s.support > 0) {
      sum_p += s.precision;
      sum_r += s.recall;
      sum_f += s.f1;
      wsum_f += s.f1 * static_cast<double>(s.support);
      total_support += s.support;
      ++n_macro;
    }
    rep.per_class[c] = s;
  }
  if (n_macro > 0) {
    rep.macro_p = sum_p / static_cast<double>(n_macro);
    rep.macro_r = sum_r / static_cast<double>(n_macro);
    rep.macro_f1 = sum_f / static_cast<double>(n_macro);
    rep.weighted_f1 = wsum_f / static_cast<double>(total_support);
  }
  return rep;
}

TagEvalReport evaluate_tagger(const PipelineModel& model, const Corpus& test,
                              const std::set<std::string>& train_vocab) {
  if (test.sentences.empty()) throw data_error("empty test set");
  const TagMode mode =
      model.mode == "upos" ? TagMode::kUpos : TagMode::kSupertag;
  const TagMap& map = builtin_tag_map();
  std::vector<std::string> gold, pred;
  std::vector<bool> oov;
  for (const Sentence& s : test.sentences) {
    const auto tags_here = tag(model, s);
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      gold.push_back(gold_tag(s.tokens[i], mode, map));
      pred.push_back(tags_here[i]);
      oov.push_back(!train_vocab.count(s.tokens[i].form));
    }
  }
  return score_token_classification(gold, pred, &oov);
}

std::string tag_report_to_json(const TagEvalReport& report) {
  json per = json::object();
  for (const auto& [cls, s] : report.per_class)
    per[cls] = {{"precision", s.precision},
                {"recall", s.recall},
                {"f1", s.f1},
                {"support", s.support}};
  json doc = {{"per_class", per},
              {"macro", {{"precision", report.macro_p},
                         {"recall", report.macro_r},
                         {"f1", report.macro_f1}}},
              {"weighted_f1", report.weighted_f1},
              {"micro_accuracy", report.micro_accuracy},
              {"oov_accuracy", report.oov_accuracy},
              {"n_tokens", report.n_tokens},
              {"n_oov_tokens", report.n_oov_tokens}};
  return doc.dump(2) + "\n";
}

}  // namespace morfo
