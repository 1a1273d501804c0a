#pragma once

#include <map>
#include <tuple>
#include <string>
#include <vector>

#include "morfo/corpus.hpp"
#include "morfo/network.hpp"
#include "morfo/tagger.hpp"

namespace morfo {

struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  std::string cls;

  bool operator==(const EntitySpan&) const = default;
  bool operator<(const EntitySpan& o) const {
    return std::tie(start, end, cls) < std::tie(o.start, o.end, o.cls);
  }
};

std::vector<std::string> bilou_encode(const std::vector<EntitySpan>& spans,
                                      std::size_t len);

// Tolerant decoder: invalid sequences are repaired deterministically
// (dangling I/L become U, an unclosed B closes at the last contiguous
// same-class I). decode(encode(s)) == s on valid input.
std::vector<EntitySpan> bilou_decode(const std::vector<std::string>& labels);

struct KeywordRecord {
  std::vector<std::string> tokens;
  std::string entity_class;
  std::size_t frequency = 1;
};

struct KeywordList {
  std::vector<KeywordRecord> records;  // sorted: longer first, then surface
};

KeywordList build_keyword_list(const Corpus& corpus);

void write_keyword_list(const KeywordList& list, const std::string& path);
KeywordList load_keyword_list(const std::string& path);

// Leftmost-longest greedy projection of the list onto a token sequence.
std::vector<EntitySpan> project_keywords(
    const std::vector<std::string>& tokens, const KeywordList& list);

// Replaces the entity layer of the corpus with projected silver labels.
Corpus annotate_corpus(const Corpus& corpus, const KeywordList& list);

struct NerEvalReport {
  std::map<std::string, ClassScore> per_class;  // LOC ORG PERSON FAC NonEntity
  double macro_f1 = 0;
  double span_f1 = 0;  // exact-match spans, secondary figure
  std::size_t n_tokens = 0;
};

enum class PosSource { kGold, kModel };

PipelineModel train_ner(const Corpus& train, const Corpus& dev,
                        const ModelConfig& config,
                        const VectorTable& pretrained, bool use_pos_feature,
                        PosSource pos_source = PosSource::kGold,
                        const PipelineModel* pos_model = nullptr,
                        TrainLog* log = nullptr, bool verbose = false);

// BILOU labels after argmax + decode/re-encode repair.
std::vector<std::string> ner_labels(const PipelineModel& model,
                                    const Sentence& sentence,
                                    const PipelineModel* pos_model = nullptr);

NerEvalReport evaluate_ner(const PipelineModel& model, const Corpus& test,
                           const PipelineModel* pos_model = nullptr);

std::string ner_report_to_json(const NerEvalReport& report);

}  // namespace morfo
