#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "morfo/corpus.hpp"
#include "morfo/network.hpp"

namespace morfo {

struct ClassScore {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;
};

struct TagEvalReport {
  std::map<std::string, ClassScore> per_class;
  double macro_p = 0, macro_r = 0, macro_f1 = 0;
  double weighted_f1 = 0;
  double micro_accuracy = 0;
  double oov_accuracy = 1.0;
  std::size_t n_tokens = 0;
  std::size_t n_oov_tokens = 0;
};

enum class TagMode { kSupertag, kUpos };

// Gold tag of a token under the given mode; throws data_error when it is not
// derivable.
std::string gold_tag(const Token& token, TagMode mode, const TagMap& map);

PipelineModel train_tagger(const Corpus& train, const Corpus& dev,
                           const ModelConfig& config,
                           const VectorTable& pretrained, const TagMap& map,
                           TagMode mode, TrainLog* log = nullptr,
                           bool verbose = false);

std::vector<std::string> tag(const PipelineModel& model,
                             const Sentence& sentence);

TagEvalReport evaluate_tagger(const PipelineModel& model, const Corpus& test,
                              const std::set<std::string>& train_vocab);

// P/R/F1 bookkeeping shared with the NER evaluator. 0/0 counts as 0; macro
// averages skip zero-support classes.
TagEvalReport score_token_classification(
    const std::vector<std::string>& gold, const std::vector<std::string>& pred,
    const std::vector<bool>* oov_mask = nullptr);

std::string tag_report_to_json(const TagEvalReport& report);

}  // namespace morfo
