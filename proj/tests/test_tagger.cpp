#include <doctest.h>

#include "morfo/corpus.hpp"
#include "morfo/errors.hpp"
#include "morfo/tagger.hpp"
#include "support.hpp"

using namespace morfo;

namespace {

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.width = 16;
  cfg.depth = 1;
  cfg.attn_window = 1;
  cfg.norm_rows = 200;
  cfg.norm_dim = 12;
  cfg.affix_rows = 50;
  cfg.affix_dim = 6;
  cfg.epochs = 40;
  cfg.learning_rate = 0.02;
  cfg.seed = 3;
  return cfg;
}

}  // namespace

TEST_CASE("gold_tag per mode") {
  const TagMap& map = builtin_tag_map();
  Token t{"νερό", "NoNeSgNm", "NOUN", {}, "O"};
  CHECK(gold_tag(t, TagMode::kSupertag, map) == "NoNeSgNm");
  CHECK(gold_tag(t, TagMode::kUpos, map) == "NOUN");

  Token missing{"x", "", "", {}, "O"};
  CHECK_THROWS_AS(gold_tag(missing, TagMode::kSupertag, map), data_error);
  CHECK_THROWS_AS(gold_tag(missing, TagMode::kUpos, map), data_error);

  // UPOS is derivable from the fine tag alone.
  Token derived{"x", "Vb01Sg", "", {}, "O"};
  CHECK(gold_tag(derived, TagMode::kUpos, map) == "VERB");
}

TEST_CASE("train_tagger overfits a single sentence") {
  Corpus c = generate_synthetic_corpus(3, 4, false);
  Corpus one;
  one.sentences.push_back(c.sentences[0]);
  const PipelineModel model =
      train_tagger(one, one, tiny_config(), VectorTable{},
                   builtin_tag_map(), TagMode::kSupertag);
  const std::vector<std::string> pred = tag(model, one.sentences[0]);
  REQUIRE(pred.size() == one.sentences[0].tokens.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    CHECK(pred[i] == one.sentences[0].tokens[i].fine_tag);
}

TEST_CASE("training is deterministic end to end") {
  const Corpus c = generate_synthetic_corpus(12, 6, false);
  SplitSpec spec;
  spec.seed = 1;
  auto [train, test, dev] = split_corpus(c, spec);
  ModelConfig cfg = tiny_config();
  cfg.epochs = 3;
  auto run = [&] {
    return train_tagger(train, dev, cfg, VectorTable{}, builtin_tag_map(),
                        TagMode::kUpos);
  };
  const PipelineModel a = run(), b = run();
  auto pa = a.params(), pb = b.params();
  for (std::size_t t = 0; t < pa.size(); ++t) CHECK(pa[t]->v == pb[t]->v);
  CHECK(a.tag_inventory == b.tag_inventory);
}

TEST_CASE("score_token_classification hand-checked case") {
  // gold A A B, pred A B B:
  //  A: tp 1 fp 0 fn 1 -> P 1, R 1/2, F1 2/3
  //  B: tp 1 fp 1 fn 0 -> P 1/2, R 1, F1 2/3
  const TagEvalReport r = score_token_classification({"A", "A", "B"},
                                                     {"A", "B", "B"});
  CHECK(r.per_class.at("A").precision == doctest::Approx(1.0));
  CHECK(r.per_class.at("A").recall == doctest::Approx(0.5));
  CHECK(r.per_class.at("A").f1 == doctest::Approx(2.0 / 3.0));
  CHECK(r.per_class.at("B").precision == doctest::Approx(0.5));
  CHECK(r.per_class.at("B").recall == doctest::Approx(1.0));
  CHECK(r.macro_f1 == doctest::Approx(2.0 / 3.0));
  CHECK(r.micro_accuracy == doctest::Approx(2.0 / 3.0));
  CHECK(r.weighted_f1 == doctest::Approx(2.0 / 3.0));
  CHECK(r.n_tokens == 3);
}

TEST_CASE("score_token_classification treats 0/0 as 0 and skips empty classes") {
  // Class C is predicted but never gold: P 0, R 0/0 = 0, support 0 -> not in
  // the macro average.
  const TagEvalReport r =
      score_token_classification({"A", "A"}, {"A", "C"});
  CHECK(r.per_class.at("C").support == 0);
  CHECK(r.per_class.at("C").recall == 0.0);
  CHECK(r.macro_f1 == doctest::Approx(2.0 / 3.0));  // only A counts
}

TEST_CASE("oov accuracy uses the mask") {
  const std::vector<bool> oov = {false, true, true};
  const TagEvalReport r = score_token_classification({"A", "A", "B"},
                                                     {"B", "A", "B"}, &oov);
  CHECK(r.n_oov_tokens == 2);
  CHECK(r.oov_accuracy == doctest::Approx(1.0));
}

TEST_CASE("evaluate_tagger on an empty test set throws") {
  const Corpus c = generate_synthetic_corpus(4, 2, false);
  Corpus one;
  one.sentences.push_back(c.sentences[0]);
  ModelConfig cfg = tiny_config();
  cfg.epochs = 1;
  const PipelineModel model = train_tagger(
      one, one, cfg, VectorTable{}, builtin_tag_map(), TagMode::kUpos);
  CHECK_THROWS_AS(evaluate_tagger(model, Corpus{}, {}), data_error);
}

TEST_CASE("tag_report_to_json carries the headline figures") {
  TagEvalReport r;
  r.macro_f1 = 0.5;
  r.micro_accuracy = 0.75;
  r.n_tokens = 4;
  const std::string js = tag_report_to_json(r);
  CHECK(js.find("\"macro\"") != std::string::npos);
  CHECK(js.find("\"micro_accuracy\"") != std::string::npos);
  CHECK(js.find("0.75") != std::string::npos);
}
