#include <doctest.h>

#include <map>

#include "morfo/errors.hpp"
#include "morfo/features.hpp"
#include "morfo/network.hpp"
#include "morfo/rng.hpp"
#include "support.hpp"

using namespace morfo;

TEST_CASE("word_shape") {
  CHECK(word_shape("Αθήνα") == "Xxxxx");
  CHECK(word_shape("COVID-19") == "XXXX-dd");
  CHECK(word_shape("2019") == "dddd");
  CHECK(word_shape("ΑΒΓΔΕΖ") == "XXXX");  // run truncation
  CHECK(word_shape("a.b") == "x.x");
}

TEST_CASE("extract_features") {
  const FeatureSet a = extract_features("Αθήνα");
  CHECK(a.norm == "αθήνα");
  CHECK(a.prefix == "Α");
  CHECK(a.suffix == "ήνα");
  CHECK(a.shape == "Xxxxx");

  const FeatureSet o = extract_features("ο");
  CHECK(o.norm == "ο");
  CHECK(o.prefix == "ο");
  CHECK(o.suffix == "ο");
  CHECK(o.shape == "x");

  const FeatureSet d = extract_features("2019");
  CHECK(d.norm == "2019");
  CHECK(d.prefix == "2");
  CHECK(d.suffix == "019");
  CHECK(d.shape == "dddd");
}

TEST_CASE("hash_row mod 1 and determinism") {
  CHECK(hash_row("anything", 1, 12345) == 0);
  CHECK(hash_row("abc", 4096, 99) == hash_row("abc", 4096, 99));
  CHECK(hash_row("abc", 4096, 99) != hash_row("abd", 4096, 99));
}

TEST_CASE("hash_row matches the independent FNV-1a-64 reference") {
  // Reference value computed with a separate FNV-1a implementation over
  // the bytes 00..00 (little-endian seed 0) followed by "abc".
  CHECK(fnv1a64("abc", 0) == 0xab20dcdb6214056bULL);
  CHECK(hash_row("abc", 1ull << 16, 0) == 1387);
}

TEST_CASE("hash_row distributes over rows") {
  Rng rng(1234);
  std::map<std::size_t, std::size_t> counts;
  const std::size_t rows = 256, n = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    std::string w;
    for (int k = 0; k < 5; ++k)
      w += static_cast<char>('a' + rng.next_below(26));
    ++counts[hash_row(w, rows, 0)];
  }
  const double mean = static_cast<double>(n) / static_cast<double>(rows);
  for (const auto& [_, c] : counts) CHECK(static_cast<double>(c) <= 3 * mean + 1);
}

namespace {

EmbedLayer zero_layer(std::size_t pretrained_dim) {
  EmbedLayer layer;
  layer.norm = HashEmbedTable(50, 8, 1);
  layer.prefix = HashEmbedTable(20, 4, 2);
  layer.suffix = HashEmbedTable(20, 4, 3);
  layer.shape = HashEmbedTable(20, 4, 4);
  layer.pretrained_dim = pretrained_dim;
  layer.proj_w = Tensor(layer.input_dim(), 16);
  layer.proj_b = Tensor(1, 16);
  return layer;
}

Sentence make_sentence(const std::vector<std::string>& forms) {
  Sentence s;
  for (const auto& f : forms) s.tokens.push_back(Token{f, "", "", {}, "O"});
  return s;
}

}  // namespace

TEST_CASE("embed_sequence zero weights give zero rows") {
  VectorTable vt;
  vt.dim = 3;
  const Tensor h = embed_sequence(make_sentence({"α", "β"}), zero_layer(3), vt);
  REQUIRE(h.rows == 2);
  for (double v : h.v) CHECK(v == 0.0);
}

TEST_CASE("embed_sequence row count and per-token purity") {
  EmbedLayer layer = zero_layer(2);
  Rng rng(5);
  for (double& v : layer.proj_w.v) v = rng.next_range(-1, 1);
  for (double& v : layer.norm.weights.v) v = rng.next_range(-1, 1);
  VectorTable vt;
  vt.dim = 2;
  vt.entries["αθήνα"] = {0.5, -0.5};

  const Tensor h5 =
      embed_sequence(make_sentence({"a", "b", "c", "d", "e"}), layer, vt);
  CHECK(h5.rows == 5);

  const Tensor h1 = embed_sequence(make_sentence({"Αθήνα", "x", "Αθήνα"}),
                                   layer, vt);
  for (std::size_t k = 0; k < h1.cols; ++k)
    CHECK(h1.at(0, k) == h1.at(2, k));

  // Row for a token does not depend on its neighbors.
  const Tensor other = embed_sequence(make_sentence({"Αθήνα", "y", "z"}),
                                      layer, vt);
  for (std::size_t k = 0; k < h1.cols; ++k)
    CHECK(h1.at(0, k) == other.at(0, k));
}

TEST_CASE("embed_sequence rejects dimension mismatch") {
  VectorTable vt;
  vt.dim = 7;
  CHECK_THROWS_AS(embed_sequence(make_sentence({"a"}), zero_layer(3), vt),
                  config_error);
}

TEST_CASE("embed_sequence matches the cached training-path forward") {
  ModelConfig cfg;
  cfg.width = 12;
  cfg.depth = 1;
  cfg.attn_window = 1;
  cfg.n_tags = 3;
  cfg.norm_rows = 30;
  cfg.norm_dim = 6;
  cfg.affix_rows = 10;
  cfg.affix_dim = 3;
  std::vector<TrainItem> batch;
  const PipelineModel model = make_gradcheck_model(cfg, 77, batch);
  for (const TrainItem& item : batch) {
    const Tensor a =
        embed_sequence(item.sentence, model.embed, model.pretrained);
    // encode with all-zero dropout on an h equal to the embed output must
    // start from the same values; compare through the public pipeline.
    Rng rng(0);
    const Tensor enc = encode(a, model, 0.0, rng);
    const Tensor probs = predict(attend(enc, model), model);
    const Tensor direct = forward_probs(model, item.sentence);
    REQUIRE(probs.v.size() == direct.v.size());
    for (std::size_t i = 0; i < probs.v.size(); ++i)
      CHECK(probs.v[i] == doctest::Approx(direct.v[i]).epsilon(1e-12));
  }
}
