#include "morfo/features.hpp"

#include <cstring>

#include "morfo/errors.hpp"
#include "morfo/utf8.hpp"

namespace morfo {

std::uint64_t fnv1a64(const std::string& key, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&](unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
  for (char c : key) mix(static_cast<unsigned char>(c));
  return h;
}

std::size_t hash_row(const std::string& key, std::size_t rows,
                     std::uint64_t seed) {
  if (rows == 0) throw config_error("hash_row: rows must be >= 1");
  return static_cast<std::size_t>(fnv1a64(key, seed) % rows);
}

std::string word_shape(const std::string& form) {
  if (form.empty()) throw data_error("word_shape: empty form");
  std::string out;
  char32_t last = 0;
  int run = 0;
  for (char32_t cp : utf8::decode(form)) {
    char32_t mapped;
    if (utf8::is_upper(cp))
      mapped = U'X';
    else if (utf8::is_lower(cp))
      mapped = U'x';
    else if (utf8::is_digit(cp))
      mapped = U'd';
    else
      mapped = cp;
    run = mapped == last ? run + 1 : 1;
    last = mapped;
    if (run <= 4) utf8::append(out, mapped);
  }
  return out;
}

FeatureSet extract_features(const std::string& form) {
  if (form.empty()) throw data_error("extract_features: empty form");
  const auto cps = utf8::decode(form);
  FeatureSet fs;
  fs.norm = utf8::lowercase(form);
  utf8::append(fs.prefix, cps.front());
  const std::size_t suf_start = cps.size() < 3 ? 0 : cps.size() - 3;
  for (std::size_t i = suf_start; i < cps.size(); ++i)
    utf8::append(fs.suffix, cps[i]);
  fs.shape = word_shape(form);
  return fs;
}

Tensor embed_sequence(const Sentence& sentence, const EmbedLayer& layer,
                      const VectorTable& pretrained,
                      const std::vector<std::string>* pos_feature) {
  if (layer.pretrained_dim != pretrained.dim)
    throw config_error("embed layer expects pretrained dim " +
                       std::to_string(layer.pretrained_dim) + ", table has " +
                       std::to_string(pretrained.dim));
  if (pos_feature && pos_feature->size() != sentence.tokens.size())
    throw config_error("pos feature length does not match sentence length");
  if (layer.pos.has_value() != (pos_feature != nullptr))
    throw config_error("pos feature presence does not match layer config");

  const std::size_t len = sentence.tokens.size();
  const std::size_t in_dim = layer.input_dim();
  const std::size_t width = layer.width();
  Tensor out(len, width);
  std::vector<double> x(in_dim);
  for (std::size_t i = 0; i < len; ++i) {
    const FeatureSet fs = extract_features(sentence.tokens[i].form);
    std::size_t off = 0;
    auto put = [&](const HashEmbedTable& t, const std::string& key) {
      const double* row = t.weights.row(hash_row(key, t.rows, t.seed));
      std::memcpy(x.data() + off, row, t.dim * sizeof(double));
      off += t.dim;
    };
    put(layer.norm, fs.norm);
    put(layer.prefix, fs.prefix);
    put(layer.suffix, fs.suffix);
    put(layer.shape, fs.shape);
    if (layer.pos) put(*layer.pos, (*pos_feature)[i]);
    if (const auto* vec = pretrained.find(fs.norm))
      std::memcpy(x.data() + off, vec->data(), pretrained.dim * sizeof(double));
    else
      std::memset(x.data() + off, 0, pretrained.dim * sizeof(double));

    double* row = out.row(i);
    for (std::size_t j = 0; j < width; ++j) {
      double acc = layer.proj_b.v[j];
      for (std::size_t k = 0; k < in_dim; ++k)
        acc += x[k] * layer.proj_w.at(k, j);
      row[j] = acc > 0.0 ? acc : 0.0;
    }
  }
  return out;
}

}  // namespace morfo
