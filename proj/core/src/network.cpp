#include "morfo/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "morfo/errors.hpp"
#include "morfo/utf8.hpp"

namespace morfo {

using nlohmann::json;

void ModelConfig::validate() const {
  if (width < 1 || depth < 1 || window < 1 || n_tags < 1)
    throw config_error("width, depth, window and n_tags must be >= 1");
  if (!(dropout_end >= 0 && dropout_end <= dropout_start && dropout_start < 1))
    throw config_error("need 0 <= dropout_end <= dropout_start < 1");
  if (batch_start > batch_max || batch_start < 1)
    throw config_error("need 1 <= batch_start <= batch_max");
  if (batch_factor < 1.0) throw config_error("batch_factor must be >= 1");
  if (epochs < 1) throw config_error("epochs must be >= 1");
  if (norm_rows < 1 || affix_rows < 1 || pos_rows < 1 || norm_dim < 1 ||
      affix_dim < 1 || pos_dim < 1)
    throw config_error("embedding table sizes must be >= 1");
}

std::vector<Tensor*> PipelineModel::params() {
  std::vector<Tensor*> out;
  out.push_back(&embed.norm.weights);
  out.push_back(&embed.prefix.weights);
  out.push_back(&embed.suffix.weights);
  out.push_back(&embed.shape.weights);
  if (embed.pos) out.push_back(&embed.pos->weights);
  out.push_back(&embed.proj_w);
  out.push_back(&embed.proj_b);
  for (std::size_t i = 0; i < conv_w.size(); ++i) {
    out.push_back(&conv_w[i]);
    out.push_back(&conv_b[i]);
  }
  out.push_back(&attn_query);
  out.push_back(&out_w);
  out.push_back(&out_b);
  return out;
}

std::vector<const Tensor*> PipelineModel::params() const {
  auto mutable_params = const_cast<PipelineModel*>(this)->params();
  return {mutable_params.begin(), mutable_params.end()};
}

bool PipelineModel::finite() const {
  for (const Tensor* t : params())
    if (!t->finite()) return false;
  return true;
}

namespace {

// Distinct hash seeds per feature table.
constexpr std::uint64_t kNormSeed = 1, kPrefixSeed = 2, kSuffixSeed = 3,
                        kShapeSeed = 4, kPosSeed = 5;

void glorot_init(Tensor& t, std::size_t fan_in, std::size_t fan_out,
                 Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.v) v = rng.next_range(-a, a);
}

}  // namespace

PipelineModel init_model(const ModelConfig& config,
                         std::vector<std::string> tag_inventory,
                         VectorTable pretrained, const std::string& mode) {
  ModelConfig cfg = config;
  cfg.n_tags = tag_inventory.size();
  cfg.validate();
  if (tag_inventory.empty()) throw data_error("empty tag inventory");

  PipelineModel m;
  m.config = cfg;
  m.mode = mode;
  m.tag_inventory = std::move(tag_inventory);
  m.pretrained = std::move(pretrained);

  m.embed.norm = HashEmbedTable(cfg.norm_rows, cfg.norm_dim, kNormSeed);
  m.embed.prefix = HashEmbedTable(cfg.affix_rows, cfg.affix_dim, kPrefixSeed);
  m.embed.suffix = HashEmbedTable(cfg.affix_rows, cfg.affix_dim, kSuffixSeed);
  m.embed.shape = HashEmbedTable(cfg.affix_rows, cfg.affix_dim, kShapeSeed);
  if (cfg.use_pos)
    m.embed.pos = HashEmbedTable(cfg.pos_rows, cfg.pos_dim, kPosSeed);
  m.embed.pretrained_dim = m.pretrained.dim;
  const std::size_t in_dim = m.embed.input_dim();
  m.embed.proj_w = Tensor(in_dim, cfg.width);
  m.embed.proj_b = Tensor(1, cfg.width);

  const std::size_t ctx = cfg.width * (2 * cfg.window + 1);
  for (std::size_t d = 0; d < cfg.depth; ++d) {
    m.conv_w.emplace_back(ctx, cfg.width);
    m.conv_b.emplace_back(1, cfg.width);
  }
  m.attn_query = Tensor(1, cfg.width);
  m.out_w = Tensor(cfg.width, cfg.n_tags);
  m.out_b = Tensor(1, cfg.n_tags);

  Rng rng(cfg.seed);
  glorot_init(m.embed.norm.weights, cfg.norm_rows, cfg.norm_dim, rng);
  glorot_init(m.embed.prefix.weights, cfg.affix_rows, cfg.affix_dim, rng);
  glorot_init(m.embed.suffix.weights, cfg.affix_rows, cfg.affix_dim, rng);
  glorot_init(m.embed.shape.weights, cfg.affix_rows, cfg.affix_dim, rng);
  if (m.embed.pos)
    glorot_init(m.embed.pos->weights, cfg.pos_rows, cfg.pos_dim, rng);
  glorot_init(m.embed.proj_w, in_dim, cfg.width, rng);
  for (std::size_t d = 0; d < cfg.depth; ++d)
    glorot_init(m.conv_w[d], ctx, cfg.width, rng);
  glorot_init(m.attn_query, 1, cfg.width, rng);
  glorot_init(m.out_w, cfg.width, cfg.n_tags, rng);

  for (Tensor* t : m.params()) {
    m.adam.m.emplace_back(t->rows, t->cols);
    m.adam.v.emplace_back(t->rows, t->cols);
  }
  return m;
}

Gradients make_gradients(const PipelineModel& model) {
  Gradients g;
  for (const Tensor* t : model.params()) g.g.emplace_back(t->rows, t->cols);
  return g;
}

void Gradients::zero() {
  for (Tensor& t : g) t.zero();
}

namespace {

// Forward state for one sentence, kept for the backward pass.
struct ForwardCache {
  Tensor x;  // len x in_dim
  std::vector<std::array<std::size_t, 5>> rows;  // hashed rows per token
  Tensor h0_pre, h0;
  struct ConvCache {
    Tensor input, pre, mask, out;  // mask holds the inverted-dropout scale
  };
  std::vector<ConvCache> conv;
  std::vector<double> scores;           // len
  std::vector<std::vector<double>> alpha;
  Tensor att_out;
  Tensor probs;
};

void embed_forward(const PipelineModel& m, const Sentence& sentence,
                   const std::vector<std::string>* pos, ForwardCache& fc) {
  const EmbedLayer& layer = m.embed;
  if (layer.pos && (!pos || pos->size() != sentence.tokens.size()))
    throw config_error("pos feature required (one entry per token)");
  const std::size_t len = sentence.tokens.size();
  const std::size_t in_dim = layer.input_dim();
  const std::size_t width = layer.width();
  fc.x = Tensor(len, in_dim);
  fc.rows.assign(len, {});
  fc.h0_pre = Tensor(len, width);
  fc.h0 = Tensor(len, width);
  for (std::size_t i = 0; i < len; ++i) {
    const FeatureSet fs = extract_features(sentence.tokens[i].form);
    double* x = fc.x.row(i);
    std::size_t off = 0, slot = 0;
    auto put = [&](const HashEmbedTable& t, const std::string& key) {
      const std::size_t r = hash_row(key, t.rows, t.seed);
      fc.rows[i][slot++] = r;
      std::memcpy(x + off, t.weights.row(r), t.dim * sizeof(double));
      off += t.dim;
    };
    put(layer.norm, fs.norm);
    put(layer.prefix, fs.prefix);
    put(layer.suffix, fs.suffix);
    put(layer.shape, fs.shape);
    if (layer.pos) put(*layer.pos, (*pos)[i]);
    if (const auto* vec = m.pretrained.find(fs.norm))
      std::memcpy(x + off, vec->data(), layer.pretrained_dim * sizeof(double));

    double* pre = fc.h0_pre.row(i);
    double* h = fc.h0.row(i);
    for (std::size_t j = 0; j < width; ++j) {
      double acc = layer.proj_b.v[j];
      for (std::size_t k = 0; k < in_dim; ++k)
        acc += x[k] * layer.proj_w.at(k, j);
      pre[j] = acc;
      h[j] = acc > 0.0 ? acc : 0.0;
    }
  }
}

void encode_forward(const PipelineModel& m, const Tensor& h0, double dropout,
                    Rng* rng, ForwardCache& fc) {
  const std::size_t len = h0.rows;
  const std::size_t width = m.config.width;
  const std::size_t w = m.config.window;
  const std::size_t ctx_dim = width * (2 * w + 1);
  const double keep_scale = dropout > 0 ? 1.0 / (1.0 - dropout) : 1.0;
  fc.conv.clear();
  Tensor h = h0;
  for (std::size_t d = 0; d < m.config.depth; ++d) {
    ForwardCache::ConvCache cc;
    cc.input = h;
    cc.pre = Tensor(len, width);
    cc.mask = Tensor(len, width);
    cc.out = Tensor(len, width);
    std::vector<double> ctx(ctx_dim);
    for (std::size_t i = 0; i < len; ++i) {
      std::fill(ctx.begin(), ctx.end(), 0.0);
      for (std::size_t k = 0; k <= 2 * w; ++k) {
        const std::ptrdiff_t j =
            static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(k) -
            static_cast<std::ptrdiff_t>(w);
        if (j < 0 || j >= static_cast<std::ptrdiff_t>(len)) continue;
        std::memcpy(ctx.data() + k * width, cc.input.row(j),
                    width * sizeof(double));
      }
      double* pre = cc.pre.row(i);
      double* mask = cc.mask.row(i);
      double* out = cc.out.row(i);
      for (std::size_t j = 0; j < width; ++j) {
        double acc = m.conv_b[d].v[j];
        for (std::size_t k = 0; k < ctx_dim; ++k)
          acc += ctx[k] * m.conv_w[d].at(k, j);
        pre[j] = acc;
        double r = acc > 0.0 ? acc : 0.0;
        double scale = 1.0;
        if (dropout > 0)
          scale = (rng->next_double() < dropout) ? 0.0 : keep_scale;
        mask[j] = scale;
        out[j] = cc.input.at(i, j) + r * scale;
      }
    }
    h = cc.out;
    fc.conv.push_back(std::move(cc));
  }
}

const Tensor& encoded(const ForwardCache& fc) {
  return fc.conv.empty() ? fc.h0 : fc.conv.back().out;
}

void attend_forward(const PipelineModel& m, const Tensor& enc,
                    ForwardCache& fc) {
  const std::size_t len = enc.rows;
  const std::size_t width = m.config.width;
  const std::size_t aw = m.config.attn_window;
  const double inv_sqrt_w = 1.0 / std::sqrt(static_cast<double>(width));
  fc.scores.assign(len, 0.0);
  for (std::size_t j = 0; j < len; ++j) {
    double s = 0;
    for (std::size_t k = 0; k < width; ++k)
      s += m.attn_query.v[k] * enc.at(j, k);
    fc.scores[j] = s * inv_sqrt_w;
  }
  fc.alpha.assign(len, {});
  fc.att_out = Tensor(len, width);
  for (std::size_t i = 0; i < len; ++i) {
    const std::size_t lo = i >= aw ? i - aw : 0;
    const std::size_t hi = std::min(len - 1, i + aw);
    double mx = fc.scores[lo];
    for (std::size_t j = lo; j <= hi; ++j) mx = std::max(mx, fc.scores[j]);
    auto& alpha = fc.alpha[i];
    alpha.resize(hi - lo + 1);
    double z = 0;
    for (std::size_t j = lo; j <= hi; ++j) {
      alpha[j - lo] = std::exp(fc.scores[j] - mx);
      z += alpha[j - lo];
    }
    for (double& a : alpha) a /= z;
    double* out = fc.att_out.row(i);
    std::memcpy(out, enc.row(i), width * sizeof(double));
    for (std::size_t j = lo; j <= hi; ++j) {
      const double a = alpha[j - lo];
      const double* hj = enc.row(j);
      for (std::size_t k = 0; k < width; ++k) out[k] += a * hj[k];
    }
  }
}

void predict_forward(const PipelineModel& m, const Tensor& h,
                     ForwardCache& fc) {
  const std::size_t len = h.rows;
  const std::size_t width = m.config.width;
  const std::size_t k_tags = m.config.n_tags;
  fc.probs = Tensor(len, k_tags);
  for (std::size_t i = 0; i < len; ++i) {
    double* p = fc.probs.row(i);
    for (std::size_t t = 0; t < k_tags; ++t) {
      double acc = m.out_b.v[t];
      for (std::size_t k = 0; k < width; ++k)
        acc += h.at(i, k) * m.out_w.at(k, t);
      p[t] = acc;
    }
    double mx = *std::max_element(p, p + k_tags);
    double z = 0;
    for (std::size_t t = 0; t < k_tags; ++t) {
      p[t] = std::exp(p[t] - mx);
      z += p[t];
    }
    for (std::size_t t = 0; t < k_tags; ++t) p[t] /= z;
  }
}

void full_forward(const PipelineModel& m, const Sentence& sentence,
                  const std::vector<std::string>* pos, double dropout,
                  Rng* rng, ForwardCache& fc) {
  embed_forward(m, sentence, pos, fc);
  encode_forward(m, fc.h0, dropout, rng, fc);
  attend_forward(m, encoded(fc), fc);
  predict_forward(m, fc.att_out, fc);
}

struct GradSlots {
  // Indices into the parameter/gradient list, resolved once per model shape.
  std::size_t norm, prefix, suffix, shape, pos, proj_w, proj_b, conv0, attn,
      out_w, out_b;
  bool has_pos;

  explicit GradSlots(const PipelineModel& m) {
    std::size_t i = 0;
    norm = i++;
    prefix = i++;
    suffix = i++;
    shape = i++;
    has_pos = m.embed.pos.has_value();
    pos = has_pos ? i++ : 0;
    proj_w = i++;
    proj_b = i++;
    conv0 = i;
    i += 2 * m.config.depth;
    attn = i++;
    out_w = i++;
    out_b = i++;
  }
};

void backward(const PipelineModel& m, const ForwardCache& fc,
              const std::vector<std::size_t>& gold, double scale,
              Gradients& grads) {
  const std::size_t len = fc.probs.rows;
  const std::size_t width = m.config.width;
  const std::size_t k_tags = m.config.n_tags;
  const std::size_t w = m.config.window;
  const std::size_t aw = m.config.attn_window;
  const GradSlots slot(m);
  const Tensor& enc = encoded(fc);

  // predict
  Tensor datt(len, width);
  {
    Tensor& g_out_w = grads.g[slot.out_w];
    Tensor& g_out_b = grads.g[slot.out_b];
    std::vector<double> dl(k_tags);
    for (std::size_t i = 0; i < len; ++i) {
      const double* p = fc.probs.row(i);
      for (std::size_t t = 0; t < k_tags; ++t) dl[t] = p[t] * scale;
      dl[gold[i]] -= scale;
      const double* h = fc.att_out.row(i);
      double* da = datt.row(i);
      for (std::size_t t = 0; t < k_tags; ++t) {
        g_out_b.v[t] += dl[t];
        for (std::size_t k = 0; k < width; ++k) {
          g_out_w.at(k, t) += h[k] * dl[t];
          da[k] += m.out_w.at(k, t) * dl[t];
        }
      }
    }
  }

  // attend
  Tensor denc(len, width);
  {
    const double inv_sqrt_w = 1.0 / std::sqrt(static_cast<double>(width));
    std::vector<double> dscores(len, 0.0);
    for (std::size_t i = 0; i < len; ++i) {
      const std::size_t lo = i >= aw ? i - aw : 0;
      const std::size_t hi = std::min(len - 1, i + aw);
      const auto& alpha = fc.alpha[i];
      const double* da = datt.row(i);
      double* de_i = denc.row(i);
      for (std::size_t k = 0; k < width; ++k) de_i[k] += da[k];  // residual
      std::vector<double> dalpha(alpha.size());
      for (std::size_t j = lo; j <= hi; ++j) {
        const double* hj = enc.row(j);
        double dot = 0;
        double* de_j = denc.row(j);
        const double a = alpha[j - lo];
        for (std::size_t k = 0; k < width; ++k) {
          dot += da[k] * hj[k];
          de_j[k] += a * da[k];
        }
        dalpha[j - lo] = dot;
      }
      double gdot = 0;
      for (std::size_t j = 0; j < alpha.size(); ++j)
        gdot += alpha[j] * dalpha[j];
      for (std::size_t j = lo; j <= hi; ++j)
        dscores[j] += alpha[j - lo] * (dalpha[j - lo] - gdot);
    }
    Tensor& g_q = grads.g[slot.attn];
    for (std::size_t j = 0; j < len; ++j) {
      const double ds = dscores[j] * inv_sqrt_w;
      const double* hj = enc.row(j);
      double* de_j = denc.row(j);
      for (std::size_t k = 0; k < width; ++k) {
        g_q.v[k] += ds * hj[k];
        de_j[k] += ds * m.attn_query.v[k];
      }
    }
  }

  // encode, reversed
  Tensor dout = std::move(denc);
  const std::size_t ctx_dim = width * (2 * w + 1);
  for (std::size_t d = m.config.depth; d-- > 0;) {
    const auto& cc = fc.conv[d];
    Tensor& g_w = grads.g[slot.conv0 + 2 * d];
    Tensor& g_b = grads.g[slot.conv0 + 2 * d + 1];
    Tensor din = dout;  // residual path
    std::vector<double> ctx(ctx_dim), dctx(ctx_dim);
    for (std::size_t i = 0; i < len; ++i) {
      std::fill(ctx.begin(), ctx.end(), 0.0);
      for (std::size_t k = 0; k <= 2 * w; ++k) {
        const std::ptrdiff_t j =
            static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(k) -
            static_cast<std::ptrdiff_t>(w);
        if (j < 0 || j >= static_cast<std::ptrdiff_t>(len)) continue;
        std::memcpy(ctx.data() + k * width, cc.input.row(j),
                    width * sizeof(double));
      }
      std::fill(dctx.begin(), dctx.end(), 0.0);
      const double* go = dout.row(i);
      const double* pre = cc.pre.row(i);
      const double* mask = cc.mask.row(i);
      for (std::size_t j = 0; j < width; ++j) {
        const double dpre = (pre[j] > 0.0 ? go[j] * mask[j] : 0.0);
        if (dpre == 0.0) continue;
        g_b.v[j] += dpre;
        for (std::size_t k = 0; k < ctx_dim; ++k) {
          g_w.at(k, j) += ctx[k] * dpre;
          dctx[k] += m.conv_w[d].at(k, j) * dpre;
        }
      }
      for (std::size_t k = 0; k <= 2 * w; ++k) {
        const std::ptrdiff_t j =
            static_cast<std::ptrdiff_t>(i) + static_cast<std::ptrdiff_t>(k) -
            static_cast<std::ptrdiff_t>(w);
        if (j < 0 || j >= static_cast<std::ptrdiff_t>(len)) continue;
        double* dj = din.row(j);
        const double* src = dctx.data() + k * width;
        for (std::size_t c = 0; c < width; ++c) dj[c] += src[c];
      }
    }
    dout = std::move(din);
  }

  // embed projection and hash tables
  {
    Tensor& g_pw = grads.g[slot.proj_w];
    Tensor& g_pb = grads.g[slot.proj_b];
    const std::size_t in_dim = m.embed.input_dim();
    std::vector<double> dx(in_dim);
    for (std::size_t i = 0; i < len; ++i) {
      const double* go = dout.row(i);
      const double* pre = fc.h0_pre.row(i);
      const double* x = fc.x.row(i);
      std::fill(dx.begin(), dx.end(), 0.0);
      for (std::size_t j = 0; j < width; ++j) {
        if (pre[j] <= 0.0) continue;
        const double dpre = go[j];
        g_pb.v[j] += dpre;
        for (std::size_t k = 0; k < in_dim; ++k) {
          g_pw.at(k, j) += x[k] * dpre;
          dx[k] += m.embed.proj_w.at(k, j) * dpre;
        }
      }
      std::size_t off = 0, si = 0;
      auto scatter = [&](const HashEmbedTable& t, std::size_t grad_slot) {
        double* row = grads.g[grad_slot].row(fc.rows[i][si++]);
        for (std::size_t d2 = 0; d2 < t.dim; ++d2) row[d2] += dx[off + d2];
        off += t.dim;
      };
      scatter(m.embed.norm, slot.norm);
      scatter(m.embed.prefix, slot.prefix);
      scatter(m.embed.suffix, slot.suffix);
      scatter(m.embed.shape, slot.shape);
      if (slot.has_pos) scatter(*m.embed.pos, slot.pos);
      // pretrained segment is not trained
    }
  }
}

}  // namespace

Tensor encode(const Tensor& h, const PipelineModel& model, double dropout,
              Rng& rng) {
  if (dropout < 0 || dropout >= 1)
    throw config_error("dropout must be in [0, 1)");
  ForwardCache fc;
  fc.h0 = h;
  encode_forward(model, h, dropout, &rng, fc);
  return encoded(fc);
}

Tensor attend(const Tensor& h, const PipelineModel& model) {
  ForwardCache fc;
  attend_forward(model, h, fc);
  return fc.att_out;
}

Tensor predict(const Tensor& h, const PipelineModel& model) {
  ForwardCache fc;
  predict_forward(model, h, fc);
  return fc.probs;
}

Tensor forward_probs(const PipelineModel& model, const Sentence& sentence,
                     const std::vector<std::string>* pos) {
  ForwardCache fc;
  full_forward(model, sentence, pos, 0.0, nullptr, fc);
  return fc.probs;
}

std::vector<std::size_t> predict_indices(const PipelineModel& model,
                                         const Sentence& sentence,
                                         const std::vector<std::string>* pos) {
  const Tensor probs = forward_probs(model, sentence, pos);
  std::vector<std::size_t> out(probs.rows);
  for (std::size_t i = 0; i < probs.rows; ++i) {
    const double* p = probs.row(i);
    // Lowest index wins ties.
    out[i] = static_cast<std::size_t>(
        std::max_element(p, p + probs.cols) - p);
  }
  return out;
}

double loss_and_gradients(const PipelineModel& model,
                          const std::vector<const TrainItem*>& batch,
                          double dropout, Rng& rng, Gradients& grads) {
  if (dropout < 0 || dropout >= 1)
    throw config_error("dropout must be in [0, 1)");
  std::size_t total_tokens = 0;
  for (const TrainItem* item : batch) {
    if (item->gold.size() != item->sentence.tokens.size())
      throw data_error("gold index count does not match sentence length");
    for (std::size_t g : item->gold)
      if (g >= model.config.n_tags)
        throw data_error("gold index " + std::to_string(g) +
                         " out of range (n_tags=" +
                         std::to_string(model.config.n_tags) + ")");
    total_tokens += item->gold.size();
  }
  if (total_tokens == 0) throw data_error("empty batch");
  const double scale = 1.0 / static_cast<double>(total_tokens);
  double loss = 0;
  ForwardCache fc;
  for (const TrainItem* item : batch) {
    const std::vector<std::string>* pos =
        item->pos.empty() ? nullptr : &item->pos;
    full_forward(model, item->sentence, pos, dropout, &rng, fc);
    for (std::size_t i = 0; i < item->gold.size(); ++i)
      loss -= std::log(std::max(fc.probs.at(i, item->gold[i]), 1e-300));
    backward(model, fc, item->gold, scale, grads);
  }
  loss *= scale;
  if (!std::isfinite(loss)) throw numeric_error("non-finite loss");
  return loss;
}

double batch_loss(const PipelineModel& model,
                  const std::vector<const TrainItem*>& batch) {
  std::size_t total_tokens = 0;
  double loss = 0;
  ForwardCache fc;
  for (const TrainItem* item : batch) {
    const std::vector<std::string>* pos =
        item->pos.empty() ? nullptr : &item->pos;
    full_forward(model, item->sentence, pos, 0.0, nullptr, fc);
    for (std::size_t i = 0; i < item->gold.size(); ++i)
      loss -= std::log(std::max(fc.probs.at(i, item->gold[i]), 1e-300));
    total_tokens += item->gold.size();
  }
  return loss / static_cast<double>(total_tokens);
}

void optimizer_step(PipelineModel& model, const Gradients& grads, double lr) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8, kClip = 10.0;
  auto params = model.params();
  if (params.size() != grads.g.size())
    throw config_error("gradient/parameter shape mismatch");
  double sq = 0;
  for (const Tensor& g : grads.g)
    for (double v : g.v) sq += v * v;
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw numeric_error("non-finite gradient norm");
  const double clip = norm > kClip ? kClip / norm : 1.0;

  AdamState& st = model.adam;
  ++st.step;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(st.step));
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& theta = *params[p];
    Tensor& mm = st.m[p];
    Tensor& vv = st.v[p];
    const Tensor& g = grads.g[p];
    if (theta.size() != g.size())
      throw config_error("gradient tensor shape mismatch at index " +
                         std::to_string(p));
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double gi = g.v[i] * clip;
      mm.v[i] = kBeta1 * mm.v[i] + (1 - kBeta1) * gi;
      vv.v[i] = kBeta2 * vv.v[i] + (1 - kBeta2) * gi * gi;
      theta.v[i] -=
          lr * (mm.v[i] / bc1) / (std::sqrt(vv.v[i] / bc2) + kEps);
    }
  }
}

std::size_t batch_schedule(std::size_t step) {
  return batch_schedule(step, ModelConfig{});
}

std::size_t batch_schedule(std::size_t step, const ModelConfig& config) {
  const double raw = static_cast<double>(config.batch_start) *
                     std::pow(config.batch_factor, static_cast<double>(step));
  const double capped = std::min(static_cast<double>(config.batch_max), raw);
  return static_cast<std::size_t>(capped);
}

double dropout_schedule(std::size_t epoch, std::size_t total_epochs) {
  return dropout_schedule(epoch, total_epochs, ModelConfig{});
}

double dropout_schedule(std::size_t epoch, std::size_t total_epochs,
                        const ModelConfig& config) {
  if (total_epochs < 1) throw config_error("total_epochs must be >= 1");
  if (epoch >= total_epochs) throw config_error("epoch out of range");
  if (total_epochs == 1) return config.dropout_start;
  const double t = static_cast<double>(epoch) /
                   static_cast<double>(total_epochs - 1);
  return config.dropout_start - (config.dropout_start - config.dropout_end) * t;
}

namespace {

json config_to_json(const ModelConfig& c) {
  return json{{"width", c.width},
              {"depth", c.depth},
              {"window", c.window},
              {"attn_window", c.attn_window},
              {"n_tags", c.n_tags},
              {"dropout_start", c.dropout_start},
              {"dropout_end", c.dropout_end},
              {"batch_start", c.batch_start},
              {"batch_max", c.batch_max},
              {"batch_factor", c.batch_factor},
              {"epochs", c.epochs},
              {"learning_rate", c.learning_rate},
              {"seed", c.seed},
              {"norm_rows", c.norm_rows},
              {"norm_dim", c.norm_dim},
              {"affix_rows", c.affix_rows},
              {"affix_dim", c.affix_dim},
              {"pos_rows", c.pos_rows},
              {"pos_dim", c.pos_dim},
              {"use_pos", c.use_pos}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.width = j.at("width");
  c.depth = j.at("depth");
  c.window = j.at("window");
  c.attn_window = j.at("attn_window");
  c.n_tags = j.at("n_tags");
  c.dropout_start = j.at("dropout_start");
  c.dropout_end = j.at("dropout_end");
  c.batch_start = j.at("batch_start");
  c.batch_max = j.at("batch_max");
  c.batch_factor = j.at("batch_factor");
  c.epochs = j.at("epochs");
  c.learning_rate = j.at("learning_rate");
  c.seed = j.at("seed");
  c.norm_rows = j.at("norm_rows");
  c.norm_dim = j.at("norm_dim");
  c.affix_rows = j.at("affix_rows");
  c.affix_dim = j.at("affix_dim");
  c.pos_rows = j.at("pos_rows");
  c.pos_dim = j.at("pos_dim");
  c.use_pos = j.at("use_pos");
  return c;
}

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw data_error(std::string("truncated file reading ") + what);
  return v;
}

void write_tensor(std::ostream& out, const Tensor& t) {
  write_pod<std::uint64_t>(out, t.rows);
  write_pod<std::uint64_t>(out, t.cols);
  out.write(reinterpret_cast<const char*>(t.v.data()),
            static_cast<std::streamsize>(t.v.size() * sizeof(double)));
}

Tensor read_tensor(std::istream& in) {
  const auto rows = read_pod<std::uint64_t>(in, "tensor rows");
  const auto cols = read_pod<std::uint64_t>(in, "tensor cols");
  Tensor t(rows, cols);
  in.read(reinterpret_cast<char*>(t.v.data()),
          static_cast<std::streamsize>(t.v.size() * sizeof(double)));
  if (!in) throw data_error("truncated file reading tensor data");
  return t;
}

constexpr std::uint32_t kModelVersion = 1;

}  // namespace

void save_model(const PipelineModel& model, const std::string& path) {
  if (!model.finite())
    throw numeric_error("refusing to save a model with non-finite parameters");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out.write("MRFO", 4);
  write_pod<std::uint32_t>(out, kModelVersion);

  json meta;
  meta["config"] = config_to_json(model.config);
  meta["mode"] = model.mode;
  meta["tags"] = model.tag_inventory;
  meta["train_vocab"] = model.train_vocab;
  json vecs = json::object();
  {
    std::vector<const std::string*> toks;
    for (const auto& [t, _] : model.pretrained.entries) toks.push_back(&t);
    std::sort(toks.begin(), toks.end(),
              [](const auto* a, const auto* b) { return *a < *b; });
    for (const auto* t : toks) vecs[*t] = model.pretrained.entries.at(*t);
  }
  meta["pretrained"] = {{"dim", model.pretrained.dim}, {"entries", vecs}};
  const std::string meta_str = meta.dump();
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(meta_str.size()));
  out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));

  for (const Tensor* t : model.params()) write_tensor(out, *t);
  for (const Tensor& t : model.adam.m) write_tensor(out, t);
  for (const Tensor& t : model.adam.v) write_tensor(out, t);
  write_pod<std::uint64_t>(out, model.adam.step);
  if (!out) throw data_error("I/O failure writing " + path);
}

PipelineModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "MRFO", 4) != 0)
    throw data_error("bad magic in " + path);
  const auto version = read_pod<std::uint32_t>(in, "version");
  if (version != kModelVersion)
    throw data_error("unsupported version " + std::to_string(version));
  const auto meta_len = read_pod<std::uint32_t>(in, "metadata length");
  std::string meta_str(meta_len, '\0');
  in.read(meta_str.data(), meta_len);
  if (!in) throw data_error("truncated file reading metadata");
  json meta;
  try {
    meta = json::parse(meta_str);
  } catch (const json::exception& e) {
    throw data_error(std::string("invalid model metadata: ") + e.what());
  }

  VectorTable pretrained;
  pretrained.dim = meta.at("pretrained").at("dim");
  for (auto it = meta.at("pretrained").at("entries").begin();
       it != meta.at("pretrained").at("entries").end(); ++it)
    pretrained.entries[it.key()] = it.value().get<std::vector<double>>();

  PipelineModel model = init_model(
      config_from_json(meta.at("config")),
      meta.at("tags").get<std::vector<std::string>>(), std::move(pretrained),
      meta.at("mode").get<std::string>());
  model.train_vocab = meta.at("train_vocab").get<std::vector<std::string>>();

  auto check_shape = [&](const Tensor& got, const Tensor& want) {
    if (got.rows != want.rows || got.cols != want.cols)
      throw data_error("tensor shape mismatch in " + path);
  };
  for (Tensor* t : model.params()) {
    Tensor loaded = read_tensor(in);
    check_shape(loaded, *t);
    *t = std::move(loaded);
  }
  for (Tensor& t : model.adam.m) {
    Tensor loaded = read_tensor(in);
    check_shape(loaded, t);
    t = std::move(loaded);
  }
  for (Tensor& t : model.adam.v) {
    Tensor loaded = read_tensor(in);
    check_shape(loaded, t);
    t = std::move(loaded);
  }
  model.adam.step = read_pod<std::uint64_t>(in, "optimizer step");
  return model;
}

PipelineModel make_gradcheck_model(const ModelConfig& config,
                                   std::uint64_t seed,
                                   std::vector<TrainItem>& batch_out) {
  ModelConfig cfg = config;
  cfg.seed = seed;
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  // A few Greek-flavored forms keeps the UTF-8 paths honest.
  const std::vector<std::string> forms = {"Αθήνα", "και",  "2019", "το",
                                          "τρέχει", "ΟΤΕ",  "μικρό", "σπίτι",
                                          "χθες",  "COVID-19"};
  VectorTable pretrained;
  pretrained.dim = 4;
  for (const auto& f : forms) {
    std::vector<double> v(pretrained.dim);
    for (double& x : v) x = rng.next_range(-0.5, 0.5);
    pretrained.entries[utf8::lowercase(f)] = v;
  }
  std::vector<std::string> tags;
  for (std::size_t t = 0; t < cfg.n_tags; ++t)
    tags.push_back("T" + std::to_string(t));
  PipelineModel model = init_model(cfg, tags, pretrained, "gradcheck");

  batch_out.clear();
  for (std::size_t s = 0; s < 2; ++s) {
    TrainItem item;
    const std::size_t len = 3 + rng.next_below(4);
    for (std::size_t i = 0; i < len; ++i) {
      Token tok;
      tok.form = forms[rng.next_below(forms.size())];
      item.sentence.tokens.push_back(tok);
      item.gold.push_back(rng.next_below(cfg.n_tags));
      if (cfg.use_pos)
        item.pos.push_back("P" + std::to_string(rng.next_below(4)));
    }
    batch_out.push_back(std::move(item));
  }
  return model;
}

std::vector<Tensor> numeric_gradients(
    PipelineModel& model, const std::vector<const TrainItem*>& batch,
    double eps) {
  std::vector<Tensor> out;
  for (Tensor* param : model.params()) {
    Tensor g(param->rows, param->cols);
    for (std::size_t i = 0; i < param->size(); ++i) {
      const double orig = param->v[i];
      param->v[i] = orig + eps;
      const double lp = batch_loss(model, batch);
      param->v[i] = orig - eps;
      const double lm = batch_loss(model, batch);
      param->v[i] = orig;
      g.v[i] = (lp - lm) / (2 * eps);
    }
    out.push_back(std::move(g));
  }
  return out;
}

double max_relative_error(const std::vector<Tensor>& a,
                          const std::vector<Tensor>& b) {
  double worst = 0;
  for (std::size_t p = 0; p < a.size(); ++p)
    for (std::size_t i = 0; i < a[p].size(); ++i) {
      const double ga = a[p].v[i], gb = b[p].v[i];
      const double denom = std::max({std::abs(ga), std::abs(gb), 1e-8});
      worst = std::max(worst, std::abs(ga - gb) / denom);
    }
  return worst;
}

double gradient_check(const ModelConfig& config, std::uint64_t seed) {
  std::vector<TrainItem> batch;
  PipelineModel model = make_gradcheck_model(config, seed, batch);
  std::vector<const TrainItem*> ptrs;
  for (const auto& item : batch) ptrs.push_back(&item);
  Gradients analytic = make_gradients(model);
  Rng rng(seed);
  loss_and_gradients(model, ptrs, 0.0, rng, analytic);
  const std::vector<Tensor> numeric = numeric_gradients(model, ptrs, 1e-5);
  return max_relative_error(analytic.g, numeric);
}

PipelineModel train_pipeline(const std::vector<TrainItem>& train,
                             const std::vector<TrainItem>& dev,
                             const ModelConfig& config, VectorTable pretrained,
                             std::vector<std::string> tag_inventory,
                             const std::string& mode,
                             std::vector<std::string> train_vocab,
                             TrainLog* log, bool verbose) {
  if (train.empty()) throw data_error("empty training set");
  if (dev.empty()) throw data_error("empty dev set");
  PipelineModel model = init_model(config, std::move(tag_inventory),
                                   std::move(pretrained), mode);
  model.train_vocab = std::move(train_vocab);
  Rng rng(model.config.seed);
  Gradients grads = make_gradients(model);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  PipelineModel best = model;
  double best_acc = -1;
  std::size_t best_epoch = 0;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < model.config.epochs; ++epoch) {
    const double dropout =
        dropout_schedule(epoch, model.config.epochs, model.config);
    rng.shuffle(order);
    double epoch_loss = 0;
    std::size_t n_batches = 0;
    std::size_t pos = 0;
    while (pos < order.size()) {
      const std::size_t bs = batch_schedule(step, model.config);
      std::vector<const TrainItem*> batch;
      for (std::size_t k = 0; k < bs && pos < order.size(); ++k, ++pos)
        batch.push_back(&train[order[pos]]);
      grads.zero();
      epoch_loss += loss_and_gradients(model, batch, dropout, rng, grads);
      optimizer_step(model, grads, model.config.learning_rate);
      ++step;
      ++n_batches;
    }

    std::size_t correct = 0, total = 0;
    for (const TrainItem& item : dev) {
      const auto pred = predict_indices(
          model, item.sentence, item.pos.empty() ? nullptr : &item.pos);
      for (std::size_t i = 0; i < pred.size(); ++i) {
        correct += pred[i] == item.gold[i];
        ++total;
      }
    }
    const double acc =
        total ? static_cast<double>(correct) / static_cast<double>(total) : 0;
    if (log) log->dev_accuracy.push_back(acc);
    if (verbose)
      std::cerr << "epoch " << epoch << ": loss "
                << epoch_loss / static_cast<double>(n_batches) << " dev acc "
                << acc << "\n";
    if (acc > best_acc) {
      best_acc = acc;
      best = model;
      best_epoch = epoch;
    }
  }
  if (log) log->best_epoch = best_epoch;
  return best;
}

}  // namespace morfo
