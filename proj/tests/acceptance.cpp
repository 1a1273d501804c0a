// Acceptance suite: one pass/fail line per criterion, exit 1 on any failure.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "morfo/corpus.hpp"
#include "morfo/features.hpp"
#include "morfo/ner.hpp"
#include "morfo/network.hpp"
#include "morfo/perturb.hpp"
#include "morfo/rng.hpp"
#include "morfo/tagger.hpp"
#include "morfo/vectors.hpp"
#include "support.hpp"

using namespace morfo;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool pass,
            const std::string& detail = "") {
  std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << number << ": "
            << name;
  if (!detail.empty()) std::cout << "  [" << detail << "]";
  std::cout << "\n" << std::flush;
  if (!pass) ++g_failures;
}

ModelConfig desk_config(std::uint64_t seed) {
  ModelConfig cfg;
  cfg.width = 48;
  cfg.depth = 2;
  cfg.window = 1;
  cfg.attn_window = 2;
  cfg.learning_rate = 0.01;
  cfg.epochs = 30;
  cfg.norm_rows = 3000;
  cfg.norm_dim = 32;
  cfg.affix_rows = 500;
  cfg.affix_dim = 12;
  cfg.seed = seed;
  return cfg;
}

struct Split {
  Corpus train, test, dev;
};

Split make_split(std::size_t n, std::uint64_t corpus_seed,
                 std::uint64_t split_seed, bool oov_split) {
  const Corpus c = generate_synthetic_corpus(n, corpus_seed, oov_split);
  SplitSpec spec;
  spec.seed = split_seed;
  auto [train, test, dev] = split_corpus(c, spec);
  return {std::move(train), std::move(test), std::move(dev)};
}

double train_micro_accuracy(const PipelineModel& model, const Corpus& train) {
  const std::set<std::string> vocab(model.train_vocab.begin(),
                                    model.train_vocab.end());
  return evaluate_tagger(model, train, vocab).micro_accuracy;
}

// --- criterion 1 ---
void criterion_gradcheck() {
  ModelConfig cfg;
  cfg.width = 8;
  cfg.depth = 2;
  cfg.attn_window = 2;
  cfg.n_tags = 5;
  cfg.norm_rows = 20;
  cfg.norm_dim = 8;
  cfg.affix_rows = 10;
  cfg.affix_dim = 4;
  const auto t0 = Clock::now();
  const double err = gradient_check(cfg, 1);
  const double secs =
      std::chrono::duration<double>(Clock::now() - t0).count();
  report(1, "gradient check below 1e-4 within 10 s",
         err < 1e-4 && secs < 10.0,
         "max relative error " + std::to_string(err) + ", " +
             std::to_string(secs) + " s");
}

// --- criterion 2 ---
void criterion_receptive_field() {
  bool pass = true;
  std::string detail;
  for (std::size_t depth : {1u, 2u, 3u, 4u}) {
    ModelConfig cfg;
    cfg.width = 10;
    cfg.depth = depth;
    cfg.window = 1;
    cfg.attn_window = 2;
    cfg.n_tags = 4;
    cfg.norm_rows = 40;
    cfg.norm_dim = 8;
    cfg.affix_rows = 16;
    cfg.affix_dim = 4;
    std::vector<TrainItem> batch;
    const PipelineModel model = make_gradcheck_model(cfg, 19, batch);
    const std::size_t radius = depth * cfg.window + cfg.attn_window;

    std::vector<std::string> forms;
    for (int i = 0; i < 16; ++i) forms.push_back("λέξη" + std::to_string(i));
    Sentence base;
    for (const auto& f : forms) base.tokens.push_back(Token{f, "", "", {}, "O"});
    Sentence changed = base;
    const std::size_t j = forms.size() - 1;
    changed.tokens[j].form = "άλλη";

    const Tensor a = forward_probs(model, base);
    const Tensor b = forward_probs(model, changed);
    for (std::size_t i = 0; i < forms.size(); ++i) {
      const std::size_t dist = j - i;
      if (dist <= radius) continue;
      for (std::size_t k = 0; k < a.cols; ++k)
        if (a.at(i, k) != b.at(i, k)) {
          pass = false;
          detail = "depth " + std::to_string(depth) + " leaked to row " +
                   std::to_string(i);
        }
    }
    // Sanity: the perturbed row itself must move.
    bool moved = false;
    for (std::size_t k = 0; k < a.cols; ++k) moved |= a.at(j, k) != b.at(j, k);
    if (!moved) {
      pass = false;
      detail = "depth " + std::to_string(depth) + ": no effect at the site";
    }
  }
  report(2, "receptive field is exactly depth*window + attn_window", pass,
         detail);
}

// --- criterion 3 ---
void criterion_determinism() {
  const Split sp = make_split(120, 7, 7, false);
  auto run = [&](const std::string& path) {
    ModelConfig cfg = desk_config(3);
    const PipelineModel model =
        train_tagger(sp.train, sp.dev, cfg, VectorTable{}, builtin_tag_map(),
                     TagMode::kSupertag);
    save_model(model, path);
    const std::set<std::string> vocab(model.train_vocab.begin(),
                                      model.train_vocab.end());
    return tag_report_to_json(evaluate_tagger(model, sp.test, vocab));
  };
  const std::string p1 = morfo::testing::temp_path("acc_det_1.mrfo");
  const std::string p2 = morfo::testing::temp_path("acc_det_2.mrfo");
  const std::string r1 = run(p1);
  const std::string r2 = run(p2);
  const bool pass = morfo::testing::slurp(p1) == morfo::testing::slurp(p2) &&
                    !r1.empty() && r1 == r2;
  report(3, "two identical training runs are byte-identical", pass);
}

// --- criterion 4 ---
void criterion_synthetic_learning() {
  const auto t0 = Clock::now();
  const Split sp = make_split(200, 7, 7, false);
  const PipelineModel model =
      train_tagger(sp.train, sp.dev, desk_config(7), VectorTable{},
                   builtin_tag_map(), TagMode::kSupertag);
  const double train_acc = train_micro_accuracy(model, sp.train);
  const std::set<std::string> vocab(model.train_vocab.begin(),
                                    model.train_vocab.end());
  const double test_acc =
      evaluate_tagger(model, sp.test, vocab).micro_accuracy;
  const double secs =
      std::chrono::duration<double>(Clock::now() - t0).count();
  report(4, "synthetic corpus: >=99% train / >=90% test within 2 min",
         train_acc >= 0.99 && test_acc >= 0.90 && secs < 120.0,
         "train " + std::to_string(train_acc) + ", test " +
             std::to_string(test_acc) + ", " + std::to_string(secs) + " s");
}

// --- criteria 5 and 6 (share the per-seed supertag models) ---
void criterion_mode_comparison_and_perturbation() {
  double sum_supertag = 0, sum_upos = 0;
  bool perturb_ok = true;
  std::string detail6;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Split sp = make_split(200, 7, seed, false);
    const ModelConfig cfg = desk_config(seed);
    const PipelineModel st =
        train_tagger(sp.train, sp.dev, cfg, VectorTable{}, builtin_tag_map(),
                     TagMode::kSupertag);
    const PipelineModel up =
        train_tagger(sp.train, sp.dev, cfg, VectorTable{}, builtin_tag_map(),
                     TagMode::kUpos);
    const std::set<std::string> vocab(st.train_vocab.begin(),
                                      st.train_vocab.end());
    const double f_st = evaluate_tagger(st, sp.test, vocab).macro_f1;
    const double f_up = evaluate_tagger(up, sp.test, vocab).macro_f1;
    sum_supertag += f_st;
    sum_upos += f_up;

    PerturbSpec pspec;
    pspec.rate = 0.2;
    pspec.seed = seed;
    const Corpus perturbed = perturb_corpus(sp.test, pspec);
    std::size_t diff = 0;
    for (std::size_t s = 0; s < sp.test.sentences.size(); ++s)
      for (std::size_t i = 0; i < sp.test.sentences[s].tokens.size(); ++i)
        diff += sp.test.sentences[s].tokens[i].form !=
                perturbed.sentences[s].tokens[i].form;
    const std::size_t expected = static_cast<std::size_t>(
        0.2 * static_cast<double>(count_alphabetic_tokens(sp.test)));
    const double f_pert = evaluate_tagger(st, perturbed, vocab).macro_f1;
    if (diff != expected || !(f_pert < f_st)) {
      perturb_ok = false;
      detail6 = "seed " + std::to_string(seed) + ": original " +
                std::to_string(f_st) + ", perturbed " + std::to_string(f_pert) +
                ", diff " + std::to_string(diff) + "/" +
                std::to_string(expected);
    }
  }
  report(5, "upos macro F1 >= supertag macro F1 (mean of 3 seeds)",
         sum_upos >= sum_supertag,
         "upos " + std::to_string(sum_upos / 3) + ", supertag " +
             std::to_string(sum_supertag / 3));
  report(6, "perturbation strictly lowers macro F1 and hits floor(0.2*N)",
         perturb_ok, detail6);
}

// --- criterion 7 ---
void criterion_backfill() {
  const std::size_t buckets = 2000;
  double sum_base = 0, sum_backfill = 0;
  bool coverage_ok = true;
  bool reports_ok = true;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Split sp = make_split(200, 7, seed, true);
    const VectorTable base = morfo::testing::make_pseudo_vectors(
        morfo::testing::norm_vocab(sp.train), 10, 17);

    std::set<std::string> oov;
    for (const Sentence& s : sp.test.sentences)
      for (const Token& t : s.tokens) {
        const std::string norm = extract_features(t.form).norm;
        if (!base.entries.count(norm)) oov.insert(norm);
      }
    const VectorTable filled = backfill_table(
        base, {oov.begin(), oov.end()}, BackfillMode::kOovOnly, buckets, 17);

    // Every covered OOV word must now carry a non-zero vector.
    const SubwordTable sub = induce_subword_table(base, buckets, 17);
    for (const std::string& w : oov) {
      const SynthResult synth = synthesize_oov_vector(w, sub);
      if (synth.covered == 0) continue;
      const std::vector<double>* v = filled.find(w);
      bool nonzero = false;
      if (v)
        for (double x : *v) nonzero |= x != 0.0;
      coverage_ok = coverage_ok && nonzero;
    }

    // One model per seed; the backfilled table is swapped in at evaluation
    // time, isolating the effect of non-zero OOV vectors.
    const ModelConfig cfg = desk_config(seed);
    const PipelineModel m_base =
        train_tagger(sp.train, sp.dev, cfg, base, builtin_tag_map(),
                     TagMode::kSupertag);
    PipelineModel m_fill = m_base;
    m_fill.pretrained = filled;
    const std::set<std::string> vocab(m_base.train_vocab.begin(),
                                      m_base.train_vocab.end());
    const TagEvalReport rep_base = evaluate_tagger(m_base, sp.test, vocab);
    const TagEvalReport rep_fill = evaluate_tagger(m_fill, sp.test, vocab);
    sum_base += rep_base.oov_accuracy;
    sum_backfill += rep_fill.oov_accuracy;
    reports_ok = reports_ok && !tag_report_to_json(rep_fill).empty();

    if (seed == 1) {
      // Mode `all` must also complete end to end and produce a report.
      PipelineModel m_all = m_base;
      m_all.pretrained = backfill_table(
          base, {oov.begin(), oov.end()}, BackfillMode::kAll, buckets, 17);
      reports_ok =
          reports_ok &&
          !tag_report_to_json(evaluate_tagger(m_all, sp.test, vocab)).empty();
    }
  }
  report(7, "backfill covers OOV words and does not hurt OOV accuracy",
         coverage_ok && reports_ok && sum_backfill >= sum_base,
         "oov accuracy base " + std::to_string(sum_base / 3) +
             ", backfilled " + std::to_string(sum_backfill / 3));
}

// --- criterion 8 ---
std::vector<EntitySpan> projection_oracle(const std::vector<std::string>& tokens,
                                          const KeywordList& list) {
  std::unordered_map<std::string, std::string> map;
  for (const KeywordRecord& r : list.records) {
    std::string key;
    for (std::size_t k = 0; k < r.tokens.size(); ++k) {
      if (k) key += ' ';
      key += r.tokens[k];
    }
    map.emplace(key, r.entity_class);
  }
  std::vector<EntitySpan> out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t best = 0;
    std::string best_cls, key;
    for (std::size_t len = 1; len + i <= tokens.size(); ++len) {
      if (len > 1) key += ' ';
      key += tokens[i + len - 1];
      auto it = map.find(key);
      if (it != map.end()) {
        best = len;
        best_cls = it->second;
      }
    }
    if (best) {
      out.push_back({i, i + best, best_cls});
      i += best;
    } else {
      ++i;
    }
  }
  return out;
}

void criterion_projection_oracle() {
  const std::vector<std::string> vocab = {"α", "β", "γ", "δ", "ε", "ζ", "η",
                                          "θ"};
  const std::vector<std::string> classes = {"PERSON", "LOC", "ORG", "FAC"};
  Rng rng(4096);
  std::size_t mismatches = 0;
  for (int round = 0; round < 1000; ++round) {
    KeywordList list;
    const std::size_t n_records = 1 + rng.next_below(6);
    for (std::size_t r = 0; r < n_records; ++r) {
      KeywordRecord rec;
      const std::size_t len = 1 + rng.next_below(3);
      for (std::size_t k = 0; k < len; ++k)
        rec.tokens.push_back(vocab[rng.next_below(vocab.size())]);
      rec.entity_class = classes[rng.next_below(classes.size())];
      list.records.push_back(std::move(rec));
    }
    std::vector<std::string> tokens;
    const std::size_t n_tokens = 1 + rng.next_below(12);
    for (std::size_t k = 0; k < n_tokens; ++k)
      tokens.push_back(vocab[rng.next_below(vocab.size())]);
    mismatches +=
        project_keywords(tokens, list) != projection_oracle(tokens, list);
  }
  report(8, "keyword projection equals the leftmost-longest oracle",
         mismatches == 0, std::to_string(mismatches) + " mismatches");
}

// --- criterion 9 ---
void criterion_bilou_round_trip() {
  const std::vector<std::string> classes = {"PERSON", "LOC", "ORG", "FAC"};
  Rng rng(31337);
  bool pass = true;
  for (int round = 0; round < 10000 && pass; ++round) {
    const std::size_t len = 1 + rng.next_below(14);
    std::vector<EntitySpan> spans;
    std::size_t i = rng.next_below(3);
    while (i < len) {
      const std::size_t w = 1 + rng.next_below(3);
      if (i + w <= len && rng.next_below(2) == 0) {
        spans.push_back({i, i + w, classes[rng.next_below(classes.size())]});
        i += w;
      }
      i += 1 + rng.next_below(2);
    }
    pass = pass && bilou_decode(bilou_encode(spans, len)) == spans;
  }
  for (int round = 0; round < 10000 && pass; ++round) {
    const std::size_t len = 1 + rng.next_below(14);
    const std::vector<std::string> heads = {"O", "B-", "I-", "L-", "U-"};
    std::vector<std::string> noise(len);
    for (std::size_t k = 0; k < len; ++k) {
      const std::string h = heads[rng.next_below(heads.size())];
      noise[k] = h == "O" ? h : h + classes[rng.next_below(classes.size())];
    }
    try {
      const auto spans = bilou_decode(noise);
      pass = pass && bilou_decode(bilou_encode(spans, len)) == spans;
    } catch (...) {
      pass = false;
    }
  }
  report(9, "BILOU encode/decode round trips on 2x10000 random inputs", pass);
}

// --- criterion 10 ---
void criterion_distant_supervision() {
  // 400 sentences so every lexicon surface occurs several times in the
  // silver training data; smaller corpora leave singleton surfaces.
  const Split sp = make_split(400, 7, 7, false);
  const KeywordList list = build_keyword_list(sp.train);

  auto strip = [](Corpus c) {
    for (Sentence& s : c.sentences)
      for (Token& t : s.tokens) t.entity = "O";
    return c;
  };
  const Corpus silver_train = annotate_corpus(strip(sp.train), list);
  const Corpus silver_dev = annotate_corpus(strip(sp.dev), list);

  ModelConfig cfg = desk_config(7);
  cfg.epochs = 10;
  cfg.learning_rate = 0.02;
  const PipelineModel model =
      train_ner(silver_train, silver_dev, cfg, VectorTable{}, false);
  const NerEvalReport rep = evaluate_ner(model, sp.test);
  const bool non_entity_ok = rep.per_class.count("NonEntity") &&
                             rep.per_class.at("NonEntity").f1 >= 0.95;
  report(10, "distant supervision reaches macro F1 0.85 / NonEntity 0.95",
         rep.macro_f1 >= 0.85 && non_entity_ok,
         "macro " + std::to_string(rep.macro_f1) + ", NonEntity " +
             (rep.per_class.count("NonEntity")
                  ? std::to_string(rep.per_class.at("NonEntity").f1)
                  : std::string("absent")));
}

// --- criterion 11 ---
void criterion_pos_feature_protocol() {
  const Split sp = make_split(120, 7, 7, false);
  ModelConfig cfg = desk_config(11);
  cfg.epochs = 5;
  bool pass = true;
  std::string detail;
  try {
    const PipelineModel plain =
        train_ner(sp.train, sp.dev, cfg, VectorTable{}, false);
    const PipelineModel with_pos =
        train_ner(sp.train, sp.dev, cfg, VectorTable{}, true);
    const std::string r1 = ner_report_to_json(evaluate_ner(plain, sp.test));
    const std::string r2 = ner_report_to_json(evaluate_ner(with_pos, sp.test));
    pass = !r1.empty() && !r2.empty() &&
           r1.find("macro_f1") != std::string::npos &&
           r2.find("macro_f1") != std::string::npos;
  } catch (const std::exception& e) {
    pass = false;
    detail = e.what();
  }
  report(11, "ner training with and without the POS feature both complete",
         pass, detail);
}

// --- criterion 12 ---
void criterion_schedules() {
  bool pass = batch_schedule(0) == 4;
  for (std::size_t k = 1; k <= 5000; ++k)
    pass = pass && batch_schedule(k) >= batch_schedule(k - 1);
  pass = pass && batch_schedule(100000) == 32;

  // First attainment of the cap by direct compounding.
  double b = 4.0;
  std::size_t first = 0;
  while (static_cast<std::size_t>(std::min(32.0, b)) < 32) {
    b *= 1.001;
    ++first;
  }
  pass = pass && batch_schedule(first) == 32 &&
         batch_schedule(first - 1) < 32;

  pass = pass && dropout_schedule(0, 30) == 0.6 &&
         dropout_schedule(29, 30) == 0.4;
  report(12, "batch and dropout schedules are exact", pass,
         "cap first reached at step " + std::to_string(first));
}

// --- criterion 13 ---
std::uint64_t reference_fnv1a64(const std::vector<unsigned char>& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

void criterion_hash_portability() {
  std::vector<unsigned char> bytes(8, 0);  // seed 0, little-endian
  for (char c : std::string("abc"))
    bytes.push_back(static_cast<unsigned char>(c));
  const std::uint64_t expected = reference_fnv1a64(bytes);
  const bool pass = fnv1a64("abc", 0) == expected &&
                    hash_row("abc", 1ull << 16, 0) == expected % (1ull << 16) &&
                    hash_row("abc", 1ull << 16, 0) == 1387;
  report(13, "hash_row matches the independent FNV-1a-64 reference", pass);
}

}  // namespace

int main() {
  criterion_gradcheck();
  criterion_receptive_field();
  criterion_determinism();
  criterion_synthetic_learning();
  criterion_mode_comparison_and_perturbation();
  criterion_backfill();
  criterion_projection_oracle();
  criterion_bilou_round_trip();
  criterion_distant_supervision();
  criterion_pos_feature_protocol();
  criterion_schedules();
  criterion_hash_portability();
  if (g_failures) {
    std::cout << g_failures << " criteria failed\n";
    return 1;
  }
  std::cout << "all criteria passed\n";
  return 0;
}
