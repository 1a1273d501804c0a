// morfo: trainable POS tagger / NER pipeline for morphologically rich text.

#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "morfo/corpus.hpp"
#include "morfo/errors.hpp"
#include "morfo/features.hpp"
#include "morfo/ner.hpp"
#include "morfo/network.hpp"
#include "morfo/perturb.hpp"
#include "morfo/tagger.hpp"
#include "morfo/vectors.hpp"

namespace {

using nlohmann::json;
using namespace morfo;

ModelConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw data_error(std::string("invalid config JSON: ") + e.what());
  }
  const std::set<std::string> known = {
      "width",        "depth",        "window",      "attn_window",
      "dropout_start", "dropout_end", "batch_start", "batch_max",
      "batch_factor", "epochs",       "learning_rate", "seed",
      "norm_rows",    "norm_dim",     "affix_rows",  "affix_dim",
      "pos_rows",     "pos_dim"};
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!known.count(it.key()))
      throw config_error("config: unknown key '" + it.key() + "'");
  ModelConfig c;
  auto get = [&](const char* key, auto& field) {
    if (doc.contains(key)) field = doc.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("width", c.width);
  get("depth", c.depth);
  get("window", c.window);
  get("attn_window", c.attn_window);
  get("dropout_start", c.dropout_start);
  get("dropout_end", c.dropout_end);
  get("batch_start", c.batch_start);
  get("batch_max", c.batch_max);
  get("batch_factor", c.batch_factor);
  get("epochs", c.epochs);
  get("learning_rate", c.learning_rate);
  get("seed", c.seed);
  get("norm_rows", c.norm_rows);
  get("norm_dim", c.norm_dim);
  get("affix_rows", c.affix_rows);
  get("affix_dim", c.affix_dim);
  get("pos_rows", c.pos_rows);
  get("pos_dim", c.pos_dim);
  return c;
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out << content;
  if (!out) throw data_error("I/O failure writing " + path);
}

VectorTable load_vectors_or_empty(const std::string& path) {
  if (path.empty()) return VectorTable{.dim = 1, .entries = {}};
  return load_vec_text(path);
}

void print_tag_summary(const TagEvalReport& rep) {
  std::cout << "tokens: " << rep.n_tokens
            << "  micro accuracy: " << rep.micro_accuracy
            << "  macro F1: " << rep.macro_f1
            << "  oov accuracy: " << rep.oov_accuracy << " ("
            << rep.n_oov_tokens << " OOV tokens)\n";
}

void print_ner_summary(const NerEvalReport& rep) {
  std::cout << "tokens: " << rep.n_tokens << "  macro F1: " << rep.macro_f1
            << "  span F1: " << rep.span_f1 << "\n";
  for (const auto& [cls, s] : rep.per_class)
    std::cout << "  " << cls << ": P " << s.precision << " R " << s.recall
              << " F1 " << s.f1 << " (support " << s.support << ")\n";
}

int run(int argc, char** argv) {
  CLI::App app{"morfo: POS tagging and NER for morphologically rich text"};
  app.require_subcommand(1);

  // ---- corpus ----
  auto* corpus_cmd = app.add_subcommand("corpus", "corpus utilities");
  corpus_cmd->require_subcommand(1);

  auto* synth = corpus_cmd->add_subcommand("synth", "generate the synthetic corpus");
  std::size_t synth_n = 200;
  std::uint64_t synth_seed = 7;
  bool synth_oov = false;
  std::string synth_out, synth_tag_map_out;
  synth->add_option("--n", synth_n, "number of sentences");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_flag("--oov-split", synth_oov,
                  "reserve lemmas for the tail of the corpus");
  synth->add_option("--out", synth_out, "output corpus TSV")->required();
  synth->add_option("--tag-map-out", synth_tag_map_out,
                    "also write the bundled tag map JSON");
  synth->callback([&] {
    write_corpus_tsv(generate_synthetic_corpus(synth_n, synth_seed, synth_oov),
                     synth_out);
    if (!synth_tag_map_out.empty())
      write_text(synth_tag_map_out, tag_map_to_json(builtin_tag_map()));
    std::cout << "wrote " << synth_n << " sentences to " << synth_out << "\n";
  });

  auto* split = corpus_cmd->add_subcommand("split", "seeded train/test/dev split");
  std::string split_in, split_prefix;
  SplitSpec split_spec;
  split->add_option("--in", split_in, "input corpus TSV")->required();
  split->add_option("--seed", split_spec.seed, "shuffle seed");
  split->add_option("--train", split_spec.train_frac, "train fraction");
  split->add_option("--test", split_spec.test_frac, "test fraction");
  split->add_option("--dev", split_spec.dev_frac, "dev fraction");
  split->add_option("--out-prefix", split_prefix,
                    "output prefix (default: input path)");
  split->callback([&] {
    const Corpus corpus = parse_corpus_tsv(split_in);
    auto [train, test, dev] = split_corpus(corpus, split_spec);
    const std::string prefix = split_prefix.empty() ? split_in : split_prefix;
    write_corpus_tsv(train, prefix + ".train.tsv");
    write_corpus_tsv(test, prefix + ".test.tsv");
    write_corpus_tsv(dev, prefix + ".dev.tsv");
    std::cout << "split " << corpus.sentences.size() << " sentences into "
              << train.sentences.size() << "/" << test.sentences.size() << "/"
              << dev.sentences.size() << "\n";
  });

  auto* stats = corpus_cmd->add_subcommand("stats", "corpus statistics");
  std::string stats_in;
  stats->add_option("--in", stats_in, "input corpus TSV")->required();
  stats->callback([&] {
    const Corpus corpus = parse_corpus_tsv(stats_in);
    std::size_t tokens = 0, entities = 0;
    std::set<std::string> fine_tags, forms;
    for (const Sentence& s : corpus.sentences) {
      for (const Token& t : s.tokens) {
        ++tokens;
        forms.insert(t.form);
        if (!t.fine_tag.empty()) fine_tags.insert(t.fine_tag);
      }
      std::vector<std::string> labels;
      for (const Token& t : s.tokens) labels.push_back(t.entity);
      entities += bilou_decode(labels).size();
    }
    std::cout << "sentences: " << corpus.sentences.size()
              << "\ntokens: " << tokens << "\ndistinct forms: " << forms.size()
              << "\ndistinct fine tags: " << fine_tags.size()
              << "\nentity mentions: " << entities << "\n";
  });

  // ---- shared model options ----
  struct TrainArgs {
    std::string train, dev, vectors, config, out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t epochs = 0;
    bool verbose = false;
    ModelConfig resolve() const {
      ModelConfig c = config.empty() ? ModelConfig{} : load_run_config(config);
      if (seed_set) c.seed = seed;
      if (epochs) c.epochs = epochs;
      return c;
    }
  };
  auto add_train_options = [](CLI::App* cmd, TrainArgs& args) {
    cmd->add_option("--train", args.train, "training corpus TSV")->required();
    cmd->add_option("--dev", args.dev, "dev corpus TSV")->required();
    cmd->add_option("--vectors", args.vectors, "pretrained .vec file");
    cmd->add_option("--config", args.config, "model config JSON");
    cmd->add_option("--seed", args.seed, "training seed (overrides config)")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--epochs", args.epochs, "epochs (overrides config)");
    cmd->add_flag("--verbose", args.verbose, "per-epoch progress on stderr");
    cmd->add_option("--out", args.out, "model output path")->required();
  };

  // ---- tagger ----
  auto* tagger_cmd = app.add_subcommand("tagger", "POS tagger");
  tagger_cmd->require_subcommand(1);

  auto* ttrain = tagger_cmd->add_subcommand("train", "train a tagger");
  TrainArgs targs;
  std::string tmode = "supertag", ttag_map;
  add_train_options(ttrain, targs);
  ttrain->add_option("--mode", tmode, "supertag | upos")
      ->check(CLI::IsMember({"supertag", "upos"}));
  ttrain->add_option("--tag-map", ttag_map,
                     "tag map JSON (default: bundled map)");
  ttrain->callback([&] {
    const TagMap map =
        ttag_map.empty() ? builtin_tag_map() : load_tag_map(ttag_map);
    const PipelineModel model = train_tagger(
        parse_corpus_tsv(targs.train), parse_corpus_tsv(targs.dev),
        targs.resolve(), load_vectors_or_empty(targs.vectors), map,
        tmode == "upos" ? TagMode::kUpos : TagMode::kSupertag, nullptr,
        targs.verbose);
    save_model(model, targs.out);
    std::cout << "saved model to " << targs.out << "\n";
  });

  auto* teval = tagger_cmd->add_subcommand("eval", "evaluate a tagger");
  std::string teval_model, teval_test, teval_report;
  teval->add_option("--model", teval_model)->required();
  teval->add_option("--test", teval_test)->required();
  teval->add_option("--report", teval_report, "JSON report path");
  teval->callback([&] {
    const PipelineModel model = load_model(teval_model);
    const std::set<std::string> vocab(model.train_vocab.begin(),
                                      model.train_vocab.end());
    const TagEvalReport rep =
        evaluate_tagger(model, parse_corpus_tsv(teval_test), vocab);
    if (!teval_report.empty()) write_text(teval_report, tag_report_to_json(rep));
    print_tag_summary(rep);
  });

  auto* ttag = tagger_cmd->add_subcommand("tag", "tag a corpus");
  std::string ttag_model, ttag_in, ttag_out;
  ttag->add_option("--model", ttag_model)->required();
  ttag->add_option("--in", ttag_in)->required();
  ttag->add_option("--out", ttag_out)->required();
  ttag->callback([&] {
    const PipelineModel model = load_model(ttag_model);
    Corpus corpus = parse_corpus_tsv(ttag_in);
    const bool upos_mode = model.mode == "upos";
    for (Sentence& s : corpus.sentences) {
      const auto tags_here = tag(model, s);
      for (std::size_t i = 0; i < s.tokens.size(); ++i) {
        if (upos_mode) {
          s.tokens[i].upos = tags_here[i];
        } else {
          s.tokens[i].fine_tag = tags_here[i];
          if (const TagEntry* e = builtin_tag_map().lookup(tags_here[i])) {
            s.tokens[i].upos = e->upos;
            s.tokens[i].morph = e->morph;
          }
        }
      }
    }
    write_corpus_tsv(corpus, ttag_out);
    std::cout << "tagged " << corpus.sentences.size() << " sentences\n";
  });

  // ---- ner ----
  auto* ner_cmd = app.add_subcommand("ner", "named entity recognizer");
  ner_cmd->require_subcommand(1);

  auto* kw = ner_cmd->add_subcommand("build-keywords",
                                     "keyword list from gold annotations");
  std::string kw_in, kw_out;
  kw->add_option("--in", kw_in)->required();
  kw->add_option("--out", kw_out)->required();
  kw->callback([&] {
    const KeywordList list = build_keyword_list(parse_corpus_tsv(kw_in));
    write_keyword_list(list, kw_out);
    std::cout << "wrote " << list.records.size() << " keyword records\n";
  });

  auto* annotate = ner_cmd->add_subcommand(
      "annotate", "project a keyword list onto a corpus (silver labels)");
  std::string an_in, an_kw, an_out;
  annotate->add_option("--in", an_in)->required();
  annotate->add_option("--keywords", an_kw)->required();
  annotate->add_option("--out", an_out)->required();
  annotate->callback([&] {
    const Corpus silver =
        annotate_corpus(parse_corpus_tsv(an_in), load_keyword_list(an_kw));
    write_corpus_tsv(silver, an_out);
    std::cout << "annotated " << silver.sentences.size() << " sentences\n";
  });

  auto* ntrain = ner_cmd->add_subcommand("train", "train the recognizer");
  TrainArgs nargs;
  bool use_pos = false;
  std::string pos_source = "gold", pos_model_path;
  add_train_options(ntrain, nargs);
  ntrain->add_flag("--use-pos-feature", use_pos,
                   "activate the POS hash-embedding feature");
  ntrain->add_option("--pos-source", pos_source, "gold | model")
      ->check(CLI::IsMember({"gold", "model"}));
  ntrain->add_option("--pos-model", pos_model_path,
                     "tagger model for --pos-source model");
  ntrain->callback([&] {
    PipelineModel pos_model;
    const PipelineModel* pos_ptr = nullptr;
    if (use_pos && pos_source == "model") {
      if (pos_model_path.empty())
        throw config_error("--pos-source model requires --pos-model");
      pos_model = load_model(pos_model_path);
      pos_ptr = &pos_model;
    }
    const PipelineModel model = train_ner(
        parse_corpus_tsv(nargs.train), parse_corpus_tsv(nargs.dev),
        nargs.resolve(), load_vectors_or_empty(nargs.vectors), use_pos,
        pos_source == "gold" ? PosSource::kGold : PosSource::kModel, pos_ptr,
        nullptr, nargs.verbose);
    save_model(model, nargs.out);
    std::cout << "saved model to " << nargs.out << "\n";
  });

  auto* neval = ner_cmd->add_subcommand("eval", "evaluate the recognizer");
  std::string neval_model, neval_test, neval_report, neval_pos_model;
  neval->add_option("--model", neval_model)->required();
  neval->add_option("--test", neval_test)->required();
  neval->add_option("--report", neval_report, "JSON report path");
  neval->add_option("--pos-model", neval_pos_model,
                    "tagger model for predicted POS features");
  neval->callback([&] {
    const PipelineModel model = load_model(neval_model);
    PipelineModel pos_model;
    const PipelineModel* pos_ptr = nullptr;
    if (!neval_pos_model.empty()) {
      pos_model = load_model(neval_pos_model);
      pos_ptr = &pos_model;
    }
    const NerEvalReport rep =
        evaluate_ner(model, parse_corpus_tsv(neval_test), pos_ptr);
    if (!neval_report.empty()) write_text(neval_report, ner_report_to_json(rep));
    print_ner_summary(rep);
  });

  // ---- vectors ----
  auto* vec_cmd = app.add_subcommand("vectors", "vector table utilities");
  vec_cmd->require_subcommand(1);

  auto* induce = vec_cmd->add_subcommand("induce",
                                         "build a subword bucket table");
  std::string ind_vec, ind_out;
  std::size_t ind_buckets = kDefaultBucketCount;
  std::uint64_t ind_seed = 0;
  induce->add_option("--vectors", ind_vec)->required();
  induce->add_option("--out", ind_out)->required();
  induce->add_option("--buckets", ind_buckets, "bucket count");
  induce->add_option("--seed", ind_seed, "bucket hash seed");
  induce->callback([&] {
    const SubwordTable sub =
        induce_subword_table(load_vec_text(ind_vec), ind_buckets, ind_seed);
    save_subword_table(sub, ind_out);
    std::size_t populated = 0;
    for (auto c : sub.counts) populated += c > 0;
    std::cout << "induced " << populated << "/" << sub.bucket_count
              << " populated buckets\n";
  });

  auto* backfill = vec_cmd->add_subcommand(
      "backfill", "synthesize vectors for out-of-vocabulary words");
  std::string bf_vec, bf_words, bf_corpus, bf_out, bf_mode = "oov-only";
  std::size_t bf_buckets = kDefaultBucketCount;
  std::uint64_t bf_seed = 0;
  backfill->add_option("--vectors", bf_vec)->required();
  backfill->add_option("--mode", bf_mode, "oov-only | all")
      ->check(CLI::IsMember({"oov-only", "all"}));
  backfill->add_option("--oov-words", bf_words,
                       "file with one word per line");
  backfill->add_option("--corpus", bf_corpus,
                       "corpus whose unknown forms become the OOV list");
  backfill->add_option("--buckets", bf_buckets, "bucket count");
  backfill->add_option("--seed", bf_seed, "bucket hash seed");
  backfill->add_option("--out", bf_out)->required();
  backfill->callback([&] {
    const VectorTable table = load_vec_text(bf_vec);
    std::set<std::string> oov;
    if (!bf_words.empty()) {
      std::ifstream in(bf_words);
      if (!in) throw data_error("cannot open " + bf_words);
      std::string w;
      while (std::getline(in, w))
        if (!w.empty()) oov.insert(w);
    }
    if (!bf_corpus.empty()) {
      const Corpus c = parse_corpus_tsv(bf_corpus);
      for (const Sentence& s : c.sentences)
        for (const Token& t : s.tokens) {
          const std::string norm = extract_features(t.form).norm;
          if (!table.entries.count(norm)) oov.insert(norm);
        }
    }
    const VectorTable out = backfill_table(
        table, {oov.begin(), oov.end()},
        bf_mode == "all" ? BackfillMode::kAll : BackfillMode::kOovOnly,
        bf_buckets, bf_seed);
    write_vec_text(out, bf_out);
    std::cout << "backfilled table: " << table.entries.size() << " -> "
              << out.entries.size() << " entries\n";
  });

  // ---- perturb ----
  auto* perturb = app.add_subcommand("perturb",
                                     "corrupt token surfaces (OOV test sets)");
  std::string pt_in, pt_out;
  PerturbSpec pt_spec;
  perturb->add_option("--in", pt_in)->required();
  perturb->add_option("--rate", pt_spec.rate, "fraction of alphabetic tokens");
  perturb->add_option("--seed", pt_spec.seed);
  perturb->add_option("--out", pt_out)->required();
  perturb->callback([&] {
    const Corpus in = parse_corpus_tsv(pt_in);
    const Corpus out = perturb_corpus(in, pt_spec);
    write_corpus_tsv(out, pt_out);
    std::size_t changed = 0;
    for (std::size_t s = 0; s < in.sentences.size(); ++s)
      for (std::size_t i = 0; i < in.sentences[s].tokens.size(); ++i)
        changed += in.sentences[s].tokens[i].form !=
                   out.sentences[s].tokens[i].form;
    std::cout << "perturbed " << changed << " tokens\n";
  });

  // ---- gradcheck ----
  auto* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference gradient check");
  ModelConfig gc_cfg;
  gc_cfg.width = 8;
  gc_cfg.depth = 2;
  gc_cfg.attn_window = 2;
  gc_cfg.n_tags = 5;
  gc_cfg.norm_rows = 20;
  gc_cfg.norm_dim = 8;
  gc_cfg.affix_rows = 10;
  gc_cfg.affix_dim = 4;
  gc_cfg.pos_rows = 10;
  gc_cfg.pos_dim = 4;
  std::uint64_t gc_seed = 1;
  gradcheck_cmd->add_option("--width", gc_cfg.width);
  gradcheck_cmd->add_option("--depth", gc_cfg.depth);
  gradcheck_cmd->add_option("--attn-window", gc_cfg.attn_window);
  gradcheck_cmd->add_option("--tags", gc_cfg.n_tags);
  gradcheck_cmd->add_option("--seed", gc_seed);
  gradcheck_cmd->callback([&] {
    const double err = gradient_check(gc_cfg, gc_seed);
    std::cout << "max relative error: " << err << "\n";
    if (err >= 1e-4) throw numeric_error("gradient check failed");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);  // usage errors exit 1 via below
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    const int rc = run(argc, argv);
    return rc == 0 ? 0 : 1;
  } catch (const morfo::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const morfo::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const morfo::data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
