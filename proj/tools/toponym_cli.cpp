// toponym: train, apply and evaluate the toponym tagger from the command line.
//
// Exit codes: 0 success, 1 invalid configuration or arguments, 2 runtime
// failure (unreadable or malformed input, I/O errors).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "toponym/toponym.hpp"

namespace fs = std::filesystem;
using namespace toponym;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct CommonOptions {
  std::string config;
  std::string preset;
  std::string corpus;
  std::vector<std::string> embeddings;
  std::string model;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "Run configuration file");
  cmd->add_option("--preset", o.preset, "Built-in experiment settings (basic, full, baseline, ...)");
  cmd->add_option("--corpus", o.corpus, "Corpus directory with <id>.txt/<id>.ann pairs");
  cmd->add_option("--embeddings", o.embeddings, "Embedding file(s); several are concatenated")->delimiter(',');
  cmd->add_option("--model", o.model, "Model file (.dffnn)");
  cmd->add_option("--out", o.out, "Output file or directory");
  cmd->add_option("--seed", o.seed, "Seed for every random choice");
}

// Paths in the final configuration, resolved against the config file
// directory and TOPO_DATA_DIR.
struct Resolved {
  RunConfig cfg;
  fs::path corpus;
  fs::path train_ids, dev_ids, test_ids;
  std::vector<fs::path> embeddings;
  fs::path model;
  fs::path out;
};

std::string resolved(const std::string& p, const RunConfig& cfg) {
  return p.empty() ? p : resolve_path(p, cfg.base_dir).string();
}

// Outputs that do not exist yet land next to the config file.
fs::path output_path(const std::string& p, const RunConfig& cfg) {
  if (p.empty()) return {};
  const fs::path found = resolve_path(p, cfg.base_dir);
  if (found.is_absolute() || fs::exists(found) || cfg.base_dir.empty()) return found;
  return cfg.base_dir / found;
}

Resolved build_config(const CommonOptions& o) {
  RunConfig cfg = o.config.empty() ? parse_config("") : load_config(resolve_path(o.config, {}));
  if (!o.preset.empty()) cfg = with_preset(cfg, o.preset);
  if (o.seed) cfg.set_seed(*o.seed);
  // Command-line paths are relative to the working directory.
  if (!o.corpus.empty()) cfg.paths.corpus_dir = fs::absolute(resolve_path(o.corpus, {})).string();
  if (!o.embeddings.empty()) {
    cfg.paths.embeddings.clear();
    for (const auto& e : o.embeddings) cfg.paths.embeddings.push_back(fs::absolute(resolve_path(e, {})).string());
  }
  if (!o.model.empty()) cfg.paths.model = fs::absolute(o.model).string();
  if (!o.out.empty()) cfg.paths.output = fs::absolute(o.out).string();
  validate_settings(cfg);

  Resolved r;
  r.corpus = resolved(cfg.paths.corpus_dir, cfg);
  auto manifest = [&](const std::string& given, const char* def) {
    if (!given.empty()) return fs::path(resolved(given, cfg));
    return r.corpus.empty() ? fs::path() : r.corpus / def;
  };
  r.train_ids = manifest(cfg.paths.train_manifest, "train.ids");
  r.dev_ids = manifest(cfg.paths.dev_manifest, "dev.ids");
  r.test_ids = manifest(cfg.paths.test_manifest, "test.ids");
  for (const auto& e : cfg.paths.embeddings) r.embeddings.emplace_back(resolved(e, cfg));
  r.model = output_path(cfg.paths.model, cfg);
  r.out = output_path(cfg.paths.output, cfg);
  r.cfg = std::move(cfg);
  return r;
}

void require_dir(const fs::path& p, const char* field) {
  if (p.empty()) throw ConfigError(field, "not set");
  if (!fs::is_directory(p)) throw ConfigError(field, "not a directory: " + p.string());
}

void require_file(const fs::path& p, const char* field) {
  if (p.empty()) throw ConfigError(field, "not set");
  if (!fs::is_regular_file(p)) throw ConfigError(field, "file not found: " + p.string());
}

void require_embeddings(const Resolved& r) {
  if (r.embeddings.empty()) throw ConfigError("paths.embeddings", "not set");
  for (const auto& e : r.embeddings) require_file(e, "paths.embeddings");
}

void require_split(const Resolved& r) {
  require_dir(r.corpus, "paths.corpus");
  require_file(r.train_ids, "paths.train");
  require_file(r.dev_ids, "paths.dev");
  require_file(r.test_ids, "paths.test");
}

void require_optional_files(const RunConfig& cfg) {
  if (!cfg.paths.stopwords.empty()) require_file(resolved(cfg.paths.stopwords, cfg), "paths.stopwords");
  if (!cfg.paths.pos_registry.empty()) require_file(resolved(cfg.paths.pos_registry, cfg), "paths.pos_registry");
  if (!cfg.paths.lemma_lexicon.empty()) require_file(resolved(cfg.paths.lemma_lexicon, cfg), "paths.lemma_lexicon");
}

EmbeddingStore load_store(const Resolved& r) {
  const OovPolicy policy = r.cfg.oov_policy();
  EmbeddingStore store = load_embeddings(r.embeddings.front().string());
  for (std::size_t i = 1; i < r.embeddings.size(); ++i) {
    store = concat_stores(store, policy, load_embeddings(r.embeddings[i].string()), policy);
  }
  if (store.header_count_mismatch) {
    std::cerr << "warning: embedding header count differs from the number of rows\n";
  }
  return store;
}

FeatureResources load_resources(const RunConfig& cfg) {
  FeatureResources res;
  if (!cfg.paths.stopwords.empty()) res.stopwords = StopWords::load(resolved(cfg.paths.stopwords, cfg));
  if (!cfg.paths.pos_registry.empty()) res.registry = PosRegistry::load(resolved(cfg.paths.pos_registry, cfg));
  if (!cfg.paths.lemma_lexicon.empty()) res.lemmatizer.load_lexicon(resolved(cfg.paths.lemma_lexicon, cfg));
  return res;
}

ExperimentContext make_context(const Resolved& r, const EmbeddingStore& store, const fs::path& pos_dir) {
  ExperimentContext ctx;
  ctx.store = &store;
  ctx.policy = r.cfg.oov_policy();
  ctx.resources = load_resources(r.cfg);
  ctx.pos = [pos_dir](const Document& d) {
    return pos_tag(d, pos_dir.empty() ? std::nullopt : std::optional<fs::path>(pos_dir));
  };
  return ctx;
}

// Writes to `path`, or standard output when empty.
template <typename F>
void emit(const fs::path& path, F&& write) {
  if (path.empty()) {
    write(std::cout);
    return;
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write(out);
}

void print_report(const std::string& label, const TestEvaluation& te) {
  std::cerr << label << ": P=" << te.tokens.precision_str() << " R=" << te.tokens.recall_str()
            << " F1=" << te.tokens.f1_str() << " (spans TP=" << te.spans.tp << " FP=" << te.spans.fp
            << " FN=" << te.spans.fn << ")\n";
}

// ---------------------------------------------------------------------------

int cmd_train(const CommonOptions& o, const std::string& history_opt) {
  Resolved r = build_config(o);
  require_split(r);
  require_embeddings(r);
  require_optional_files(r.cfg);
  if (r.model.empty()) throw ConfigError("paths.model", "not set");
  fs::path history = !history_opt.empty()          ? fs::path(history_opt)
                     : !r.cfg.paths.history.empty() ? output_path(r.cfg.paths.history, r.cfg)
                                                    : fs::path(r.model.string() + ".history.tsv");

  const EmbeddingStore store = load_store(r);
  check_input_dim(r.cfg, store.dimension);
  const CorpusSplit split = load_split(r.corpus, r.train_ids, r.dev_ids, r.test_ids);
  if (split.train.empty()) throw ConfigError("paths.train", "training manifest lists no documents");
  const ExperimentContext ctx = make_context(r, store, r.corpus);

  const auto& exp = r.cfg.experiment;
  TrainHooks hooks;
  hooks.on_evaluation = [](const HistoryRow& row) {
    std::cerr << "epoch " << row.epoch << " train_loss=" << format_real(row.train_loss)
              << " dev_loss=" << format_real(row.dev_loss) << " dev_F1=" << row.dev.f1_str() << '\n';
  };
  const auto trained = train_experiment(exp, split.train, split.dev, ctx, hooks);
  const auto& h = trained.result.history;
  if (h.clamped_losses > 0) {
    std::cerr << "warning: " << h.clamped_losses << " training probabilities clamped to 1e-12\n";
  }

  if (r.model.has_parent_path()) fs::create_directories(r.model.parent_path());
  save_model(trained.result.model, r.model.string());
  emit(history, [&](std::ostream& out) { write_history_tsv(out, h); });
  std::cerr << "best epoch " << h.best_epoch << (h.stopped_early ? " (early stop)" : "") << "; model written to "
            << r.model.string() << '\n';

  if (!split.test.empty()) {
    const auto te = evaluate_documents(trained.result.model, split.test, exp.features, ctx);
    print_report("test", te);
    if (!r.out.empty()) {
      emit(r.out, [&](std::ostream& out) { write_report_tsv(out, exp.name, exp.features.window, te.tokens); });
    }
  }
  return 0;
}

// Text inputs: a single .txt file or every .txt in a directory.
std::vector<fs::path> input_texts(const fs::path& input) {
  std::vector<fs::path> files;
  if (fs::is_regular_file(input)) {
    files.push_back(input);
  } else {
    for (const auto& e : fs::directory_iterator(input)) {
      if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  }
  return files;
}

int cmd_predict(const CommonOptions& o, const std::string& input_opt) {
  Resolved r = build_config(o);
  require_file(r.model, "paths.model");
  require_embeddings(r);
  require_optional_files(r.cfg);
  const fs::path input = input_opt.empty() ? r.corpus : fs::path(input_opt);
  if (input.empty()) throw ConfigError("input", "not set (use --input or --corpus)");
  if (!fs::exists(input)) throw ConfigError("input", "not found: " + input.string());
  const fs::path out_dir = r.out.empty() ? (fs::is_directory(input) ? input : input.parent_path()) : r.out;

  const ModelParams model = load_model(r.model.string());
  const EmbeddingStore store = load_store(r);
  const std::size_t dim = check_input_dim(r.cfg, store.dimension);
  if (dim != model.arch.input_dim) {
    throw ConfigError("features", "feature layout gives " + std::to_string(dim) + " inputs but the model expects " +
                                      std::to_string(model.arch.input_dim));
  }
  const fs::path pos_dir = fs::is_directory(input) ? input : input.parent_path();
  const ExperimentContext ctx = make_context(r, store, pos_dir);
  const FeatureConfig& fc = r.cfg.experiment.features;

  fs::create_directories(out_dir);
  std::size_t spans = 0;
  const auto files = input_texts(input);
  for (const auto& f : files) {
    Document doc;
    doc.id = f.stem().string();
    doc.text = text::read_file(f.string());
    doc.tokens = tokenize(doc.text);
    const auto prepared = prepare_documents({doc}, fc, ctx);
    const auto dp = predict_document(model, prepared.front(), fc, store, ctx.policy);
    const auto predicted = runs_to_spans(doc, dp.labels);
    spans += predicted.size();
    emit(out_dir / (doc.id + ".pred.ann"), [&](std::ostream& out) { out << format_annotations(predicted); });
  }
  std::cerr << files.size() << " document(s), " << spans << " predicted span(s) written to " << out_dir.string()
            << '\n';
  return 0;
}

int cmd_evaluate(const std::string& gold_dir, const std::string& pred_dir, const std::string& out) {
  require_dir(gold_dir, "gold");
  require_dir(pred_dir, "pred");
  const auto gold = load_corpus(gold_dir);
  std::vector<LabeledDoc> labeled;
  Counts spans;
  for (const auto& g : gold) {
    fs::path p = fs::path(pred_dir) / (g.id + ".pred.ann");
    if (!fs::exists(p)) p = fs::path(pred_dir) / (g.id + ".ann");
    if (!fs::exists(p)) throw ConfigError("pred", "no prediction for document '" + g.id + "'");
    const Document pred = make_document(g.id, g.text, text::read_file(p.string()), p.string());
    spans += span_counts(g, pred.labels());
    labeled.push_back(LabeledDoc{g.id, pred.labels(), g.labels()});
  }
  const EvalReport report = score_documents(labeled);
  std::cout << "precision\t" << report.precision_str() << "\nrecall\t" << report.recall_str() << "\nf1\t"
            << report.f1_str() << "\ntp\t" << report.counts.tp << "\nfp\t" << report.counts.fp << "\nfn\t"
            << report.counts.fn << "\nspan_tp\t" << spans.tp << "\nspan_fp\t" << spans.fp << "\nspan_fn\t"
            << spans.fn << '\n';
  if (!out.empty()) {
    emit(out, [&](std::ostream& os) {
      os << "doc\ttp\tfp\tfn\ttn\n";
      for (const auto& [id, c] : report.per_doc) {
        os << id << '\t' << c.tp << '\t' << c.fp << '\t' << c.fn << '\t' << c.tn << '\n';
      }
      os << "total\t" << report.counts.tp << '\t' << report.counts.fp << '\t' << report.counts.fn << '\t'
         << report.counts.tn << '\n';
    });
  }
  return 0;
}

// Ablation list: one preset name or config path per line; blank lines and
// `#` comments ignored. Without a list every built-in row runs.
AblationSpec read_ablation_spec(const std::string& path, const RunConfig& base) {
  if (path.empty()) {
    AblationSpec spec = default_ablation_spec();
    for (auto& e : spec) e.training.seed = base.seed();
    return spec;
  }
  const fs::path p = resolve_path(path, {});
  if (!fs::is_regular_file(p)) throw ConfigError("spec", "file not found: " + path);
  AblationSpec spec;
  const auto lines = text::read_lines(p.string());
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string entry(text::trim(lines[n]));
    if (entry.empty() || entry.front() == '#') continue;
    if (auto pre = preset(entry)) {
      pre->training.seed = base.seed();
      spec.push_back(*pre);
      continue;
    }
    const fs::path conf = resolve_path(entry, p.parent_path());
    if (!fs::is_regular_file(conf)) {
      throw ConfigError("spec:" + std::to_string(n + 1), "neither a preset nor a config file: " + entry);
    }
    RunConfig c = load_config(conf);
    validate_settings(c);
    spec.push_back(c.experiment);
  }
  if (spec.empty()) throw ConfigError("spec", "no rows");
  std::set<std::string> names;
  for (const auto& e : spec) {
    if (!names.insert(e.name).second) throw ConfigError("spec", "duplicate row name '" + e.name + "'");
  }
  return spec;
}

int cmd_ablate(const CommonOptions& o, const std::string& spec_path, const std::vector<std::uint64_t>& seeds) {
  Resolved r = build_config(o);
  require_split(r);
  require_embeddings(r);
  require_optional_files(r.cfg);
  const AblationSpec spec = read_ablation_spec(spec_path, r.cfg);
  const EmbeddingStore store = load_store(r);
  const CorpusSplit split = load_split(r.corpus, r.train_ids, r.dev_ids, r.test_ids);
  const ExperimentContext ctx = make_context(r, store, r.corpus);
  const auto rows = run_ablation(spec, split, ctx, seeds);
  for (const auto& row : rows) {
    if (row.error) std::cerr << "row " << row.name << " failed: " << *row.error << '\n';
  }
  emit(r.out, [&](std::ostream& out) { write_ablation_tsv(out, rows); });
  return 0;
}

int cmd_sweep(const CommonOptions& o, std::size_t from, std::size_t to, const std::vector<std::uint64_t>& seeds) {
  Resolved r = build_config(o);
  if (from > to) throw ConfigError("range", "--from must not exceed --to");
  require_split(r);
  require_embeddings(r);
  require_optional_files(r.cfg);
  const EmbeddingStore store = load_store(r);
  const CorpusSplit split = load_split(r.corpus, r.train_ids, r.dev_ids, r.test_ids);
  const ExperimentContext ctx = make_context(r, store, r.corpus);
  const auto rows = sweep_window(r.cfg.experiment, from, to, split, ctx, seeds);
  for (const auto& row : rows) {
    if (row.error) std::cerr << "c=" << row.context << " failed: " << *row.error << '\n';
  }
  emit(r.out, [&](std::ostream& out) { write_sweep_tsv(out, rows); });
  return 0;
}

// Splits from the manifests when present, otherwise the whole directory.
std::vector<SplitStats> collect_stats(const Resolved& r) {
  if (fs::exists(r.train_ids) && fs::exists(r.dev_ids) && fs::exists(r.test_ids)) {
    const auto s = corpus_stats(load_split(r.corpus, r.train_ids, r.dev_ids, r.test_ids));
    return {s.train, s.dev, s.test};
  }
  return {split_stats("all", load_corpus(r.corpus))};
}

int cmd_stats(const CommonOptions& o) {
  Resolved r = build_config(o);
  require_dir(r.corpus, "paths.corpus");
  const auto stats = collect_stats(r);
  emit(r.out, [&](std::ostream& out) {
    out << "split\tarticles\tsize_bytes\twords\tavg_words\ttoponyms\tavg_toponyms\ttoponym_token_pct\n";
    for (const auto& s : stats) {
      out << s.name << '\t' << s.articles << '\t' << s.size_bytes << '\t' << s.words << '\t'
          << format_percent(s.avg_words()) << '\t' << s.toponym_spans << '\t' << format_percent(s.avg_toponyms())
          << '\t' << format_percent(s.toponym_token_pct()) << '\n';
    }
  });
  return 0;
}

int cmd_oov(const CommonOptions& o) {
  Resolved r = build_config(o);
  require_dir(r.corpus, "paths.corpus");
  require_embeddings(r);
  const auto docs = load_corpus(r.corpus);
  std::vector<std::pair<EmbeddingStore, OovReport>> reports;
  for (const auto& e : r.embeddings) {
    EmbeddingStore s = load_embeddings(e.string());
    const OovReport rep = oov_report(s, docs, r.cfg.oov_policy());
    reports.emplace_back(std::move(s), rep);
  }
  emit(r.out, [&](std::ostream& out) {
    out << "name\tdimension\tvocabulary\toov_type_pct\toov_token_pct\n";
    for (const auto& [s, rep] : reports) {
      out << s.name << '\t' << s.dimension << '\t' << s.size() << '\t' << format_percent(rep.type_pct()) << '\t'
          << format_percent(rep.token_pct()) << '\n';
    }
  });
  return 0;
}

int cmd_confidences(const CommonOptions& o, const std::string& split_name, std::size_t sample) {
  Resolved r = build_config(o);
  require_split(r);
  require_file(r.model, "paths.model");
  require_embeddings(r);
  require_optional_files(r.cfg);
  if (split_name != "train" && split_name != "dev" && split_name != "test") {
    throw ConfigError("split", "expected train, dev or test");
  }
  const ModelParams model = load_model(r.model.string());
  const EmbeddingStore store = load_store(r);
  const std::size_t dim = check_input_dim(r.cfg, store.dimension);
  if (dim != model.arch.input_dim) {
    throw ConfigError("features", "feature layout gives " + std::to_string(dim) + " inputs but the model expects " +
                                      std::to_string(model.arch.input_dim));
  }
  const CorpusSplit split = load_split(r.corpus, r.train_ids, r.dev_ids, r.test_ids);
  const auto& docs = split_name == "train" ? split.train : split_name == "dev" ? split.dev : split.test;
  const ExperimentContext ctx = make_context(r, store, r.corpus);
  const auto records =
      dump_confidences(model, docs, r.cfg.experiment.features, ctx, ConfidenceSample{sample, r.cfg.seed()});
  emit(r.out, [&](std::ostream& out) { write_confidences_tsv(out, records); });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Toponym detection with a context-window feed-forward network"};
  app.require_subcommand(1);

  CommonOptions train_o, predict_o, ablate_o, sweep_o, stats_o, oov_o, conf_o;
  std::string history, input, gold, pred, eval_out, spec;
  std::vector<std::uint64_t> ablate_seeds, sweep_seeds;
  std::size_t sweep_from = 1, sweep_to = 7, sample = 0;
  std::string conf_split = "test";

  auto* train = app.add_subcommand("train", "Train a model; writes the model file and a history TSV");
  add_common(train, train_o);
  train->add_option("--history", history, "History TSV (default <model>.history.tsv)");

  auto* predict = app.add_subcommand("predict", "Tag .txt files and write <id>.pred.ann span files");
  add_common(predict, predict_o);
  predict->add_option("--input", input, "A .txt file or a directory of them");

  auto* evaluate = app.add_subcommand("evaluate", "Score predicted spans against gold annotations");
  evaluate->add_option("--gold", gold, "Gold corpus directory")->required();
  evaluate->add_option("--pred", pred, "Directory of <id>.pred.ann files")->required();
  evaluate->add_option("--out", eval_out, "Per-document counts TSV");

  auto* ablate = app.add_subcommand("ablate", "Train and test every ablation row");
  add_common(ablate, ablate_o);
  ablate->add_option("--spec", spec, "Row list: preset names or config files, one per line");
  ablate->add_option("--seeds", ablate_seeds, "Run each row once per seed")->delimiter(',');

  auto* sweep = app.add_subcommand("sweep-window", "Vary the context size c over a range");
  add_common(sweep, sweep_o);
  sweep->add_option("--from", sweep_from, "Smallest c");
  sweep->add_option("--to", sweep_to, "Largest c");
  sweep->add_option("--seeds", sweep_seeds, "Run each size once per seed")->delimiter(',');

  auto* stats = app.add_subcommand("stats", "Corpus statistics per split");
  add_common(stats, stats_o);

  auto* oov = app.add_subcommand("oov", "Out-of-vocabulary rates of embedding files over a corpus");
  add_common(oov, oov_o);

  auto* conf = app.add_subcommand("confidences", "Per-token class probabilities of a trained model");
  add_common(conf, conf_o);
  conf->add_option("--split", conf_split, "train, dev or test");
  conf->add_option("--sample", sample, "Keep at most this many tokens (0 keeps all)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*train) return cmd_train(train_o, history);
    if (*predict) return cmd_predict(predict_o, input);
    if (*evaluate) return cmd_evaluate(gold, pred, eval_out);
    if (*ablate) return cmd_ablate(ablate_o, spec, ablate_seeds);
    if (*sweep) return cmd_sweep(sweep_o, sweep_from, sweep_to, sweep_seeds);
    if (*stats) return cmd_stats(stats_o);
    if (*oov) return cmd_oov(oov_o);
    if (*conf) return cmd_confidences(conf_o, conf_split, sample);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitValidation;
}
