#pragma once

// End-to-end experiments: tagging a document with a trained model, the
// ablation matrix over feature variants, the context-window sweep and the
// per-token confidence dump.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "toponym/corpus.hpp"
#include "toponym/embeddings.hpp"
#include "toponym/features.hpp"
#include "toponym/network.hpp"
#include "toponym/scoring.hpp"
#include "toponym/training.hpp"

namespace toponym {

// Architecture minus the input width, which follows from the features and
// the embedding dimension.
struct ArchShape {
  std::size_t hidden_layers = 3;
  std::size_t hidden_units = 500;
  double dropout_p = 0.5;

  ArchConfig with_input(std::size_t input_dim) const {
    ArchConfig a;
    a.input_dim = input_dim;
    a.hidden_layers = hidden_layers;
    a.hidden_units = hidden_units;
    a.dropout_p = dropout_p;
    return a;
  }
  friend bool operator==(const ArchShape&, const ArchShape&) = default;
};

struct Experiment {
  std::string name;
  FeatureConfig features;
  TrainConfig training;
  ArchShape arch;

  friend bool operator==(const Experiment&, const Experiment&) = default;
};

using AblationSpec = std::vector<Experiment>;

// The eight ablation variants, rows 1..8. Rows
// without the weighted loss train with unit class weights.
inline std::vector<std::string> preset_names() {
  return {"basic_nopunct", "basic_nostop", "baseline", "basic",
          "basic_cap",     "basic_cap_pos", "basic_cap_pos_w", "full"};
}

inline std::optional<Experiment> preset(const std::string& name) {
  Experiment e;
  e.name = name;
  e.training.class_weights = {1.0, 1.0};
  auto& f = e.features;
  f.window = 2;
  if (name == "basic_nopunct") {
    f.keep_punctuation = false;
  } else if (name == "basic_nostop") {
    f.keep_stopwords = false;
  } else if (name == "baseline") {
    e.arch.hidden_layers = 2;
    e.arch.hidden_units = 150;
  } else if (name == "basic") {
  } else if (name == "basic_cap") {
    f.use_capitalization = true;
  } else if (name == "basic_cap_pos" || name == "basic_cap_pos_w" || name == "full") {
    f.window = 5;
    f.use_capitalization = true;
    f.use_pos = true;
    if (name != "basic_cap_pos") e.training.class_weights = {2.0, 1.0};
    if (name == "full") f.use_lemma = true;
  } else {
    return std::nullopt;
  }
  return e;
}

inline AblationSpec default_ablation_spec() {
  AblationSpec spec;
  for (const auto& n : preset_names()) spec.push_back(*preset(n));
  return spec;
}

// Per-document POS tags; defaults to the fallback tagger.
using PosProvider = std::function<std::vector<std::string>(const Document&)>;

inline PosProvider fallback_pos_provider() {
  return [](const Document& d) { return fallback_pos_tags(d.tokens); };
}

// Everything fixed across the rows of an experiment run.
struct ExperimentContext {
  const EmbeddingStore* store = nullptr;
  OovPolicy policy;
  FeatureResources resources;
  PosProvider pos = fallback_pos_provider();
};

inline std::vector<PreparedDocument> prepare_documents(const std::vector<Document>& docs,
                                                       const FeatureConfig& config,
                                                       const ExperimentContext& ctx) {
  std::vector<PreparedDocument> out;
  out.reserve(docs.size());
  for (const auto& d : docs) {
    if (config.use_pos) {
      const auto tags = ctx.pos(d);
      out.push_back(prepare_document(d, config, ctx.resources, &tags));
    } else {
      out.push_back(prepare_document(d, config, ctx.resources));
    }
  }
  return out;
}

struct TokenPrediction {
  std::size_t token_index = 0;  // into doc.tokens
  Prediction prediction;
};

// Classifies every kept token; filtered-out tokens stay non-toponym.
struct DocumentPrediction {
  std::vector<Label> labels;  // one per doc token
  std::vector<TokenPrediction> kept;
};

inline DocumentPrediction predict_document(const ModelParams& model, const PreparedDocument& doc,
                                           const FeatureConfig& config, const EmbeddingStore& store,
                                           const OovPolicy& policy) {
  DocumentPrediction out;
  out.labels.assign(doc.doc->tokens.size(), Label::NonToponym);
  out.kept.reserve(doc.kept.size());
  for (std::size_t k = 0; k < doc.kept.size(); ++k) {
    const FeatureVector fv = assemble_window(doc.kept, k, config, store, policy);
    Prediction p = predict(model, fv.values);
    out.labels[doc.kept_positions[k]] = p.label;
    out.kept.push_back(TokenPrediction{doc.kept_positions[k], std::move(p)});
  }
  return out;
}

struct TestEvaluation {
  EvalReport tokens;
  Counts spans;
};

inline TestEvaluation evaluate_documents(const ModelParams& model, const std::vector<Document>& docs,
                                         const FeatureConfig& config, const ExperimentContext& ctx) {
  std::vector<LabeledDoc> labeled;
  Counts spans;
  const auto prepared = prepare_documents(docs, config, ctx);
  for (const auto& p : prepared) {
    const auto dp = predict_document(model, p, config, *ctx.store, ctx.policy);
    spans += span_counts(*p.doc, dp.labels);
    labeled.push_back(LabeledDoc{p.doc->id, dp.labels, p.doc->labels()});
  }
  return {score_documents(labeled), spans};
}

struct TrainedExperiment {
  TrainResult result;
  ArchConfig arch;
};

inline TrainedExperiment train_experiment(const Experiment& exp, const std::vector<Document>& train_docs,
                                          const std::vector<Document>& dev_docs, const ExperimentContext& ctx,
                                          const TrainHooks& hooks = {}) {
  WindowDataset train_set(prepare_documents(train_docs, exp.features, ctx), exp.features, *ctx.store,
                          ctx.policy);
  WindowDataset dev_set(prepare_documents(dev_docs, exp.features, ctx), exp.features, *ctx.store, ctx.policy);
  const ArchConfig arch = exp.arch.with_input(train_set.input_dim());
  ModelParams model = init_model(arch, exp.training.seed);
  return {train(std::move(model), train_set, dev_set, exp.training, hooks), arch};
}

struct AblationRow {
  std::string name;
  std::size_t context = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double f1_spread = 0.0;  // sample standard deviation across seeds
  std::size_t runs = 0;
  std::optional<std::string> error;
};

// Trains each row once per seed (the row's own seed when `seeds` is empty)
// and scores it on the test split. A failing row is recorded and skipped.
inline std::vector<AblationRow> run_ablation(const AblationSpec& spec, const CorpusSplit& corpus,
                                             const ExperimentContext& ctx,
                                             const std::vector<std::uint64_t>& seeds = {}) {
  std::set<std::string> names;
  for (const auto& e : spec) {
    if (!names.insert(e.name).second) throw InvalidInput("ablation: duplicate row name '" + e.name + "'");
  }
  std::vector<AblationRow> rows;
  for (const auto& exp : spec) {
    AblationRow row;
    row.name = exp.name;
    row.context = exp.features.window;
    try {
      std::vector<std::uint64_t> run_seeds = seeds.empty() ? std::vector<std::uint64_t>{exp.training.seed} : seeds;
      std::vector<double> p, r, f;
      for (auto s : run_seeds) {
        Experiment e = exp;
        e.training.seed = s;
        const auto trained = train_experiment(e, corpus.train, corpus.dev, ctx);
        const auto te = evaluate_documents(trained.result.model, corpus.test, e.features, ctx);
        p.push_back(te.tokens.precision());
        r.push_back(te.tokens.recall());
        f.push_back(te.tokens.f1());
      }
      auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
      };
      row.precision = mean(p);
      row.recall = mean(r);
      row.f1 = mean(f);
      row.runs = f.size();
      if (f.size() > 1) {
        double ss = 0.0;
        for (double x : f) ss += (x - row.f1) * (x - row.f1);
        row.f1_spread = std::sqrt(ss / static_cast<double>(f.size() - 1));
      }
    } catch (const std::exception& ex) {
      row.error = ex.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// One row per context size in [from, to], all other settings from `base`.
inline std::vector<AblationRow> sweep_window(const Experiment& base, std::size_t from, std::size_t to,
                                             const CorpusSplit& corpus, const ExperimentContext& ctx,
                                             const std::vector<std::uint64_t>& seeds = {}) {
  if (from > to) throw InvalidInput("sweep_window: empty range");
  AblationSpec spec;
  for (std::size_t c = from; c <= to; ++c) {
    Experiment e = base;
    e.name = base.name + "_c" + std::to_string(c);
    e.features.window = c;
    spec.push_back(std::move(e));
  }
  return run_ablation(spec, corpus, ctx, seeds);
}

// name, context, precision, recall, F1 (+ f1_spread when several seeds ran)
inline void write_ablation_tsv(std::ostream& out, const std::vector<AblationRow>& rows) {
  const bool spread = std::any_of(rows.begin(), rows.end(), [](const AblationRow& r) { return r.runs > 1; });
  out << "name\tcontext\tprecision\trecall\tf1" << (spread ? "\tf1_spread" : "") << '\n';
  for (const auto& r : rows) {
    out << r.name << '\t' << r.context << '\t';
    if (r.error) {
      out << "NA\tNA\tNA" << (spread ? "\tNA" : "") << '\n';
      continue;
    }
    out << format_percent(r.precision) << '\t' << format_percent(r.recall) << '\t' << format_percent(r.f1);
    if (spread) out << '\t' << format_percent(r.f1_spread);
    out << '\n';
  }
}

// c, precision, recall, F1
inline void write_sweep_tsv(std::ostream& out, const std::vector<AblationRow>& rows) {
  out << "c\tprecision\trecall\tf1\n";
  for (const auto& r : rows) {
    out << r.context << '\t';
    if (r.error) {
      out << "NA\tNA\tNA\n";
      continue;
    }
    out << format_percent(r.precision) << '\t' << format_percent(r.recall) << '\t' << format_percent(r.f1)
        << '\n';
  }
}

struct ConfidenceRecord {
  std::string doc_id;
  std::string token;
  std::size_t start = 0;
  std::size_t end = 0;
  double p_toponym = 0.0;
  double p_non_toponym = 0.0;
  Label gold = Label::NonToponym;
};

struct ConfidenceSample {
  std::size_t max_records = 0;  // 0 keeps every kept token
  std::uint64_t seed = 0;
};

inline std::vector<ConfidenceRecord> dump_confidences(const ModelParams& model, const std::vector<Document>& docs,
                                                      const FeatureConfig& config, const ExperimentContext& ctx,
                                                      const ConfidenceSample& sample = {}) {
  std::vector<ConfidenceRecord> all;
  for (const auto& p : prepare_documents(docs, config, ctx)) {
    const auto dp = predict_document(model, p, config, *ctx.store, ctx.policy);
    for (const auto& tp : dp.kept) {
      const Token& t = p.doc->tokens[tp.token_index];
      all.push_back(ConfidenceRecord{p.doc->id, t.surface, t.start, t.end, tp.prediction.p_toponym(),
                                     tp.prediction.p_non_toponym(), t.label.value_or(Label::NonToponym)});
    }
  }
  if (sample.max_records == 0 || sample.max_records >= all.size()) return all;
  // Partial Fisher-Yates over indices, then restore document order.
  std::vector<std::size_t> idx(all.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(sample.seed);
  for (std::size_t i = 0; i < sample.max_records; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (idx.size() - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(sample.max_records);
  std::sort(idx.begin(), idx.end());
  std::vector<ConfidenceRecord> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

// doc id, token, start, end, p_toponym, p_nontoponym, gold
inline void write_confidences_tsv(std::ostream& out, const std::vector<ConfidenceRecord>& records) {
  out << "doc\ttoken\tstart\tend\tp_toponym\tp_nontoponym\tgold\n";
  for (const auto& r : records) {
    out << r.doc_id << '\t' << r.token << '\t' << r.start << '\t' << r.end << '\t' << format_real(r.p_toponym)
        << '\t' << format_real(r.p_non_toponym) << '\t' << (is_toponym(r.gold) ? "toponym" : "non-toponym")
        << '\n';
  }
}

inline void write_report_tsv(std::ostream& out, const std::string& name, std::size_t context, const EvalReport& r) {
  out << "name\tcontext\tprecision\trecall\tf1\n";
  out << name << '\t' << context << '\t' << r.precision_str() << '\t' << r.recall_str() << '\t' << r.f1_str()
      << '\n';
}

}  // namespace toponym
