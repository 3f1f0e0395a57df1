#pragma once

// Run configuration files: flat `key = value` lines grouped under
// [features], [training], [arch] and [paths] sections. Top-level keys
// (before any section) are `name` and `seed`.

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "toponym/embeddings.hpp"
#include "toponym/error.hpp"
#include "toponym/eval.hpp"
#include "toponym/text.hpp"

namespace toponym {

struct PathConfig {
  std::string corpus_dir;
  std::string train_manifest;  // default <corpus_dir>/train.ids
  std::string dev_manifest;    // default <corpus_dir>/dev.ids
  std::string test_manifest;   // default <corpus_dir>/test.ids
  std::vector<std::string> embeddings;  // several files are concatenated
  std::string model;
  std::string history;
  std::string output;
  std::string stopwords;
  std::string pos_registry;
  std::string lemma_lexicon;

  friend bool operator==(const PathConfig&, const PathConfig&) = default;
};

struct RunConfig {
  Experiment experiment;
  OovMode oov_mode = OovMode::Zero;
  bool case_fold = true;
  std::size_t input_dim = 0;  // 0: derived from features and embeddings
  PathConfig paths;
  std::filesystem::path base_dir;  // directory of the config file, for relative paths

  std::uint64_t seed() const { return experiment.training.seed; }
  void set_seed(std::uint64_t s) { experiment.training.seed = s; }
  OovPolicy oov_policy() const { return OovPolicy{oov_mode, seed(), case_fold}; }

  friend bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.experiment == b.experiment && a.oov_mode == b.oov_mode && a.case_fold == b.case_fold &&
           a.input_dim == b.input_dim && a.paths == b.paths;
  }
};

namespace detail {

inline bool parse_bool(const std::string& field, const std::string& v) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError(field, "expected a boolean, got '" + v + "'");
}

template <typename T>
T parse_number(const std::string& field, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end || v.empty()) {
    throw ConfigError(field, "expected a number, got '" + v + "'");
  }
  return out;
}

inline std::string fmt_bool(bool b) { return b ? "true" : "false"; }

}  // namespace detail

inline RunConfig parse_config(const std::string& content, const std::string& source = "<config>") {
  using detail::parse_bool;
  using detail::parse_number;
  RunConfig cfg;
  cfg.experiment.name = "experiment";
  std::string section;
  std::set<std::string> seen;
  const auto lines = text::split(content, '\n');
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string line(text::trim(lines[n]));
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source + ":" + std::to_string(n + 1), "unterminated section header");
      section = std::string(text::trim(std::string_view(line).substr(1, line.size() - 2)));
      if (section != "features" && section != "training" && section != "arch" && section != "paths") {
        throw ConfigError(section, "unknown section");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(n + 1), "expected key = value");
    }
    const std::string key(text::trim(std::string_view(line).substr(0, eq)));
    const std::string value(text::trim(std::string_view(line).substr(eq + 1)));
    const std::string field = section.empty() ? key : section + "." + key;
    if (!seen.insert(field).second) throw ConfigError(field, "duplicate key");

    auto& f = cfg.experiment.features;
    auto& t = cfg.experiment.training;
    auto& a = cfg.experiment.arch;
    auto& p = cfg.paths;
    if (field == "name") cfg.experiment.name = value;
    else if (field == "seed") t.seed = parse_number<std::uint64_t>(field, value);
    else if (field == "features.window") f.window = parse_number<std::size_t>(field, value);
    else if (field == "features.keep_punctuation") f.keep_punctuation = parse_bool(field, value);
    else if (field == "features.keep_stopwords") f.keep_stopwords = parse_bool(field, value);
    else if (field == "features.capitalization") f.use_capitalization = parse_bool(field, value);
    else if (field == "features.pos") f.use_pos = parse_bool(field, value);
    else if (field == "features.lemma") f.use_lemma = parse_bool(field, value);
    else if (field == "features.target_only") f.target_only_features = parse_bool(field, value);
    else if (field == "features.case_fold") cfg.case_fold = parse_bool(field, value);
    else if (field == "features.oov") {
      if (value == "zero") cfg.oov_mode = OovMode::Zero;
      else if (value == "hashed-random") cfg.oov_mode = OovMode::HashedRandom;
      else throw ConfigError(field, "expected zero or hashed-random, got '" + value + "'");
    } else if (field == "training.learning_rate") t.learning_rate = parse_number<double>(field, value);
    else if (field == "training.batch_size") t.batch_size = parse_number<std::size_t>(field, value);
    else if (field == "training.momentum") t.momentum = parse_number<double>(field, value);
    else if (field == "training.weight_toponym") t.class_weights.toponym = parse_number<double>(field, value);
    else if (field == "training.weight_non_toponym") t.class_weights.non_toponym = parse_number<double>(field, value);
    else if (field == "training.clip_threshold") t.clip_threshold = parse_number<double>(field, value);
    else if (field == "training.max_epochs") t.max_epochs = parse_number<std::size_t>(field, value);
    else if (field == "training.patience") t.patience = parse_number<std::size_t>(field, value);
    else if (field == "training.eval_every") t.eval_every = parse_number<std::size_t>(field, value);
    else if (field == "arch.input_dim") cfg.input_dim = parse_number<std::size_t>(field, value);
    else if (field == "arch.hidden_layers") a.hidden_layers = parse_number<std::size_t>(field, value);
    else if (field == "arch.hidden_units") a.hidden_units = parse_number<std::size_t>(field, value);
    else if (field == "arch.dropout") a.dropout_p = parse_number<double>(field, value);
    else if (field == "paths.corpus") p.corpus_dir = value;
    else if (field == "paths.train") p.train_manifest = value;
    else if (field == "paths.dev") p.dev_manifest = value;
    else if (field == "paths.test") p.test_manifest = value;
    else if (field == "paths.embeddings") {
      p.embeddings.clear();
      for (const auto& e : text::split(value, ',')) {
        const auto s = text::trim(e);
        if (!s.empty()) p.embeddings.emplace_back(s);
      }
    } else if (field == "paths.model") p.model = value;
    else if (field == "paths.history") p.history = value;
    else if (field == "paths.output") p.output = value;
    else if (field == "paths.stopwords") p.stopwords = value;
    else if (field == "paths.pos_registry") p.pos_registry = value;
    else if (field == "paths.lemma_lexicon") p.lemma_lexicon = value;
    else throw ConfigError(field, "unknown key");
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("config", "file not found: " + path.string());
  RunConfig cfg = parse_config(text::read_file(path.string()), path.string());
  cfg.base_dir = path.parent_path();
  return cfg;
}

inline std::string serialize_config(const RunConfig& cfg) {
  using detail::fmt_bool;
  const auto& f = cfg.experiment.features;
  const auto& t = cfg.experiment.training;
  const auto& a = cfg.experiment.arch;
  const auto& p = cfg.paths;
  std::ostringstream o;
  o << std::setprecision(17);
  o << "name = " << cfg.experiment.name << '\n';
  o << "seed = " << t.seed << "\n\n";
  o << "[features]\n";
  o << "window = " << f.window << '\n';
  o << "keep_punctuation = " << fmt_bool(f.keep_punctuation) << '\n';
  o << "keep_stopwords = " << fmt_bool(f.keep_stopwords) << '\n';
  o << "capitalization = " << fmt_bool(f.use_capitalization) << '\n';
  o << "pos = " << fmt_bool(f.use_pos) << '\n';
  o << "lemma = " << fmt_bool(f.use_lemma) << '\n';
  o << "target_only = " << fmt_bool(f.target_only_features) << '\n';
  o << "oov = " << (cfg.oov_mode == OovMode::Zero ? "zero" : "hashed-random") << '\n';
  o << "case_fold = " << fmt_bool(cfg.case_fold) << "\n\n";
  o << "[training]\n";
  o << "learning_rate = " << t.learning_rate << '\n';
  o << "batch_size = " << t.batch_size << '\n';
  o << "momentum = " << t.momentum << '\n';
  o << "weight_toponym = " << t.class_weights.toponym << '\n';
  o << "weight_non_toponym = " << t.class_weights.non_toponym << '\n';
  o << "clip_threshold = " << t.clip_threshold << '\n';
  o << "max_epochs = " << t.max_epochs << '\n';
  o << "patience = " << t.patience << '\n';
  o << "eval_every = " << t.eval_every << "\n\n";
  o << "[arch]\n";
  if (cfg.input_dim) o << "input_dim = " << cfg.input_dim << '\n';
  o << "hidden_layers = " << a.hidden_layers << '\n';
  o << "hidden_units = " << a.hidden_units << '\n';
  o << "dropout = " << a.dropout_p << '\n';
  std::ostringstream paths;
  auto put = [&](const char* k, const std::string& v) {
    if (!v.empty()) paths << k << " = " << v << '\n';
  };
  put("corpus", p.corpus_dir);
  put("train", p.train_manifest);
  put("dev", p.dev_manifest);
  put("test", p.test_manifest);
  if (!p.embeddings.empty()) {
    paths << "embeddings = ";
    for (std::size_t i = 0; i < p.embeddings.size(); ++i) paths << (i ? "," : "") << p.embeddings[i];
    paths << '\n';
  }
  put("model", p.model);
  put("history", p.history);
  put("output", p.output);
  put("stopwords", p.stopwords);
  put("pos_registry", p.pos_registry);
  put("lemma_lexicon", p.lemma_lexicon);
  if (!paths.str().empty()) o << "\n[paths]\n" << paths.str();
  return o.str();
}

// Resolution order for relative paths: as given, then relative to the config
// file, then under $TOPO_DATA_DIR. Unresolvable paths come back unchanged.
inline std::filesystem::path resolve_path(const std::string& p, const std::filesystem::path& base_dir) {
  namespace fs = std::filesystem;
  const fs::path path(p);
  if (path.is_absolute() || fs::exists(path)) return path;
  if (!base_dir.empty() && fs::exists(base_dir / path)) return base_dir / path;
  if (const char* env = std::getenv("TOPO_DATA_DIR"); env && *env) {
    if (fs::exists(fs::path(env) / path)) return fs::path(env) / path;
  }
  return path;
}

// Checks the settings themselves (ranges, weights, architecture).
inline void validate_settings(const RunConfig& cfg) {
  try {
    cfg.experiment.training.validate();
  } catch (const InvalidInput& e) {
    throw ConfigError("training", e.what());
  }
  const auto& a = cfg.experiment.arch;
  if (a.hidden_layers > 0 && a.hidden_units == 0) throw ConfigError("arch.hidden_units", "must be positive");
  if (!(a.dropout_p >= 0.0 && a.dropout_p < 1.0)) throw ConfigError("arch.dropout", "must be in [0,1)");
}

// Input width implied by the features must match an explicit arch.input_dim.
inline std::size_t check_input_dim(const RunConfig& cfg, std::size_t word_dim) {
  const std::size_t implied = input_dim(cfg.experiment.features, word_dim);
  if (cfg.input_dim != 0 && cfg.input_dim != implied) {
    throw ConfigError("arch.input_dim", "is " + std::to_string(cfg.input_dim) + " but the feature layout needs " +
                                            std::to_string(implied));
  }
  return implied;
}

// Built-in experiment settings under the given run configuration's paths.
inline RunConfig with_preset(RunConfig cfg, const std::string& name) {
  auto p = preset(name);
  if (!p) throw ConfigError("preset", "unknown preset '" + name + "'");
  const std::uint64_t seed = cfg.seed();
  cfg.experiment = *p;
  cfg.experiment.training.seed = seed;
  return cfg;
}

}  // namespace toponym
