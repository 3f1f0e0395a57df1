#pragma once

// Input construction for the classifier: token filtering, capitalization /
// POS / lemma feature channels, and context-window assembly.
//
// Window layout (per-slot mode, the default): slots ordered -c..-1, 0, +1..+c,
// each slot is  word[d] ++ cap[2] ++ pos[45] ++ lemma[d]  with disabled
// channels omitted. Slots that fall outside the token sequence are all zero.
// In target-only mode the slots carry only word embeddings and the enabled
// extra channels of the centre token are appended once at the end.

#include <array>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "toponym/corpus.hpp"
#include "toponym/embeddings.hpp"
#include "toponym/error.hpp"
#include "toponym/linalg.hpp"
#include "toponym/text.hpp"

namespace toponym {

struct FeatureConfig {
  std::size_t window = 2;
  bool keep_punctuation = true;
  bool keep_stopwords = true;
  bool use_capitalization = false;
  bool use_pos = false;
  bool use_lemma = false;
  bool target_only_features = false;

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

inline constexpr std::size_t kCapDim = 2;
inline constexpr std::size_t kPosDim = 45;

// ---------------------------------------------------------------------------
// Capitalization

struct CapFeature {
  std::array<double, 2> bits{0.0, 0.0};
  friend bool operator==(const CapFeature&, const CapFeature&) = default;
};

inline constexpr CapFeature kCapFirstUpper{{1.0, 0.0}};
inline constexpr CapFeature kCapLower{{0.0, 1.0}};
inline constexpr CapFeature kCapAllUpper{{1.0, 1.0}};
inline constexpr CapFeature kCapPadding{{0.0, 0.0}};

// [1,1] when every letter is upper case, [1,0] when the first character is,
// [0,1] otherwise (including tokens without letters).
inline CapFeature capitalization_features(std::string_view surface) {
  const auto cps = text::decode_utf8(surface);
  if (cps.empty()) return kCapLower;
  std::size_t letters = 0;
  bool all_upper = true;
  for (char32_t c : cps) {
    if (!text::is_letter(c)) continue;
    ++letters;
    if (!text::is_upper(c)) all_upper = false;
  }
  if (letters > 0 && all_upper) return kCapAllUpper;
  if (text::is_upper(cps.front())) return kCapFirstUpper;
  return kCapLower;
}

// ---------------------------------------------------------------------------
// POS tags

// 36 Penn Treebank word tags followed by 9 punctuation/symbol tags.
inline const std::vector<std::string>& default_ptb_tags() {
  static const std::vector<std::string> tags = {
      "CC",  "CD",  "DT",   "EX",  "FW",  "IN",  "JJ",  "JJR", "JJS", "LS",  "MD",  "NN",
      "NNS", "NNP", "NNPS", "PDT", "POS", "PRP", "PRP$", "RB", "RBR", "RBS", "RP",  "SYM",
      "TO",  "UH",  "VB",   "VBD", "VBG", "VBN", "VBP", "VBZ", "WDT", "WP",  "WP$", "WRB",
      "#",   "$",   "``",   "''",  "(",   ")",   ",",   ".",   ":"};
  return tags;
}

class PosRegistry {
 public:
  PosRegistry() : PosRegistry(default_ptb_tags()) {}

  explicit PosRegistry(std::vector<std::string> tags) : tags_(std::move(tags)) {
    if (tags_.size() != kPosDim) {
      throw ConfigError("pos_registry", "tag registry must hold exactly " +
                                            std::to_string(kPosDim) + " tags, found " +
                                            std::to_string(tags_.size()));
    }
    for (std::size_t i = 0; i < tags_.size(); ++i) {
      if (!index_.emplace(tags_[i], i).second) {
        throw ConfigError("pos_registry", "duplicate tag '" + tags_[i] + "'");
      }
    }
    alias("-LRB-", "(");
    alias("-RRB-", ")");
    alias("-NONE-", "SYM");
  }

  static PosRegistry load(const std::string& path) {
    std::vector<std::string> tags;
    for (const auto& line : text::read_lines(path)) {
      const auto t = text::trim(line);
      if (!t.empty()) tags.emplace_back(t);
    }
    return PosRegistry(std::move(tags));
  }

  std::optional<std::size_t> index(const std::string& tag) const {
    auto it = index_.find(tag);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<std::string>& tags() const noexcept { return tags_; }

 private:
  void alias(const std::string& from, const std::string& to) {
    if (auto it = index_.find(to); it != index_.end()) index_.emplace(from, it->second);
  }

  std::vector<std::string> tags_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace detail {

inline const std::unordered_map<std::string, std::string>& closed_class_tags() {
  static const std::unordered_map<std::string, std::string> m = [] {
    std::unordered_map<std::string, std::string> t;
    auto put = [&](std::string tag, std::initializer_list<const char*> words) {
      for (const char* w : words) t.emplace(w, tag);
    };
    put("DT", {"the", "a", "an", "this", "that", "these", "those", "each", "every", "some",
               "any", "no", "all", "both", "another"});
    put("IN", {"in", "of", "on", "at", "by", "for", "with", "from", "into", "about", "over",
               "under", "after", "before", "between", "through", "during", "against", "among",
               "within", "without", "upon", "across", "near", "via", "since", "than",
               "whereas", "because", "although", "while", "if", "throughout", "per", "like"});
    put("CC", {"and", "or", "but", "nor", "yet"});
    put("TO", {"to"});
    put("PRP", {"i", "you", "he", "she", "it", "we", "they", "me", "him", "us", "them"});
    put("PRP$", {"my", "your", "his", "its", "our", "their", "her"});
    put("MD", {"can", "could", "may", "might", "must", "shall", "should", "will", "would"});
    put("VBZ", {"is", "has", "does"});
    put("VBP", {"are", "have", "do", "am"});
    put("VBD", {"was", "were", "had", "did"});
    put("VB", {"be"});
    put("VBN", {"been"});
    put("VBG", {"being"});
    put("WDT", {"which"});
    put("WP", {"who", "whom", "what"});
    put("WP$", {"whose"});
    put("WRB", {"when", "where", "why", "how"});
    put("EX", {"there"});
    put("RB", {"not", "also", "very", "often", "however", "only", "then"});
    put("CD", {"one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten",
               "hundred", "thousand", "million"});
    return t;
  }();
  return m;
}

inline std::string punctuation_tag(std::string_view s) {
  if (s == "." || s == "!" || s == "?") return ".";
  if (s == ",") return ",";
  if (s == ":" || s == ";" || s == "-" || s == "–" || s == "—") return ":";
  if (s == "(" || s == "[" || s == "{") return "(";
  if (s == ")" || s == "]" || s == "}") return ")";
  if (s == "\"" || s == "“" || s == "`") return "``";
  if (s == "”" || s == "'" || s == "’") return "''";
  if (s == "$" || s == "€" || s == "£") return "$";
  if (s == "#") return "#";
  if (s == "%") return "NN";
  return "SYM";
}

}  // namespace detail

// Rule-based Penn Treebank tagger used when no sidecar tags exist:
// punctuation table, numbers, a closed-class lexicon, capitalization, then
// suffix rules (-ing VBG, -ed VBD, -ly RB, -est JJS, adjectival suffixes JJ,
// plural -s NNS), default NN.
inline std::string fallback_tag(std::string_view surface) {
  const auto cps = text::decode_utf8(surface);
  bool any_alnum = false;
  bool all_digit = true;
  for (char32_t c : cps) {
    if (text::is_alnum(c)) any_alnum = true;
    if (!text::is_digit(c)) all_digit = false;
  }
  if (!any_alnum) return detail::punctuation_tag(surface);
  if (all_digit) return "CD";

  const std::string lower = text::to_lower(surface);
  const auto& closed = detail::closed_class_tags();
  if (auto it = closed.find(lower); it != closed.end()) return it->second;
  if (text::is_upper(cps.front())) return "NNP";

  using text::ends_with;
  const std::size_t n = lower.size();
  if (n > 4 && ends_with(lower, "ing")) return "VBG";
  if (n > 3 && ends_with(lower, "ed")) return "VBD";
  if (n > 3 && ends_with(lower, "ly")) return "RB";
  if (n > 4 && ends_with(lower, "est")) return "JJS";
  for (const char* suf : {"ous", "ful", "able", "ible", "al", "ive", "ic", "less"}) {
    if (n > std::string_view(suf).size() + 2 && ends_with(lower, suf)) return "JJ";
  }
  if (n > 3 && ends_with(lower, "s") && !ends_with(lower, "ss") && !ends_with(lower, "us") &&
      !ends_with(lower, "is")) {
    return "NNS";
  }
  return "NN";
}

inline std::vector<std::string> fallback_pos_tags(const std::vector<Token>& tokens) {
  std::vector<std::string> tags;
  tags.reserve(tokens.size());
  for (const auto& t : tokens) tags.push_back(fallback_tag(t.surface));
  return tags;
}

// `<id>.pos`: one tag per line aligned with the document's tokens.
inline std::vector<std::string> load_pos_sidecar(const std::string& path, std::size_t token_count) {
  std::vector<std::string> tags;
  for (const auto& line : text::read_lines(path)) tags.emplace_back(text::trim(line));
  if (tags.size() != token_count) {
    throw FormatError(path, 0,
                      "sidecar has " + std::to_string(tags.size()) + " tags for " +
                          std::to_string(token_count) + " tokens");
  }
  return tags;
}

// Sidecar tags when `<corpus_dir>/<id>.pos` exists, fallback tagger otherwise.
inline std::vector<std::string> pos_tag(const Document& doc,
                                        const std::optional<std::filesystem::path>& corpus_dir) {
  if (corpus_dir) {
    const auto sidecar = *corpus_dir / (doc.id + ".pos");
    if (std::filesystem::exists(sidecar)) return load_pos_sidecar(sidecar.string(), doc.tokens.size());
  }
  return fallback_pos_tags(doc.tokens);
}

// ---------------------------------------------------------------------------
// Lemmas

inline const std::vector<std::pair<std::string, std::string>>& default_lemma_lexicon() {
  static const std::vector<std::pair<std::string, std::string>> lex = {
      {"was", "be"},        {"were", "be"},       {"is", "be"},        {"are", "be"},
      {"am", "be"},         {"been", "be"},       {"being", "be"},     {"has", "have"},
      {"had", "have"},      {"did", "do"},        {"does", "do"},      {"done", "do"},
      {"went", "go"},       {"gone", "go"},       {"made", "make"},    {"took", "take"},
      {"taken", "take"},    {"found", "find"},    {"showed", "show"},  {"shown", "show"},
      {"seen", "see"},      {"saw", "see"},       {"began", "begin"},  {"begun", "begin"},
      {"spread", "spread"}, {"children", "child"}, {"men", "man"},     {"women", "woman"},
      {"mice", "mouse"},    {"feet", "foot"},     {"teeth", "tooth"},  {"geese", "goose"},
      {"people", "person"}, {"data", "datum"},    {"species", "species"}, {"series", "series"},
      {"viruses", "virus"}, {"analyses", "analysis"}, {"bases", "basis"}, {"hypotheses", "hypothesis"},
      {"larvae", "larva"},  {"bacteria", "bacterium"}, {"criteria", "criterion"},
      {"phenomena", "phenomenon"}, {"indices", "index"}, {"matrices", "matrix"},
      {"as", "as"},         {"its", "its"},       {"this", "this"},    {"thus", "thus"},
      {"during", "during"}, {"across", "across"}, {"us", "us"},        {"less", "less"}};
  return lex;
}

class Lemmatizer {
 public:
  Lemmatizer() {
    for (const auto& [s, l] : default_lemma_lexicon()) lexicon_[s] = l;
  }

  // TSV `surface<TAB>lemma`, merged over the built-in irregular forms.
  void load_lexicon(const std::string& path) {
    const auto lines = text::read_lines(path);
    for (std::size_t n = 0; n < lines.size(); ++n) {
      const auto line = text::trim(lines[n]);
      if (line.empty() || line.front() == '#') continue;
      const auto fields = text::split(line, '\t');
      if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
        throw FormatError(path, n + 1, "expected surface<TAB>lemma");
      }
      lexicon_[text::to_lower(fields[0])] = text::to_lower(fields[1]);
    }
  }

  std::string operator()(std::string_view surface) const {
    std::string w = text::to_lower(surface);
    if (auto it = lexicon_.find(w); it != lexicon_.end()) return it->second;
    if (!is_ascii_word(w)) return w;
    return apply_rules(std::move(w));
  }

 private:
  static bool is_ascii_word(std::string_view w) {
    return !w.empty() && std::all_of(w.begin(), w.end(), [](char c) { return c >= 'a' && c <= 'z'; });
  }

  static bool is_vowel_at(std::string_view w, std::size_t i) {
    const char c = w[i];
    if (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') return true;
    return c == 'y' && i > 0 && !is_vowel_at(w, i - 1);
  }

  static bool has_vowel(std::string_view w) {
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (is_vowel_at(w, i)) return true;
    }
    return false;
  }

  // Number of vowel-consonant sequences.
  static std::size_t measure(std::string_view w) {
    std::size_t m = 0;
    bool prev_vowel = false;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const bool v = is_vowel_at(w, i);
      if (!v && prev_vowel) ++m;
      prev_vowel = v;
    }
    return m;
  }

  static bool ends_cvc(std::string_view w) {
    const std::size_t n = w.size();
    if (n < 3) return false;
    const char last = w[n - 1];
    return !is_vowel_at(w, n - 3) && is_vowel_at(w, n - 2) && !is_vowel_at(w, n - 1) &&
           last != 'w' && last != 'x' && last != 'y';
  }

  // After stripping -ing/-ed: restore a silent e or undouble a consonant.
  static std::string repair_stem(std::string stem) {
    using text::ends_with;
    if (ends_with(stem, "at") || ends_with(stem, "bl") || ends_with(stem, "iz")) return stem + "e";
    const std::size_t n = stem.size();
    if (n >= 2 && stem[n - 1] == stem[n - 2] && !is_vowel_at(stem, n - 1)) {
      const char c = stem[n - 1];
      if (c != 'l' && c != 's' && c != 'z') stem.pop_back();
      return stem;
    }
    if (measure(stem) == 1 && ends_cvc(stem)) return stem + "e";
    return stem;
  }

  static std::string apply_rules(std::string w) {
    using text::ends_with;
    const std::size_t n = w.size();
    if (n > 4 && ends_with(w, "ies")) return w.substr(0, n - 3) + "y";
    if (n > 4 && ends_with(w, "ied")) return w.substr(0, n - 3) + "y";
    if (ends_with(w, "sses")) return w.substr(0, n - 2);
    if (n > 4 && (ends_with(w, "xes") || ends_with(w, "ches") || ends_with(w, "shes") ||
                  ends_with(w, "zzes") || ends_with(w, "uses"))) {
      return w.substr(0, n - 2);
    }
    if (n > 4 && ends_with(w, "ing")) {
      const std::string stem = w.substr(0, n - 3);
      if (has_vowel(stem)) return repair_stem(stem);
      return w;
    }
    if (n > 3 && ends_with(w, "ed")) {
      const std::string stem = w.substr(0, n - 2);
      if (has_vowel(stem)) return repair_stem(stem);
      return w;
    }
    if (n > 3 && ends_with(w, "s") && !ends_with(w, "ss") && !ends_with(w, "us") &&
        !ends_with(w, "is")) {
      return w.substr(0, n - 1);
    }
    return w;
  }

  std::unordered_map<std::string, std::string> lexicon_;
};

inline std::string lemmatize(std::string_view surface) {
  static const Lemmatizer lemmatizer;
  return lemmatizer(surface);
}

// ---------------------------------------------------------------------------
// Filtering

inline const std::vector<std::string>& default_stopwords() {
  static const std::vector<std::string> words = {
      "a",     "an",    "the",   "in",    "on",   "at",    "of",    "to",    "for",   "from",
      "by",    "with",  "and",   "or",    "but",  "as",    "is",    "are",   "was",   "were",
      "be",    "been",  "being", "it",    "its",  "this",  "that",  "these", "those", "which",
      "who",   "whom",  "whose", "what",  "there", "their", "they",  "he",   "she",   "we",
      "you",   "i",     "not",   "no",    "into", "than",  "then",  "so",    "such",  "can",
      "may",   "also",  "has",   "have",  "had",  "do",    "does",  "did"};
  return words;
}

class StopWords {
 public:
  StopWords() : words_(default_stopwords().begin(), default_stopwords().end()) {}
  explicit StopWords(std::unordered_set<std::string> words) : words_(std::move(words)) {}

  static StopWords load(const std::string& path) {
    std::unordered_set<std::string> words;
    for (const auto& line : text::read_lines(path)) {
      const auto w = text::trim(line);
      if (!w.empty() && w.front() != '#') words.insert(text::to_lower(w));
    }
    return StopWords(std::move(words));
  }

  bool contains_lower(const std::string& lower) const { return words_.count(lower) != 0; }
  std::size_t size() const noexcept { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

inline bool is_punctuation_token(std::string_view surface) { return !text::has_alnum(surface); }

struct FilterResult {
  std::vector<Token> kept;
  std::vector<Token> dropped;
  std::vector<std::size_t> kept_positions;  // index of each kept token in the input
};

inline FilterResult filter_tokens(const std::vector<Token>& tokens, const FeatureConfig& config,
                                  const StopWords& stopwords = StopWords()) {
  FilterResult r;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& t = tokens[i];
    bool drop = false;
    if (!config.keep_punctuation && is_punctuation_token(t.surface)) drop = true;
    if (!drop && !config.keep_stopwords && stopwords.contains_lower(text::to_lower(t.surface))) {
      drop = true;
    }
    if (drop) {
      r.dropped.push_back(t);
    } else {
      r.kept.push_back(t);
      r.kept_positions.push_back(i);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Window assembly

// A kept token with its precomputed feature inputs.
struct AnnotatedToken {
  Token token;
  CapFeature cap;
  std::optional<std::size_t> pos;  // registry index; nullopt -> all-zero one-hot
  std::string lemma;
};

struct FeatureLayout {
  std::size_t slots = 1;
  std::size_t word_dim = 0;
  bool cap = false;
  bool pos = false;
  bool lemma = false;
  bool target_only = false;

  std::size_t extra_width() const noexcept {
    return (cap ? kCapDim : 0) + (pos ? kPosDim : 0) + (lemma ? word_dim : 0);
  }
  std::size_t slot_width() const noexcept {
    return target_only ? word_dim : word_dim + extra_width();
  }
  std::size_t total() const noexcept {
    return slots * slot_width() + (target_only ? extra_width() : 0);
  }
  // Offset of the centre slot's word channel.
  std::size_t centre_offset() const noexcept { return (slots / 2) * slot_width(); }
};

inline FeatureLayout feature_layout(const FeatureConfig& config, std::size_t word_dim) {
  return FeatureLayout{2 * config.window + 1, word_dim,       config.use_capitalization,
                       config.use_pos,        config.use_lemma, config.target_only_features};
}

inline std::size_t input_dim(const FeatureConfig& config, std::size_t word_dim) {
  return feature_layout(config, word_dim).total();
}

struct FeatureVector {
  Vector values;
  FeatureLayout layout;
};

namespace detail {

// Writes cap/pos/lemma channels of `tok` (or zeros when null) into `out`.
inline void write_extras(const AnnotatedToken* tok, const FeatureLayout& layout,
                         const EmbeddingStore& store, const OovPolicy& policy,
                         std::span<double> out) {
  std::size_t o = 0;
  if (layout.cap) {
    const CapFeature cap = tok ? tok->cap : kCapPadding;
    out[o] = cap.bits[0];
    out[o + 1] = cap.bits[1];
    o += kCapDim;
  }
  if (layout.pos) {
    if (tok && tok->pos) out[o + *tok->pos] = 1.0;
    o += kPosDim;
  }
  if (layout.lemma) {
    if (tok) lookup_into(store, tok->lemma, policy, out.subspan(o, layout.word_dim));
    o += layout.word_dim;
  }
}

}  // namespace detail

inline FeatureVector assemble_window(std::span<const AnnotatedToken> kept, std::size_t index,
                                     const FeatureConfig& config, const EmbeddingStore& store,
                                     const OovPolicy& policy) {
  if (index >= kept.size()) {
    throw InvalidInput("assemble_window: index " + std::to_string(index) + " out of range for " +
                       std::to_string(kept.size()) + " tokens");
  }
  FeatureVector fv{Vector(), feature_layout(config, store.dimension)};
  const FeatureLayout& L = fv.layout;
  fv.values = Vector(L.total());
  std::span<double> out = fv.values.span();
  const auto c = static_cast<std::ptrdiff_t>(config.window);
  const auto centre = static_cast<std::ptrdiff_t>(index);

  for (std::ptrdiff_t k = -c; k <= c; ++k) {
    const std::ptrdiff_t pos = centre + k;
    const std::size_t base = static_cast<std::size_t>(k + c) * L.slot_width();
    const bool inside = pos >= 0 && pos < static_cast<std::ptrdiff_t>(kept.size());
    if (!inside) continue;
    const AnnotatedToken& tok = kept[static_cast<std::size_t>(pos)];
    lookup_into(store, tok.token.surface, policy, out.subspan(base, L.word_dim));
    if (!L.target_only) {
      detail::write_extras(&tok, L, store, policy,
                           out.subspan(base + L.word_dim, L.extra_width()));
    }
  }
  if (L.target_only) {
    detail::write_extras(&kept[index], L, store, policy,
                         out.subspan(L.slots * L.slot_width(), L.extra_width()));
  }
  return fv;
}

// Everything needed to classify the tokens of one document.
struct PreparedDocument {
  const Document* doc = nullptr;
  std::vector<AnnotatedToken> kept;
  std::vector<std::size_t> kept_positions;
  std::size_t unknown_pos_tags = 0;
};

struct FeatureResources {
  PosRegistry registry;
  Lemmatizer lemmatizer;
  StopWords stopwords;
};

// Tags, lemmatizes and filters `doc`. `pos_tags` must align with doc.tokens
// when given; otherwise the fallback tagger runs (only when POS is enabled).
inline PreparedDocument prepare_document(const Document& doc, const FeatureConfig& config,
                                         const FeatureResources& res,
                                         const std::vector<std::string>* pos_tags = nullptr) {
  PreparedDocument p;
  p.doc = &doc;
  std::vector<std::string> fallback;
  if (config.use_pos && !pos_tags) {
    fallback = fallback_pos_tags(doc.tokens);
    pos_tags = &fallback;
  }
  if (pos_tags && pos_tags->size() != doc.tokens.size()) {
    throw FormatError(doc.id, 0, "POS tag count does not match token count");
  }
  const FilterResult f = filter_tokens(doc.tokens, config, res.stopwords);
  p.kept_positions = f.kept_positions;
  p.kept.reserve(f.kept.size());
  for (std::size_t i = 0; i < f.kept.size(); ++i) {
    AnnotatedToken a;
    a.token = f.kept[i];
    a.cap = capitalization_features(a.token.surface);
    if (config.use_pos) {
      const std::string& tag = (*pos_tags)[f.kept_positions[i]];
      a.pos = res.registry.index(tag);
      if (!a.pos) ++p.unknown_pos_tags;
    }
    if (config.use_lemma) a.lemma = res.lemmatizer(a.token.surface);
    p.kept.push_back(std::move(a));
  }
  return p;
}

}  // namespace toponym
