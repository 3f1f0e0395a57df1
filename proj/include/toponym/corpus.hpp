#pragma once

// Documents, offset-preserving tokenization, gold span annotations and the
// projection of spans onto per-token labels.
//
// On disk a corpus is a directory of `<id>.txt` (raw UTF-8 text) and
// `<id>.ann` (one span per line: start TAB end TAB surface; `#` comments).
// Offsets count Unicode scalar values and are end-exclusive.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "toponym/error.hpp"
#include "toponym/text.hpp"

namespace toponym {

// Class 0 is the toponym class throughout (probability vectors, weights).
enum class Label : std::uint8_t { Toponym = 0, NonToponym = 1 };

constexpr std::size_t class_index(Label l) noexcept { return static_cast<std::size_t>(l); }
constexpr Label label_from_index(std::size_t i) noexcept {
  return i == 0 ? Label::Toponym : Label::NonToponym;
}
constexpr bool is_toponym(Label l) noexcept { return l == Label::Toponym; }

struct Token {
  std::string surface;
  std::size_t start = 0;
  std::size_t end = 0;
  std::optional<Label> label;

  bool overlaps(std::size_t s, std::size_t e) const noexcept { return start < e && s < end; }
  friend bool operator==(const Token&, const Token&) = default;
};

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span& a, const Span& b) {
    if (auto c = a.start <=> b.start; c != 0) return c;
    return a.end <=> b.end;
  }
};

struct Document {
  std::string id;
  std::string text;
  std::vector<Token> tokens;
  std::vector<Span> gold_spans;

  std::vector<Label> labels() const {
    std::vector<Label> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.label.value_or(Label::NonToponym));
    return out;
  }
};

struct CorpusSplit {
  std::vector<Document> train;
  std::vector<Document> dev;
  std::vector<Document> test;
};

// Letter/digit runs form one token, every other non-space character is a
// token of its own.
inline std::vector<Token> tokenize(std::string_view utf8) {
  const std::u32string cps = text::decode_utf8(utf8);
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t c = cps[i];
    if (text::is_space(c)) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (text::is_alnum(c)) {
      while (j < cps.size() && text::is_alnum(cps[j])) ++j;
    }
    tokens.push_back(Token{text::encode_utf8(std::u32string_view(cps).substr(i, j - i)), i, j,
                           std::nullopt});
    i = j;
  }
  return tokens;
}

// Labels every token that overlaps a gold span as a toponym.
inline Document project_labels(Document doc) {
  const std::size_t length = text::decode_utf8(doc.text).size();
  for (const auto& s : doc.gold_spans) {
    if (s.start >= s.end || s.end > length) {
      throw CorpusFormatError(doc.id, 0,
                              "span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                                  ") outside text of length " + std::to_string(length));
    }
  }
  for (auto& t : doc.tokens) {
    const bool hit = std::any_of(doc.gold_spans.begin(), doc.gold_spans.end(),
                                 [&](const Span& s) { return t.overlaps(s.start, s.end); });
    t.label = hit ? Label::Toponym : Label::NonToponym;
  }
  return doc;
}

namespace detail {

inline std::optional<std::size_t> parse_offset(std::string_view s) {
  std::size_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) return std::nullopt;
  return v;
}

}  // namespace detail

// Parses span annotations and checks each surface against the text.
inline std::vector<Span> parse_annotations(const std::string& content, std::u32string_view text,
                                           const std::string& file_name) {
  std::vector<Span> spans;
  const auto lines = text::split(content, '\n');
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string_view line = lines[n];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string_view::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string_view::npos) {
      throw CorpusFormatError(file_name, n + 1, "expected start<TAB>end<TAB>surface");
    }
    const auto start = detail::parse_offset(line.substr(0, tab1));
    const auto end = detail::parse_offset(line.substr(tab1 + 1, tab2 - tab1 - 1));
    if (!start || !end) throw CorpusFormatError(file_name, n + 1, "offsets must be integers");
    if (*start >= *end) throw CorpusFormatError(file_name, n + 1, "span start must be < end");
    if (*end > text.size()) {
      throw CorpusFormatError(file_name, n + 1,
                              "span end " + std::to_string(*end) + " beyond text length " +
                                  std::to_string(text.size()));
    }
    Span span{*start, *end, std::string(line.substr(tab2 + 1))};
    const std::string expected = text::encode_utf8(text.substr(span.start, span.end - span.start));
    if (expected != span.surface) {
      throw CorpusFormatError(file_name, n + 1,
                              "surface '" + span.surface + "' does not match text '" + expected +
                                  "'");
    }
    spans.push_back(std::move(span));
  }
  return spans;
}

inline std::string format_annotations(const std::vector<Span>& spans) {
  std::string out;
  for (const auto& s : spans) {
    out += std::to_string(s.start) + "\t" + std::to_string(s.end) + "\t" + s.surface + "\n";
  }
  return out;
}

// Builds a labeled document from raw text and annotation content.
inline Document make_document(std::string id, std::string text, const std::string& annotations,
                              const std::string& ann_name = {}) {
  Document doc;
  doc.id = std::move(id);
  doc.text = std::move(text);
  const auto cps = text::decode_utf8(doc.text);
  doc.gold_spans = parse_annotations(annotations, cps, ann_name.empty() ? doc.id : ann_name);
  doc.tokens = tokenize(doc.text);
  return project_labels(std::move(doc));
}

inline Document load_document(const std::filesystem::path& dir, const std::string& id) {
  const auto txt = dir / (id + ".txt");
  const auto ann = dir / (id + ".ann");
  if (!std::filesystem::exists(txt)) throw CorpusFormatError(txt.string(), 0, "missing text file");
  if (!std::filesystem::exists(ann)) {
    throw CorpusFormatError(ann.string(), 0, "missing annotation file");
  }
  return make_document(id, text::read_file(txt.string()), text::read_file(ann.string()),
                       ann.string());
}

// Loads every `<id>.txt`/`<id>.ann` pair in `dir`, sorted by id. Prediction
// outputs (`*.pred.ann`) are ignored.
inline std::vector<Document> load_corpus(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw CorpusFormatError(dir.string(), 0, "not a directory");
  }
  std::set<std::string> txt_ids;
  std::set<std::string> ann_ids;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (text::ends_with(name, ".pred.ann")) continue;
    if (text::ends_with(name, ".txt")) txt_ids.insert(name.substr(0, name.size() - 4));
    if (text::ends_with(name, ".ann")) ann_ids.insert(name.substr(0, name.size() - 4));
  }
  for (const auto& id : txt_ids) {
    if (!ann_ids.count(id)) {
      throw CorpusFormatError((dir / (id + ".txt")).string(), 0, "orphan text file (no .ann)");
    }
  }
  for (const auto& id : ann_ids) {
    if (!txt_ids.count(id)) {
      throw CorpusFormatError((dir / (id + ".ann")).string(), 0, "orphan annotation file (no .txt)");
    }
  }
  std::vector<Document> docs;
  docs.reserve(txt_ids.size());
  for (const auto& id : txt_ids) docs.push_back(load_document(dir, id));
  return docs;
}

// One document id per line; blank lines and `#` comments skipped.
inline std::vector<std::string> load_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw CorpusFormatError(path.string(), 0, "missing manifest");
  std::vector<std::string> ids;
  std::set<std::string> seen;
  const auto lines = text::read_lines(path.string());
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto id = text::trim(lines[n]);
    if (id.empty() || id.front() == '#') continue;
    if (!seen.emplace(id).second) {
      throw CorpusFormatError(path.string(), n + 1, "duplicate id '" + std::string(id) + "'");
    }
    ids.emplace_back(id);
  }
  return ids;
}

inline CorpusSplit load_split(const std::filesystem::path& corpus_dir,
                              const std::filesystem::path& train_manifest,
                              const std::filesystem::path& dev_manifest,
                              const std::filesystem::path& test_manifest) {
  const auto train_ids = load_manifest(train_manifest);
  const auto dev_ids = load_manifest(dev_manifest);
  const auto test_ids = load_manifest(test_manifest);
  std::map<std::string, std::string> owner;
  auto claim = [&](const std::vector<std::string>& ids, const std::filesystem::path& m) {
    for (const auto& id : ids) {
      auto [it, fresh] = owner.emplace(id, m.string());
      if (!fresh) {
        throw CorpusFormatError(m.string(), 0,
                                "document '" + id + "' also listed in " + it->second);
      }
    }
  };
  claim(train_ids, train_manifest);
  claim(dev_ids, dev_manifest);
  claim(test_ids, test_manifest);

  auto load = [&](const std::vector<std::string>& ids) {
    std::vector<Document> docs;
    docs.reserve(ids.size());
    for (const auto& id : ids) docs.push_back(load_document(corpus_dir, id));
    return docs;
  };
  return CorpusSplit{load(train_ids), load(dev_ids), load(test_ids)};
}

struct SplitStats {
  std::string name;
  std::size_t articles = 0;
  std::size_t size_bytes = 0;
  std::size_t words = 0;          // tokens with at least one letter or digit
  std::size_t tokens = 0;
  std::size_t toponym_spans = 0;
  std::size_t toponym_tokens = 0;

  double avg_words() const { return articles ? double(words) / double(articles) : 0.0; }
  double avg_toponyms() const { return articles ? double(toponym_spans) / double(articles) : 0.0; }
  // Percentage of tokens labeled toponym.
  double toponym_token_pct() const {
    return tokens ? 100.0 * double(toponym_tokens) / double(tokens) : 0.0;
  }
};

struct CorpusStats {
  SplitStats train;
  SplitStats dev;
  SplitStats test;
};

inline SplitStats split_stats(const std::string& name, const std::vector<Document>& docs) {
  SplitStats s;
  s.name = name;
  s.articles = docs.size();
  for (const auto& d : docs) {
    s.size_bytes += d.text.size();
    s.toponym_spans += d.gold_spans.size();
    s.tokens += d.tokens.size();
    for (const auto& t : d.tokens) {
      if (text::has_alnum(t.surface)) ++s.words;
      if (t.label == Label::Toponym) ++s.toponym_tokens;
    }
  }
  return s;
}

inline CorpusStats corpus_stats(const CorpusSplit& split) {
  return {split_stats("train", split.train), split_stats("dev", split.dev),
          split_stats("test", split.test)};
}

}  // namespace toponym
