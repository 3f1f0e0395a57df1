#pragma once

// Token-level precision/recall/F1 over the toponym class, plus a strict
// span-level variant. Counts are exact; percentages are only rounded (half
// up, two decimals) when formatted.

#include <cmath>
#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "toponym/corpus.hpp"
#include "toponym/error.hpp"

namespace toponym {

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

// Percentage n/d in hundredths of a percent, rounded half up.
inline std::uint64_t percent_hundredths(std::uint64_t n, std::uint64_t d) {
  const std::uint64_t scaled = 10000 * n;
  return (2 * scaled + d) / (2 * d);
}

inline std::string format_hundredths(std::uint64_t h) {
  std::string frac = std::to_string(h % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return std::to_string(h / 100) + "." + frac;
}

inline std::string format_percent(double pct) {
  const double scaled = std::floor(pct * 100.0 + 0.5 + 1e-9);
  return format_hundredths(static_cast<std::uint64_t>(scaled < 0 ? 0 : scaled));
}

struct EvalReport {
  Counts counts;
  std::vector<std::pair<std::string, Counts>> per_doc;

  // No predicted and no gold toponyms scores 100 on every metric.
  bool vacuous() const { return counts.tp + counts.fp + counts.fn == 0; }

  double precision() const {
    if (vacuous()) return 100.0;
    const auto d = counts.tp + counts.fp;
    return d ? 100.0 * double(counts.tp) / double(d) : 0.0;
  }
  double recall() const {
    if (vacuous()) return 100.0;
    const auto d = counts.tp + counts.fn;
    return d ? 100.0 * double(counts.tp) / double(d) : 100.0;
  }
  // 2PR/(P+R), computed from counts as 2TP/(2TP+FP+FN).
  double f1() const {
    if (vacuous()) return 100.0;
    return 100.0 * double(2 * counts.tp) / double(2 * counts.tp + counts.fp + counts.fn);
  }

  std::string precision_str() const {
    if (vacuous()) return "100.00";
    const auto d = counts.tp + counts.fp;
    return format_hundredths(d ? percent_hundredths(counts.tp, d) : 0);
  }
  std::string recall_str() const {
    if (vacuous()) return "100.00";
    const auto d = counts.tp + counts.fn;
    return format_hundredths(d ? percent_hundredths(counts.tp, d) : 10000);
  }
  std::string f1_str() const {
    if (vacuous()) return "100.00";
    return format_hundredths(
        percent_hundredths(2 * counts.tp, 2 * counts.tp + counts.fp + counts.fn));
  }
};

inline Counts count_labels(const std::vector<Label>& pred, const std::vector<Label>& gold) {
  if (pred.size() != gold.size()) {
    throw InvalidInput("score: " + std::to_string(pred.size()) + " predictions for " +
                       std::to_string(gold.size()) + " gold labels");
  }
  Counts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = is_toponym(pred[i]);
    const bool g = is_toponym(gold[i]);
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

inline EvalReport score(const std::vector<Label>& pred, const std::vector<Label>& gold) {
  EvalReport r;
  r.counts = count_labels(pred, gold);
  return r;
}

struct LabeledDoc {
  std::string id;
  std::vector<Label> pred;
  std::vector<Label> gold;
};

inline EvalReport score_documents(const std::vector<LabeledDoc>& docs) {
  EvalReport r;
  for (const auto& d : docs) {
    const Counts c = count_labels(d.pred, d.gold);
    r.counts += c;
    r.per_doc.emplace_back(d.id, c);
  }
  return r;
}

// Maximal runs of toponym-labeled tokens as [first, last] token index pairs.
inline std::vector<std::pair<std::size_t, std::size_t>> toponym_runs(const std::vector<Label>& labels) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  for (std::size_t i = 0; i < labels.size();) {
    if (!is_toponym(labels[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < labels.size() && is_toponym(labels[j + 1])) ++j;
    runs.emplace_back(i, j);
    i = j + 1;
  }
  return runs;
}

// Predicted runs turned into character spans over the document text.
inline std::vector<Span> runs_to_spans(const Document& doc, const std::vector<Label>& labels) {
  if (labels.size() != doc.tokens.size()) throw InvalidInput("runs_to_spans: label count mismatch");
  const auto cps = text::decode_utf8(doc.text);
  std::vector<Span> spans;
  for (auto [a, b] : toponym_runs(labels)) {
    const std::size_t s = doc.tokens[a].start;
    const std::size_t e = doc.tokens[b].end;
    spans.push_back(Span{s, e, text::encode_utf8(std::u32string_view(cps).substr(s, e - s))});
  }
  return spans;
}

// Strict span matching: a gold span is a hit when the tokens it overlaps form
// exactly one maximal predicted run.
inline Counts span_counts(const Document& doc, const std::vector<Label>& pred) {
  if (pred.size() != doc.tokens.size()) throw InvalidInput("span score: label count mismatch");
  std::set<std::pair<std::size_t, std::size_t>> gold;
  for (const auto& s : doc.gold_spans) {
    std::size_t first = doc.tokens.size();
    std::size_t last = 0;
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      if (doc.tokens[i].overlaps(s.start, s.end)) {
        first = std::min(first, i);
        last = std::max(last, i);
      }
    }
    if (first < doc.tokens.size()) gold.emplace(first, last);
  }
  const auto runs = toponym_runs(pred);
  const std::set<std::pair<std::size_t, std::size_t>> predicted(runs.begin(), runs.end());
  Counts c;
  for (const auto& g : gold) {
    if (predicted.count(g)) ++c.tp;
    else ++c.fn;
  }
  c.fp = predicted.size() - c.tp;
  return c;
}

}  // namespace toponym
