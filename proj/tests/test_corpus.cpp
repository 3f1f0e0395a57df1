#include <gtest/gtest.h>

#include "support.hpp"
#include "toponym/corpus.hpp"

using namespace toponym;
using toponym::testing::TempDir;
using toponym::testing::write_file;

namespace {

struct Expected {
  std::string surface;
  std::size_t start, end;
};

void expect_tokens(const std::vector<Token>& got, const std::vector<Expected>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(got[i].surface, want[i].surface) << i;
    EXPECT_EQ(got[i].start, want[i].start) << i;
    EXPECT_EQ(got[i].end, want[i].end) << i;
  }
}

const char* kFig1 = "WNV entered Mexico through at least 2 independent introductions.";

}  // namespace

TEST(Tokenize, SentenceWithFinalPeriod) {
  expect_tokens(tokenize("WNV entered Mexico."),
                {{"WNV", 0, 3}, {"entered", 4, 11}, {"Mexico", 12, 18}, {".", 18, 19}});
}

TEST(Tokenize, Empty) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, Parentheses) {
  expect_tokens(tokenize("(USA)"), {{"(", 0, 1}, {"USA", 1, 4}, {")", 4, 5}});
}

TEST(Tokenize, EachPunctuationCharIsOwnToken) {
  expect_tokens(tokenize("a--b"), {{"a", 0, 1}, {"-", 1, 2}, {"-", 2, 3}, {"b", 3, 4}});
}

TEST(Tokenize, OffsetsCountCodePoints) {
  // "é" is two bytes but one offset unit.
  expect_tokens(tokenize("Zürich, México"), {{"Zürich", 0, 6}, {",", 6, 7}, {"México", 8, 14}});
}

TEST(Tokenize, SurfacesReproduceText) {
  const std::string text = "In 2012, West Nile virus (WNV) reached São Paulo; 45% of cases…";
  const auto cps = text::decode_utf8(text);
  for (const auto& t : tokenize(text)) {
    EXPECT_LT(t.start, t.end);
    EXPECT_EQ(text::encode_utf8(std::u32string_view(cps).substr(t.start, t.end - t.start)), t.surface);
  }
}

TEST(ProjectLabels, Figure1OnlyMexico) {
  const Document d = make_document("fig1", kFig1, "12\t18\tMexico\n");
  for (const auto& t : d.tokens) {
    EXPECT_EQ(t.label == Label::Toponym, t.surface == "Mexico") << t.surface;
  }
}

TEST(ProjectLabels, NoSpansAllNonToponym) {
  const Document d = make_document("x", kFig1, "");
  for (const auto& t : d.tokens) EXPECT_EQ(t.label, Label::NonToponym);
}

TEST(ProjectLabels, MultiTokenSpanLabelsEveryToken) {
  const Document d = make_document("ny", "Cases in New York rose.", "9\t17\tNew York\n");
  std::vector<std::string> toponyms;
  for (const auto& t : d.tokens) {
    if (t.label == Label::Toponym) toponyms.push_back(t.surface);
  }
  EXPECT_EQ(toponyms, (std::vector<std::string>{"New", "York"}));
}

TEST(ProjectLabels, PartialOverlapCounts) {
  // Annotation covers only "Mexic"; overlap still labels the token.
  const Document d = make_document("p", "to Mexico", "3\t8\tMexic\n");
  EXPECT_EQ(d.tokens[1].label, Label::Toponym);
}

TEST(ProjectLabels, Idempotent) {
  const Document once = make_document("ny", "Cases in New York rose.", "9\t17\tNew York\n");
  const Document twice = project_labels(once);
  EXPECT_EQ(once.tokens, twice.tokens);
}

TEST(ProjectLabels, SpanOutsideTextRejected) {
  Document d;
  d.id = "bad";
  d.text = "short";
  d.tokens = tokenize(d.text);
  d.gold_spans.push_back(Span{2, 10, "ort"});
  EXPECT_THROW(project_labels(d), CorpusFormatError);
}

TEST(Annotations, MalformedLineNamesLine) {
  try {
    make_document("m", kFig1, "# comment\n12\t18\tMexico\n12 18 Mexico\n", "m.ann");
    FAIL() << "expected CorpusFormatError";
  } catch (const CorpusFormatError& e) {
    EXPECT_EQ(e.file(), "m.ann");
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Annotations, SurfaceMismatchRejected) {
  EXPECT_THROW(make_document("m", kFig1, "12\t18\tMexica\n"), CorpusFormatError);
}

TEST(Annotations, OverlappingGoldSpansAccepted) {
  const Document d = make_document("o", "New York City", "0\t8\tNew York\n4\t13\tYork City\n");
  EXPECT_EQ(d.gold_spans.size(), 2u);
  for (const auto& t : d.tokens) EXPECT_EQ(t.label, Label::Toponym);
}

TEST(Annotations, FormatRoundTrip) {
  const Document d = make_document("ny", "Cases in New York and Ohio.", "9\t17\tNew York\n22\t26\tOhio\n");
  EXPECT_EQ(format_annotations(d.gold_spans), "9\t17\tNew York\n22\t26\tOhio\n");
}

TEST(LoadCorpus, PairsFilesAndSortsById) {
  TempDir dir;
  write_file(dir / "b.txt", "Found in Peru.");
  write_file(dir / "b.ann", "9\t13\tPeru\n");
  write_file(dir / "a.txt", "Nothing here.");
  write_file(dir / "a.ann", "");
  write_file(dir / "a.pred.ann", "");
  write_file(dir / "a.pos", "NN\nRB\n.\n");
  const auto docs = load_corpus(dir.path());
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].id, "a");
  EXPECT_EQ(docs[1].id, "b");
  EXPECT_EQ(docs[1].gold_spans.size(), 1u);
}

TEST(LoadCorpus, OrphanTextRejected) {
  TempDir dir;
  write_file(dir / "a.txt", "x");
  EXPECT_THROW(load_corpus(dir.path()), CorpusFormatError);
}

TEST(LoadCorpus, OrphanAnnotationRejected) {
  TempDir dir;
  write_file(dir / "a.ann", "");
  EXPECT_THROW(load_corpus(dir.path()), CorpusFormatError);
}

TEST(LoadCorpus, BadLineReportsFileAndLine) {
  TempDir dir;
  write_file(dir / "a.txt", "in Peru");
  write_file(dir / "a.ann", "3\t7\tPeru\n3\tx\tPeru\n");
  try {
    load_corpus(dir.path());
    FAIL();
  } catch (const CorpusFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("a.ann:2"), std::string::npos) << e.what();
  }
}

TEST(LoadSplit, ManifestsMustBeDisjoint) {
  TempDir dir;
  for (const char* id : {"a", "b", "c"}) {
    write_file(dir / (std::string(id) + ".txt"), "text");
    write_file(dir / (std::string(id) + ".ann"), "");
  }
  write_file(dir / "train.ids", "a\nb\n");
  write_file(dir / "dev.ids", "# dev\nc\n");
  write_file(dir / "test.ids", "b\n");
  EXPECT_THROW(load_split(dir.path(), dir / "train.ids", dir / "dev.ids", dir / "test.ids"),
               CorpusFormatError);
  write_file(dir / "test.ids", "\n");
  const auto split = load_split(dir.path(), dir / "train.ids", dir / "dev.ids", dir / "test.ids");
  EXPECT_EQ(split.train.size(), 2u);
  EXPECT_EQ(split.dev.size(), 1u);
  EXPECT_TRUE(split.test.empty());
}

TEST(CorpusStats, EmptySplitIsZero) {
  const auto s = corpus_stats(CorpusSplit{});
  EXPECT_EQ(s.train.articles, 0u);
  EXPECT_EQ(s.train.avg_words(), 0.0);
  EXPECT_EQ(s.test.avg_toponyms(), 0.0);
  EXPECT_EQ(s.dev.toponym_token_pct(), 0.0);
}

TEST(CorpusStats, HandCount) {
  // Two documents of ten words with one toponym each.
  const std::string t1 = "one two three four five six seven eight in Peru";
  const std::string t2 = "Cases rose sharply across the region around Lima this year";
  CorpusSplit split;
  split.train.push_back(make_document("1", t1, "43\t47\tPeru\n"));
  split.train.push_back(make_document("2", t2, "44\t48\tLima\n"));
  const auto s = corpus_stats(split).train;
  EXPECT_EQ(s.articles, 2u);
  EXPECT_DOUBLE_EQ(s.avg_words(), 10.0);
  EXPECT_DOUBLE_EQ(s.avg_toponyms(), 1.0);
  EXPECT_DOUBLE_EQ(s.toponym_token_pct(), 10.0);
}
