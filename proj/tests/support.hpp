#pragma once

// Shared fixtures: temporary directories, random embedding stores and the
// synthetic "toponym follows 'in'" corpus.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "toponym/toponym.hpp"

namespace toponym::testing {

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("toponym_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

// Every word gets a uniform[-1,1] vector; deterministic in `seed`.
inline EmbeddingStore random_store(const std::vector<std::string>& words, std::size_t dim,
                                   std::uint64_t seed, std::string name = "random") {
  EmbeddingStore s;
  s.name = std::move(name);
  s.dimension = dim;
  std::mt19937_64 rng(seed);
  for (const auto& w : words) {
    if (s.vocab.count(w)) continue;
    Vector v(dim);
    for (auto& x : v) x = 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
    s.vocab.emplace(w, std::move(v));
  }
  return s;
}

// Sentences where exactly the word after "in" is a toponym. Training and
// development sentences draw places from disjoint lists, so dev accuracy
// depends on the context window rather than on memorized place names.
struct SyntheticCorpus {
  std::vector<Document> train;
  std::vector<Document> dev;
  std::vector<std::string> vocabulary;
};

inline SyntheticCorpus make_in_corpus(std::size_t n_train = 50, std::size_t n_dev = 10,
                                      std::uint64_t seed = 7) {
  const std::vector<std::string> subjects = {"The virus", "Cases", "Infections", "Samples",
                                             "Outbreaks", "The strain", "Mosquitoes", "Patients"};
  const std::vector<std::string> verbs = {"were reported", "emerged", "spread", "circulated",
                                          "was detected", "were collected", "increased", "appeared"};
  const std::vector<std::string> tails = {"", " during 2009", " last year", " after the rains",
                                          " among children", " by March"};
  const std::vector<std::string> train_places = {"Mexico", "Texas", "Brazil", "Kenya", "Ohio",
                                                 "Peru", "Quebec", "Uganda", "Chile", "Nepal"};
  const std::vector<std::string> dev_places = {"Canada", "Ghana", "Bolivia", "Laos", "Oregon"};
  std::mt19937_64 rng(seed);
  auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };

  SyntheticCorpus c;
  auto make = [&](std::size_t i, const std::vector<std::string>& places, const std::string& prefix) {
    const std::string subject = pick(subjects);
    const std::string verb = pick(verbs);
    const std::string place = pick(places);
    const std::string tail = pick(tails);
    const std::string head = subject + " " + verb + " in ";
    const std::string text = head + place + tail + " .";
    const std::size_t start = text::decode_utf8(head).size();
    const std::size_t end = start + text::decode_utf8(place).size();
    const std::string ann = std::to_string(start) + "\t" + std::to_string(end) + "\t" + place + "\n";
    return make_document(prefix + std::to_string(i), text, ann);
  };
  for (std::size_t i = 0; i < n_train; ++i) c.train.push_back(make(i, train_places, "train"));
  for (std::size_t i = 0; i < n_dev; ++i) c.dev.push_back(make(i, dev_places, "dev"));

  for (const auto* docs : {&c.train, &c.dev}) {
    for (const auto& d : *docs) {
      for (const auto& t : d.tokens) c.vocabulary.push_back(t.surface);
    }
  }
  for (const auto& p : dev_places) c.vocabulary.push_back(p);
  return c;
}

}  // namespace toponym::testing
