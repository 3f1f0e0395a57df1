#pragma once

// Pretrained word vectors in the textual word2vec/GloVe layout, lookups with
// an explicit out-of-vocabulary policy, and OOV accounting over a corpus.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "toponym/corpus.hpp"
#include "toponym/error.hpp"
#include "toponym/linalg.hpp"
#include "toponym/text.hpp"

namespace toponym {

struct EmbeddingStore {
  std::string name;
  std::size_t dimension = 0;
  std::unordered_map<std::string, Vector> vocab;
  std::size_t duplicates = 0;  // rows overwritten by a later row of the same word
  bool header_count_mismatch = false;

  std::size_t size() const noexcept { return vocab.size(); }
  bool contains(const std::string& w) const { return vocab.count(w) != 0; }
};

enum class OovMode { Zero, HashedRandom };

struct OovPolicy {
  OovMode mode = OovMode::Zero;
  std::uint64_t seed = 0;
  bool case_fold_first = true;

  friend bool operator==(const OovPolicy&, const OovPolicy&) = default;
};

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline bool parse_double(std::string_view s, double& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end && std::isfinite(out);
}

inline bool parse_size(std::string_view s, std::size_t& out) {
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end && !s.empty();
}

}  // namespace detail

// Components in [-0.5/dim, 0.5/dim], a pure function of (word, seed).
inline void hashed_random_vector(std::string_view word, std::uint64_t seed,
                                 std::span<double> out) {
  std::uint64_t state = detail::fnv1a(word) ^ (seed * 0xd1b54a32d192ed03ULL);
  const double scale = 1.0 / static_cast<double>(out.size());
  for (auto& v : out) {
    const double u = static_cast<double>(detail::splitmix64(state) >> 11) * 0x1.0p-53;
    v = (u - 0.5) * scale;
  }
}

// Writes the vector for `word` into `out` (length = store dimension) and
// returns true when the word was out of vocabulary.
inline bool lookup_into(const EmbeddingStore& store, const std::string& word,
                        const OovPolicy& policy, std::span<double> out) {
  if (out.size() != store.dimension) throw InvalidInput("lookup: output span has wrong length");
  auto it = store.vocab.find(word);
  if (it == store.vocab.end() && policy.case_fold_first) it = store.vocab.find(text::to_lower(word));
  if (it != store.vocab.end()) {
    std::copy(it->second.begin(), it->second.end(), out.begin());
    return false;
  }
  if (policy.mode == OovMode::HashedRandom && !out.empty()) {
    hashed_random_vector(word, policy.seed, out);
  } else {
    std::fill(out.begin(), out.end(), 0.0);
  }
  return true;
}

struct Lookup {
  Vector vector;
  bool oov = false;
};

inline Lookup lookup(const EmbeddingStore& store, const std::string& word, const OovPolicy& policy) {
  Lookup r{Vector(store.dimension), false};
  r.oov = lookup_into(store, word, policy, r.vector.span());
  return r;
}

// Reads the textual format: optional `count dim` header, then
// `word v1 ... vd` per line.
inline EmbeddingStore load_embeddings(const std::string& path, std::string name = {}) {
  const auto lines = text::read_lines(path);
  EmbeddingStore store;
  store.name = name.empty() ? std::filesystem::path(path).stem().string() : std::move(name);
  std::size_t first = 0;
  std::size_t declared_count = 0;
  bool have_header = false;
  bool have_dim = false;

  while (first < lines.size() && text::trim(lines[first]).empty()) ++first;
  if (first < lines.size()) {
    const auto fields = text::split_ws(lines[first]);
    std::size_t count = 0;
    std::size_t dim = 0;
    if (fields.size() == 2 && detail::parse_size(fields[0], count) &&
        detail::parse_size(fields[1], dim)) {
      if (dim == 0) throw FormatError(path, first + 1, "header declares zero dimension");
      have_header = true;
      have_dim = true;
      declared_count = count;
      store.dimension = dim;
      ++first;
    }
  }

  std::size_t rows = 0;
  for (std::size_t n = first; n < lines.size(); ++n) {
    if (text::trim(lines[n]).empty()) continue;
    auto fields = text::split_ws(lines[n]);
    if (fields.size() < 2) throw FormatError(path, n + 1, "row has no vector components");
    const std::size_t dim = fields.size() - 1;
    if (!have_dim) {
      store.dimension = dim;
      have_dim = true;
    } else if (dim != store.dimension) {
      throw FormatError(path, n + 1,
                        "expected " + std::to_string(store.dimension) + " components, found " +
                            std::to_string(dim));
    }
    Vector v(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      if (!detail::parse_double(fields[k + 1], v[k])) {
        throw FormatError(path, n + 1, "bad component '" + fields[k + 1] + "'");
      }
    }
    auto [it, fresh] = store.vocab.insert_or_assign(std::move(fields[0]), std::move(v));
    if (!fresh) ++store.duplicates;
    ++rows;
  }
  store.header_count_mismatch = have_header && declared_count != rows;
  return store;
}

struct OovReport {
  std::size_t types = 0;
  std::size_t oov_types = 0;
  std::size_t tokens = 0;
  std::size_t oov_tokens = 0;

  double type_pct() const { return types ? 100.0 * double(oov_types) / double(types) : 0.0; }
  double token_pct() const { return tokens ? 100.0 * double(oov_tokens) / double(tokens) : 0.0; }
};

inline OovReport oov_report(const EmbeddingStore& store, const std::vector<Document>& docs,
                            const OovPolicy& policy) {
  auto known = [&](const std::string& w) {
    if (store.vocab.count(w)) return true;
    return policy.case_fold_first && store.vocab.count(text::to_lower(w)) != 0;
  };
  OovReport r;
  std::set<std::string> types;
  std::set<std::string> oov_types;
  for (const auto& d : docs) {
    for (const auto& t : d.tokens) {
      ++r.tokens;
      const bool oov = !known(t.surface);
      if (oov) ++r.oov_tokens;
      if (types.insert(t.surface).second && oov) oov_types.insert(t.surface);
    }
  }
  r.types = types.size();
  r.oov_types = oov_types.size();
  return r;
}

// Percentage of distinct token types that are out of vocabulary.
inline double oov_rate(const EmbeddingStore& store, const std::vector<Document>& docs,
                       const OovPolicy& policy) {
  return oov_report(store, docs, policy).type_pct();
}

// Union vocabulary; every word maps to lookup(a) ++ lookup(b) with each side
// applying its own policy.
inline EmbeddingStore concat_stores(const EmbeddingStore& a, const OovPolicy& pa,
                                    const EmbeddingStore& b, const OovPolicy& pb) {
  EmbeddingStore out;
  out.name = a.name.empty() ? b.name : (b.name.empty() ? a.name : a.name + "+" + b.name);
  out.dimension = a.dimension + b.dimension;
  auto add = [&](const std::string& w) {
    if (out.vocab.count(w)) return;
    Vector v(out.dimension);
    lookup_into(a, w, pa, v.span().first(a.dimension));
    lookup_into(b, w, pb, v.span().subspan(a.dimension));
    out.vocab.emplace(w, std::move(v));
  };
  for (const auto& [w, _] : a.vocab) add(w);
  for (const auto& [w, _] : b.vocab) add(w);
  return out;
}

}  // namespace toponym
